#pragma once

#include "steamnet/interval.hpp"

#include <optional>
#include <string>
#include <vector>

namespace steamnet {

/// Static map q_g = g q_s + gamma of one generator.
struct BoilerStatic {
    double g = 0.0;
    double gamma = 0.0;
};

struct HLConfig {
    std::vector<double> lambda;  ///< per-generator cost weights
    double lambda_bar = 0.0;     ///< demand-deviation weight; <= 0 selects 1e3 * max(lambda)
    Interval U_bar{0.089, 6.0};  ///< ensemble steam flow
    Interval Y_bar{0.1227, 4.220}; ///< ensemble gas flow
    std::vector<Interval> U;     ///< per-generator steam flow
    std::vector<Interval> Y;     ///< per-generator gas flow
    double delta_u = 0.5;
    double trigger_threshold = 0.03;
    double T = 30.0;             ///< medium-level period [s]
    double T_HL = 150.0;         ///< cyclic re-solve period [s]
    /// Ensemble input applied when the new shares take over; when positive, every active
    /// generator must also respect its bounds at alpha_i * handoff_u, so the running
    /// operating point stays admissible under the new shares.
    double handoff_u = 0.0;

    double effective_lambda_bar() const;
    /// Throws ContractError for empty intervals, mismatched sizes or a non-positive weight.
    void validate() const;
};

struct ShareSolution {
    std::vector<double> alpha;
    std::vector<int> delta;
    double u_ss = 0.0;
    double cost = 0.0;
    bool degenerate = false; ///< u_ss = 0, shares set uniform over the active set

    int active_count() const;
};

/**
 * Global optimum of the share/activation problem for the given demand.
 *
 * Every activation pattern is solved as a convex QP in (v, u_ss) with v_i = alpha_i u_ss.
 * Without @p old the rate coupling is omitted (first solve). A generator that was idle
 * in @p old (alpha_old = 0) may start with a flow in [0, delta_u].
 * Throws InfeasibleError listing, for every pattern, the first constraint violated by
 * the least-infeasible point.
 */
ShareSolution solve_shares(double demand, const std::vector<BoilerStatic>& models, const HLConfig& cfg,
                           const std::optional<ShareSolution>& old = std::nullopt);

/// Re-evaluates every constraint on the bilinear (alpha, delta, u_ss) form and returns a
/// description of each violation larger than @p tol (empty when feasible).
std::vector<std::string> check_share_solution(const ShareSolution& s, const std::vector<BoilerStatic>& models,
                                              const HLConfig& cfg, const std::optional<ShareSolution>& old,
                                              double tol = 1e-8);

/// Objective value of (alpha, delta, u_ss) for @p demand.
double share_cost(const ShareSolution& s, double demand, const std::vector<BoilerStatic>& models,
                  const HLConfig& cfg);

/// Event or cycle trigger: |demand - last| >= threshold, or (k - last_k) T >= T_HL.
bool should_trigger(double demand, double last_solved_demand, long k, long last_k, const HLConfig& cfg);

} // namespace steamnet
