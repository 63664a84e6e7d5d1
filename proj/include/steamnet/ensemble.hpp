#pragma once

#include "steamnet/sysid.hpp"

#include <Eigen/Dense>
#include <vector>

namespace steamnet {

/// Per-generator surrogate on the shared template dynamics: (A_hat, B_hat, C_hat) with
/// the input vector adjusted so the static gain equals the identified one.
struct ReferenceModel {
    Eigen::MatrixXd A_hat;
    Eigen::VectorXd B_hat;
    Eigen::RowVectorXd C_hat;
    double gamma_hat = 0.0;
    /// Selects the template-sized state out of the generator's own canonical state.
    Eigen::MatrixXd beta;
    double g = 0.0; ///< static gain of the identified model
    int order() const { return static_cast<int>(A_hat.rows()); }
};

/// Aggregate of the active references. A/B/C are the fast (tau) model; A_T/B_T the
/// model resampled with nu fast steps per slow step.
struct EnsembleModel {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double gamma = 0.0; ///< sum of the active biases
    double g = 0.0;     ///< sum g_i alpha_i
    int nu = 1;
    Eigen::MatrixXd A_T;
    Eigen::VectorXd B_T;
    int order() const { return static_cast<int>(A.rows()); }
};

/// Builds the reference of @p model_i on the template. Throws DegenerateTemplateError
/// when 1 + sum f_hat vanishes and AssumptionError if gain consistency cannot be met
/// to 1e-9.
ReferenceModel make_reference(const StateSpaceModel& model_i, const ArxModel& template_model);

/// Throws ContractError unless alpha sums to one over the active set, inactive
/// generators carry zero share and at least one generator is active.
EnsembleModel aggregate(const std::vector<ReferenceModel>& refs, const std::vector<double>& alpha,
                        const std::vector<int>& delta);

/// A_T = A^nu, B_T = sum_{j<nu} A^j B. Throws ContractError for nu < 1 and
/// AssumptionError if the static gain is not preserved.
EnsembleModel resample(const EnsembleModel& ens, int nu);

/// sum_i delta_i beta_i x_i
Eigen::VectorXd ensemble_state(const std::vector<ReferenceModel>& refs, const std::vector<int>& delta,
                               const std::vector<Eigen::VectorXd>& x);

/// Static gain C (I - A)^-1 B of an arbitrary triple.
double dc_gain(const Eigen::MatrixXd& A, const Eigen::VectorXd& B, const Eigen::RowVectorXd& C);

struct DisturbanceBound {
    double w_inf = 0.0;   ///< bound on the slow-timescale ensemble disturbance (inf-norm)
    Eigen::VectorXd w_box; ///< componentwise slow-timescale half-widths
    double w_fast = 0.0;  ///< bound on the fast-timescale ensemble disturbance
    double delta_u = 0.0;
    std::vector<double> per_boiler; ///< slow-timescale bound of each generator
};

struct DisturbanceOptions {
    int nu = 3;            ///< fast steps per slow step (input held over each slow step)
    int horizon = 200;     ///< fast-timescale samples in the worst-case search
    double safety = 1.25;  ///< inflation applied on top of the worst case found
    double tail_tol = 1e-6; ///< mismatch step response must decay below this share of its peak
};

/**
 * Worst-case one-step mismatch w_i(k) = beta_i x_i(k+1) - A_hat beta_i x_i(k) - B_hat_i u_i(k)
 * when x_i follows @p actual[i] and u_i is piecewise constant over nu samples with
 * increments in [-alpha_max delta_u, alpha_max delta_u].
 *
 * The mismatch is linear in the increments, so the worst case is an l1 norm of its step
 * response (sampled every nu steps on the fast grid, every step on the slow grid).
 * Because shares sum to one, generators are combined by their componentwise maximum.
 * Throws ModelQualityError if a step response has not decayed within the horizon.
 */
DisturbanceBound estimate_disturbance_bound(const std::vector<ReferenceModel>& refs,
                                            const std::vector<StateSpaceModel>& actual,
                                            double delta_u, double alpha_max,
                                            const DisturbanceOptions& opt = {});

/// One-step ensemble mismatch x_next - A x - B u of a measured transition.
Eigen::VectorXd one_step_mismatch(const Eigen::MatrixXd& A, const Eigen::VectorXd& B,
                                  const Eigen::VectorXd& x, double u, const Eigen::VectorXd& x_next);

} // namespace steamnet
