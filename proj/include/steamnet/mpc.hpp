#pragma once

#include "steamnet/ensemble.hpp"
#include "steamnet/hl_optimizer.hpp"
#include "steamnet/interval.hpp"

#include <Eigen/Dense>
#include <vector>

namespace steamnet {

struct MpcConfig {
    int N = 10;          ///< prediction horizon [slow steps]
    double Q_y = 1.0;    ///< output-error weight (stage cost and LQR)
    double R = 0.1;      ///< input-increment weight (stage cost and LQR)
    double rho = 1e4;    ///< offset weight on (r_hat - r)^2
    double lqr_state_weight = 1e-6; ///< small identity added to the LQR state weight
    double tube_eps = 0.01;

    void validate() const;
};

/**
 * Velocity form of the slow ensemble model, xi = [x(k) - x(k-1); y(k)]:
 *
 *   xi(k+1) = [A_T 0; C A_T 1] xi(k) + [B_T; C B_T] du(k),   y = [0 ... 0 1] xi.
 *
 * g and gamma describe the steady map y = g u + gamma of the underlying model.
 */
struct VelocityModel {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double g = 0.0;
    double gamma = 0.0;
    int order() const { return static_cast<int>(A.rows()); }
};

VelocityModel build_velocity_form(const EnsembleModel& slow);

/// Velocity state from the ensemble state at two consecutive slow instants.
Eigen::VectorXd velocity_state(const EnsembleModel& ens, const Eigen::VectorXd& x_now,
                               const Eigen::VectorXd& x_prev);

/// Infinite-horizon LQR gain (u = K x) for x+ = A x + B u with state weight
/// Q_y C'C + lqr_state_weight I. Throws GainDesignError if the Riccati iteration does not
/// converge or A + B K is not Schur.
Eigen::RowVectorXd lqr_gain(const Eigen::MatrixXd& A, const Eigen::VectorXd& B, const Eigen::RowVectorXd& C,
                            const MpcConfig& cfg);

inline Eigen::RowVectorXd lqr_gain(const VelocityModel& vm, const MpcConfig& cfg)
{
    return lqr_gain(vm.A, vm.B, vm.C, cfg);
}

/**
 * Outer approximation of the minimal robust invariant set of e+ = A_cl e + w, w in the
 * box W: F = (1 - eps)^-1 (W + A_cl W + ... + A_cl^(s-1) W), with s the first power for
 * which A_cl^s W lies inside eps W. F is robustly invariant and is kept as a Minkowski
 * sum, so its support function is exact.
 */
struct Tube {
    Eigen::VectorXd z; ///< half-widths of the bounding box of F
    int terms = 0;     ///< s
    double eps = 0.0;
    std::vector<Eigen::MatrixXd> powers; ///< A_cl^0 .. A_cl^(s-1)
    Eigen::VectorXd w;

    /// max over e in F of c e.
    double support(const Eigen::RowVectorXd& c) const;
};

/// Throws GainDesignError for a non-Schur A_cl or if the powers do not contract W.
Tube compute_tube(const Eigen::MatrixXd& A_cl, const Eigen::VectorXd& w_box, double eps = 0.01);

/// Untightened constraint data of the medium level.
struct MpcConstraints {
    Interval U_bar;
    Interval Y_bar;
    double delta_u = 0.5;
    std::vector<Interval> U; ///< per-generator steam flow
    std::vector<Interval> Y; ///< per-generator gas flow
    std::vector<double> bias_bound; ///< per-generator static-map error allowance on Y
};

struct TightenedSets {
    Interval U;              ///< ensemble input
    Interval Y;              ///< ensemble output
    Interval dU;             ///< input increment
    std::vector<Interval> U_i; ///< per-generator steam flow, after tightening
    std::vector<Interval> P_i; ///< per-generator quasi-steady gas flow, after tightening
    Interval u_total;        ///< all input constraints combined for the current shares
    Interval y_ss;           ///< steady outputs of the nominal affine map over u_total
    Eigen::RowVectorXd K;    ///< ancillary gain on the ensemble state error
    Tube tube;               ///< error tube of A_T + B_T K under the disturbance box
    double margin_u = 0.0;   ///< support of F in direction K
    double margin_y = 0.0;   ///< support of F in the output direction
};

/// Tightens every set by the tube cross-sections for the current shares. The tube is that
/// of the slow ensemble error e+ = (A_T + B_T K) e + w with |w_j| <= w_box(j). Throws
/// ContractError when a tightened set is empty or a margin reaches half its interval.
TightenedSets tighten(const VelocityModel& vm, const EnsembleModel& slow, const Eigen::VectorXd& w_box,
                      const MpcConstraints& cons, const ShareSolution& shares,
                      const std::vector<BoilerStatic>& models, const MpcConfig& cfg);

struct MpcSolution {
    std::vector<double> du; ///< nominal increments over the horizon
    std::vector<double> u;  ///< nominal inputs over the horizon
    std::vector<double> y;  ///< predicted outputs y(1..N)
    double r_hat = 0.0;
    double u_applied = 0.0;
    double cost = 0.0;
};

/**
 * One receding-horizon step from the measured velocity state @p xi with last applied
 * input @p u_prev towards gas target @p r. @p rate_scale multiplies the increment bound
 * of the first stage (used right after a share change). Throws InfeasibleError naming
 * the violated constraints of the least-infeasible point.
 */
MpcSolution solve_mpc(const VelocityModel& vm, const Eigen::VectorXd& xi, double u_prev, double r,
                      const TightenedSets& sets, const MpcConfig& cfg, double rate_scale = 1.0);

/// First-stage increment scale after a share change: min(1, alpha_old / alpha_new) over
/// generators that were already running and are still active.
double reconfiguration_rate_scale(const ShareSolution& old_shares, const ShareSolution& new_shares);

struct Reconfigured {
    Eigen::VectorXd xi;
    double u_prev = 0.0;
};

/// Re-expresses the medium-level memory for new shares: the ensemble state is rebuilt as
/// sum_i delta_i^new x_hat_i from the per-generator reference states at the current and
/// previous slow instants; the last applied total input is kept.
Reconfigured reconfigure(const Eigen::VectorXd& xi_prev, double u_prev, const ShareSolution& old_shares,
                         const ShareSolution& new_shares, const std::vector<ReferenceModel>& refs,
                         const std::vector<Eigen::VectorXd>& x_hat_now,
                         const std::vector<Eigen::VectorXd>& x_hat_prev);

} // namespace steamnet
