#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace steamnet {

/**
 * Discrete transfer function plus constant,
 *
 *   y(k) = (b_1 z^-n_k + ... + b_nb z^-(n_k+nb-1)) / (1 + f_1 z^-1 + ... + f_nf z^-nf) u(k) + gamma,
 *
 * where gamma is the output at steady state with u = 0.
 */
struct ArxModel {
    std::vector<double> f;
    std::vector<double> b;
    double gamma = 0.0;
    int n_k = 1;
    double tau = 10.0;

    int n_f() const { return static_cast<int>(f.size()); }
    int n_b() const { return static_cast<int>(b.size()); }
    double dc_gain() const;
};

/**
 * Canonical realization
 *
 *   x(k+1) = A x(k) + B u(k),  y(k) = C x(k) + gamma,
 *   x(k)   = [y~(k) ... y~(k-n_f+1), u(k-1) ... u(k-n_b+1)],  y~ = y - gamma.
 *
 * n_f and n_b describe the block layout (n_b already includes any input delay padding).
 */
struct StateSpaceModel {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double gamma = 0.0;
    int n_f = 1;
    int n_b = 1;

    int order() const { return static_cast<int>(A.rows()); }
};

/// Least-squares equation-error fit with a constant regressor.
/// Throws IdentifiabilityError for short/unexciting data and StabilityError for an
/// unstable denominator.
ArxModel fit(std::span<const double> u, std::span<const double> y, int n_f, int n_b, int n_k,
             double tau = 10.0);

StateSpaceModel realize(const ArxModel& m);

/// C (I - A)^-1 B. Throws AssumptionError when I - A is singular.
double static_gain(const StateSpaceModel& m);

/// Largest eigenvalue modulus.
double spectral_radius(const Eigen::MatrixXd& A);

/// Schur stability, square single-input single-output structure and a nonzero
/// static gain; violations throw (StabilityError / AssumptionError).
void check_model_assumptions(const StateSpaceModel& m);

/// Free-run simulation of the difference equation. Outputs before the first
/// computable sample are taken from @p y_init (which may be shorter than u).
std::vector<double> simulate(const ArxModel& m, std::span<const double> u,
                             std::span<const double> y_init);

/// Simulates the realization from state x0.
std::vector<double> simulate(const StateSpaceModel& m, std::span<const double> u,
                             const Eigen::VectorXd& x0);

/// Steady state of the realization for a constant input.
Eigen::VectorXd steady_state(const StateSpaceModel& m, double u);

/// Normalized fit 100 (1 - |y - yhat| / |y - mean(y)|) in percent.
double fit_percent(std::span<const double> y, std::span<const double> yhat);

/// Canonical state built from measured histories; @p y_hist and @p u_hist hold
/// the most recent samples last, y_hist ending at y(k), u_hist ending at u(k-1).
Eigen::VectorXd state_from_history(const StateSpaceModel& m, std::span<const double> y_hist,
                                   std::span<const double> u_hist);

} // namespace steamnet
