#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace steamnet {

/// min 1/2 x'Hx + f'x  s.t.  G x <= h,  E x = e.  H must be symmetric positive semidefinite.
struct QpProblem {
    Eigen::MatrixXd H;
    Eigen::VectorXd f;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;
    Eigen::MatrixXd E;
    Eigen::VectorXd e;

    int num_vars() const { return static_cast<int>(f.size()); }
};

enum class QpStatus { optimal, infeasible, unbounded };

std::string to_string(QpStatus s);

struct QpResult {
    Eigen::VectorXd x_star;    ///< optimizer; for infeasible problems the least-violating point found
    QpStatus status = QpStatus::optimal;
    double kkt_residual = 0.0; ///< max of stationarity, feasibility, sign and complementarity errors
    std::vector<int> active_set;
    Eigen::VectorXd mu;        ///< inequality multipliers (>= 0)
    Eigen::VectorXd nu;        ///< equality multipliers
    double objective = 0.0;
    double infeasibility = 0.0; ///< max constraint violation of x_star
    int iterations = 0;
};

struct QpOptions {
    int max_iterations = 0;    ///< 0 selects 50 (n + m) + 100
    double feasibility_tol = 1e-9;
};

/// Primal active-set method. Infeasible and unbounded problems are reported
/// through the status; exhausting the iteration budget throws NumericalError.
QpResult solve_qp(const QpProblem& p, const QpOptions& opt = {});

/// Max KKT violation of (x, mu, nu) for @p p.
double kkt_residual(const QpProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                    const Eigen::VectorXd& nu);

} // namespace steamnet
