#include "steamnet/qp.hpp"

#include "steamnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace steamnet {

std::string to_string(QpStatus s)
{
    switch (s) {
    case QpStatus::optimal:
        return "optimal";
    case QpStatus::infeasible:
        return "infeasible";
    case QpStatus::unbounded:
        return "unbounded";
    }
    return "unknown";
}

double kkt_residual(const QpProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                    const Eigen::VectorXd& nu)
{
    Eigen::VectorXd grad = p.H * x + p.f;
    if (p.G.rows() > 0)
        grad += p.G.transpose() * mu;
    if (p.E.rows() > 0)
        grad += p.E.transpose() * nu;
    double r = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
    for (int i = 0; i < p.G.rows(); ++i) {
        const double slack = p.h(i) - p.G.row(i).dot(x);
        r = std::max(r, std::max(0.0, -slack));
        r = std::max(r, std::max(0.0, -mu(i)));
        r = std::max(r, std::abs(mu(i) * slack));
    }
    for (int i = 0; i < p.E.rows(); ++i)
        r = std::max(r, std::abs(p.E.row(i).dot(x) - p.e(i)));
    return r;
}

namespace {

struct Core {
    // Problem data (equalities already reduced to independent rows).
    const Eigen::MatrixXd& H;
    const Eigen::VectorXd& f;
    const Eigen::MatrixXd& G;
    const Eigen::VectorXd& h;
    const Eigen::MatrixXd& E;
    int max_iter;
};

struct CoreResult {
    Eigen::VectorXd x;
    std::vector<int> working; // inequality indices
    Eigen::VectorXd lambda_eq;
    Eigen::VectorXd lambda_in; // aligned with working
    bool unbounded = false;
    int iterations = 0;
};

Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& E, const Eigen::MatrixXd& G,
                           const std::vector<int>& working, int n)
{
    Eigen::MatrixXd A(E.rows() + static_cast<Eigen::Index>(working.size()), n);
    if (E.rows() > 0)
        A.topRows(E.rows()) = E;
    for (std::size_t k = 0; k < working.size(); ++k)
        A.row(E.rows() + static_cast<Eigen::Index>(k)) = G.row(working[k]);
    return A;
}

// Orthonormal basis of {p : A p = 0}. Rank-revealing, so a working set that has become
// numerically dependent still yields the true null space.
Eigen::MatrixXd null_space(const Eigen::MatrixXd& A, int n)
{
    if (A.rows() == 0)
        return Eigen::MatrixXd::Identity(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cut = 1e-10 * std::max(1.0, sv.size() ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > cut)
        ++rank;
    return svd.matrixV().rightCols(n - rank);
}

// Primal active-set iterations from a feasible x. Handles singular reduced Hessians by
// following zero-curvature descent rays until a constraint blocks them.
CoreResult run_active_set(const Core& c, Eigen::VectorXd x, std::vector<int> working)
{
    const int n = static_cast<int>(x.size());
    const int m_in = static_cast<int>(c.G.rows());
    const double h_scale = std::max(1.0, c.H.size() ? c.H.cwiseAbs().maxCoeff() : 0.0);
    CoreResult out;
    std::vector<char> in_w(static_cast<std::size_t>(m_in), 0);
    for (int i : working)
        in_w[static_cast<std::size_t>(i)] = 1;

    for (int it = 0; it < c.max_iter; ++it) {
        out.iterations = it + 1;
        const Eigen::VectorXd g = c.H * x + c.f;
        const Eigen::MatrixXd A = stack_rows(c.E, c.G, working, n);
        const Eigen::MatrixXd Z = null_space(A, n);

        Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
        bool ray = false;
        if (Z.cols() > 0) {
            const Eigen::VectorXd gz = Z.transpose() * g;
            const Eigen::MatrixXd Hz = Z.transpose() * c.H * Z;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hz);
            const Eigen::VectorXd& ev = es.eigenvalues();
            const Eigen::MatrixXd& V = es.eigenvectors();
            const double ev_tol = 1e-11 * h_scale;
            Eigen::VectorXd flat = Eigen::VectorXd::Zero(Z.cols());
            Eigen::VectorXd newton = Eigen::VectorXd::Zero(Z.cols());
            for (int j = 0; j < ev.size(); ++j) {
                const double comp = V.col(j).dot(gz);
                if (ev(j) > ev_tol)
                    newton -= V.col(j) * (comp / ev(j));
                else
                    flat -= V.col(j) * comp;
            }
            const double g_scale = 1.0 + g.cwiseAbs().maxCoeff();
            if (flat.norm() > 1e-12 * g_scale) {
                p = Z * flat;
                ray = true;
            } else {
                p = Z * newton;
            }
        }

        const double x_scale = 1.0 + x.cwiseAbs().maxCoeff();
        if (!ray && p.cwiseAbs().maxCoeff() <= 1e-13 * x_scale) {
            // Stationary on the working set: check multiplier signs.
            Eigen::VectorXd lambda = Eigen::VectorXd::Zero(A.rows());
            if (A.rows() > 0)
                lambda = A.transpose().colPivHouseholderQr().solve(-g);
            const Eigen::Index n_eq = c.E.rows();
            const double lam_tol = 1e-12 * (1.0 + (lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0));
            int drop = -1;
            double most_negative = -lam_tol;
            for (std::size_t k = 0; k < working.size(); ++k) {
                const double l = lambda(n_eq + static_cast<Eigen::Index>(k));
                if (l < most_negative ||
                    (drop >= 0 && l == most_negative && working[k] < working[static_cast<std::size_t>(drop)])) {
                    most_negative = l;
                    drop = static_cast<int>(k);
                }
            }
            if (drop < 0) {
                out.x = x;
                out.working = working;
                out.lambda_eq = lambda.head(n_eq);
                out.lambda_in = lambda.tail(static_cast<Eigen::Index>(working.size()));
                return out;
            }
            in_w[static_cast<std::size_t>(working[static_cast<std::size_t>(drop)])] = 0;
            working.erase(working.begin() + drop);
            continue;
        }

        double alpha = ray ? std::numeric_limits<double>::infinity() : 1.0;
        int blocking = -1;
        for (int i = 0; i < m_in; ++i) {
            if (in_w[static_cast<std::size_t>(i)])
                continue;
            const double gp = c.G.row(i).dot(p);
            if (gp <= 1e-14 * (1.0 + c.G.row(i).cwiseAbs().maxCoeff()) * p.cwiseAbs().maxCoeff())
                continue;
            // A row in the span of the working set cannot block a step inside its null
            // space; a positive gp is rounding and adding it would make the set dependent.
            if ((c.G.row(i) * Z).norm() <= 1e-9 * c.G.row(i).norm())
                continue;
            const double ai = std::max(0.0, (c.h(i) - c.G.row(i).dot(x)) / gp);
            if (ai < alpha) {
                alpha = ai;
                blocking = i;
            }
        }
        if (!std::isfinite(alpha)) {
            out.x = x;
            out.working = working;
            out.unbounded = true;
            return out;
        }
        x += alpha * p;
        if (blocking >= 0) {
            working.push_back(blocking);
            in_w[static_cast<std::size_t>(blocking)] = 1;
        }
    }
    std::ostringstream msg;
    msg << "solve_qp: no convergence after " << c.max_iter << " iterations (n=" << n
        << ", inequalities=" << m_in << ", equalities=" << c.E.rows()
        << ", working set size=" << working.size() << ")";
    throw NumericalError(msg.str());
}

double max_violation(const Eigen::MatrixXd& G, const Eigen::VectorXd& h, const Eigen::MatrixXd& E,
                     const Eigen::VectorXd& e, const Eigen::VectorXd& x)
{
    double v = 0.0;
    if (G.rows() > 0)
        v = std::max(v, (G * x - h).maxCoeff());
    if (E.rows() > 0)
        v = std::max(v, (E * x - e).cwiseAbs().maxCoeff());
    return v;
}

void validate(const QpProblem& p)
{
    const auto n = p.f.size();
    std::ostringstream msg;
    if (p.H.rows() != n || p.H.cols() != n)
        msg << "H must be " << n << "x" << n << "; ";
    if (p.G.rows() != p.h.size() || (p.G.rows() > 0 && p.G.cols() != n))
        msg << "inequality system has inconsistent dimensions; ";
    if (p.E.rows() != p.e.size() || (p.E.rows() > 0 && p.E.cols() != n))
        msg << "equality system has inconsistent dimensions; ";
    if (!msg.str().empty())
        throw ContractError("solve_qp: " + problem_list(msg.str()));
    if (n == 0)
        return;
    const double scale = std::max(1.0, p.H.cwiseAbs().maxCoeff());
    if ((p.H - p.H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw ContractError("solve_qp: H is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.H, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
        throw ContractError("solve_qp: H is not positive semidefinite");
}

} // namespace

QpResult solve_qp(const QpProblem& p, const QpOptions& opt)
{
    validate(p);
    const int n = p.num_vars();
    const int m_in = static_cast<int>(p.G.rows());
    const int max_iter = opt.max_iterations > 0 ? opt.max_iterations : 50 * (n + m_in + static_cast<int>(p.E.rows())) + 100;

    QpResult res;
    res.mu = Eigen::VectorXd::Zero(m_in);
    res.nu = Eigen::VectorXd::Zero(p.E.rows());

    // Independent subset of the equalities.
    Eigen::MatrixXd E(0, n);
    Eigen::VectorXd e(0);
    std::vector<Eigen::Index> eq_rows;
    if (p.E.rows() > 0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(p.E.transpose());
        qr.setThreshold(1e-12);
        const auto r = qr.rank();
        const auto perm = qr.colsPermutation().indices();
        for (Eigen::Index k = 0; k < r; ++k)
            eq_rows.push_back(perm(k));
        std::sort(eq_rows.begin(), eq_rows.end());
        E.resize(static_cast<Eigen::Index>(eq_rows.size()), n);
        e.resize(static_cast<Eigen::Index>(eq_rows.size()));
        for (std::size_t k = 0; k < eq_rows.size(); ++k) {
            E.row(static_cast<Eigen::Index>(k)) = p.E.row(eq_rows[k]);
            e(static_cast<Eigen::Index>(k)) = p.e(eq_rows[k]);
        }
    }

    // Start from the least-norm point of the equalities.
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    if (E.rows() > 0)
        x0 = E.completeOrthogonalDecomposition().solve(e);
    const double tol = opt.feasibility_tol;

    if (E.rows() > 0 && p.E.rows() > 0 && (p.E * x0 - p.e).cwiseAbs().maxCoeff() > tol) {
        res.x_star = x0;
        res.status = QpStatus::infeasible;
        res.infeasibility = max_violation(p.G, p.h, p.E, p.e, x0);
        return res;
    }

    int iterations = 0;
    if (m_in > 0 && (p.G * x0 - p.h).maxCoeff() > tol) {
        // Phase 1: minimize the largest violation t over (x, t).
        Eigen::MatrixXd H1 = Eigen::MatrixXd::Zero(n + 1, n + 1);
        Eigen::VectorXd f1 = Eigen::VectorXd::Zero(n + 1);
        f1(n) = 1.0;
        Eigen::MatrixXd G1(m_in + 1, n + 1);
        G1.topLeftCorner(m_in, n) = p.G;
        G1.topRightCorner(m_in, 1).setConstant(-1.0);
        G1.row(m_in).setZero();
        G1(m_in, n) = -1.0;
        Eigen::VectorXd h1(m_in + 1);
        h1.head(m_in) = p.h;
        h1(m_in) = 0.0;
        Eigen::MatrixXd E1 = Eigen::MatrixXd::Zero(E.rows(), n + 1);
        if (E.rows() > 0)
            E1.leftCols(n) = E;
        Eigen::VectorXd z0(n + 1);
        z0.head(n) = x0;
        z0(n) = std::max(0.0, (p.G * x0 - p.h).maxCoeff());
        const Core core1{H1, f1, G1, h1, E1, max_iter};
        const CoreResult r1 = run_active_set(core1, z0, {});
        iterations += r1.iterations;
        x0 = r1.x.head(n);
        if (r1.x(n) > tol) {
            res.x_star = x0;
            res.status = QpStatus::infeasible;
            res.infeasibility = max_violation(p.G, p.h, p.E, p.e, x0);
            res.iterations = iterations;
            return res;
        }
    }

    const Core core{p.H, p.f, p.G, p.h, E, max_iter};
    const CoreResult r = run_active_set(core, x0, {});
    iterations += r.iterations;
    res.iterations = iterations;
    res.x_star = r.x;
    if (r.unbounded) {
        res.status = QpStatus::unbounded;
        res.infeasibility = max_violation(p.G, p.h, p.E, p.e, r.x);
        return res;
    }
    for (std::size_t k = 0; k < r.working.size(); ++k)
        res.mu(r.working[k]) = std::max(0.0, r.lambda_in(static_cast<Eigen::Index>(k)));
    for (std::size_t k = 0; k < eq_rows.size(); ++k)
        res.nu(eq_rows[k]) = r.lambda_eq(static_cast<Eigen::Index>(k));
    res.active_set = r.working;
    std::sort(res.active_set.begin(), res.active_set.end());
    res.status = QpStatus::optimal;
    res.objective = 0.5 * r.x.dot(p.H * r.x) + p.f.dot(r.x);
    res.infeasibility = max_violation(p.G, p.h, p.E, p.e, r.x);
    res.kkt_residual = kkt_residual(p, r.x, res.mu, res.nu);
    return res;
}

} // namespace steamnet
