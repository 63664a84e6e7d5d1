#include "steamnet/sysid.hpp"

#include "steamnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace steamnet {

double ArxModel::dc_gain() const
{
    const double den = 1.0 + std::accumulate(f.begin(), f.end(), 0.0);
    return std::accumulate(b.begin(), b.end(), 0.0) / den;
}

double spectral_radius(const Eigen::MatrixXd& A)
{
    if (A.size() == 0)
        return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

double denominator_radius(const std::vector<double>& f)
{
    const int n = static_cast<int>(f.size());
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j)
        comp(0, j) = -f[j];
    for (int i = 1; i < n; ++i)
        comp(i, i - 1) = 1.0;
    return spectral_radius(comp);
}

std::size_t distinct_levels(std::span<const double> u)
{
    std::vector<double> v(u.begin(), u.end());
    std::sort(v.begin(), v.end());
    std::size_t count = v.empty() ? 0 : 1;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] - v[i - 1] > 1e-12 * std::max(1.0, std::abs(v[i])))
            ++count;
    return count;
}

} // namespace

ArxModel fit(std::span<const double> u, std::span<const double> y, int n_f, int n_b, int n_k,
             double tau)
{
    if (n_f < 1 || n_b < 1 || n_k < 0)
        throw ContractError("fit: need n_f >= 1, n_b >= 1, n_k >= 0");
    if (u.size() != y.size())
        throw ContractError("fit: input and output lengths differ");
    const std::size_t min_len = 10 * static_cast<std::size_t>(n_f + n_b);
    if (u.size() < min_len) {
        std::ostringstream msg;
        msg << "fit: " << u.size() << " samples, need at least " << min_len;
        throw IdentifiabilityError(msg.str());
    }
    const std::size_t levels = distinct_levels(u);
    if (levels < static_cast<std::size_t>(n_f + n_b + 1)) {
        std::ostringstream msg;
        msg << "fit: input has " << levels << " distinct levels, need at least " << n_f + n_b + 1;
        throw IdentifiabilityError(msg.str());
    }

    const int lag = std::max(n_f, n_k + n_b - 1);
    const int rows = static_cast<int>(y.size()) - lag;
    const int cols = n_f + n_b + 1;
    Eigen::MatrixXd Phi(rows, cols);
    Eigen::VectorXd target(rows);
    for (int r = 0; r < rows; ++r) {
        const int k = r + lag;
        for (int j = 1; j <= n_f; ++j)
            Phi(r, j - 1) = -y[k - j];
        for (int j = 1; j <= n_b; ++j)
            Phi(r, n_f + j - 1) = u[k - n_k - j + 1];
        Phi(r, cols - 1) = 1.0;
        target(r) = y[k];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Phi);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols)
        throw IdentifiabilityError("fit: regressor matrix is rank deficient");
    const Eigen::VectorXd theta = qr.solve(target);

    ArxModel m;
    m.f.assign(theta.data(), theta.data() + n_f);
    m.b.assign(theta.data() + n_f, theta.data() + n_f + n_b);
    m.n_k = n_k;
    m.tau = tau;
    const double rho = denominator_radius(m.f);
    if (!(rho < 1.0)) {
        std::ostringstream msg;
        msg << "fit: identified denominator has spectral radius " << rho;
        throw StabilityError(msg.str());
    }
    m.gamma = theta(cols - 1) / (1.0 + std::accumulate(m.f.begin(), m.f.end(), 0.0));
    return m;
}

StateSpaceModel realize(const ArxModel& m)
{
    if (m.f.empty() || m.b.empty())
        throw ContractError("realize: empty polynomial");
    if (m.n_k < 1)
        throw ContractError("realize: the canonical form needs n_k >= 1");
    // Extra input delay becomes leading zero numerator coefficients.
    std::vector<double> b(static_cast<std::size_t>(m.n_k - 1), 0.0);
    b.insert(b.end(), m.b.begin(), m.b.end());
    const int n_f = m.n_f();
    const int n_b = static_cast<int>(b.size());
    const int n = n_f + n_b - 1;

    StateSpaceModel ss;
    ss.n_f = n_f;
    ss.n_b = n_b;
    ss.gamma = m.gamma;
    ss.A = Eigen::MatrixXd::Zero(n, n);
    ss.B = Eigen::VectorXd::Zero(n);
    ss.C = Eigen::RowVectorXd::Zero(n);
    for (int j = 0; j < n_f; ++j)
        ss.A(0, j) = -m.f[j];
    for (int j = 1; j < n_b; ++j)
        ss.A(0, n_f + j - 1) = b[j];
    for (int i = 1; i < n_f; ++i)
        ss.A(i, i - 1) = 1.0;
    for (int i = 1; i < n_b - 1; ++i)
        ss.A(n_f + i, n_f + i - 1) = 1.0;
    ss.B(0) = b[0];
    if (n_b >= 2)
        ss.B(n_f) = 1.0;
    ss.C(0) = 1.0;
    return ss;
}

double static_gain(const StateSpaceModel& m)
{
    const int n = m.order();
    const Eigen::MatrixXd IA = Eigen::MatrixXd::Identity(n, n) - m.A;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(IA);
    if (!lu.isInvertible())
        throw AssumptionError("static_gain: I - A is singular");
    return m.C * lu.solve(m.B);
}

void check_model_assumptions(const StateSpaceModel& m)
{
    const int n = m.order();
    if (n < 1 || m.A.cols() != n || m.B.size() != n || m.C.size() != n)
        throw AssumptionError("model is not a square single-input single-output realization");
    const double rho = spectral_radius(m.A);
    if (!(rho < 1.0)) {
        std::ostringstream msg;
        msg << "A is not Schur stable (spectral radius " << rho << ")";
        throw StabilityError(msg.str());
    }
    const double g = static_gain(m);
    if (!(std::abs(g) > 1e-12))
        throw AssumptionError("static gain is zero");
}

std::vector<double> simulate(const ArxModel& m, std::span<const double> u,
                             std::span<const double> y_init)
{
    const int n_f = m.n_f();
    const int n_b = m.n_b();
    const std::size_t N = u.size();
    std::vector<double> y(N, 0.0);
    const double dc = 1.0 + std::accumulate(m.f.begin(), m.f.end(), 0.0);
    const double offset = m.gamma * dc;
    const std::size_t lag = static_cast<std::size_t>(std::max(n_f, m.n_k + n_b - 1));
    for (std::size_t k = 0; k < N; ++k) {
        if (k < lag && k < y_init.size()) {
            y[k] = y_init[k];
            continue;
        }
        double acc = offset;
        for (int j = 1; j <= n_f; ++j) {
            const auto idx = static_cast<long>(k) - j;
            const double yj = idx >= 0 ? y[idx] : (y_init.empty() ? m.gamma : y_init.front());
            acc -= m.f[j - 1] * yj;
        }
        for (int j = 1; j <= n_b; ++j) {
            const auto idx = static_cast<long>(k) - m.n_k - j + 1;
            const double uj = idx >= 0 ? u[idx] : u.front();
            acc += m.b[j - 1] * uj;
        }
        y[k] = acc;
    }
    return y;
}

std::vector<double> simulate(const StateSpaceModel& m, std::span<const double> u,
                             const Eigen::VectorXd& x0)
{
    std::vector<double> y(u.size());
    Eigen::VectorXd x = x0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        y[k] = m.C.dot(x) + m.gamma;
        x = m.A * x + m.B * u[k];
    }
    return y;
}

Eigen::VectorXd steady_state(const StateSpaceModel& m, double u)
{
    const int n = m.order();
    return (Eigen::MatrixXd::Identity(n, n) - m.A).fullPivLu().solve(m.B * u);
}

double fit_percent(std::span<const double> y, std::span<const double> yhat)
{
    if (y.size() != yhat.size() || y.empty())
        throw ContractError("fit_percent: length mismatch");
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        num += (y[i] - yhat[i]) * (y[i] - yhat[i]);
        den += (y[i] - mean) * (y[i] - mean);
    }
    if (den == 0.0)
        return num == 0.0 ? 100.0 : -INFINITY;
    return 100.0 * (1.0 - std::sqrt(num / den));
}

Eigen::VectorXd state_from_history(const StateSpaceModel& m, std::span<const double> y_hist,
                                   std::span<const double> u_hist)
{
    if (y_hist.size() < static_cast<std::size_t>(m.n_f) ||
        u_hist.size() < static_cast<std::size_t>(m.n_b - 1))
        throw ContractError("state_from_history: history too short");
    Eigen::VectorXd x(m.order());
    for (int j = 0; j < m.n_f; ++j)
        x(j) = y_hist[y_hist.size() - 1 - j] - m.gamma;
    for (int j = 0; j < m.n_b - 1; ++j)
        x(m.n_f + j) = u_hist[u_hist.size() - 1 - j];
    return x;
}

} // namespace steamnet
