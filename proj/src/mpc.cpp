#include "steamnet/mpc.hpp"

#include "steamnet/errors.hpp"
#include "steamnet/qp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace steamnet {

void MpcConfig::validate() const
{
    if (N < 1 || !(Q_y > 0.0) || !(R > 0.0) || !(rho > 0.0) || !(lqr_state_weight >= 0.0) ||
        !(tube_eps > 0.0 && tube_eps < 1.0))
        throw ContractError("MpcConfig: need N >= 1, positive weights and tube_eps in (0, 1)");
}

VelocityModel build_velocity_form(const EnsembleModel& slow)
{
    const auto n = slow.A_T.rows();
    VelocityModel vm;
    vm.A = Eigen::MatrixXd::Zero(n + 1, n + 1);
    vm.A.topLeftCorner(n, n) = slow.A_T;
    vm.A.bottomLeftCorner(1, n) = slow.C * slow.A_T;
    vm.A(n, n) = 1.0;
    vm.B.resize(n + 1);
    vm.B.head(n) = slow.B_T;
    vm.B(n) = slow.C.dot(slow.B_T);
    vm.C = Eigen::RowVectorXd::Zero(n + 1);
    vm.C(n) = 1.0;
    vm.g = slow.g;
    vm.gamma = slow.gamma;
    return vm;
}

Eigen::VectorXd velocity_state(const EnsembleModel& ens, const Eigen::VectorXd& x_now,
                               const Eigen::VectorXd& x_prev)
{
    const auto n = ens.A.rows();
    Eigen::VectorXd xi(n + 1);
    xi.head(n) = x_now - x_prev;
    xi(n) = ens.C.dot(x_now) + ens.gamma;
    return xi;
}

Eigen::RowVectorXd lqr_gain(const Eigen::MatrixXd& A, const Eigen::VectorXd& B, const Eigen::RowVectorXd& C,
                            const MpcConfig& cfg)
{
    const auto n = A.rows();
    if (A.cols() != n || B.size() != n || C.size() != n)
        throw ContractError("lqr_gain: dimension mismatch");
    const Eigen::MatrixXd Q =
        C.transpose() * cfg.Q_y * C + cfg.lqr_state_weight * Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd P = Q;
    bool converged = false;
    for (int it = 0; it < 100000; ++it) {
        const Eigen::RowVectorXd BtPA = B.transpose() * P * A;
        const double s = cfg.R + B.dot(P * B);
        const Eigen::MatrixXd next = Q + A.transpose() * P * A - BtPA.transpose() * BtPA / s;
        const double diff = (next - P).cwiseAbs().maxCoeff();
        P = 0.5 * (next + next.transpose());
        if (diff <= 1e-13 * std::max(1.0, P.cwiseAbs().maxCoeff())) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw GainDesignError("lqr_gain: Riccati iteration did not converge");
    const double s = cfg.R + B.dot(P * B);
    const Eigen::RowVectorXd K = -(B.transpose() * P * A) / s;
    const double rho = spectral_radius(A + B * K);
    if (!(rho < 1.0)) {
        std::ostringstream msg;
        msg << "lqr_gain: closed loop has spectral radius " << rho;
        throw GainDesignError(msg.str());
    }
    return K;
}

double Tube::support(const Eigen::RowVectorXd& c) const
{
    double h = 0.0;
    for (const auto& P : powers)
        h += (c * P).cwiseAbs().dot(w);
    return h / (1.0 - eps);
}

Tube compute_tube(const Eigen::MatrixXd& A_cl, const Eigen::VectorXd& w_box, double eps)
{
    if (!(eps > 0.0 && eps < 1.0))
        throw ContractError("compute_tube: eps must lie in (0, 1)");
    if (w_box.size() != A_cl.rows() || (w_box.array() < 0.0).any())
        throw ContractError("compute_tube: disturbance half-widths must be non-negative, one per state");
    const double rho = spectral_radius(A_cl);
    if (!(rho < 1.0)) {
        std::ostringstream msg;
        msg << "compute_tube: closed-loop matrix is not Schur (spectral radius " << rho << ")";
        throw GainDesignError(msg.str());
    }
    const auto n = A_cl.rows();
    Tube t;
    t.eps = eps;
    t.w = w_box;
    t.z = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    const int max_terms = 100000;
    // A^s W inside eps W: |A^s| w <= eps w, and rows of w that are zero must map to zero.
    const double floor = 1e-12 * std::max(w_box.maxCoeff(), 1e-300);
    auto contracted = [&] {
        const Eigen::VectorXd image = power.cwiseAbs() * w_box;
        return ((image.array() <= eps * w_box.array() + floor).all());
    };
    while (t.terms == 0 || !contracted()) {
        if (t.terms >= max_terms)
            throw GainDesignError("compute_tube: powers of the closed loop do not contract the disturbance box");
        t.powers.push_back(power);
        t.z += power.cwiseAbs() * w_box;
        power = power * A_cl;
        ++t.terms;
    }
    t.z /= (1.0 - eps);
    return t;
}

TightenedSets tighten(const VelocityModel& vm, const EnsembleModel& slow, const Eigen::VectorXd& w_box,
                      const MpcConstraints& cons, const ShareSolution& shares,
                      const std::vector<BoilerStatic>& models, const MpcConfig& cfg)
{
    const std::size_t N_g = models.size();
    if (shares.alpha.size() != N_g || cons.U.size() != N_g || cons.Y.size() != N_g ||
        cons.bias_bound.size() != N_g)
        throw ContractError("tighten: per-generator data must have one entry per generator");

    TightenedSets s;
    if (w_box.size() != slow.A_T.rows() || (w_box.array() < 0.0).any())
        throw ContractError("tighten: need one non-negative disturbance half-width per ensemble state");
    s.K = lqr_gain(slow.A_T, slow.B_T, slow.C, cfg);
    s.tube = compute_tube(slow.A_T + slow.B_T * s.K, w_box, cfg.tube_eps);
    s.margin_u = s.tube.support(s.K);
    s.margin_y = s.tube.support(slow.C);

    std::ostringstream problems;
    auto gate = [&](const Interval& original, double removed, const std::string& name) {
        if (!(removed < 0.5 * original.width()))
            problems << name << " loses " << removed << " of width " << original.width() << "; ";
    };
    s.U = cons.U_bar.shrink(s.margin_u);
    s.Y = cons.Y_bar.shrink(s.margin_y);
    s.dU = Interval{-cons.delta_u, cons.delta_u}.shrink(s.margin_u);
    gate(cons.U_bar, 2.0 * s.margin_u, "ensemble input set");
    gate(cons.Y_bar, 2.0 * s.margin_y, "ensemble output set");
    gate({-cons.delta_u, cons.delta_u}, 2.0 * s.margin_u, "input-rate set");

    s.u_total = s.U;
    s.U_i.resize(N_g);
    s.P_i.resize(N_g);
    for (std::size_t i = 0; i < N_g; ++i) {
        const double a = shares.alpha[i];
        s.U_i[i] = cons.U[i].shrink(a * s.margin_u);
        s.P_i[i] = cons.Y[i].shrink(models[i].g * a * s.margin_u + cons.bias_bound[i]);
        if (shares.delta[i] == 0 || a <= 0.0)
            continue;
        const std::string tag = " of generator " + std::to_string(i + 1);
        gate(cons.U[i], 2.0 * a * s.margin_u, "steam set" + tag);
        gate(cons.Y[i], 2.0 * (models[i].g * a * s.margin_u + cons.bias_bound[i]), "gas set" + tag);
        s.u_total = s.u_total.intersect(s.U_i[i].scaled(1.0 / a));
        const double ga = models[i].g * a;
        Interval from_p{s.P_i[i].lo - models[i].gamma, s.P_i[i].hi - models[i].gamma};
        s.u_total = s.u_total.intersect(from_p.scaled(1.0 / ga));
    }
    if (!problems.str().empty())
        throw ContractError("tighten: over-conservative tightening: " + problem_list(problems.str()));
    if (s.U.empty() || s.Y.empty() || s.dU.empty() || s.u_total.empty())
        throw ContractError("tighten: a tightened constraint set is empty");
    s.y_ss = Interval{vm.g * s.u_total.lo + vm.gamma, vm.g * s.u_total.hi + vm.gamma}.intersect(s.Y);
    if (vm.g < 0.0)
        s.y_ss = Interval{vm.g * s.u_total.hi + vm.gamma, vm.g * s.u_total.lo + vm.gamma}.intersect(s.Y);
    if (s.y_ss.empty())
        throw ContractError("tighten: no admissible steady state");
    return s;
}

MpcSolution solve_mpc(const VelocityModel& vm, const Eigen::VectorXd& xi, double u_prev, double r,
                      const TightenedSets& sets, const MpcConfig& cfg, double rate_scale)
{
    cfg.validate();
    const int N = cfg.N;
    const int nx = vm.order();
    const int nv = N + 1; // increments, then r_hat
    const int ir = N;
    if (xi.size() != nx)
        throw ContractError("solve_mpc: state dimension mismatch");
    if (!(rate_scale > 0.0 && rate_scale <= 1.0))
        throw ContractError("solve_mpc: rate_scale must lie in (0, 1]");

    // xi(j) = Phi_j xi0 + Gam_j du, j = 0..N
    std::vector<Eigen::VectorXd> free(static_cast<std::size_t>(N + 1));
    std::vector<Eigen::MatrixXd> forced(static_cast<std::size_t>(N + 1));
    free[0] = xi;
    forced[0] = Eigen::MatrixXd::Zero(nx, nv);
    for (int j = 1; j <= N; ++j) {
        free[j] = vm.A * free[j - 1];
        forced[j] = vm.A * forced[j - 1];
        forced[j].col(j - 1) += vm.B;
    }

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nv, nv);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(nv);
    double constant = cfg.rho * r * r;
    for (int j = 1; j <= N; ++j) {
        Eigen::RowVectorXd a = vm.C * forced[j];
        a(ir) = -1.0;
        const double y0 = vm.C.dot(free[j]);
        H += 2.0 * cfg.Q_y * a.transpose() * a;
        f += 2.0 * cfg.Q_y * y0 * a.transpose();
        constant += cfg.Q_y * y0 * y0;
    }
    for (int j = 0; j < N; ++j)
        H(j, j) += 2.0 * cfg.R;
    H(ir, ir) += 2.0 * cfg.rho;
    f(ir) -= 2.0 * cfg.rho * r;

    struct Row {
        Eigen::RowVectorXd a;
        double b;
        std::string label;
    };
    std::vector<Row> rows;
    auto bound = [&](const Eigen::RowVectorXd& a, double offset, const Interval& I, const std::string& what) {
        rows.push_back({a, I.hi - offset, what + " upper"});
        rows.push_back({-a, offset - I.lo, what + " lower"});
    };
    for (int j = 0; j < N; ++j) {
        const std::string stage = " at stage " + std::to_string(j);
        Eigen::RowVectorXd cum = Eigen::RowVectorXd::Zero(nv);
        cum.head(j + 1).setOnes();
        bound(cum, u_prev, sets.u_total, "input" + stage);
        Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(nv);
        e(j) = 1.0;
        const Interval dU = j == 0 ? sets.dU.scaled(rate_scale) : sets.dU;
        bound(e, 0.0, dU, "input increment" + stage);
        bound(vm.C * forced[j + 1], vm.C.dot(free[j + 1]), sets.Y, "output" + stage);
    }
    Eigen::RowVectorXd er = Eigen::RowVectorXd::Zero(nv);
    er(ir) = 1.0;
    bound(er, 0.0, sets.Y, "artificial reference");

    QpProblem p;
    p.H = 0.5 * (H + H.transpose());
    p.f = f;
    p.G.resize(static_cast<Eigen::Index>(rows.size()), nv);
    p.h.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        p.G.row(static_cast<Eigen::Index>(k)) = rows[k].a;
        p.h(static_cast<Eigen::Index>(k)) = rows[k].b;
    }
    // Terminal steady state: no state motion and output at r_hat.
    p.E = Eigen::MatrixXd::Zero(nx, nv);
    p.e = Eigen::VectorXd::Zero(nx);
    p.E.topRows(nx - 1) = forced[N].topRows(nx - 1);
    p.e.head(nx - 1) = -free[N].head(nx - 1);
    p.E.row(nx - 1) = vm.C * forced[N];
    p.E(nx - 1, ir) -= 1.0;
    p.e(nx - 1) = -vm.C.dot(free[N]);

    const QpResult res = solve_qp(p);
    if (res.status != QpStatus::optimal) {
        std::ostringstream msg;
        msg << "solve_mpc: QP " << to_string(res.status);
        if (res.status == QpStatus::infeasible) {
            msg << "; violated at the least-infeasible point:";
            const Eigen::VectorXd viol = p.G * res.x_star - p.h;
            for (Eigen::Index k = 0; k < viol.size(); ++k)
                if (viol(k) > 1e-9)
                    msg << " [" << rows[static_cast<std::size_t>(k)].label << " by " << viol(k) << "]";
            const Eigen::VectorXd eq = p.E * res.x_star - p.e;
            if (eq.cwiseAbs().maxCoeff() > 1e-9)
                msg << " [terminal equality by " << eq.cwiseAbs().maxCoeff() << "]";
        }
        throw InfeasibleError(msg.str());
    }

    MpcSolution sol;
    sol.r_hat = res.x_star(ir);
    double u = u_prev;
    for (int j = 0; j < N; ++j) {
        sol.du.push_back(res.x_star(j));
        u += res.x_star(j);
        sol.u.push_back(u);
        sol.y.push_back(vm.C.dot(free[j + 1] + forced[j + 1] * res.x_star));
    }
    sol.u_applied = u_prev + res.x_star(0);
    sol.cost = res.objective + constant;
    return sol;
}

double reconfiguration_rate_scale(const ShareSolution& old_shares, const ShareSolution& new_shares)
{
    double scale = 1.0;
    for (std::size_t i = 0; i < new_shares.alpha.size() && i < old_shares.alpha.size(); ++i) {
        const double a_new = new_shares.alpha[i];
        const double a_old = old_shares.alpha[i];
        if (new_shares.delta[i] && a_new > 0.0 && a_old > 0.0)
            scale = std::min(scale, a_old / a_new);
    }
    return scale;
}

Reconfigured reconfigure(const Eigen::VectorXd& xi_prev, double u_prev, const ShareSolution& old_shares,
                         const ShareSolution& new_shares, const std::vector<ReferenceModel>& refs,
                         const std::vector<Eigen::VectorXd>& x_hat_now,
                         const std::vector<Eigen::VectorXd>& x_hat_prev)
{
    if (old_shares.alpha == new_shares.alpha && old_shares.delta == new_shares.delta)
        return {xi_prev, u_prev};
    if (refs.empty() || x_hat_now.size() != refs.size() || x_hat_prev.size() != refs.size() ||
        new_shares.delta.size() != refs.size())
        throw ContractError("reconfigure: per-generator data must have one entry per generator");
    const auto n = refs.front().order();
    Eigen::VectorXd now = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(n);
    double gamma = 0.0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (!new_shares.delta[i])
            continue;
        now += x_hat_now[i];
        prev += x_hat_prev[i];
        gamma += refs[i].gamma_hat;
    }
    Reconfigured out;
    out.xi.resize(n + 1);
    out.xi.head(n) = now - prev;
    out.xi(n) = refs.front().C_hat.dot(now) + gamma;
    out.u_prev = u_prev;
    return out;
}

} // namespace steamnet
