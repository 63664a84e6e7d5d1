#include "steamnet/hl_optimizer.hpp"

#include "steamnet/errors.hpp"
#include "steamnet/qp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace steamnet {

double HLConfig::effective_lambda_bar() const
{
    if (lambda_bar > 0.0)
        return lambda_bar;
    return 1e3 * *std::max_element(lambda.begin(), lambda.end());
}

void HLConfig::validate() const
{
    std::ostringstream msg;
    if (lambda.empty())
        msg << "no generators; ";
    if (U.size() != lambda.size() || Y.size() != lambda.size())
        msg << "per-generator sets do not match the number of weights; ";
    if (U_bar.empty() || Y_bar.empty())
        msg << "empty global set; ";
    for (std::size_t i = 0; i < U.size(); ++i)
        if (U[i].empty() || (i < Y.size() && Y[i].empty()))
            msg << "empty set for generator " << i << "; ";
    if (!lambda.empty() && !(effective_lambda_bar() > 0.0))
        msg << "lambda_bar must be positive; ";
    if (!(delta_u > 0.0))
        msg << "delta_u must be positive; ";
    if (!(T > 0.0 && T_HL > 0.0))
        msg << "periods must be positive; ";
    if (!msg.str().empty())
        throw ContractError("HLConfig: " + problem_list(msg.str()));
}

int ShareSolution::active_count() const
{
    return std::accumulate(delta.begin(), delta.end(), 0);
}

namespace {

struct Row {
    Eigen::VectorXd a;
    double b;
    std::string label;
};

std::string pattern_string(const std::vector<int>& delta)
{
    std::string s;
    for (int d : delta)
        s += d ? '1' : '0';
    return s;
}

struct PatternOutcome {
    bool feasible = false;
    ShareSolution sol;
    std::string first_violation;
};

PatternOutcome solve_pattern(double demand, const std::vector<int>& delta,
                             const std::vector<BoilerStatic>& models, const HLConfig& cfg,
                             const std::optional<ShareSolution>& old)
{
    const int N = static_cast<int>(delta.size());
    std::vector<int> act;
    for (int i = 0; i < N; ++i)
        if (delta[i])
            act.push_back(i);
    const int m = static_cast<int>(act.size());
    const int n = m + 1; // v_active..., u_ss
    const double lam_bar = cfg.effective_lambda_bar();

    double gamma_sum = 0.0;
    double const_cost = lam_bar * demand * demand;
    for (int i : act) {
        gamma_sum += models[i].gamma;
        const_cost += cfg.lambda[i] * models[i].gamma;
    }

    std::vector<Row> rows;
    auto add = [&](Eigen::VectorXd a, double b, std::string label) {
        rows.push_back({std::move(a), b, std::move(label)});
    };
    auto unit = [&](int j) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
        a(j) = 1.0;
        return a;
    };
    add(-unit(m), -cfg.U_bar.lo, "u_ss >= u_min (ensemble)");
    add(unit(m), cfg.U_bar.hi, "u_ss <= u_max (ensemble)");
    {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
        for (int k = 0; k < m; ++k)
            a(k) = models[act[k]].g;
        add(-a, gamma_sum - cfg.Y_bar.lo, "total gas >= y_min (ensemble)");
        add(a, cfg.Y_bar.hi - gamma_sum, "total gas <= y_max (ensemble)");
    }
    for (int k = 0; k < m; ++k) {
        const int i = act[k];
        const std::string tag = " (generator " + std::to_string(i + 1) + ")";
        add(-unit(k), -cfg.U[i].lo, "steam >= u_min" + tag);
        add(unit(k), cfg.U[i].hi, "steam <= u_max" + tag);
        add(-models[i].g * unit(k), models[i].gamma - cfg.Y[i].lo, "gas >= y_min" + tag);
        add(models[i].g * unit(k), cfg.Y[i].hi - models[i].gamma, "gas <= y_max" + tag);
        add(-unit(k), 0.0, "alpha >= 0" + tag);
        if (cfg.handoff_u > 0.0) {
            // alpha_i h in U_i and g_i alpha_i h + gamma_i in Y_i, multiplied through by u_ss.
            const double h = cfg.handoff_u;
            const double g = models[i].g;
            add(h * unit(k) - cfg.U[i].hi * unit(m), 0.0, "hand-off steam <= u_max" + tag);
            add(cfg.U[i].lo * unit(m) - h * unit(k), 0.0, "hand-off steam >= u_min" + tag);
            add(g * h * unit(k) - (cfg.Y[i].hi - models[i].gamma) * unit(m), 0.0, "hand-off gas <= y_max" + tag);
            add((cfg.Y[i].lo - models[i].gamma) * unit(m) - g * h * unit(k), 0.0, "hand-off gas >= y_min" + tag);
        }
        if (old) {
            const double a_old = old->alpha[i];
            if (a_old > 0.0) {
                const double centre = a_old * old->u_ss;
                add(unit(k), centre + a_old * cfg.delta_u, "rate up" + tag);
                add(-unit(k), -(centre - a_old * cfg.delta_u), "rate down" + tag);
            } else {
                add(unit(k), cfg.delta_u, "start-up rate" + tag);
            }
        }
    }

    QpProblem p;
    p.H = Eigen::MatrixXd::Zero(n, n);
    p.H(m, m) = 2.0 * lam_bar;
    p.f = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < m; ++k)
        p.f(k) = cfg.lambda[act[k]] * models[act[k]].g;
    p.f(m) = -2.0 * lam_bar * demand;
    p.G.resize(static_cast<Eigen::Index>(rows.size()), n);
    p.h.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        p.G.row(static_cast<Eigen::Index>(r)) = rows[r].a.transpose();
        p.h(static_cast<Eigen::Index>(r)) = rows[r].b;
    }
    p.E = Eigen::MatrixXd::Zero(1, n);
    p.E.leftCols(m).setOnes();
    p.E(0, m) = -1.0;
    p.e = Eigen::VectorXd::Zero(1);

    const QpResult r = solve_qp(p);
    PatternOutcome out;
    if (r.status != QpStatus::optimal) {
        if (r.status == QpStatus::infeasible) {
            const Eigen::VectorXd viol = p.G * r.x_star - p.h;
            for (Eigen::Index k = 0; k < viol.size(); ++k)
                if (viol(k) > 1e-9) {
                    std::ostringstream msg;
                    msg << rows[static_cast<std::size_t>(k)].label << " violated by " << viol(k);
                    out.first_violation = msg.str();
                    break;
                }
            if (out.first_violation.empty())
                out.first_violation = "share sum / flow balance";
        } else {
            out.first_violation = "unbounded objective";
        }
        return out;
    }

    ShareSolution s;
    s.delta = delta;
    s.alpha.assign(static_cast<std::size_t>(N), 0.0);
    s.u_ss = r.x_star(m);
    if (s.u_ss > 1e-12) {
        double sum = 0.0;
        for (int k = 0; k < m; ++k) {
            s.alpha[act[k]] = std::clamp(r.x_star(k) / s.u_ss, 0.0, 1.0);
            sum += s.alpha[act[k]];
        }
        for (int i : act)
            s.alpha[i] /= sum;
    } else {
        s.u_ss = 0.0;
        s.degenerate = true;
        for (int i : act)
            s.alpha[i] = 1.0 / m;
    }
    s.cost = r.objective + const_cost;
    out.feasible = true;
    out.sol = s;
    return out;
}

} // namespace

ShareSolution solve_shares(double demand, const std::vector<BoilerStatic>& models, const HLConfig& cfg,
                           const std::optional<ShareSolution>& old)
{
    cfg.validate();
    const int N = static_cast<int>(cfg.lambda.size());
    if (static_cast<int>(models.size()) != N)
        throw ContractError("solve_shares: one static model per generator is required");
    if (!(demand >= 0.0) || !std::isfinite(demand))
        throw ContractError("solve_shares: demand must be a finite non-negative flow");
    if (old && (static_cast<int>(old->alpha.size()) != N || static_cast<int>(old->delta.size()) != N))
        throw ContractError("solve_shares: previous solution has the wrong size");
    if (N > 20)
        throw ContractError("solve_shares: enumeration is limited to 20 generators");

    std::optional<ShareSolution> best;
    std::ostringstream report;
    for (unsigned mask = 1; mask < (1u << N); ++mask) {
        std::vector<int> delta(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i)
            delta[i] = (mask >> i) & 1u;
        const PatternOutcome o = solve_pattern(demand, delta, models, cfg, old);
        if (!o.feasible) {
            report << "\n  " << pattern_string(delta) << ": " << o.first_violation;
            continue;
        }
        if (!best) {
            best = o.sol;
            continue;
        }
        const double tol = 1e-9 * (1.0 + std::abs(best->cost));
        const ShareSolution& c = o.sol;
        bool better = c.cost < best->cost - tol;
        if (!better && std::abs(c.cost - best->cost) <= tol) {
            if (c.active_count() != best->active_count())
                better = c.active_count() < best->active_count();
            else
                better = c.delta < best->delta;
        }
        if (better)
            best = c;
    }
    if (!best)
        throw InfeasibleError("solve_shares: every activation pattern is infeasible:" + report.str());
    return *best;
}

double share_cost(const ShareSolution& s, double demand, const std::vector<BoilerStatic>& models,
                  const HLConfig& cfg)
{
    double c = cfg.effective_lambda_bar() * (s.u_ss - demand) * (s.u_ss - demand);
    for (std::size_t i = 0; i < models.size(); ++i)
        c += cfg.lambda[i] * (models[i].g * s.alpha[i] * s.u_ss + s.delta[i] * models[i].gamma);
    return c;
}

std::vector<std::string> check_share_solution(const ShareSolution& s, const std::vector<BoilerStatic>& models,
                                              const HLConfig& cfg, const std::optional<ShareSolution>& old,
                                              double tol)
{
    std::vector<std::string> v;
    auto need = [&](bool ok, const std::string& what) {
        if (!ok)
            v.push_back(what);
    };
    const std::size_t N = models.size();
    double sum = 0.0;
    double gas = 0.0;
    int active = 0;
    for (std::size_t i = 0; i < N; ++i) {
        sum += s.alpha[i];
        gas += models[i].g * s.alpha[i] * s.u_ss + s.delta[i] * models[i].gamma;
        active += s.delta[i];
    }
    need(active >= 1, "no active generator");
    need(std::abs(sum - 1.0) <= tol, "shares do not sum to one");
    need(cfg.U_bar.contains(s.u_ss, tol), "u_ss outside the ensemble steam set");
    need(cfg.Y_bar.contains(gas, tol), "total gas outside the ensemble gas set");
    for (std::size_t i = 0; i < N; ++i) {
        const std::string tag = " (generator " + std::to_string(i + 1) + ")";
        const double a = s.alpha[i];
        const double d = s.delta[i];
        const double v_i = a * s.u_ss;
        need(a >= -tol && a <= 1.0 + tol, "share outside [0, 1]" + tag);
        need(s.delta[i] == 0 || s.delta[i] == 1, "activation flag not binary" + tag);
        need(cfg.U[i].lo * d <= v_i + tol && v_i <= cfg.U[i].hi * d + tol, "steam bound" + tag);
        const double q_g = models[i].g * v_i + d * models[i].gamma;
        need(cfg.Y[i].lo * d <= q_g + tol && q_g <= cfg.Y[i].hi * d + tol, "gas bound" + tag);
        if (cfg.handoff_u > 0.0 && s.delta[i]) {
            const double v_h = a * cfg.handoff_u;
            need(cfg.U[i].contains(v_h, tol), "hand-off steam bound" + tag);
            need(cfg.Y[i].contains(models[i].g * v_h + models[i].gamma, tol), "hand-off gas bound" + tag);
        }
        if (old) {
            const double a_old = old->alpha[i];
            if (a_old > 0.0 || d == 0.0)
                need(std::abs(v_i - d * a_old * old->u_ss) <= a_old * cfg.delta_u + tol, "rate coupling" + tag);
            else
                need(v_i <= cfg.delta_u + tol, "start-up rate" + tag);
        }
    }
    return v;
}

bool should_trigger(double demand, double last_solved_demand, long k, long last_k, const HLConfig& cfg)
{
    if (std::abs(demand - last_solved_demand) >= cfg.trigger_threshold)
        return true;
    return static_cast<double>(k - last_k) * cfg.T >= cfg.T_HL - 1e-9;
}

} // namespace steamnet
