#include "steamnet/ensemble.hpp"

#include "steamnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace steamnet {

double dc_gain(const Eigen::MatrixXd& A, const Eigen::VectorXd& B, const Eigen::RowVectorXd& C)
{
    const auto n = A.rows();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) - A);
    if (!lu.isInvertible())
        throw AssumptionError("dc_gain: I - A is singular");
    return C * lu.solve(B);
}

ReferenceModel make_reference(const StateSpaceModel& model_i, const ArxModel& tmpl)
{
    const double den = 1.0 + std::accumulate(tmpl.f.begin(), tmpl.f.end(), 0.0);
    if (std::abs(den) < 1e-12)
        throw DegenerateTemplateError("make_reference: template has 1 + sum f = 0");
    check_model_assumptions(model_i);

    const StateSpaceModel t = realize(tmpl);
    if (t.n_f > model_i.n_f || t.n_b > model_i.n_b) {
        std::ostringstream msg;
        msg << "make_reference: template lags (n_f=" << t.n_f << ", n_b=" << t.n_b
            << ") exceed the generator model (n_f=" << model_i.n_f << ", n_b=" << model_i.n_b << ")";
        throw ContractError(msg.str());
    }

    ReferenceModel ref;
    ref.A_hat = t.A;
    ref.C_hat = t.C;
    ref.B_hat = t.B;
    ref.gamma_hat = model_i.gamma;
    ref.g = static_gain(model_i);

    // Padded numerator of the template: b_1 sits in B, the rest in the first row of A.
    double tail = 0.0;
    for (int j = 1; j < t.n_b; ++j)
        tail += t.A(0, t.n_f + j - 1);
    ref.B_hat(0) = ref.g * den - tail;

    // Keep the newest t.n_f outputs and newest t.n_b - 1 inputs of the generator's state.
    ref.beta = Eigen::MatrixXd::Zero(t.order(), model_i.order());
    for (int j = 0; j < t.n_f; ++j)
        ref.beta(j, j) = 1.0;
    for (int j = 0; j < t.n_b - 1; ++j)
        ref.beta(t.n_f + j, model_i.n_f + j) = 1.0;

    const double g_ref = dc_gain(ref.A_hat, ref.B_hat, ref.C_hat);
    if (!(std::abs(g_ref - ref.g) <= 1e-9)) {
        std::ostringstream msg;
        msg << "make_reference: reference gain " << g_ref << " differs from " << ref.g;
        throw AssumptionError(msg.str());
    }
    return ref;
}

EnsembleModel aggregate(const std::vector<ReferenceModel>& refs, const std::vector<double>& alpha,
                        const std::vector<int>& delta)
{
    if (refs.empty() || alpha.size() != refs.size() || delta.size() != refs.size())
        throw ContractError("aggregate: refs, alpha and delta must have the same nonzero length");
    double sum = 0.0;
    int active = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (delta[i] != 0 && delta[i] != 1)
            throw ContractError("aggregate: activation flags must be 0 or 1");
        if (!(alpha[i] >= 0.0 && alpha[i] <= 1.0 + 1e-12))
            throw ContractError("aggregate: shares must lie in [0, 1]");
        if (delta[i] == 0 && alpha[i] != 0.0) {
            std::ostringstream msg;
            msg << "aggregate: generator " << i << " is inactive but has share " << alpha[i];
            throw ContractError(msg.str());
        }
        active += delta[i];
        sum += alpha[i];
        if (refs[i].order() != refs.front().order())
            throw ContractError("aggregate: references have different orders");
    }
    if (active == 0)
        throw ContractError("aggregate: no active generator");
    if (std::abs(sum - 1.0) > 1e-9) {
        std::ostringstream msg;
        msg << "aggregate: shares sum to " << sum;
        throw ContractError(msg.str());
    }

    EnsembleModel ens;
    ens.A = refs.front().A_hat;
    ens.C = refs.front().C_hat;
    ens.B = Eigen::VectorXd::Zero(ens.A.rows());
    for (std::size_t i = 0; i < refs.size(); ++i) {
        ens.B += alpha[i] * refs[i].B_hat;
        ens.gamma += delta[i] * refs[i].gamma_hat;
        ens.g += refs[i].g * alpha[i];
    }
    ens.nu = 1;
    ens.A_T = ens.A;
    ens.B_T = ens.B;
    return ens;
}

EnsembleModel resample(const EnsembleModel& ens, int nu)
{
    if (nu < 1)
        throw ContractError("resample: nu must be at least 1");
    EnsembleModel out = ens;
    const auto n = ens.A.rows();
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < nu; ++j) {
        acc += power * ens.B;
        power = power * ens.A;
    }
    out.nu = nu;
    out.A_T = power;
    out.B_T = acc;
    const double g_fast = dc_gain(ens.A, ens.B, ens.C);
    const double g_slow = dc_gain(out.A_T, out.B_T, ens.C);
    if (!(std::abs(g_fast - g_slow) <= 1e-9 * std::max(1.0, std::abs(g_fast))))
        throw AssumptionError("resample: static gain not preserved");
    return out;
}

Eigen::VectorXd ensemble_state(const std::vector<ReferenceModel>& refs, const std::vector<int>& delta,
                               const std::vector<Eigen::VectorXd>& x)
{
    if (refs.empty() || delta.size() != refs.size() || x.size() != refs.size())
        throw ContractError("ensemble_state: length mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(refs.front().order());
    for (std::size_t i = 0; i < refs.size(); ++i)
        if (delta[i])
            out += refs[i].beta * x[i];
    return out;
}

Eigen::VectorXd one_step_mismatch(const Eigen::MatrixXd& A, const Eigen::VectorXd& B,
                                  const Eigen::VectorXd& x, double u, const Eigen::VectorXd& x_next)
{
    return x_next - A * x - B * u;
}

DisturbanceBound estimate_disturbance_bound(const std::vector<ReferenceModel>& refs,
                                            const std::vector<StateSpaceModel>& actual,
                                            double delta_u, double alpha_max,
                                            const DisturbanceOptions& opt)
{
    if (!(delta_u > 0.0))
        throw ContractError("estimate_disturbance_bound: delta_u must be positive");
    if (refs.size() != actual.size() || refs.empty())
        throw ContractError("estimate_disturbance_bound: refs and models must pair up");
    if (opt.nu < 1 || opt.horizon < 2 * opt.nu)
        throw ContractError("estimate_disturbance_bound: bad nu or horizon");

    const auto n_hat = refs.front().A_hat.rows();
    const int H = opt.horizon;
    const int nu = opt.nu;
    DisturbanceBound out;
    out.delta_u = delta_u;
    Eigen::VectorXd box_fast = Eigen::VectorXd::Zero(n_hat);
    Eigen::VectorXd box_slow = Eigen::VectorXd::Zero(n_hat);

    auto settled = [&](const std::vector<Eigen::VectorXd>& s, std::size_t i, const char* what) {
        double peak = 0.0;
        for (const auto& v : s)
            peak = std::max(peak, v.cwiseAbs().maxCoeff());
        const double last = s.back().cwiseAbs().maxCoeff();
        if (last > opt.tail_tol * std::max(peak, 1e-300) && last > 1e-14) {
            std::ostringstream msg;
            msg << "estimate_disturbance_bound: " << what << " mismatch of generator " << i
                << " has not settled (last " << last << ", peak " << peak << ")";
            throw ModelQualityError(msg.str());
        }
    };

    for (std::size_t i = 0; i < refs.size(); ++i) {
        const auto& r = refs[i];
        const auto& m = actual[i];
        // Step responses of the mismatch from rest (x(0) = 0, u = 1 for k >= 0) on the
        // fast grid and on the slow grid, where the model steps nu samples at once.
        Eigen::MatrixXd A_hat_nu = Eigen::MatrixXd::Identity(n_hat, n_hat);
        Eigen::VectorXd B_hat_nu = Eigen::VectorXd::Zero(n_hat);
        for (int j = 0; j < nu; ++j) {
            B_hat_nu += A_hat_nu * r.B_hat;
            A_hat_nu = A_hat_nu * r.A_hat;
        }
        std::vector<Eigen::VectorXd> s_fast(static_cast<std::size_t>(H));
        std::vector<Eigen::VectorXd> s_slow;
        std::vector<Eigen::VectorXd> traj(static_cast<std::size_t>(H + 1));
        traj[0] = Eigen::VectorXd::Zero(m.order());
        for (int k = 0; k < H; ++k)
            traj[static_cast<std::size_t>(k + 1)] = m.A * traj[static_cast<std::size_t>(k)] + m.B;
        for (int k = 0; k < H; ++k)
            s_fast[static_cast<std::size_t>(k)] = r.beta * traj[static_cast<std::size_t>(k + 1)] -
                                                  r.A_hat * (r.beta * traj[static_cast<std::size_t>(k)]) - r.B_hat;
        for (int k = 0; k + nu <= H; k += nu)
            s_slow.push_back(r.beta * traj[static_cast<std::size_t>(k + nu)] -
                             A_hat_nu * (r.beta * traj[static_cast<std::size_t>(k)]) - B_hat_nu);
        settled(s_fast, i, "fast");
        settled(s_slow, i, "slow");

        // Fast grid: increments only every nu samples, so the worst case at sample k is
        // sum_j |s(k - j nu)|. Slow grid: any increment sequence, so the l1 sum.
        Eigen::VectorXd worst_fast = Eigen::VectorXd::Zero(n_hat);
        for (int k = 0; k < H; ++k) {
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_hat);
            for (int lag = k; lag >= 0; lag -= nu)
                acc += s_fast[static_cast<std::size_t>(lag)].cwiseAbs();
            worst_fast = worst_fast.cwiseMax(acc);
        }
        Eigen::VectorXd worst_slow = Eigen::VectorXd::Zero(n_hat);
        for (const auto& v : s_slow)
            worst_slow += v.cwiseAbs();
        const double scale = opt.safety * alpha_max * delta_u;
        worst_fast *= scale;
        worst_slow *= scale;
        // Generator inputs are alpha_i u with shares summing to one, so the ensemble
        // mismatch is a convex combination and the generator-wise maximum bounds it.
        box_fast = box_fast.cwiseMax(worst_fast);
        box_slow = box_slow.cwiseMax(worst_slow);
        out.per_boiler.push_back(worst_slow.maxCoeff());
    }
    out.w_fast = box_fast.maxCoeff();
    out.w_inf = box_slow.maxCoeff();
    out.w_box = box_slow;
    return out;
}

} // namespace steamnet
