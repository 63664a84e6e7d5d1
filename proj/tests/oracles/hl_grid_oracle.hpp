#pragma once

// Brute-force reference for the share problem, independent of the QP solver.
//
// For a fixed activation pattern and fixed shares every constraint is an interval on
// u_ss and the cost is a convex quadratic in u_ss, so the inner problem has a closed
// form. The outer search grids the share simplex and then zooms in around the best
// grid point until the step is below 1e-9.

#include "steamnet/hl_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace steamnet::oracle {

struct GridResult {
    bool feasible = false;
    double cost = std::numeric_limits<double>::infinity();
    std::vector<double> alpha;
    std::vector<int> delta;
    double u_ss = 0.0;
};

inline double inner_cost(double demand, const std::vector<BoilerStatic>& models, const HLConfig& cfg,
                         const std::optional<ShareSolution>& old, const std::vector<int>& delta,
                         const std::vector<double>& alpha, double& u_out)
{
    const double inf = std::numeric_limits<double>::infinity();
    double lo = cfg.U_bar.lo, hi = cfg.U_bar.hi;
    auto cut = [&](double coef, double a, double b) { // a <= coef * u <= b
        if (coef > 0.0) {
            lo = std::max(lo, a / coef);
            hi = std::min(hi, b / coef);
        } else if (!(a <= 0.0 && 0.0 <= b)) {
            lo = inf;
        }
    };
    double G = 0.0, gamma = 0.0, lin = 0.0, lin0 = 0.0;
    for (std::size_t i = 0; i < models.size(); ++i) {
        if (!delta[i])
            continue;
        const double a = alpha[i];
        G += models[i].g * a;
        gamma += models[i].gamma;
        lin += cfg.lambda[i] * models[i].g * a;
        lin0 += cfg.lambda[i] * models[i].gamma;
        cut(a, cfg.U[i].lo, cfg.U[i].hi);
        cut(models[i].g * a, cfg.Y[i].lo - models[i].gamma, cfg.Y[i].hi - models[i].gamma);
        if (old) {
            const double a_old = old->alpha[i];
            if (a_old > 0.0) {
                const double c = a_old * old->u_ss;
                cut(a, c - a_old * cfg.delta_u, c + a_old * cfg.delta_u);
            } else {
                cut(a, -inf, cfg.delta_u);
            }
        }
    }
    cut(G, cfg.Y_bar.lo - gamma, cfg.Y_bar.hi - gamma);
    if (!(lo <= hi + 1e-12))
        return inf;
    const double lb = cfg.effective_lambda_bar();
    const double u = std::clamp(demand - lin / (2.0 * lb), lo, std::max(lo, hi));
    u_out = u;
    return lb * (u - demand) * (u - demand) + lin * u + lin0;
}

inline GridResult grid_oracle(double demand, const std::vector<BoilerStatic>& models, const HLConfig& cfg,
                              const std::optional<ShareSolution>& old, double h0 = 0.002)
{
    const std::size_t N = models.size();
    GridResult best;
    for (unsigned mask = 1; mask < (1u << N); ++mask) {
        std::vector<int> delta(N);
        std::vector<std::size_t> act;
        for (std::size_t i = 0; i < N; ++i) {
            delta[i] = (mask >> i) & 1u;
            if (delta[i])
                act.push_back(i);
        }
        const std::size_t m = act.size();
        // Free coordinates: the first m-1 active shares; the last one closes the sum.
        auto evaluate = [&](const std::vector<double>& free, GridResult& out) {
            std::vector<double> alpha(N, 0.0);
            double rest = 1.0;
            for (std::size_t k = 0; k + 1 < m; ++k) {
                if (free[k] < 0.0)
                    return;
                alpha[act[k]] = free[k];
                rest -= free[k];
            }
            if (rest < -1e-15)
                return;
            alpha[act[m - 1]] = std::max(rest, 0.0);
            double u = 0.0;
            const double c = inner_cost(demand, models, cfg, old, delta, alpha, u);
            if (c < out.cost) {
                out.feasible = true;
                out.cost = c;
                out.alpha = alpha;
                out.delta = delta;
                out.u_ss = u;
            }
        };
        GridResult local;
        const std::size_t dims = m - 1;
        std::vector<double> centre(dims, 0.0);
        double half = 0.5, step = h0;
        bool first = true;
        while (step > 1e-9) {
            const double from = first ? 0.0 : -half;
            const int count = static_cast<int>(std::lround((first ? 1.0 : 2.0 * half) / step));
            GridResult round = local;
            std::vector<double> p(dims);
            std::vector<int> idx(dims, 0);
            while (true) {
                for (std::size_t k = 0; k < dims; ++k)
                    p[k] = (first ? 0.0 : centre[k]) + from + idx[k] * step;
                evaluate(p, round);
                std::size_t k = 0;
                while (k < dims && ++idx[k] > count)
                    idx[k++] = 0;
                if (k == dims)
                    break;
            }
            if (!round.feasible)
                break;
            local = round;
            for (std::size_t k = 0; k < dims; ++k)
                centre[k] = local.alpha[act[k]];
            half = 2.0 * step;
            step /= 4.0;
            first = false;
            if (dims == 0)
                break;
        }
        if (local.feasible &&
            (local.cost < best.cost - 1e-12 ||
             (std::abs(local.cost - best.cost) <= 1e-12 && best.feasible &&
              std::count(local.delta.begin(), local.delta.end(), 1) <
                  std::count(best.delta.begin(), best.delta.end(), 1))))
            best = local;
    }
    return best;
}

} // namespace steamnet::oracle
