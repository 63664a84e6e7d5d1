#include "steamnet/boiler.hpp"

#include "steamnet/errors.hpp"

#include <cmath>
#include <sstream>

namespace steamnet {
namespace {

// 1 bar * 1 m^3 = 100 kJ
constexpr double kKjPerBarM3 = 100.0;

void check_state(const BoilerState& s, const BoilerParams& params, const char* where)
{
    if (!(std::isfinite(s.p) && std::isfinite(s.V_w) && s.p > 0.0 && s.V_w >= 0.0 &&
          s.V_w <= params.V_T)) {
        std::ostringstream msg;
        msg << where << ": invalid boiler state p=" << s.p << " bar, V_w=" << s.V_w
            << " m^3 (V_T=" << params.V_T << ")";
        throw IntegrationError(msg.str());
    }
}

BoilerState add(const BoilerState& s, const BoilerDerivatives& d, double h)
{
    return {s.p + h * d.dp_dt, s.V_w + h * d.dVw_dt};
}

} // namespace

void BoilerParams::validate() const
{
    std::ostringstream msg;
    if (!(V_T > 0.0))
        msg << "V_T must be positive; ";
    if (!(m_T > 0.0))
        msg << "m_T must be positive; ";
    if (!(c_p > 0.0))
        msg << "c_p must be positive; ";
    if (!(eta > 0.0 && eta <= 1.0))
        msg << "eta must be in (0, 1]; ";
    if (!(lambda_LHV > 0.0))
        msg << "lambda_LHV must be positive; ";
    if (!(q_s_min > 0.0 && q_s_min < q_s_max))
        msg << "need 0 < q_s_min < q_s_max; ";
    if (!(q_g_min > 0.0 && q_g_min < q_g_max))
        msg << "need 0 < q_g_min < q_g_max; ";
    if (!(p_sp >= kSaturationPressureMin && p_sp <= kSaturationPressureMax))
        msg << "p_sp outside the property range; ";
    if (!msg.str().empty())
        throw ContractError("BoilerParams: " + problem_list(msg.str()));
}

std::vector<BoilerParams> default_boilers()
{
    struct Row {
        double V_T, m_T, eta, qs_min, qs_max, qg_min, qg_max, lambda;
    };
    constexpr Row rows[] = {
        {1.21, 5499.0, 0.90, 0.100, 1.264, 0.1251, 0.8588, 100.0},
        {1.15, 5220.0, 0.92, 0.092, 1.160, 0.1273, 0.8435, 130.0},
        {1.28, 5830.0, 0.89, 0.089, 1.125, 0.1295, 0.8458, 120.0},
        {1.14, 5060.0, 0.95, 0.095, 1.200, 0.1253, 0.8414, 70.0},
        {1.32, 5995.0, 0.99, 0.099, 1.250, 0.1227, 0.8389, 80.0},
    };
    std::vector<BoilerParams> out;
    for (const auto& r : rows) {
        BoilerParams b;
        b.V_T = r.V_T;
        b.m_T = r.m_T;
        b.eta = r.eta;
        b.q_s_min = r.qs_min;
        b.q_s_max = r.qs_max;
        b.q_g_min = r.qg_min;
        b.q_g_max = r.qg_max;
        b.lambda_cost = r.lambda;
        out.push_back(b);
    }
    return out;
}

double phi(const BoilerState& state, const BoilerParams& params, const SaturationPoint& sp)
{
    const double V_w = state.V_w;
    const double V_s = params.V_T - state.V_w;
    const double storage_change = sp.d_rho_w_dp * V_w + sp.d_rho_s_dp * V_s;
    const double value = V_s * (sp.h_s * sp.d_rho_s_dp + sp.rho_s * sp.d_h_s_dp) +
                         V_w * (sp.h_w * sp.d_rho_w_dp + sp.rho_w * sp.d_h_w_dp) +
                         kKjPerBarM3 * params.V_T + params.m_T * params.c_p * sp.d_T_s_dp -
                         storage_change * (sp.rho_w * sp.h_w - sp.rho_s * sp.h_s) /
                             (sp.rho_w - sp.rho_s);
    if (!(value > 0.0)) {
        std::ostringstream msg;
        msg << "phi=" << value << " kJ/bar is not positive at p=" << state.p
            << " bar, V_w=" << state.V_w << " m^3";
        throw ModelValidityError(msg.str());
    }
    return value;
}

BoilerDerivatives derivatives(const BoilerState& state, const BoilerInputs& in,
                              const BoilerParams& params)
{
    const SaturationPoint sp = saturation_properties(state.p);
    const double denom = phi(state, params, sp);
    const double heat = params.eta * params.lambda_LHV * in.q_g + in.q_f * (params.h_f - sp.h_w) -
                        in.q_s * (sp.h_s - sp.h_w);
    BoilerDerivatives d;
    d.dp_dt = heat / denom;
    // Sign chosen so that the stored water+steam mass is stationary: the density
    // changes caused by dp are compensated by the phase split.
    const double V_s = params.V_T - state.V_w;
    d.dVw_dt = -(sp.d_rho_w_dp * state.V_w + sp.d_rho_s_dp * V_s) / (sp.rho_w - sp.rho_s) * d.dp_dt;
    return d;
}

BoilerState step(const BoilerState& s, const BoilerInputs& in, const BoilerParams& params, double dt)
{
    if (!(dt > 0.0))
        throw ContractError("boiler step: dt must be positive");
    check_state(s, params, "boiler step (input)");
    const auto k1 = derivatives(s, in, params);
    const auto k2 = derivatives(add(s, k1, 0.5 * dt), in, params);
    const auto k3 = derivatives(add(s, k2, 0.5 * dt), in, params);
    const auto k4 = derivatives(add(s, k3, dt), in, params);
    BoilerState next{
        s.p + dt / 6.0 * (k1.dp_dt + 2.0 * k2.dp_dt + 2.0 * k3.dp_dt + k4.dp_dt),
        s.V_w + dt / 6.0 * (k1.dVw_dt + 2.0 * k2.dVw_dt + 2.0 * k3.dVw_dt + k4.dVw_dt)};
    check_state(next, params, "boiler step");
    return next;
}

double balancing_gas_flow(const BoilerState& state, double q_f, double q_s, const BoilerParams& params)
{
    const SaturationPoint sp = saturation_properties(state.p);
    return (q_s * (sp.h_s - sp.h_w) - q_f * (params.h_f - sp.h_w)) /
           (params.eta * params.lambda_LHV);
}

} // namespace steamnet
