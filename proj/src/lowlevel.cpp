#include "steamnet/lowlevel.hpp"

#include "steamnet/errors.hpp"

#include <algorithm>
#include <cmath>

namespace steamnet {

PiStep pi_step(const PIConfig& cfg, const LoopState& loop, double error)
{
    double integrator = loop.integrator + cfg.K_I * cfg.tau * error;
    const double unsaturated = cfg.K_P * error + integrator;
    if (cfg.anti_windup && ((unsaturated > cfg.u_max && error > 0.0) ||
                            (unsaturated < cfg.u_min && error < 0.0))) {
        integrator = loop.integrator;
    }
    const double output = std::clamp(cfg.K_P * error + integrator, cfg.u_min, cfg.u_max);
    return {output, LoopState{integrator, output}};
}

LowLevelConfig default_low_level_config()
{
    LowLevelConfig cfg;
    cfg.regulator = PIConfig{0.87, 3.54e-4, 10.0, 0.0, 1.0, true};
    cfg.compensator = PIConfig{0.31, 0.1, 10.0, 0.0, 3.0, true};
    cfg.dt_inner = 1.0;
    return cfg;
}

LowLevelConfig make_low_level_config(const LowLevelConfig& base, const BoilerParams& params)
{
    LowLevelConfig cfg = base;
    cfg.regulator.u_min = 0.0;
    cfg.regulator.u_max = params.q_g_max;
    cfg.compensator.u_min = 0.0;
    cfg.compensator.u_max = 2.0 * params.q_s_max;
    return cfg;
}

ClosedLoopSample closed_loop_step(ClosedLoopBoiler& b, double q_s_cmd)
{
    const auto& R = b.config.regulator;
    const auto& C = b.config.compensator;
    if (std::abs(R.tau - C.tau) > 1e-12)
        throw ContractError("closed_loop_step: R and C must share the sample time");

    const double pressure_error = (b.params.p_sp - b.plant.p) * kBarToMPa;
    const PiStep r = pi_step(R, b.regulator, pressure_error);

    // C tracks the steam command with its own output as the measured variable;
    // the algebraic loop e = cmd - q_f, q_f = K_P e + I + K_I tau e is solved in closed form.
    const double c_error = (q_s_cmd - b.compensator.integrator) / (1.0 + C.K_P + C.K_I * C.tau);
    const PiStep c = pi_step(C, b.compensator, c_error);

    const BoilerInputs in{r.output, c.output, q_s_cmd};
    const double dt = b.config.dt_inner;
    const int n_sub = std::max(1, static_cast<int>(std::lround(R.tau / dt)));
    const double h = R.tau / n_sub;
    for (int i = 0; i < n_sub; ++i)
        b.plant = step(b.plant, in, b.params, h);

    b.regulator = r.loop;
    b.compensator = c.loop;
    return {r.output, c.output, q_s_cmd};
}

double peek_gas_flow(const ClosedLoopBoiler& b)
{
    return pi_step(b.config.regulator, b.regulator, (b.params.p_sp - b.plant.p) * kBarToMPa).output;
}

double steady_gas_flow(const BoilerParams& params, double q_s, double V_w)
{
    return balancing_gas_flow(BoilerState{params.p_sp, V_w}, q_s, q_s, params);
}

ClosedLoopBoiler make_equilibrium(const BoilerParams& params, const LowLevelConfig& cfg, double q_s,
                                  double V_w)
{
    ClosedLoopBoiler b;
    b.params = params;
    b.config = cfg;
    b.plant = BoilerState{params.p_sp, V_w};
    const double q_g = steady_gas_flow(params, q_s, V_w);
    b.regulator = LoopState{q_g, q_g};
    b.compensator = LoopState{q_s, q_s};
    return b;
}

} // namespace steamnet
