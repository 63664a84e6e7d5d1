#pragma once

#include "steamnet/boiler.hpp"

namespace steamnet {

/// Discrete PI law with output saturation.
struct PIConfig {
    double K_P = 0.0;
    double K_I = 0.0;
    double tau = 10.0; ///< sample time [s]
    double u_min = 0.0;
    double u_max = 1.0;
    bool anti_windup = true;
};

struct LoopState {
    double integrator = 0.0;
    double last_output = 0.0;
};

struct PiStep {
    double output;
    LoopState loop;
};

/// output = sat(K_P e + I'), I' = I + K_I tau e. With anti-windup the integrator
/// is frozen when the unsaturated output exceeds a bound in the direction of e.
PiStep pi_step(const PIConfig& cfg, const LoopState& loop, double error);

/// Pressure regulator R and feed-water compensator C of one generator.
struct LowLevelConfig {
    PIConfig regulator;   ///< R: pressure error [MPa] -> q_g
    PIConfig compensator; ///< C: steam command -> q_f
    double dt_inner = 1.0; ///< plant integration step [s]
};

/// Gains of the reference installation; bounds are filled per boiler by make_low_level_config.
LowLevelConfig default_low_level_config();

/// Copies @p base and sets the actuator bounds from @p params: q_g in [0, q_g_max],
/// q_f in [0, 2 q_s_max].
LowLevelConfig make_low_level_config(const LowLevelConfig& base, const BoilerParams& params);

/// A generator together with its two local loops.
struct ClosedLoopBoiler {
    BoilerParams params;
    LowLevelConfig config;
    BoilerState plant;
    LoopState regulator;
    LoopState compensator;
};

struct ClosedLoopSample {
    double q_g; ///< fuel flow applied over the interval
    double q_f; ///< feed-water flow applied over the interval
    double q_s; ///< steam draw over the interval
};

/// Advances the closed loop by one controller period tau with the steam command held.
/// Returns the flows applied during the interval; @p boiler holds the state at its end.
ClosedLoopSample closed_loop_step(ClosedLoopBoiler& boiler, double q_s_cmd);

/// Fuel flow R will apply over the next interval; depends only on the current pressure.
double peek_gas_flow(const ClosedLoopBoiler& boiler);

/// Closed loop at rest at p = p_sp and water volume @p V_w with a constant steam draw.
ClosedLoopBoiler make_equilibrium(const BoilerParams& params, const LowLevelConfig& cfg,
                                  double q_s, double V_w);

/// Steady gas flow of the closed loop for a constant steam draw (p = p_sp, q_f = q_s).
double steady_gas_flow(const BoilerParams& params, double q_s, double V_w);

/// Conversion applied to the pressure error before it enters R.
inline constexpr double kBarToMPa = 0.1;

} // namespace steamnet
