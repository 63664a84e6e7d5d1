#pragma once

#include "steamnet/steam_properties.hpp"

#include <vector>

namespace steamnet {

/**
 * Physical and operating parameters of one once-through steam generator.
 *
 * Flows in kg/s, enthalpies in kJ/kg, pressure in bar. m_T * c_p * dT_s/dp and
 * the enthalpy-density products in phi() are therefore in kJ/bar.
 */
struct BoilerParams {
    double V_T = 1.21;          ///< total tube internal volume [m^3]
    double m_T = 5499.0;        ///< tube metal mass [kg]
    double c_p = 1.25;          ///< lumped metal specific heat [kJ/(kg K)]
    double eta = 0.90;          ///< burner efficiency [-]
    double lambda_LHV = 3900.0; ///< fuel lower heating value [kJ/kg]
    double h_f = 444.34;        ///< feed-water enthalpy, 105 C liquid [kJ/kg]
    double q_s_min = 0.1;
    double q_s_max = 1.264;
    double q_g_min = 0.1251;
    double q_g_max = 0.8588;
    double lambda_cost = 100.0; ///< high-level operating-cost weight [-]
    double p_sp = 57.0;         ///< pressure set-point [bar]

    /// Throws ContractError when an invariant (positivity, ordered limits) fails.
    void validate() const;
};

/// The five generators of the reference installation.
std::vector<BoilerParams> default_boilers();

struct BoilerState {
    double p = 57.0;  ///< internal pressure [bar]
    double V_w = 0.0; ///< liquid water volume [m^3]; steam volume is V_T - V_w
};

struct BoilerInputs {
    double q_g = 0.0; ///< fuel gas flow
    double q_f = 0.0; ///< feed-water flow
    double q_s = 0.0; ///< steam draw
};

struct BoilerDerivatives {
    double dp_dt = 0.0;  ///< [bar/s]
    double dVw_dt = 0.0; ///< [m^3/s]
};

/// Energy-storage coefficient of the pressure dynamics [kJ/bar]. Throws
/// ModelValidityError when it is not strictly positive.
double phi(const BoilerState& state, const BoilerParams& params, const SaturationPoint& props);

BoilerDerivatives derivatives(const BoilerState& state, const BoilerInputs& inputs,
                              const BoilerParams& params);

/// One classical Runge-Kutta step of length dt [s] with inputs held constant.
/// Throws IntegrationError if the resulting state violates the state invariants.
BoilerState step(const BoilerState& state, const BoilerInputs& inputs, const BoilerParams& params,
                 double dt);

/// Gas flow that makes dp/dt vanish at the given state for the given feed and steam flows.
double balancing_gas_flow(const BoilerState& state, double q_f, double q_s,
                          const BoilerParams& params);

} // namespace steamnet
