#pragma once

namespace steamnet {

/**
 * Saturated water/steam properties at a given pressure.
 *
 * Units used throughout the library: pressure in bar, density in kg/m^3,
 * specific enthalpy in kJ/kg, temperature in K. Derivatives are per bar.
 */
struct SaturationPoint {
    double p = 0.0;
    double rho_w = 0.0;
    double rho_s = 0.0;
    double h_w = 0.0;
    double h_s = 0.0;
    double T_s = 0.0;
    double d_rho_w_dp = 0.0;
    double d_rho_s_dp = 0.0;
    double d_h_w_dp = 0.0;
    double d_h_s_dp = 0.0;
    double d_T_s_dp = 0.0;
};

inline constexpr double kSaturationPressureMin = 10.0;  // bar
inline constexpr double kSaturationPressureMax = 100.0; // bar

/// Evaluates the saturation-curve fits at @p p [bar]. Throws RangeError outside
/// [kSaturationPressureMin, kSaturationPressureMax].
SaturationPoint saturation_properties(double p);

} // namespace steamnet
