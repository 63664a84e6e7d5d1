#include "steamnet/steam_properties.hpp"

#include "steamnet/errors.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace steamnet {
namespace {

// Degree-5 least-squares fits to IAPWS-IF97 saturation data on [10, 100] bar in
// the normalized variable x = (p - 55) / 45. Regenerate with tools/fit_saturation.py.
constexpr double kMid = 55.0;
constexpr double kHalf = 45.0;

using Coeffs = std::array<double, 6>;

// max rel. error 6.9e-4
constexpr Coeffs kRhoW{767.60582033647745, -87.335746478293444, 11.542268666666402,
                       -5.5723187041049069, 8.2002141920981195, -6.2617321981837613};
// max rel. error 9.3e-4
constexpr Coeffs kRhoS{28.055857870472579, 24.597504387028049, 2.2633321471308383,
                       0.4761566046246154, -0.017081309117430193, 0.078295039696317639};
// max rel. error 4.3e-3 (worst at 10 bar, < 1e-3 above 20 bar)
constexpr Coeffs kHW{1184.4344151310354, 267.61793429873273, -56.094187106140829,
                     21.908433521623685, -40.832219997806405, 32.044994716846105};
// max rel. error 4.4e-4
constexpr Coeffs kHS{2789.5363609888941, -43.048056222011411, -22.717024920134591,
                     5.1725396080619221, -14.686178044234184, 11.662948803447422};
// max rel. error 1.7e-3
constexpr Coeffs kTS{543.0004182061208, 52.656630979222854, -14.161452660044951,
                     5.046600831285966, -9.7153086177265262, 7.6106513551011563};

struct ValueAndSlope {
    double value;
    double slope; // d/dp, per bar
};

ValueAndSlope horner(const Coeffs& c, double x)
{
    double v = 0.0;
    double d = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) {
        d = d * x + v;
        v = v * x + c[i];
    }
    return {v, d / kHalf};
}

} // namespace

SaturationPoint saturation_properties(double p)
{
    if (!(p >= kSaturationPressureMin && p <= kSaturationPressureMax)) {
        std::ostringstream msg;
        msg << "saturation_properties: pressure " << p << " bar outside supported interval ["
            << kSaturationPressureMin << ", " << kSaturationPressureMax << "] bar";
        throw RangeError(msg.str());
    }
    const double x = (p - kMid) / kHalf;
    const auto rw = horner(kRhoW, x);
    const auto rs = horner(kRhoS, x);
    const auto hw = horner(kHW, x);
    const auto hs = horner(kHS, x);
    const auto ts = horner(kTS, x);

    SaturationPoint sp;
    sp.p = p;
    sp.rho_w = rw.value;
    sp.rho_s = rs.value;
    sp.h_w = hw.value;
    sp.h_s = hs.value;
    sp.T_s = ts.value;
    sp.d_rho_w_dp = rw.slope;
    sp.d_rho_s_dp = rs.slope;
    sp.d_h_w_dp = hw.slope;
    sp.d_h_s_dp = hs.slope;
    sp.d_T_s_dp = ts.slope;
    return sp;
}

} // namespace steamnet
