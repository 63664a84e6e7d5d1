"""Regenerates the saturation-curve polynomial coefficients in src/steam_properties.cpp.

Requires the `iapws` package. Fits degree-5 polynomials in the normalized
pressure x = (p - 55) / 45, p in bar, over [10, 100] bar.
"""
import numpy as np
from iapws import IAPWS97

P_MID, P_HALF = 55.0, 45.0
NAMES = ["rho_w", "rho_s", "h_w", "h_s", "T_s"]


def saturation(p_bar):
    w = IAPWS97(P=p_bar / 10.0, x=0)
    s = IAPWS97(P=p_bar / 10.0, x=1)
    return [w.rho, s.rho, w.h, s.h, w.T]


def main():
    ps = np.linspace(10.0, 100.0, 361)
    data = np.array([saturation(p) for p in ps])
    x = (ps - P_MID) / P_HALF
    for i, name in enumerate(NAMES):
        c = np.polynomial.polynomial.polyfit(x, data[:, i], 5)
        err = np.max(np.abs(np.polynomial.polynomial.polyval(x, c) - data[:, i]) / np.abs(data[:, i]))
        print(f"// {name}: max rel. error {err:.2e}")
        print("{" + ", ".join(f"{v:.17g}" for v in c) + "},")


if __name__ == "__main__":
    main()
