"""Compare the stated DRS upper bound with exact quadratic instances.

For f = a x^2/2 and g = b x^2/2 one DRS step multiplies by
(1 + tau^2 a b) / ((1 + tau a)(1 + tau b)). Any such instance inside the
class is a lower bound on the worst case, so a bound that falls below it is
not a valid upper bound. Prints the worst shortfall per configuration.
"""

import numpy as np

from pepsplit.closed_form import rate_drs_corner, rate_drs_upper
from pepsplit.core import FunctionClass, SumProblem

CONFIGS = {
    "fig1a": (0.9, 1.0, 0.2),
    "fig1b": (0.1, 10.0, 1.0),
    "fig2": (0.1, 1.0, 0.2),
}


def main():
    taus = np.geomspace(1e-3, 1e3, 4001)
    for name, (rho, Lf, Lg) in CONFIGS.items():
        p = SumProblem(FunctionClass(rho, Lf), FunctionClass(0.0, Lg))
        gap = np.array([rate_drs_upper(t, p).value - rate_drs_corner(t, p).value for t in taus])
        i = int(np.argmin(gap))
        verdict = "bound holds" if gap[i] >= 0 else "bound violated"
        print(f"{name}: min(upper - quadratic) = {gap[i]:+.4f} at tau = {taus[i]:.3g} ({verdict})")


if __name__ == "__main__":
    main()
