"""How far out a current sheet can sit for given boundary data.

If a sheet on a curve with ``max R = rho`` produces Neumann data f on the
unit circle, then ``|f_k|`` decays at least like ``(1 + |k|) rho^-|k|``. So the
observed geometric decay rate of ``f_k`` bounds the coil radius from above.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core.fourier import FourierSeries
from ..errors import PreconditionError

__all__ = ["AnalyticityEstimate", "analyticity_radius", "NOISE_FLOOR", "MIN_MODES"]

NOISE_FLOOR = 1e-14
MIN_MODES = 8
MIN_R2 = 0.95


@dataclass(frozen=True)
class AnalyticityEstimate:
    """Result of the decay fit. Unpacks as ``(rho, fit_quality)``."""

    rho: float
    fit_quality: float
    flag: str
    modes_used: int
    slope: float = float("nan")
    intercept: float = float("nan")
    extra: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.rho, self.fit_quality))

    def feasible(self, R):
        """Can a coil at radius R reproduce the data (by the decay bound)?"""
        return bool(self.rho == np.inf or R < self.rho)

    def to_json(self):
        return {
            "rho": None if not np.isfinite(self.rho) else float(self.rho),
            "fit_quality": float(self.fit_quality),
            "flag": self.flag,
            "modes_used": int(self.modes_used),
        }


def analyticity_radius(f, *, noise_floor=NOISE_FLOOR, min_modes=MIN_MODES):
    """Estimate the decay radius of the Fourier coefficients of f.

    Fits ``log|f_k| = log C - k log rho`` by unweighted least squares over
    the modes ``k >= 1`` that sit above ``noise_floor * max|f_k|``.
    ``fit_quality`` is the R^2 of that fit.

    Flags
    -----
    ``"entire"``
        Fewer than ``min_modes`` usable modes and the series was supplied
        well past its last nonzero mode, so f is a trigonometric polynomial.
        ``rho`` is ``inf``.
    ``"no exterior coil exists"``
        The decay is not geometric (R^2 below 0.95) or not faster than ``1^-k``.
    ``"analytic"``
        Otherwise.

    Raises
    ------
    PreconditionError
        Too few usable modes to decide either way.
    """
    if not isinstance(f, FourierSeries):
        raise PreconditionError("analyticity_radius needs a FourierSeries")
    mag = np.abs(f.positive()[1:])
    k = np.arange(1, mag.size + 1)
    scale = mag.max() if mag.size else 0.0
    if scale == 0.0:
        return AnalyticityEstimate(np.inf, 1.0, "entire", 0)
    usable = mag > noise_floor * scale
    n_use = int(usable.sum())
    last = int(k[usable][-1])
    if n_use < min_modes:
        if f.k_max >= last + min_modes:
            return AnalyticityEstimate(np.inf, 1.0, "entire", n_use, extra={"last_mode": last})
        raise PreconditionError(
            f"only {n_use} Fourier modes above the {noise_floor:g} noise floor; need {min_modes}")
    x = k[usable].astype(float)
    y = np.log(mag[usable])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    rho = float(np.exp(-slope))
    flag = "analytic" if (r2 >= MIN_R2 and rho > 1.0) else "no exterior coil exists"
    if flag != "analytic":
        rho = min(rho, 1.0)
    return AnalyticityEstimate(rho, r2, flag, n_use, float(slope), float(intercept), {"last_mode": last})
