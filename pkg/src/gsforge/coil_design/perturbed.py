"""Current density for a coil on a perturbed circle, by Neumann series.

For a general curve the density must satisfy, for ``k = 0 .. K``,

    T_k(j) = (1/2pi) int j(theta) |zeta'(theta)| zeta(theta)^(-k) dtheta = -f_k.

On the circle of the mean radius ``T_k`` is diagonal, ``R^(1-k) j_k``. Writing
``T = C + D`` with C that diagonal part, the density is the fixed point of
``j = C^-1 (-f - D j)``, which converges when ``||C^-1 D|| < 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core.fourier import FourierSeries
from ..errors import ConvergenceError, NeumannDivergenceError, PreconditionError
from .curve import CoilSheet, Curve, quadrature_nodes
from .sharpness import NOISE_FLOOR

__all__ = ["NeumannSeriesState", "design_coil_perturbed", "perturbation_operator"]

POWER_ITERATIONS = 20


@dataclass
class NeumannSeriesState:
    """Trace of the fixed-point solve."""

    iterate: FourierSeries
    residual: float
    operator_norm: float
    iterations: int
    history: list = field(default_factory=list)
    k_max: int = 0
    moment_error: float = float("nan")

    def to_json(self):
        return {
            "residual": self.residual,
            "operator_norm": self.operator_norm,
            "iterations": self.iterations,
            "k_max": self.k_max,
            "moment_error": self.moment_error,
            "history": list(self.history),
        }


def _to_real(jp):
    return np.concatenate([[jp[0].real], jp[1:].real, jp[1:].imag])


def _to_complex(x, K):
    return np.concatenate([[x[0]], x[1:K + 1] + 1j * x[K + 1:]])


def _l2(x, K):
    """L2 norm over the circle (per 2 pi) of the density with real coefficients x."""
    return float(np.sqrt(x[0] ** 2 + 2 * np.sum(x[1:] ** 2)))


def _moment_matrix(curve, K, n):
    """Real (2K+1)x(2K+1) matrix of ``T_k`` acting on ``(j_0, Re j_m, Im j_m)``."""
    th = quadrature_nodes(n)
    zeta = curve.zeta(th)
    speed = curve.speed(th)
    k = np.arange(K + 1)
    W = speed[None, :] * np.power.outer(1.0 / zeta, k).T / n       # (K+1, n)
    m = np.arange(1, K + 1)
    E = np.exp(1j * np.outer(th, m))                                 # (n, K)
    Tpos = W @ E                 # response of T_k to e^{i m th}
    Tneg = W @ np.conj(E)        # response to e^{-i m th}
    T0 = W.sum(axis=1)
    # j = j0 + sum_m (a_m + i b_m) e^{im th} + (a_m - i b_m) e^{-im th}
    cols_a = Tpos + Tneg
    cols_b = 1j * (Tpos - Tneg)
    Tc = np.hstack([T0[:, None], cols_a, cols_b])                    # complex (K+1, 2K+1)
    return np.vstack([Tc[:1].real, Tc[1:].real, Tc[1:].imag])


def perturbation_operator(curve, K, n=None):
    """Matrices ``(S, D)`` with ``S = C^-1`` (diagonal) and ``D = T - C``."""
    n = n or max(1024, 8 * (K + curve.radius.k_max) + 64)
    T = _moment_matrix(curve, K, n)
    R0 = curve.mean_radius
    k = np.concatenate([[0], np.arange(1, K + 1), np.arange(1, K + 1)])
    C = np.power(R0, 1.0 - k)
    return 1.0 / C, T - np.diag(C)


def _power_norm(P, iterations=POWER_ITERATIONS, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(P.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iterations):
        w = P.T @ (P @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        est = np.sqrt(nw)
        v = w / nw
    return float(est)


def _moment_error(curve, jp, f, K2):
    """``max_k |T_k(j) + f_k|`` over ``k = 0 .. K2`` with j zero-padded to K2 modes."""
    K = jp.size - 1
    x = _to_real(np.concatenate([jp, np.zeros(K2 - K)]))
    n = max(1024, 8 * (K2 + curve.radius.k_max) + 64)
    T = _moment_matrix(curve, K2, n)
    b = -_to_real(f.padded(K2).positive())
    return float(np.max(np.abs(T @ x - b)))


def _solve_fixed_point(S, D, b, K, tol, max_iter, norm, enforce):
    P = -(S[:, None] * D)
    x = S * b
    history = []
    for it in range(1, max_iter + 1):
        x_new = S * b + P @ x
        change = _l2(x_new - x, K)
        history.append(change)
        x = x_new
        if not np.all(np.isfinite(x)) or (not enforce and change > 1e12):
            raise ConvergenceError(
                f"Neumann series diverged after {it} iterations (operator norm estimate {norm:.4g})",
                residual=change, iterations=it)
        if change < tol:
            return x, history, it
    raise ConvergenceError(
        f"Neumann series did not reach tol={tol:g} in {max_iter} iterations (last change {history[-1]:.3g})",
        residual=history[-1], iterations=max_iter)


def design_coil_perturbed(f, curve, tol=1e-13, max_iter=50, *, k_max=None, enforce_norm=True):
    """Density on a non-circular curve reproducing Neumann data f.

    The truncation starts at ``max(2 K_f, 8)`` modes and doubles until the
    moment conditions hold on twice as many modes as were solved for. The
    density itself need not be band-limited; its high modes reach the
    boundary only through ``R^(1-k)`` and so barely matter.

    Parameters
    ----------
    f : FourierSeries
    curve : Curve
    tol : float
        Stop when successive iterates differ by less than this in L2.
    max_iter : int
    k_max : int, optional
        Fix the truncation instead of adapting it.
    enforce_norm : bool
        When False the operator-norm check is skipped and the iteration is
        run regardless (it then fails with ConvergenceError if it blows up).

    Raises
    ------
    NeumannDivergenceError
        The power-iteration estimate of ``||C^-1 D||`` is at least 1.
    ConvergenceError
        ``max_iter`` exceeded or the iterates blew up.
    """
    if not isinstance(curve, Curve):
        curve = Curve(curve)
    if not isinstance(f, FourierSeries):
        raise PreconditionError("boundary data must be a FourierSeries")
    f = f.trimmed(NOISE_FLOOR)
    Kf = f.k_max
    K = int(k_max) if k_max is not None else max(2 * Kf, 8)
    check_tol = 1e-12 * max(1.0, float(np.max(np.abs(f.coeffs))))
    while True:
        S, D = perturbation_operator(curve, K)
        norm = _power_norm(S[:, None] * D)
        if enforce_norm and norm >= 1.0:
            raise NeumannDivergenceError(
                f"perturbation operator norm estimate {norm:.4g} >= 1 at K={K}; "
                f"the curve is too far from a circle for the Neumann series",
                operator_norm=norm)
        b = -_to_real(f.padded(K).positive())
        x, history, its = _solve_fixed_point(S, D, b, K, tol, max_iter, norm, enforce_norm)
        jp = _to_complex(x, K)
        moment_error = _moment_error(curve, jp, f, 2 * K)
        if k_max is not None or moment_error <= check_tol or K >= 256:
            break
        K *= 2
    density = FourierSeries(np.concatenate([np.conj(jp[:0:-1]), jp])).trimmed(1e-16)
    state = NeumannSeriesState(density, history[-1], norm, its, history, K, moment_error)
    return CoilSheet(curve, density), state
