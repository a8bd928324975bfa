"""Complete elliptic integrals in the parameter convention ``m = k^2``.

``K(m) = int_0^{pi/2} (1 - m sin^2 t)^{-1/2} dt`` and
``E(m) = int_0^{pi/2} (1 - m sin^2 t)^{1/2} dt``, both evaluated with the
arithmetic-geometric mean.
"""

from __future__ import annotations

import numpy as np

from ..errors import PreconditionError

__all__ = ["elliptic_K", "elliptic_E", "elliptic_KE", "M_SINGULAR"]

#: parameters at or above this value are rejected by :func:`elliptic_K`
M_SINGULAR = 1.0 - 1e-12


def _agm(m):
    """Return ``(a_inf, sum 2^(n-1) c_n^2)`` for the AGM started at (1, sqrt(1-m))."""
    a = np.ones_like(m)
    b = np.sqrt(1.0 - m)
    c = np.sqrt(m)
    acc = 0.5 * c * c
    weight = 0.5
    done = np.zeros(np.shape(m), dtype=bool)
    for _ in range(64):
        a, b, c = 0.5 * (a + b), np.sqrt(a * b), 0.5 * (a - b)
        weight *= 2.0
        # once a and b agree to an ulp, c stalls at roundoff and must not be accumulated
        done = done | (np.abs(c) <= 4 * np.finfo(float).eps * a)
        acc = acc + np.where(done, 0.0, weight * c * c)
        if np.all(done):
            break
    return a, acc


def _as_array(m, upper, name):
    arr = np.asarray(m, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > upper):
        raise PreconditionError(f"{name}: parameter m must lie in [0, {upper!r}], got {m!r}")
    return arr


def elliptic_K(m):
    """First kind. Raises for ``m >= 1 - 1e-12`` where K diverges logarithmically."""
    arr = _as_array(m, 1.0, "elliptic_K")
    if np.any(arr >= M_SINGULAR):
        raise PreconditionError(f"elliptic_K: m={m!r} is too close to the logarithmic singularity at 1")
    a, _ = _agm(arr)
    out = np.pi / (2.0 * a)
    return float(out) if out.ndim == 0 else out


def elliptic_E(m):
    """Second kind on the closed interval ``[0, 1]``; ``E(1) = 1``."""
    arr = _as_array(m, 1.0, "elliptic_E")
    flat = np.atleast_1d(arr).astype(float)
    near = flat >= M_SINGULAR
    a, acc = _agm(np.where(near, 0.5, flat))
    out = np.pi / (2.0 * a) * (1.0 - acc)
    # within 1e-12 of the endpoint use E ~ 1 + (m1/2)(log(4/sqrt(m1)) - 1/2)
    m1 = 1.0 - flat[near]
    safe = np.where(m1 > 0, m1, 1.0)
    out[near] = 1.0 + np.where(m1 > 0, 0.5 * m1 * (0.5 * np.log(16.0 / safe) - 0.5), 0.0)
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def elliptic_KE(m):
    """Both integrals from one AGM sweep (``m < 1 - 1e-12``)."""
    arr = _as_array(m, 1.0, "elliptic_KE")
    if np.any(arr >= M_SINGULAR):
        raise PreconditionError(f"elliptic_KE: m={m!r} is too close to 1")
    a, acc = _agm(arr)
    K = np.pi / (2.0 * a)
    E = K * (1.0 - acc)
    if K.ndim == 0:
        return float(K), float(E)
    return K, E
