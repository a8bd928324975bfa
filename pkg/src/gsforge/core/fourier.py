"""Real-valued truncated Fourier series on the circle.

Convention: ``f(theta) = sum_k f_k exp(i k theta)`` with
``f_k = (1/2pi) int f exp(-i k theta) dtheta``.
"""

from __future__ import annotations

import numpy as np

from ..errors import PreconditionError

__all__ = ["FourierSeries", "fourier_analyze"]


class FourierSeries:
    """Truncated Fourier series of a real function of angle.

    Coefficients are stored densely for ``k = -K_max .. K_max``. On
    construction the array is checked for conjugate symmetry and then
    symmetrized exactly, so ``coeff(-k) == conj(coeff(k))`` holds bitwise.

    Parameters
    ----------
    coeffs : array_like of complex, length ``2*K_max + 1``
        Coefficients ordered from ``k = -K_max`` to ``k = K_max``.
    atol : float, optional
        Absolute tolerance (relative to the largest coefficient) allowed for
        conjugate-symmetry violations before they are treated as an error.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs, *, atol=1e-10):
        c = np.asarray(coeffs, dtype=complex).ravel()
        if c.size % 2 != 1:
            raise PreconditionError("coefficient array must have odd length 2*K_max+1")
        if not np.all(np.isfinite(c)):
            raise PreconditionError("Fourier coefficients must be finite")
        mirrored = np.conj(c[::-1])
        scale = max(np.max(np.abs(c)), 1e-300)
        if np.max(np.abs(c - mirrored)) > atol * scale:
            raise PreconditionError("coefficients are not conjugate-symmetric (series not real)")
        c = 0.5 * (c + mirrored)
        K = c.size // 2
        c[K] = c[K].real
        c.setflags(write=False)
        self._c = c

    # ---- constructors -------------------------------------------------
    @classmethod
    def from_modes(cls, modes, k_max=None):
        """Build from a ``{k: value}`` mapping; negative modes are filled by symmetry.

        If both ``k`` and ``-k`` are given they must be conjugates.
        """
        modes = {int(k): complex(v) for k, v in dict(modes).items()}
        K = max([abs(k) for k in modes] + [0]) if k_max is None else int(k_max)
        c = np.zeros(2 * K + 1, dtype=complex)
        for k, v in modes.items():
            if abs(k) > K:
                raise PreconditionError(f"mode {k} exceeds K_max={K}")
            c[K + k] = v
            if -k not in modes:
                c[K - k] = np.conj(v)
        return cls(c)

    @classmethod
    def constant(cls, value):
        return cls([complex(value)])

    @classmethod
    def cosine(cls, k, amplitude=1.0):
        """``amplitude * cos(k theta)``."""
        k = abs(int(k))
        if k == 0:
            return cls.constant(amplitude)
        return cls.from_modes({k: amplitude / 2, -k: amplitude / 2})

    @classmethod
    def from_function(cls, func, k_max, n_samples=None):
        """Sample ``func`` on a uniform grid and analyse it."""
        n = n_samples or max(4 * int(k_max) + 4, 64)
        theta = 2 * np.pi * np.arange(n) / n
        return fourier_analyze(np.asarray(func(theta), dtype=float), k_max)

    # ---- accessors ----------------------------------------------------
    @property
    def k_max(self):
        return self._c.size // 2

    @property
    def coeffs(self):
        """Read-only dense array, index ``k + K_max``."""
        return self._c

    @property
    def modes(self):
        return np.arange(-self.k_max, self.k_max + 1)

    @property
    def mean(self):
        return float(self._c[self.k_max].real)

    def coeff(self, k):
        k = int(k)
        if abs(k) > self.k_max:
            return 0j
        return complex(self._c[self.k_max + k])

    def __getitem__(self, k):
        return self.coeff(k)

    def positive(self):
        """Coefficients for ``k = 0 .. K_max``."""
        return self._c[self.k_max:]

    # ---- evaluation ---------------------------------------------------
    def __call__(self, theta):
        return self.evaluate(theta)

    def evaluate(self, theta, derivative=0):
        """Evaluate the series (or a derivative) by direct summation.

        Cost is O(N K); evaluation is chunked to bound memory.
        """
        theta = np.asarray(theta, dtype=float)
        flat = theta.ravel()
        cp = self.positive()
        k = np.arange(cp.size)
        weight = (1j * k) ** derivative if derivative else np.ones(cp.size)
        a = cp * weight
        out = np.empty(flat.size)
        chunk = max(1, 2_000_000 // max(cp.size, 1))
        for s in range(0, flat.size, chunk):
            th = flat[s:s + chunk]
            e = np.exp(1j * np.outer(th, k[1:]))
            out[s:s + chunk] = a[0].real + 2.0 * (e @ a[1:]).real
        return out.reshape(theta.shape)

    def derivative(self, order=1):
        k = self.modes
        return FourierSeries(self._c * (1j * k) ** order)

    # ---- algebra ------------------------------------------------------
    def _aligned(self, other):
        K = max(self.k_max, other.k_max)
        return self.padded(K)._c, other.padded(K)._c

    def padded(self, k_max):
        k_max = int(k_max)
        if k_max < self.k_max:
            return self.truncated(k_max)
        pad = k_max - self.k_max
        return FourierSeries(np.pad(self._c, pad))

    def truncated(self, k_max):
        k_max = int(k_max)
        if k_max >= self.k_max:
            return self.padded(k_max)
        K = self.k_max
        return FourierSeries(self._c[K - k_max:K + k_max + 1])

    def trimmed(self, rel_tol=1e-14):
        """Drop trailing modes whose magnitude is below ``rel_tol * max|c|``."""
        cp = np.abs(self.positive())
        scale = cp.max()
        if scale == 0:
            return FourierSeries.constant(0.0)
        keep = np.nonzero(cp > rel_tol * scale)[0]
        return self.truncated(int(keep[-1]) if keep.size else 0)

    def __add__(self, other):
        if np.isscalar(other):
            other = FourierSeries.constant(other)
        a, b = self._aligned(other)
        return FourierSeries(a + b)

    __radd__ = __add__

    def __neg__(self):
        return FourierSeries(-self._c)

    def __sub__(self, other):
        return self + (-other if isinstance(other, FourierSeries) else -other)

    def __mul__(self, scalar):
        if isinstance(scalar, FourierSeries):
            return FourierSeries(np.convolve(self._c, scalar._c))
        if not np.isreal(scalar):
            raise PreconditionError("only real scalars preserve real-valuedness")
        return FourierSeries(self._c * float(np.real(scalar)))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, FourierSeries):
            return NotImplemented
        a, b = self._aligned(other)
        return bool(np.array_equal(a, b))

    def __hash__(self):
        return hash(self._c.tobytes())

    def allclose(self, other, atol=1e-12):
        a, b = self._aligned(other)
        return bool(np.max(np.abs(a - b)) <= atol)

    def __repr__(self):
        nz = [(int(k), c) for k, c in zip(self.modes, self._c) if k >= 0 and abs(c) > 0]
        body = ", ".join(f"{k}: {c.real:.6g}{c.imag:+.6g}j" for k, c in nz[:6])
        more = ", ..." if len(nz) > 6 else ""
        return f"FourierSeries(K_max={self.k_max}, {{{body}{more}}})"

    # ---- serialization ------------------------------------------------
    def to_json(self):
        cp = self.positive()
        return {"k_max": self.k_max, "re": cp.real.tolist(), "im": cp.imag.tolist()}

    @classmethod
    def from_json(cls, obj):
        cp = np.asarray(obj["re"], float) + 1j * np.asarray(obj["im"], float)
        return cls(np.concatenate([np.conj(cp[:0:-1]), cp]))


def fourier_analyze(samples, k_max):
    """Fourier coefficients of real samples taken at ``theta_j = 2 pi j / N``.

    Uses the DFT (trapezoid rule), which is exact for trigonometric
    polynomials of degree ``<= K_max`` whenever ``N >= 2 K_max + 1``.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    k_max = int(k_max)
    n = samples.size
    if k_max < 0:
        raise PreconditionError("K_max must be non-negative")
    if n < 2 * k_max + 1:
        raise PreconditionError(f"need at least {2 * k_max + 1} samples for K_max={k_max}, got {n}")
    if not np.all(np.isfinite(samples)):
        raise PreconditionError("samples must be finite")
    cp = np.fft.rfft(samples)[:k_max + 1] / n
    return FourierSeries(np.concatenate([np.conj(cp[:0:-1]), cp]))
