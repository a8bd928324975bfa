"""One-dimensional structure functions (G, F, H, pressure, A(r), ...).

A :class:`Profile` is a real function on an interval with first and second
derivatives. Several backends are supported:

* ``poly``      numpy Polynomial, derivatives exact
* ``cubic``     C^2 cubic spline through knots (scipy CubicSpline)
* ``expr``      sympy expression in one variable, derivatives symbolic
* ``callable``  user function; missing derivatives by central differences
"""

from __future__ import annotations

import numpy as np
import sympy
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline

from ..errors import PreconditionError

__all__ = ["Profile"]

_FD_STEP = 1e-5


class Profile:
    """Smooth scalar function of one variable with derivative access.

    Call as ``profile(x)`` or ``profile(x, nu=1)`` for derivatives (nu <= 2).
    """

    def __init__(self, kind, funcs, domain=(-np.inf, np.inf), meta=None):
        self.kind = kind
        self._funcs = funcs
        self.domain = (float(domain[0]), float(domain[1]))
        self.meta = meta or {}

    # ---- constructors -------------------------------------------------
    @classmethod
    def constant(cls, c):
        return cls.polynomial([c])

    @classmethod
    def linear(cls, slope, intercept=0.0):
        return cls.polynomial([intercept, slope])

    @classmethod
    def polynomial(cls, coeffs, domain=(-np.inf, np.inf)):
        """Polynomial with coefficients in increasing degree."""
        p = Polynomial(np.asarray(coeffs, dtype=float))
        funcs = (p, p.deriv(1), p.deriv(2))
        return cls("poly", funcs, domain, {"coeffs": [float(c) for c in p.coef]})

    @classmethod
    def from_knots(cls, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        order = np.argsort(x)
        x, y = x[order], y[order]
        if x.size < 4:
            raise PreconditionError("cubic profile needs at least 4 knots")
        if np.any(np.diff(x) <= 0):
            raise PreconditionError("profile knots must have distinct abscissae")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise PreconditionError("profile knots must be finite")
        s = CubicSpline(x, y)
        return cls("cubic", (s, s.derivative(1), s.derivative(2)), (x[0], x[-1]),
                   {"knots": np.column_stack([x, y]).tolist()})

    @classmethod
    def from_expr(cls, text, variable="a", domain=(-np.inf, np.inf)):
        """Parse e.g. ``"sin(a)"`` or ``"1 - a**2"`` with sympy."""
        sym = sympy.Symbol(variable, real=True)
        try:
            expr = sympy.sympify(text, locals={variable: sym})
        except (sympy.SympifyError, SyntaxError, TypeError) as exc:
            raise PreconditionError(f"cannot parse profile expression {text!r}: {exc}") from exc
        extra = expr.free_symbols - {sym}
        if extra:
            raise PreconditionError(f"profile expression {text!r} has unknown symbols {sorted(map(str, extra))}")
        funcs = tuple(_lambdify(sym, sympy.diff(expr, sym, n)) for n in range(3))
        return cls("expr", funcs, domain, {"expr": str(expr), "variable": variable})

    @classmethod
    def from_callable(cls, f, df=None, d2f=None, domain=(-np.inf, np.inf)):
        return cls("callable", (f, df, d2f), domain)

    # ---- evaluation ---------------------------------------------------
    def __call__(self, x, nu=0):
        if nu not in (0, 1, 2):
            raise PreconditionError("only derivatives up to order 2 are available")
        x = np.asarray(x, dtype=float)
        fn = self._funcs[nu]
        if fn is None:
            return self._finite_difference(x, nu)
        out = np.asarray(fn(x), dtype=float)
        return out * np.ones_like(x) if out.shape != x.shape else out

    def derivative(self, nu=1):
        """Return the derivative as a callable-kind Profile."""
        base = self
        return Profile.from_callable(lambda x: base(x, nu),
                                     (lambda x: base(x, nu + 1)) if nu < 2 else None,
                                     None, self.domain)

    def _finite_difference(self, x, nu):
        h = _FD_STEP * np.maximum(1.0, np.abs(x))
        if nu == 1:
            f = self._funcs[0]
            return (np.asarray(f(x + h)) - np.asarray(f(x - h))) / (2 * h)
        d1 = self._funcs[1]
        if d1 is not None:
            return (np.asarray(d1(x + h)) - np.asarray(d1(x - h))) / (2 * h)
        f = self._funcs[0]
        h = 1e-4 * np.maximum(1.0, np.abs(x))
        return (np.asarray(f(x + h)) - 2 * np.asarray(f(x)) + np.asarray(f(x - h))) / h ** 2

    # ---- serialization ------------------------------------------------
    def to_json(self, n_knots=65):
        """JSON form: a knot table plus the interpolation kind.

        Analytic kinds also record their exact definition, which takes
        precedence on reload.
        """
        obj = {"kind": self.kind}
        obj.update(self.meta)
        if "knots" not in obj:
            lo, hi = self.domain
            if not (np.isfinite(lo) and np.isfinite(hi)):
                lo, hi = -1.0, 1.0
            x = np.linspace(lo, hi, n_knots)
            obj["knots"] = np.column_stack([x, self(x)]).tolist()
            obj["knot_kind"] = "cubic"
        obj["domain"] = [_finite_or_none(v) for v in self.domain]
        return obj

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, (int, float)):
            return cls.constant(obj)
        if isinstance(obj, str):
            return cls.from_expr(obj)
        if not isinstance(obj, dict):
            raise PreconditionError(f"cannot build a profile from {type(obj).__name__}")
        dom = obj.get("domain") or [None, None]
        domain = (-np.inf if dom[0] is None else dom[0], np.inf if dom[1] is None else dom[1])
        if "expr" in obj:
            return cls.from_expr(obj["expr"], obj.get("variable", "a"), domain)
        if "coeffs" in obj:
            return cls.polynomial(obj["coeffs"], domain)
        if "knots" in obj:
            k = np.asarray(obj["knots"], dtype=float)
            if k.ndim != 2 or k.shape[1] != 2:
                raise PreconditionError("knots must be a list of [x, y] pairs")
            return cls.from_knots(k[:, 0], k[:, 1])
        raise PreconditionError("profile JSON needs one of 'expr', 'coeffs' or 'knots'")

    def __repr__(self):
        detail = self.meta.get("expr") or self.meta.get("coeffs") or ""
        if self.kind == "cubic":
            detail = f"{len(self.meta['knots'])} knots"
        return f"Profile({self.kind}, {detail})"


def _lambdify(sym, expr):
    fn = sympy.lambdify(sym, expr, modules="numpy")
    if not expr.free_symbols:
        value = float(expr)
        return lambda x: np.full(np.shape(x), value)
    return fn


def _finite_or_none(v):
    return float(v) if np.isfinite(v) else None
