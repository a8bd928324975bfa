"""Structured grids and the field containers that live on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import PreconditionError

__all__ = ["PolarGrid", "RZGrid", "ScalarField", "VectorField", "ROLES"]

ROLES = frozenset({"A", "psi", "p", "q", "A_H", "A_ext", "u", "B", "B_ext", "rho", "other"})


class PolarGrid:
    """Tensor grid in ``(rho, theta)`` on a disk or an annulus.

    The disk variant (``PolarGrid.disk``) uses the staggered radii
    ``rho_i = (i - 1/2) h`` with ``h = r_max / (n_r - 1/2)``, so the last node
    sits exactly on the boundary and no node lies on the axis. Values just
    across the axis are obtained by reflection through the origin,
    ``f(-rho, theta) = f(rho, theta + pi)``, which is why ``n_theta`` must be
    even.

    The optional ``scale = (a, b)`` maps the computational disk to the
    ellipse ``x = a rho cos theta, y = b rho sin theta``. Operators in
    :mod:`gsforge.core.ops` account for this map.
    """

    def __init__(self, r_nodes, n_theta, *, has_axis, r_max=None, scale=(1.0, 1.0)):
        r = np.asarray(r_nodes, dtype=float)
        if r.ndim != 1 or r.size < 4:
            raise PreconditionError("need at least 4 radial nodes")
        if np.any(np.diff(r) <= 0) or r[0] <= 0:
            raise PreconditionError("radial nodes must be positive and strictly increasing")
        n_theta = int(n_theta)
        if n_theta < 4 or n_theta % 2:
            raise PreconditionError(f"n_theta must be even and >= 4, got {n_theta}")
        dr = np.diff(r)
        if not np.allclose(dr, dr[0], rtol=1e-10, atol=0):
            raise PreconditionError("radial nodes must be uniformly spaced")
        a, b = (float(s) for s in scale)
        if a <= 0 or b <= 0:
            raise PreconditionError("scale factors must be positive")
        self.r = r
        self.r.setflags(write=False)
        self.n_r = r.size
        self.n_theta = n_theta
        self.dr = float((r[-1] - r[0]) / (r.size - 1))
        self.dtheta = 2 * np.pi / n_theta
        self.theta = self.dtheta * np.arange(n_theta)
        self.theta.setflags(write=False)
        self.has_axis = bool(has_axis)
        self.r_max = float(r[-1] if r_max is None else r_max)
        self.scale = (a, b)

    @classmethod
    def disk(cls, n_r, n_theta, r_max=1.0, scale=(1.0, 1.0)):
        n_r = int(n_r)
        h = r_max / (n_r - 0.5)
        r = (np.arange(1, n_r + 1) - 0.5) * h
        r[-1] = r_max
        return cls(r, n_theta, has_axis=True, r_max=r_max, scale=scale)

    @classmethod
    def annulus(cls, r_in, r_out, n_r, n_theta):
        if not 0 < r_in < r_out:
            raise PreconditionError("annulus needs 0 < r_in < r_out")
        return cls(np.linspace(r_in, r_out, int(n_r)), n_theta, has_axis=False)

    # ---- geometry -----------------------------------------------------
    @property
    def shape(self):
        return (self.n_r, self.n_theta)

    @property
    def is_scaled(self):
        return self.scale != (1.0, 1.0)

    @property
    def h(self):
        """Representative mesh width in physical units."""
        return self.dr * max(self.scale)

    def mesh(self):
        return np.meshgrid(self.r, self.theta, indexing="ij")

    def cartesian(self):
        R, T = self.mesh()
        a, b = self.scale
        return a * R * np.cos(T), b * R * np.sin(T)

    def physical_radius(self):
        x, y = self.cartesian()
        return np.hypot(x, y)

    def same_as(self, other):
        return (
            isinstance(other, PolarGrid)
            and self.shape == other.shape
            and self.has_axis == other.has_axis
            and self.scale == other.scale
            and np.array_equal(self.r, other.r)
        )

    def __eq__(self, other):
        return self.same_as(other)

    def __hash__(self):
        return hash((self.shape, self.has_axis, self.scale, self.r.tobytes()))

    def __repr__(self):
        kind = "disk" if self.has_axis else "annulus"
        extra = f", scale={self.scale}" if self.is_scaled else ""
        return f"PolarGrid({kind}, n_r={self.n_r}, n_theta={self.n_theta}, r=[{self.r[0]:.4g}, {self.r[-1]:.4g}]{extra})"

    def sample(self, func):
        """Evaluate ``func(x, y)`` at every node."""
        x, y = self.cartesian()
        return np.asarray(func(x, y), dtype=float) * np.ones(self.shape)

    def sample_polar(self, func):
        """Evaluate ``func(r, theta)`` at every node (unscaled grids)."""
        R, T = self.mesh()
        return np.asarray(func(R, T), dtype=float) * np.ones(self.shape)


class RZGrid:
    """Uniform tensor grid in the meridional half-plane ``(r, z)``, r > 0."""

    def __init__(self, r, z):
        r = np.asarray(r, dtype=float)
        z = np.asarray(z, dtype=float)
        if r.ndim != 1 or z.ndim != 1 or r.size < 4 or z.size < 4:
            raise PreconditionError("RZGrid needs at least 4 nodes per direction")
        if r[0] <= 0:
            raise PreconditionError("RZGrid must stay off the axis (r_min > 0)")
        for arr, name in ((r, "r"), (z, "z")):
            d = np.diff(arr)
            if np.any(d <= 0) or not np.allclose(d, d[0], rtol=1e-10, atol=0):
                raise PreconditionError(f"{name} nodes must be uniform and increasing")
        self.r, self.z = r, z
        self.r.setflags(write=False)
        self.z.setflags(write=False)
        self.dr = float(r[1] - r[0])
        self.dz = float(z[1] - z[0])

    @classmethod
    def uniform(cls, r_range, z_range, n_r, n_z):
        r_lo, r_hi = r_range
        if r_lo <= 0:
            r_lo = 1e-3 * r_hi
        return cls(np.linspace(r_lo, r_hi, int(n_r)), np.linspace(z_range[0], z_range[1], int(n_z)))

    @property
    def shape(self):
        return (self.r.size, self.z.size)

    @property
    def h(self):
        return max(self.dr, self.dz)

    def mesh(self):
        return np.meshgrid(self.r, self.z, indexing="ij")

    def sample(self, func):
        R, Z = self.mesh()
        return np.asarray(func(R, Z), dtype=float) * np.ones(self.shape)

    def same_as(self, other):
        return isinstance(other, RZGrid) and np.array_equal(self.r, other.r) and np.array_equal(self.z, other.z)

    def __eq__(self, other):
        return self.same_as(other)

    def __hash__(self):
        return hash((self.r.tobytes(), self.z.tobytes()))

    def __repr__(self):
        return (f"RZGrid(r=[{self.r[0]:.4g}, {self.r[-1]:.4g}] x {self.r.size}, "
                f"z=[{self.z[0]:.4g}, {self.z[-1]:.4g}] x {self.z.size})")


def _check_role(role):
    if role not in ROLES:
        raise PreconditionError(f"unknown field role {role!r}; expected one of {sorted(ROLES)}")
    return role


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Node values of a scalar quantity on a :class:`PolarGrid` or :class:`RZGrid`."""

    grid: object
    values: np.ndarray
    role: str = "other"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise PreconditionError(f"values of shape {v.shape} do not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise PreconditionError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        _check_role(self.role)

    @classmethod
    def from_function(cls, grid, func, role="other"):
        """Sample ``func(x, y)`` (polar grids) or ``func(r, z)`` (RZ grids)."""
        return cls(grid, grid.sample(func), role)

    def with_values(self, values, role=None):
        return ScalarField(self.grid, values, role or self.role)

    def boundary_values(self):
        """Values on the outermost ring (polar grids)."""
        return self.values[-1]

    def axis_value(self):
        """Axis value estimated by averaging the innermost ring."""
        if not getattr(self.grid, "has_axis", False):
            raise PreconditionError("grid has no axis")
        return float(self.values[0].mean())

    def __add__(self, other):
        o = other.values if isinstance(other, ScalarField) else other
        return self.with_values(self.values + o, "other")

    def __sub__(self, other):
        o = other.values if isinstance(other, ScalarField) else other
        return self.with_values(self.values - o, "other")

    def __mul__(self, other):
        o = other.values if isinstance(other, ScalarField) else other
        return self.with_values(self.values * o, "other")

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def max_abs(self):
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class VectorField:
    """Vector field stored by components in a local orthonormal frame.

    On a :class:`PolarGrid` the frame is ``("r", "theta")``; for axisymmetric
    fields on an :class:`RZGrid` it is ``("r", "phi", "z")``. A polar field
    may carry an additional out-of-plane ``"z"`` component.
    """

    grid: object
    components: dict
    role: str = "other"
    frame: tuple = field(default=("r", "theta"))

    def __post_init__(self):
        comps = {}
        for name in self.frame:
            if name not in self.components:
                raise PreconditionError(f"missing component {name!r} for frame {self.frame}")
        for name, arr in self.components.items():
            a = np.array(arr, dtype=float) * np.ones(self.grid.shape)
            if a.shape != self.grid.shape:
                raise PreconditionError(f"component {name!r} has shape {a.shape}, grid is {self.grid.shape}")
            if not np.all(np.isfinite(a)):
                raise PreconditionError(f"component {name!r} has non-finite values")
            a.setflags(write=False)
            comps[name] = a
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "frame", tuple(self.frame))
        _check_role(self.role)

    def __getitem__(self, name):
        return self.components[name]

    def get(self, name, default=0.0):
        return self.components.get(name, np.zeros(self.grid.shape) + default)

    def norm_squared(self):
        return sum(c * c for c in self.components.values())

    def norm(self):
        return np.sqrt(self.norm_squared())

    def cartesian(self):
        """In-plane Cartesian components ``(v_x, v_y)``."""
        if self.frame[:2] == ("x", "y"):
            return self["x"], self["y"]
        if self.frame[:2] != ("r", "theta"):
            raise PreconditionError("cartesian() needs a planar frame")
        _, T = self.grid.mesh()
        vr, vt = self["r"], self["theta"]
        c, s = np.cos(T), np.sin(T)
        return vr * c - vt * s, vr * s + vt * c

    def scaled(self, factor):
        if isinstance(factor, ScalarField):
            factor = factor.values
        return VectorField(self.grid, {k: v * factor for k, v in self.components.items()}, self.role, self.frame)
