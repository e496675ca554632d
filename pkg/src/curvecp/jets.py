"""Forward-mode jets carrying values and derivatives in (kx, ky).

A :class:`Jet` stores an array-valued quantity together with its first and
second partial derivatives with respect to the two transverse momentum
components.  Propagating jets through the planar scattering chain yields the
momentum derivatives required by the gradient and Hessian insertions of the
curvature expansion without any finite-difference noise; the independent
finite-difference route (:func:`curvecp.quadrature.fd_jet`) is kept as a
cross-check, not a fallback.

Scalars are arrays of any shape; matrices use the two trailing axes, with
leading axes treated as the quadrature batch.  Use :meth:`Jet.widen` before
multiplying a scalar jet into a matrix jet.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Jet", "jmat", "jblock"]

_FIELDS = ("v", "x", "y", "xx", "xy", "yy")


@dataclass(frozen=True)
class Jet:
    """Value and (kx, ky)-derivatives to second order."""

    v: np.ndarray
    x: np.ndarray
    y: np.ndarray
    xx: np.ndarray
    xy: np.ndarray
    yy: np.ndarray

    # Make ndarray <op> Jet defer to the reflected methods below instead of
    # broadcasting the jet into an object array.
    __array_ufunc__ = None

    # -- construction ------------------------------------------------------

    @staticmethod
    def const(value) -> "Jet":
        v = np.asarray(value, dtype=np.complex128)
        z = np.zeros_like(v)
        return Jet(v, z, z, z, z, z)

    @staticmethod
    def seed_x(value) -> "Jet":
        v = np.asarray(value, dtype=np.complex128)
        z = np.zeros_like(v)
        return Jet(v, np.ones_like(v), z, z, z, z)

    @staticmethod
    def seed_y(value) -> "Jet":
        v = np.asarray(value, dtype=np.complex128)
        z = np.zeros_like(v)
        return Jet(v, z, np.ones_like(v), z, z, z)

    def _map(self, fn) -> "Jet":
        return Jet(*(fn(getattr(self, f)) for f in _FIELDS))

    def widen(self) -> "Jet":
        """Append two singleton axes so a scalar jet broadcasts over matrices."""
        return self._map(lambda a: a[..., None, None])

    # -- linear structure ---------------------------------------------------

    def __add__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return Jet(*(getattr(self, f) + getattr(other, f) for f in _FIELDS))
        return Jet(self.v + other, self.x, self.y, self.xx, self.xy, self.yy)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return self._map(np.negative)

    def __sub__(self, other) -> "Jet":
        return self + (-other if isinstance(other, Jet) else -np.asarray(other))

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    # -- products -----------------------------------------------------------

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return self._map(lambda a: a * other)
        a, b = self, other
        return Jet(
            a.v * b.v,
            a.x * b.v + a.v * b.x,
            a.y * b.v + a.v * b.y,
            a.xx * b.v + 2.0 * a.x * b.x + a.v * b.xx,
            a.xy * b.v + a.x * b.y + a.y * b.x + a.v * b.xy,
            a.yy * b.v + 2.0 * a.y * b.y + a.v * b.yy,
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return self._map(lambda a: a / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "Jet":
        return self.reciprocal() * other

    def __matmul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return self._map(lambda a: a @ other)
        a, b = self, other
        return Jet(
            a.v @ b.v,
            a.x @ b.v + a.v @ b.x,
            a.y @ b.v + a.v @ b.y,
            a.xx @ b.v + 2.0 * (a.x @ b.x) + a.v @ b.xx,
            a.xy @ b.v + a.x @ b.y + a.y @ b.x + a.v @ b.xy,
            a.yy @ b.v + 2.0 * (a.y @ b.y) + a.v @ b.yy,
        )

    def __rmatmul__(self, other) -> "Jet":
        return self._map(lambda a: other @ a)

    # -- smooth functions -----------------------------------------------------

    def _chain(self, f0, f1, f2) -> "Jet":
        u = self
        return Jet(
            f0,
            f1 * u.x,
            f1 * u.y,
            f2 * u.x * u.x + f1 * u.xx,
            f2 * u.x * u.y + f1 * u.xy,
            f2 * u.y * u.y + f1 * u.yy,
        )

    def sqrt(self) -> "Jet":
        r = np.sqrt(self.v)
        return self._chain(r, 0.5 / r, -0.25 / (r * self.v))

    def exp(self) -> "Jet":
        e = np.exp(self.v)
        return self._chain(e, e, e)

    def reciprocal(self) -> "Jet":
        inv = 1.0 / self.v
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def inv(self) -> "Jet":
        """Inverse of a matrix jet (batched over leading axes)."""
        g = self
        f = np.linalg.inv(g.v)

        def sandwich(d):
            return -(f @ d @ f)

        fx = sandwich(g.x)
        fy = sandwich(g.y)
        fxx = -(fx @ g.x @ f + f @ g.x @ fx) - f @ g.xx @ f
        fyy = -(fy @ g.y @ f + f @ g.y @ fy) - f @ g.yy @ f
        fxy = -(fy @ g.x @ f + f @ g.x @ fy) - f @ g.xy @ f
        return Jet(f, fx, fy, fxx, fxy, fyy)

    @property
    def T(self) -> "Jet":
        return self._map(lambda a: np.swapaxes(a, -1, -2))


def jmat(rows) -> Jet:
    """Assemble a matrix jet from a 2-D list of scalar jets and constants."""
    ref = next(e for row in rows for e in row if isinstance(e, Jet))
    shape = np.asarray(ref.v).shape

    def entry_field(e, fname):
        if isinstance(e, Jet):
            return np.asarray(getattr(e, fname), dtype=np.complex128)
        if fname == "v":
            return np.full(shape, e, dtype=np.complex128)
        return np.zeros(shape, dtype=np.complex128)

    fields = []
    for fname in _FIELDS:
        mat = np.stack(
            [np.stack([entry_field(e, fname) for e in row], axis=-1) for row in rows],
            axis=-2,
        )
        fields.append(mat)
    return Jet(*fields)


def jblock(blocks) -> Jet:
    """Stack matrix jets into one larger matrix jet, per field."""
    return Jet(
        *(
            np.block([[getattr(b, f) for b in row] for row in blocks])
            for f in _FIELDS
        )
    )
