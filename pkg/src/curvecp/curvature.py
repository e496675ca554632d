"""Distance-scaled response coefficients of a gently curved interface.

Every coefficient is a dimensionless radial integral over transverse
momentum at fixed imaginary-frequency wavenumber ``kappabar``.  The flat
pair ``(beta1_0, beta2_0)`` comes from closed-form reflection integrands and
serves as the independent cross-check for the scattering-chain evaluation;
the curvature triple ``(beta1_2, beta2_2, beta3_2)`` is extracted from the
chain's first-order response to quadratic height patches.

The radial integrals substitute the ambient decay rate for the momentum
magnitude (``t**2 = kbar**2 + eps0 mu0 kappabar**2``), which makes the
integrand a smooth, exponentially damped function on ``t >= t0`` regardless
of ``kappabar``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import PatternViolation, QuadratureNonConvergence
from .kernels import (
    _free_part,
    _interface_legs,
    _pec_interface_legs,
    _surface_part,
    _vertex_couplings,
    gamma0_integrand,
    gamma1_integrand,
    gamma1_probe_integrand,
    pec_gamma0_integrand,
    pec_gamma1_integrand,
    pec_gamma1_probe_integrand,
)
from .materials import MediumResponse
from .quadrature import (
    DEFAULT_PANEL_OFFSETS,
    fd_jet,
    integrate_with_doubling,
    panel_rule,
    phi_nodes,
)

__all__ = [
    "BetaSet",
    "SurfacePatchExpansion",
    "beta0",
    "gamma0_bracket",
    "gamma1_assemble",
    "beta2",
    "beta2_oracle",
    "beta_set",
]

# Azimuthal resolution: the integrand's harmonic content is bounded well
# below this, so the uniform-grid average is exact to rounding.
_NPHI = 20
_NPHI_ORACLE = 48


@dataclass(frozen=True)
class SurfacePatchExpansion:
    """Second derivatives of the surface height at the contact point.

    ``h12`` is the mixed derivative and enters the profile twice; a patch in
    the principal-curvature frame has ``h12 = 0`` and diagonal entries equal
    to the inverse curvature radii.
    """

    h11: float
    h22: float
    h12: float = 0.0

    @classmethod
    def principal(cls, r1: float, r2: float) -> "SurfacePatchExpansion":
        return cls(h11=1.0 / r1, h22=1.0 / r2, h12=0.0)


@dataclass(frozen=True)
class BetaSet:
    """All five response coefficients at one wavenumber."""

    kappabar: float
    beta1_0: float
    beta2_0: float
    beta1_2: float
    beta2_2: float
    beta3_2: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.beta1_0, self.beta2_0, self.beta1_2, self.beta2_2, self.beta3_2]
        )


def _decay_floor(kappabar: float, media: MediumResponse) -> float:
    return math.sqrt(media.eps0 * media.mu0) * kappabar


# ---------------------------------------------------------------------------
# flat coefficients: closed-form reflection integrands
# ---------------------------------------------------------------------------


def _beta0_density(kbar, kappabar, media: MediumResponse):
    """Densities g such that the flat integrands are ``kbar * g(kbar)``.

    Keeping the measure factor outside lets the decay-substituted quadrature
    evaluate ``t * g`` without ever dividing by the momentum.
    """
    e0, m0, e1, m1 = media.eps0, media.mu0, media.eps1, media.mu1
    kb2 = kappabar**2
    k2 = np.asarray(kbar, dtype=float) ** 2
    s0 = np.sqrt(k2 + e0 * m0 * kb2)
    s1 = np.sqrt(k2 + e1 * m1 * kb2)
    damp = np.exp(-2.0 * s0)

    num1 = (
        2.0 * kb2**2 * m0**2 * e0**2 * s1 * (m0 * e1 - m1 * e0)
        + 3.0 * kb2 * k2 * m0 * e0 * s1 * (m0 * e1 - m1 * e0)
        + k2**2 * (e1 * (m1 * s0 + m0 * s1) - e0 * (m0 * s0 + m1 * s1))
    )
    den1 = (
        2.0
        * e0
        * s0**2
        * (
            m1 * e0 * (s0 * s1 + 2.0 * kb2 * m0 * e1)
            + m0 * e1 * s0 * s1
            + k2 * (m0 * e0 + m1 * e1)
        )
    )
    num2 = k2**2 * (m1 * e1 - m0 * e0) + k2 * s0 * s1 * (m0 * e1 - m1 * e0)
    den2 = e0 * s0 * (
        k2 * (m0 * e0 + m1 * e1)
        + m1 * e0 * (s0 * s1 + 2.0 * kb2 * m0 * e1)
        + m0 * s0 * s1 * e1
    )
    return damp * num1 / den1, damp * num2 / den2


def _beta0_pec(kappabar: float, media: MediumResponse) -> tuple[float, float]:
    """Conductor limit in closed form (any ambient medium)."""
    a = _decay_floor(kappabar, media)
    damp = math.exp(-2.0 * a)
    b1 = damp * (0.125 + 0.25 * a + 0.5 * a * a) / media.eps0
    b2 = damp * (0.25 + 0.5 * a) / media.eps0
    return b1, b2


def beta0(
    kappabar: float, media: MediumResponse, rel_tol: float = 1e-9
) -> tuple[float, float]:
    """Flat-surface coefficients ``(beta1_0, beta2_0)`` at one wavenumber.

    Evaluated by adaptive quadrature of the reflection integrands after the
    decay-rate substitution, with a tanh-sinh fallback; raises
    QuadratureNonConvergence reporting the achieved error if both fail to
    reach ``rel_tol``.
    """
    if kappabar < 0.0:
        raise ValueError("kappabar must be >= 0")
    if media.is_pec:
        return _beta0_pec(kappabar, media)

    t0 = _decay_floor(kappabar, media)
    em = media.eps0 * media.mu0

    results = []
    for which in (0, 1):

        def f(t):
            # measure: kbar dkbar = t dt with t the ambient decay rate
            t = np.asarray(t, dtype=float)
            kbar = np.sqrt(np.maximum(t * t - em * kappabar**2, 0.0))
            return t * _beta0_density(kbar, kappabar, media)[which]

        value, err = integrate.quad(
            lambda t: float(f(t)), t0, t0 + 45.0, epsabs=0.0, epsrel=0.1 * rel_tol,
            limit=200,
        )
        scale = max(abs(value), 1e-300)
        if not math.isfinite(value) or err > rel_tol * scale:
            res = integrate.tanhsinh(f, t0, t0 + 45.0, rtol=0.1 * rel_tol)
            value, err = float(res.integral), float(res.error)
            if not res.success or err > rel_tol * max(abs(value), 1e-300):
                raise QuadratureNonConvergence(
                    f"flat coefficient quadrature achieved relative error "
                    f"{err / max(abs(value), 1e-300):.3e} (target {rel_tol:.1e})"
                )
        results.append(value)
    return results[0], results[1]


# ---------------------------------------------------------------------------
# chain contraction: radial x azimuthal quadrature of integrand matrices
# ---------------------------------------------------------------------------


def _layered_offsets(kappabar: float, media: MediumResponse) -> tuple[float, ...]:
    """Panel edges with extra resolution for the small-wavenumber layer.

    Just above the lower integration limit the electric and magnetic sectors
    mix over a region of width ~ sqrt(eps0 mu0) * kappabar; when that layer
    is much thinner than the first default panel, dedicated sub-panels keep
    the node-doubling estimate converging instead of stalling on it.
    """
    layer = _decay_floor(kappabar, media)
    if not 0.0 < layer < 0.05:
        return DEFAULT_PANEL_OFFSETS
    extra = tuple(m * layer for m in (2.0, 8.0, 32.0) if m * layer < 0.25)
    return (0.0, *extra, *DEFAULT_PANEL_OFFSETS[1:])


def _contract(integrand, kappabar, media, rel_tol, nphi, n_start=16):
    """2 * int kbar dkbar <integrand>_phi, radial rule with doubling.

    The absolute floor keeps identically vanishing brackets (zero contrast)
    from chasing an unreachable relative target.
    """
    t0 = _decay_floor(kappabar, media)
    em = media.eps0 * media.mu0
    phis = phi_nodes(nphi)

    def f(tnodes):
        t = np.asarray(tnodes, dtype=float)
        kbar = np.sqrt(np.maximum(t * t - em * kappabar**2, 0.0))
        kk = np.repeat(kbar, nphi)
        pp = np.tile(phis, t.size)
        vals = integrand(kk, pp)
        vals = vals.reshape(t.size, nphi, *vals.shape[1:]).mean(axis=1)
        return t.reshape(t.size, *([1] * (vals.ndim - 1))) * vals

    value, _ = integrate_with_doubling(
        f,
        t0,
        rel_tol=rel_tol,
        abs_tol=1e-14,
        n_start=n_start,
        offsets=_layered_offsets(kappabar, media),
    )
    return 2.0 * value


def _require_real(mat: np.ndarray, what: str, tol: float = 1e-10) -> np.ndarray:
    scale = max(float(np.max(np.abs(mat))), 1e-30)
    if float(np.max(np.abs(mat.imag))) > tol * scale:
        raise PatternViolation(f"{what} has a spurious imaginary part")
    return mat.real


def gamma0_bracket(
    kappabar: float, media: MediumResponse, rel_tol: float = 1e-9
) -> np.ndarray:
    """Flat bracket matrix diag(beta1_0, beta1_0, beta2_0) from the chain.

    This is the scattering-chain route to the same numbers as ``beta0`` and
    exists as its consistency partner.
    """
    if media.is_pec:

        def integrand(kk, pp):
            return pec_gamma0_integrand(
                kk, pp, kappabar, media.eps0, media.mu0, media.mu1
            )

    else:

        def integrand(kk, pp):
            return gamma0_integrand(
                kk, pp, kappabar, media.eps0, media.mu0, media.eps1, media.mu1
            )

    bracket = _contract(integrand, kappabar, media, rel_tol, _NPHI)
    return _require_real(bracket, "flat bracket")


def gamma1_assemble(
    kappabar: float,
    media: MediumResponse,
    patch: SurfacePatchExpansion,
    rel_tol: float = 1e-8,
    nphi: int = _NPHI,
) -> np.ndarray:
    """Curvature bracket matrix for one quadratic height patch.

    The assembled matrix must be symmetric with no (x,z)/(y,z) coupling; a
    violation beyond 1e-10 of the matrix norm flags an internal-consistency
    failure, not a user error.
    """
    triple = (patch.h11, patch.h12, patch.h22)
    if media.is_pec:

        def integrand(kk, pp):
            return pec_gamma1_integrand(
                kk, pp, kappabar, media.eps0, media.mu0, media.mu1, triple
            )

    else:

        def integrand(kk, pp):
            return gamma1_integrand(
                kk, pp, kappabar, media.eps0, media.mu0, media.eps1, media.mu1, triple
            )

    bracket = _contract(integrand, kappabar, media, rel_tol, nphi)
    return _check_bracket(_require_real(bracket, "curvature bracket"))


def _check_bracket(bracket: np.ndarray) -> np.ndarray:
    """Enforce the structural layout of an assembled curvature bracket."""
    scale = max(float(np.max(np.abs(bracket))), 1e-30)
    off = max(abs(bracket[0, 2]), abs(bracket[2, 0]), abs(bracket[1, 2]), abs(bracket[2, 1]))
    if off > 1e-10 * scale:
        raise PatternViolation(
            f"curvature bracket has forbidden (x,z)/(y,z) coupling of size {off:.3e}"
        )
    if float(np.max(np.abs(bracket - bracket.T))) > 1e-10 * scale:
        raise PatternViolation("curvature bracket is not symmetric")
    return bracket


# ---------------------------------------------------------------------------
# curvature coefficients: probe patches and the linear map
# ---------------------------------------------------------------------------

_PROBES = (
    SurfacePatchExpansion(h11=1.0, h22=0.0, h12=0.0),
    SurfacePatchExpansion(h11=0.0, h22=0.0, h12=1.0),
    SurfacePatchExpansion(h11=0.0, h22=1.0, h12=0.0),
)


def _extract_triple(m11, m12, m22, tol: float = 1e-6):
    """Recover (beta1_2, beta2_2, beta3_2) from the three probe brackets.

    The bracket of a patch must be linear in (h11, h12, h22) with the fixed
    sparsity layout: no (x,z)/(y,z) coupling, pure-shear probe only couples
    (x,y), and the (z,z) entry sees h11 + h22 alone.  PatternViolation
    reports which structural property failed.
    """
    scale = max(np.max(np.abs(m11)), np.max(np.abs(m22)), 1e-30)

    for tag, m in (("h11", m11), ("h12", m12), ("h22", m22)):
        off = max(
            abs(m[0, 2]), abs(m[2, 0]), abs(m[1, 2]), abs(m[2, 1])
        )
        if off > tol * scale:
            raise PatternViolation(
                f"probe {tag}: forbidden (x,z)/(y,z) coupling of size {off:.3e}"
            )

    b1 = 0.5 * (m11[0, 0] + m11[1, 1])
    b3 = m11[0, 0] - m11[1, 1]
    b2 = m11[2, 2]

    checks = (
        ("mirror xx", m22[0, 0], b1 - 0.5 * b3),
        ("mirror yy", m22[1, 1], b1 + 0.5 * b3),
        ("mirror zz", m22[2, 2], b2),
        ("shear xy", m12[0, 1], b3),
        ("shear yx", m12[1, 0], b3),
        ("shear zz", m12[2, 2], 0.0),
        ("normal xy", m11[0, 1], 0.0),
    )
    for tag, got, want in checks:
        if abs(got - want) > tol * scale:
            raise PatternViolation(
                f"probe consistency '{tag}': {got:.9e} vs {want:.9e}"
            )
    return b1, b2, b3


def beta2(
    kappabar: float,
    media: MediumResponse,
    rel_tol: float = 1e-8,
    tol: float = 1e-6,
    nphi: int = _NPHI,
    n_start: int = 16,
) -> tuple[float, float, float]:
    """Curvature coefficients ``(beta1_2, beta2_2, beta3_2)``.

    Three unit probe patches (pure h11, pure shear h12, pure h22) are pushed
    through the curvature chain; the coefficients follow from the linear map
    between patches and bracket matrices, with the structural layout checked
    on the way.  The probes share one chain evaluation per quadrature node:
    the field legs do not depend on the patch.

    ``nphi`` and ``n_start`` set the azimuthal node count and the starting
    radial rule.  The azimuthal integrand is a trigonometric polynomial of
    low order, so the trapezoid rule is exact well below the default node
    count; table builders use a leaner profile and rely on their own
    midpoint audits.
    """
    triples = tuple((p.h11, p.h12, p.h22) for p in _PROBES)
    if media.is_pec:

        def integrand(kk, pp):
            return pec_gamma1_probe_integrand(
                kk, pp, kappabar, media.eps0, media.mu0, media.mu1, triples
            )

    else:

        def integrand(kk, pp):
            return gamma1_probe_integrand(
                kk, pp, kappabar, media.eps0, media.mu0, media.eps1, media.mu1, triples
            )

    stacked = _require_real(
        _contract(integrand, kappabar, media, rel_tol, nphi, n_start=n_start),
        "curvature bracket",
    )
    mats = [_check_bracket(stacked[i]) for i in range(len(_PROBES))]
    return _extract_triple(*mats, tol=tol)


def beta_set(
    kappabar: float, media: MediumResponse, rel_tol: float = 1e-8
) -> BetaSet:
    """All five coefficients at one wavenumber."""
    b1_0, b2_0 = beta0(kappabar, media, rel_tol=min(rel_tol, 1e-9))
    b1_2, b2_2, b3_2 = beta2(kappabar, media, rel_tol=rel_tol)
    return BetaSet(kappabar, b1_0, b2_0, b1_2, b2_2, b3_2)


# ---------------------------------------------------------------------------
# finite-difference oracle for the curvature coefficients
# ---------------------------------------------------------------------------


def _plain_legs(kx, ky, kappabar, media: MediumResponse):
    """Interface legs and vertex couplings, plainly evaluated at (kx, ky)."""
    kx = np.asarray(kx, dtype=float)
    kbar = np.hypot(kx, ky)
    phi = np.arctan2(ky, kx)
    n = kbar.size
    kap = np.full(n, kappabar)
    e0 = np.full(n, media.eps0)
    m0 = np.full(n, media.mu0)

    free = _free_part(kbar, phi, kap, e0, m0, jets=False)
    if media.is_pec:
        left, right = _pec_interface_legs(free)
        zero = np.zeros(n)
        ch_t = -m0 * free.kb2
        cvec = np.stack([zero, zero, e0, ch_t, ch_t, zero], axis=1)
        return left, right, cvec

    e1 = np.full(n, media.eps1)
    m1 = np.full(n, media.mu1)
    surf = _surface_part(free, e0, m0, e1, m1)
    left, right = _interface_legs(free, surf, e0, m0, e1, m1)
    return left, right, _vertex_couplings(free, e0, m0, e1, m1)


def beta2_oracle(
    kappabar: float,
    media: MediumResponse,
    tol: float = 1e-6,
) -> tuple[float, float, float]:
    """Curvature coefficients by numerical differentiation of the chain.

    Independent of the algebraic derivative propagation used by ``beta2``:
    the patch second derivatives of the coupled right leg come from
    Richardson-extrapolated central differences of plain evaluations, on a
    different radial quadrature (fixed five-panel Gauss rule) and a finer
    azimuthal grid.
    """
    t0 = _decay_floor(kappabar, media)
    em = media.eps0 * media.mu0
    edges = t0 + np.array([0.0, 0.5, 2.0, 6.0, 16.0, 40.0])
    rule = panel_rule(edges, 40)
    phis = phi_nodes(_NPHI_ORACLE)

    tt = np.repeat(rule.nodes, _NPHI_ORACLE)
    kbar = np.sqrt(np.maximum(tt * tt - em * kappabar**2, 0.0))
    pp = np.tile(phis, rule.nodes.size)
    kx0 = kbar * np.cos(pp)
    ky0 = kbar * np.sin(pp)

    left, _, cvec = _plain_legs(kx0, ky0, kappabar, media)
    stack = fd_jet(
        lambda X, Y: _plain_legs(X, Y, kappabar, media)[1], kx0, ky0
    )

    mats = []
    for patch in _PROBES:
        h11, h12, h22 = patch.h11, patch.h12, patch.h22
        second = h11 * stack["xx"] + 2.0 * h12 * stack["xy"] + h22 * stack["yy"]
        total = -0.5 * (left @ (cvec[:, :, None] * second))
        vals = total.reshape(rule.nodes.size, _NPHI_ORACLE, 3, 3).mean(axis=1)
        bracket = 2.0 * rule.integrate(rule.nodes[:, None, None] * vals)
        # realness only to finite-difference accuracy, not to rounding
        mats.append(_require_real(bracket, "oracle curvature bracket", tol=1e-8))

    return _extract_triple(*mats, tol=tol)
