"""Momentum-space blocks of the planar scattering chain.

Geometry and scaling
--------------------
The surface occupies ``z <= -d`` with the particle at the origin; lengths are
rescaled by the particle-surface distance, so the flat interface sits at unit
distance and the transverse momentum ``kbar`` and imaginary-frequency
wavenumber ``kappabar`` are dimensionless.  The chain composes, left to
right, an outgoing free propagator row, the resolvent of the planar
surface-scattering kernels, and the incoming scattering column:

    kappa Gamma0 = [G_ee | G_eh] @ O @ [M_ee ; M_he]

in the (E, H) x (x, y, z) index space.  All blocks here are scaled so the
composition stays finite for ``kappabar -> 0``: the E<->H coupling kernels
appear as ``Ktilde`` with the explicit ``kappabar**2`` factor carried by the
resolvent assembly, and the electric-row propagators absorb one power of the
wavenumber.

The curvature (first-order in the height profile's second derivatives
``h_ab``) integrand treats the curved surface as a displaced interface: to
first order in the height, the response change is a single local vertex on
the flat interface, weighted by the material contrasts of the field
components that stay continuous across it, sandwiched between the
flat-problem field legs.  A quadratic height profile ``u^T h u / 2`` at the
vertex transfers onto the momentum-space legs as ``-h_ab d_a d_b / 2``
acting on the interface side.  The vertex normalization is fixed by the
uniform-shift identity: for a constant height the sandwiched product must
equal ``2 s0`` times the flat integrand, because shifting the whole
interface by ``h`` just rescales the round-trip decay.

Batched evaluation: every public integrand function takes flat arrays over
quadrature points (momentum magnitude, azimuth, wavenumber, and per-point
media) and returns the 3x3 integrand matrices with the point axis leading.
The angular average and radial contraction against these integrands
reproduce the dimensionless flat and curvature brackets:

    2 * int kbar dkbar <integrand>_phi  ->  diag(beta1_0, beta1_0, beta2_0)

and the curvature analogue for one quadratic patch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from .errors import PECUnsupportedSector, SingularResolvent
from .jets import Jet, jblock, jmat
from .materials import MediumResponse

__all__ = [
    "SpectralPoint",
    "AxialDecay",
    "KernelBlock",
    "PlanarBlocks",
    "Resolvent",
    "axial_decay",
    "planar_blocks",
    "planar_resolvent",
    "gamma0_integrand",
    "gamma1_integrand",
    "pec_gamma0_integrand",
    "pec_gamma1_integrand",
]

# z-hat cross product as a row-mixing matrix, and the in-plane projector
_CROSS_Z = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
_EYE3 = np.eye(3)

# Similarity that removes the i-grading between in-plane and z components,
# leaving every planar block real: B_real = T B T^{-1}, T = diag(1, 1, i).
_GRADE = np.diag([1.0, 1.0, 1j])
_GRADE_INV = np.diag([1.0, 1.0, -1j])


@dataclass(frozen=True)
class SpectralPoint:
    """One transverse-momentum evaluation point (dimensionless)."""

    kbar: float
    phi_k: float
    kappabar: float

    def __post_init__(self):
        if self.kbar < 0.0 or self.kappabar < 0.0:
            raise ValueError("kbar and kappabar must be >= 0")


@dataclass(frozen=True)
class AxialDecay:
    """Decay rates of the ambient (s0) and surface (s1) media along z."""

    s0: float
    s1: float


def axial_decay(point: SpectralPoint, media: MediumResponse) -> AxialDecay:
    s0 = math.sqrt(point.kbar**2 + media.eps0 * media.mu0 * point.kappabar**2)
    if media.is_pec:
        s1 = math.inf
    else:
        s1 = math.sqrt(point.kbar**2 + media.eps1 * media.mu1 * point.kappabar**2)
    return AxialDecay(s0, s1)


# ---------------------------------------------------------------------------
# shared chain construction (plain arrays or jets)
# ---------------------------------------------------------------------------


def _mode_helpers(jets: bool, npts: int):
    """Small adapters so one chain implementation serves both algebras."""
    if jets:
        return SimpleNamespace(
            widen=lambda s: s.widen() if isinstance(s, Jet) else s[..., None, None],
            lift=lambda m: Jet.const(m),
            mat=jmat,
            block=jblock,
            inv=lambda m: m.inv(),
            sqrt=lambda s: s.sqrt(),
            exp=lambda s: s.exp(),
        )

    def mat(rows):
        out = np.empty((npts, len(rows), len(rows[0])), dtype=np.complex128)
        for i, row in enumerate(rows):
            for j, e in enumerate(row):
                out[:, i, j] = e
        return out

    return SimpleNamespace(
        widen=lambda s: s[..., None, None],
        lift=lambda m: m,
        mat=mat,
        block=lambda rows: np.block([[b for b in row] for row in rows]),
        inv=np.linalg.inv,
        sqrt=np.sqrt,
        exp=np.exp,
    )


def _broadcast_inputs(kbar, phi, kappabar, *media_fields):
    arrays = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (kbar, phi, kappabar, *media_fields))
    )
    flat = [np.ascontiguousarray(a.reshape(-1)) for a in arrays]
    return flat


def _free_part(kbar, phi, kappabar, eps0, mu0, *, jets: bool):
    """Ambient-medium symbols: decay rate, propagator and scattering columns.

    Everything downstream of the surface response is built on top of these.
    """
    npts = kbar.size
    h = _mode_helpers(jets, npts)
    kxv = kbar * np.cos(phi)
    kyv = kbar * np.sin(phi)
    kb2 = kappabar**2

    if jets:
        kx, ky = Jet.seed_x(kxv), Jet.seed_y(kyv)
    else:
        kx, ky = kxv.astype(np.complex128), kyv.astype(np.complex128)

    k2 = kx * kx + ky * ky
    s0 = h.sqrt(k2 + eps0 * mu0 * kb2)
    edecay = h.exp(-s0) / (2.0 * s0)

    dx, dy = 1j * kx, 1j * ky
    dz_out, dz_in = -s0, s0

    def dyad_block(dz, div, mult):
        # (1/div) D (x) D - mult kappabar^2 I, times the axial factor
        dd = h.mat(
            [
                [dx * dx, dx * dy, dx * dz],
                [dx * dy, dy * dy, dy * dz],
                [dx * dz, dy * dz, dz * dz],
            ]
        )
        diag = h.mat(
            [
                [mult * kb2 + 0.0 * k2, 0.0, 0.0],
                [0.0, mult * kb2 + 0.0 * k2, 0.0],
                [0.0, 0.0, mult * kb2 + 0.0 * k2],
            ]
        )
        return h.widen(edecay) * (h.widen(1.0 / div) * dd - diag)

    def curl_block(dz, sign):
        # the Levi-Civita contraction eps_ijl D_l, times the axial factor
        lc = h.mat(
            [
                [0.0 * k2, dz, -dy],
                [-dz, 0.0 * k2, dx],
                [dy, -dx, 0.0 * k2],
            ]
        )
        return h.widen(edecay) * (sign * lc)

    g_out_ee = dyad_block(dz_out, eps0, mu0)
    g_out_eh = curl_block(dz_out, +1.0)
    g_in_ee = dyad_block(dz_in, eps0, mu0)
    g_in_he = curl_block(dz_in, -1.0)
    # duality partners (swap the roles of the two material responses)
    g_out_hh = dyad_block(dz_out, mu0, eps0)
    g_out_he = curl_block(dz_out, -1.0)
    g_in_hh = dyad_block(dz_in, mu0, eps0)
    g_in_eh = curl_block(dz_in, +1.0)

    return SimpleNamespace(
        h=h,
        npts=npts,
        kx=kx,
        ky=ky,
        k2=k2,
        kb2=kb2,
        s0=s0,
        edecay=edecay,
        g_out_ee=g_out_ee,
        g_out_eh=g_out_eh,
        g_in_ee=g_in_ee,
        g_in_he=g_in_he,
        g_out_hh=g_out_hh,
        g_out_he=g_out_he,
        g_in_hh=g_in_hh,
        g_in_eh=g_in_eh,
    )


def _scattering_columns(free, eps0, mu0, eps1, mu1):
    """The M column entries of the scattering chain."""
    h = free.h
    cm = 2.0 / (mu0 + mu1)
    ce = 2.0 / (eps0 + eps1)
    cz = h.lift(_CROSS_Z)
    m_ee = h.widen(cm * mu0) * (cz @ free.g_in_he)
    m_he = -h.widen(ce * eps0) * (cz @ free.g_in_ee)
    return m_ee, m_he


def _surface_part(free, eps0, mu0, eps1, mu1):
    """Surface-response symbols: mid-chain kernels and the resolvent."""
    h = free.h
    cm = 2.0 / (mu0 + mu1)
    ce = 2.0 / (eps0 + eps1)

    s1 = h.sqrt(free.k2 + eps1 * mu1 * free.kb2)
    # (s0 - s1) / kappabar^2, evaluated stably at small kappabar
    d01 = (eps0 * mu0 - eps1 * mu1) / (free.s0 + s1)
    scale = d01 / (2.0 * free.s0 * s1)

    kx, ky, k2 = free.kx, free.ky, free.k2
    planar = h.mat(
        [
            [kx * kx, kx * ky, 0.0 * k2],
            [kx * ky, ky * ky, 0.0 * k2],
            [0.0 * k2, 0.0 * k2, 0.0 * k2],
        ]
    )
    ssk = free.s0 * s1 + k2
    bmat = planar - h.widen(ssk) * h.lift(np.diag([1.0, 1.0, 0.0]))

    scaled_b = h.widen(scale) * bmat
    x_hh = h.widen(cm) * scaled_b
    x_ee = -h.widen(ce) * scaled_b

    cz = h.lift(_CROSS_Z)
    k_eh = cz @ x_hh
    k_he = cz @ x_ee

    eye = h.lift(np.broadcast_to(_EYE3, (free.npts, 3, 3)).copy())
    kb2w = free.kb2[:, None, None]
    rmat = h.inv(eye - kb2w * (k_eh @ k_he))

    return SimpleNamespace(
        s1=s1,
        x_hh=x_hh,
        x_ee=x_ee,
        k_eh=k_eh,
        k_he=k_he,
        rmat=rmat,
        kb2w=kb2w,
        cm=cm,
        ce=ce,
    )


def _assemble_rows(free, surf, eps0, mu0, eps1, mu1):
    h = free.h
    m_ee, m_he = _scattering_columns(free, eps0, mu0, eps1, mu1)
    grow = h.block([[free.g_out_ee, free.g_out_eh]])
    mcol = h.block([[m_ee], [m_he]])
    o66 = h.block(
        [
            [surf.rmat, surf.rmat @ surf.k_eh],
            [surf.kb2w * (surf.k_he @ surf.rmat), surf.rmat],
        ]
    )
    return grow, mcol, o66


def _interface_legs(free, surf, eps0, mu0, eps1, mu1):
    """Flat-problem field kernels with one end pinned to the interface.

    ``left`` (3 x 6) maps an (E; H) source doublet sitting on the interface to
    the E field back at the particle; ``right`` (6 x 3) maps E source
    components at the particle to the total (E; H) field doublet on the
    ambient side of the interface.  Both include the single-bounce reflected
    part, so each carries exactly one decay factor across the gap.
    """
    h = free.h
    grow, mcol, o66 = _assemble_rows(free, surf, eps0, mu0, eps1, mu1)
    strip = h.widen(h.exp(free.s0))
    # The doublet convention keeps the cross-sector blocks free of bare
    # kappabar factors, so the H-from-H dyadic enters the doublet rescaled.
    # At kappabar = 0 the magnetic couplings vanish identically, so the
    # rescale may be short-circuited to zero there.
    inv_kb2 = np.divide(
        1.0, free.kb2, out=np.zeros_like(free.kb2), where=free.kb2 > 0.0
    )
    hh_out = h.widen(inv_kb2) * free.g_out_hh
    hh_in = h.widen(inv_kb2) * free.g_in_hh

    p_out_plane = strip * h.block(
        [
            [free.g_out_ee, free.g_out_eh],
            [free.g_out_he, hh_out],
        ]
    )
    right = h.block([[free.g_in_ee], [free.g_in_he]]) + p_out_plane @ (o66 @ mcol)

    cmw = h.widen(surf.cm * mu0)
    cew = h.widen(surf.ce * eps0)
    cz = h.lift(_CROSS_Z)
    mcol_plane = h.block(
        [
            [cmw * (cz @ (strip * free.g_in_he)), cmw * (cz @ (strip * hh_in))],
            [-cew * (cz @ (strip * free.g_in_ee)), -cew * (cz @ (strip * free.g_in_eh))],
        ]
    )
    left = grow + (grow @ o66) @ mcol_plane
    return left, right


def _pec_interface_legs(free):
    """Interface legs in the conductor limit.

    The electric scattering column drops out of the chain (its coupling
    constant vanishes with growing permittivity) while the magnetic one
    saturates: resolvent times column strength collapses to the constant 2,
    with no dependence on the surface permeability left.  Tangential
    electric and normal magnetic entries cancel between the direct and
    reflected parts, so only the slots the conductor vertex couples to
    survive.
    """
    h = free.h
    strip = h.widen(h.exp(free.s0))
    inv_kb2 = np.divide(
        1.0, free.kb2, out=np.zeros_like(free.kb2), where=free.kb2 > 0.0
    )
    hh_in = h.widen(inv_kb2) * free.g_in_hh
    cz = h.lift(_CROSS_Z)
    refl = cz @ free.g_in_he
    right = h.block(
        [
            [free.g_in_ee + 2.0 * (strip * (free.g_out_ee @ refl))],
            [free.g_in_he + 2.0 * (strip * (free.g_out_he @ refl))],
        ]
    )
    left = h.block(
        [
            [
                free.g_out_ee
                + 2.0 * (free.g_out_ee @ (cz @ (strip * free.g_in_he))),
                free.g_out_eh + 2.0 * (free.g_out_ee @ (cz @ (strip * hh_in))),
            ]
        ]
    )
    return left, right


# ---------------------------------------------------------------------------
# flat-order integrands
# ---------------------------------------------------------------------------


def gamma0_integrand(kbar, phi, kappabar, eps0, mu0, eps1, mu1) -> np.ndarray:
    """Scaled flat-surface integrand matrix at each quadrature point.

    Contracting ``2 * int kbar dkbar <.>_phi`` of the returned matrices gives
    ``diag(beta1_0, beta1_0, beta2_0)``.
    """
    kbar, phi, kappabar, eps0, mu0, eps1, mu1 = _broadcast_inputs(
        kbar, phi, kappabar, eps0, mu0, eps1, mu1
    )
    free = _free_part(kbar, phi, kappabar, eps0, mu0, jets=False)
    surf = _surface_part(free, eps0, mu0, eps1, mu1)
    grow, mcol, o66 = _assemble_rows(free, surf, eps0, mu0, eps1, mu1)
    return grow @ o66 @ mcol


def pec_gamma0_integrand(kbar, phi, kappabar, eps0, mu0, mu1) -> np.ndarray:
    """Flat integrand against a perfectly conducting surface.

    The conductor limit collapses the chain analytically: the magnetic
    sector saturates and the resolvent becomes the constant
    ``(mu0 + mu1)/mu0``, leaving only ambient symbols.  No large-epsilon
    evaluation is involved, so the expression is uniformly valid down to
    ``kappabar = 0``.
    """
    kbar, phi, kappabar, eps0, mu0, mu1 = _broadcast_inputs(
        kbar, phi, kappabar, eps0, mu0, mu1
    )
    free = _free_part(kbar, phi, kappabar, eps0, mu0, jets=False)
    m_ee, _ = _scattering_columns(free, eps0, mu0, np.inf, mu1)
    rpec = ((mu0 + mu1) / mu0)[:, None, None]
    return rpec * (free.g_out_ee @ m_ee)


# ---------------------------------------------------------------------------
# curvature integrands
# ---------------------------------------------------------------------------


def _vertex_couplings(free, eps0, mu0, eps1, mu1) -> np.ndarray:
    """Sector couplings of the local interface-displacement vertex.

    Tangential components couple with the plain material contrast, normal
    components with the contrast weighted by the ambient/substrate ratio
    (the continuous field combinations across the interface).  The magnetic
    pair carries the explicit kappabar^2 of the doublet convention.
    """
    ce_t = eps1 - eps0
    ce_z = (eps1 - eps0) * eps0 / eps1
    ch_t = free.kb2 * (mu1 - mu0)
    ch_z = free.kb2 * (mu1 - mu0) * mu0 / mu1
    return np.stack([ce_t, ce_t, ce_z, ch_t, ch_t, ch_z], axis=1)


def _stack_patches(left, cvec, right, patches) -> np.ndarray:
    """Sandwich the vertex for several patches on one legs evaluation."""
    weighted_xx = cvec[:, :, None] * right.xx
    weighted_xy = cvec[:, :, None] * right.xy
    weighted_yy = cvec[:, :, None] * right.yy
    cols = [
        -0.5
        * (
            left.v
            @ (h11 * weighted_xx + 2.0 * h12 * weighted_xy + h22 * weighted_yy)
        )
        for h11, h12, h22 in patches
    ]
    return np.stack(cols, axis=1)


def gamma1_probe_integrand(
    kbar, phi, kappabar, eps0, mu0, eps1, mu1, patches
) -> np.ndarray:
    """Stacked curvature integrands for several patches, one legs pass.

    The flat-problem field legs and the vertex couplings do not depend on
    the patch, so probing several patches (as the coefficient extraction
    does) costs one chain evaluation instead of one per patch.  Returns
    shape ``(npts, len(patches), 3, 3)``.
    """
    kbar, phi, kappabar, eps0, mu0, eps1, mu1 = _broadcast_inputs(
        kbar, phi, kappabar, eps0, mu0, eps1, mu1
    )
    free = _free_part(kbar, phi, kappabar, eps0, mu0, jets=True)
    surf = _surface_part(free, eps0, mu0, eps1, mu1)
    left, right = _interface_legs(free, surf, eps0, mu0, eps1, mu1)
    cvec = _vertex_couplings(free, eps0, mu0, eps1, mu1)
    return _stack_patches(left, cvec, right, patches)


def gamma1_integrand(kbar, phi, kappabar, eps0, mu0, eps1, mu1, patch) -> np.ndarray:
    """Scaled curvature integrand for one quadratic height patch.

    ``patch = (h11, h12, h22)`` are the dimensionless second derivatives of
    the height profile.  The first-order response to the displaced interface
    is the local contrast vertex sandwiched between the flat-problem field
    legs; the quadratic profile turns into the patch-weighted second momentum
    derivative of the coupled right leg.  Contracting
    ``2 * int kbar dkbar <.>_phi`` gives the curvature bracket matrix whose
    entries are the five beta coefficients in the layout
    diag((b1+b3/2)h11+(b1-b3/2)h22, ..., b2(h11+h22)) with b3 h12
    off-diagonal in the plane.
    """
    return gamma1_probe_integrand(
        kbar, phi, kappabar, eps0, mu0, eps1, mu1, (patch,)
    )[:, 0]


def pec_gamma1_probe_integrand(
    kbar, phi, kappabar, eps0, mu0, mu1, patches
) -> np.ndarray:
    """Stacked conductor-limit curvature integrands, one legs pass."""
    kbar, phi, kappabar, eps0, mu0, mu1 = _broadcast_inputs(
        kbar, phi, kappabar, eps0, mu0, mu1
    )
    free = _free_part(kbar, phi, kappabar, eps0, mu0, jets=True)
    left, right = _pec_interface_legs(free)
    zero = np.zeros_like(free.kb2)
    ch_t = -mu0 * free.kb2
    cvec = np.stack([zero, zero, eps0, ch_t, ch_t, zero], axis=1)
    return _stack_patches(left, cvec, right, patches)


def pec_gamma1_integrand(kbar, phi, kappabar, eps0, mu0, mu1, patch) -> np.ndarray:
    """Curvature integrand against a perfectly conducting surface.

    The conductor limit of the displacement vertex is the classical surface
    stress: only the normal electric and tangential magnetic couplings
    survive, with weights ``eps0`` and ``-mu0 kappabar**2``.  As with the
    flat conductor integrand the result does not depend on ``mu1``, which is
    accepted only for signature symmetry.
    """
    return pec_gamma1_probe_integrand(
        kbar, phi, kappabar, eps0, mu0, mu1, (patch,)
    )[:, 0]


# ---------------------------------------------------------------------------
# public single-point blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelBlock:
    """One 3x3 planar kernel: real polynomial prefactor times exp(exponent).

    The i-grading between in-plane and z components has been removed by the
    similarity diag(1, 1, i), under which every planar block is real.
    """

    tag: str
    poly: np.ndarray
    exponent: float

    @property
    def value(self) -> np.ndarray:
        return self.poly * math.exp(self.exponent)


@dataclass(frozen=True)
class PlanarBlocks:
    """The flat-surface kernels entering the scattering chain at one point."""

    point: SpectralPoint
    media: MediumResponse
    decay: AxialDecay
    g0_out_ee: KernelBlock
    g0_out_eh: KernelBlock
    g0_in_ee: KernelBlock
    g0_in_he: KernelBlock
    g1_out_ee: KernelBlock
    g1_out_eh: KernelBlock
    k0_ee: KernelBlock
    k0_hh: KernelBlock
    k0_eh: KernelBlock
    k0_he: KernelBlock
    m0_ee: KernelBlock
    m0_he: KernelBlock


@dataclass(frozen=True)
class Resolvent:
    """The 6x6 multiple-scattering resolvent and its sector core."""

    o: np.ndarray
    r: np.ndarray
    residual: float


def _degrade(mat: np.ndarray, tag: str) -> np.ndarray:
    """Remove the i-grading; the result must be real to rounding."""
    real = _GRADE @ mat @ _GRADE_INV
    scale = max(float(np.max(np.abs(real))), 1.0)
    if float(np.max(np.abs(real.imag))) > 1e-12 * scale:
        raise ValueError(f"block {tag} is not real after de-grading")
    return np.ascontiguousarray(real.real)


def planar_blocks(point: SpectralPoint, media: MediumResponse) -> PlanarBlocks:
    """Evaluate all flat-surface kernels at one spectral point.

    Exponential factors are separated: each block carries its polynomial
    prefactor and the exponent of the axial decay it rides on (``-s0`` for
    ambient propagator and scattering columns, ``-s1`` for the surface-medium
    propagators, zero for the surface-to-surface kernels).

    Raises
    ------
    PECUnsupportedSector
        For perfectly conducting media: several blocks are finite only in
        the analytic conductor limit, which the dedicated integrands take
        internally; feeding a large permittivity through these raw formulas
        is not supported.
    """
    if media.is_pec:
        raise PECUnsupportedSector(
            "planar blocks exist only for finite media; the conductor limit "
            "is taken analytically inside the dedicated integrands"
        )
    kbar = np.array([point.kbar])
    phi = np.array([point.phi_k])
    kap = np.array([point.kappabar])
    e0 = np.array([media.eps0])
    m0 = np.array([media.mu0])
    e1 = np.array([media.eps1])
    m1 = np.array([media.mu1])

    free = _free_part(kbar, phi, kap, e0, m0, jets=False)
    surf = _surface_part(free, e0, m0, e1, m1)
    m_ee, m_he = _scattering_columns(free, e0, m0, e1, m1)
    decay = axial_decay(point, media)

    # medium-1 free propagators (same structure, inside-medium parameters)
    free1 = _free_part(kbar, phi, kap, e1, m1, jets=False)

    def block(tag, mat, exponent):
        # divide out the exponential; the rational prefactor stays in poly
        return KernelBlock(tag, _degrade(mat[0] * math.exp(-exponent), tag), exponent)

    def kblock(tag, mat):
        # surface-to-surface kernels carry no exponential; restore the true
        # kappabar power absorbed by the scaled chain
        return KernelBlock(tag, _degrade(mat[0] * point.kappabar, tag), 0.0)

    return PlanarBlocks(
        point=point,
        media=media,
        decay=decay,
        g0_out_ee=block("g0_out_ee", free.g_out_ee, -decay.s0),
        g0_out_eh=block("g0_out_eh", free.g_out_eh, -decay.s0),
        g0_in_ee=block("g0_in_ee", free.g_in_ee, -decay.s0),
        g0_in_he=block("g0_in_he", free.g_in_he, -decay.s0),
        g1_out_ee=block("g1_out_ee", free1.g_out_ee, -decay.s1),
        g1_out_eh=block("g1_out_eh", free1.g_out_eh, -decay.s1),
        k0_ee=KernelBlock("k0_ee", np.zeros((3, 3)), 0.0),
        k0_hh=KernelBlock("k0_hh", np.zeros((3, 3)), 0.0),
        k0_eh=kblock("k0_eh", surf.k_eh),
        k0_he=kblock("k0_he", surf.k_he),
        m0_ee=block("m0_ee", m_ee, -decay.s0),
        m0_he=block("m0_he", m_he, -decay.s0),
    )


def planar_resolvent(blocks: PlanarBlocks) -> Resolvent:
    """Assemble the multiple-scattering resolvent from the K blocks.

    The sector core is ``R = (1 - K_eh K_he)^{-1}`` and the full operator
    has R on both diagonal sectors with single-K off-diagonal couplings.
    A residual above 1e-12 flags a numerically pathological point.
    """
    keh = blocks.k0_eh.value
    khe = blocks.k0_he.value
    core = _EYE3 - keh @ khe
    try:
        r = np.linalg.inv(core)
    except np.linalg.LinAlgError as exc:
        raise SingularResolvent(str(exc)) from None

    o = np.block([[r, r @ keh], [khe @ r, r]])
    k6 = np.block([[np.zeros((3, 3)), keh], [khe, np.zeros((3, 3))]])
    residual = float(
        max(
            np.max(np.abs(core @ r - _EYE3)),
            np.max(np.abs(o @ (np.eye(6) - k6) - np.eye(6))),
        )
    )
    if residual > 1e-12:
        raise SingularResolvent(f"resolvent residual {residual:.3e} exceeds 1e-12")
    return Resolvent(o=o, r=r, residual=residual)
