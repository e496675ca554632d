"""Exact Casimir-Polder potential of an isotropic particle outside a sphere.

The sphere's response enters through its electric and magnetic multipole
reflection coefficients; the interaction energy is a partial-wave sum of
those coefficients against outgoing-wave factors evaluated at imaginary
frequency.  The building blocks are the upper-case modified spherical
Bessel pair ``I_l(x) = x i_l(x)`` and ``K_l(x) = x k_l(x)``: ``I`` grows
and ``K`` decays like ``e^{+/-x}``, and for ``l >> x`` both run off the
double-precision range in opposite directions.  Every value is therefore
carried in exact base-2 split form ``mantissa * 2**exp2`` and the
exponents are combined symbolically, so products like ``T_l K_l^2`` never
overflow even though their factors span thousands of decades; the only
exponential left after cancellation is the physical ``e^{-2 kappa d}``.

Normalization.  With the standard third-kind normalization used here
(``K_0(x) = (pi/2) e^{-x}``, Wronskian ``I K' - I' K = -pi/2``), the
multipole coefficients carry a prefactor ``pi/2`` and the energy kernel a
compensating ``(2/pi)^2``.  Both factors are pinned by two independent
anchors rather than trusted from their displayed form: the small-sphere
dipole limit ``T^EE_1 -> (2/3)(kappa R)^3 (eps - 1)/(eps + 2)``
(Clausius-Mossotti), and the large-radius limit of the potential, which
must reproduce the planar reflection result from ``curvature.beta0``.

The surrounding medium is vacuum; the sphere may be any registered
material, including a perfect conductor (handled analytically).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ive, kve

from .constants import HBAR_C_EV_UM, K_B_EV_PER_K
from .errors import (
    ConfigError,
    NonConvergentMultipoleSum,
    OverflowDomain,
    QuadratureNonConvergence,
)
from .materials import Material, epsilon_or_pec, matsubara_weight, matsubara_xi
from .quadrature import integrate_with_doubling

__all__ = [
    "ScaledMagnitude",
    "BesselPair",
    "MieTMatrix",
    "SphereCPReport",
    "bessel_pair",
    "mie_t",
    "mie_t_matrix",
    "sphere_cp",
    "sphere_cp_report",
]

# Stable evaluation envelope for the public single-(l, x) constructor.  The
# split-form ladders themselves stay exact far beyond this; the bounds mark
# where their fixed renormalization thresholds have been validated.
_X_MIN = 1e-12
_X_MAX = 1e4
_L_MAX = 5000

# Renormalization step for the recurrence continuations: an exact power of
# two, so mantissa rescaling never rounds.
_BIG = 2.0**512
_BIG_INV = 2.0**-512

_LOG2E = math.log2(math.e)


# ---------------------------------------------------------------------------
# split-form arithmetic: values as (mantissa, base-2 integer exponent)
# ---------------------------------------------------------------------------


def _norm(m, t):
    mm, me = np.frexp(m)
    return mm, t + me


def _add(m1, t1, m2, t2):
    tt = np.maximum(t1, t2)
    val = np.ldexp(m1, t1 - tt) + np.ldexp(m2, t2 - tt)
    mm, me = np.frexp(val)
    return mm, tt + me


def _sub(m1, t1, m2, t2):
    tt = np.maximum(t1, t2)
    val = np.ldexp(m1, t1 - tt) - np.ldexp(m2, t2 - tt)
    mm, me = np.frexp(val)
    return mm, tt + me


def _mul(m1, t1, m2, t2):
    mm, me = np.frexp(m1 * m2)
    return mm, t1 + t2 + me


def _k_hats(x: float, lmax: int):
    """``k_l(x) e^{+x}`` for l = 0..lmax in split form ``(m, t)``.

    Scaled library values where they fit in a double; past their overflow
    the strictly growing three-term upward recurrence continues the ladder
    with explicit power-of-two renormalization.
    """
    l = np.arange(lmax + 1)
    with np.errstate(over="ignore"):
        kv = np.sqrt(math.pi / (2.0 * x)) * kve(l + 0.5, x)
    m = kv.copy()
    t = np.zeros(lmax + 1, dtype=np.int64)
    bad = ~np.isfinite(kv) | (kv > 1e290)
    if not np.any(bad):
        return m, t
    u = int(np.argmax(bad))
    # The first two orders fit for any x >= _X_MIN, so the recurrence always
    # has a solid double-entry seed.
    a, b = float(kv[u - 2]), float(kv[u - 1])
    e = 0
    for ll in range(u - 1, lmax):
        c = a + ((2 * ll + 1) / x) * b
        if c > _BIG:
            a *= _BIG_INV
            b *= _BIG_INV
            c *= _BIG_INV
            e += 512
        m[ll + 1] = c
        t[ll + 1] = e
        a, b = b, c
    return m, t


def _i_hats(x: float, lmax: int):
    """``i_l(x) e^{-x}`` for l = 0..lmax in split form ``(m, t)``.

    Scaled library values down to their underflow; below that a normalized
    downward (Miller) recurrence supplies the tail, seeded twenty orders
    above the requested maximum (the downward sweep damps the unwanted
    solution by at least ``(2l/x)^2`` per step over the whole envelope) and
    matched to the last solid library value at the junction.
    """
    l = np.arange(lmax + 1)
    iv = np.sqrt(math.pi / (2.0 * x)) * ive(l + 0.5, x)
    m = iv.copy()
    t = np.zeros(lmax + 1, dtype=np.int64)
    bad = iv < 1e-285
    if not np.any(bad):
        return m, t
    u = int(np.argmax(bad))
    j = u - 3
    if j < 0:
        raise OverflowDomain(f"argument {x} too small for the hybrid ladder")
    raw = np.zeros(lmax + 2 - j)
    cnt = np.zeros(lmax + 2 - j, dtype=np.int64)
    hi, mid = 0.0, 1e-30
    c = 0
    for ll in range(lmax + 20, j - 1, -1):
        f = hi + ((2 * ll + 3) / x) * mid
        if f > _BIG:
            f *= _BIG_INV
            mid *= _BIG_INV
            c += 1
        if ll <= lmax + 1:
            raw[ll - j] = f
            cnt[ll - j] = c
        hi, mid = mid, f
    # Normalize the unscaled downward solution to the junction value, keeping
    # the (tiny) scale itself in split form.
    sm, se = math.frexp(float(iv[j]))
    rm, re = math.frexp(raw[0])
    scale_m = sm / rm
    scale_e = se - re
    for ll in range(j + 1, lmax + 1):
        mm, ee = math.frexp(raw[ll - j] * scale_m)
        m[ll] = mm
        t[ll] = ee + scale_e + 512 * (cnt[ll - j] - cnt[0])
    return m, t


def _upper_pairs(x: float, lmax: int):
    """Split-form arrays of ``I_l e^{-x}``, ``I'_l e^{-x}``, ``K_l e^{+x}``
    and ``|K'_l| e^{+x}`` for l = 0..lmax.

    Derivatives use the all-positive ladder identities
    ``I'_l = x i_{l+1} + (l+1) i_l`` and ``-K'_l = x k_{l-1} + l k_l``
    (``K'_0 = -K_0``), so no cancellation occurs anywhere.
    """
    mi, ti = _i_hats(x, lmax + 1)
    mk, tk = _k_hats(x, lmax + 1)
    l = np.arange(lmax + 1, dtype=float)
    m_i, t_i = _norm(x * mi[:-1], ti[:-1])
    m_di, t_di = _add(x * mi[1:], ti[1:], (l + 1) * mi[:-1], ti[:-1])
    m_k, t_k = _norm(x * mk[:-1], tk[:-1])
    mkm1 = np.concatenate(([0.0], mk[:-2]))
    tkm1 = np.concatenate(([0], tk[:-2]))
    m_dk, t_dk = _add(x * mkm1, tkm1, l * mk[:-1], tk[:-1])
    m_dk[0], t_dk[0] = m_k[0], t_k[0]
    return (m_i, t_i), (m_di, t_di), (m_k, t_k), (m_dk, t_dk)


# ---------------------------------------------------------------------------
# public Bessel pair
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaledMagnitude:
    """A positive value in exact base-2 split form: ``mantissa * 2**exp2``."""

    mantissa: float
    exp2: int

    def __float__(self) -> float:
        with np.errstate(over="ignore", under="ignore"):
            return float(np.ldexp(self.mantissa, int(np.clip(self.exp2, -2200, 2200))))


def _times_exp(s: ScaledMagnitude, xarg: float) -> float:
    """``s * e^{xarg}`` as a plain float (``inf``/``0.0`` off the far ends)."""
    shift = xarg * _LOG2E
    n = math.floor(shift)
    frac = 2.0 ** (shift - n)
    tot = s.exp2 + n
    if tot > 2100:
        return math.inf
    if tot < -2100:
        return 0.0
    with np.errstate(over="ignore", under="ignore"):
        return float(np.ldexp(s.mantissa * frac, int(tot)))


@dataclass(frozen=True)
class BesselPair:
    """The modified spherical pair ``I_l, K_l`` and derivatives at one point.

    Values are stored against their natural envelopes — ``i_hat`` and
    ``di_hat`` carry ``e^{-x}``, ``k_hat`` and ``dk_hat_mag`` carry
    ``e^{+x}`` — in split form, so the pair stays meaningful even where the
    unscaled values leave the double range.  ``K'_l`` is negative for all
    ``l, x``; its magnitude is stored.
    """

    l: int
    x: float
    i_hat: ScaledMagnitude
    di_hat: ScaledMagnitude
    k_hat: ScaledMagnitude
    dk_hat_mag: ScaledMagnitude

    @property
    def i(self) -> float:
        """``I_l(x)`` unscaled (``inf`` if out of double range)."""
        return _times_exp(self.i_hat, self.x)

    @property
    def di(self) -> float:
        """``I'_l(x)`` unscaled."""
        return _times_exp(self.di_hat, self.x)

    @property
    def k(self) -> float:
        """``K_l(x)`` unscaled (``0.0`` if below the double range)."""
        return _times_exp(self.k_hat, -self.x)

    @property
    def dk(self) -> float:
        """``K'_l(x)`` unscaled (always negative)."""
        return -_times_exp(self.dk_hat_mag, -self.x)

    def wronskian(self) -> float:
        """``I_l K'_l - I'_l K_l``, combined in split form (exactly -pi/2).

        The two products are O(1) even where the individual factors are
        astronomically large or small, so combining exponents first makes
        the identity checkable everywhere in the envelope.
        """
        t1 = self.i_hat.exp2 + self.dk_hat_mag.exp2
        t2 = self.di_hat.exp2 + self.k_hat.exp2
        m1 = self.i_hat.mantissa * self.dk_hat_mag.mantissa
        m2 = self.di_hat.mantissa * self.k_hat.mantissa
        tt = max(t1, t2)
        return -math.ldexp(
            math.ldexp(m1, t1 - tt) + math.ldexp(m2, t2 - tt), tt
        )


def bessel_pair(l: int, x: float) -> BesselPair:
    """Evaluate the modified spherical pair at order ``l`` and argument ``x``.

    Stable over ``1e-12 <= x <= 1e4`` and ``0 <= l <= 5000``; outside that
    validated envelope the constructor refuses rather than degrade.
    """
    if not isinstance(l, (int, np.integer)):
        if isinstance(l, float) and l.is_integer():
            l = int(l)
        else:
            raise ConfigError(f"order must be a nonnegative integer, got {l!r}")
    if l < 0:
        raise ConfigError(f"order must be a nonnegative integer, got {l}")
    if not isinstance(x, (int, float, np.floating, np.integer)) or not math.isfinite(x):
        raise ConfigError(f"argument must be a finite positive number, got {x!r}")
    x = float(x)
    if x <= 0.0:
        raise ConfigError(f"argument must be positive, got {x}")
    if x < _X_MIN or x > _X_MAX:
        raise OverflowDomain(
            f"argument {x} outside the stable envelope [{_X_MIN}, {_X_MAX}]"
        )
    if l > _L_MAX:
        raise OverflowDomain(f"order {l} above the stable envelope max {_L_MAX}")
    (mi, ti), (mdi, tdi), (mk, tk), (mdk, tdk) = _upper_pairs(x, int(l))
    return BesselPair(
        l=int(l),
        x=x,
        i_hat=ScaledMagnitude(float(mi[l]), int(ti[l])),
        di_hat=ScaledMagnitude(float(mdi[l]), int(tdi[l])),
        k_hat=ScaledMagnitude(float(mk[l]), int(tk[l])),
        dk_hat_mag=ScaledMagnitude(float(mdk[l]), int(tdk[l])),
    )


# ---------------------------------------------------------------------------
# multipole reflection coefficients
# ---------------------------------------------------------------------------


def _t_split(w, ix, dix, kx, dkx, iy, diy):
    """One polarization's coefficient in split form, without ``e^{2x}``.

    ``(pi/2) (w I(y) I'(x) - I'(y) I(x)) / (K(x) I'(y) + w I(y) |K'(x)|)``
    where ``w`` is the wave-impedance ratio of that polarization, ``x`` the
    outside and ``y`` the inside radial argument.  The denominator is a sum
    of positive terms (``K' < 0``), so it never cancels.
    """
    n1_m, n1_t = _mul(w * iy[0], iy[1], dix[0], dix[1])
    n2_m, n2_t = _mul(diy[0], diy[1], ix[0], ix[1])
    num_m, num_t = _sub(n1_m, n1_t, n2_m, n2_t)
    d1_m, d1_t = _mul(kx[0], kx[1], diy[0], diy[1])
    d2_m, d2_t = _mul(w * iy[0], iy[1], dkx[0], dkx[1])
    den_m, den_t = _add(d1_m, d1_t, d2_m, d2_t)
    mm, me = np.frexp(0.5 * math.pi * num_m / den_m)
    return mm, num_t - den_t + me


def _t_split_arrays(eps: float, mu: float, x: float, lmax: int):
    """Both polarizations' scaled coefficients ``T e^{-2x}`` in split form.

    Returns ``(m_ee, t_ee, m_hh, t_hh)`` over l = 0..lmax (entry 0 zeroed:
    the monopole does not scatter).  ``eps = inf`` selects the analytic
    perfectly conducting limit.
    """
    ix, dix, kx, dkx = _upper_pairs(x, lmax)
    if math.isinf(eps):
        m_ee = 0.5 * math.pi * dix[0] / dkx[0]
        t_ee = dix[1] - dkx[1]
        m_hh = -0.5 * math.pi * ix[0] / kx[0]
        t_hh = ix[1] - kx[1]
    else:
        iy, diy, _, _ = _upper_pairs(math.sqrt(eps * mu) * x, lmax)
        m_ee, t_ee = _t_split(math.sqrt(eps / mu), ix, dix, kx, dkx, iy, diy)
        m_hh, t_hh = _t_split(math.sqrt(mu / eps), ix, dix, kx, dkx, iy, diy)
    m_ee = np.asarray(m_ee, dtype=float).copy()
    m_hh = np.asarray(m_hh, dtype=float).copy()
    m_ee[0] = 0.0
    m_hh[0] = 0.0
    return m_ee, t_ee, m_hh, t_hh


def _validate_sphere_medium(eps: float, mu: float) -> None:
    if math.isinf(eps):
        return
    if not (eps > 0.0) or not math.isfinite(mu) or not (mu > 0.0):
        raise ConfigError(
            f"sphere response must satisfy eps > 0 (or inf) and mu > 0, "
            f"got eps={eps}, mu={mu}"
        )


def mie_t(l: int, eps: float, mu: float, radius_um: float,
          kappa_inv_um: float) -> tuple[float, float]:
    """Electric and magnetic multipole coefficients of a sphere in vacuum.

    ``eps`` and ``mu`` are the sphere's responses at the imaginary
    frequency corresponding to ``kappa_inv_um``; ``eps = math.inf`` selects
    the perfectly conducting limit.  Returns the raw ``(T^EE_l, T^HH_l)``,
    which grow like ``e^{2 kappa R}``; when that factor alone exceeds the
    double range the call refuses (use :func:`mie_t_matrix` for the scaled
    elements instead).  ``kappa = 0`` returns the exact static limit of the
    elements themselves, ``(0.0, 0.0)``.
    """
    if not isinstance(l, (int, np.integer)):
        raise ConfigError(f"multipole order must be an integer, got {l!r}")
    if l < 1:
        raise ConfigError(f"multipole order starts at 1, got {l}")
    if not (radius_um > 0.0):
        raise ConfigError(f"radius must be positive, got {radius_um}")
    if not (kappa_inv_um >= 0.0):
        raise ConfigError(f"kappa must be >= 0, got {kappa_inv_um}")
    _validate_sphere_medium(eps, mu)
    if kappa_inv_um == 0.0:
        return 0.0, 0.0
    if eps == 1.0 and mu == 1.0:
        return 0.0, 0.0
    x = kappa_inv_um * radius_um
    # Only the lower end needs guarding: above it, larger arguments only
    # defer the recurrence continuations (they start around l ~ x), so the
    # interior argument sqrt(eps mu) x is safe at any size.
    if x < _X_MIN or x > _X_MAX:
        raise OverflowDomain(
            f"radial argument kappa*R = {x} outside the stable envelope"
        )
    if int(l) > _L_MAX:
        raise OverflowDomain(f"order {l} above the stable envelope max {_L_MAX}")
    m_ee, t_ee, m_hh, t_hh = _t_split_arrays(eps, mu, x, int(l))
    out = []
    for m, t in ((m_ee[l], t_ee[l]), (m_hh[l], t_hh[l])):
        sign = math.copysign(1.0, m)
        raw = _times_exp(ScaledMagnitude(abs(float(m)), int(t)), 2.0 * x)
        if math.isinf(raw):
            raise OverflowDomain(
                f"raw coefficient growth e^(2 kappa R) = e^{2.0 * x:.1f} "
                "exceeds double precision; use mie_t_matrix for scaled elements"
            )
        out.append(sign * raw)
    return out[0], out[1]


@dataclass(frozen=True)
class MieTMatrix:
    """Scaled multipole coefficients of one sphere at one wavenumber.

    ``t_ee_scaled[l]`` and ``t_hh_scaled[l]`` hold ``T_l e^{-2 kappa R}``
    for l = 1..l_max (index 0 unused); the removed growth factor is
    recorded as ``scale_log = 2 kappa R`` (natural log).  At imaginary
    frequency all elements are real for passive media.

    ``last_term_ratio`` is the magnitude of the last retained element
    relative to the largest one, maximized over the two polarizations — a
    direct truncation diagnostic for the super-exponential large-l decay.
    """

    radius_um: float
    kappa_inv_um: float
    t_ee_scaled: np.ndarray
    t_hh_scaled: np.ndarray
    scale_log: float
    last_term_ratio: float

    @property
    def l_max(self) -> int:
        return len(self.t_ee_scaled) - 1


def mie_t_matrix(eps: float, mu: float, radius_um: float, kappa_inv_um: float,
                 l_max: int) -> MieTMatrix:
    """All multipole coefficients up to ``l_max``, in scaled representation.

    Unlike :func:`mie_t` this never forms the raw elements, so it works for
    arbitrarily large ``kappa R`` within the envelope.
    """
    if not isinstance(l_max, (int, np.integer)) or l_max < 1:
        raise ConfigError(f"l_max must be an integer >= 1, got {l_max!r}")
    if not (radius_um > 0.0):
        raise ConfigError(f"radius must be positive, got {radius_um}")
    if not (kappa_inv_um >= 0.0):
        raise ConfigError(f"kappa must be >= 0, got {kappa_inv_um}")
    _validate_sphere_medium(eps, mu)
    l_max = int(l_max)
    zeros = np.zeros(l_max + 1)
    if kappa_inv_um == 0.0 or (eps == 1.0 and mu == 1.0):
        return MieTMatrix(radius_um, kappa_inv_um, zeros, zeros.copy(), 0.0, 0.0)
    x = kappa_inv_um * radius_um
    if x < _X_MIN or x > _X_MAX:
        raise OverflowDomain(
            f"radial argument kappa*R = {x} outside the stable envelope"
        )
    m_ee, t_ee, m_hh, t_hh = _t_split_arrays(eps, mu, x, l_max)
    with np.errstate(under="ignore"):
        ee = np.ldexp(m_ee, t_ee)
        hh = np.ldexp(m_hh, t_hh)
    peak = max(float(np.max(np.abs(ee))), float(np.max(np.abs(hh))), 1e-300)
    last = max(abs(float(ee[-1])), abs(float(hh[-1])))
    return MieTMatrix(
        radius_um=radius_um,
        kappa_inv_um=kappa_inv_um,
        t_ee_scaled=ee,
        t_hh_scaled=hh,
        scale_log=2.0 * x,
        last_term_ratio=last / peak,
    )


# ---------------------------------------------------------------------------
# partial-wave energy sums
# ---------------------------------------------------------------------------


def _multipole_sum(eps: float, mu: float, radius_um: float, distance_um: float,
                   kappa_inv_um: float, rel_tol: float, l_cap: int):
    """Partial-wave bracket at one wavenumber: ``sum_l (2l+1) (2/pi)^2
    { T^HH K^2 - T^EE [K'^2 + l(l+1) K^2/(kappa a)^2] }``.

    Evaluated with ``e^{-2 kappa d}`` factored out (the caller applies it);
    all products are combined in split form.  Returns ``(value, tail,
    l_used)`` where ``tail`` is the magnitude of the largest of the last
    three retained terms.
    """
    a = radius_um + distance_um
    x = kappa_inv_um * radius_um
    z = kappa_inv_um * a
    lmax = max(math.ceil(5.0 * z) + 20, 40)
    if lmax > l_cap:
        raise NonConvergentMultipoleSum(
            f"required starting order {lmax} exceeds the cap {l_cap}"
        )
    while True:
        l = np.arange(lmax + 1, dtype=float)
        m_ee, t_ee, m_hh, t_hh = _t_split_arrays(eps, mu, x, lmax)
        _, _, kz, dkz = _upper_pairs(z, lmax)
        k2_m, k2_t = _mul(kz[0], kz[1], kz[0], kz[1])
        dk2_m, dk2_t = _mul(dkz[0], dkz[1], dkz[0], dkz[1])
        inner_m, inner_t = _add(dk2_m, dk2_t, (l * (l + 1) / z**2) * k2_m, k2_t)
        hh_m, hh_t = _mul(m_hh, t_hh, k2_m, k2_t)
        ee_m, ee_t = _mul(m_ee, t_ee, inner_m, inner_t)
        br_m, br_t = _sub(hh_m, hh_t, ee_m, ee_t)
        with np.errstate(under="ignore"):
            vals = (2.0 * l + 1.0) * (2.0 / math.pi) ** 2 * np.ldexp(br_m, br_t)
        vals[0] = 0.0
        total = float(np.add.reduce(vals))
        tail = float(np.max(np.abs(vals[-3:])))
        if tail <= rel_tol * max(abs(total), 1e-300):
            return total, tail, lmax
        lmax = int(1.6 * lmax) + 64
        if lmax > l_cap:
            raise NonConvergentMultipoleSum(
                f"multipole sum not converged to {rel_tol} below order {l_cap} "
                f"(kappa*a = {z:.3g})"
            )


def _static_multipole_sum(eps_static: float, radius_um: float,
                          distance_um: float, rel_tol: float) -> float:
    """Zero-frequency limit of ``kappa *`` the partial-wave bracket.

    The wavenumber dependence drops out analytically and the bracket
    collapses to the image-type series
    ``-(1/a) sum_l (2l+1) l (l+1) g_l rho^{2l+1}`` with ``rho = R/a`` and
    ``g_l = (eps - 1) / ((l + 1) + l eps)`` (``1/l`` for a perfect
    conductor).
    """
    if eps_static == 1.0:
        return 0.0
    a = radius_um + distance_um
    rho = radius_um / a
    pec = math.isinf(eps_static)
    total = 0.0
    l = 1
    block = 4096
    while True:
        ll = np.arange(l, l + block, dtype=float)
        if pec:
            g = 1.0 / ll
        else:
            g = (eps_static - 1.0) / ((ll + 1.0) + ll * eps_static)
        with np.errstate(under="ignore"):
            terms = (2.0 * ll + 1.0) * ll * (ll + 1.0) * g * rho ** (2.0 * ll + 1.0)
        total += float(np.add.reduce(terms))
        if abs(float(terms[-1])) <= rel_tol * abs(total):
            return -total / a
        l += block
        if l > 50_000_000:
            raise NonConvergentMultipoleSum(
                f"static image series not converged (R/d = {radius_um / distance_um:.3g})"
            )


@dataclass(frozen=True)
class SphereCPReport:
    """Sphere potential with its convergence diagnostics.

    ``truncation_ev`` conservatively bounds the effect of both adaptive
    cutoffs: twice the last retained frequency term plus the per-frequency
    multipole tails (quadrature error estimate at zero temperature).
    """

    energy_ev: float
    temperature_k: float
    n_matsubara: int
    l_max_used: int
    truncation_ev: float


def _as_alpha(alpha) -> callable:
    if callable(alpha):
        return alpha
    if isinstance(alpha, (int, float)) and math.isfinite(alpha):
        value = float(alpha)
        return lambda xi_ev: value
    raise ConfigError(
        f"alpha must be a finite number or a callable of xi (eV), got {alpha!r}"
    )


def sphere_cp_report(radius_um: float, distance_um: float, temperature_k: float,
                     alpha, material: Material, *, rel_tol: float = 1e-9,
                     l_cap: int = 100_000,
                     n_cap: int = 100_000) -> SphereCPReport:
    """Exact sphere potential with diagnostics; see :func:`sphere_cp`."""
    if not (radius_um > 0.0):
        raise ConfigError(f"radius must be positive, got {radius_um}")
    if not (distance_um > 0.0):
        raise ConfigError(f"distance must be positive, got {distance_um}")
    if not (temperature_k >= 0.0):
        raise ConfigError(f"temperature must be >= 0, got {temperature_k}")
    alpha_fn = _as_alpha(alpha)
    mu = material.mu
    a = radius_um + distance_um

    def rung(kappa: float, eps: float):
        """Energy density factor at one wavenumber, without alpha."""
        if eps == 1.0 and mu == 1.0:
            return 0.0, 0.0, 0
        value, tail, l_used = _multipole_sum(
            eps, mu, radius_um, distance_um, kappa, rel_tol, l_cap
        )
        damp = math.exp(-2.0 * kappa * distance_um)
        return (kappa / a**2) * value * damp, (kappa / a**2) * tail * damp, l_used

    if temperature_k == 0.0:
        return _zero_temperature_report(
            radius_um, distance_um, alpha_fn, material, rung, rel_tol
        )

    kbt = K_B_EV_PER_K * temperature_k
    step = matsubara_xi(temperature_k, 1)
    eps0 = epsilon_or_pec(material, 0.0)
    static = _static_multipole_sum(eps0, radius_um, distance_um, rel_tol)
    total = matsubara_weight(0) * alpha_fn(0.0) * static / a**2
    tail_sum = 0.0
    l_max_used = 0
    below = 0
    n = 0
    last_term = 0.0
    while below < 2:
        n += 1
        if n > n_cap:
            raise QuadratureNonConvergence(
                f"Matsubara ladder not converged within {n_cap} rungs; "
                "at very low temperature use the zero-temperature path"
            )
        xi = step * n
        eps = epsilon_or_pec(material, xi)
        kappa = xi / HBAR_C_EV_UM
        term_density, tail, l_used = rung(kappa, eps)
        term = alpha_fn(xi) * term_density
        total += term
        tail_sum += abs(alpha_fn(xi)) * tail
        l_max_used = max(l_max_used, l_used)
        last_term = term
        below = below + 1 if abs(term) <= rel_tol * abs(total) else 0
    return SphereCPReport(
        energy_ev=kbt * total,
        temperature_k=temperature_k,
        n_matsubara=n,
        l_max_used=l_max_used,
        truncation_ev=kbt * (2.0 * abs(last_term) + tail_sum),
    )


def _zero_temperature_report(radius_um, distance_um, alpha_fn, material, rung,
                             rel_tol) -> SphereCPReport:
    """Ground-state potential: the frequency sum becomes an integral.

    Integrates over ``u = kappa d`` (the natural decay variable) with the
    anchored doubling rule; the integrand is smooth and finite at ``u = 0``
    because ``kappa *`` the partial-wave bracket has a static limit.
    """
    d = distance_um
    diag = {"l_max": 0, "tail": 0.0}

    def integrand(u_nodes):
        out = np.empty_like(u_nodes)
        for idx, u in enumerate(u_nodes):
            kappa = float(u) / d
            xi = HBAR_C_EV_UM * kappa
            eps = epsilon_or_pec(material, xi)
            density, tail, l_used = rung(kappa, eps)
            out[idx] = alpha_fn(xi) * density
            diag["l_max"] = max(diag["l_max"], l_used)
            diag["tail"] += abs(alpha_fn(xi)) * tail
        return out

    value, err = integrate_with_doubling(
        integrand, 0.0, rel_tol=rel_tol, n_start=8, max_doublings=4
    )
    prefactor = HBAR_C_EV_UM / (2.0 * math.pi * d)
    return SphereCPReport(
        energy_ev=prefactor * value,
        temperature_k=0.0,
        n_matsubara=0,
        l_max_used=diag["l_max"],
        truncation_ev=prefactor * (abs(err) + diag["tail"]),
    )


def sphere_cp(radius_um: float, distance_um: float, temperature_k: float,
              alpha, material: Material, *, rel_tol: float = 1e-9,
              l_cap: int = 100_000, n_cap: int = 100_000) -> float:
    """Exact Casimir-Polder energy (eV) of an isotropic particle near a sphere.

    ``alpha`` is the particle's isotropic polarizability in µm³, either a
    constant or a callable of imaginary frequency in eV; ``material`` is
    the sphere's response and the surroundings are vacuum.  A positive
    temperature selects the discrete frequency ladder (with the usual
    half-weight static rung, whose diverging-conductivity case is handled
    as a perfect conductor); zero temperature replaces the ladder by an
    integral over imaginary frequency.

    The multipole order adapts per frequency, starting at
    ``ceil(5 kappa a) + 20`` and extending until the last terms fall below
    ``rel_tol`` of the running sum; ``l_cap`` bounds the extension.
    """
    return sphere_cp_report(
        radius_um, distance_um, temperature_k, alpha, material,
        rel_tol=rel_tol, l_cap=l_cap, n_cap=n_cap,
    ).energy_ev
