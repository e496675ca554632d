"""Dielectric response models evaluated on the imaginary frequency axis.

All model evaluations take a non-negative imaginary frequency ``xi`` in eV
and return the relative permittivity ``eps(i xi)``, which is real and
monotonically decreasing towards 1 (or towards ``eps_inf``) for the causal
models used here.  Frequencies, oscillator strengths and damping rates are
all expressed in eV so that material files stay unit-free apart from the
energy scale.

The module also provides the Matsubara frequency ladder used by every
finite-temperature sum, and a small container pairing the ambient and
surface responses at one frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

from .constants import HBAR_C_EV_UM, matsubara_spacing_ev
from .errors import (
    ConfigError,
    NegativeFrequency,
    StaticDrudeDivergence,
    UnknownMaterial,
    ZeroTemperatureLadder,
)

__all__ = [
    "Oscillator",
    "DrudePlusOscillators",
    "OscillatorsOnly",
    "DebyeSingle",
    "TwoBand",
    "Constant",
    "PerfectConductor",
    "Material",
    "ImaginaryFrequency",
    "MediumResponse",
    "builtin",
    "available",
    "epsilon_or_pec",
    "matsubara_xi",
    "matsubara_weight",
    "matsubara_ladder",
    "material_from_toml",
    "material_to_toml",
]


# --------------------------------------------------------------------------
# response models
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Oscillator:
    """One Lorentz oscillator: f / (omega^2 + g*xi + xi^2) on the imaginary axis."""

    omega_ev: float
    f_ev2: float
    g_ev: float

    def eps_term(self, xi_ev: float) -> float:
        return self.f_ev2 / (self.omega_ev**2 + self.g_ev * xi_ev + xi_ev**2)


@dataclass(frozen=True)
class DrudePlusOscillators:
    """Drude term plus a sum of Lorentz oscillators (metals).

    The Drude contribution ``omega_p^2 / (xi (xi + gamma))`` diverges at
    ``xi = 0``; evaluating there raises :class:`StaticDrudeDivergence` so the
    caller can substitute the perfectly conducting limit explicitly.
    """

    omega_p_ev: float
    gamma_ev: float
    oscillators: tuple[Oscillator, ...] = ()

    def eps(self, xi_ev: float) -> float:
        if xi_ev == 0.0:
            raise StaticDrudeDivergence(
                "Drude permittivity diverges at xi=0; use the perfect-conductor "
                "limit for the static term"
            )
        val = 1.0 + self.omega_p_ev**2 / (xi_ev * (xi_ev + self.gamma_ev))
        for osc in self.oscillators:
            val += osc.eps_term(xi_ev)
        return val


@dataclass(frozen=True)
class OscillatorsOnly:
    """Sum of Lorentz oscillators with finite static limit (insulators)."""

    oscillators: tuple[Oscillator, ...]

    def eps(self, xi_ev: float) -> float:
        val = 1.0
        for osc in self.oscillators:
            val += osc.eps_term(xi_ev)
        return val


@dataclass(frozen=True)
class DebyeSingle:
    """Single-pole interpolation between a static and a UV permittivity."""

    eps_inf: float
    eps_static: float
    omega_uv_ev: float

    def eps(self, xi_ev: float) -> float:
        return self.eps_inf + (self.eps_static - self.eps_inf) / (
            1.0 + (xi_ev / self.omega_uv_ev) ** 2
        )


@dataclass(frozen=True)
class TwoBand:
    """Two Debye-type bands (one IR, one UV) on top of vacuum."""

    c_ir: float
    omega_ir_ev: float
    c_uv: float
    omega_uv_ev: float

    def eps(self, xi_ev: float) -> float:
        return (
            1.0
            + self.c_ir / (1.0 + (xi_ev / self.omega_ir_ev) ** 2)
            + self.c_uv / (1.0 + (xi_ev / self.omega_uv_ev) ** 2)
        )


@dataclass(frozen=True)
class Constant:
    """Frequency-independent permittivity (vacuum, ideal dielectric)."""

    value: float = 1.0

    def eps(self, xi_ev: float) -> float:
        return self.value


@dataclass(frozen=True)
class PerfectConductor:
    """Idealized mirror: infinite permittivity at every frequency."""

    def eps(self, xi_ev: float) -> float:
        return math.inf


_MODELS = (
    DrudePlusOscillators,
    OscillatorsOnly,
    DebyeSingle,
    TwoBand,
    Constant,
    PerfectConductor,
)


@dataclass(frozen=True)
class Material:
    """A named response model with its (constant) magnetic permeability."""

    name: str
    model: object
    mu: float = 1.0

    def epsilon(self, xi_ev: float) -> float:
        """Relative permittivity at imaginary frequency ``xi_ev`` (eV).

        Raises
        ------
        NegativeFrequency
            If ``xi_ev`` is negative.
        StaticDrudeDivergence
            At ``xi_ev = 0`` for Drude-type models.
        """
        if xi_ev < 0.0:
            raise NegativeFrequency(f"xi must be >= 0, got {xi_ev}")
        return self.model.eps(xi_ev)

    @property
    def is_pec(self) -> bool:
        return isinstance(self.model, PerfectConductor)


def epsilon_or_pec(material: Material, xi_ev: float) -> float:
    """Permittivity with the static Drude divergence mapped to ``inf``.

    Matsubara sums treat the diverging ``n = 0`` Drude term as a perfect
    conductor; this helper returns ``math.inf`` there instead of raising.
    """
    try:
        return material.epsilon(xi_ev)
    except StaticDrudeDivergence:
        return math.inf


# --------------------------------------------------------------------------
# built-in materials
# --------------------------------------------------------------------------

_GOLD_OSCILLATORS = (
    Oscillator(3.05, 7.091, 0.75),
    Oscillator(4.15, 41.46, 1.85),
    Oscillator(5.4, 2.7, 1.0),
    Oscillator(8.5, 154.7, 7.0),
    Oscillator(13.5, 44.55, 6.0),
    Oscillator(21.5, 309.6, 9.0),
)

_POLYSTYRENE_OSCILLATORS = (
    Oscillator(6.35, 14.6, 0.65),
    Oscillator(14.0, 96.9, 5.0),
    Oscillator(11.0, 44.4, 3.5),
    Oscillator(20.1, 136.9, 11.5),
)

GOLD = Material("gold", DrudePlusOscillators(9.0, 0.035, _GOLD_OSCILLATORS))
SILICON = Material("silicon", DebyeSingle(1.035, 11.87, 4.34))
POLYSTYRENE = Material("polystyrene", OscillatorsOnly(_POLYSTYRENE_OSCILLATORS))
BROMOBENZENE = Material("bromobenzene", TwoBand(2.967, 0.360, 1.335, 8.465))
VACUUM = Material("vacuum", Constant(1.0))
PEC = Material("pec", PerfectConductor())

_BUILTINS = {
    m.name: m for m in (GOLD, SILICON, POLYSTYRENE, BROMOBENZENE, VACUUM, PEC)
}


def builtin(name: str) -> Material:
    """Look up a built-in material by (case-insensitive) name."""
    try:
        return _BUILTINS[name.lower()]
    except KeyError:
        raise UnknownMaterial(
            f"unknown material {name!r}; available: {', '.join(sorted(_BUILTINS))}"
        ) from None


def available() -> tuple[str, ...]:
    return tuple(sorted(_BUILTINS))


# --------------------------------------------------------------------------
# Matsubara ladder
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ImaginaryFrequency:
    """One rung of the Matsubara ladder.

    ``kappa_inv_um`` is the vacuum wavenumber ``xi / (hbar c)`` in 1/um that
    multiplies distances in the reflection kernels.
    """

    n: int
    xi_ev: float
    kappa_inv_um: float


def matsubara_xi(temperature_k: float, n: int) -> float:
    """n-th Matsubara frequency ``2 pi k_B T n`` in eV."""
    if temperature_k < 0.0:
        raise NegativeFrequency(f"temperature must be >= 0, got {temperature_k}")
    if temperature_k == 0.0:
        raise ZeroTemperatureLadder(
            "the Matsubara ladder is not defined at T=0; integrate over "
            "imaginary frequency instead"
        )
    if n < 0:
        raise NegativeFrequency(f"Matsubara index must be >= 0, got {n}")
    return matsubara_spacing_ev(temperature_k) * n


def matsubara_weight(n: int) -> float:
    """Summation weight: the n=0 term enters with half weight."""
    return 0.5 if n == 0 else 1.0


def matsubara_ladder(temperature_k: float, n_max: int) -> list[ImaginaryFrequency]:
    """Rungs n = 0..n_max of the ladder at temperature ``temperature_k``."""
    step = matsubara_xi(temperature_k, 1)
    out = []
    for n in range(n_max + 1):
        xi = step * n
        out.append(ImaginaryFrequency(n, xi, xi / HBAR_C_EV_UM))
    return out


# --------------------------------------------------------------------------
# ambient/surface pairing
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MediumResponse:
    """Ambient (0) and surface (1) response at one imaginary frequency.

    ``eps1 = math.inf`` marks the perfectly conducting surface; the kernel
    routines switch to the analytic limit in that case rather than feeding
    the infinity through the generic formulas.
    """

    eps0: float
    mu0: float
    eps1: float
    mu1: float

    @property
    def is_pec(self) -> bool:
        return math.isinf(self.eps1)

    @property
    def zero_contrast(self) -> bool:
        return self.eps0 == self.eps1 and self.mu0 == self.mu1


# --------------------------------------------------------------------------
# TOML interchange
# --------------------------------------------------------------------------

_KINDS = {
    DrudePlusOscillators: "drude_oscillators",
    OscillatorsOnly: "oscillators",
    DebyeSingle: "debye",
    TwoBand: "two_band",
    Constant: "constant",
    PerfectConductor: "pec",
}


def _fmt(x: float) -> str:
    """Shortest round-tripping literal, always with a decimal point."""
    s = repr(float(x))
    if "." not in s and "e" not in s and "inf" not in s and "nan" not in s:
        s += ".0"
    return s


def _require(table: dict, key: str, context: str):
    try:
        return table[key]
    except KeyError:
        raise ConfigError(f"missing key {key!r} in {context}") from None


def material_to_toml(material: Material) -> str:
    """Serialize a material to TOML text.

    The layout uses one top-level table per model family: ``[drude]`` plus
    repeated ``[[oscillators]]`` for metals, ``[[oscillators]]`` alone for
    insulators, and single ``[debye]`` / ``[two_band]`` / ``[constant]``
    tables otherwise.
    """
    model = material.model
    lines = [
        f'name = "{material.name}"',
        f'kind = "{_KINDS[type(model)]}"',
        f"mu = {_fmt(material.mu)}",
    ]

    def oscillator_tables(oscs: tuple[Oscillator, ...]) -> None:
        for osc in oscs:
            lines.append("")
            lines.append("[[oscillators]]")
            lines.append(f"omega_eV = {_fmt(osc.omega_ev)}")
            lines.append(f"f_eV2 = {_fmt(osc.f_ev2)}")
            lines.append(f"g_eV = {_fmt(osc.g_ev)}")

    if isinstance(model, DrudePlusOscillators):
        lines.append("")
        lines.append("[drude]")
        lines.append(f"omega_p_eV = {_fmt(model.omega_p_ev)}")
        lines.append(f"gamma_eV = {_fmt(model.gamma_ev)}")
        oscillator_tables(model.oscillators)
    elif isinstance(model, OscillatorsOnly):
        oscillator_tables(model.oscillators)
    elif isinstance(model, DebyeSingle):
        lines.append("")
        lines.append("[debye]")
        lines.append(f"eps_inf = {_fmt(model.eps_inf)}")
        lines.append(f"eps_static = {_fmt(model.eps_static)}")
        lines.append(f"omega_uv_eV = {_fmt(model.omega_uv_ev)}")
    elif isinstance(model, TwoBand):
        lines.append("")
        lines.append("[two_band]")
        lines.append(f"c_ir = {_fmt(model.c_ir)}")
        lines.append(f"omega_ir_eV = {_fmt(model.omega_ir_ev)}")
        lines.append(f"c_uv = {_fmt(model.c_uv)}")
        lines.append(f"omega_uv_eV = {_fmt(model.omega_uv_ev)}")
    elif isinstance(model, Constant):
        lines.append("")
        lines.append("[constant]")
        lines.append(f"value = {_fmt(model.value)}")
    elif not isinstance(model, PerfectConductor):  # pragma: no cover
        raise ConfigError(f"cannot serialize model of type {type(model).__name__}")

    return "\n".join(lines) + "\n"


def _parse_oscillators(data: dict, context: str) -> tuple[Oscillator, ...]:
    tables = _require(data, "oscillators", context)
    oscs = []
    for i, t in enumerate(tables):
        where = f"{context} oscillators[{i}]"
        oscs.append(
            Oscillator(
                float(_require(t, "omega_eV", where)),
                float(_require(t, "f_eV2", where)),
                float(_require(t, "g_eV", where)),
            )
        )
    return tuple(oscs)


def material_from_toml(text: str) -> Material:
    """Parse a material from TOML text produced by :func:`material_to_toml`."""
    data = tomllib.loads(text)
    name = str(_require(data, "name", "material"))
    kind = str(_require(data, "kind", "material"))
    mu = float(data.get("mu", 1.0))
    context = f"material {name!r}"

    if kind == "drude_oscillators":
        drude = _require(data, "drude", context)
        model: object = DrudePlusOscillators(
            float(_require(drude, "omega_p_eV", f"{context} [drude]")),
            float(_require(drude, "gamma_eV", f"{context} [drude]")),
            _parse_oscillators(data, context) if "oscillators" in data else (),
        )
    elif kind == "oscillators":
        model = OscillatorsOnly(_parse_oscillators(data, context))
    elif kind == "debye":
        t = _require(data, "debye", context)
        where = f"{context} [debye]"
        model = DebyeSingle(
            float(_require(t, "eps_inf", where)),
            float(_require(t, "eps_static", where)),
            float(_require(t, "omega_uv_eV", where)),
        )
    elif kind == "two_band":
        t = _require(data, "two_band", context)
        where = f"{context} [two_band]"
        model = TwoBand(
            float(_require(t, "c_ir", where)),
            float(_require(t, "omega_ir_eV", where)),
            float(_require(t, "c_uv", where)),
            float(_require(t, "omega_uv_eV", where)),
        )
    elif kind == "constant":
        t = _require(data, "constant", context)
        model = Constant(float(_require(t, "value", f"{context} [constant]")))
    elif kind == "pec":
        model = PerfectConductor()
    else:
        raise ConfigError(f"unknown material kind {kind!r} in {context}")

    return Material(name, model, mu)
