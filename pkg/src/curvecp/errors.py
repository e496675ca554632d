"""Exception taxonomy.

Every error raised on a user-reachable path derives from CurveCPError so that
the CLI can map failures to exit codes (config errors vs numerical failures).
"""

from __future__ import annotations


class CurveCPError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(CurveCPError):
    """Malformed or inconsistent user configuration (CLI exit code 2)."""


class UnknownMaterial(ConfigError):
    """Requested material name is not registered."""


class NegativeFrequency(CurveCPError):
    """Imaginary-frequency argument xi must be >= 0."""


class StaticDrudeDivergence(CurveCPError):
    """eps(i*0) diverges for a Drude metal; caller must use the PEC limit."""


class ZeroTemperatureLadder(CurveCPError):
    """A discrete Matsubara ladder was requested at T=0 (use the integral)."""


class PECUnsupportedSector(CurveCPError):
    """Operation undefined in the perfect-conductor limit (e.g. eps(i xi))."""


class SingularResolvent(CurveCPError):
    """Multiple-scattering resolvent is (numerically) singular."""


class QuadratureNonConvergence(CurveCPError):
    """Momentum/frequency integral failed to reach the requested tolerance."""


class PatternViolation(CurveCPError):
    """Assembled curvature response violates its required symmetry pattern."""


class NonConvergentMultipoleSum(CurveCPError):
    """Sphere multipole series failed to converge within the l cap."""


class OverflowDomain(CurveCPError):
    """Arguments outside the numerically safe domain of a special function."""


class GridTooCoarse(CurveCPError):
    """Requested interpolation/audit cannot be met by the tabulated grid."""


class TableCoverage(CurveCPError):
    """Lookup outside the tabulated range without extrapolation enabled."""


class CacheWriteFailure(CurveCPError):
    """Could not persist a table/cache artifact atomically."""
