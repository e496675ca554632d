"""Cached tables of the five response coefficients over a wavenumber grid.

A table holds beta1_0, beta2_0, beta1_2, beta2_2, beta3_2 sampled on a
log-spaced kappabar grid for one fixed pair of medium responses.  Lookups at
grid nodes return the stored values bit-for-bit; between nodes a cubic spline
interpolates the values with the dominant decay envelope
``exp(-2 sqrt(eps0 mu0) kappabar)`` stripped, which keeps the interpolated
residual polynomial-like across the exponential tail.  Every build runs a
midpoint audit against direct evaluation and records the measured error.

Cache files come in two formats: ``npz`` (compact binary) and ``csv``
(plain text, columns kappabar, beta1_0, beta2_0, beta1_2, beta2_2, beta3_2).
Both embed a schema version, the medium response, the grid specification and
the audit result, and round-trip the arrays bit-exactly.  Writes are atomic
(temporary file plus rename).
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import io
import math
import os
import re
import tempfile
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .curvature import beta0, beta2
from .errors import CacheWriteFailure, ConfigError, GridTooCoarse, TableCoverage
from .materials import MediumResponse

__all__ = [
    "COLUMNS",
    "DEFAULT_GRID",
    "BetaTable",
    "GridSpec",
    "TableCache",
    "build_table",
    "load_table",
]

_SCHEMA = 1

COLUMNS = ("beta1_0", "beta2_0", "beta1_2", "beta2_2", "beta3_2")


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced wavenumber grid: bounds and node count."""

    kmin: float = 1e-4
    kmax: float = 40.0
    n: int = 120

    def __post_init__(self):
        if not 0.0 < self.kmin < self.kmax:
            raise ConfigError("grid requires 0 < kmin < kmax")
        if self.n < 8:
            raise ConfigError("grid requires at least 8 nodes")

    def nodes(self) -> np.ndarray:
        return np.geomspace(self.kmin, self.kmax, self.n)

    def midpoints(self) -> np.ndarray:
        nodes = self.nodes()
        return np.sqrt(nodes[:-1] * nodes[1:])


DEFAULT_GRID = GridSpec()


def _media_key(media: MediumResponse) -> str:
    return "|".join(
        f"{v:.17g}" for v in (media.eps0, media.mu0, media.eps1, media.mu1)
    )


def _default_pair_id(media: MediumResponse) -> str:
    surface = "pec" if media.is_pec else f"eps{media.eps1:g}-mu{media.mu1:g}"
    return f"amb-eps{media.eps0:g}-mu{media.mu0:g}--{surface}"


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "-", text).strip("-") or "table"


@dataclass(frozen=True)
class BetaTable:
    """Five coefficient columns over one wavenumber grid, one medium pair."""

    pair_id: str
    media: MediumResponse
    grid: np.ndarray
    values: np.ndarray
    audit_error: float
    interp_order: int = 3
    schema: int = _SCHEMA
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or np.any(np.diff(grid) <= 0.0):
            raise ConfigError("table grid must be strictly increasing")
        if values.shape != (grid.size, len(COLUMNS)):
            raise ConfigError("table values must have one row per grid node")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        stripped = values * np.exp(2.0 * self._decay_rate() * grid)[:, None]
        object.__setattr__(self, "_spline", CubicSpline(grid, stripped, axis=0))

    def _decay_rate(self) -> float:
        return math.sqrt(self.media.eps0 * self.media.mu0)

    @property
    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"curvecp-beta-table-v{self.schema}".encode())
        h.update(_media_key(self.media).encode())
        h.update(self.grid.tobytes())
        h.update(self.values.tobytes())
        return h.hexdigest()

    def covers(self, kappabar) -> bool:
        k = np.asarray(kappabar, dtype=float)
        return bool(np.all(k >= self.grid[0]) and np.all(k <= self.grid[-1]))

    def evaluate(self, kappabar, allow_extrapolation: bool = False) -> np.ndarray:
        """Coefficient rows at ``kappabar`` (scalar -> (5,), array -> (m, 5)).

        Grid nodes are returned bit-for-bit from storage.  Outside the grid,
        ``allow_extrapolation`` rides the stripped spline's natural
        extension: essentially the static plateau below ``kmin`` and the
        decay envelope above ``kmax``.  Without it, TableCoverage.
        """
        k = np.asarray(kappabar, dtype=float)
        scalar = k.ndim == 0
        k = np.atleast_1d(k)
        if not allow_extrapolation and (
            np.any(k < self.grid[0]) or np.any(k > self.grid[-1])
        ):
            raise TableCoverage(
                f"kappabar range [{k.min():.3g}, {k.max():.3g}] outside table "
                f"grid [{self.grid[0]:.3g}, {self.grid[-1]:.3g}]"
            )
        out = self._spline(k) * np.exp(-2.0 * self._decay_rate() * k)[:, None]
        idx = np.searchsorted(self.grid, k)
        idx = np.clip(idx, 0, self.grid.size - 1)
        exact = self.grid[idx] == k
        if np.any(exact):
            out[exact] = self.values[idx[exact]]
        return out[0] if scalar else out

    # -- persistence --------------------------------------------------------

    def save(self, path: str | os.PathLike) -> str:
        """Persist atomically; format chosen by extension (.npz or .csv)."""
        path = os.fspath(path)
        if path.endswith(".npz"):
            payload = self._npz_bytes()
        elif path.endswith(".csv"):
            payload = self._csv_text().encode()
        else:
            raise ConfigError(f"unsupported table format for '{path}'")
        try:
            directory = os.path.dirname(path) or "."
            os.makedirs(directory, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(payload)
                os.replace(tmp, path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
        except OSError as exc:
            raise CacheWriteFailure(f"could not write table to {path}: {exc}") from exc
        return path

    def _npz_bytes(self) -> bytes:
        buf = io.BytesIO()
        np.savez(
            buf,
            schema=np.int64(self.schema),
            pair_id=np.str_(self.pair_id),
            media=np.array(
                [self.media.eps0, self.media.mu0, self.media.eps1, self.media.mu1]
            ),
            grid=self.grid,
            values=self.values,
            audit_error=np.float64(self.audit_error),
            interp_order=np.int64(self.interp_order),
            content_hash=np.str_(self.content_hash),
        )
        return buf.getvalue()

    def _csv_text(self) -> str:
        m = self.media
        lines = [
            f"# schema = {self.schema}",
            f"# pair_id = {self.pair_id}",
            f"# eps0 = {m.eps0:.17g}",
            f"# mu0 = {m.mu0:.17g}",
            f"# eps1 = {m.eps1:.17g}",
            f"# mu1 = {m.mu1:.17g}",
            f"# audit_error = {self.audit_error:.17g}",
            f"# interp_order = {self.interp_order}",
            f"# content_hash = {self.content_hash}",
            "kappabar," + ",".join(COLUMNS),
        ]
        for k, row in zip(self.grid, self.values):
            lines.append(",".join(f"{v:.17g}" for v in (k, *row)))
        return "\n".join(lines) + "\n"


def _audit(table: BetaTable, grid: GridSpec, rel_tol: float) -> float:
    """Max midpoint interpolation error, relative to each column's peak."""
    mids = grid.midpoints()
    direct = np.array([_node_values(k, table.media, rel_tol) for k in mids])
    interp = table.evaluate(mids)
    peak = np.maximum(np.max(np.abs(direct), axis=0), 1e-300)
    return float(np.max(np.abs(interp - direct) / peak[None, :]))


def _node_values(kappabar: float, media: MediumResponse, rel_tol: float) -> np.ndarray:
    b1_0, b2_0 = beta0(kappabar, media, rel_tol=min(rel_tol, 1e-9))
    b1_2, b2_2, b3_2 = beta2(kappabar, media, rel_tol=rel_tol)
    return np.array([b1_0, b2_0, b1_2, b2_2, b3_2])


def _node_values_packed(args) -> np.ndarray:
    kappabar, media, rel_tol = args
    return _node_values(kappabar, media, rel_tol)


def build_table(
    media: MediumResponse,
    grid: GridSpec = DEFAULT_GRID,
    *,
    pair_id: str | None = None,
    rel_tol: float = 1e-8,
    audit_tol: float = 1e-6,
    jobs: int = 1,
) -> BetaTable:
    """Evaluate the five coefficients over the grid and audit the result.

    Node evaluations are independent and parallelize over ``jobs`` worker
    processes.  The midpoint audit compares interpolated against directly
    computed values at the geometric midpoints of every grid interval;
    its maximum error (relative to each column's peak magnitude) is recorded
    on the table and must stay below ``audit_tol``.

    Raises
    ------
    GridTooCoarse
        If the midpoint audit exceeds ``audit_tol``.
    """
    nodes = grid.nodes()
    if jobs > 1:
        work = [(float(k), media, rel_tol) for k in nodes]
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_node_values_packed, work))
    else:
        rows = [_node_values(float(k), media, rel_tol) for k in nodes]

    table = BetaTable(
        pair_id=pair_id or _default_pair_id(media),
        media=media,
        grid=nodes,
        values=np.array(rows),
        audit_error=0.0,
    )
    err = _audit(table, grid, rel_tol)
    if err > audit_tol:
        raise GridTooCoarse(
            f"midpoint audit error {err:.3e} exceeds {audit_tol:.1e}; "
            f"increase the node count (n={grid.n})"
        )
    return BetaTable(
        pair_id=table.pair_id,
        media=media,
        grid=nodes,
        values=table.values,
        audit_error=err,
    )


def load_table(path: str | os.PathLike) -> BetaTable:
    """Read a table back; validates schema and stored content hash."""
    path = os.fspath(path)
    if path.endswith(".npz"):
        table, stored_hash = _load_npz(path)
    elif path.endswith(".csv"):
        table, stored_hash = _load_csv(path)
    else:
        raise ConfigError(f"unsupported table format for '{path}'")
    if table.schema != _SCHEMA:
        raise ConfigError(f"table {path} has schema {table.schema}, expected {_SCHEMA}")
    if stored_hash != table.content_hash:
        raise ConfigError(f"table {path} failed its content-hash check")
    return table


def _load_npz(path: str) -> tuple[BetaTable, str]:
    with np.load(path) as data:
        media = MediumResponse(*(float(v) for v in data["media"]))
        table = BetaTable(
            pair_id=str(data["pair_id"]),
            media=media,
            grid=data["grid"].copy(),
            values=data["values"].copy(),
            audit_error=float(data["audit_error"]),
            interp_order=int(data["interp_order"]),
            schema=int(data["schema"]),
        )
        return table, str(data["content_hash"])


def _load_csv(path: str) -> tuple[BetaTable, str]:
    meta: dict[str, str] = {}
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line.lstrip("# ").partition("=")
                meta[key.strip()] = value.strip()
            elif line.startswith("kappabar"):
                continue
            else:
                rows.append([float(v) for v in line.split(",")])
    try:
        data = np.array(rows)
        media = MediumResponse(
            float(meta["eps0"]), float(meta["mu0"]),
            float(meta["eps1"]), float(meta["mu1"]),
        )
        table = BetaTable(
            pair_id=meta["pair_id"],
            media=media,
            grid=data[:, 0],
            values=data[:, 1:],
            audit_error=float(meta["audit_error"]),
            interp_order=int(meta["interp_order"]),
            schema=int(meta["schema"]),
        )
        return table, meta["content_hash"]
    except (KeyError, IndexError, ValueError) as exc:
        raise ConfigError(f"malformed table file {path}: {exc}") from exc


class TableCache:
    """Directory of persisted tables, keyed by medium pair and grid.

    ``get_or_build`` returns a cached table when one matches the requested
    media and grid, building and persisting it otherwise.  File names embed
    the pair id and a key hash, so distinct grids or media never collide.
    """

    def __init__(self, directory: str | os.PathLike, fmt: str = "npz"):
        if fmt not in ("npz", "csv"):
            raise ConfigError(f"unsupported cache format '{fmt}'")
        self.directory = os.fspath(directory)
        self.fmt = fmt

    def _path(self, media: MediumResponse, grid: GridSpec, pair_id: str) -> str:
        h = hashlib.sha256()
        h.update(_media_key(media).encode())
        h.update(f"{grid.kmin:.17g}|{grid.kmax:.17g}|{grid.n}".encode())
        name = f"{_slug(pair_id)}-{h.hexdigest()[:12]}.{self.fmt}"
        return os.path.join(self.directory, name)

    def get_or_build(
        self,
        media: MediumResponse,
        grid: GridSpec = DEFAULT_GRID,
        *,
        pair_id: str | None = None,
        rel_tol: float = 1e-8,
        audit_tol: float = 1e-6,
        jobs: int = 1,
    ) -> BetaTable:
        pair_id = pair_id or _default_pair_id(media)
        path = self._path(media, grid, pair_id)
        if os.path.exists(path):
            table = load_table(path)
            if table.media == media and table.grid.size == grid.n:
                return table
        table = build_table(
            media, grid, pair_id=pair_id,
            rel_tol=rel_tol, audit_tol=audit_tol, jobs=jobs,
        )
        table.save(path)
        return table
