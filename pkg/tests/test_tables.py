"""Coefficient tables: build, audit, lookup, persistence, cache."""

from __future__ import annotations

import os

import numpy as np
import pytest

from curvecp.curvature import beta0, beta2
from curvecp.errors import (
    CacheWriteFailure,
    ConfigError,
    GridTooCoarse,
    TableCoverage,
)
from curvecp.materials import MediumResponse
from curvecp.tables import (
    COLUMNS,
    DEFAULT_GRID,
    BetaTable,
    GridSpec,
    TableCache,
    build_table,
    load_table,
)

PEC_VAC = MediumResponse(eps0=1.0, mu0=1.0, eps1=np.inf, mu1=1.0)

# one small shared table: plumbing tests need a real table, not a precise one
SMALL_GRID = GridSpec(kmin=1e-2, kmax=6.0, n=16)


@pytest.fixture(scope="module")
def small_table() -> BetaTable:
    return build_table(PEC_VAC, SMALL_GRID, audit_tol=1e-3)


def test_grid_spec_validation():
    with pytest.raises(ConfigError):
        GridSpec(kmin=0.0, kmax=1.0, n=16)
    with pytest.raises(ConfigError):
        GridSpec(kmin=2.0, kmax=1.0, n=16)
    with pytest.raises(ConfigError):
        GridSpec(kmin=1e-4, kmax=40.0, n=4)
    assert DEFAULT_GRID == GridSpec(kmin=1e-4, kmax=40.0, n=120)
    nodes = DEFAULT_GRID.nodes()
    assert nodes.size == 120
    assert np.all(np.diff(nodes) > 0.0)


def test_node_lookup_is_bit_exact(small_table):
    for i in (0, 7, small_table.grid.size - 1):
        k = small_table.grid[i]
        assert np.all(small_table.evaluate(k) == small_table.values[i])
        direct = np.array([*beta0(k, PEC_VAC), *beta2(k, PEC_VAC)])
        assert small_table.values[i] == pytest.approx(direct, rel=1e-7)


def test_midpoint_audit_recorded(small_table):
    km = float(np.sqrt(small_table.grid[7] * small_table.grid[8]))
    direct = np.array([*beta0(km, PEC_VAC), *beta2(km, PEC_VAC)])
    interp = small_table.evaluate(km)
    peak = np.max(np.abs(small_table.values), axis=0)
    assert np.max(np.abs(interp - direct) / peak) <= small_table.audit_error * 1.5
    assert 0.0 < small_table.audit_error < 1e-3


def test_evaluate_shapes(small_table):
    assert small_table.evaluate(0.5).shape == (5,)
    ks = np.array([0.05, 0.7, 3.0])
    assert small_table.evaluate(ks).shape == (3, 5)


def test_coverage_raises_without_extrapolation(small_table):
    with pytest.raises(TableCoverage):
        small_table.evaluate(10.0)
    with pytest.raises(TableCoverage):
        small_table.evaluate(1e-3)
    assert not small_table.covers(10.0)
    assert small_table.covers(np.array([0.1, 1.0]))


def test_extrapolation_rides_plateau_and_envelope(small_table):
    # below the grid the coefficients sit on the static plateau ...
    low = small_table.evaluate(1e-4, allow_extrapolation=True)
    assert low[0] == pytest.approx(0.125, rel=1e-3)
    assert low[1] == pytest.approx(0.25, rel=1e-3)
    # ... and far beyond it the decay envelope has extinguished them
    high = small_table.evaluate(20.0, allow_extrapolation=True)
    assert np.max(np.abs(high)) < 1e-12


@pytest.mark.parametrize("ext", ["npz", "csv"])
def test_round_trip_bit_exact(small_table, tmp_path, ext):
    path = str(tmp_path / f"table.{ext}")
    small_table.save(path)
    back = load_table(path)
    assert np.array_equal(back.grid, small_table.grid)
    assert np.array_equal(back.values, small_table.values)
    assert back.content_hash == small_table.content_hash
    assert back.pair_id == small_table.pair_id
    assert back.media == small_table.media
    assert back.audit_error == small_table.audit_error


def test_load_rejects_tampered_file(small_table, tmp_path):
    path = str(tmp_path / "table.csv")
    small_table.save(path)
    text = open(path).read()
    lines = text.splitlines()
    k, rest = lines[-1].split(",", 1)
    lines[-1] = k + ",0.123," + rest.split(",", 1)[1]
    open(path, "w").write("\n".join(lines) + "\n")
    with pytest.raises(ConfigError, match="hash"):
        load_table(path)


def test_save_rejects_unknown_format(small_table, tmp_path):
    with pytest.raises(ConfigError):
        small_table.save(str(tmp_path / "table.json"))


def test_save_failure_is_reported(small_table, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    with pytest.raises(CacheWriteFailure):
        small_table.save(str(blocker / "table.npz"))


def test_cache_build_then_hit(small_table, tmp_path):
    cache = TableCache(str(tmp_path / "cache"))
    first = cache.get_or_build(PEC_VAC, SMALL_GRID, audit_tol=1e-3)
    files = os.listdir(str(tmp_path / "cache"))
    assert len(files) == 1
    second = cache.get_or_build(PEC_VAC, SMALL_GRID, audit_tol=1e-3)
    assert np.array_equal(first.values, second.values)
    assert os.listdir(str(tmp_path / "cache")) == files
    # same grid, different media: a separate file, not a collision
    other = MediumResponse(1.0, 1.0, np.inf, 2.0)
    cache.get_or_build(other, SMALL_GRID, audit_tol=1e-3)
    assert len(os.listdir(str(tmp_path / "cache"))) == 2


def test_too_coarse_grid_is_rejected():
    with pytest.raises(GridTooCoarse):
        build_table(PEC_VAC, SMALL_GRID, audit_tol=1e-12)


def test_default_grid_meets_interpolation_budget():
    # the headline accuracy contract: on the default 120-node grid the
    # midpoint audit stays below 1e-6 relative to each column's peak
    table = build_table(PEC_VAC, DEFAULT_GRID)
    assert table.audit_error < 1e-6
    assert table.values.shape == (120, len(COLUMNS))
