import math

import numpy as np
import pytest

from conftest import synthetic_grid
from gwhf import simulate as S
from gwhf import zeros as Z
from gwhf.errors import DomainError, ResolutionError

PI = math.pi


# ---------------------------------------------------------------------------
# Synthetic fields
# ---------------------------------------------------------------------------

def test_simple_zero_positive():
    grid = synthetic_grid(lambda z: z)
    zs = Z.detect_zeros(grid)
    assert len(zs) == 1
    z = zs[0]
    assert z.charge == z.winding == z.jacobian_sign == 1
    assert abs(z.position) < 1e-10
    assert z.refined


def test_simple_zero_negative():
    grid = synthetic_grid(np.conj)
    zs = Z.detect_zeros(grid)
    assert len(zs) == 1
    assert zs[0].charge == zs[0].winding == zs[0].jacobian_sign == -1


def test_charge_of_orientation():
    grid_p = synthetic_grid(lambda z: z)
    grid_m = synthetic_grid(np.conj)
    assert Z.charge_of(grid_p, 0j) == (1, False)
    assert Z.charge_of(grid_m, 0j) == (-1, False)


def test_refine_recovers_analytic_root():
    root = 0.3 + 0.4j
    grid = synthetic_grid(lambda z: (z - root) * np.exp(z), half=0.4, n=41,
                          offset=0.305 + 0.405j)
    zs = Z.detect_zeros(grid)
    assert len(zs) == 1
    assert abs(zs[0].position - root) < 1e-6
    assert zs[0].refined


def test_double_zero_raises_resolution_error():
    grid = synthetic_grid(lambda z: z * z, half=1.0, n=21)
    with pytest.raises(ResolutionError):
        Z.detect_zeros(grid)


def test_multiple_separated_roots_with_charges():
    roots = [0.31 + 0.22j, -0.43 - 0.37j, 0.12 - 0.41j]

    def f(z):
        return (z - roots[0]) * (z - roots[1]) * np.conj(z - roots[2])

    grid = synthetic_grid(f, half=1.0, n=161)
    zs = sorted(Z.detect_zeros(grid), key=lambda z: z.position.real)
    assert len(zs) == 3
    got = {}
    for z in zs:
        best = min(roots, key=lambda r: abs(r - z.position))
        assert abs(z.position - best) < 5e-4
        got[best] = z.charge
    assert got[roots[0]] == 1 and got[roots[1]] == 1 and got[roots[2]] == -1


# ---------------------------------------------------------------------------
# Realization-level behavior
# ---------------------------------------------------------------------------

def test_refined_positions_stay_near_cells(hermites):
    grid = S.gef_series_field((-3, 3, -3, 3), 0.1, seed=2)
    zs = Z.detect_zeros(grid)
    assert zs, "expected zeros on this domain"
    for z in zs:
        i = round((z.position.real - grid.origin.real) / grid.spacing - 0.5)
        j = round((z.position.imag - grid.origin.imag) / grid.spacing - 0.5)
        center = grid.origin + complex((i + 0.5) * grid.spacing,
                                       (j + 0.5) * grid.spacing)
        assert abs(z.position - center) <= grid.spacing


def test_gef_series_all_positive_charges():
    zs = Z.detect_zeros(S.gef_series_field((-4, 4, -4, 4), 0.05, seed=3))
    assert zs and all(z.charge == 1 for z in zs if not z.degenerate)


def test_weight_transform_preserves_charges():
    grid = S.gef_series_field((-4, 4, -4, 4), 0.05, seed=13)
    zz = grid.xs[None, :] + 1j * grid.ys[:, None]
    unweighted = S.FieldGrid(values=grid.values * np.exp(0.5 * np.abs(zz) ** 2),
                             origin=grid.origin, spacing=grid.spacing,
                             plane=grid.plane, seed=grid.seed,
                             margin=grid.margin, meta=grid.meta)
    za = Z.detect_zeros(grid)
    zb = Z.detect_zeros(unweighted)
    assert len(za) == len(zb)
    pa = np.array([z.position for z in za])
    pb = np.array([z.position for z in zb])
    match = np.abs(pa[:, None] - pb[None, :]).argmin(axis=1)
    for k, z in enumerate(za):
        other = zb[match[k]]
        assert abs(z.position - other.position) < grid.spacing / 2
        assert z.charge == other.charge


def test_plane_equivariance(hermites):
    stft = S.stft_field(hermites[1], (0, 6, 0, 6), 1 / 16, 1 / 64, seed=17)
    gwhf = S.to_gwhf_plane(stft)
    za = Z.detect_zeros(stft)
    zb = Z.detect_zeros(gwhf)
    assert len(za) == len(zb)
    mapped = np.array([math.sqrt(PI) * np.conj(z.position) for z in za])
    pb = np.array([z.position for z in zb])
    match = np.abs(mapped[:, None] - pb[None, :]).argmin(axis=1)
    assert sorted(match.tolist()) == list(range(len(zb)))
    for k, z in enumerate(za):
        assert abs(mapped[k] - pb[match[k]]) < 1e-9
        assert z.charge == zb[match[k]].charge


def test_winding_jacobian_agreement_on_realizations(hermites):
    plan = S.StftPlan(hermites[1], (0, 8, 0, 8), 1 / 16, 1 / 64)
    for r in range(5):
        for z in Z.detect_zeros(plan.realize(S.stream(23, r))):
            if not z.degenerate:
                assert z.jacobian_sign == z.winding == z.charge


def test_detection_regression_fixture(hermites):
    # frozen after the first run with the documented default seed
    grid = S.stft_field(hermites[1], (0, 8, 0, 8), 1 / 16, 1 / 64, seed=0xC0FFEE)
    zs = [z for z in Z.detect_zeros(grid) if not z.degenerate]
    assert len(zs) == 109
    assert sum(z.charge for z in zs) == 67


# ---------------------------------------------------------------------------
# Disk statistics and CSV
# ---------------------------------------------------------------------------

def test_disk_stats_empty():
    stats = Z.disk_stats([], 0j, [1.0, 2.0])
    assert [(s.count, s.total_charge) for s in stats] == [(0, 0), (0, 0)]


def test_disk_stats_counts_and_interior():
    zs = [Z.ChargedZero(position=complex(r, 0), charge=c, winding=c,
                        refined=True, jacobian_sign=c)
          for r, c in [(0.5, 1), (1.5, -1), (2.5, 1)]]
    stats = Z.disk_stats(zs, 0j, [1.0, 2.0, 3.0])
    assert [(s.count, s.total_charge) for s in stats] == [(1, 1), (2, 0), (3, 1)]
    assert all(abs(s.total_charge) <= s.count for s in stats)
    with pytest.raises(DomainError):
        Z.disk_stats(zs, 0j, [3.0], interior=(-2, 2, -2, 2))


def test_disk_stats_excludes_degenerate():
    zs = [Z.ChargedZero(position=0.1 + 0j, charge=1, winding=1, refined=True,
                        jacobian_sign=1, degenerate=True)]
    stats = Z.disk_stats(zs, 0j, [1.0])
    assert stats[0].count == 0


def test_zeros_csv_roundtrip(tmp_path):
    zs = [Z.ChargedZero(position=complex(1.23456789123, -0.000012345), charge=-1,
                        winding=-1, refined=True, jacobian_sign=-1),
          Z.ChargedZero(position=0.5 + 0.25j, charge=1, winding=1,
                        refined=False, jacobian_sign=1)]
    path = tmp_path / "zeros.csv"
    Z.zeros_to_csv(zs, str(path))
    text = path.read_text().splitlines()
    assert text[0] == "x,y,charge,winding,refined"
    assert text[1].startswith("1.23456789,")  # nine significant digits
    back = Z.zeros_from_csv(str(path))
    assert len(back) == 2
    assert back[0].charge == -1 and back[0].refined
    assert abs(back[0].position - zs[0].position) < 1e-8
    assert back[1].charge == 1 and not back[1].refined
