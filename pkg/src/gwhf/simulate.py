"""Field realizations on rectangular grids.

Two independent simulators:

* stft_field — the canonical path: pair discretized complex white noise
  with translated/modulated copies of a window, columnwise by FFT over the
  noise record.  Works for arbitrary windows.
* gef_series_field — truncated random entire series with Gaussian weight;
  an independent cross-check for the flat kernel.

Coordinate conventions: grids in the "stft" plane sample the spectrogram
coordinates (x = time shift, y = frequency); grids in the "gwhf" plane
sample the invariant field F(z) = exp(-i x y) V(conj(z)/sqrt(pi)).  Zero
sets correspond under z <-> sqrt(pi) conj(z) and densities differ by a
factor pi.

Every realization is a pure function of its counter-based stream, derived
from (seed, realization, component); parallel and serial runs produce
bit-identical grids.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import AliasBandError, DomainError, PlaneError
from .windows import Window, hermite

__all__ = [
    "FieldGrid", "stream", "complex_normals",
    "StftPlan", "SeriesPlan", "stft_field", "to_gwhf_plane",
    "gef_series_field", "polyentire_field", "series_terms_required",
    "save_grid", "load_grid", "grid_to_csv",
]

_MAGIC = b"GWHF1\n"


def stream(seed: int, realization: int = 0, component: int = 0) -> np.random.Generator:
    """Counter-based generator for one (realization, component) pair."""
    ss = np.random.SeedSequence(seed, spawn_key=(realization, component))
    return np.random.Generator(np.random.Philox(ss))


def complex_normals(rng: np.random.Generator, n: int) -> np.ndarray:
    """i.i.d. standard circularly symmetric complex Gaussians (unit variance).

    At pairing time each sample stands for the noise integrated over one
    dt cell, and the sqrt(dt) factor is applied inside the pairing sum, so
    E|V|^2 = ||g||^2 holds exactly in the dt -> 0 limit.
    """
    z = rng.standard_normal(2 * n)
    return (z[:n] + 1j * z[n:]) * math.sqrt(0.5)


@dataclass(frozen=True)
class FieldGrid:
    """Complex field samples on a rectangular lattice.

    values[j, i] sits at origin + (i + 1j*j) * spacing.  `margin` is the
    boundary band excluded from statistics; `meta["interior"]` records the
    requested statistics region (the simulators inflate the simulated
    domain so that region is fully interior).
    """
    values: np.ndarray
    origin: complex
    spacing: float
    plane: str
    seed: int
    margin: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 2 or v.shape[0] < 16 or v.shape[1] < 16:
            raise ValueError("values must be a 2-d complex array, at least 16 x 16")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if self.plane not in ("stft", "gwhf"):
            raise PlaneError(f"unknown plane {self.plane!r}")
        object.__setattr__(self, "values", v)

    @property
    def ny(self) -> int:
        return self.values.shape[0]

    @property
    def nx(self) -> int:
        return self.values.shape[1]

    @property
    def xs(self) -> np.ndarray:
        return self.origin.real + self.spacing * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.origin.imag + self.spacing * np.arange(self.ny)

    @property
    def extent(self) -> tuple[float, float, float, float]:
        return (self.origin.real, self.origin.real + self.spacing * (self.nx - 1),
                self.origin.imag, self.origin.imag + self.spacing * (self.ny - 1))

    @property
    def interior(self) -> tuple[float, float, float, float]:
        inner = self.meta.get("interior")
        if inner is not None:
            return tuple(inner)
        x0, x1, y0, y1 = self.extent
        m = self.margin
        return (x0 + m, x1 - m, y0 + m, y1 - m)


# ---------------------------------------------------------------------------
# Windowed transform of white noise
# ---------------------------------------------------------------------------

class StftPlan:
    """Reusable precomputation for repeated realizations of one configuration.

    The window factors conj(g(t_k - x_i)) are column-independent of the
    noise, so they are built once; a realization is then one elementwise
    product, a fold of the record onto the FFT frame, and one batched FFT.
    """

    def __init__(self, window: Window, domain: tuple[float, float, float, float],
                 spacing: float, dt: float, margin: float | None = None):
        x0, x1, y0, y1 = (float(v) for v in domain)
        if not (x1 > x0 and y1 > y0):
            raise DomainError(f"empty domain {domain}")
        if spacing <= 0 or dt <= 0:
            raise ValueError("spacing and dt must be positive")
        if dt > 1.0 / (8.0 * window.freq_radius):
            raise AliasBandError(
                f"dt = {dt} too coarse for window frequency extent "
                f"{window.freq_radius:.2f}; need dt <= {1.0 / (8.0 * window.freq_radius):.4g}")
        if margin is None:
            margin = 2.0 * max(window.support_radius, window.freq_radius)
        self.window = window
        self.dt = float(dt)
        self.margin = float(margin)
        self.requested = (x0, x1, y0, y1)

        n_fft = int(round(1.0 / (spacing * dt)))
        if n_fft < 8:
            raise ValueError(f"spacing {spacing} and dt {dt} give FFT frame {n_fft} < 8")
        self.n_fft = n_fft
        s = 1.0 / (n_fft * dt)
        self.spacing = s

        xlo, xhi = x0 - margin, x1 + margin
        ylo, yhi = y0 - margin, y1 + margin
        band = 0.5 / dt
        if max(abs(ylo), abs(yhi)) + window.freq_radius > band:
            raise AliasBandError(
                f"frequency range [{ylo:.2f}, {yhi:.2f}] plus window extent "
                f"{window.freq_radius:.2f} exceeds the alias-free band {band:.2f}")

        self.nx = int(math.floor((xhi - xlo) / s + 1e-9)) + 1
        self.x0 = xlo
        jlo = int(math.ceil(ylo / s - 1e-9))
        self.ny = int(math.floor((yhi - jlo * s) / s + 1e-9)) + 1
        self.jlo = jlo
        self.y0 = jlo * s

        T = window.support_radius
        t0 = xlo - T
        K = int(math.ceil((xhi + T - t0) / dt)) + 1
        if K < 2:
            raise DomainError("noise record shorter than the window support")
        self.t0 = t0
        self.K = K

        xs = self.x0 + s * np.arange(self.nx)
        tk = t0 + dt * np.arange(K)
        offsets = tk[None, :] - xs[:, None]
        self.window_factors = np.conj(window.rule(offsets))  # (nx, K)

        js = jlo + np.arange(self.ny)
        self.freq_rows = np.mod(js, n_fft)
        self.row_phase = np.exp(-2j * math.pi * t0 * (js * s)) * math.sqrt(dt)

    def realize(self, rng: np.random.Generator, seed_label: int = 0) -> FieldGrid:
        noise = complex_normals(rng, self.K)
        c = noise[None, :] * self.window_factors
        blocks = -(-self.K // self.n_fft)
        if blocks * self.n_fft != self.K:
            pad = np.zeros((self.nx, blocks * self.n_fft - self.K), dtype=complex)
            c = np.concatenate([c, pad], axis=1)
        folded = c.reshape(self.nx, blocks, self.n_fft).sum(axis=1)
        spec = np.fft.fft(folded, axis=1)
        vals = spec[:, self.freq_rows].T * self.row_phase[:, None]
        meta = {
            "interior": self.requested,
            "window": self.window.label,
            "dt": self.dt,
            "requested_spacing_rounded_to": self.spacing,
        }
        return FieldGrid(values=vals, origin=complex(self.x0, self.y0),
                         spacing=self.spacing, plane="stft", seed=seed_label,
                         margin=self.margin, meta=meta)


def stft_field(g: Window, domain: tuple[float, float, float, float],
               spacing: float, dt: float, seed: int,
               margin: float | None = None) -> FieldGrid:
    """One realization of the windowed transform of complex white noise.

    V(x, y) ~= sum_k xi_k conj(g(t_k - x)) exp(-2 pi i t_k y) sqrt(dt),
    evaluated columnwise on the FFT's native frequency grid (the requested
    spacing is rounded to the nearest FFT-compatible value and recorded in
    the metadata).  Deterministic given (seed, domain, spacing, dt).
    """
    plan = StftPlan(g, domain, spacing, dt, margin)
    return plan.realize(stream(seed), seed_label=seed)


def to_gwhf_plane(grid: FieldGrid) -> FieldGrid:
    """Re-index a spectrogram-plane grid to the invariant plane.

    F(z) = exp(-i x y) V(conj(z)/sqrt(pi)): positions map by
    z = sqrt(pi) (u - i v), a unimodular phase multiplies the samples, and
    the row order flips so y still increases.  Densities scale by pi.
    """
    if grid.plane != "stft":
        raise PlaneError("grid is not in the stft plane (double application?)")
    sp = math.sqrt(math.pi)
    us = grid.xs
    vs = grid.ys
    phase = np.exp(1j * math.pi * vs[:, None] * us[None, :])
    vals = (phase * grid.values)[::-1, :]
    origin = complex(sp * us[0], -sp * vs[-1])
    ix0, ix1, iy0, iy1 = grid.interior
    meta = dict(grid.meta)
    meta["interior"] = (sp * ix0, sp * ix1, -sp * iy1, -sp * iy0)
    meta["mapped_from"] = "stft"
    return FieldGrid(values=vals, origin=origin, spacing=sp * grid.spacing,
                     plane="gwhf", seed=grid.seed, margin=sp * grid.margin,
                     meta=meta)


# ---------------------------------------------------------------------------
# Entire-series simulator
# ---------------------------------------------------------------------------

def series_terms_required(r_max: float) -> int:
    """Truncation rule: tail of sum |z|^{2n}/n! below 1e-10 at the farthest point."""
    return int(math.ceil(math.e * r_max ** 2 + 10.0 * r_max)) + 1


class SeriesPlan:
    """Grid and coefficient-count precomputation for the entire-series field."""

    def __init__(self, domain: tuple[float, float, float, float], spacing: float,
                 n_terms: int | None = None, margin: float | None = None):
        x0, x1, y0, y1 = (float(v) for v in domain)
        if not (x1 > x0 and y1 > y0):
            raise DomainError(f"empty domain {domain}")
        if margin is None:
            margin = 4.0 * spacing
        self.margin = float(margin)
        self.requested = (x0, x1, y0, y1)
        self.spacing = float(spacing)
        xlo, ylo = x0 - margin, y0 - margin
        nx = int(math.floor((x1 + margin - xlo) / spacing + 1e-9)) + 1
        ny = int(math.floor((y1 + margin - ylo) / spacing + 1e-9)) + 1
        xs = xlo + spacing * np.arange(nx)
        ys = ylo + spacing * np.arange(ny)
        self.z = xs[None, :] + 1j * ys[:, None]
        self.origin = complex(xlo, ylo)
        r_max = float(np.max(np.abs(self.z)))
        needed = series_terms_required(r_max)
        if n_terms is None:
            n_terms = needed
        elif n_terms < needed:
            raise ValueError(f"n_terms = {n_terms} below the truncation rule ({needed}) "
                             f"for grid radius {r_max:.2f}")
        self.n_terms = int(n_terms)
        self.weight = np.exp(-0.5 * np.abs(self.z) ** 2)

    def realize(self, rng: np.random.Generator, seed_label: int = 0) -> FieldGrid:
        xi = complex_normals(rng, self.n_terms)
        acc = np.full(self.z.shape, xi[0], dtype=complex)
        term = np.ones_like(self.z)
        for n in range(1, self.n_terms):
            term = term * self.z / math.sqrt(n)
            acc += xi[n] * term
        meta = {"interior": self.requested, "simulator": "series",
                "n_terms": self.n_terms}
        return FieldGrid(values=self.weight * acc, origin=self.origin,
                         spacing=self.spacing, plane="gwhf", seed=seed_label,
                         margin=self.margin, meta=meta)


def gef_series_field(domain: tuple[float, float, float, float], spacing: float,
                     n_terms: int | None = None, seed: int = 0,
                     margin: float | None = None) -> FieldGrid:
    """Gaussian entire function by truncated series, with the flat weight applied.

    F(z) = exp(-|z|^2/2) sum_{n<N} xi_n z^n / sqrt(n!), xi_n i.i.d. standard
    circular Gaussians.  One realization per call; deterministic in seed.
    """
    plan = SeriesPlan(domain, spacing, n_terms, margin)
    return plan.realize(stream(seed), seed_label=seed)


# ---------------------------------------------------------------------------
# Higher-order fields
# ---------------------------------------------------------------------------

def _stft_domain_for_gwhf(domain: tuple[float, float, float, float]
                          ) -> tuple[float, float, float, float]:
    x0, x1, y0, y1 = (float(v) for v in domain)
    sp = math.sqrt(math.pi)
    return (x0 / sp, x1 / sp, -y1 / sp, -y0 / sp)


def polyentire_field(q: int, kind: str, domain: tuple[float, float, float, float],
                     spacing: float, dt: float, seed: int,
                     margin: float | None = None) -> FieldGrid:
    """Order-q field in the invariant plane.

    kind="pure": windowed-noise field with window h_{q-1}, mapped over.
    kind="full": normalized sum of q independent pure components with
    windows h_0..h_{q-1}; component k of the realization draws from the
    stream (seed, 0, k), so components are independent and reproducible.
    """
    if not 1 <= q <= 8:
        raise ValueError("q must be in [1, 8]")
    if kind not in ("pure", "full"):
        raise ValueError(f"kind must be 'pure' or 'full', got {kind!r}")
    sdom = _stft_domain_for_gwhf(domain)
    sp = math.sqrt(math.pi)
    s_spacing = spacing / sp
    s_margin = None if margin is None else margin / sp
    if kind == "pure":
        plan = StftPlan(hermite(q - 1), sdom, s_spacing, dt, s_margin)
        grid = plan.realize(stream(seed, 0, 0), seed_label=seed)
        return to_gwhf_plane(grid)
    windows = [hermite(k) for k in range(q)]
    if s_margin is None:
        # components must share one grid, so the widest window sets the margin
        s_margin = 2.0 * max(max(w.support_radius, w.freq_radius) for w in windows)
    plans = [StftPlan(w, sdom, s_spacing, dt, s_margin) for w in windows]
    base = plans[0].realize(stream(seed, 0, 0), seed_label=seed)
    acc = base.values.copy()
    for k in range(1, q):
        acc += plans[k].realize(stream(seed, 0, k)).values
    mixed = FieldGrid(values=acc / math.sqrt(q), origin=base.origin,
                      spacing=base.spacing, plane="stft", seed=seed,
                      margin=base.margin, meta=dict(base.meta, components=q))
    return to_gwhf_plane(mixed)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def save_grid(grid: FieldGrid, path: str) -> None:
    """Binary container: magic, length-prefixed JSON header, then row-major
    complex64 pairs, little-endian."""
    header = {
        "plane": grid.plane,
        "origin": [grid.origin.real, grid.origin.imag],
        "spacing": grid.spacing,
        "nx": grid.nx,
        "ny": grid.ny,
        "seed": int(grid.seed),
        "margin": grid.margin,
        "meta": _jsonable(grid.meta),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    data = np.ascontiguousarray(grid.values.astype("<c8"))
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        fh.write(data.tobytes())


def load_grid(path: str) -> FieldGrid:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"{path} is not a grid container")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        raw = fh.read()
    nx, ny = header["nx"], header["ny"]
    vals = np.frombuffer(raw, dtype="<c8", count=nx * ny).reshape(ny, nx).astype(complex)
    meta = header.get("meta", {})
    if isinstance(meta.get("interior"), list):
        meta["interior"] = tuple(meta["interior"])
    return FieldGrid(values=vals, origin=complex(*header["origin"]),
                     spacing=header["spacing"], plane=header["plane"],
                     seed=header["seed"], margin=header.get("margin", 0.0),
                     meta=meta)


def grid_to_csv(grid: FieldGrid, path: str) -> None:
    """Plain-text export, one row per sample: x,y,re,im."""
    xs, ys = grid.xs, grid.ys
    with open(path, "w") as fh:
        fh.write("x,y,re,im\n")
        for j in range(grid.ny):
            for i in range(grid.nx):
                v = grid.values[j, i]
                fh.write(f"{xs[i]:.9g},{ys[j]:.9g},{v.real:.9g},{v.imag:.9g}\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj
