"""Monte Carlo verification harness.

Runs batches of field realizations, extracts charged zeros, and compares
empirical statistics (zero density, signed charge density, charge variance
in growing disks) against the closed-form predictions.  Every realization
draws from a counter-based stream keyed by (seed, realization, component),
so reports are deterministic and independent of the thread count; the
per-realization statistics are stored and reduced in fixed order.
"""
from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidKernelError
from .kernels import (DEFAULT_CONVENTION, RadialKernel, gef_kernel,
                      laguerre_avg_kernel, laguerre_kernel, rho1_radial,
                      variance_asymptote)
from .simulate import FieldGrid, SeriesPlan, StftPlan, stream, to_gwhf_plane
from .windows import Window, hermite, rho1_stft, window_from_spec
from .zeros import ChargedZero, detect_zeros, disk_stats

__all__ = ["McConfig", "McItem", "McReport",
           "estimate_intensity", "estimate_charge_intensity",
           "estimate_charge_variance", "default_threads"]


def default_threads() -> int:
    env = os.environ.get("GWHF_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


@dataclass(frozen=True)
class McConfig:
    """One verification run: a field source plus sampling parameters.

    source families:
      {"family": "window", "window": <window spec>, "plane": "stft"|"gwhf"}
      {"family": "series-gef"}
      {"family": "polyentire", "q": int, "kind": "pure"|"full"}
      {"family": "poisson", "density": float}   (control point process)
    """
    source: dict
    domain: tuple[float, float, float, float]
    spacing: float
    n_realizations: int
    seed: int
    dt: float | None = None
    radii: tuple[float, ...] = ()
    margin: float | None = None
    threads: int = 0
    convention: str = DEFAULT_CONVENTION

    def __post_init__(self):
        if self.n_realizations < 2:
            raise ValueError("need at least 2 realizations")
        if self.radii and list(self.radii) != sorted(self.radii):
            raise ValueError("radii must be sorted ascending")

    def as_dict(self) -> dict:
        source = {k: (v.label if isinstance(v, Window) else v)
                  for k, v in self.source.items()}
        return {
            "source": source,
            "domain": list(self.domain),
            "spacing": self.spacing,
            "dt": self.dt,
            "n_realizations": self.n_realizations,
            "seed": self.seed,
            "radii": list(self.radii),
            "margin": self.margin,
            "convention": self.convention,
        }


@dataclass(frozen=True)
class McItem:
    label: str
    empirical: float
    se: float
    theory: float

    @property
    def z(self) -> float:
        if self.se <= 0:
            return math.inf if self.empirical != self.theory else 0.0
        return (self.empirical - self.theory) / self.se


@dataclass(frozen=True)
class McReport:
    quantity: str
    items: list[McItem]
    config: dict
    elapsed_s: float
    notes: list[str] = field(default_factory=list)

    @property
    def max_abs_z(self) -> float:
        return max((abs(it.z) for it in self.items), default=0.0)

    @property
    def passes(self) -> bool:
        return self.max_abs_z <= 5.0

    def to_dict(self, include_elapsed: bool = True) -> dict:
        return {
            "quantity": self.quantity,
            "items": [{"label": it.label, "empirical": it.empirical,
                       "se": it.se, "theory": it.theory, "z": it.z}
                      for it in self.items],
            "config": self.config,
            "elapsed_s": self.elapsed_s if include_elapsed else None,
            "notes": self.notes,
        }

    def to_json(self, include_elapsed: bool = True) -> str:
        return json.dumps(self.to_dict(include_elapsed), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        lines = ["quantity,label,empirical,se,theory,z"]
        for it in self.items:
            lines.append(f"{self.quantity},{it.label},{it.empirical:.9g},"
                         f"{it.se:.9g},{it.theory:.9g},{it.z:.9g}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Field sources
# ---------------------------------------------------------------------------

class _Source:
    """Resolved source: per-realization grids or point sets plus theory values."""

    def __init__(self, cfg: McConfig):
        src = cfg.source
        self.family = src.get("family")
        self.cfg = cfg
        self.kernel: RadialKernel | None = None
        self.window: Window | None = None
        self.notes: list[str] = []
        if self.family == "window":
            win = src.get("window")
            self.window = win if isinstance(win, Window) else window_from_spec(win)
            plane = src.get("plane", "stft")
            if plane not in ("stft", "gwhf"):
                raise ValueError(f"unknown plane {plane!r}")
            self.plane = plane
            dt = cfg.dt if cfg.dt is not None else 1.0 / 64.0
            if plane == "stft":
                self.plans = [StftPlan(self.window, cfg.domain, cfg.spacing, dt, cfg.margin)]
            else:
                sp = math.sqrt(math.pi)
                x0, x1, y0, y1 = cfg.domain
                sdom = (x0 / sp, x1 / sp, -y1 / sp, -y0 / sp)
                m = None if cfg.margin is None else cfg.margin / sp
                self.plans = [StftPlan(self.window, sdom, cfg.spacing / sp, dt, m)]
            if self.window.kind == "hermite":
                self.kernel = laguerre_kernel(self.window.order)
            else:
                self.notes.append("no radial kernel for this window; "
                                  "variance theory unavailable")
            self.density = rho1_stft(self.window, cfg.convention)
            if plane == "gwhf":
                self.density /= math.pi
            self.charge_density = 1.0 if plane == "stft" else 1.0 / math.pi
        elif self.family == "series-gef":
            self.plane = "gwhf"
            self.plans = [SeriesPlan(cfg.domain, cfg.spacing, margin=cfg.margin)]
            self.kernel = gef_kernel()
            self.density = rho1_radial(self.kernel)
            self.charge_density = 1.0 / math.pi
        elif self.family == "polyentire":
            q = int(src["q"])
            kind = src.get("kind", "pure")
            self.plane = "gwhf"
            sp = math.sqrt(math.pi)
            x0, x1, y0, y1 = cfg.domain
            sdom = (x0 / sp, x1 / sp, -y1 / sp, -y0 / sp)
            dt = cfg.dt if cfg.dt is not None else 1.0 / 64.0
            m = None if cfg.margin is None else cfg.margin / sp
            if kind == "pure":
                self.plans = [StftPlan(hermite(q - 1), sdom, cfg.spacing / sp, dt, m)]
                self.kernel = laguerre_kernel(q - 1)
            elif kind == "full":
                windows = [hermite(k) for k in range(q)]
                if m is None:
                    m = 2.0 * max(max(w.support_radius, w.freq_radius)
                                  for w in windows)
                self.plans = [StftPlan(w, sdom, cfg.spacing / sp, dt, m)
                              for w in windows]
                self.kernel = laguerre_avg_kernel(q)
            else:
                raise ValueError(f"unknown polyentire kind {kind!r}")
            self.density = rho1_radial(self.kernel)
            self.charge_density = 1.0 / math.pi
        elif self.family == "poisson":
            self.plane = "gwhf"
            self.plans = []
            self.density = float(src.get("density", 1.0 / math.pi))
            self.charge_density = 0.0
            self.notes.append("poisson control: uniform points, i.i.d. +-1 charges")
        else:
            raise ValueError(f"unknown source family {self.family!r}")

    @property
    def interior(self) -> tuple[float, float, float, float]:
        if self.family == "poisson":
            return self.cfg.domain
        plan = self.plans[0]
        if isinstance(plan, StftPlan) and self.plane == "gwhf":
            x0, x1, y0, y1 = plan.requested
            sp = math.sqrt(math.pi)
            return (sp * x0, sp * x1, -sp * y1, -sp * y0)
        return plan.requested

    def interior_area(self) -> float:
        x0, x1, y0, y1 = self.interior
        return (x1 - x0) * (y1 - y0)

    def zeros_for(self, r: int):
        cfg = self.cfg
        if self.family == "poisson":
            rng = stream(cfg.seed, r, 0)
            x0, x1, y0, y1 = self.cfg.domain
            area = (x1 - x0) * (y1 - y0)
            n = rng.poisson(self.density * area)
            xy = rng.uniform(size=(int(n), 2))
            signs = np.where(rng.uniform(size=int(n)) < 0.5, 1, -1)
            return [ChargedZero(position=complex(x0 + (x1 - x0) * a, y0 + (y1 - y0) * b),
                                charge=int(s), winding=int(s), refined=True,
                                jacobian_sign=int(s))
                    for (a, b), s in zip(xy, signs)]
        grid = self.plans[0].realize(stream(cfg.seed, r, 0), seed_label=cfg.seed)
        if len(self.plans) > 1:
            acc = grid.values.copy()
            for k in range(1, len(self.plans)):
                acc += self.plans[k].realize(stream(cfg.seed, r, k)).values
            grid = FieldGrid(values=acc / math.sqrt(len(self.plans)),
                             origin=grid.origin, spacing=grid.spacing,
                             plane=grid.plane, seed=cfg.seed,
                             margin=grid.margin, meta=grid.meta)
        if self.plane == "gwhf" and grid.plane == "stft":
            grid = to_gwhf_plane(grid)
        return [z for z in detect_zeros(grid) if not z.degenerate]


def _map_realizations(cfg: McConfig, worker):
    n = cfg.n_realizations
    threads = cfg.threads if cfg.threads > 0 else default_threads()
    results = [None] * n
    if threads <= 1:
        for r in range(n):
            results[r] = worker(r)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for r, res in enumerate(pool.map(worker, range(n))):
                results[r] = res
    return results


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

def estimate_intensity(cfg: McConfig) -> McReport:
    """Mean interior zero count per unit area, against the closed formula."""
    t0 = time.time()
    source = _Source(cfg)
    area = source.interior_area()
    counts = np.array(_map_realizations(cfg, lambda r: len(source.zeros_for(r))),
                      dtype=float)
    mean = float(np.mean(counts)) / area
    se = float(np.std(counts, ddof=1) / math.sqrt(len(counts))) / area
    item = McItem(label="density", empirical=mean, se=se, theory=source.density)
    return McReport(quantity="density", items=[item], config=cfg.as_dict(),
                    elapsed_s=time.time() - t0, notes=source.notes)


def estimate_charge_intensity(cfg: McConfig) -> McReport:
    """Mean signed charge per unit area; theory is kernel-independent."""
    t0 = time.time()
    source = _Source(cfg)
    area = source.interior_area()
    sums = np.array(_map_realizations(
        cfg, lambda r: sum(z.charge for z in source.zeros_for(r))), dtype=float)
    mean = float(np.mean(sums)) / area
    se = float(np.std(sums, ddof=1) / math.sqrt(len(sums))) / area
    item = McItem(label="charge_density", empirical=mean, se=se,
                  theory=source.charge_density)
    return McReport(quantity="charge_density", items=[item], config=cfg.as_dict(),
                    elapsed_s=time.time() - t0, notes=source.notes)


def _variance_se(samples: np.ndarray) -> float:
    # sampling error of the unbiased variance from the fourth moment
    n = len(samples)
    m = samples - samples.mean()
    m4 = float(np.mean(m ** 4))
    s2 = float(np.var(samples, ddof=1))
    var_of_var = (m4 - (n - 3) / (n - 1) * s2 * s2) / n
    return math.sqrt(max(var_of_var, 0.0))


def estimate_charge_variance(cfg: McConfig) -> McReport:
    """Across-realization variance of disk charge, per radius, as Var/R.

    One concentric disk per realization per radius (overlapping-disk
    averaging would correlate samples and bias the standard errors).  The
    report also carries a weighted linear fit of Var against R over the
    upper half of the radii.  Theory per radius is the large-R limit of
    Var/R from quadrature of the kernel profile.
    """
    t0 = time.time()
    if not cfg.radii:
        raise ValueError("charge variance needs a radii list")
    source = _Source(cfg)
    notes = list(source.notes)
    x0, x1, y0, y1 = source.interior
    center = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
    rmax = max(cfg.radii)
    if (center.real - rmax < x0 or center.real + rmax > x1
            or center.imag - rmax < y0 or center.imag + rmax > y1):
        raise DomainError(f"radius {rmax} disk does not fit interior {source.interior}")
    if cfg.n_realizations < 100:
        notes.append("fewer than 100 realizations: variance standard errors are wide")

    radii = list(cfg.radii)

    def worker(r: int):
        zs = source.zeros_for(r)
        return [st.total_charge for st in disk_stats(zs, center, radii)]

    charges = np.array(_map_realizations(cfg, worker), dtype=float)

    if source.family == "poisson":
        # Var[charge in B_R] = density * pi R^2 for i.i.d. signs, so Var/R grows
        theory_var = [source.density * math.pi * R for R in radii]
    elif source.kernel is not None:
        limit = variance_asymptote(source.kernel)
        theory_var = [limit for _ in radii]
    else:
        raise InvalidKernelError("no radial kernel available for variance theory")

    items = []
    variances = []
    ses = []
    for k, R in enumerate(radii):
        v = float(np.var(charges[:, k], ddof=1))
        se = _variance_se(charges[:, k])
        variances.append(v)
        ses.append(max(se, 1e-300))
        items.append(McItem(label=f"R={R:g}", empirical=v / R, se=se / R,
                            theory=theory_var[k]))

    # weighted straight-line fit Var ~ a + b R over the upper half of the radii
    upper = [k for k in range(len(radii)) if radii[k] >= radii[len(radii) // 2]]
    if len(upper) >= 2:
        rr = np.array([radii[k] for k in upper])
        vv = np.array([variances[k] for k in upper])
        ww = np.array([1.0 / ses[k] ** 2 for k in upper])
        wmat = np.diag(ww)
        a_mat = np.vstack([np.ones_like(rr), rr]).T
        coef, *_ = np.linalg.lstsq(wmat @ a_mat, wmat @ vv, rcond=None)
        slope = float(coef[1])
        gram = np.linalg.inv(a_mat.T @ (ww[:, None] * a_mat))
        slope_se = math.sqrt(max(gram[1, 1], 0.0))
        items.append(McItem(label="fit-slope", empirical=slope, se=slope_se,
                            theory=theory_var[-1]))
    return McReport(quantity="charge_variance", items=items, config=cfg.as_dict(),
                    elapsed_s=time.time() - t0, notes=notes)
