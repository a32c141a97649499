"""Command-line front end.

Subcommands: intensity, variance-asymptote, simulate, zeros,
verify {intensity|charge|charge-variance|invariance|tau2-oracle}, plot.

All outputs are deterministic given identical inputs and seed: JSON uses
sorted keys and shortest-round-trip floats, report files omit wall time
(it goes to stderr), and the SVG writer emits fixed-format text.  The
default seed is 0xC0FFEE; pass --seed random for entropy seeding.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import secrets
import sys

import numpy as np

from . import __version__
from .errors import GwhfError
from .kernels import (KernelJet, OMEGA_CONVENTIONS, RadialKernel, delta_h,
                      i_prime, jet_from_radial, kernel_from_spec, rho1,
                      rho1_charged, rho1_radial, validate_kernel,
                      variance_asymptote, wick_oracle_E)
from .mc import McConfig, McReport, estimate_charge_intensity, \
    estimate_charge_variance, estimate_intensity
from .simulate import (gef_series_field, load_grid, polyentire_field,
                       save_grid, stft_field, to_gwhf_plane)
from .windows import (Window, hermite, generalized_gaussian, hermite_mixture,
                      invariance_check, jet_from_constants,
                      rho1_stft_from_constants, uncertainty_constants,
                      window_from_spec)
from .zeros import detect_zeros, zeros_from_csv, zeros_to_csv

DEFAULT_SEED = 0xC0FFEE


def _parse_seed(text: str) -> int:
    if text == "random":
        return secrets.randbits(48)
    return int(text, 0)


def _parse_domain(text: str) -> tuple[float, float, float, float]:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("domain must be x0,x1,y0,y1")
    return tuple(parts)  # type: ignore[return-value]


def _window_from_arg(text: str) -> Window:
    if text.startswith("@"):
        with open(text[1:]) as fh:
            return window_from_spec(json.load(fh))
    name, _, arg = text.partition(":")
    if name == "hermite":
        return hermite(int(arg or 0))
    if name in ("gaussian", "generalized-gaussian"):
        params = [float(v) for v in arg.split(";")] if arg else [1.0]
        return generalized_gaussian(*params)
    if name == "hermite-mixture":
        return hermite_mixture([complex(v) for v in arg.split(";")])
    raise argparse.ArgumentTypeError(f"unknown window spec {text!r}")


def _kernel_from_arg(text: str) -> RadialKernel | KernelJet:
    if text.startswith("@"):
        with open(text[1:]) as fh:
            return kernel_from_spec(json.load(fh))
    name, _, arg = text.partition(":")
    spec: dict = {"family": name}
    if arg and name != "custom":
        spec["q"] = int(arg)
    if name == "custom":
        spec["jet"] = [float(v) for v in arg.split(";")]
    return kernel_from_spec(spec)


def _emit_json(obj: dict, path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if path:
        with open(path, "w") as fh:
            fh.write(text)


def _write_report(report: McReport, out_dir: str | None, name: str) -> None:
    sys.stdout.write(report.to_json(include_elapsed=True) + "\n")
    sys.stderr.write(f"[gwhf] {name}: elapsed {report.elapsed_s:.1f} s\n")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, f"{name}.json"), "w") as fh:
            fh.write(report.to_json(include_elapsed=False) + "\n")
        with open(os.path.join(out_dir, f"{name}.csv"), "w") as fh:
            fh.write(report.to_csv())


# ---------------------------------------------------------------------------
# intensity / variance
# ---------------------------------------------------------------------------

def _cmd_intensity(args) -> int:
    out: dict = {}
    if args.window:
        g = _window_from_arg(args.window)
        c = uncertainty_constants(g)
        out["window"] = g.label
        out["constants"] = {f"c{k}": v for k, v in zip(range(1, 6), c.as_tuple())}
        jet = jet_from_constants(c)
        out["jet"] = list(jet.as_tuple())
        values = {}
        for conv in OMEGA_CONVENTIONS:
            try:
                values[conv] = rho1_stft_from_constants(c, conv)
            except GwhfError as exc:
                values[conv] = f"invalid: {exc}"
        out["rho1_stft"] = values["regression"]
        if values["regression"] != values["alternate"]:
            out["rho1_stft_by_convention"] = values
        if isinstance(values["regression"], float):
            out["rho1"] = values["regression"] / math.pi
        out["delta_h"] = delta_h(jet)
        out["rho1_charged_stft_plane"] = 1.0
        out["rho1_charged"] = rho1_charged()
    else:
        kern = _kernel_from_arg(args.kernel)
        if isinstance(kern, RadialKernel):
            out["kernel"] = kern.label
            jet = jet_from_radial(kern)
            out["rho1"] = rho1_radial(kern)
            report = validate_kernel(kern)
            out["standing_assumptions"] = {"ok": report.ok,
                                           "violations": report.violations}
        else:
            jet = kern
            out["kernel"] = "custom-jet"
            values = {}
            for conv in OMEGA_CONVENTIONS:
                try:
                    values[conv] = rho1(jet, conv)
                except GwhfError as exc:
                    values[conv] = f"invalid: {exc}"
            out["rho1"] = values["regression"]
            if values["regression"] != values["alternate"]:
                out["rho1_by_convention"] = values
        out["jet"] = list(jet.as_tuple())
        out["delta_h"] = delta_h(jet)
        out["rho1_charged"] = rho1_charged()
    _emit_json(out, args.out)
    return 0


def _cmd_variance_asymptote(args) -> int:
    kern = _kernel_from_arg(args.kernel)
    if not isinstance(kern, RadialKernel):
        raise GwhfError("variance asymptote needs a radial kernel, not a bare jet")
    value = variance_asymptote(kern)
    _emit_json({"kernel": kern.label, "var_per_radius_limit": value}, args.out)
    return 0


# ---------------------------------------------------------------------------
# simulate / zeros / plot
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    if args.simulator == "series":
        grid = gef_series_field(args.domain, args.spacing, seed=args.seed)
    elif args.simulator.startswith("polyentire"):
        _, q, kind = args.simulator.split(":")
        grid = polyentire_field(int(q), kind, args.domain, args.spacing,
                                args.dt, args.seed)
    else:
        g = _window_from_arg(args.window)
        grid = stft_field(g, args.domain, args.spacing, args.dt, args.seed)
        if args.plane == "gwhf":
            grid = to_gwhf_plane(grid)
    path = os.path.join(args.out, "field.gwhf")
    save_grid(grid, path)
    meta = {"path": path, "plane": grid.plane, "nx": grid.nx, "ny": grid.ny,
            "spacing": grid.spacing, "seed": args.seed,
            "origin": [grid.origin.real, grid.origin.imag]}
    _emit_json(meta, os.path.join(args.out, "field.json"))
    return 0


def _cmd_zeros(args) -> int:
    grid = load_grid(args.grid)
    zs = detect_zeros(grid, refine=not args.no_refine)
    zeros_to_csv(zs, args.out)
    sys.stderr.write(f"[gwhf] {len(zs)} zeros -> {args.out}\n")
    return 0


def _svg_scatter(zeros, out_path: str) -> None:
    """Fixed-format scatter: plus marks for positive charges, circles for
    negative, equal-aspect axes."""
    if zeros:
        xs = [z.position.real for z in zeros]
        ys = [z.position.imag for z in zeros]
        x0, x1 = math.floor(min(xs)), math.ceil(max(xs))
        y0, y1 = math.floor(min(ys)), math.ceil(max(ys))
    else:
        x0, x1, y0, y1 = 0, 1, 0, 1
    span = max(x1 - x0, y1 - y0, 1)
    size = 600.0
    pad = 40.0
    scale = size / span

    def sx(x: float) -> float:
        return pad + (x - x0) * scale

    def sy(y: float) -> float:
        return pad + (y1 - y) * scale

    w = pad * 2 + (x1 - x0) * scale
    h = pad * 2 + (y1 - y0) * scale
    m = 4.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" '
        f'viewBox="0 0 {w:.0f} {h:.0f}">',
        f'<rect x="{pad:.1f}" y="{pad:.1f}" width="{(x1 - x0) * scale:.1f}" '
        f'height="{(y1 - y0) * scale:.1f}" fill="white" stroke="black"/>',
    ]
    for xt in range(x0, x1 + 1):
        parts.append(f'<text x="{sx(xt):.1f}" y="{h - pad / 4:.1f}" font-size="12" '
                     f'text-anchor="middle">{xt}</text>')
    for yt in range(y0, y1 + 1):
        parts.append(f'<text x="{pad / 4:.1f}" y="{sy(yt) + 4:.1f}" font-size="12" '
                     f'text-anchor="middle">{yt}</text>')
    for z in zeros:
        cx, cy = sx(z.position.real), sy(z.position.imag)
        if z.charge > 0:
            parts.append(f'<path d="M {cx - m:.2f} {cy:.2f} H {cx + m:.2f} '
                         f'M {cx:.2f} {cy - m:.2f} V {cy + m:.2f}" '
                         f'stroke="#d04040" stroke-width="1.5" fill="none"/>')
        else:
            parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{m:.2f}" '
                         f'stroke="#4060d0" stroke-width="1.5" fill="none"/>')
    parts.append("</svg>")
    with open(out_path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def _cmd_plot(args) -> int:
    zs = zeros_from_csv(args.zeros)
    _svg_scatter(zs, args.out)
    sys.stderr.write(f"[gwhf] {len(zs)} marks -> {args.out}\n")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _mc_config(args, radii=()) -> McConfig:
    if args.window:
        source = {"family": "window", "window": _window_from_arg(args.window)}
    elif args.kernel == "gef-series":
        source = {"family": "series-gef"}
        g = None
    elif args.kernel and args.kernel.startswith("polyentire"):
        _, q, kind = args.kernel.split(":")
        source = {"family": "polyentire", "q": int(q), "kind": kind}
    elif args.kernel == "poisson":
        source = {"family": "poisson", "density": 1.0 / math.pi}
    else:
        raise GwhfError(f"unsupported verify source {args.kernel!r}")
    return McConfig(source=source, domain=args.domain, spacing=args.spacing,
                    dt=args.dt, n_realizations=args.n, seed=args.seed,
                    radii=tuple(radii), threads=args.threads,
                    convention=args.convention)


def _cmd_verify(args) -> int:
    if args.suite == "intensity":
        report = estimate_intensity(_mc_config(args))
        _write_report(report, args.out, "intensity")
        return 0 if report.passes else 1
    if args.suite == "charge":
        report = estimate_charge_intensity(_mc_config(args))
        _write_report(report, args.out, "charge")
        return 0 if report.passes else 1
    if args.suite == "charge-variance":
        radii = [float(v) for v in args.radii.split(",")]
        report = estimate_charge_variance(_mc_config(args, radii))
        _write_report(report, args.out, "charge_variance")
        per_r = {it.label: it for it in report.items if it.label.startswith("R=")}
        top = per_r[f"R={radii[-1]:g}"]
        mid = per_r[f"R={radii[len(radii) // 2]:g}"]
        band_ok = abs(top.empirical - top.theory) <= 0.2 * top.theory
        ratio = (top.empirical * radii[-1]) / (mid.empirical * radii[len(radii) // 2])
        ratio_ok = ratio <= 2.4
        sys.stderr.write(f"[gwhf] Var/R band at R={radii[-1]:g}: "
                         f"{'ok' if band_ok else 'FAIL'}; growth ratio {ratio:.2f} "
                         f"{'ok' if ratio_ok else 'FAIL'}\n")
        return 0 if (band_ok and ratio_ok) else 1
    if args.suite == "invariance":
        g = _window_from_arg(args.window or "hermite:0")
        rng = np.random.default_rng(args.seed)
        worst = 0.0
        for _ in range(args.n):
            x0, xi0, xi1 = rng.uniform(-1.0, 1.0, size=3)
            before, after = invariance_check(g, x0, xi0, xi1, args.convention)
            worst = max(worst, abs(before - after))
        _emit_json({"window": g.label, "draws": args.n,
                    "max_deviation": worst, "tolerance": 1e-7},
                   os.path.join(args.out, "invariance.json") if args.out else None)
        return 0 if worst <= 1e-7 else 1
    if args.suite == "tau2-oracle":
        kern = _kernel_from_arg(args.kernel or "gef")
        if not isinstance(kern, RadialKernel):
            raise GwhfError("tau2 oracle needs a radial kernel")
        ds = np.geomspace(0.05, 8.0, 40)
        worst = 0.0
        for d in ds:
            e = wick_oracle_E(kern, 0.0, complex(d))
            p = float(kern.p(d * d))
            worst = max(worst, abs(e / (1.0 - p * p) - 1.0 - i_prime(kern, d * d)))
        _emit_json({"kernel": kern.label, "separations": len(ds),
                    "max_residual": worst, "tolerance": 1e-8},
                   os.path.join(args.out, "tau2_oracle.json") if args.out else None)
        return 0 if worst <= 1e-8 else 1
    raise GwhfError(f"unknown verify suite {args.suite!r}")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gwhf",
        description="Zero sets of twisted-stationary Gaussian fields: "
                    "closed-form intensities, simulation, charged zero "
                    "extraction, and Monte Carlo verification.")
    ap.add_argument("--version", action="version", version=f"gwhf {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, domain="0,8,0,8", spacing=1 / 16, dt=1 / 64):
        p.add_argument("--seed", type=_parse_seed, default=DEFAULT_SEED,
                       help="64-bit seed (default 0xC0FFEE); 'random' for entropy")
        p.add_argument("--domain", type=_parse_domain, default=_parse_domain(domain),
                       help="x0,x1,y0,y1 rectangle")
        p.add_argument("--spacing", type=float, default=spacing)
        p.add_argument("--dt", type=float, default=dt,
                       help="noise sample spacing for windowed transforms")
        p.add_argument("--threads", type=int, default=0,
                       help="worker threads (0: GWHF_THREADS or 1); results "
                            "do not depend on this")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("intensity",
                       help="expected zeros per unit area: rho1 = (D+2)/(2 pi sqrt(D+1)) "
                            "with D the conditional-covariance determinant; for windows "
                            "rho1_stft = (4S+1)/(4 sqrt(S)) from the moment constants; "
                            "charged intensity is 1/pi regardless of kernel")
    p.add_argument("--window", help="hermite:R | gaussian:sigma;phase;x0;xi0;xi1 | "
                                    "hermite-mixture:c0;c1;... | @spec.json")
    p.add_argument("--kernel", help="gef | laguerre:R | laguerre-avg:Q | "
                                    "custom:b10;b01;h20;h02;h11 | @spec.json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_intensity)

    p = sub.add_parser("variance-asymptote",
                       help="large-R limit of Var[charge in B_R]/R: "
                            "(2/pi) int_0^inf 2 r^2 P'(r^2)^2/(1-P(r^2)^2) dr")
    p.add_argument("--kernel", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_variance_asymptote)

    p = sub.add_parser("simulate", help="draw one field realization and save the grid")
    common(p)
    p.add_argument("--window", help="window spec for the stft simulator")
    p.add_argument("--simulator", default="stft",
                   help="stft | series | polyentire:q:kind")
    p.add_argument("--plane", default="stft", choices=["stft", "gwhf"])
    p.set_defaults(func=_cmd_simulate, out="out")

    p = sub.add_parser("zeros", help="extract charged zeros from a saved grid "
                                     "(CSV header: x,y,charge,winding,refined)")
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-refine", action="store_true")
    p.set_defaults(func=_cmd_zeros)

    p = sub.add_parser("verify", help="Monte Carlo verification suites; exit 0 iff gates pass")
    p.add_argument("suite", choices=["intensity", "charge", "charge-variance",
                                     "invariance", "tau2-oracle"])
    common(p)
    p.add_argument("--window", help="window spec (stft-plane suites)")
    p.add_argument("--kernel", help="gef | gef-series | polyentire:q:kind | poisson")
    p.add_argument("-n", type=int, default=200, help="number of realizations/draws")
    p.add_argument("--radii", default="1,2,3,4,5,6", help="disk radii for charge-variance")
    p.add_argument("--convention", default="regression", choices=list(OMEGA_CONVENTIONS))
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("plot", help="SVG scatter of a zeros CSV: plus marks for "
                                    "positive charges, circles for negative")
    p.add_argument("--zeros", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 0):
        os.environ["GWHF_THREADS"] = str(args.threads)
    try:
        return args.func(args)
    except GwhfError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
