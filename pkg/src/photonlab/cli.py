"""``photonlab`` command line: write plot data as CSV, with optional SVG."""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import homodyne, pipeline, snspd, thinfilm, tomography
from .errors import DetectorLatched, FarBelowThresholdWarning, InvalidParameter, PhotonLabError
from .svg import bar_plot, line_plot


class UsageError(PhotonLabError):
    code = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@contextlib.contextmanager
def atomic_path(path: Path):
    """Yield a temporary sibling path; rename it over ``path`` on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        yield Path(tmp)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _write_text(path: Path, text: str):
    with atomic_path(path) as tmp:
        tmp.write_text(text)


def _write_rows(path: Path, rows: list, comment: str):
    with atomic_path(path) as tmp, open(tmp, "w", newline="") as fh:
        fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        cols = list(rows[0].keys()) if rows else []
        w.writerow(cols)
        for r in rows:
            w.writerow([repr(float(r[c])) for c in cols])


def _stamp(args, cfg, seed) -> str:
    return f"photonlab {args.command} config_sha256={cfg.digest()} seed={seed}"


# -- subcommands -------------------------------------------------------------


def cmd_stack_spectrum(args, cfg, out: Path, seed: int):
    lo = args.lambda_min if args.lambda_min is not None else cfg.float("thinfilm", "lambda_min_nm")
    hi = args.lambda_max if args.lambda_max is not None else cfg.float("thinfilm", "lambda_max_nm")
    n = args.points if args.points is not None else cfg.int("thinfilm", "points")
    if not (0 < lo < hi) or n < 2:
        raise UsageError(f"empty wavelength range [{lo}, {hi}] with {n} points")
    stack = pipeline.load_stack(cfg)
    wl = np.linspace(lo, hi, n)
    stamp = _stamp(args, cfg, seed)
    outputs = {"spectrum.csv": stack}
    if args.optimize:
        target = cfg.float("thinfilm", "target_wavelength_nm")
        free = [i for i, l in enumerate(stack.layers) if not l.material.startswith("ema(")
                and l.material not in ("Au", "Ti", "aSi")]
        res = thinfilm.optimize_thicknesses(stack, free, target, seed=seed)
        outputs["spectrum_optimized.csv"] = res.stack
        layers = "\n".join(f"{l.material} {l.thickness_nm:.3f}" for l in res.stack.layers)
        _write_text(out / "stack_optimized.txt", f"# {stamp}\n# A({target:g} nm) = {res.absorption:.6f}\n{layers}\n")
    for name, st in outputs.items():
        pts = thinfilm.spectrum(st, wl)
        with atomic_path(out / name) as tmp:
            thinfilm.write_spectrum_csv(pts, tmp, stamp)
        if args.svg:
            series = {k: (wl, [getattr(p, k) for p in pts]) for k in ("A", "R", "T")}
            _write_text(out / name.replace(".csv", ".svg"),
                        line_plot(series, "Stack absorption / reflection / transmission", "wavelength (nm)", "fraction"))
    return {"A_at_target": thinfilm.solve(stack, cfg.float("thinfilm", "target_wavelength_nm")).A}


def cmd_sde_curve(args, cfg, out: Path, seed: int):
    model = cfgmod.detector_model(cfg)
    bias = cfg.float("detector", "operating_bias_uA")
    if bias >= model.switching_current_uA:
        raise DetectorLatched(f"operating bias {bias} uA at or above switching current")
    rows = pipeline.sde_curve(cfg)
    _write_rows(out / "sde_curve.csv", rows, _stamp(args, cfg, seed))
    if args.svg:
        b = [r["bias_uA"] for r in rows]
        _write_text(out / "sde_curve.svg",
                    line_plot({"SDE": (b, [r["sde"] for r in rows])}, "System detection efficiency", "bias (uA)", "SDE"))
        _write_text(out / "dark_curve.svg",
                    line_plot({"dark": (b, [r["dark_cps"] for r in rows])}, "Dark counts", "bias (uA)", "cps", logy=True))
    return {"sde_at_bias": snspd.sde(model, bias), "dark_at_bias": snspd.dark_rate(model, bias)}


def cmd_herald(args, cfg, out: Path, seed: int):
    pumps = None
    if args.pumps:
        try:
            pumps = [float(v) for v in args.pumps.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"--pumps must be comma-separated numbers: {args.pumps}") from None
    with warnings.catch_warnings():
        warnings.simplefilter("error", FarBelowThresholdWarning)
        try:
            rows = pipeline.herald_sweep(cfg, pumps)
        except FarBelowThresholdWarning as w:
            raise InvalidParameter(str(w)) from None
    _write_rows(out / "herald.csv", rows, _stamp(args, cfg, seed))
    if args.svg:
        p = [r["pump_mW"] for r in rows]
        _write_text(out / "herald_rate.svg",
                    line_plot({"rate": (p, [r["rate_hz"] for r in rows])}, "Heralding rate", "pump (mW)", "rate (Hz)"))
        _write_text(out / "herald_g2.svg",
                    line_plot({"g2 exact": (p, [r["g2_exact"] for r in rows]),
                               "g2 two-term": (p, [r["g2_approx"] for r in rows])},
                              "Conditional g2(0)", "pump (mW)", "g2(0)"))
    return {"rows": len(rows)}


def cmd_tomo_pipeline(args, cfg, out: Path, seed: int):
    run = pipeline.tomo_pipeline(cfg, args.samples, seed)
    stamp = _stamp(args, cfg, seed)
    with atomic_path(out / "quadratures.csv") as tmp:
        run.batch.write_csv(tmp, stamp)
    _write_text(out / "quadratures.json", json.dumps(run.batch.sidecar(), indent=2, sort_keys=True) + "\n")
    with atomic_path(out / "distribution_uncorrected.csv") as tmp:
        tomography.write_distribution_csv(run.uncorrected, tmp, stamp)
    with atomic_path(out / "distribution_corrected.csv") as tmp:
        tomography.write_distribution_csv(run.corrected, tmp, stamp)
    report = run.report()
    report.update({"config_sha256": cfg.digest(), "seed": seed})
    _write_text(out / "tomo_report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    if args.svg:
        n = list(range(run.corrected.truncation + 1))
        _write_text(out / "distribution.svg",
                    bar_plot(n, {"uncorrected": list(run.uncorrected.probs), "corrected": list(run.corrected.probs)},
                             "Photon-number distribution", "probability"))
        counts, edges = np.histogram(run.batch.x, bins=120)
        mids = 0.5 * (edges[1:] + edges[:-1])
        dens = counts / (counts.sum() * np.diff(edges))
        _write_text(out / "quadratures.svg",
                    line_plot({"histogram": (mids, dens),
                               "model": (mids, homodyne.marginal_pdf(run.uncorrected, 0.0, mids))},
                              "Quadrature distribution", "x (vacuum variance 1/2)", "density"))
    return {"uncorrected_P1": run.uncorrected[1], "corrected_P1": run.corrected[1], "corrected_P0": run.corrected[0]}


COMMANDS = {
    "stack-spectrum": cmd_stack_spectrum,
    "sde-curve": cmd_sde_curve,
    "herald": cmd_herald,
    "tomo-pipeline": cmd_tomo_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI config file (default: $PHOTONLAB_CONFIG, then built-in)")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--seed", type=int, help="random seed (default: [run] seed)")
    common.add_argument("--svg", action="store_true", help="also write SVG plots")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config value; repeatable")

    p = _Parser(prog="photonlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("stack-spectrum", parents=[common], help="thin-film R/T/A spectrum")
    s.add_argument("--lambda-min", type=float)
    s.add_argument("--lambda-max", type=float)
    s.add_argument("--points", type=int)
    s.add_argument("--optimize", action="store_true", help="also optimize dielectric thicknesses")
    sub.add_parser("sde-curve", parents=[common], help="detector efficiency and dark counts vs bias")
    h = sub.add_parser("herald", parents=[common], help="heralding rate and g2 vs pump")
    h.add_argument("--pumps", help="comma-separated pump powers in mW")
    t = sub.add_parser("tomo-pipeline", parents=[common], help="herald -> homodyne -> MLE -> loss correction")
    t.add_argument("--samples", type=int)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = cfgmod.load_config(args.config, args.set)
        seed = args.seed if args.seed is not None else cfg.int("run", "seed")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        summary = COMMANDS[args.command](args, cfg, out, seed)
    except PhotonLabError as exc:
        msg = str(exc).replace("\n", " ")
        print(json.dumps({"error": exc.code, "message": msg}), file=sys.stderr)
        return 2 if exc.code == "usage" else 1
    print(json.dumps({"ok": args.command, **{k: float(v) for k, v in summary.items()}}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
