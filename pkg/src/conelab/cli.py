"""Command-line entry point: ``conelab {verify,spectrum,sweep,certify,variation}``.

Exit codes: 0 when every verdict passes, 2 when some verdict fails (the
report is still written), 1 on configuration or I/O errors.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__
from .cone_density import certify_cd
from .errors import ConelabError, ConfigError, ExpressionError
from .hypersurface import geometry
from .hypersurface.geometry import default_tol_stationary
from .oracles import cap_reference
from .scenario import Scenario
from .stability import (Dilation, Normal, Parallel, assemble, cutoff_energy_decay,
                        rescaled_parallel, run_variation, spectrum, stability_report, stationarity_check)
from .weighted_measures import SWEEP_COLUMNS, fsum, minkowski, sweep_row, weighted_area, write_csv

log = logging.getLogger("conelab")

COMMAND_ANALYSES = {
    "verify": ("geometry", "minkowski"),
    "spectrum": ("spectrum",),
    "sweep": ("sweep",),
    "certify": ("certify_cd",),
    "variation": ("variation", "cutoff_decay"),
}
COMMAND_DEFAULTS = {
    "verify": [{"type": "geometry"}, {"type": "minkowski"}],
    "spectrum": [{"type": "spectrum", "mode": "both"}],
    "certify": [{"type": "certify_cd"}],
    "variation": [{"type": "variation", "kind": "dilation"}],
}


# ------------------------------------------------------------ JSON helpers

def _clean(obj):
    """Plain JSON types; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_csv(path: Path, rows, columns) -> None:
    fd, tmp = tempfile.mkstemp(dir=Path(path).parent, prefix=Path(path).name, suffix=".tmp")
    os.close(fd)
    try:
        write_csv(tmp, rows, columns)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def report(results: list, scenario: Scenario, command: str, provenance: list,
           timestamp: Optional[str] = None) -> str:
    """Serialise a run; field order is sorted so reruns differ only in ``timestamp``."""
    doc = {
        "tool": "conelab",
        "version": __version__,
        "command": command,
        "config_hash": scenario.config_hash(),
        "config": scenario.to_dict(),
        "timestamp": timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "analyses": results,
        "provenance": provenance,
        "passed": all(r.get("passed", False) for r in results),
    }
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


# ------------------------------------------------------------ analyses

class Context:
    def __init__(self, scenario: Scenario, out_dir: Path, command: str):
        self.scenario = scenario
        self.out_dir = out_dir
        self.command = command
        self.cone = scenario.cone()
        self.density = scenario.density()
        self._surface = None
        self.provenance: list = []
        self.rng = np.random.default_rng(scenario.data["seed"])

    @property
    def surface(self):
        if self._surface is None:
            self._surface = self.scenario.surface(self.cone)
        return self._surface

    def tol(self, key: str, surface=None) -> float:
        t = self.scenario.data["tolerances"]
        if key in t:
            return float(t[key])
        surface = self.surface if surface is None else surface
        base = default_tol_stationary(surface)
        if key == "minkowski":
            return 1e-8 if surface.backend == "parametric" else base
        return base

    def cap_oracle(self, surface=None, density=None):
        surface = self.surface if surface is None else surface
        density = self.density if density is None else density
        if surface.meta.get("kind") != "cap" or not density.is_radial or density.profile.c != 1.0:
            return None
        ref = cap_reference(surface.n, density.k, surface.meta["radius"], self.cone)
        self.provenance.append(ref.to_dict())
        return ref


def _expect(res: dict, opts: dict) -> bool:
    ok = True
    for name, want in opts.get("expect", {}).items():
        got = res.get("verdicts", {}).get(name, res.get(name))
        ok = ok and (got is not None and bool(got) == want)
    return ok


def run_certify(ctx: Context, opts: dict) -> dict:
    rep = certify_cd(ctx.density, ctx.cone, tol=ctx.tol("certify"))
    res = {"report": rep.to_dict(), "verdicts": {"cd_certified": rep.cd_certified}}
    res["passed"] = rep.agree and _expect(res, opts)
    return res


def run_geometry(ctx: Context, opts: dict) -> dict:
    S = ctx.surface
    rep = stationarity_check(S, ctx.density, ctx.cone, ctx.tol("stationary"))
    res = {"report": rep.to_dict(), "verdicts": dict(rep.verdicts), "dofs": S.dofs, "h": S.shape().h}
    ok = True
    ref = ctx.cap_oracle()
    if ref is not None:
        geo = geometry(S, ctx.density, ctx.cone)
        err = float(np.abs(geo.H_f - ref.expected["H_f"]).max())
        res["H_f_oracle_error"] = err
        ok = err <= max(ctx.tol("minkowski"), 1e-8)
    if "expect" in opts:
        ok = ok and _expect(res, opts)
    else:
        ok = ok and rep.verdicts["stationary"]
    res["passed"] = ok
    return res


def run_minkowski(ctx: Context, opts: dict) -> dict:
    S = ctx.surface
    rep = minkowski(S, ctx.density, ctx.cone, ctx.tol("stationary"))
    tol = ctx.tol("minkowski")
    res = {"report": rep.to_dict(), "tolerance": tol, "verdicts": {"stationary": rep.stationary}}
    ok = rep.relative_residual <= tol
    if rep.relative_identity_gap is not None:
        ok = ok and rep.relative_identity_gap <= tol
    res["passed"] = ok and _expect(res, opts)
    return res


def run_spectrum(ctx: Context, opts: dict, tag: str = "") -> dict:
    S = ctx.surface
    rep = stability_report(S, ctx.density, ctx.cone, ctx.tol("stationary"), ctx.tol("spectrum"))
    res = {"report": rep.to_dict(), "verdicts": dict(rep.verdicts), "dofs": S.dofs}
    mode = opts.get("mode", "both")
    count = opts.get("count", 10)
    ops = assemble(S, ctx.density, ctx.cone)
    modes = ("all", "mean_zero") if mode == "both" else (mode,)
    for m in modes:
        vals = spectrum(ops, m, count)
        path = ctx.out_dir / f"{ctx.command}_spectrum_{m}{tag}.csv"
        atomic_csv(path, ({"index": i, "eigenvalue": float(v)} for i, v in enumerate(vals)),
                   ("index", "eigenvalue"))
        res[f"csv_{m}"] = str(path)
    ref = ctx.cap_oracle()
    if ref is not None and ref.expected.get("min_eigen_meanzero") is not None:
        res["oracle_lambda_min_meanzero"] = ref.expected["min_eigen_meanzero"]
        res["oracle_lambda_min_all"] = ref.expected["min_eigen_all"]
    res["passed"] = _expect(res, opts)
    return res


def _random_meanzero(ctx: Context, S) -> np.ndarray:
    geo = geometry(S, ctx.density, ctx.cone)
    P = S.positions
    c = ctx.rng.normal(size=P.shape[1] + 1)
    u = np.cos(P @ c[:-1]) + c[-1] * (P ** 2).sum(1)
    return u - fsum(u * geo.weights) / fsum(geo.weights)


def run_variation_analysis(ctx: Context, opts: dict) -> dict:
    S = ctx.surface
    kind = opts.get("kind", "dilation")
    tol = ctx.tol("variation")
    if kind == "rescaled_parallel":
        rep = rescaled_parallel(S, ctx.density, ctx.cone)
        res = {"report": rep.to_dict()}
        res["passed"] = rep.volume_drift <= 1e-8 and rep.normal_velocity_error <= 1e-4
        return res
    if kind == "normal":
        var = Normal(_random_meanzero(ctx, S))
    elif kind == "dilation":
        var = Dilation()
    else:
        var = Parallel()
    rep = run_variation(S, ctx.density, ctx.cone, var)
    res = {"report": rep.to_dict()}
    # first variations of mean-zero fields vanish, so compare against an area-sized floor
    floor = 1e-6 * weighted_area(S, ctx.density, ctx.cone)

    def close(got, want):
        return abs(got - want) <= tol * max(abs(want), floor)

    ok = rep.reliable and close(rep.dA, rep.dA_expected)
    if rep.dV is not None and rep.dV_expected is not None:
        ok = ok and close(rep.dV, rep.dV_expected)
    if rep.d2_expected is not None:
        ok = ok and close(rep.d2, rep.d2_expected)
    res["passed"] = bool(ok) and _expect(res, opts)
    return res


def run_cutoff(ctx: Context, opts: dict) -> dict:
    eps = opts.get("eps", [4e-3, 8e-3, 1.6e-2, 3.2e-2])
    rep = cutoff_energy_decay(ctx.surface, ctx.density, ctx.cone, eps)
    res = {"report": rep.to_dict()}
    res["passed"] = abs(rep.slope - rep.expected) <= ctx.tol("decay") and rep.monotone
    return res


def run_sweep(ctx: Context, opts: dict) -> dict:
    param = opts.get("parameter", "k")
    values = opts.get("values")
    if not values:
        raise ConfigError("sweep analyses need 'values'")
    with_stab = bool(opts.get("stability", False))
    rows = []
    for v in values:
        if param == "k":
            density = ctx.scenario.density(k=float(v))
            S = ctx.scenario.surface(ctx.cone)
        else:
            density = ctx.density
            S = ctx.scenario.surface(ctx.cone, radius=float(v))
        row = sweep_row(float(v), S, density, ctx.cone)
        if with_stab:
            rep = stability_report(S, density, ctx.cone, ctx.tol("stationary", S), ctx.tol("spectrum", S))
            row["lambda_min_all"] = rep.lambda_min_all
            row["lambda_min_meanzero"] = rep.lambda_min_meanzero
        rows.append(row)
    cols = list(SWEEP_COLUMNS) + (["lambda_min_all", "lambda_min_meanzero"] if with_stab else [])
    path = ctx.out_dir / f"{ctx.command}_sweep_{param}.csv"
    atomic_csv(path, rows, cols)
    return {"csv": str(path), "rows": rows, "passed": True}


RUNNERS: dict = {
    "certify_cd": run_certify,
    "geometry": run_geometry,
    "minkowski": run_minkowski,
    "spectrum": run_spectrum,
    "variation": run_variation_analysis,
    "cutoff_decay": run_cutoff,
    "sweep": run_sweep,
}


def run_analyses(ctx: Context, analyses: list) -> list:
    results = []
    for opts in analyses:
        runner: Callable = RUNNERS[opts["type"]]
        log.info("running %s", opts["type"])
        try:
            res = runner(ctx, opts)
        except ConfigError:
            raise
        except ConelabError as exc:
            res = {"error": f"{type(exc).__name__}: {exc}", "passed": False}
        res = {"type": opts["type"], "settings": opts, **res}
        results.append(res)
    return results


# ------------------------------------------------------------ entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="conelab", description="Weighted stability checks for hypersurfaces in cones.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("verify", "identity suites (geometry, Minkowski)"),
                           ("spectrum", "stability spectra"),
                           ("sweep", "parameter sweeps to CSV"),
                           ("certify", "curvature-dimension certification"),
                           ("variation", "variation and cutoff diagnostics")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True, help="scenario JSON file")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--grid", type=int, default=None)
        sp.add_argument("--backend", choices=["parametric", "fem"], default=None)
        sp.add_argument("--tol", type=float, default=None, help="override stationary/spectrum/Minkowski tolerances")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("CONELAB_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        scenario = Scenario.load(args.config).with_overrides(args.grid, args.backend, args.tol)
        out_dir = Path(args.out or scenario.data["output"].get("directory", "."))
        out_dir.mkdir(parents=True, exist_ok=True)
        wanted = COMMAND_ANALYSES[args.command]
        analyses = [a for a in scenario.data["analyses"] if a["type"] in wanted]
        if not analyses:
            if args.command not in COMMAND_DEFAULTS:
                raise ConfigError(f"'{args.command}' needs a matching analysis in the scenario")
            analyses = COMMAND_DEFAULTS[args.command]
        ctx = Context(scenario, out_dir, args.command)
        results = run_analyses(ctx, analyses)
        name = scenario.data["output"].get("report", f"{args.command}_report.json")
        atomic_write(out_dir / name, report(results, scenario, args.command, ctx.provenance))
    except ExpressionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    passed = all(r["passed"] for r in results)
    for r in results:
        print(f"{r['type']:<14} {'pass' if r['passed'] else 'FAIL'}")
    return 0 if passed else 2


if __name__ == "__main__":
    sys.exit(main())
