"""Command line entry point: ``heatlab run | plot | validate | golden``.

Exit codes: 0 success, 1 usage or plot errors, 2 invalid configuration,
3 trust failure (artifacts kept and flagged), 4 numerical guard trip,
5 any other runtime failure of an experiment.
"""
from __future__ import annotations

import argparse
import hashlib
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__
from . import analysis as an
from . import commutator as cm
from . import multiindex as mi
from .config import ConfigError, ExperimentConfig, load_config, reference_config, slug
from .errors import PreconditionViolated, SubcriticalExponent
from .experiments import ExperimentResult, alpha_label, dump_json, full_suite, run_experiment
from .plotting import PlotError, PlotSpec, plot_series

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_TRUST, EXIT_GUARD, EXIT_ERROR = 0, 1, 2, 3, 4, 5


def threads() -> int:
    raw = os.environ.get("HEATLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"HEATLAB_THREADS must be an integer, got {raw!r}") from None


def expand(experiments: Sequence[ExperimentConfig]) -> List[ExperimentConfig]:
    out = []
    for e in experiments:
        if e.kind == "full-suite":
            prefix = slug(e.label)
            out += [ExperimentConfig(**{**x.__dict__, "name": f"{prefix}/{x.label}"}) for x in full_suite(e.seed)]
        else:
            out.append(e)
    return out


def _run_all(experiments: List[ExperimentConfig], workers: int) -> List[ExperimentResult]:
    if workers <= 1 or len(experiments) <= 1:
        return [run_experiment(e) for e in experiments]
    # separate processes keep warning capture and FFT state per experiment
    with ProcessPoolExecutor(max_workers=min(workers, len(experiments))) as pool:
        return list(pool.map(run_experiment, experiments))


def _remainder_plot(res: ExperimentResult, out_dir: Path):
    if res.kind == "approximants" and "remainders.csv" in res.files:
        spec = PlotSpec(x="t", y="scaled_remainder", group="N", slopes=(-0.5, -1.0),
                        title=f"{res.name}: scaled remainders")
        plot_series(out_dir / "remainders.csv", out_dir / "remainders.svg", spec)
    if res.kind == "profiles" and "profile_remainders.csv" in res.files:
        spec = PlotSpec(x="t", y="scaled_remainder", group="m", slopes=(-0.5, -1.0),
                        title=f"{res.name}: profile remainders")
        plot_series(out_dir / "profile_remainders.csv", out_dir / "profile_remainders.svg", spec)


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_results(results: List[ExperimentResult], root: Path, seed: int, plots: bool = True) -> dict:
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for res in results:
        d = root / res.name
        for name, text in sorted(res.files.items()):
            p = d / name
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(text, encoding="utf-8", newline="")
        if plots:
            _remainder_plot(res, d)
        files = sorted(p for p in d.rglob("*") if p.is_file()) if d.exists() else []
        entries.append({
            "name": res.name,
            "kind": res.kind,
            "status": res.status,
            "flags": res.flags,
            "files": [{"path": p.relative_to(root).as_posix(), "sha256": sha256(p), "bytes": p.stat().st_size}
                      for p in files],
        })
    manifest = {"heatlab_version": __version__, "seed": seed, "experiments": entries}
    (root / "manifest.json").write_text(dump_json(manifest), encoding="utf-8")
    return manifest


def cmd_run(args) -> int:
    try:
        suite = load_config(args.config)
        workers = threads()
    except (ConfigError, SubcriticalExponent, PreconditionViolated) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    root = Path(args.output_dir or suite.output_dir)
    if args.relative_to_config and not root.is_absolute():
        root = Path(args.config).resolve().parent / root
    experiments = expand(suite.experiments)
    results = _run_all(experiments, workers)
    write_results(results, root, suite.seed, plots=not args.no_plots)
    code = EXIT_OK
    for res in results:
        line = f"{res.name}: {res.status}"
        if res.message:
            line += f" ({res.message})"
        print(line)
        for flag in res.flags:
            print(f"  flag: {flag}")
        if res.status == "error":
            code = EXIT_ERROR
        elif res.status == "guard" and code != EXIT_ERROR:
            code = EXIT_GUARD
        elif res.status == "untrusted" and code == EXIT_OK:
            code = EXIT_TRUST
    print(f"manifest: {root / 'manifest.json'}")
    return code


def cmd_validate(args) -> int:
    if args.reference:
        sys.stdout.write(reference_config())
        return EXIT_OK
    if not args.config:
        print("validate needs a config path or --reference", file=sys.stderr)
        return EXIT_USAGE
    try:
        suite = load_config(args.config)
    except (ConfigError, SubcriticalExponent, PreconditionViolated) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{args.config}: ok ({len(suite.experiments)} experiment(s))")
    return EXIT_OK


def cmd_plot(args) -> int:
    spec = PlotSpec(x=args.x, y=args.y, group=args.group, slopes=tuple(args.slope or ()),
                    logx=not args.linear_x, logy=not args.linear_y, title=args.title or "")
    out = args.out or str(Path(args.csv).with_suffix(".svg"))
    try:
        plot_series(args.csv, out, spec)
    except PlotError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(out)
    return EXIT_OK


GOLDEN_ALPHAS = {1: 4, 2: 3}
GOLDEN_REGIMES = [(1, 1, 4.0), (2, 1, 4.0), (3, 1, 4.0), (1, 1, 6.0), (1, 1, 3.5), (2, 1, 3.5),
                  (1, 2, 3.0), (2, 2, 3.0), (1, 2, 2.5), (2, 2, 2.5), (3, 2, 2.5), (1, 3, 2.0)]


def golden_payload() -> Dict[str, str]:
    files = {}
    for n, top in GOLDEN_ALPHAS.items():
        for alpha in mi.up_to_order(n, top):
            if mi.order(alpha) == 0:
                continue
            files[f"r_alpha/n{n}_{alpha_label(alpha)}.json"] = dump_json(cm.build_r_alpha(alpha).to_dict())
    table = [an.predict_regime(N, n, p).to_dict() for N, n, p in GOLDEN_REGIMES]
    files["regimes.json"] = dump_json(table)
    return files


def cmd_golden(args) -> int:
    if not args.force:
        print("golden files are only rewritten with --force", file=sys.stderr)
        return EXIT_USAGE
    root = Path(args.dir)
    for name, text in sorted(golden_payload().items()):
        p = root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
    print(f"wrote {len(golden_payload())} golden files under {root}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heatlab", description="Heat semigroup and semilinear heat equation lab.")
    ap.add_argument("--version", action="version", version=f"heatlab {__version__}")
    sub = ap.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", help="run the experiments of a config file")
    r.add_argument("config")
    r.add_argument("--output-dir", help="overrides output_dir from the config")
    r.add_argument("--relative-to-config", action="store_true",
                   help="resolve a relative output_dir against the config's directory")
    r.add_argument("--no-plots", action="store_true", help="skip SVG rendering")
    r.set_defaults(fn=cmd_run)

    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config", nargs="?")
    v.add_argument("--reference", action="store_true", help="print the documented reference config")
    v.set_defaults(fn=cmd_validate)

    p = sub.add_parser("plot", help="log-log SVG of a CSV series")
    p.add_argument("csv")
    p.add_argument("--x", default="t")
    p.add_argument("--y", default="scaled_remainder")
    p.add_argument("--group", help="column whose values split the series")
    p.add_argument("--slope", type=float, action="append", help="reference slope (repeatable)")
    p.add_argument("--linear-x", action="store_true")
    p.add_argument("--linear-y", action="store_true")
    p.add_argument("--title")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_plot)

    g = sub.add_parser("golden", help="regenerate golden files")
    g.add_argument("--force", action="store_true")
    g.add_argument("--dir", default="tests/golden")
    g.set_defaults(fn=cmd_golden)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
