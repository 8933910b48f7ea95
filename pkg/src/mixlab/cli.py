"""Command line entry point.

Exit codes: 0 pass, 1 verified false, 2 usage or infeasible request.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__, analysis, chains, counterexample, export, montecarlo, projection, states
from .chain import ChainError

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    subcommand: str
    parameters: dict
    seed: int
    versions: dict = field(default_factory=lambda: {"mixlab": __version__})
    outputs: list = field(default_factory=list)
    summary: str = "error"
    timestamp: str = field(default_factory=lambda: time.strftime("%Y-%m-%dT%H:%M:%S"))


class Output:
    """Writes artifacts to ``--out-dir`` (and records them) or to stdout."""

    def __init__(self, out_dir: str | None, manifest: RunManifest):
        self.dir = Path(out_dir) if out_dir else None
        self.manifest = manifest
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)

    def emit(self, name: str, text: str) -> None:
        if self.dir is None:
            sys.stdout.write(text if text.endswith("\n") else text + "\n")
            return
        path = self.dir / name
        path.write_text(text if text.endswith("\n") else text + "\n")
        self.manifest.outputs.append(str(path))

    def close(self) -> None:
        if self.dir is not None:
            path = self.dir / "manifest.json"
            self.manifest.outputs.append(str(path))
            path.write_text(json.dumps(asdict(self.manifest), indent=2) + "\n")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, Fraction):
        return {"numerator": o.numerator, "denominator": o.denominator}
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")


# subcommands


def cmd_counterexample(args, out: Output) -> int:
    codec = states.pauli(len(args.initial))
    try:
        y = codec.parse(args.initial)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        report = counterexample.refute_sst_claim(y, args.steps)
    except counterexample.EmptyEventError as exc:
        out.emit("counterexample.json", _dumps({"error": "empty_event", "message": str(exc)}))
        return EXIT_USAGE
    if args.format == "csv":
        rows = ["state,numerator,denominator"]
        rows += [f"{k},{v['numerator']},{v['denominator']}" for k, v in report["conditional"].items()]
        out.emit("counterexample.csv", "\n".join(rows))
    else:
        out.emit("counterexample.json", counterexample.report_json(report))
    r = report["ratio"]
    ok = r is not None and Fraction(r["numerator"], r["denominator"]) == Fraction(3, 2)
    return EXIT_PASS if ok else EXIT_FAIL


_VERIFY_RANGES = {1: (2, 5), 2: (1, 12), 3: (2, 5), 4: (2, 10)}


def cmd_verify(args, out: Output) -> int:
    lo, hi = _VERIFY_RANGES[args.lemma]
    if not lo <= args.n <= hi:
        raise UsageError(f"lemma {args.lemma} supports {lo} <= n <= {hi}, got n={args.n}")
    if args.eps is not None and not 0 < args.eps < 1:
        raise UsageError(f"--eps must lie in (0, 1), got {args.eps}")
    if args.lemma == 1:
        eps = analysis.LEMMA1_EPS if args.eps is None else (args.eps,)
        report = analysis.verify_lemma1(args.n, eps)
    elif args.lemma == 2:
        report = projection.verify_lemma2(args.n, args.samples, args.seed)
    elif args.lemma == 3:
        report = analysis.verify_lemma3(args.n, args.eps or 0.25, seed=args.seed)
    else:
        report = analysis.verify_lemma4(args.n, args.eps or 0.25)
    out.emit(f"verify_lemma{args.lemma}.json", _dumps(report))
    return EXIT_PASS if report["passed"] else EXIT_FAIL


def cmd_sweep(args, out: Output) -> int:
    lo, hi = analysis.SWEEP_LIMITS.get(args.kind, (0, -1))
    if args.kind not in analysis.SWEEP_LIMITS:
        raise UsageError(f"sweep kind must be one of {', '.join(analysis.SWEEP_LIMITS)}")
    if not (lo <= args.n_min <= args.n_max <= hi):
        limits = ", ".join(f"{k}: {a}..{b}" for k, (a, b) in analysis.SWEEP_LIMITS.items())
        raise UsageError(f"infeasible range {args.n_min}..{args.n_max} for {args.kind}; limits are {limits}")
    if not 0 < args.eps < 1:
        raise UsageError(f"eps must lie in (0, 1), got {args.eps}")
    n_values = range(args.n_min, args.n_max + 1, args.step)
    sweep = analysis.spectral_gap_sweep(args.kind, n_values, args.eps, with_gap=not args.no_gap)
    if args.format == "json":
        out.emit(f"sweep_{args.kind}.json", sweep.to_json())
    else:
        out.emit(f"sweep_{args.kind}.csv", sweep.to_csv())
        out.emit(f"sweep_{args.kind}_fit.json", sweep.to_json())
    return EXIT_PASS


def cmd_export(args, out: Output) -> int:
    try:
        fam = chains.build(args.kind, args.n)
    except chains.LimitError as exc:
        raise UsageError(str(exc)) from exc
    except ChainError as exc:
        raise UsageError(str(exc)) from exc
    text = export.dumps(fam)
    if args.path:
        Path(args.path).write_text(text)
        out.manifest.outputs.append(args.path)
    else:
        out.emit(f"{args.kind}_{args.n}.triplets", text)
    return EXIT_PASS


def cmd_montecarlo(args, out: Output) -> int:
    try:
        initial = states.pauli(args.n).parse(args.initial) if args.initial else None
        cfg = montecarlo.TrajectoryConfig(
            args.n, args.steps, args.trajectories, args.seed, args.variant, initial
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    times = sorted(set(args.times or []) | {args.steps})
    marginals = montecarlo.empirical_Z_marginal(cfg, times=times, workers=args.workers)
    out.emit("config.json", montecarlo.config_json(cfg))
    out.emit("histogram.csv", montecarlo.histogram_csv(marginals[t] for t in times))
    summary = [{"t": t, "tv_lower_bound": marginals[t].tv, "radius": marginals[t].radius} for t in times]
    out.emit("montecarlo.json", _dumps(summary))
    return EXIT_PASS


GLOBAL_DEFAULTS = {"seed": 0, "out_dir": None, "format": "json"}


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # repeated on every subparser so the flags work before or after the subcommand
    default = (lambda k: argparse.SUPPRESS) if suppress else GLOBAL_DEFAULTS.get
    parser.add_argument("--seed", type=int, default=default("seed"))
    parser.add_argument("--out-dir", default=default("out_dir"))
    parser.add_argument("--format", choices=("json", "csv"), default=default("format"))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixlab", description=__doc__.splitlines()[0])
    _global_flags(p, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("counterexample", parents=[common], help="exact conditional hit distribution")
    c.add_argument("--initial", default="001")
    c.add_argument("--steps", type=int, default=2)
    c.set_defaults(func=cmd_counterexample)

    v = sub.add_parser("verify", parents=[common], help="check one of the lemmas")
    v.add_argument("lemma", type=int, choices=(1, 2, 3, 4))
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--eps", type=float, default=None)
    v.add_argument("--samples", type=int, default=100)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", parents=[common], help="mixing times and gaps across n")
    s.add_argument("kind", choices=tuple(analysis.SWEEP_LIMITS))
    s.add_argument("n_min", type=int)
    s.add_argument("n_max", type=int)
    s.add_argument("eps", type=float)
    s.add_argument("--step", type=int, default=1)
    s.add_argument("--no-gap", action="store_true")
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("export", parents=[common], help="dump a chain as exact sparse triplets")
    e.add_argument("kind", choices=chains.KINDS)
    e.add_argument("n", type=int)
    e.add_argument("path", nargs="?", default=None)
    e.set_defaults(func=cmd_export)

    m = sub.add_parser("montecarlo", parents=[common], help="simulate Hamming-weight histograms")
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--steps", type=int, required=True)
    m.add_argument("--trajectories", type=int, default=100_000)
    m.add_argument("--variant", choices=("P", "Pprime"), default="P")
    m.add_argument("--initial", default=None)
    m.add_argument("--times", type=int, nargs="*")
    m.add_argument("--workers", type=int, default=1)
    m.set_defaults(func=cmd_montecarlo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    params = {k: v for k, v in vars(args).items() if k not in ("func", "out_dir")}
    manifest = RunManifest(args.command, params, args.seed)
    out = Output(args.out_dir, manifest)
    try:
        status = args.func(args, out)
        manifest.summary = {EXIT_PASS: "pass", EXIT_FAIL: "fail"}.get(status, "error")
    except UsageError as exc:
        sys.stderr.write(f"mixlab: {exc}\n")
        manifest.summary = f"usage error: {exc}"
        status = EXIT_USAGE
    finally:
        out.close()
    return status


if __name__ == "__main__":
    sys.exit(main())
