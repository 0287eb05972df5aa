"""Command-line front end: discover, filter, simulate, eval, features, benchmark.

Exit codes: 0 success, 1 data or runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
import warnings
from pathlib import Path

from . import __version__
from .benchmark import rows_to_csv, run_benchmark
from .dataset import DataError, load_csv, save_csv, standardize
from .hrsi import InteractionSpec, extract_features, load_trajectories, static_point
from .pcmci import DiscoveryConfig, LaggedGraph, run_fpcmci, run_pcmci
from .synth import (SCMSpec, add_distractors, random_scm, score_triples, simulate,
                    truth_from_dict, truth_to_json)
from .te import FilterConfig, select_features

log = logging.getLogger("fpcmci")


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".manifest.json")


def write_manifest(command, args, inputs, outputs, seed, duration, anchor):
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "command")}
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {str(p): _digest(p) for p in inputs},
        "outputs": {str(p): _digest(p) for p in outputs},
        "version": __version__,
        "duration_s": duration,
    }
    path = _manifest_path(anchor)
    path.write_text(json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8")
    return path


# -- argument types -----------------------------------------------------------

def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _seed(s):
    v = int(s)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a non-negative 64-bit integer")
    return v


def _unit_interval(s):
    v = float(s)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {s}")
    return v


def _add_discovery_flags(p):
    p.add_argument("input", help="dataset CSV (header row of variable names)")
    p.add_argument("--alpha", type=_unit_interval, default=0.05)
    p.add_argument("--alpha-pc", type=_unit_interval, default=0.05)
    p.add_argument("--alpha-filter", type=_unit_interval, default=0.05)
    p.add_argument("--min-lag", type=_positive_int, default=1)
    p.add_argument("--max-lag", type=_positive_int, default=2)
    p.add_argument("--max-conds-dim", type=int, default=3)
    p.add_argument("--estimator", choices=("gaussian", "binned"), default="gaussian")
    p.add_argument("--bins", type=int, default=8)
    p.add_argument("--surrogates", type=int, default=100)
    p.add_argument("--correction", choices=("maxstat", "none"), default="maxstat",
                   help="multiple-testing control inside the TE filter")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--protect", action="append", default=[], metavar="NAME")
    p.add_argument("--threads", type=_positive_int, default=1)


def _configs(args, parser):
    if args.min_lag > args.max_lag:
        parser.error("min-lag exceeds max-lag")
    if args.surrogates < 19:
        parser.error("surrogates must be >= 19")
    if args.bins < 2:
        parser.error("bins must be >= 2")
    if args.max_conds_dim < 0:
        parser.error("max-conds-dim must be >= 0")
    fcfg = FilterConfig(tau_min=args.min_lag, tau_max=args.max_lag,
                        alpha_filter=args.alpha_filter, estimator=args.estimator,
                        n_surrogates=args.surrogates, bins=args.bins, seed=args.seed,
                        protected=tuple(args.protect), correction=args.correction)
    dcfg = DiscoveryConfig(tau_min=args.min_lag, tau_max=args.max_lag,
                           alpha_pc=args.alpha_pc, alpha=args.alpha,
                           max_conds_dim=args.max_conds_dim, seed=args.seed,
                           fdr=getattr(args, "fdr", False))
    return fcfg, dcfg


def _load(args):
    ds = load_csv(args.input)
    return ds if args.no_standardize else standardize(ds)


# -- commands -----------------------------------------------------------------

def cmd_discover(args, parser) -> int:
    fcfg, dcfg = _configs(args, parser)
    t0 = time.perf_counter()
    ds = _load(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.mode == "fpcmci":
            fres, graph = run_fpcmci(ds, fcfg, dcfg, workers=args.threads)
            kept, rejected = fres.selected, fres.rejected
        else:
            graph = run_pcmci(ds, dcfg, workers=args.threads)
            kept, rejected = ds.names, ()
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)

    out = Path(args.out)
    outputs = []
    if args.format in ("json", "both"):
        path = out if out.suffix == ".json" else out.with_suffix(".json")
        path.write_text(graph.to_json(include_duration=args.timing), encoding="utf-8")
        outputs.append(path)
    if args.format in ("dot", "both"):
        path = out.with_suffix(".dot")
        path.write_text(graph.to_dot(), encoding="utf-8")
        outputs.append(path)
    if args.mode == "fpcmci" and args.filter_out:
        Path(args.filter_out).write_text(fres.to_json(), encoding="utf-8")
        outputs.append(Path(args.filter_out))
    duration = time.perf_counter() - t0
    write_manifest("discover", args, [args.input], outputs, args.seed, duration, out)
    print(f"{args.mode}: kept {len(kept)}/{ds.N} variables"
          f"{' (rejected: ' + ', '.join(rejected) + ')' if rejected else ''}, "
          f"{len(graph.edges)} edges, {graph.stats['ci_tests']} CI tests, "
          f"{graph.stats['duration_s']:.3f} s")
    return 0


def cmd_filter(args, parser) -> int:
    fcfg, _ = _configs(args, parser)
    t0 = time.perf_counter()
    fres = select_features(_load(args), fcfg, workers=args.threads)
    Path(args.out).write_text(fres.to_json(), encoding="utf-8")
    write_manifest("filter", args, [args.input], [args.out], args.seed,
                   time.perf_counter() - t0, args.out)
    n_cross = sum(c.source != c.target for c in fres.candidates)
    print(f"filter: kept {len(fres.selected)} variables, rejected "
          f"{len(fres.rejected)}, {n_cross} candidate cross-links")
    return 0


def cmd_simulate(args, parser) -> int:
    if args.samples < 100:
        parser.error("samples must be ≥ 100")
    if args.spec is None:
        if args.vars is None:
            parser.error("--vars is required unless --spec is given")
        if not 0 < args.density <= 1:
            parser.error("density must be in (0, 1]")
    if args.distractors < 0:
        parser.error("distractors must be ≥ 0")
    t0 = time.perf_counter()
    inputs = []
    if args.spec is not None:
        spec = SCMSpec.from_dict(json.loads(Path(args.spec).read_text(encoding="utf-8")))
        inputs.append(args.spec)
    else:
        spec = random_scm(args.vars, args.density, args.max_lag, args.seed)
    ds, truth = simulate(spec, args.samples, args.seed)
    ds = add_distractors(ds, args.distractors, args.seed)
    save_csv(ds, args.out_data)
    Path(args.out_truth).write_text(truth_to_json(truth, spec.names), encoding="utf-8")
    outputs = [args.out_data, args.out_truth]
    if args.out_spec:
        Path(args.out_spec).write_text(json.dumps(spec.to_dict(), indent=2) + "\n",
                                       encoding="utf-8")
        outputs.append(args.out_spec)
    write_manifest("simulate", args, inputs, outputs, args.seed,
                   time.perf_counter() - t0, args.out_data)
    print(f"simulate: {ds.N} columns x {ds.T} samples, {len(truth)} true links")
    return 0


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise DataError(f"cannot read {path}: {err}") from None


def cmd_eval(args, parser) -> int:
    gd = _read_json(args.graph)
    td = _read_json(args.truth)
    try:
        graph = LaggedGraph.from_dict(gd)
        truth = truth_from_dict(td)
    except (KeyError, TypeError, ValueError) as err:
        raise DataError(f"malformed graph or truth file: {err}") from None
    duration = graph.stats.get("duration_s")
    if duration is None:
        mpath = _manifest_path(args.graph)
        duration = _read_json(mpath).get("duration_s", 0.0) if mpath.is_file() else 0.0
    m = score_triples(graph.triples(), truth, graph.stats.get("ci_tests", 0), duration)
    if args.out is None:
        print(m.to_json())
    elif str(args.out).endswith(".csv"):
        Path(args.out).write_text(m.to_csv_row(header=True), encoding="utf-8")
    else:
        Path(args.out).write_text(m.to_json() + "\n", encoding="utf-8")
    if args.out is not None:
        print(f"eval: f1 {m.f1:.3f}, precision {m.precision:.3f}, "
              f"recall {m.recall:.3f}, shd {m.shd}")
    return 0


def _parse_other(text):
    """``ID``, ``x,y`` or ``NAME=x,y``; returns (name, point or None)."""
    name, _, coords = text.rpartition("=")
    coords = coords if name else text
    parts = coords.split(",")
    if len(parts) == 2:
        try:
            xy = (float(parts[0]), float(parts[1]))
        except ValueError:
            return text, None
        return (name or f"p{parts[0].strip()}_{parts[1].strip()}"), xy
    return text, None


def cmd_features(args, parser) -> int:
    t0 = time.perf_counter()
    trajs = load_trajectories(args.trajectories)
    if args.subject not in trajs:
        raise DataError(f"no trajectory for subject {args.subject!r}")
    subj = trajs[args.subject]
    others = []
    for text in args.other:
        name, xy = _parse_other(text)
        if xy is not None:
            trajs[name] = static_point(name, xy[0], xy[1], len(subj), subj.dt)
        others.append(name)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ds = extract_features(trajs, InteractionSpec(args.subject, tuple(others)))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    save_csv(ds, args.out)
    write_manifest("features", args, args.trajectories, [args.out], None,
                   time.perf_counter() - t0, args.out)
    print(f"features: {ds.N} columns x {ds.T} samples -> {args.out}")
    return 0


def cmd_benchmark(args, parser) -> int:
    t0 = time.perf_counter()
    fcfg = FilterConfig(tau_max=args.max_lag, seed=args.seed)
    dcfg = DiscoveryConfig(tau_max=args.max_lag, seed=args.seed)
    rows = run_benchmark(range(args.seed, args.seed + args.seeds), n_vars=args.vars,
                         density=args.density, tau_max=args.max_lag, T=args.samples,
                         distractors=args.distractors, fcfg=fcfg, dcfg=dcfg,
                         workers=args.threads)
    Path(args.out).write_text(rows_to_csv(rows), encoding="utf-8")
    write_manifest("benchmark", args, [], [], args.seed, time.perf_counter() - t0, args.out)
    for mode in ("pcmci", "fpcmci"):
        sel = [r for r in rows if r.mode == mode]
        print(f"{mode}: mean f1 {sum(r.f1 for r in sel) / len(sel):.3f}, "
              f"mean CI tests {sum(r.ci_tests for r in sel) / len(sel):.1f}, "
              f"mean duration {sum(r.duration_s for r in sel) / len(sel):.4f} s")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fpcmci", description="Transfer-entropy filtered PCMCI causal discovery.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", help="reconstruct a lagged causal graph")
    _add_discovery_flags(p)
    p.add_argument("--mode", choices=("fpcmci", "pcmci"), default="fpcmci")
    p.add_argument("--fdr", action="store_true",
                   help="Benjamini-Hochberg adjustment of MCI p-values")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("json", "dot", "both"), default="json")
    p.add_argument("--filter-out", help="also write the TE filter result (JSON)")
    p.add_argument("--timing", action="store_true",
                   help="store duration_s in the graph JSON (breaks byte-identity)")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("filter", help="run the TE feature filter only")
    _add_discovery_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("simulate", help="simulate a random linear SCM")
    p.add_argument("--vars", type=_positive_int)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--max-lag", type=_positive_int, default=2)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--distractors", type=int, default=0)
    p.add_argument("--spec", help="simulate this SCM JSON instead of a random one")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out-data", required=True)
    p.add_argument("--out-truth", required=True)
    p.add_argument("--out-spec")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="score a graph against ground truth")
    p.add_argument("--graph", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("features", help="extract interaction features from trajectories")
    p.add_argument("trajectories", nargs="+")
    p.add_argument("--subject", required=True)
    p.add_argument("--other", action="append", default=[],
                   help="agent id, 'x,y' or 'NAME=x,y' (repeatable)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("benchmark", help="PCMCI vs F-PCMCI on seeded synthetic SCMs")
    p.add_argument("--seeds", type=_positive_int, default=20)
    p.add_argument("--seed", type=_seed, required=True, help="first seed")
    p.add_argument("--vars", type=_positive_int, default=4)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--max-lag", type=_positive_int, default=2)
    p.add_argument("--samples", type=int, default=1500)
    p.add_argument("--distractors", type=int, default=3)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        return args.func(args, sub)
    except (DataError, ValueError, OverflowError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
