"""Command-line pipeline: ``reduce``, ``simulate`` and ``bench``.

Exit codes: 0 success, 2 invalid input or failed validation, 3 size limits.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .benchmarks import RANK_TOL, SPAN_TOL, Thresholds, full_suite, rank_bound_curve
from .channelfile import (
    ChannelFile,
    dumps,
    fluctuation_from_doc,
    hamiltonian_from_doc,
    lindblad_from_doc,
    load,
    load_model_spec,
    load_observables,
    save,
    validate_schema,
    write_atomic,
)
from .core import DEFAULT_TOL, ChannelTrajectory, SubsetSelector, choi_of_unitary, reduced_choi
from .errors import QCBenchError, SizeError
from .gatelab import (
    FluctuationSpec,
    LindbladSpec,
    build_hamiltonian,
    evolve_unitary,
    fluctuating_channel,
    lindblad_channel,
    lindblad_generator,
    trajectory,
)
from .metrics import max_pure_state_discrepancy, schatten2_diff, sigma_max_diff

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3


class CliError(QCBenchError):
    pass


def _parse_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _parse_times(text: str) -> tuple[float, ...]:
    """``0,0.5,1`` or ``start:stop:num`` (inclusive, like ``numpy.linspace``)."""
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            return tuple(float(t) for t in np.linspace(float(start), float(stop), int(num)))
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad time grid {text!r}") from exc


# --------------------------------------------------------------------------
# reduce


def cmd_reduce(args) -> int:
    cf = load(args.unitary, strict=args.strict)
    if cf.kind != "unitary":
        raise CliError(f"{args.unitary}: expected a unitary file, got kind {cf.kind!r}")
    if args.n_qubits != cf.n_qubits:
        raise CliError(f"--n-qubits {args.n_qubits} does not match the file ({cf.n_qubits} qubits)")
    subset = SubsetSelector(args.n_qubits, args.subset)
    c = reduced_choi(cf.data, args.n_qubits, subset)
    meta = {"source": Path(args.unitary).name, "n_qubits": args.n_qubits, "subset": list(subset.indices)}
    save(args.out, ChannelFile("choi", c, None, meta))
    return EXIT_OK


# --------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    doc = load_model_spec(args.spec)
    subset = tuple(doc["subset"]) if "subset" in doc else None
    times = args.times
    if args.model == "lindblad":
        if subset is not None:
            raise CliError("subset reduction is not available for lindblad models")
        builder = lindblad_from_doc(doc)
    elif args.model == "fluctuate":
        builder = fluctuation_from_doc(doc, seed=args.seed)
    else:
        builder = hamiltonian_from_doc(doc)
    if subset is not None:
        subset = SubsetSelector(doc["n_qubits"], subset)

    meta = {"model": args.model, "spec": doc}
    if args.model == "fluctuate":
        meta["seed"] = builder.seed
    if len(times) == 1:
        t = times[0]
        c = _single(builder, t, subset)
        save(args.out, ChannelFile("choi", c, None, {**meta, "t": t}))
    else:
        traj = trajectory(builder, times, subset=subset)
        save(args.out, ChannelFile("trajectory", traj, None, meta))
    return EXIT_OK


def _single(builder, t, subset):
    if isinstance(builder, LindbladSpec):
        return lindblad_channel(lindblad_generator(builder), t)
    if isinstance(builder, FluctuationSpec):
        return fluctuating_channel(builder, t, subset=subset)
    u = evolve_unitary(build_hamiltonian(builder), t)
    return choi_of_unitary(u) if subset is None else reduced_choi(u, builder.n_qubits, subset)


# --------------------------------------------------------------------------
# bench


def rank_bounds_csv(d: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "d^2-k+1", "k^2-k+1"])
    w.writerows(rank_bound_curve(d))
    return buf.getvalue()


def metrics_csv(traj: ChannelTrajectory, restarts: int = 8, seed: int = 0) -> str:
    """Error metrics of each sample against the ``t = 0`` sample."""
    ref = traj.chois[0]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "sigma_max", "schatten2", "schatten2_over_d", "pure_state_max"])
    for t, c in traj:
        f = schatten2_diff(ref, c)
        p = max_pure_state_discrepancy(ref, c, restarts=restarts, seed=seed).value
        w.writerow([repr(t), repr(sigma_max_diff(ref, c)), repr(f), repr(f / c.d), repr(p)])
    return buf.getvalue()


def cmd_bench(args) -> int:
    cf = load(args.input, strict=args.strict, tol=args.tol)
    if cf.kind == "unitary":
        raise CliError(f"{args.input}: bench expects a choi or trajectory file; reduce the unitary first")
    observables = load_observables(args.observables) if args.observables else None
    report = full_suite(
        cf.data,
        observables=observables,
        rank_tol=args.rank_tol,
        span_tol=args.span_tol,
        thresholds=Thresholds(),
        tol=args.tol,
    )
    doc = report.to_dict()
    doc["input"]["file"] = Path(args.input).name
    if args.observables:
        doc["input"]["observables"] = Path(args.observables).name
    validate_schema(doc, "bench_report.v1.json", "report")

    # render everything before writing anything
    outputs = [(Path(args.out), dumps(doc))]
    if args.csv:
        outputs.append((Path(f"{args.csv}_rank_bounds.csv"), rank_bounds_csv(report.ds.d)))
        if isinstance(cf.data, ChannelTrajectory):
            outputs.append((Path(f"{args.csv}_metrics.csv"), metrics_csv(cf.data)))
    for path, text in outputs:
        write_atomic(path, text)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcbench", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qcbench {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("reduce", help="reduce a multi-qubit unitary to a subset of qubits")
    r.add_argument("--unitary", required=True)
    r.add_argument("--n-qubits", type=int, required=True)
    r.add_argument("--subset", type=_parse_ints, required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--strict", action="store_true", help="fail on validation warnings")
    r.set_defaults(func=cmd_reduce)

    s = sub.add_parser("simulate", help="synthesize a channel or trajectory from a model spec")
    s.add_argument("model", choices=["lindblad", "fluctuate", "unitary"])
    s.add_argument("spec")
    s.add_argument("--times", type=_parse_times, required=True)
    s.add_argument("--seed", type=int, default=None, help="overrides the seed in the model file (default 0)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="run the benchmark suite on a choi or trajectory file")
    b.add_argument("--input", required=True)
    b.add_argument("--observables")
    b.add_argument("--rank-tol", type=float, default=RANK_TOL)
    b.add_argument("--span-tol", type=float, default=SPAN_TOL)
    b.add_argument("--tol", type=float, default=DEFAULT_TOL, help="Hermiticity/PSD tolerance")
    b.add_argument("--out", required=True)
    b.add_argument("--csv", metavar="PREFIX")
    b.add_argument("--strict", action="store_true")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except SizeError as exc:
        print(f"qcbench: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (QCBenchError, OSError, TypeError) as exc:
        print(f"qcbench: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
