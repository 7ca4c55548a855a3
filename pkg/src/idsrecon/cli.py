"""Command-line front end: ``idsrecon {simulate,decode,oracle,bench,verify}``.

Exit codes: 0 success, 2 usage error, 3 data or format error, 4 decode
collapse.
"""

from __future__ import annotations

import argparse
import logging
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .channel import DATASET_PARAMS, ChannelParams, random_source, sample_cluster
from .combiner import FusionConfig, iterate
from .core import DNA, Alphabet, row_tv
from .errors import ContractError, DatasetError, DecodeCollapse, InstanceTooLarge
from .harness import (
    DECODER_CHOICES,
    ExperimentConfig,
    default_jobs,
    load_dataset,
    measure_complexity,
    run_experiment,
    simulate_dataset,
    write_dataset,
    write_records,
    write_results,
    write_results_to,
)
from .oracle import JOINT_MAX_K, enumerate_app, joint_trellis_app

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_COLLAPSE = 0, 2, 3, 4

log = logging.getLogger("idsrecon")


def _delta(text: str):
    if text in ("auto", "none"):
        return "auto" if text == "auto" else None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("delta must be an integer, 'auto' or 'none'") from None
    if value < 0:
        raise argparse.ArgumentTypeError("delta must be non-negative")
    return value


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_channel(p):
    p.add_argument("--pi", type=float, default=DATASET_PARAMS.pi_i, help="insertion probability")
    p.add_argument("--pd", type=float, default=DATASET_PARAMS.pi_d, help="deletion probability")
    p.add_argument("--ps", type=float, default=DATASET_PARAMS.pi_s, help="substitution probability")


def _add_fusion(p):
    p.add_argument("--delta", type=_delta, default="auto", help="drift bound: integer, 'auto' or 'none'")
    p.add_argument("--max-iters", type=int, default=None, help="iteration cap (default max(5, 2K))")
    p.add_argument("--epsilon", type=float, default=1e-6, help="consensus threshold in total variation")
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--no-ring", action="store_true", help="use a chain instead of a ring")
    p.add_argument("--message-rule", choices=("windowed", "divide"), default="windowed")


def _add_common(p, trials=100):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=trials)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default $IDSRECON_JOBS or 1)")
    p.add_argument("--out", default=None, help="output path (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="idsrecon", description="Trace reconstruction over IDS channels.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic centers/clusters pair")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--q", type=int, default=4, help="alphabet size (4 = ACGT)")
    _add_channel(p)
    _add_common(p)

    p = sub.add_parser("decode", help="decode a centers/clusters pair and score it")
    p.add_argument("--centers", required=True)
    p.add_argument("--clusters", required=True)
    p.add_argument("--k", type=_int_list, default=None,
                   help="reads per cluster, comma-separated; omitted = every read")
    p.add_argument("--decoder", default="belief-combine",
                   help=f"comma-separated subset of {','.join(DECODER_CHOICES)}")
    p.add_argument("--records", default=None, help="also write one line per decoded cluster here")
    _add_channel(p)
    _add_fusion(p)
    _add_common(p, trials=10**9)

    p = sub.add_parser("oracle", help="print exact symbol posteriors next to the combiner's")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--q", type=int, default=2)
    _add_channel(p)
    _add_fusion(p)
    _add_common(p, trials=1)

    p = sub.add_parser("verify", help="combiner vs exact oracles on random small instances")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--q", type=int, default=2)
    _add_channel(p)
    _add_fusion(p)
    _add_common(p, trials=50)

    p = sub.add_parser("bench", help="synthetic K sweeps, complexity and kernel timings")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--k", type=_int_list, default=[2, 4, 8])
    p.add_argument("--rates", type=_float_list, default=None,
                   help="uniform error rates to sweep (pi=pd=ps); default uses --pi/--pd/--ps")
    p.add_argument("--decoder", default="belief-combine,forward-soft")
    p.add_argument("--complexity", action="store_true", help="also fit the operation-count exponent")
    p.add_argument("--kernels", action="store_true", help="also time the compiled and numpy kernels")
    p.add_argument("--emit-plotdata", default=None, metavar="DIR",
                   help="write one CSV per sweep into DIR")
    _add_channel(p)
    _add_fusion(p)
    _add_common(p, trials=20)
    return ap


# ----------------------------------------------------------------------------


def _params(args) -> ChannelParams:
    return ChannelParams(args.pi, args.pd, args.ps)


def _fusion(args) -> FusionConfig:
    return FusionConfig(epsilon_consensus=args.epsilon, max_iters=args.max_iters, damping=args.damping,
                        ring_closure=not args.no_ring, delta=args.delta, message_rule=args.message_rule)


def _jobs(args) -> int:
    jobs = args.jobs if args.jobs is not None else default_jobs()
    if jobs < 1:
        raise ContractError("--jobs must be at least 1")
    return jobs


def _decoders(text: str) -> tuple[str, ...]:
    names = tuple(d for d in text.split(",") if d)
    bad = [d for d in names if d not in DECODER_CHOICES]
    if bad or not names:
        raise ContractError(f"unknown decoder(s) {bad}; choose from {', '.join(DECODER_CHOICES)}")
    return names


def _positive(**values):
    for name, v in values.items():
        if v is None or v < 1:
            raise ContractError(f"--{name} must be at least 1")


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        yield fh


def _small_alphabet(q: int) -> Alphabet:
    return DNA if q == 4 else Alphabet.of_size(q)


def cmd_simulate(args) -> int:
    _positive(n=args.n, k=args.k, trials=args.trials)
    params = _params(args)
    ds = simulate_dataset(args.n, args.k, params, args.trials, args.seed, _small_alphabet(args.q))
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(ds, out / "centers.txt", out / "clusters.txt")
    print(f"wrote {len(ds)} clusters of {args.k} traces to {out}/centers.txt and {out}/clusters.txt")
    return EXIT_OK


def cmd_decode(args) -> int:
    params = _params(args)
    fusion = _fusion(args)
    decoders = _decoders(args.decoder)
    _positive(trials=args.trials)
    ds = load_dataset(args.centers, args.clusters)
    if ds.rejected_reads:
        print(f"warning: dropped {ds.rejected_reads} reads with unknown symbols", file=sys.stderr)
    cfg = ExperimentConfig(K_values=args.k, params=params, trials=args.trials, seed=args.seed,
                           decoders=decoders, fusion=fusion, dataset=ds, jobs=_jobs(args))
    outcomes = [] if args.records else None
    rows = run_experiment(cfg, outcomes)
    with _output(args.out) as fh:
        write_results_to(rows, fh)
    if args.records:
        with _output(args.records) as fh:
            write_records(outcomes, fh, ds.alphabet)
    failures = sum(r.failures for r in rows)
    if failures and all(r.trials == 0 for r in rows):
        print(f"error: every decode collapsed ({failures} failures)", file=sys.stderr)
        return EXIT_COLLAPSE
    return EXIT_OK


def _instances(args):
    _positive(n=args.n, k=args.k, q=args.q, trials=args.trials)
    if args.q < 2:
        raise ContractError("--q must be at least 2")
    alphabet = _small_alphabet(args.q)
    params = _params(args)
    root = np.random.SeedSequence(args.seed)
    for child in root.spawn(args.trials):
        src, chan = child.spawn(2)
        x = random_source(args.n, np.random.default_rng(src), alphabet)
        yield sample_cluster(x, args.k, params, chan, alphabet), params


def _fmt_row(p) -> str:
    return " ".join(f"{v:.4f}" for v in p)


def cmd_oracle(args) -> int:
    fusion = _fusion(args)
    with _output(args.out) as fh:
        for i, (cl, params) in enumerate(_instances(args)):
            exact = enumerate_app(cl, params, args.n)
            rep = iterate(cl, params, fusion, args.n)
            sym = cl.alphabet.symbols
            fh.write(f"# instance {i}: reference {cl.alphabet.decode(cl.reference)}\n")
            for k, y in enumerate(cl.traces):
                fh.write(f"#   trace {k}: {cl.alphabet.decode(y)}\n")
            fh.write(f"# columns: t | exact posterior ({' '.join(sym)}) | combiner ({' '.join(sym)}) | tv\n")
            tv = row_tv(rep.consensus_beliefs, exact)
            for t in range(args.n):
                fh.write(f"{t:3d} | {_fmt_row(exact[t])} | {_fmt_row(rep.consensus_beliefs[t])} | {tv[t]:.2e}\n")
            agree = float(np.mean(exact.argmax(1) == rep.map_sequence))
            fh.write(f"# map agreement {agree:.3f}, max tv {tv.max():.3e}, iterations {rep.iterations_used}, "
                     f"converged {rep.converged}, consensus gap {rep.max_consensus_gap:.2e}\n\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    fusion = _fusion(args)
    agree, positions, gaps, joint_gaps, converged = 0, 0, [], [], 0
    for cl, params in _instances(args):
        exact = enumerate_app(cl, params, args.n)
        rep = iterate(cl, params, fusion, args.n)
        agree += int((exact.argmax(1) == rep.map_sequence).sum())
        positions += args.n
        gaps.append(float(row_tv(rep.consensus_beliefs, exact).max()))
        converged += rep.converged
        if cl.K <= JOINT_MAX_K:
            joint = joint_trellis_app(cl, params, None, args.n)
            joint_gaps.append(float(np.abs(joint - exact).max()))
    lines = [
        f"instances          {args.trials}",
        f"converged          {converged}",
        f"map agreement      {agree / positions:.4f}",
        f"max app tv gap     {max(gaps):.3e}",
        f"median app tv gap  {float(np.median(gaps)):.3e}",
    ]
    if joint_gaps:
        lines.append(f"joint-vs-enum max  {max(joint_gaps):.3e}")
    with _output(args.out) as fh:
        fh.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    _positive(n=args.n, trials=args.trials)
    decoders = _decoders(args.decoder)
    fusion = _fusion(args)
    jobs = _jobs(args)
    if args.rates:
        param_sets = [ChannelParams.uniform(r) for r in args.rates]
    else:
        param_sets = [_params(args)]
    rows = []
    for params in param_sets:
        cfg = ExperimentConfig(K_values=args.k, params=params, trials=args.trials, seed=args.seed,
                               decoders=decoders, N=args.n, fusion=fusion, jobs=jobs)
        rows.extend(run_experiment(cfg))
    with _output(args.out) as fh:
        write_results_to(rows, fh)
    plot_dir = Path(args.emit_plotdata) if args.emit_plotdata else None
    if plot_dir:
        plot_dir.mkdir(parents=True, exist_ok=True)
        write_results(rows, plot_dir / "k_sweep.csv")
    if args.complexity:
        rep = measure_complexity(N=args.n, params=param_sets[0], seed=args.seed, fusion=fusion)
        print(f"# gamma-count exponent over K={rep.K_values[0]}..{rep.K_values[-1]}: {rep.exponent:.3f}",
              file=sys.stderr)
        print(f"# joint edges K=1,2,3: {rep.joint_edges} (growth {', '.join(f'{g:.1f}' for g in rep.joint_growth())})",
              file=sys.stderr)
        if plot_dir:
            with open(plot_dir / "complexity.csv", "w") as fh:
                fh.write("K,gamma_evals,iterations,wall_ms\n")
                for row in zip(rep.K_values, rep.gamma_evals, rep.iterations, rep.wall_ms):
                    fh.write(",".join(f"{v:.6g}" for v in row) + "\n")
    if args.kernels:
        from .perf import format_timings, time_kernels

        print(format_timings(time_kernels(args.n, param_sets[0], seed=args.seed)), file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "decode": cmd_decode,
    "oracle": cmd_oracle,
    "verify": cmd_verify,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ContractError, InstanceTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DecodeCollapse as exc:
        print(f"error: decode collapsed: {exc}", file=sys.stderr)
        return EXIT_COLLAPSE


if __name__ == "__main__":
    sys.exit(main())
