"""Command-line front end.

Exit codes: 0 success, 1 bad input or configuration, 2 protocol failure,
3 privacy audit failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analytics
from .circuit import compile_circuit, parse_expression, required_workers
from .cluster import (
    SystemConfig,
    distribution_audit,
    privacy_certificate,
    run_protocol,
)
from .errors import ConfigError, PolyshareError, ProtocolError
from .field import MERSENNE_61, PrimeField
from .matrix import Matrix
from .rng import derive_rng
from .sharing import ShareBundle, SharingParams, reconstruct, sample_alphas, share

EXIT_OK, EXIT_CONFIG, EXIT_PROTOCOL, EXIT_AUDIT = 0, 1, 2, 3
DEFAULT_TV_THRESHOLD = 0.03
DEFAULT_LEAK_THRESHOLD = 0.1


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("POLYSHARE_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"POLYSHARE_SEED={env!r} is not an integer") from None


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None


def _read_json(path: str):
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None


def _load_matrices(paths: list[str]) -> list[Matrix]:
    out = []
    for p in paths:
        try:
            out.append(Matrix.from_dict(_read_json(p)))
        except ConfigError as e:
            raise ConfigError(f"{p}: {e}") from None
    return out


def _expression_text(args) -> str | None:
    if getattr(args, "expr", None):
        return _read_text(args.expr).strip()
    return getattr(args, "expression", None)


def _write_json(path: str | None, obj) -> None:
    if path:
        Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _format_matrix(m: Matrix) -> str:
    rows = m.tolist()
    width = max(len(str(x)) for r in rows for x in r)
    return "\n".join("  ".join(str(x).rjust(width) for x in r) for r in rows)


def _modulus_of(args, mats: list[Matrix]) -> int:
    if args.modulus is not None:
        return args.modulus
    return mats[0].modulus if mats else MERSENNE_61


# ---------------------------------------------------------------- run


def cmd_run(args) -> int:
    seed = _seed(args)
    mats = _load_matrices(args.input)
    if not mats:
        raise ConfigError("run needs at least one --input matrix")
    text = _expression_text(args)
    if text is None:
        raise ConfigError("run needs --expr FILE or --expression TEXT")
    p = _modulus_of(args, mats)
    for path, m in zip(args.input, mats):
        if m.modulus != p:
            raise ConfigError(f"{path}: modulus {m.modulus} differs from {p}")
    gamma = args.gamma if args.gamma is not None else len(mats)
    m = args.m if args.m is not None else mats[0].rows
    expr = parse_expression(text, p, gamma)
    circuit = compile_circuit(expr, gamma)
    need = required_workers(args.k, args.t, circuit.has_matmul)
    N = args.workers if args.workers is not None else need
    cfg = SystemConfig(gamma, N, args.t, args.k, m, p, seed, tuple(args.alphas) if args.alphas else None)
    res = run_protocol(cfg, circuit, mats)
    report = res.report(cfg)
    report["expression"] = text
    report["predicted_counters"] = analytics.cost_model(args.t, args.k, m, N, circuit, gamma).to_dict()
    _write_json(args.out, report)
    print(_format_matrix(res.output))
    c = res.counters
    print(
        f"N={N} t={args.t} k={args.k} rounds={c.rounds} "
        f"source->worker={c.source_to_worker} worker<->worker={c.worker_to_worker} "
        f"worker->master={c.worker_to_master}"
    )
    return EXIT_OK


# -------------------------------------------------------------- bound


def cmd_bound(args) -> int:
    pairs = [(t, k) for t in args.t for k in args.k]
    if args.table:
        rows = analytics.comparison_rows(pairs)
        fmt = {"text": analytics.rows_to_text, "json": analytics.rows_to_json, "csv": analytics.rows_to_csv}
        text = fmt[args.format](rows)
        print(text, end="" if text.endswith("\n") else "\n")
        return EXIT_OK
    out = [{"t": t, "k": k, "polyshare": analytics.worker_bound(t, k), **analytics.baseline_bounds(t, k)} for t, k in pairs]
    if args.format == "json":
        print(json.dumps(out[0] if len(out) == 1 else out, indent=2))
    elif args.format == "csv":
        print(analytics.rows_to_csv(out), end="")
    else:
        for i, r in enumerate(out):
            if len(out) > 1:
                print(("\n" if i else "") + f"t={r['t']} k={r['k']}")
            print(f"polyshare workers: {r['polyshare']}")
            print(f"job-split multiply: {r['job-split-multiply']}")
            print(f"job-split add: {r['job-split-add']}")
            print(f"linear-only: {r['linear-only']}")
    return EXIT_OK


# -------------------------------------------------------------- audit


def _random_inputs(gamma: int, m: int, p: int, seed: int, which: int) -> list[Matrix]:
    rng = derive_rng(seed, 99, which)
    return [Matrix.random(m, m, p, rng) for _ in range(gamma)]


def cmd_audit(args) -> int:
    seed = _seed(args)
    p = args.modulus if args.modulus is not None else MERSENNE_61
    field = PrimeField(p, seed)
    text = _expression_text(args) or "X1'*X2"
    expr = parse_expression(text, p)
    circuit = compile_circuit(expr, args.gamma)
    gamma = circuit.n_inputs
    need = required_workers(args.k, args.t, circuit.has_matmul)
    N = args.workers if args.workers is not None else need
    alphas = tuple(args.alphas) if args.alphas else sample_alphas(N, args.k, args.t, field, seed)
    if len(alphas) != N:
        raise ConfigError(f"{len(alphas)} evaluation points given for N={N} workers")

    report: dict = {"seed": seed, "expression": text}
    cert = privacy_certificate(args.k, args.t, alphas, field, seed=seed)
    report["certificate"] = cert.to_dict()
    print(f"certificate: {'pass' if cert.passed else 'FAIL'} ({len(cert.results)} coalitions checked)")
    if not cert.passed:
        for S in cert.failures:
            print(f"  failing coalition: {list(S)}")
        _write_json(args.out, report)
        return EXIT_AUDIT

    m = args.m if args.m is not None else args.k
    cfg = SystemConfig(gamma, N, args.t, args.k, m, p, seed, alphas)
    report["config"] = cfg.to_dict()
    size = args.subset_size if args.subset_size is not None else args.t - 1
    tiny = p <= 17 and m <= 2 and args.k <= 2
    failed = False
    if size > args.t - 1 and not args.expect_leak:
        raise ConfigError(f"subset size {size} exceeds t-1 = {args.t - 1}; pass --expect-leak to demonstrate leakage")
    if size == 0 or not tiny:
        note = "empty coalition" if size == 0 else "parameters too large for histograms"
        print(f"distribution audit skipped ({note})")
        report["audit"] = None
    else:
        if args.input:
            inputs_a = _load_matrices(args.input)
            inputs_b = _load_matrices(args.compare) if args.compare else _random_inputs(gamma, m, p, seed, 1)
        else:
            inputs_a = _random_inputs(gamma, m, p, seed, 0)
            inputs_b = _random_inputs(gamma, m, p, seed, 1)
        subset = list(range(size))
        (aud,) = distribution_audit(
            cfg, circuit, inputs_a, inputs_b, [subset], args.trials, seed, allow_beyond_threshold=args.expect_leak
        )
        report["audit"] = aud.to_dict()
        print(
            f"coalition {subset}: max TV {aud.max_tv:.4f} (single {aud.max_tv_single:.4f}, "
            f"pairs {aud.max_tv_pair:.4f}), min chi-square p-value {aud.min_chi2_pvalue:.3g}"
        )
        if args.expect_leak:
            leaked = aud.max_tv >= args.leak_threshold
            report["leak_detected"] = leaked
            print(f"expected leakage {'detected' if leaked else 'NOT detected'} (threshold {args.leak_threshold})")
            failed = not leaked
        else:
            failed = aud.max_tv > args.tv_threshold
            print(f"TV threshold {args.tv_threshold}: {'FAIL' if failed else 'pass'}")
    _write_json(args.out, report)
    return EXIT_AUDIT if failed else EXIT_OK


# -------------------------------------------------------------- bench


def cmd_bench(args) -> int:
    seed = _seed(args)
    p = args.modulus if args.modulus is not None else MERSENNE_61
    text = _expression_text(args) or "X1*X2"
    expr = parse_expression(text, p)
    circuit = compile_circuit(expr, args.gamma)
    gamma = circuit.n_inputs
    rows = []
    for k in args.k:
        for t in args.t:
            for m in args.m:
                if m % k:
                    continue
                N = args.workers if args.workers is not None else required_workers(k, t, circuit.has_matmul)
                cfg = SystemConfig(gamma, N, t, k, m, p, seed)
                mats = _random_inputs(gamma, m, p, seed, 0)
                measured = run_protocol(cfg, circuit, mats).counters
                predicted = analytics.cost_model(t, k, m, N, circuit, gamma)
                rows.append(
                    {
                        "k": k,
                        "t": t,
                        "m": m,
                        "N": N,
                        "rounds": measured.rounds,
                        "src_words": measured.source_to_worker,
                        "ww_measured": measured.worker_to_worker,
                        "ww_predicted": predicted.worker_to_worker,
                        "master_words": measured.worker_to_master,
                        "worker_mults": measured.mults.get("w0", 0),
                        "match": int(measured == predicted),
                    }
                )
    if not rows:
        raise ConfigError("no (k, m) pair in the grid has k dividing m")
    print(analytics.rows_to_text(rows))
    _write_json(args.out, {"expression": text, "seed": seed, "rows": rows})
    return EXIT_OK


# ------------------------------------------------------ share/reconstruct


def cmd_share(args) -> int:
    seed = _seed(args)
    (a,) = _load_matrices([args.input])
    p = a.modulus
    field = PrimeField(p, seed)
    N = args.workers if args.workers is not None else args.k + args.t - 1
    alphas = tuple(args.alphas) if args.alphas else sample_alphas(N, args.k, args.t, field, seed)
    bundle = share(a, args.basis, SharingParams(field, args.t, args.k, alphas), derive_rng(seed, 1, 0), "X1")
    if args.out:
        _write_json(args.out, bundle.to_dict())
    else:
        print(json.dumps(bundle.to_dict()))
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    bundle = ShareBundle.from_dict(_read_json(args.bundle))
    a = reconstruct(bundle, args.workers_subset)
    _write_json(args.out, a.to_dict())
    print(_format_matrix(a))
    return EXIT_OK


# -------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, grid: bool = False) -> None:
    if grid:
        p.add_argument("-t", type=int, nargs="+", default=[2, 3], help="privacy thresholds")
        p.add_argument("-k", type=int, nargs="+", default=[1, 2], help="partition counts")
        p.add_argument("-m", type=int, nargs="+", default=[4], help="matrix sizes")
    else:
        p.add_argument("-t", type=int, required=True, help="privacy threshold")
        p.add_argument("-k", type=int, default=1, help="column blocks per matrix (storage 1/k)")
        p.add_argument("-m", type=int, default=None, help="matrix size (default: from inputs)")
    p.add_argument("--workers", "-N", type=int, default=None, help="worker count (default: minimum required)")
    p.add_argument("--gamma", type=int, default=None, help="number of sources/inputs")
    p.add_argument("--modulus", type=int, default=None, help="prime field modulus")
    p.add_argument("--seed", type=int, default=None, help="run seed (fallback: POLYSHARE_SEED, then 0)")
    p.add_argument("--expr", metavar="FILE", help="expression file")
    p.add_argument("--expression", "-e", metavar="TEXT", help="expression given inline")
    p.add_argument("--out", metavar="FILE", help="write a JSON report here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polyshare", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evaluate a matrix polynomial on secret-shared inputs")
    _common(p)
    p.add_argument("--input", nargs="+", metavar="FILE", default=[], help="input matrices X1, X2, ... (JSON)")
    p.add_argument("--alphas", type=int, nargs="+", help="explicit evaluation points")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bound", help="worker counts for this scheme, baselines and rivals")
    p.add_argument("-t", type=int, nargs="+", required=True)
    p.add_argument("-k", type=int, nargs="+", required=True)
    p.add_argument("--table", action="store_true", help="compare against rival schemes")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("audit", help="privacy certificate and statistical view audit")
    _common(p)
    p.add_argument("--input", nargs="+", metavar="FILE", help="first input tuple (default: random)")
    p.add_argument("--compare", nargs="+", metavar="FILE", help="second input tuple (default: random)")
    p.add_argument("--alphas", type=int, nargs="+", help="explicit evaluation points (zero allowed here)")
    p.add_argument("--subset-size", type=int, default=None, help="coalition size (default t-1)")
    p.add_argument("--trials", type=int, default=50_000, help="protocol runs per input tuple")
    p.add_argument("--tv-threshold", type=float, default=DEFAULT_TV_THRESHOLD)
    p.add_argument("--leak-threshold", type=float, default=DEFAULT_LEAK_THRESHOLD)
    p.add_argument("--expect-leak", action="store_true", help="coalition is beyond threshold; succeed iff a leak shows")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("bench", help="measured vs predicted counters across a parameter grid")
    _common(p, grid=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("share", help="share one matrix and print the bundle")
    p.add_argument("--input", required=True, metavar="FILE")
    p.add_argument("-t", type=int, required=True)
    p.add_argument("-k", type=int, default=1)
    p.add_argument("--basis", "-b", type=int, default=1)
    p.add_argument("--workers", "-N", type=int, default=None)
    p.add_argument("--alphas", type=int, nargs="+")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=cmd_share)

    p = sub.add_parser("reconstruct", help="recover a matrix from a share bundle")
    p.add_argument("--bundle", required=True, metavar="FILE")
    p.add_argument("--workers-subset", type=int, nargs="+", metavar="N", help="use only these workers")
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=cmd_reconstruct)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ProtocolError as e:
        print(f"protocol error: {e}", file=sys.stderr)
        return EXIT_PROTOCOL
    except PolyshareError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
