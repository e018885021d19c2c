"""In-process simulation of sources, workers and master, plus privacy checks.

``run_protocol`` drives one full run: every source shares its input in basis 1,
the workers evaluate the circuit, and the master interpolates the output from
the workers' final shares. Every payload goes through a :class:`RunTranscript`
so that any coalition's view can be projected out afterwards.
"""

from __future__ import annotations

import functools
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
from scipy import stats

from .circuit import Circuit, Expr, compile_circuit, evaluate_secure, parse_expression, required_workers
from .errors import ConfigError, IndexOutOfRange, IndivisibleDimension, ParametersTooLarge, SubsetTooLarge, TooFewWorkers
from .field import PrimeField, determinant
from .matrix import Matrix
from .rng import SOURCE, derive_rng
from .sharing import (
    ShareBundle,
    SharingParams,
    mask_exponents,
    reconstruct_from,
    sample_alphas,
    share,
    share_exponents,
)
from .transcript import (
    MASTER_ID,
    RECONSTRUCTION,
    SHARING,
    RunTranscript,
    TrafficCounters,
    TranscriptRecord,
    source_id,
    worker_id,
    worker_index,
)

EXHAUSTIVE_LIMIT = 100_000
AUDIT_MAX_MODULUS = 17
AUDIT_MAX_M = 2
AUDIT_MAX_K = 2
AUDIT_MAX_COORDS = 64


@dataclass(frozen=True)
class SystemConfig:
    gamma: int
    N: int
    t: int
    k: int
    m: int
    modulus: int = (1 << 61) - 1
    seed: int = 0
    alphas: tuple[int, ...] | None = None

    def __post_init__(self):
        for name in ("gamma", "N", "t", "k", "m"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.m % self.k:
            raise IndivisibleDimension(f"k={self.k} does not divide m={self.m}")
        if self.N < self.k + self.t - 1:
            raise TooFewWorkers(f"N={self.N} is below k+t-1 = {self.k + self.t - 1}")
        if self.modulus <= self.N:
            raise ConfigError(f"modulus {self.modulus} must exceed N={self.N}")
        PrimeField(self.modulus)
        if self.alphas is not None:
            object.__setattr__(self, "alphas", tuple(int(a) for a in self.alphas))
            if len(self.alphas) != self.N:
                raise ConfigError(f"{len(self.alphas)} evaluation points given for N={self.N} workers")

    @property
    def field(self) -> PrimeField:
        return PrimeField(self.modulus, self.seed)

    def resolve_alphas(self) -> tuple[int, ...]:
        if self.alphas is not None:
            return self.alphas
        return sample_alphas(self.N, self.k, self.t, self.field, self.seed)

    def params(self) -> SharingParams:
        return SharingParams(self.field, self.t, self.k, self.resolve_alphas())

    def with_(self, **kw) -> "SystemConfig":
        d = self.to_dict()
        d.update(kw)
        return SystemConfig(**d)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "N": self.N,
            "t": self.t,
            "k": self.k,
            "m": self.m,
            "modulus": self.modulus,
            "seed": self.seed,
            "alphas": None if self.alphas is None else list(self.alphas),
        }


@dataclass
class RunResult:
    output: Matrix
    transcript: RunTranscript
    params: SharingParams
    circuit: Circuit
    output_bundle: ShareBundle

    @functools.cached_property
    def counters(self) -> TrafficCounters:
        return self.transcript.counters()

    def report(self, config: SystemConfig) -> dict:
        return {
            "output": self.output.to_dict(),
            "counters": self.counters.to_dict(),
            "config": config.to_dict() | {"alphas": list(self.params.alphas)},
            "seed": config.seed,
            "circuit": self.circuit.to_dict(),
        }


def _as_circuit(expr: str | Expr | Circuit, modulus: int, gamma: int) -> Circuit:
    if isinstance(expr, Circuit):
        return expr
    if isinstance(expr, str):
        expr = parse_expression(expr, modulus, gamma)
    return compile_circuit(expr, gamma)


def run_protocol(
    config: SystemConfig,
    expr: str | Expr | Circuit,
    inputs: Sequence[Matrix],
    seed: int | None = None,
    params: SharingParams | None = None,
) -> RunResult:
    """Share, evaluate and reconstruct; returns the master's output and the full log."""
    seed = config.seed if seed is None else seed
    if len(inputs) != config.gamma:
        raise ConfigError(f"expected {config.gamma} input matrices, got {len(inputs)}")
    for g, x in enumerate(inputs):
        if x.shape != (config.m, config.m):
            raise ConfigError(f"input X{g + 1} is {x.rows}x{x.cols}, expected {config.m}x{config.m}")
        if x.modulus != config.modulus:
            raise ConfigError(f"input X{g + 1} uses modulus {x.modulus}, expected {config.modulus}")
    circuit = _as_circuit(expr, config.modulus, config.gamma)
    need = required_workers(config.k, config.t, circuit.has_matmul)
    if config.N < need:
        raise TooFewWorkers(
            f"N={config.N} workers is below the required {need} for k={config.k}, t={config.t} "
            f"(min{{2k^2+2t-3, k^2+kt+t-2}} when the function multiplies matrices, else k+t-1)"
        )
    prm = params if params is not None else config.params()
    blk = config.m * (config.m // config.k)
    c = config.k + config.t - 1
    tr = RunTranscript({"N": config.N, "t": config.t, "k": config.k, "m": config.m, "gamma": config.gamma})

    bundles = []
    for g, x in enumerate(inputs):
        b = share(x, 1, prm, derive_rng(seed, SOURCE, g), label=f"X{g + 1}")
        tr.count_mults(source_id(g), config.N * c * blk)
        for n, s in enumerate(b.shares):
            tr.send(SHARING, 0, source_id(g), worker_id(n), s)
        bundles.append(b)

    out = evaluate_secure(circuit, bundles, tr, seed)

    rnd = tr.next_round()
    for n, s in enumerate(out.shares):
        tr.send(RECONSTRUCTION, rnd, worker_id(n), MASTER_ID, s)
    y = reconstruct_from(list(out.shares), prm.alphas, out.basis, prm.t, prm.k, prm.field)
    tr.count_mults(MASTER_ID, config.k * c * blk)
    return RunResult(y, tr, prm, circuit, out)


# ------------------------------------------------------------ adversary


@dataclass(frozen=True)
class AdversaryView:
    subset: tuple[int, ...]
    records: tuple[TranscriptRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def vector(self) -> list[int]:
        """All observed field elements in canonical record order."""
        out: list[int] = []
        for r in self.records:
            out.extend(r.payload.flat())
        return out


def extract_view(
    transcript: RunTranscript,
    subset: Sequence[int],
    t: int | None = None,
    allow_beyond_threshold: bool = False,
) -> AdversaryView:
    """Initial shares and every message received by the workers in ``subset``.

    Coalitions larger than t-1 are refused unless ``allow_beyond_threshold``.
    """
    t = transcript.meta.get("t") if t is None else t
    S = tuple(sorted(set(int(n) for n in subset)))
    N = transcript.meta.get("N")
    if N is not None and any(not 0 <= n < N for n in S):
        raise IndexOutOfRange(f"worker subset {S} outside [0, {N})")
    if t is not None and len(S) > t - 1 and not allow_beyond_threshold:
        raise SubsetTooLarge(f"coalition of {len(S)} exceeds the privacy threshold t-1 = {t - 1}")
    members = set(S)
    recs = tuple(
        r for r in transcript.records if r.phase != RECONSTRUCTION and worker_index(r.receiver) in members
    )
    return AdversaryView(S, recs)


@dataclass
class CertificateReport:
    k: int
    t: int
    exhaustive: bool
    results: list[tuple[tuple[int, ...], bool]]

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.results)

    @property
    def failures(self) -> list[tuple[int, ...]]:
        return [s for s, ok in self.results if not ok]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "exhaustive": self.exhaustive,
            "checked": len(self.results),
            "failures": [list(s) for s in self.failures],
        }


def privacy_certificate(
    k: int,
    t: int,
    alphas: Sequence[int],
    field: PrimeField,
    limit: int = EXHAUSTIVE_LIMIT,
    samples: int = 10_000,
    seed: int = 0,
) -> CertificateReport:
    """Check invertibility of ``[alpha_i ** (k^2 + j)]`` for every coalition of size t-1.

    Enumerates all C(N, t-1) coalitions when that is at most ``limit``,
    otherwise checks ``samples`` random ones.
    """
    N = len(alphas)
    size = t - 1
    exps = mask_exponents(k, t)
    total = math.comb(N, size)
    exhaustive = total <= limit
    if exhaustive:
        subsets = itertools.combinations(range(N), size)
    else:
        rng = np.random.default_rng(seed)
        subsets = (tuple(sorted(rng.choice(N, size, replace=False).tolist())) for _ in range(samples))
    p = field.modulus
    results = []
    for S in subsets:
        rows = [[pow(alphas[i], e, p) for e in exps] for i in S]
        ok = determinant(rows, field) != 0 if size else True
        results.append((tuple(S), ok))
    return CertificateReport(k, t, exhaustive, results)


def output_support(result: RunResult) -> list[int]:
    """Nonzero exponents of the output polynomial, which the master can see."""
    from .sharing import bundle_support

    return bundle_support(result.output_bundle)


def expected_output_support(k: int, t: int, basis: int = 1) -> list[int]:
    return sorted(share_exponents(basis, k, t))


# ---------------------------------------------------------------- audit


@dataclass
class AuditReport:
    subset: tuple[int, ...]
    trials: int
    coordinates: int
    tv_single: list[float]
    tv_pairs: dict[tuple[int, int], float]
    chi2: list[tuple[float, float]]  # (statistic, p-value) per coordinate, pooled over both tuples

    @property
    def max_tv_single(self) -> float:
        return max(self.tv_single, default=0.0)

    @property
    def max_tv_pair(self) -> float:
        return max(self.tv_pairs.values(), default=0.0)

    @property
    def max_tv(self) -> float:
        return max(self.max_tv_single, self.max_tv_pair)

    @property
    def min_chi2_pvalue(self) -> float:
        return min((pv for _, pv in self.chi2), default=1.0)

    def to_dict(self) -> dict:
        return {
            "subset": list(self.subset),
            "trials": self.trials,
            "coordinates": self.coordinates,
            "max_tv": self.max_tv,
            "max_tv_single": self.max_tv_single,
            "max_tv_pair": self.max_tv_pair,
            "tv_single": self.tv_single,
            "min_chi2_pvalue": self.min_chi2_pvalue,
            "chi2": [list(c) for c in self.chi2],
        }


def _tv(h1: np.ndarray, h2: np.ndarray) -> float:
    return 0.5 * float(np.abs(h1 / h1.sum() - h2 / h2.sum()).sum())


def _histogram(col: np.ndarray, bins: int) -> np.ndarray:
    return np.bincount(col, minlength=bins).astype(float)


def _check_audit_scale(config: SystemConfig) -> None:
    if config.modulus > AUDIT_MAX_MODULUS or config.m > AUDIT_MAX_M or config.k > AUDIT_MAX_K:
        raise ParametersTooLarge(
            f"audit needs p <= {AUDIT_MAX_MODULUS}, m <= {AUDIT_MAX_M}, k <= {AUDIT_MAX_K} "
            f"(got p={config.modulus}, m={config.m}, k={config.k})"
        )


def trial_seed(seed: int, which: int, trial: int) -> int:
    state = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, which, trial]).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def collect_views(
    config: SystemConfig,
    expr: str | Expr | Circuit,
    inputs: Sequence[Matrix],
    subsets: Sequence[Sequence[int]],
    trials: int,
    seed: int,
    which: int,
    params: SharingParams,
) -> list[np.ndarray]:
    """One (trials x coordinates) array of view samples per coalition."""
    circuit = _as_circuit(expr, config.modulus, config.gamma)
    rows: list[list[list[int]]] = [[] for _ in subsets]
    for i in range(trials):
        res = run_protocol(config, circuit, inputs, seed=trial_seed(seed, which, i), params=params)
        for j, S in enumerate(subsets):
            rows[j].append(extract_view(res.transcript, S, allow_beyond_threshold=True).vector())
    return [np.array(r, dtype=np.int64).reshape(trials, -1) for r in rows]


def compare_views(subset: Sequence[int], va: np.ndarray, vb: np.ndarray, p: int) -> AuditReport:
    trials, d = va.shape
    if d > AUDIT_MAX_COORDS:
        raise ParametersTooLarge(f"view has {d} coordinates, cap is {AUDIT_MAX_COORDS}")
    tv_single = []
    chi2 = []
    for c in range(d):
        ha, hb = _histogram(va[:, c], p), _histogram(vb[:, c], p)
        tv_single.append(_tv(ha, hb))
        res = stats.chisquare(ha + hb)
        chi2.append((float(res.statistic), float(res.pvalue)))
    tv_pairs = {}
    for c1, c2 in itertools.combinations(range(d), 2):
        ha = _histogram(va[:, c1] * p + va[:, c2], p * p)
        hb = _histogram(vb[:, c1] * p + vb[:, c2], p * p)
        tv_pairs[(c1, c2)] = _tv(ha, hb)
    return AuditReport(tuple(subset), trials, d, tv_single, tv_pairs, chi2)


def distribution_audit(
    config: SystemConfig,
    expr: str | Expr | Circuit,
    inputs_a: Sequence[Matrix],
    inputs_b: Sequence[Matrix],
    subsets: Sequence[Sequence[int]],
    trials: int,
    seed: int | None = None,
    allow_beyond_threshold: bool = False,
) -> list[AuditReport]:
    """Compare coalition views under two input tuples over ``trials`` fresh-mask runs each.

    Reports total-variation distance of every single coordinate and every
    coordinate pair, and a chi-square uniformity test per coordinate. The
    evaluation points stay fixed across trials; only the masks change.
    """
    _check_audit_scale(config)
    seed = config.seed if seed is None else seed
    for S in subsets:
        if len(S) > config.t - 1 and not allow_beyond_threshold:
            raise SubsetTooLarge(f"coalition of {len(S)} exceeds the privacy threshold t-1 = {config.t - 1}")
    subsets = [tuple(sorted(S)) for S in subsets if len(S)]
    if not subsets:
        return []
    params = config.params()
    va = collect_views(config, expr, inputs_a, subsets, trials, seed, 0, params)
    vb = collect_views(config, expr, inputs_b, subsets, trials, seed, 1, params)
    return [compare_views(S, a, b, config.modulus) for S, a, b in zip(subsets, va, vb)]
