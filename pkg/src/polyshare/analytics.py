"""Closed-form worker counts and exact cost predictions.

Worker-count formulas for this scheme and its rivals are implemented verbatim
so that golden numbers compare bit for bit. ``cost_model`` predicts the
simulator's counters exactly under its conventions: self-messages are not
traffic, and every reshare goes all-to-all.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter

from .circuit import Circuit
from .transcript import MASTER_ID, TrafficCounters, source_id, worker_id

SCHEMES = ("polyshare", "gasp-big", "gasp-small", "kakar", "chang-tandon", "job-split-bgw", "linear-only")


def worker_bound(t: int, k: int) -> int:
    """Workers sufficient for any function with at least one matrix product."""
    _check(t, k)
    if k < t:
        return 2 * k * k + 2 * t - 3
    return k * k + k * t + t - 2


def baseline_bounds(t: int, k: int) -> dict[str, int]:
    """Job-splitting BGW baselines and the linear-only requirement."""
    _check(t, k)
    return {
        "job-split-multiply": k * k * (2 * t - 1),
        "job-split-add": k * t,
        "linear-only": k + t - 1,
    }


def chang_tandon(t: int, k: int) -> int:
    return (k + t - 1) ** 2


def kakar(t: int, k: int) -> int:
    return k * k + t * k + t - 2


def gasp_small(t: int, k: int) -> int:
    if t == 2 and t <= k:
        return k * k + 2 * k
    if 3 <= t <= k:
        return k * k + 2 * k + (t - 1) ** 2 + t - 4
    if k < t <= k * (k - 1) + 2:
        return k * k + k * t + 2 * t - 5 - (t - 3) // k
    return 2 * k * k + k * t + t - 2 * k - 1


def rival_worker_counts(t: int, k: int) -> dict[str, int]:
    _check(t, k)
    wb = worker_bound(t, k)
    return {
        "polyshare": wb,
        "gasp-big": wb,
        "gasp-small": gasp_small(t, k),
        "kakar": kakar(t, k),
        "chang-tandon": chang_tandon(t, k),
        "job-split-bgw": k * k * (2 * t - 1),
        "linear-only": k + t - 1,
    }


def _check(t: int, k: int) -> None:
    if t < 1 or k < 1:
        raise ValueError(f"t and k must be >= 1 (got t={t}, k={k})")


# -------------------------------------------------------------- tables


def comparison_rows(pairs) -> list[dict[str, int]]:
    return [{"t": t, "k": k, **rival_worker_counts(t, k)} for t, k in pairs]


def rows_to_json(rows: list[dict]) -> str:
    return json.dumps(rows, indent=2)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def rows_to_text(rows: list[dict]) -> str:
    """Aligned plain-text table, one column per key."""
    cols = list(rows[0])
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols}
    lines = ["  ".join(c.rjust(widths[c]) for c in cols)]
    lines.append("  ".join("-" * widths[c] for c in cols))
    for r in rows:
        lines.append("  ".join(str(r[c]).rjust(widths[c]) for c in cols))
    return "\n".join(lines)


# ---------------------------------------------------------- cost model


def reshare_rounds(circuit: Circuit, k: int) -> int:
    """All-to-all rounds the circuit triggers."""
    rounds = 0
    for g in circuit.gates:
        if g.op == "transpose":
            rounds += 1
        elif g.op == "matmul":
            rounds += (0 if g.transpose_left else 1) + (1 if k > 1 else 0) + 1
    return rounds


def cost_model(t: int, k: int, m: int, N: int, circuit: Circuit, gamma: int | None = None) -> TrafficCounters:
    """Predicted counters for one run of ``circuit``.

    Traffic is counted in field elements: one share is m*(m/k) of them.
    Multiplications count share evaluations (N points times k+t-1
    coefficients per element), local block products m^3/k^2, and the m^2
    rescaling every reshare procedure applies before sending.
    """
    gamma = circuit.n_inputs if gamma is None else gamma
    blk = m * (m // k)
    c = k + t - 1
    rounds = reshare_rounds(circuit, k)
    reshare_mults = N * c * blk
    per_worker = 0
    for g in circuit.gates:
        if g.op == "scale":
            per_worker += blk
        elif g.op == "transpose":
            per_worker += m * m + reshare_mults
        elif g.op == "matmul":
            if not g.transpose_left:
                per_worker += m * m + reshare_mults
            if k > 1:
                per_worker += m * m + reshare_mults
            per_worker += m ** 3 // (k * k) + m * m + reshare_mults
    mults: Counter = Counter()
    for g in range(gamma):
        mults[source_id(g)] = N * c * blk
    if per_worker:
        for n in range(N):
            mults[worker_id(n)] = per_worker
    mults[MASTER_ID] = k * c * blk
    return TrafficCounters(
        source_to_worker=gamma * N * blk,
        worker_to_worker=rounds * N * (N - 1) * blk,
        worker_to_master=N * blk,
        local=rounds * N * blk,
        rounds=rounds,
        mults=mults,
    )
