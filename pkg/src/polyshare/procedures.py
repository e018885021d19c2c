"""Share-level procedures: each takes polynomial sharings and returns one.

``add_shares`` and ``scale_shares`` are local. The other three follow the same
pattern: every worker builds a local m x m matrix ``H^(n)`` from its share and
a public weight table, reshares it with fresh masks to all N workers, and each
worker sums what it received. The sum is a fresh sharing of the result.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

from .errors import BadBasis, BasisMismatch, ParamMismatch, TooFewWorkers
from .field import ReconstructionVectors, solve_general_vandermonde
from .matrix import Matrix, block_matrix, hstack, row_slice, sum_matrices
from .rng import WORKER, derive_rng
from .sharing import (
    ShareBundle,
    SharingParams,
    check_basis,
    coefficient_index,
    product_support,
    share_exponents,
    share_polynomial,
)
from .transcript import COMPUTE, RunTranscript, worker_id


def multiply_requirement(k: int, t: int) -> int:
    """Workers needed by :func:`multiply_shares`."""
    return max(len(product_support(k, t)), k + t - 1)


def _same_params(x: ShareBundle, y: ShareBundle) -> None:
    if x.params != y.params:
        raise ParamMismatch("operands were shared under different parameters")
    if x.m != y.m:
        raise ParamMismatch(f"operand sizes differ ({x.m} vs {y.m})")


def _check_workers(params: SharingParams, need: int, what: str) -> None:
    if params.N < need:
        raise TooFewWorkers(f"{what} needs N >= {need} workers, have {params.N}")


def add_shares(x: ShareBundle, y: ShareBundle, label: str = "") -> ShareBundle:
    _same_params(x, y)
    if x.basis != y.basis:
        raise BasisMismatch(f"cannot add sharings in bases {x.basis} and {y.basis}")
    return ShareBundle(x.params, x.basis, tuple(a + b for a, b in zip(x.shares, y.shares)), label)


def scale_shares(x: ShareBundle, q: int, label: str = "", transcript: RunTranscript | None = None) -> ShareBundle:
    if transcript is not None:
        for n, s in enumerate(x.shares):
            transcript.count_mults(worker_id(n), s.rows * s.cols)
    return ShareBundle(x.params, x.basis, tuple(s.scale(q) for s in x.shares), label)


@dataclass(frozen=True)
class ResharePlan:
    """Public weights every worker applies before resharing.

    ``weights[j][n]`` multiplies worker n's local value for target j; workers
    outside the interpolation set get weight 0.
    """

    exponents: tuple[int, ...]
    recon: ReconstructionVectors
    out_basis: int
    N: int

    def weight(self, j: int, n: int) -> int:
        vec = self.recon[j]
        return vec[n] if n < len(vec) else 0

    def weights(self, n: int) -> list[int]:
        return [self.weight(j, n) for j in range(len(self.recon))]


@functools.lru_cache(maxsize=256)
def multiply_plan(params: SharingParams, out_basis: int) -> ResharePlan:
    """Weights ``r^(i,j)`` reading block ``A_i^T B_j`` off the product polynomial.

    Target row ``i + k*j`` of the result holds that block.
    """
    k = params.k
    support = product_support(k, params.t).exponents
    pos = {e: idx for idx, e in enumerate(support)}
    targets = [pos[coefficient_index(i, j, k)] for j in range(k) for i in range(k)]
    recon = solve_general_vandermonde(params.alphas[: len(support)], support, targets, params.field)
    return ResharePlan(support, recon, out_basis, params.N)


@functools.lru_cache(maxsize=256)
def basis_plan(params: SharingParams, basis: int, out_basis: int) -> ResharePlan:
    """Weights ``r^(j)`` recovering data block j of a basis-``basis`` sharing."""
    exps = share_exponents(basis, params.k, params.t)
    recon = solve_general_vandermonde(params.alphas[: len(exps)], exps, range(params.k), params.field)
    return ResharePlan(tuple(exps), recon, out_basis, params.N)


def reshare(
    local: Sequence[Matrix],
    params: SharingParams,
    basis: int,
    transcript: RunTranscript,
    seed: int,
    label: str = "",
) -> ShareBundle:
    """Each worker shares ``local[n]`` in ``basis``; receivers sum their N payloads."""
    rnd = transcript.next_round()
    N = params.N
    inbox: list[list[Matrix]] = [[] for _ in range(N)]
    for n, h in enumerate(local):
        rng = derive_rng(seed, WORKER, n, rnd)
        poly = share_polynomial(h, basis, params.t, params.k, rng)
        payloads = poly.evaluate_many(params.alphas)
        p0 = payloads[0]
        transcript.count_mults(worker_id(n), N * len(poly.coeffs) * p0.rows * p0.cols)
        for dest, msg in enumerate(payloads):
            transcript.send(COMPUTE, rnd, worker_id(n), worker_id(dest), msg)
            inbox[dest].append(msg)
    return ShareBundle(params, basis, tuple(sum_matrices(msgs) for msgs in inbox), label)


def _ensure(transcript: RunTranscript | None, params: SharingParams) -> RunTranscript:
    return transcript if transcript is not None else RunTranscript({"N": params.N, "t": params.t, "k": params.k})


def multiply_shares(
    a: ShareBundle,
    b: ShareBundle,
    out_basis: int = 1,
    transcript: RunTranscript | None = None,
    seed: int | None = None,
    label: str = "",
) -> ShareBundle:
    """Shares of ``A^T B`` from shares of A in basis 1 and B in basis k."""
    _same_params(a, b)
    prm = a.params
    k = prm.k
    if (a.basis, b.basis) != (1, k):
        raise BasisMismatch(f"multiply needs bases (1, {k}), got ({a.basis}, {b.basis})")
    check_basis(out_basis, k)
    _check_workers(prm, multiply_requirement(k, prm.t), "multiplication")
    transcript = _ensure(transcript, prm)
    seed = prm.field.default_seed if seed is None else seed
    plan = multiply_plan(prm, out_basis)
    local = []
    for n, (sa, sb) in enumerate(zip(a.shares, b.shares)):
        h = sa.T @ sb
        w = plan.weights(n)
        grid = [[h.scale(w[i + k * j]) for j in range(k)] for i in range(k)]
        local.append(block_matrix(grid))
        transcript.count_mults(worker_id(n), sa.cols * sa.rows * sb.cols + a.m * a.m)
    return reshare(local, prm, out_basis, transcript, seed, label)


def transpose_shares(
    x: ShareBundle,
    transcript: RunTranscript | None = None,
    seed: int | None = None,
    label: str = "",
) -> ShareBundle:
    """Shares of ``A^T`` in the same basis as the input."""
    prm = x.params
    k = prm.k
    _check_workers(prm, k + prm.t - 1, "transpose")
    transcript = _ensure(transcript, prm)
    seed = prm.field.default_seed if seed is None else seed
    plan = basis_plan(prm, x.basis, x.basis)
    local = []
    for n, s in enumerate(x.shares):
        w = plan.weights(n)
        rows = [row_slice(s, i, k).T for i in range(k)]
        # block (j, i) of the result is A_ij^T
        local.append(block_matrix([[rows[i].scale(w[j]) for i in range(k)] for j in range(k)]))
        transcript.count_mults(worker_id(n), x.m * x.m)
    return reshare(local, prm, x.basis, transcript, seed, label)


def change_basis(
    x: ShareBundle,
    new_basis: int,
    transcript: RunTranscript | None = None,
    seed: int | None = None,
    label: str = "",
) -> ShareBundle:
    """Re-encode a sharing so its data blocks sit at exponents ``new_basis * j``."""
    prm = x.params
    if not isinstance(new_basis, int) or not 1 <= new_basis <= prm.k:
        raise BadBasis(f"target basis {new_basis} outside [1, {prm.k}]")
    _check_workers(prm, prm.k + prm.t - 1, "basis change")
    transcript = _ensure(transcript, prm)
    seed = prm.field.default_seed if seed is None else seed
    plan = basis_plan(prm, x.basis, new_basis)
    local = []
    for n, s in enumerate(x.shares):
        local.append(hstack([s.scale(w) for w in plan.weights(n)]))
        transcript.count_mults(worker_id(n), x.m * x.m)
    return reshare(local, prm, new_basis, transcript, seed, label)
