"""Dynamic-programming alignment with full backtraces.

`levenshtein_align` gives unit-cost edit distance over tokens (WER/CER);
`nw_align` is Needleman-Wunsch over feature vectors with the NA-masked
normalized distance as substitution cost (FER/TER). Both share one DP core
and the same deterministic tie-break: substitute, then delete, then insert.
"""

from __future__ import annotations

from collections.abc import Callable, Hashable, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from toneval.profiles import FeatureVector


class OpKind(str, Enum):
    """Alignment column type."""

    MATCH = "match"
    SUBSTITUTE = "substitute"
    DELETE = "delete"
    INSERT = "insert"


@dataclass(frozen=True)
class EditOp:
    """One alignment column. Deletes have no hyp index, inserts no ref index."""

    kind: OpKind
    ref_index: int | None
    hyp_index: int | None
    cost: float


@dataclass(frozen=True)
class Alignment:
    """Monotone, complete alignment of a reference and a hypothesis sequence."""

    ops: tuple[EditOp, ...]
    total_cost: float
    ref_len: int
    hyp_len: int

    def count(self, kind: OpKind) -> int:
        return sum(1 for op in self.ops if op.kind == kind)

    @property
    def errors(self) -> int:
        """Number of non-match columns."""
        return sum(1 for op in self.ops if op.kind != OpKind.MATCH)


def _vectors_to_array(vectors: Sequence[FeatureVector]) -> np.ndarray:
    if not vectors:
        return np.zeros((0, 0), dtype=np.int8)
    return np.asarray([v.values for v in vectors], dtype=np.int8)


def masked_distance(v_ref: FeatureVector, v_hyp: FeatureVector) -> float:
    """Share of mismatching dimensions among those non-zero in either vector.

    Two vectors with no active dimension (e.g. two unknown segments) cost 0.
    """
    ref = v_ref.as_array()
    hyp = v_hyp.as_array()
    mask = (ref != 0) | (hyp != 0)
    active = int(np.count_nonzero(mask))
    if active == 0:
        return 0.0
    return int(np.count_nonzero((ref != hyp) & mask)) / active


def masked_distance_matrix(
    ref: Sequence[FeatureVector], hyp: Sequence[FeatureVector]
) -> np.ndarray:
    """Pairwise `masked_distance` for every (ref, hyp) pair, shape (len(ref), len(hyp))."""
    if not ref or not hyp:
        return np.zeros((len(ref), len(hyp)), dtype=np.float64)
    r = _vectors_to_array(ref)[:, None, :]
    h = _vectors_to_array(hyp)[None, :, :]
    mask = (r != 0) | (h != 0)
    active = mask.sum(axis=2)
    mismatched = ((r != h) & mask).sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        costs = np.where(active > 0, mismatched / np.maximum(active, 1), 0.0)
    return costs.astype(np.float64)


def _align(
    ref_len: int,
    hyp_len: int,
    substitution: Callable[[int, int], float],
    indel_cost: float,
) -> Alignment:
    """Fill the full cost matrix and backtrace one optimal path."""
    cost = np.zeros((ref_len + 1, hyp_len + 1), dtype=np.float64)
    for i in range(1, ref_len + 1):
        cost[i, 0] = cost[i - 1, 0] + indel_cost
    for j in range(1, hyp_len + 1):
        cost[0, j] = cost[0, j - 1] + indel_cost

    sub = np.zeros((ref_len + 1, hyp_len + 1), dtype=np.float64)
    for i in range(1, ref_len + 1):
        for j in range(1, hyp_len + 1):
            s = substitution(i - 1, j - 1)
            sub[i, j] = s
            cost[i, j] = min(
                cost[i - 1, j - 1] + s,
                cost[i - 1, j] + indel_cost,
                cost[i, j - 1] + indel_cost,
            )

    # Walk back from the corner; preference order fixes ties deterministically
    ops: list[EditOp] = []
    i, j = ref_len, hyp_len
    while i > 0 or j > 0:
        if i > 0 and j > 0 and cost[i, j] == cost[i - 1, j - 1] + sub[i, j]:
            s = float(sub[i, j])
            kind = OpKind.MATCH if s == 0 else OpKind.SUBSTITUTE
            ops.append(EditOp(kind, i - 1, j - 1, s))
            i, j = i - 1, j - 1
        elif i > 0 and cost[i, j] == cost[i - 1, j] + indel_cost:
            ops.append(EditOp(OpKind.DELETE, i - 1, None, indel_cost))
            i -= 1
        else:
            ops.append(EditOp(OpKind.INSERT, None, j - 1, indel_cost))
            j -= 1
    ops.reverse()

    return Alignment(
        ops=tuple(ops),
        total_cost=sum(op.cost for op in ops),
        ref_len=ref_len,
        hyp_len=hyp_len,
    )


def nw_align(
    ref: Sequence[FeatureVector], hyp: Sequence[FeatureVector], indel_cost: float = 1.0
) -> Alignment:
    """Globally optimal alignment of two feature-vector sequences."""
    if indel_cost <= 0:
        raise ValueError(f"indel_cost must be positive, got {indel_cost}")
    costs = masked_distance_matrix(ref, hyp)
    return _align(len(ref), len(hyp), lambda i, j: float(costs[i, j]), indel_cost)


def levenshtein_align(ref: Sequence[Hashable], hyp: Sequence[Hashable]) -> Alignment:
    """Unit-cost edit alignment; `total_cost` is the classic edit distance."""
    return _align(len(ref), len(hyp), lambda i, j: 0.0 if ref[i] == hyp[j] else 1.0, 1.0)
