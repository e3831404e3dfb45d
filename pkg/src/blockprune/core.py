"""Domain types and metrics for balanced layer partitioning.

A dense layer is a rows x cols weight matrix: rows input nodes, cols
output nodes, one link per (i, j) pair. Pruning keeps only links whose
endpoints share a partition; the surviving links form a binary mask.
This module holds the value types (weights, masks, assignments, prune
results) and the scalar metrics defined on them: link count, retained
ratio, and cumulative absolute weight loss.

All types are immutable after construction (arrays are locked), so they
are safe to share across threads. Indices are 0-based throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def _locked(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Dense trained-layer weights, held in 64-bit floats.

    Weights may arrive from 32-bit storage; they are widened on load so
    magnitude sums are reproducible. Every value must be finite.
    """

    data: np.ndarray

    def __post_init__(self):
        a = np.array(self.data, dtype=np.float64, order="C")
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("weight matrix must be 2-D with positive dimensions")
        if not np.all(np.isfinite(a)):
            raise ValueError("weight matrix contains non-finite values")
        object.__setattr__(self, "data", _locked(a))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def values(self) -> np.ndarray:
        """Row-major flat view of the weights."""
        return self.data.reshape(-1)


@dataclass(frozen=True, eq=False)
class LinkMask:
    """Binary link matrix: 1 = link kept, 0 = link pruned."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
            raise ValueError("mask must be 2-D with positive dimensions")
        if not np.isin(b, (0, 1)).all():
            raise ValueError("mask entries must be 0 or 1")
        object.__setattr__(self, "bits", _locked(np.array(b, dtype=np.uint8, order="C")))

    @property
    def rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cols(self) -> int:
        return self.bits.shape[1]

    @classmethod
    def full(cls, rows: int, cols: int) -> "LinkMask":
        return cls(np.ones((rows, cols), dtype=np.uint8))

    @classmethod
    def empty(cls, rows: int, cols: int) -> "LinkMask":
        return cls(np.zeros((rows, cols), dtype=np.uint8))


@dataclass(frozen=True, eq=False)
class PartitionAssignment:
    """Maps every row and column node to exactly one of p partitions.

    Disjointness is structural: row_of / col_of are total functions, so a
    node cannot belong to two partitions. Balance (group sizes within the
    floor/ceil bounds) is checked by validate_assignment, not enforced
    here, so invalid assignments can be represented and reported on.
    """

    p: int
    row_of: np.ndarray
    col_of: np.ndarray

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("partition count must be >= 1")
        r = np.array(self.row_of, dtype=np.int64)
        c = np.array(self.col_of, dtype=np.int64)
        if r.ndim != 1 or c.ndim != 1:
            raise ValueError("row_of and col_of must be 1-D")
        object.__setattr__(self, "row_of", _locked(r))
        object.__setattr__(self, "col_of", _locked(c))

    @property
    def rows(self) -> int:
        return len(self.row_of)

    @property
    def cols(self) -> int:
        return len(self.col_of)


@dataclass(frozen=True, eq=False)
class PruneResult:
    """A feasible pruning: assignment, mask, and its quality metrics."""

    assignment: PartitionAssignment
    mask: LinkMask
    weight_loss: float
    retained_abs_weight: float
    connectedness: int
    ratio: float
    seed: int
    restarts: int


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of checking an assignment against the balance bounds."""

    ok: bool
    violations: tuple = field(default_factory=tuple)

    @property
    def first_violation(self) -> str | None:
        return self.violations[0] if self.violations else None


def connectedness(mask: LinkMask) -> int:
    """Number of surviving links (set bits) in the mask."""
    return int(mask.bits.sum())


def connectedness_full(rows: int, cols: int) -> int:
    """Link count of the unpruned layer: rows * cols."""
    if rows < 1 or cols < 1:
        raise ValueError("degenerate layer: dimensions must be >= 1")
    return rows * cols


def connectedness_ratio(mask: LinkMask) -> float:
    """Fraction of links surviving: C / C_full, in [0, 1]."""
    return connectedness(mask) / connectedness_full(mask.rows, mask.cols)


def weight_loss(weights: WeightMatrix, mask: LinkMask) -> float:
    """Cumulative absolute weight of pruned links.

    Summation runs over the pruned entries in row-major order, the same
    path for every caller, so equal assignments always produce bit-equal
    losses and exact comparisons between search and oracle are sound.
    """
    if (weights.rows, weights.cols) != (mask.rows, mask.cols):
        raise ValueError("weights and mask dimensions differ")
    pruned = np.abs(weights.data)[mask.bits == 0]
    return float(pruned.sum())


def retained_abs_weight(weights: WeightMatrix, mask: LinkMask) -> float:
    """Cumulative absolute weight of surviving links."""
    if (weights.rows, weights.cols) != (mask.rows, mask.cols):
        raise ValueError("weights and mask dimensions differ")
    kept = np.abs(weights.data)[mask.bits == 1]
    return float(kept.sum())


def partition_capacities(n: int, p: int) -> tuple:
    """Balanced group sizes for n nodes in p partitions, largest first.

    The first n % p entries are ceil(n/p), the rest floor(n/p); only the
    multiset is meaningful, the non-increasing order is a canonical form.
    """
    if p < 1:
        raise ValueError("partition count must be >= 1")
    if p > n:
        raise ValueError(f"more partitions than nodes: p={p} > n={n}")
    hi, lo = math.ceil(n / p), math.floor(n / p)
    k = n % p
    return (hi,) * k + (lo,) * (p - k)


def mask_of(assignment: PartitionAssignment) -> LinkMask:
    """Mask keeping exactly the links whose endpoints share a partition."""
    bits = (assignment.row_of[:, None] == assignment.col_of[None, :])
    return LinkMask(bits.astype(np.uint8))


def _check_side(labels: np.ndarray, n: int, p: int, name: str, out: list):
    if len(labels) != n:
        out.append(f"{name} assignment has length {len(labels)}, expected {n}")
        return
    if len(labels) and (labels.min() < 0 or labels.max() >= p):
        out.append(f"{name} labels must lie in [0, {p})")
        return
    lo, hi = math.floor(n / p), math.ceil(n / p)
    sizes = np.bincount(labels, minlength=p)
    for k in range(p):
        if sizes[k] > hi:
            out.append(
                f"{name} partition {k} holds {sizes[k]} nodes, "
                f"upper bound ceil({n}/{p})={hi} exceeded"
            )
            return
        if sizes[k] < lo:
            out.append(
                f"{name} partition {k} holds {sizes[k]} nodes, "
                f"lower bound floor({n}/{p})={lo} not met"
            )
            return
    want_hi = n % p
    got_hi = int((sizes == hi).sum()) if hi != lo else want_hi
    if got_hi != want_hi:
        out.append(
            f"{name} side has {got_hi} partitions at the upper bound {hi}, "
            f"expected {n} mod {p} = {want_hi}"
        )


def validate_assignment(
    assignment: PartitionAssignment, rows: int, cols: int
) -> ValidationResult:
    """Check balance bounds on both sides; never raises.

    Accepts iff every partition's row and column counts sit within the
    floor/ceil bounds and the number of upper-bound partitions matches
    n mod p on each side. The first violation found is reported first.
    """
    violations: list = []
    if assignment.p < 1:
        violations.append("partition count must be >= 1")
    else:
        _check_side(assignment.row_of, rows, assignment.p, "row", violations)
        _check_side(assignment.col_of, cols, assignment.p, "column", violations)
    return ValidationResult(ok=not violations, violations=tuple(violations))


def result_from_assignment(
    weights: WeightMatrix,
    assignment: PartitionAssignment,
    seed: int,
    restarts: int,
) -> PruneResult:
    """Assemble a PruneResult, computing mask and metrics from scratch."""
    mask = mask_of(assignment)
    return PruneResult(
        assignment=assignment,
        mask=mask,
        weight_loss=weight_loss(weights, mask),
        retained_abs_weight=retained_abs_weight(weights, mask),
        connectedness=connectedness(mask),
        ratio=connectedness_ratio(mask),
        seed=seed,
        restarts=restarts,
    )
