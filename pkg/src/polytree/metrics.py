"""Edge-level comparison of a learned CPDAG against the truth."""
from __future__ import annotations

from dataclasses import asdict, dataclass

from .errors import DimensionMismatch, EmptyEstimate, EmptyUnion
from .graphs import Cpdag, _pair


@dataclass(frozen=True)
class EdgeClassification:
    correct: int
    wrong_direction: int
    missing: int
    extra: int
    true_size: int
    est_size: int

    def __post_init__(self):
        if self.correct + self.wrong_direction + self.extra != self.est_size:
            raise ValueError("correct + wrong_direction + extra must equal est_size")
        if self.correct + self.wrong_direction + self.missing != self.true_size:
            raise ValueError("correct + wrong_direction + missing must equal true_size")

    @classmethod
    def from_counts(cls, correct: int, wrong_direction: int, missing: int, extra: int):
        return cls(
            correct,
            wrong_direction,
            missing,
            extra,
            true_size=correct + wrong_direction + missing,
            est_size=correct + wrong_direction + extra,
        )

    def as_dict(self) -> dict:
        return asdict(self)


def _orientation(c: Cpdag) -> dict[tuple[int, int], tuple[int, int] | None]:
    """Map each skeleton pair to its directed edge, or None when undirected."""
    status: dict[tuple[int, int], tuple[int, int] | None] = {e: None for e in c.undirected_edges}
    for e in c.directed_edges:
        status[_pair(*e)] = e
    return status


def classify_edges(truth: Cpdag, est: Cpdag) -> EdgeClassification:
    if truth.p != est.p:
        raise DimensionMismatch(f"p differs: {truth.p} vs {est.p}")
    t, e = _orientation(truth), _orientation(est)
    shared = t.keys() & e.keys()
    correct = sum(1 for pair in shared if t[pair] == e[pair])
    return EdgeClassification(
        correct=correct,
        wrong_direction=len(shared) - correct,
        missing=len(t.keys() - shared),
        extra=len(e.keys() - shared),
        true_size=len(t),
        est_size=len(e),
    )


def fdr_skeleton(ec: EdgeClassification) -> float:
    if ec.est_size == 0:
        raise EmptyEstimate("estimate has no edges")
    return ec.extra / ec.est_size


def jaccard_skeleton(ec: EdgeClassification) -> float:
    union = ec.missing + ec.est_size
    if union == 0:
        raise EmptyUnion("both graphs are empty")
    return (ec.correct + ec.wrong_direction) / union


def fdr_cpdag(ec: EdgeClassification) -> float:
    if ec.est_size == 0:
        raise EmptyEstimate("estimate has no edges")
    return (ec.extra + ec.wrong_direction) / ec.est_size


def jaccard_cpdag(ec: EdgeClassification) -> float:
    union = ec.true_size + ec.est_size - ec.correct
    if union == 0:
        raise EmptyUnion("both graphs are empty")
    return ec.correct / union


def all_metrics(ec: EdgeClassification) -> dict[str, float | None]:
    """The four ratios, with None where a denominator vanishes."""
    out: dict[str, float | None] = {}
    for name, fn in (
        ("fdr_sk", fdr_skeleton),
        ("ji_sk", jaccard_skeleton),
        ("fdr_cpdag", fdr_cpdag),
        ("ji_cpdag", jaccard_cpdag),
    ):
        try:
            out[name] = fn(ec)
        except ZeroDivisionError:
            out[name] = None
    return out
