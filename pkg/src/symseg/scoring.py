"""Epoch-level scoring of discovered classes against ground-truth regimes.

Discovered class ids are arbitrary, so classes are matched to regimes by
greedy majority vote, largest class first; a class whose majority regime
is already claimed stays unmatched and all of its epochs count as errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ScoreReport:
    epoch_error_pct: float
    discovered_classes: int
    confusion: np.ndarray        # (n_regimes, n_classes) epoch counts
    class_to_regime: dict[int, int]
    wall_time_s: float = 0.0
    assignments: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))


def match_classes(assignments: np.ndarray, labels: np.ndarray) -> dict[int, int]:
    """Greedy majority matching of discovered classes to regime labels."""
    classes, counts = np.unique(assignments, return_counts=True)
    order = classes[np.argsort(-counts, kind="stable")]
    claimed: set[int] = set()
    mapping: dict[int, int] = {}
    for c in order:
        mask = assignments == c
        regs, votes = np.unique(labels[mask], return_counts=True)
        best = int(regs[np.argmax(votes)])
        if best not in claimed:
            mapping[int(c)] = best
            claimed.add(best)
    return mapping


def score_assignments(
    assignments, labels, wall_time_s: float = 0.0
) -> ScoreReport:
    """Error percentage and confusion matrix under greedy class matching."""
    assignments = np.asarray(assignments, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if assignments.shape != labels.shape:
        raise ValueError("assignments and labels must have equal length")
    mapping = match_classes(assignments, labels)
    predicted = np.array([mapping.get(int(c), -1) for c in assignments])
    errors = int(np.sum(predicted != labels))

    n_regimes = int(labels.max()) + 1
    n_classes = int(assignments.max()) + 1
    confusion = np.zeros((n_regimes, n_classes), dtype=np.int64)
    np.add.at(confusion, (labels, assignments), 1)

    return ScoreReport(
        epoch_error_pct=100.0 * errors / len(labels),
        discovered_classes=n_classes,
        confusion=confusion,
        class_to_regime=mapping,
        wall_time_s=wall_time_s,
        assignments=assignments,
    )


def class_transition_counts(assignments) -> np.ndarray:
    """Upper-tier transition count matrix over the class-label sequence."""
    a = np.asarray(assignments, dtype=np.int64)
    k = int(a.max()) + 1
    out = np.zeros((k, k), dtype=np.int64)
    np.add.at(out, (a[:-1], a[1:]), 1)
    return out
