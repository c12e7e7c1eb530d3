"""Offline merging of near-duplicate classes.

Two classes are compared through the steady-state distributions of the
symbol words their chains generate: the distance is a 2^-(r+1)-weighted
sum of l1 gaps between word distributions of length r = 1..max_word_len
(default 1).  Classes closer than a threshold eta are merged single-linkage,
their counts pooled, and the assignment records relabeled to the surviving
class ids.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .classifier import AssignmentRecord, ClassRegistry
from .symbolic import PfsaModel


@dataclass
class DistanceReport:
    pairwise: np.ndarray          # K x K symmetric distances
    eta: float
    merge_sets: list[list[int]]   # partition of class indices, each sorted


def state_chain(model: PfsaModel) -> np.ndarray:
    """Transition matrix of the window-state chain induced by the morph:
    from state m, emitting symbol n moves to state (m * |alphabet| + n) mod |states|."""
    omega = model.morph
    n_states, n_sym = omega.shape
    T = np.zeros((n_states, n_states))
    for m in range(n_states):
        for n in range(n_sym):
            T[m, (m * n_sym + n) % n_states] += omega[m, n]
    return T


def stationary_distribution(model: PfsaModel, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    """Dominant left eigenvector of the state chain via power iteration.

    Falls back to empirical state-visit frequencies if the iteration does
    not converge (reducible or periodic chain)."""
    T = state_chain(model)
    n = T.shape[0]
    p = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        q = p @ T
        q /= q.sum()
        if np.abs(q - p).max() < tol:
            return q
        p = q
    row_mass = model.count_matrix.counts.sum(axis=1).astype(float)
    total = row_mass.sum()
    if total == 0:
        return np.full(n, 1.0 / n)
    return row_mass / total


def word_distribution(model: PfsaModel, r: int) -> np.ndarray:
    """Steady-state probability of each length-r symbol word, ordered by the
    base-|alphabet| code of the word."""
    if r < 1:
        raise ValueError("word length must be >= 1")
    omega = model.morph
    n_states, n_sym = omega.shape
    p = stationary_distribution(model)
    # probs[w] carries, per word prefix w, the state-occupancy vector after
    # emitting w; extending by one symbol multiplies in the morph column and
    # advances the window state.
    layers = {(): p}
    for _ in range(r):
        nxt = {}
        for word, vec in layers.items():
            for n in range(n_sym):
                weighted = vec * omega[:, n]
                out = np.zeros(n_states)
                for m in range(n_states):
                    out[(m * n_sym + n) % n_states] += weighted[m]
                nxt[word + (n,)] = out
        layers = nxt
    dist = np.empty(n_sym**r)
    for word, vec in layers.items():
        code = 0
        for n in word:
            code = code * n_sym + n
        dist[code] = vec.sum()
    return dist


def pfsa_distance(a: PfsaModel, b: PfsaModel, max_word_len: int = 1) -> float:
    """Weighted l1 distance between the two models' steady-state word
    distributions, truncated at ``max_word_len``."""
    if a.morph.shape != b.morph.shape:
        raise ValueError("models must share alphabet and depth")
    total = 0.0
    for r in range(1, max_word_len + 1):
        da = word_distribution(a, r)
        db = word_distribution(b, r)
        total += np.abs(da - db).sum() / 2.0 ** (r + 1)
    return total


def pairwise_distances(registry: ClassRegistry, max_word_len: int = 1) -> np.ndarray:
    """Symmetric matrix of PFSA distances between all registered classes."""
    k = registry.n_classes
    pair = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            d = pfsa_distance(registry.models[i], registry.models[j], max_word_len)
            pair[i, j] = pair[j, i] = d
    return pair


def distance_report(registry: ClassRegistry, eta: float, max_word_len: int = 1) -> DistanceReport:
    """Pairwise distances plus the single-linkage merge partition at eta."""
    k = registry.n_classes
    pair = pairwise_distances(registry, max_word_len)

    # Single-linkage closure of the (distance < eta) relation via union-find.
    parent = list(range(k))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(k):
        for j in range(i + 1, k):
            if pair[i, j] < eta:
                parent[find(i)] = find(j)

    groups: dict[int, list[int]] = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    merge_sets = sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])
    return DistanceReport(pairwise=pair, eta=eta, merge_sets=merge_sets)


def default_eta(n_classes: int) -> float:
    return 1.0 / (2.0 * n_classes)


def adaptive_eta(registry: ClassRegistry, max_word_len: int = 1) -> float:
    """Merge threshold scaled to the observed distances: half the largest
    pairwise distance, capped at ``default_eta``.  Near-duplicate classes
    (typically split-offs of one regime) sit far below the regime-to-regime
    distances, so half the spread separates the two populations without a
    fixed absolute scale."""
    k = registry.n_classes
    cap = default_eta(k)
    if k < 2:
        return cap
    spread = float(pairwise_distances(registry, max_word_len).max())
    if spread <= 0:
        return cap
    return min(cap, spread / 2.0)


def revise(
    registry: ClassRegistry,
    records: list[AssignmentRecord],
    eta: float | None = None,
    max_word_len: int = 1,
) -> tuple[ClassRegistry, list[AssignmentRecord], DistanceReport]:
    """Merge classes closer than eta and relabel records.

    Each merge group's counts are pooled into the group's lowest-index
    class; survivors are re-indexed in first-seen order.  Returns a new
    registry and new records; the inputs are not modified.
    """
    if eta is None:
        eta = adaptive_eta(registry, max_word_len)
    report = distance_report(registry, eta, max_word_len)

    remap = {}
    merged_models = []
    for new_id, group in enumerate(report.merge_sets):
        base = registry.models[group[0]].copy()
        base.class_id = new_id
        for old in group[1:]:
            other = registry.models[old]
            base.count_matrix.counts += other.count_matrix.counts
            base.training_length += other.training_length
            base.epochs_trained += other.epochs_trained
        base._refresh_morph()
        merged_models.append(base)
        for old in group:
            remap[old] = new_id

    new_registry = ClassRegistry(
        models=merged_models,
        last_class=remap[registry.last_class],
        delta=registry.delta,
        history=[type(registry.history[0])(maxlen=registry.delta) for _ in merged_models]
        if registry.history
        else [],
    )
    new_records = [replace(rec, chosen=remap[rec.chosen]) for rec in records]
    return new_registry, new_records, report
