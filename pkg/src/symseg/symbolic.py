"""Symbolization of scalar signals and Markov-chain count/morph bookkeeping.

A raw signal is quantized against a fixed uniform partition into a symbol
string.  States are sliding windows of the last ``depth`` symbols (base-|alphabet|
encoded), and transition statistics live in a dense state x symbol count
matrix.  A learned class is a count matrix plus its Laplace-smoothed
row-stochastic morph matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Partition:
    """Equal-width binning of the real line into ``alphabet_size`` symbols."""

    bin_edges: np.ndarray  # shape (alphabet_size - 1,), strictly increasing
    alphabet_size: int

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        if self.alphabet_size < 2:
            raise ValueError("alphabet_size must be >= 2")
        if edges.shape != (self.alphabet_size - 1,):
            raise ValueError("need alphabet_size - 1 bin edges")
        if not np.all(np.diff(edges) > 0):
            raise ValueError("bin edges must be strictly increasing")
        object.__setattr__(self, "bin_edges", edges)


@dataclass(frozen=True)
class SymbolString:
    symbols: np.ndarray  # int64 symbol indices
    epoch_id: int = 0

    def __len__(self):
        return len(self.symbols)


@dataclass
class CountMatrix:
    """State-to-symbol transition counts for a depth-D window chain."""

    counts: np.ndarray  # (state_count, alphabet_size) nonnegative ints
    depth: int

    @property
    def state_count(self) -> int:
        return self.counts.shape[0]

    @property
    def alphabet_size(self) -> int:
        return self.counts.shape[1]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def zeros(cls, alphabet_size: int, depth: int) -> "CountMatrix":
        return cls(
            counts=np.zeros((alphabet_size**depth, alphabet_size), dtype=np.int64),
            depth=depth,
        )

    def copy(self) -> "CountMatrix":
        return CountMatrix(counts=self.counts.copy(), depth=self.depth)


@dataclass
class PfsaModel:
    """One discovered class: cumulative counts and the derived morph matrix.

    Morph rows use +1 (Laplace) smoothing: row m is (counts[m] + 1) normalized,
    so every entry is strictly positive and each row sums to 1.
    """

    class_id: int
    count_matrix: CountMatrix
    training_length: int = 0
    epochs_trained: int = 0
    morph: np.ndarray = field(init=False)

    def __post_init__(self):
        self._refresh_morph()

    def _refresh_morph(self):
        c = self.count_matrix.counts
        alpha = c + 1.0
        self.morph = alpha / alpha.sum(axis=1, keepdims=True)

    def copy(self) -> "PfsaModel":
        return PfsaModel(
            class_id=self.class_id,
            count_matrix=self.count_matrix.copy(),
            training_length=self.training_length,
            epochs_trained=self.epochs_trained,
        )


def build_partition(calibration, alphabet_size: int) -> Partition:
    """Equal-width bins spanning [min, max] of the calibration window."""
    x = np.asarray(calibration, dtype=float)
    if x.size == 0:
        raise ValueError("calibration window is empty")
    if not np.all(np.isfinite(x)):
        raise ValueError("calibration contains non-finite values")
    if alphabet_size < 2:
        raise ValueError("alphabet_size must be >= 2")
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        # Degenerate constant window: pad so edges stay strictly increasing.
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, alphabet_size + 1)[1:-1]
    return Partition(bin_edges=edges, alphabet_size=alphabet_size)


def symbolize(samples, p: Partition, epoch_id: int = 0) -> SymbolString:
    """Map samples to bin indices; out-of-range values clamp to extreme bins."""
    x = np.asarray(samples, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("samples contain non-finite values")
    sym = np.searchsorted(p.bin_edges, x, side="right").astype(np.int64)
    return SymbolString(symbols=sym, epoch_id=epoch_id)


def encode_states(symbols: np.ndarray, depth: int, alphabet_size: int) -> np.ndarray:
    """Base-|alphabet| codes of each length-``depth`` window (oldest symbol
    most significant).  Output length is len(symbols) - depth + 1."""
    n = len(symbols)
    if n < depth:
        raise ValueError("string shorter than depth")
    codes = np.zeros(n - depth + 1, dtype=np.int64)
    for d in range(depth):
        codes = codes * alphabet_size + symbols[d : n - depth + 1 + d]
    return codes


def count_transitions(s: SymbolString, depth: int, alphabet_size: int) -> CountMatrix:
    """Tally (window state -> next symbol) transitions over the full string."""
    sym = s.symbols
    if len(sym) < depth + 1:
        raise ValueError(f"need at least depth+1={depth + 1} symbols, got {len(sym)}")
    if sym.max(initial=0) >= alphabet_size or sym.min(initial=0) < 0:
        raise ValueError("symbol index out of alphabet range")
    states = encode_states(sym[:-1], depth, alphabet_size)
    emitted = sym[depth:]
    cm = CountMatrix.zeros(alphabet_size, depth)
    np.add.at(cm.counts, (states, emitted), 1)
    return cm


def update_model(model: PfsaModel, new_counts: CountMatrix) -> PfsaModel:
    """Absorb new epoch counts into the model in place (returns the model)."""
    if model.count_matrix.counts.shape != new_counts.counts.shape:
        raise ValueError("count matrix dimension mismatch")
    model.count_matrix.counts += new_counts.counts
    model.training_length += new_counts.total
    model.epochs_trained += 1
    model._refresh_morph()
    return model
