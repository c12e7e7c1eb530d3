"""Posterior-predictive scoring of test epochs against learned classes.

The probability of a test epoch's transition counts under a class is a
product of Dirichlet-multinomial terms, one per window state, with the
training counts acting through a +1-offset Dirichlet prior.  Everything is
computed in the natural-log domain; at epoch lengths of ~1000 the raw
factorial form overflows immediately.

Two backends are provided: exact log-gamma, and a Stirling approximation
(log n! ~ n log n - n).  The Stirling form is also what links likelihood
maximization to KL-divergence minimization, checked by
``verify_kl_equivalence``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .symbolic import CountMatrix, PfsaModel


@dataclass(frozen=True)
class LogLikelihood:
    value: float       # log of the predictive probability, natural log
    per_symbol: float  # value / total test count (0.0 for an empty test)


@dataclass(frozen=True)
class KlEquivalenceReport:
    stirling_argmax: int
    kl_argmin: int
    agree: bool
    stirling_values: np.ndarray
    kl_values: np.ndarray


def _check_dims(train: CountMatrix, test: CountMatrix):
    if train.counts.shape != test.counts.shape:
        raise ValueError("train/test count matrix dimension mismatch")


def _wrap(value: float, mass: int) -> LogLikelihood:
    per = value / mass if mass > 0 else 0.0
    return LogLikelihood(value=float(value), per_symbol=float(per))


def log_predictive(train: CountMatrix, test: CountMatrix) -> LogLikelihood:
    """Exact log predictive probability of ``test`` counts given ``train``."""
    _check_dims(train, test)
    N = train.counts.astype(float)
    Nt = test.counts.astype(float)
    A = train.alphabet_size
    Nm = N.sum(axis=1)
    Ntm = Nt.sum(axis=1)
    row = gammaln(Ntm + 1.0) + gammaln(Nm + A) - gammaln(Ntm + Nm + A)
    cell = gammaln(Nt + N + 1.0) - gammaln(Nt + 1.0) - gammaln(N + 1.0)
    return _wrap(row.sum() + cell.sum(), test.total)


def _stirling_ln_factorial(x: np.ndarray) -> np.ndarray:
    """log(x!) ~ x log x - x, with the 0 log 0 := 0 convention."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos]) - x[pos]
    return out


def log_predictive_stirling(train: CountMatrix, test: CountMatrix) -> LogLikelihood:
    """Stirling-approximate variant of :func:`log_predictive`."""
    _check_dims(train, test)
    N = train.counts.astype(float)
    Nt = test.counts.astype(float)
    A = train.alphabet_size
    Nm = N.sum(axis=1)
    Ntm = Nt.sum(axis=1)
    s = _stirling_ln_factorial
    row = s(Ntm) + s(Nm + A - 1) - s(Ntm + Nm + A - 1)
    cell = s(Nt + N) - s(Nt) - s(N)
    return _wrap(row.sum() + cell.sum(), test.total)


def kl_divergence(test: CountMatrix, model: PfsaModel) -> float:
    """Unnormalized KL divergence between test pseudo-counts (test + 1) and
    the model's morph matrix, summed over all states and symbols."""
    if test.counts.shape != model.morph.shape:
        raise ValueError("test/model dimension mismatch")
    alpha = test.counts + 1.0
    return float(np.sum(alpha * np.log(alpha / model.morph)))


def verify_kl_equivalence(test: CountMatrix, models: list[PfsaModel]) -> KlEquivalenceReport:
    """Compare the Stirling-likelihood winner with the KL-divergence winner."""
    if len(models) < 2:
        raise ValueError("need at least 2 models to compare")
    st = np.array(
        [log_predictive_stirling(m.count_matrix, test).value for m in models]
    )
    kl = np.array([kl_divergence(test, m) for m in models])
    i_st = int(np.argmax(st))
    i_kl = int(np.argmin(kl))
    # Duplicate models can tie; count a tie in either criterion as agreement.
    agree = i_st == i_kl or np.isclose(st[i_st], st[i_kl]) or np.isclose(kl[i_kl], kl[i_st])
    return KlEquivalenceReport(
        stirling_argmax=i_st,
        kl_argmin=i_kl,
        agree=bool(agree),
        stirling_values=st,
        kl_values=kl,
    )
