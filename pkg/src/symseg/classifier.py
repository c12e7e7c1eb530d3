"""Online class discovery over a stream of symbolized epochs.

Per epoch: every existing class is scored with the posterior predictive,
a Chinese-Restaurant-Process weight decides how much mass a hypothetical
new class gets, a stickiness floor biases toward the last assigned class,
and the assignment is sampled from the normalized posterior.  The CRP
weight is adaptive: the classical (new-class-friendly) form is enabled
only when the likelihood of every existing class has dropped faster than
a threshold over a short memory window.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .likelihood import log_predictive
from .symbolic import CountMatrix, PfsaModel, update_model

CONCENTRATION_MODES = ("self-ratio", "raw", "per-symbol", "per-epoch-normalized")
CRP_MODES = ("classical", "adaptive")

# exp() bound keeping concentration scores finite in double precision.
_LOG_SCORE_CLIP = 600.0


@dataclass
class ClassifierConfig:
    epsilon: float = 0.02         # CRP new-class parameter
    kappa: float = 0.6            # stickiness, in (0, 1)
    delta: int = 4                # likelihood-rate memory (epochs)
    nu: float = 0.05              # likelihood-rate threshold, concentration units
    depth: int = 1
    alphabet_size: int = 7
    rng_seed: int = 0
    concentration_mode: str = "self-ratio"
    crp_mode: str = "adaptive"
    argmax_assign: bool = False   # replace posterior sampling with argmax
    # Self-ratio score compensation, in nats.  The epoch's self-evidence is
    # optimistic (the reference model is fit to the very epoch it predicts),
    # so every class gets a flat score_margin bonus; a class trained on T
    # epochs additionally gets maturity_allowance / T, covering the finite-
    # training shortfall of a freshly created class without masking the
    # (much larger) shortfall of a genuinely wrong class.
    score_margin: float = 8.0
    maturity_allowance: float = 16.0
    # A chosen class is not trained on an epoch it scores this many nats
    # below its own recent history: stickiness can force an alien epoch onto
    # the previous class, and absorbing it would make that class a hybrid
    # that permanently explains the foreign regime.  inf disables the guard.
    update_guard_nats: float = 30.0

    def __post_init__(self):
        if not 0.0 < self.kappa < 1.0:
            raise ValueError("kappa must be in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.delta < 1:
            raise ValueError("delta must be >= 1")
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.maturity_allowance < 0:
            raise ValueError("maturity_allowance must be nonnegative")
        if self.score_margin < 0:
            raise ValueError("score_margin must be nonnegative")
        if self.update_guard_nats <= 0:
            raise ValueError("update_guard_nats must be positive")
        if self.concentration_mode not in CONCENTRATION_MODES:
            raise ValueError(f"unknown concentration_mode {self.concentration_mode!r}")
        if self.crp_mode not in CRP_MODES:
            raise ValueError(f"unknown crp_mode {self.crp_mode!r}")


@dataclass
class ClassRegistry:
    models: list[PfsaModel]
    last_class: int
    delta: int
    # One ring buffer of recent concentration-unit scores per class.
    history: list[deque] = field(default_factory=list)

    @property
    def n_classes(self) -> int:
        return len(self.models)


@dataclass
class AssignmentRecord:
    epoch_id: int
    class_scores: np.ndarray      # K concentration-unit likelihoods
    gamma: float
    b_used: int
    adjusted_scores: np.ndarray   # K+1 masses after the CRP split, pre-stickiness
    posterior: np.ndarray         # K+1 probabilities after stickiness + normalization
    chosen: int
    new_class_created: bool


def initialize(first_epoch_counts: CountMatrix, config: ClassifierConfig) -> ClassRegistry:
    """Seed the registry with a single class built from the first epoch."""
    if first_epoch_counts.total == 0:
        raise ValueError("first epoch has no transition counts")
    model = PfsaModel(class_id=0, count_matrix=first_epoch_counts.copy())
    model.training_length = first_epoch_counts.total
    model.epochs_trained = 1
    return ClassRegistry(
        models=[model],
        last_class=0,
        delta=config.delta,
        history=[deque(maxlen=config.delta)],
    )


def concentration_scores(
    log_liks,
    mode: str,
    self_log_lik: float | None = None,
    epochs_trained=None,
    score_margin: float = 0.0,
    maturity_allowance: float = 0.0,
) -> np.ndarray:
    """Convert per-class log likelihoods to nonnegative concentration units.

    The default ``self-ratio`` mode scores each class by its likelihood ratio
    against the epoch's own self-evidence (the likelihood the epoch would get
    from a class trained on the epoch itself).  This cancels the epoch's
    intrinsic entropy, so a well-fitting class scores well above 1 regardless
    of regime complexity or noise level, while an ill-fitting class collapses
    toward 0 and lets the CRP weight open a new class.  A per-class maturity
    bonus of ``maturity_allowance / epochs_trained`` nats compensates the
    finite-training bias of recently created classes.
    """
    if mode == "self-ratio":
        if self_log_lik is None or epochs_trained is None:
            raise ValueError("self-ratio mode needs self_log_lik and epochs_trained")
        logs = np.array([ll.value for ll in log_liks])
        bonus = score_margin + maturity_allowance / np.maximum(
            np.asarray(epochs_trained, dtype=float), 1.0
        )
        return np.exp(np.clip(logs - self_log_lik + bonus, -_LOG_SCORE_CLIP, _LOG_SCORE_CLIP))
    if mode == "raw":
        return np.exp(np.array([ll.value for ll in log_liks]))
    if mode == "per-symbol":
        # Geometric-mean per-symbol likelihood; stays in (0, 1] at any epoch length.
        return np.exp(np.array([ll.per_symbol for ll in log_liks]))
    if mode == "per-epoch-normalized":
        logs = np.array([ll.value for ll in log_liks])
        w = np.exp(logs - logs.max())
        return w / w.sum()
    raise ValueError(f"unknown concentration mode {mode!r}")


def likelihood_rate(registry: ClassRegistry, current_scores, delta: int) -> np.ndarray:
    """Mean drop of each class's score relative to its last ``delta`` epochs.

    Positive values mean the likelihood fell.  Raises if any class has not
    yet accumulated ``delta`` history entries; the caller must then stay on
    the conservative CRP branch.
    """
    current = np.asarray(current_scores, dtype=float)
    rates = np.empty(registry.n_classes)
    for i, hist in enumerate(registry.history):
        if len(hist) < delta:
            raise ValueError(f"class {i} has only {len(hist)} of {delta} history entries")
        rates[i] = np.mean(list(hist)[-delta:]) - current[i]
    return rates


def crp_gamma(scores, epsilon: float, b: int) -> float:
    """New-class weight: epsilon / (sum of scores + b * epsilon)."""
    total = float(np.sum(scores))
    if total < 0:
        raise ValueError("scores must be nonnegative")
    return epsilon / (total + b * epsilon)


def _choose_b(registry: ClassRegistry, scores: np.ndarray, config: ClassifierConfig) -> int:
    if config.crp_mode == "classical":
        return 1
    if any(len(h) < config.delta for h in registry.history):
        return 2
    rates = likelihood_rate(registry, scores, config.delta)
    return 1 if np.all(rates > config.nu) else 2


def _update_allowed(
    registry: ClassRegistry, chosen: int, scores: np.ndarray, config: ClassifierConfig
) -> bool:
    """Quarantine check: train the chosen class only if this epoch's score is
    within ``update_guard_nats`` of the class's recent typical score."""
    if not np.isfinite(config.update_guard_nats):
        return True
    hist = registry.history[chosen]
    if not hist:
        return True
    typical = max(hist)
    current = float(scores[chosen])
    if typical <= 0 or current <= 0:
        return True
    return np.log(typical) - np.log(current) <= config.update_guard_nats


def score_and_assign(
    registry: ClassRegistry,
    epoch_counts: CountMatrix,
    config: ClassifierConfig,
    rng: np.random.Generator,
    epoch_id: int = 0,
) -> AssignmentRecord:
    """Score one epoch against all classes, sample its assignment, and
    update the registry (model update or new class creation) in place."""
    log_liks = [log_predictive(m.count_matrix, epoch_counts) for m in registry.models]
    self_ll = None
    if config.concentration_mode == "self-ratio":
        self_ll = log_predictive(epoch_counts, epoch_counts).value
    scores = concentration_scores(
        log_liks,
        config.concentration_mode,
        self_log_lik=self_ll,
        epochs_trained=[m.epochs_trained for m in registry.models],
        score_margin=config.score_margin,
        maturity_allowance=config.maturity_allowance,
    )
    total = float(scores.sum())

    b = _choose_b(registry, scores, config)
    gamma = crp_gamma(scores, config.epsilon, b)

    # CRP split: new-class mass gamma * total, existing masses scaled by 1 - gamma.
    adjusted = np.empty(len(scores) + 1)
    adjusted[:-1] = (1.0 - gamma) * scores
    adjusted[-1] = gamma * total

    # Stickiness floor on the last assigned class.
    sticky = adjusted.copy()
    floor = config.kappa / (1.0 - config.kappa) * adjusted.sum()
    sticky[registry.last_class] = max(sticky[registry.last_class], floor)

    sticky_total = sticky.sum()
    if sticky_total <= 0:
        # All scores underflowed (possible in raw mode): fall back to the
        # CRP weight alone.
        posterior = np.full(len(sticky), 0.0)
        posterior[-1] = gamma
        posterior[registry.last_class] += 1.0 - gamma
    else:
        posterior = sticky / sticky_total

    if config.argmax_assign:
        chosen = int(np.argmax(posterior))
    else:
        chosen = int(rng.choice(len(posterior), p=posterior))

    new_class = chosen == registry.n_classes
    if new_class:
        model = PfsaModel(class_id=chosen, count_matrix=epoch_counts.copy())
        model.training_length = epoch_counts.total
        model.epochs_trained = 1
        registry.models.append(model)
        registry.history.append(deque(maxlen=config.delta))
    elif _update_allowed(registry, chosen, scores, config):
        update_model(registry.models[chosen], epoch_counts)

    # Record this epoch's scores for every class that was scored.
    for i, s in enumerate(scores):
        registry.history[i].append(float(s))
    registry.last_class = chosen

    return AssignmentRecord(
        epoch_id=epoch_id,
        class_scores=scores,
        gamma=gamma,
        b_used=b,
        adjusted_scores=adjusted,
        posterior=posterior,
        chosen=chosen,
        new_class_created=new_class,
    )


def run_stream(
    epoch_counts: list[CountMatrix], config: ClassifierConfig
) -> tuple[ClassRegistry, list[AssignmentRecord]]:
    """Consume an ordered stream of per-epoch count matrices.

    The first epoch initializes class 0; each later epoch produces one
    :class:`AssignmentRecord`.  Fully deterministic given the config seed.
    """
    if not epoch_counts:
        raise ValueError("empty epoch stream")
    rng = np.random.default_rng(config.rng_seed)
    registry = initialize(epoch_counts[0], config)
    records = []
    for j, counts in enumerate(epoch_counts[1:], start=1):
        records.append(score_and_assign(registry, counts, config, rng, epoch_id=j))
    return registry, records
