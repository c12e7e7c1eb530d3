"""Ground-truth-labeled non-stationary streams from nonlinear oscillators.

Two regime families are available: the forced Duffing oscillator
(x'' + beta x' + a1 x + lam x^3 = A cos(w t)), whose dissipation parameter
beta selects a pre- (0.1) or post- (0.4) bifurcation attractor, and a
stiff Van der Pol-type oscillator (x'' + 1000 x^2 x' + x = 1000).
Integration is fixed-step RK4; each regime carries its own recording
interval and substep count.  A stream interleaves regimes in random
multi-epoch segments, with optional additive Gaussian noise at a
prescribed linear SNR.  The Duffing regimes resume from a saved state
across their segments; the Van der Pol regime regenerates from rest each
epoch, since its trajectory is an unbounded monotone crawl whose growing
amplitude would otherwise both shrink the stable RK4 step and stretch any
shared amplitude partition without bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

BURN_IN_STEPS = 2000


@dataclass(frozen=True)
class RegimeSpec:
    kind: str                    # "duffing" or "vanderpol"
    beta: float = 0.0            # Duffing dissipation
    alpha1: float = 1.0          # Duffing linear stiffness
    lam: float = 1.0             # Duffing cubic stiffness
    amplitude: float = 22.0      # Duffing forcing amplitude
    omega: float = 5.0           # Duffing forcing frequency, rad/s
    dt: float = 0.1              # recording interval, seconds
    substeps: int = 1            # RK4 substeps per recorded sample
    resume: bool = True          # continue from saved state; else restart per epoch
    burn_in_steps: int = BURN_IN_STEPS  # discarded recorded steps before first use
    name: str = ""


def duffing_pre() -> RegimeSpec:
    return RegimeSpec(kind="duffing", beta=0.1, substeps=10, name="duffing_pre")


def duffing_post() -> RegimeSpec:
    return RegimeSpec(kind="duffing", beta=0.4, substeps=10, name="duffing_post")


def vanderpol() -> RegimeSpec:
    # The x^2 damping coefficient of 1000 makes explicit RK4 unstable once
    # |x| grows past a few units; a 1e-4 s internal step stays stable out to
    # |x| ~ 5, comfortably past the reach of one restarted epoch (10 s from
    # rest ends near x = 3.1).  No burn-in: each epoch is the full rise from
    # rest, which keeps the trajectory bounded and overlapping the partition
    # cells visited by the other regimes.
    return RegimeSpec(
        kind="vanderpol", dt=0.01, substeps=100, resume=False, burn_in_steps=0,
        name="vanderpol",
    )


@dataclass
class LabeledStream:
    samples: np.ndarray          # noisy stream, epochs * epoch_length values
    clean: np.ndarray            # noise-free signal (test instrumentation)
    labels: np.ndarray           # per-epoch ground-truth regime index
    epoch_length: int
    snr: float                   # linear variance ratio; inf means noiseless
    config: dict = field(default_factory=dict)

    @property
    def epochs(self) -> int:
        return len(self.labels)


@njit(cache=True, fastmath=True)
def _rk4_duffing(x, v, t, n_samples, dt, substeps, beta, alpha1, lam, amp, w):
    out = np.empty(n_samples)
    h = dt / substeps
    for i in range(n_samples):
        for _ in range(substeps):
            k1x = v
            k1v = amp * math.cos(w * t) - beta * v - alpha1 * x - lam * x**3
            x2 = x + 0.5 * h * k1x
            v2 = v + 0.5 * h * k1v
            k2x = v2
            k2v = amp * math.cos(w * (t + 0.5 * h)) - beta * v2 - alpha1 * x2 - lam * x2**3
            x3 = x + 0.5 * h * k2x
            v3 = v + 0.5 * h * k2v
            k3x = v3
            k3v = amp * math.cos(w * (t + 0.5 * h)) - beta * v3 - alpha1 * x3 - lam * x3**3
            x4 = x + h * k3x
            v4 = v + h * k3v
            k4x = v4
            k4v = amp * math.cos(w * (t + h)) - beta * v4 - alpha1 * x4 - lam * x4**3
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            t += h
        out[i] = x
    return out, x, v, t


@njit(cache=True, fastmath=True)
def _rk4_vanderpol(x, v, t, n_samples, dt, substeps):
    out = np.empty(n_samples)
    h = dt / substeps
    for i in range(n_samples):
        for _ in range(substeps):
            k1x = v
            k1v = 1000.0 - 1000.0 * x * x * v - x
            x2 = x + 0.5 * h * k1x
            v2 = v + 0.5 * h * k1v
            k2x = v2
            k2v = 1000.0 - 1000.0 * x2 * x2 * v2 - x2
            x3 = x + 0.5 * h * k2x
            v3 = v + 0.5 * h * k2v
            k3x = v3
            k3v = 1000.0 - 1000.0 * x3 * x3 * v3 - x3
            x4 = x + h * k3x
            v4 = v + h * k3v
            k4x = v4
            k4v = 1000.0 - 1000.0 * x4 * x4 * v4 - x4
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            t += h
        out[i] = x
    return out, x, v, t


def integrate_regime(spec: RegimeSpec, state, n_samples: int, dt: float):
    """Advance one regime by ``n_samples`` recorded steps of size ``dt``.

    ``state`` is (x, xdot, t).  Returns (samples, new_state).  Raises if the
    trajectory leaves the finite range (with the offending sample index).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x, v, t = (float(s) for s in state)
    if not (math.isfinite(x) and math.isfinite(v) and math.isfinite(t)):
        raise ValueError("non-finite initial state")
    if spec.kind == "duffing":
        out, x, v, t = _rk4_duffing(
            x, v, t, n_samples, dt, spec.substeps,
            spec.beta, spec.alpha1, spec.lam, spec.amplitude, spec.omega,
        )
    elif spec.kind == "vanderpol":
        out, x, v, t = _rk4_vanderpol(x, v, t, n_samples, dt, spec.substeps)
    else:
        raise ValueError(f"unknown regime kind {spec.kind!r}")
    if not np.all(np.isfinite(out)):
        bad = int(np.argmin(np.isfinite(out)))
        raise FloatingPointError(f"integration diverged at sample {bad}")
    return out, (x, v, t)


def make_stream(
    regimes: list[RegimeSpec],
    epochs: int = 400,
    epoch_length: int = 1000,
    snr: float = math.inf,
    switch_seed: int = 0,
    noise_seed: int = 1,
    mean_segment_epochs: float = 40.0,
) -> LabeledStream:
    """Generate a labeled stream switching among ``regimes``.

    The stream is carved into random-length segments (geometric, mean
    ``mean_segment_epochs``); each segment's regime is drawn uniformly.
    A resuming regime keeps its continuation state between its segments and
    pays a discarded burn-in when first entered; a non-resuming regime is
    regenerated from rest for every epoch, so all of its epochs carry the
    same deterministic trajectory window.  Noise variance is the
    clean-stream variance divided by ``snr``.
    """
    if epochs < 1:
        raise ValueError("need at least one epoch")
    if snr <= 0:
        raise ValueError("snr must be positive")
    rng = np.random.default_rng(switch_seed)

    labels = np.empty(epochs, dtype=np.int64)
    pos = 0
    while pos < epochs:
        seg = int(rng.geometric(1.0 / mean_segment_epochs))
        labels[pos : pos + seg] = rng.integers(len(regimes))
        pos += seg

    states: dict[int, tuple] = {}
    fixed_blocks: dict[int, np.ndarray] = {}
    clean = np.empty(epochs * epoch_length)
    for e in range(epochs):
        r = int(labels[e])
        spec = regimes[r]
        if spec.resume:
            if r not in states:
                _, states[r] = integrate_regime(
                    spec, (0.0, 0.0, 0.0), spec.burn_in_steps, spec.dt
                )
            block, states[r] = integrate_regime(spec, states[r], epoch_length, spec.dt)
        else:
            if r not in fixed_blocks:
                _, state = integrate_regime(
                    spec, (0.0, 0.0, 0.0), spec.burn_in_steps, spec.dt
                )
                fixed_blocks[r], _ = integrate_regime(spec, state, epoch_length, spec.dt)
            block = fixed_blocks[r]
        clean[e * epoch_length : (e + 1) * epoch_length] = block

    if math.isinf(snr):
        samples = clean.copy()
    else:
        sigma = math.sqrt(float(np.var(clean)) / snr)
        noise = np.random.default_rng(noise_seed).normal(0.0, sigma, clean.shape)
        samples = clean + noise

    return LabeledStream(
        samples=samples,
        clean=clean,
        labels=labels,
        epoch_length=epoch_length,
        snr=snr,
        config={
            "regimes": [spec.name or spec.kind for spec in regimes],
            "epochs": epochs,
            "epoch_length": epoch_length,
            "snr": None if math.isinf(snr) else snr,
            "switch_seed": switch_seed,
            "noise_seed": noise_seed,
            "dt": {spec.name or spec.kind: spec.dt for spec in regimes},
            "mean_segment_epochs": mean_segment_epochs,
        },
    )
