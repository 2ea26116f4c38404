"""Seeded, reproducible shot sampling and estimator statistics.

Randomness is counter-based: every uniform draw is a pure function of
(root seed, stream id, shot index), so results never depend on evaluation
order, batching, or thread count.  The mixer is splitmix64, evaluated
vectorized on uint64 arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Seed",
    "ShotOutcome",
    "BlockSpec",
    "probability_vector",
    "sample_patterns",
    "estimator_statistics",
    "blocks_expectation",
    "blocks_estimate",
    "shot_uniforms",
    "categorical_cdf",
    "draw_categorical",
    "derive_seed",
]

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)

# probabilities below this are treated as exact zeros before normalization
TINY_PROBABILITY = 1e-300


@dataclass(frozen=True)
class Seed:
    """Root seed for a reproducible run; reduced mod 2**64."""

    root: int

    def __post_init__(self):
        object.__setattr__(self, "root", int(self.root) & 0xFFFFFFFFFFFFFFFF)


def _as_root(seed) -> int:
    if isinstance(seed, Seed):
        return seed.root
    return int(seed) & 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class ShotOutcome:
    """One sampled photon pattern, tagged with its shot index."""

    pattern: tuple[int, ...]
    shot_index: int


def _splitmix64(x: np.ndarray) -> np.ndarray:
    """One splitmix64 finalization round on a uint64 array."""
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK64
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK64
    return z ^ (z >> np.uint64(31))


def shot_uniforms(seed, stream: int, indices) -> np.ndarray:
    """Uniforms in [0, 1) addressed by (seed, stream, shot index).

    ``indices`` may be an int (count, meaning 0..count-1) or an array of
    shot indices.  The draw for a given address is the same no matter how
    the call is batched.
    """
    root = _as_root(seed)
    if np.isscalar(indices):
        idx = np.arange(int(indices), dtype=np.uint64)
    else:
        idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = _splitmix64(np.uint64(root) ^ (_GOLDEN * np.uint64(stream & 0xFFFFFFFFFFFFFFFF)))
        bits = _splitmix64(key ^ (_GOLDEN * idx))
    # top 53 bits -> double in [0, 1)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def derive_seed(seed, label: int) -> int:
    """Child seed for an independent run/stream (e.g. repeated runs)."""
    with np.errstate(over="ignore"):
        out = _splitmix64(np.uint64(_as_root(seed)) ^ (_GOLDEN * np.uint64(label)))
    return int(out)


def probability_vector(state) -> np.ndarray:
    """Born-rule distribution over the truncated pattern basis (row-major).

    Probabilities below TINY_PROBABILITY are clamped to zero before
    normalization to avoid denormal-float pathologies.
    """
    amps = np.asarray(state.amplitudes)
    p = np.abs(amps.ravel()) ** 2
    p[p < TINY_PROBABILITY] = 0.0
    total = p.sum()
    if total <= 0.0:
        raise ValueError("cannot sample from a zero-norm state")
    return p / total


def categorical_cdf(probabilities: np.ndarray) -> np.ndarray:
    """Cumulative table for inverse-CDF sampling; last entry forced to 1."""
    cdf = np.cumsum(probabilities)
    cdf[-1] = 1.0
    return cdf


def draw_categorical(cdf: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Map uniforms to outcome indices via binary search on the table."""
    return np.searchsorted(cdf, uniforms, side="right")


def sample_patterns(state, shots: int, seed) -> list[ShotOutcome]:
    """Draw ``shots`` independent photon patterns from ``state``.

    Deterministic in (state, shots, seed); shot s depends only on the
    address (seed, s).
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = probability_vector(state)
    cdf = categorical_cdf(p)
    u = shot_uniforms(seed, 0, shots)
    flat = draw_categorical(cdf, u)
    shape = tuple(n + 1 for n in state.cutoff.per_mode_max)
    patterns = np.unravel_index(flat, shape)
    return [
        ShotOutcome(tuple(int(axis[s]) for axis in patterns), s)
        for s in range(shots)
    ]


@dataclass(frozen=True)
class BlockSpec:
    """One independent factor of an estimation run.

    ``distributions[i]`` is the flat outcome distribution when ensemble
    component i is prepared; ``weights`` maps outcome index to the shot
    weight contributed by this block.  Blocks are statistically
    independent, so per-shot weights multiply across blocks.
    """

    component_weights: np.ndarray
    distributions: tuple[np.ndarray, ...]
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.component_weights, dtype=np.float64)
        if w.size != len(self.distributions):
            raise ValueError("one distribution per ensemble component required")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("component weights must sum to 1")
        object.__setattr__(self, "component_weights", w)


def blocks_expectation(blocks) -> complex:
    """Exact estimator expectation: product over blocks of the
    component-weighted mean of (distribution . weights)."""
    total = 1.0 + 0.0j
    for block in blocks:
        value = 0.0 + 0.0j
        for cw, dist in zip(block.component_weights, block.distributions):
            value += cw * complex(np.dot(dist, block.weights))
        total *= value
    return total


def blocks_estimate(blocks, shots: int, seed) -> tuple[np.ndarray, int]:
    """Per-shot weights for ``shots`` runs, plus the count of shots whose
    weight was forced to exactly zero by a detector threshold.

    Shot s of block b consumes uniforms addressed by streams (2b, 2b+1),
    so the result is independent of batching and thread count.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    weights = np.ones(shots, dtype=np.complex128)
    for b, block in enumerate(blocks):
        n_comp = len(block.distributions)
        if n_comp == 1:
            comp_idx = np.zeros(shots, dtype=np.int64)
        else:
            comp_cdf = categorical_cdf(block.component_weights)
            comp_idx = draw_categorical(comp_cdf, shot_uniforms(seed, 2 * b, shots))
        u = shot_uniforms(seed, 2 * b + 1, shots)
        out_idx = np.empty(shots, dtype=np.int64)
        for i, dist in enumerate(block.distributions):
            sel = comp_idx == i
            if np.any(sel):
                out_idx[sel] = draw_categorical(categorical_cdf(dist), u[sel])
        weights *= block.weights[out_idx]
    discarded = int(np.count_nonzero(weights == 0))
    return weights, discarded


def shot_dump_csv(outcomes) -> str:
    """Raw shot dump: one row per shot, the index then the comma-joined
    photon pattern."""
    lines = ["shot_index," + ",".join(f"n{k}" for k in range(len(outcomes[0].pattern)))]
    for shot in outcomes:
        lines.append(str(shot.shot_index) + "," + ",".join(str(n) for n in shot.pattern))
    return "\n".join(lines) + "\n"


def estimator_statistics(weights) -> tuple[complex, float]:
    """Sample mean and standard error of a sequence of shot weights.

    The standard error uses the n-1 sample standard deviation, computed on
    real and imaginary parts separately and combined as the norm.  A single
    weight has no dispersion estimate; stderr is reported as NaN.
    """
    w = np.asarray(weights, dtype=np.complex128)
    n = w.size
    if n == 0:
        raise ValueError("no weights")
    mean = complex(w.mean())
    if n == 1:
        return mean, math.nan
    se_re = np.std(w.real, ddof=1) / math.sqrt(n)
    se_im = np.std(w.imag, ddof=1) / math.sqrt(n)
    return mean, float(math.hypot(se_re, se_im))
