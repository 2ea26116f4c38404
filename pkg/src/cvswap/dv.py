"""Qudit state vectors and the destructive discrete-variable SWAP test.

Measurement in a SWAP eigenbasis is represented as an explicit basis
change on each qudit pair; no gate decomposition of the basis change is
claimed (efficient circuits for the d > 2 case are not known).  Two bases
are provided: a direct symmetric/antisymmetric construction and one built
from superpositions of qudit Bell-state pairs.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .estimators import EstimatorResult
from .fock import _apply_two_mode_dense
from .sampling import (
    BlockSpec,
    _as_root,
    blocks_estimate,
    categorical_cdf,
    draw_categorical,
    estimator_statistics,
    shot_uniforms,
)

__all__ = [
    "DVState",
    "DVEnsemble",
    "BellOutcome",
    "qudit_bell_state",
    "v_unitary",
    "w_unitary",
    "swap_eigenbasis",
    "dv_swap_estimate",
    "dv_swap_expectation",
    "sample_swap_outcomes",
]


@dataclass(frozen=True)
class DVState:
    """Dense state over a register of qudits with the given local dims."""

    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if any(d < 2 for d in dims):
            raise ValueError("local dimensions must be >= 2")
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        shape = dims
        if amps.shape != shape:
            if amps.size != int(np.prod(dims)):
                raise ValueError("amplitude count does not match dims")
            amps = amps.reshape(shape)
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state norm^2 {norm} deviates from 1 beyond 1e-9")
        amps.flags.writeable = False
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def qudits(self) -> int:
        return len(self.dims)


@dataclass(frozen=True)
class DVEnsemble:
    """Mixed qudit state as a convex ensemble of pure preparations."""

    components: tuple[tuple[float, DVState], ...]

    def __post_init__(self):
        comps = tuple((float(w), s) for w, s in self.components)
        if not comps:
            raise ValueError("ensemble needs at least one component")
        if abs(sum(w for w, _ in comps) - 1.0) > 1e-12:
            raise ValueError("ensemble weights must sum to 1")
        ref = comps[0][1].dims
        if any(s.dims != ref for _, s in comps):
            raise ValueError("ensemble components must share dims")
        object.__setattr__(self, "components", comps)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.components[0][1].dims


def _dv_components(state) -> tuple[tuple[float, DVState], ...]:
    if isinstance(state, DVEnsemble):
        return state.components
    return ((1.0, state),)


@dataclass(frozen=True)
class BellOutcome:
    """Per-pair measurement labels (i_k, j_k), each within its dimension."""

    labels: tuple[tuple[int, int], ...]

    def __post_init__(self):
        labels = tuple((int(i), int(j)) for i, j in self.labels)
        if any(i < 0 or j < 0 for i, j in labels):
            raise ValueError("labels must be non-negative")
        object.__setattr__(self, "labels", labels)


# ---------------------------------------------------------------------------
# bases


def qudit_bell_state(z: int, x: int, d: int) -> DVState:
    """(X(x) tensor Z(z)) applied to the maximally entangled pair, with
    Z(z)|i> = e^{2 pi i z i / d}|i> and X(x)|i> = |i + x mod d>."""
    if not (0 <= z < d and 0 <= x < d):
        raise ValueError("labels must lie in Z_d")
    amps = np.zeros((d, d), dtype=np.complex128)
    for i in range(d):
        amps[(i + x) % d, i] = cmath.exp(2j * math.pi * z * i / d) / math.sqrt(d)
    return DVState((d, d), amps)


def _v_basis(d: int) -> tuple[np.ndarray, np.ndarray]:
    mat = np.zeros((d * d, d * d), dtype=np.complex128)
    eig = np.empty(d * d)
    inv = 1.0 / math.sqrt(2.0)
    for i in range(d):
        for j in range(d):
            col = i * d + j
            if i == j:
                mat[i * d + i, col] = 1.0
            elif i < j:
                mat[i * d + j, col] = inv
                mat[j * d + i, col] = inv
            else:
                mat[i * d + j, col] = inv
                mat[j * d + i, col] = -inv
            eig[col] = -1.0 if i > j else 1.0
    return mat, eig


def v_unitary(d: int) -> np.ndarray:
    """Columns V|i>|j> are SWAP eigenvectors: |i>|i> on the diagonal and
    (|i>|j> +/- |j>|i>)/sqrt(2) off it, with eigenvalue -1 exactly when
    i > j."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    return _v_basis(d)[0]


def _w_basis(d: int) -> tuple[np.ndarray, np.ndarray]:
    cols: list[np.ndarray] = []
    eig: list[float] = []

    def bell(z, x):
        return qudit_bell_state(z, x, d).amplitudes.ravel()

    for z in range(d):
        cols.append(bell(z, 0))
        eig.append(1.0)
    if d % 2 == 0:
        half = d // 2
        for z in range(0, d, 2):
            cols.append(bell(z, half))
            eig.append(1.0)
        for z in range(1, d, 2):
            cols.append(bell(z, half))
            eig.append(-1.0)
    x_max = (d - 1) // 2 if d % 2 else d // 2 - 1
    for sign in (1.0, -1.0):
        for z in range(d):
            for x in range(1, x_max + 1):
                phase = cmath.exp(-2j * math.pi * x * z / d)
                col = (bell(z, x) + sign * phase * bell(z, (d - x) % d)) / math.sqrt(2.0)
                cols.append(col)
                eig.append(sign)
    return np.column_stack(cols), np.asarray(eig)


def w_unitary(d: int) -> np.ndarray:
    """SWAP eigenbasis assembled from qudit Bell states: the x = 0 family,
    the extra x = d/2 families for even d, and +/- superpositions of
    (z, x) with (z, -x) otherwise."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    return _w_basis(d)[0]


def swap_eigenbasis(d: int, basis: str = "v") -> tuple[np.ndarray, np.ndarray]:
    """(matrix, eigenvalues) for the chosen SWAP-diagonalizing basis."""
    if basis == "v":
        return _v_basis(d)
    if basis == "w":
        return _w_basis(d)
    raise ValueError("basis must be 'v' or 'w'")


# ---------------------------------------------------------------------------
# estimator


def _dv_block(prep_a, prep_b, basis: str) -> BlockSpec:
    dims_a = prep_a.dims
    if prep_b.dims != dims_a:
        raise ValueError("the two preparations must have identical dims")
    k = len(dims_a)
    bases = [swap_eigenbasis(d, basis) for d in dims_a]

    comp_w, dists = [], []
    for wa, sa in _dv_components(prep_a):
        for wb, sb in _dv_components(prep_b):
            joint = np.multiply.outer(sa.amplitudes, sb.amplitudes)
            for pair, (mat, _) in enumerate(bases):
                joint = _apply_two_mode_dense(joint, mat.conj().T, pair, k + pair)
            comp_w.append(wa * wb)
            dists.append((np.abs(joint.ravel()) ** 2))

    shape = dims_a + dims_a
    weights = np.ones(shape, dtype=np.float64)
    for pair, (_, eig) in enumerate(bases):
        d = dims_a[pair]
        table = eig.reshape(d, d)
        ax_i, ax_j = pair, k + pair
        grid_i = np.arange(d).reshape((1,) * ax_i + (-1,) + (1,) * (2 * k - ax_i - 1))
        grid_j = np.arange(d).reshape((1,) * ax_j + (-1,) + (1,) * (2 * k - ax_j - 1))
        weights = weights * table[grid_i, grid_j]
    return BlockSpec(np.asarray(comp_w), tuple(dists), weights.ravel().astype(np.complex128))


def dv_swap_estimate(prep_a, prep_b, shots: int, seed, basis: str = "v") -> EstimatorResult:
    """Destructive SWAP-test estimate of tr(rho sigma) for qudit registers.

    Each pair (k-th qudit of A, k-th qudit of B) is measured in the chosen
    SWAP eigenbasis; a shot scores the product of the outcome eigenvalues.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    block = _dv_block(prep_a, prep_b, basis)
    weights, discarded = blocks_estimate([block], shots, seed)
    mean, stderr = estimator_statistics(weights)
    return EstimatorResult(mean, stderr, shots, discarded, _as_root(seed))


def sample_swap_outcomes(prep_a, prep_b, shots: int, seed, basis: str = "v") -> list[BellOutcome]:
    """Raw measurement record: one (i_k, j_k) label pair per qudit pair
    and shot, drawn from the same distribution the estimator consumes."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    block = _dv_block(prep_a, prep_b, basis)
    if len(block.distributions) == 1:
        comp_idx = np.zeros(shots, dtype=np.int64)
    else:
        comp_idx = draw_categorical(
            categorical_cdf(block.component_weights), shot_uniforms(seed, 0, shots)
        )
    u = shot_uniforms(seed, 1, shots)
    flat = np.empty(shots, dtype=np.int64)
    for i, dist in enumerate(block.distributions):
        sel = comp_idx == i
        if np.any(sel):
            flat[sel] = draw_categorical(categorical_cdf(dist), u[sel])
    dims = prep_a.dims
    k = len(dims)
    coords = np.unravel_index(flat, dims + dims)
    outcomes = []
    for s in range(shots):
        labels = tuple((int(coords[p][s]), int(coords[k + p][s])) for p in range(k))
        outcomes.append(BellOutcome(labels))
    return outcomes


def dv_swap_expectation(prep_a, prep_b, basis: str = "v") -> float:
    """Exact estimator expectation (eigenvalue-weighted outcome sum)."""
    block = _dv_block(prep_a, prep_b, basis)
    value = 0.0
    for cw, dist in zip(block.component_weights, block.distributions):
        value += cw * float(np.dot(dist, block.weights.real))
    return value
