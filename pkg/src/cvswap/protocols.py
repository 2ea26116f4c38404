"""Composite overlap protocols built on the pairwise SWAP-test estimator.

The PERM test measures in the eigenbasis of the cyclic mode permutation
through a discrete-Fourier mode mixer compiled to the rectangular mesh;
the two-copy test runs parallel SWAP tests against a register-relabeled
copy; the compiling cost evaluates fidelity terms for a fixed circuit
pair; and the hybrid test combines a qubit Bell measurement with the CV
photon-parity measurement.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import estimators as est
from . import fock
from .dv import qudit_bell_state
from .estimators import EstimatorResult
from .fock import FockState, MixedEnsemble, components_of
from .sampling import BlockSpec, _as_root, blocks_estimate, derive_seed, estimator_statistics

__all__ = [
    "PermOutcomeWeight",
    "HybridOutcome",
    "perm_weight",
    "perm_test",
    "perm_expectation",
    "two_copy_test",
    "two_copy_expectation",
    "compile_cost",
    "compile_cost_expectation",
    "hybrid_swap_estimate",
    "hybrid_swap_expectation",
]


def perm_weight(pattern, n_registers: int) -> complex:
    """prod_j e^{2 pi i j n_j / L} for one photon pattern."""
    counts = pattern.counts if isinstance(pattern, fock.PhotonPattern) else tuple(pattern)
    total = sum(j * n for j, n in enumerate(counts))
    return cmath.exp(2j * math.pi * total / n_registers)


@dataclass(frozen=True)
class PermOutcomeWeight:
    """A PERM-test outcome with its unit-modulus estimator weight."""

    pattern: fock.PhotonPattern
    weight: complex

    def __post_init__(self):
        if abs(abs(self.weight) - 1.0) > 1e-12:
            raise ValueError("PERM weights must have unit modulus")

    @classmethod
    def from_pattern(cls, pattern, n_registers: int) -> "PermOutcomeWeight":
        pat = pattern if isinstance(pattern, fock.PhotonPattern) else fock.PhotonPattern(tuple(pattern))
        return cls(pat, perm_weight(pat, n_registers))


@dataclass(frozen=True)
class HybridOutcome:
    """Joint qubit Bell outcome and CV photon pattern for one shot."""

    bell: tuple[int, int]
    photons: fock.PhotonPattern

    def __post_init__(self):
        i, j = (int(v) for v in self.bell)
        if not (0 <= i <= 1 and 0 <= j <= 1):
            raise ValueError("bell labels must be bits")
        object.__setattr__(self, "bell", (i, j))


# ---------------------------------------------------------------------------
# PERM test


def _check_perm_inputs(states) -> tuple[int, int]:
    states = list(states)
    if len(states) < 2:
        raise ValueError("PERM test needs at least two registers")
    caps = set()
    for s in states:
        if s.modes != 1:
            raise ValueError("PERM test inputs must be single-mode")
        caps.add(s.cutoff.per_mode_max[0])
    if len(caps) != 1:
        raise ValueError("PERM test inputs must share a common cutoff")
    return len(states), caps.pop()


def dft_matrix(n: int) -> np.ndarray:
    """Single-particle mixer F[l, j] = e^{2 pi i l j / n} / sqrt(n)."""
    idx = np.arange(n)
    return np.exp(2j * math.pi * np.outer(idx, idx) / n) / math.sqrt(n)


def _perm_block(states) -> BlockSpec:
    n, cap = _check_perm_inputs(states)
    total = n * cap
    caps = (total,) * n
    shape = tuple(c + 1 for c in caps)
    est._guard_elements(shape)
    gates = fock.invert_circuit(fock.rectangular_decompose(dft_matrix(n)))

    comp_w, dists = [], []
    combos = [(1.0, [])]
    for s in states:
        combos = [(w * cw, parts + [cs]) for w, parts in combos for cw, cs in components_of(s)]
    for w, parts in combos:
        joint = parts[0]
        for p in parts[1:]:
            joint = fock.tensor(joint, p)
        state = fock.apply_circuit(fock.pad(joint, caps), gates)
        p = np.abs(state.amplitudes.ravel()) ** 2
        comp_w.append(w)
        dists.append(p / p.sum())

    counts = np.indices(shape).reshape(n, -1)
    phases = (np.arange(n)[:, None] * counts).sum(axis=0)
    weights = np.exp(2j * math.pi * phases / n)
    return BlockSpec(np.asarray(comp_w), tuple(dists), weights)


def perm_test(states, shots: int, seed) -> EstimatorResult:
    """Estimate tr(rho^(0) ... rho^(L-1)) by measuring the DFT-mixed
    registers and weighting shots by prod_j e^{2 pi i j n_j / L}.

    The mixer is applied through its rectangular decomposition on a
    working space padded to the joint photon capacity, so the pattern
    distribution is exact.  L = 2 runs the CV SWAP path directly (the
    weights reduce to (-1)^n there).
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    states = list(states)
    n, cap = _check_perm_inputs(states)
    if n == 2:
        return est.cv_swap_estimate(states[0], states[1], cap, shots, seed)
    block = _perm_block(states)
    weights, discarded = blocks_estimate([block], shots, seed)
    mean, stderr = estimator_statistics(weights)
    return EstimatorResult(mean, stderr, shots, discarded, _as_root(seed))


def perm_expectation(states) -> complex:
    """Exact PERM-test expectation (no sampling)."""
    states = list(states)
    n, cap = _check_perm_inputs(states)
    if n == 2:
        return complex(est.swap2m_expectation(_pair_joint(states[0], states[1]), cap))
    block = _perm_block(states)
    value = 0.0 + 0.0j
    for cw, dist in zip(block.component_weights, block.distributions):
        value += cw * complex(np.dot(dist, block.weights))
    return value


def _pair_joint(state_a, state_b):
    comps = []
    for wa, sa in components_of(state_a):
        for wb, sb in components_of(state_b):
            comps.append((wa * wb, fock.tensor(sa, sb)))
    if len(comps) == 1:
        return comps[0][1]
    return MixedEnsemble(tuple(comps))


# ---------------------------------------------------------------------------
# two-copy test


def _split_copies(purification: FockState) -> int:
    if purification.modes % 2 != 0:
        raise ValueError("purification must carry mode pairs A_j B_j")
    n = purification.modes // 2
    if n < 2:
        raise ValueError("two-copy test needs at least two copies")
    return n


def _perm_relabel(state: FockState, n: int) -> FockState:
    """Cyclic left shift of the A registers (axes 0, 2, ..., 2n-2),
    equivalent to the nearest-neighbor SWAP chain applied as gates."""
    axes = list(range(state.modes))
    for j in range(n):
        axes[2 * j] = 2 * ((j + 1) % n)
    amps = np.transpose(state.amplitudes, axes)
    caps = tuple(state.cutoff.per_mode_max[ax] for ax in axes)
    return FockState(fock.CutoffSpec(caps), amps)


def two_copy_test(purification: FockState, shots: int, seed, m_per_pair=None) -> EstimatorResult:
    """Parallel SWAP tests between a purified register stack and its
    cyclically relabeled copy; expectation equals (tr rho^n)^2.

    The permutation on the second copy is a register relabeling, never a
    gate.  ``purification`` holds the n copies interleaved as
    A_1 B_1 ... A_n B_n.
    """
    n = _split_copies(purification)
    relabeled = _perm_relabel(purification, n)
    pairs = [(j, 2 * n + j) for j in range(2 * n)]
    return est.parity_overlap_estimate([purification, relabeled], pairs, m_per_pair, shots, seed)


def two_copy_expectation(purification: FockState, m_per_pair=None) -> float:
    """Exact two-copy expectation via the factorized overlap contraction.

    With u = Psi . conj(PERM Psi') elementwise, the expectation is
    sum_{a,b} u_a conj(u_b) prod_p theta_p(a_p, b_p) where theta_p masks
    pair totals above the detector threshold; without thresholds this is
    |<Psi|PERM Psi>|^2.
    """
    n = _split_copies(purification)
    relabeled = _perm_relabel(purification, n)
    thresholds = est._normalize_thresholds(m_per_pair, 2 * n)
    u = purification.amplitudes * np.conj(relabeled.amplitudes)
    norm = purification.norm_sq * relabeled.norm_sq
    if all(t is None for t in thresholds):
        value = abs(u.sum()) ** 2 / norm
        return float(value)
    kernel = u
    for ax, thr in enumerate(thresholds):
        d = purification.cutoff.shape[ax]
        if thr is None:
            theta = np.ones((d, d))
        else:
            grid = np.add.outer(np.arange(d), np.arange(d))
            theta = (grid <= 2 * thr).astype(float)
        kernel = np.tensordot(kernel, theta, axes=([0], [0]))
    value = complex(np.vdot(u, kernel)) / norm
    return float(value.real)


# ---------------------------------------------------------------------------
# variational-compiling cost


def _check_compile_circuit(gates, label: str) -> list[fock.GateSpec]:
    gates = list(gates)
    for g in gates:
        if isinstance(g, (fock.Displacement, fock.Squeeze, fock.PhaseRotation)):
            if g.mode != 0:
                raise ValueError(f"{label} circuit must act on register A only (mode 0)")
        else:
            raise ValueError(f"{label} circuit must act on register A only (mode 0)")
    return gates


def _map_circuit(state, gates):
    comps = tuple(
        (w, fock.apply_circuit(s, gates)) for w, s in components_of(state)
    )
    if len(comps) == 1:
        return comps[0][1]
    return MixedEnsemble(comps)


def _compile_term_groups(psi, u_gates, v_gates):
    if psi.modes != 2:
        raise ValueError("training states live on two modes (A, R)")
    prepared_u = _map_circuit(psi, u_gates)
    prepared_v = _map_circuit(psi, v_gates)
    return est._group_factors([prepared_u, prepared_v], [(0, 2), (1, 3)], [None, None])


def compile_cost(training, u_gates, v_gates, shots_per_term: int, seed,
                 m_totals=None) -> float:
    """1 - (1/K) sum_j of the estimated fidelity |<psi_j|V^dag U|psi_j>|^2.

    Each term prepares U|psi_j> beside V|psi_j> and runs the parallel
    SWAP test on the (A, A') and (R, R') pairs with derived seeds.  An
    optional per-term threshold applies the detector condition to the
    four-mode total photon count.
    """
    training = list(training)
    if not training:
        raise ValueError("training set is empty")
    u_gates = _check_compile_circuit(u_gates, "U")
    v_gates = _check_compile_circuit(v_gates, "V")
    totals = list(m_totals) if m_totals is not None else [None] * len(training)
    if len(totals) != len(training):
        raise ValueError("one total threshold per training state required")
    acc = 0.0
    for j, psi in enumerate(training):
        groups = _compile_term_groups(psi, u_gates, v_gates)
        result = est.run_parity_blocks(
            groups, [totals[j]] * len(groups), shots_per_term, derive_seed(seed, j)
        )
        acc += result.mean.real
    return 1.0 - acc / len(training)


def compile_cost_expectation(training, u_gates, v_gates, m_totals=None) -> float:
    """Exact-expectation counterpart of ``compile_cost``."""
    training = list(training)
    if not training:
        raise ValueError("training set is empty")
    u_gates = _check_compile_circuit(u_gates, "U")
    v_gates = _check_compile_circuit(v_gates, "V")
    totals = list(m_totals) if m_totals is not None else [None] * len(training)
    acc = 0.0
    for j, psi in enumerate(training):
        groups = _compile_term_groups(psi, u_gates, v_gates)
        term = 1.0
        for g in groups:
            term *= est._group_expectation(g, totals[j])
        acc += term
    return 1.0 - acc / len(training)


# ---------------------------------------------------------------------------
# hybrid DV-CV SWAP test


def _check_hybrid(state, name: str) -> None:
    if state.modes != 2 or state.cutoff.per_mode_max[0] != 1:
        raise ValueError(f"{name} must be qubit (cutoff 1) tensor one CV mode")


def _bell_change() -> np.ndarray:
    cols = [qudit_bell_state(z, x, 2).amplitudes.ravel() for z in range(2) for x in range(2)]
    return np.column_stack(cols)


def _hybrid_block(state_a, state_b, m: int) -> BlockSpec:
    _check_hybrid(state_a, "state_a")
    _check_hybrid(state_b, "state_b")
    if state_a.cutoff != state_b.cutoff:
        raise ValueError("hybrid inputs must share the CV cutoff")
    cv_cap = state_a.cutoff.per_mode_max[1]
    caps = (1, 2 * cv_cap, 1, 2 * cv_cap)
    shape = tuple(c + 1 for c in caps)
    est._guard_elements(shape)
    bell_dag = _bell_change().conj().T
    bs = fock.Beamsplitter(math.pi / 4.0, math.pi, 1, 3)

    comp_w, dists = [], []
    for wa, sa in components_of(state_a):
        for wb, sb in components_of(state_b):
            joint = fock.pad(fock.tensor(sa, sb), caps)
            amps = fock._apply_two_mode_dense(joint.amplitudes, bell_dag, 0, 2)
            amps = fock.apply_gate(FockState(joint.cutoff, amps), bs).amplitudes
            p = np.abs(amps.ravel()) ** 2
            comp_w.append(wa * wb)
            dists.append(p / p.sum())

    z = np.arange(2).reshape(2, 1, 1, 1)
    n_b = np.arange(shape[1]).reshape(1, -1, 1, 1)
    x = np.arange(2).reshape(1, 1, 2, 1)
    m_b = np.arange(shape[3]).reshape(1, 1, 1, -1)
    weights = np.where((z * x + n_b) % 2 == 0, 1.0, -1.0) * (n_b + m_b <= 2 * m)
    weights = np.broadcast_to(weights, shape)
    return BlockSpec(np.asarray(comp_w), tuple(dists), weights.ravel().astype(np.complex128))


def hybrid_swap_estimate(state_a, state_b, m: int, shots: int, seed) -> EstimatorResult:
    """Ancilla-free SWAP test for qubit (x) CV-mode states.

    Samples a qubit Bell outcome (z, x) jointly with a photon pattern
    after the inverse 50:50 beamsplitter and scores
    (-1)^{z x + n_B} Theta[2m - n_B - m_B'].
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if m < 0:
        raise ValueError("detector threshold must be >= 0")
    block = _hybrid_block(state_a, state_b, m)
    weights, discarded = blocks_estimate([block], shots, seed)
    mean, stderr = estimator_statistics(weights)
    return EstimatorResult(mean, stderr, shots, discarded, _as_root(seed))


def hybrid_swap_expectation(state_a, state_b, m: int) -> float:
    """Exact hybrid estimator expectation: the qubit SWAP joined with the
    threshold-truncated CV SWAP observable."""
    _check_hybrid(state_a, "state_a")
    _check_hybrid(state_b, "state_b")
    if state_a.cutoff != state_b.cutoff:
        raise ValueError("hybrid inputs must share the CV cutoff")
    cv_dim = state_a.cutoff.shape[1]
    grid = np.add.outer(np.arange(cv_dim), np.arange(cv_dim))
    mask = (grid <= 2 * m).astype(float)  # over (n_B, m_B')
    value = 0.0
    for wa, sa in components_of(state_a):
        for wb, sb in components_of(state_b):
            joint = np.multiply.outer(sa.amplitudes, sb.amplitudes)
            masked = joint * mask[None, :, None, :]
            swapped = np.swapaxes(np.swapaxes(masked, 0, 2), 1, 3)
            norm = float(np.vdot(joint, joint).real)
            value += wa * wb * float(np.vdot(masked, swapped).real) / norm
    return value
