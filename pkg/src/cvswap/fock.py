"""Truncated multimode Fock-space states and exact linear-optical gates.

States are dense complex tensors over a per-mode-truncated photon-number
basis.  Gate matrices come from exact analytic Fock matrix elements
(column recurrences seeded by closed forms), never from exponentiating
truncated generators; the matrix-exponential path exists only as a test
oracle.  Values are immutable after construction and all operations are
pure functions.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "CutoffSpec",
    "PhotonPattern",
    "FockState",
    "MixedEnsemble",
    "Displacement",
    "Squeeze",
    "Beamsplitter",
    "PhaseRotation",
    "TwoModeSqueeze",
    "ModeSwap",
    "GateSpec",
    "PreparationLeakError",
    "basis_state",
    "inner_product",
    "tensor",
    "pad",
    "gate_matrix",
    "apply_gate",
    "apply_circuit",
    "dagger",
    "invert_circuit",
    "prepare",
    "truncation_weight",
    "local_cumulative",
    "single_particle_matrix",
    "rectangular_decompose",
    "state_to_document",
    "state_from_document",
    "save_state",
    "load_state",
]

TWO_PI = 2.0 * math.pi

# prepare() leak thresholds: above HARD the state is unusable, inside
# [SOFT, HARD) the result carries a warning flag.
LEAK_SOFT = 1e-6
LEAK_HARD = 1e-3

# refuse to materialize two-mode gate matrices beyond this joint dimension
_MAX_TWO_MODE_DIM = 4096


class PreparationLeakError(ValueError):
    """Raised when a state preparation loses too much weight to truncation."""


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class CutoffSpec:
    """Per-mode maximum photon numbers; local dimension is N_max + 1."""

    per_mode_max: tuple[int, ...]

    def __post_init__(self):
        caps = tuple(int(n) for n in self.per_mode_max)
        if not caps:
            raise ValueError("cutoff needs at least one mode")
        if any(n < 0 for n in caps):
            raise ValueError("per-mode cutoffs must be >= 0")
        object.__setattr__(self, "per_mode_max", caps)

    @classmethod
    def uniform(cls, n_max: int, modes: int) -> "CutoffSpec":
        return cls((int(n_max),) * modes)

    @property
    def modes(self) -> int:
        return len(self.per_mode_max)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(n + 1 for n in self.per_mode_max)

    @property
    def dim(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))


@dataclass(frozen=True)
class PhotonPattern:
    """A photon-count outcome, one non-negative count per mode."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(n) for n in self.counts)
        if any(n < 0 for n in counts):
            raise ValueError("photon counts must be >= 0")
        object.__setattr__(self, "counts", counts)


def _counts(pattern) -> tuple[int, ...]:
    if isinstance(pattern, PhotonPattern):
        return pattern.counts
    return tuple(int(n) for n in pattern)


@dataclass(frozen=True)
class FockState:
    """Dense state over the truncated multimode Fock basis.

    ``amplitudes`` is shaped per mode; its row-major flattening matches
    the pattern ordering used everywhere else.  ``leak`` records weight
    lost to truncation by the preparation that produced the state.
    """

    cutoff: CutoffSpec
    amplitudes: np.ndarray
    norm_sq: float = field(init=False)
    leak: float = 0.0
    leak_warning: bool = False

    def __post_init__(self):
        # own a copy so freezing never touches a caller's array
        amps = np.array(self.amplitudes, dtype=np.complex128, order="C")
        if amps.shape != self.cutoff.shape:
            if amps.size != self.cutoff.dim:
                raise ValueError(
                    f"amplitude count {amps.size} does not match cutoff dim {self.cutoff.dim}"
                )
            amps = amps.reshape(self.cutoff.shape)
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "norm_sq", float(np.vdot(amps, amps).real))

    @property
    def modes(self) -> int:
        return self.cutoff.modes


@dataclass(frozen=True)
class MixedEnsemble:
    """Mixed state as a convex ensemble of pure-state preparations."""

    components: tuple[tuple[float, FockState], ...]

    def __post_init__(self):
        comps = tuple((float(w), s) for w, s in self.components)
        if not comps:
            raise ValueError("ensemble needs at least one component")
        if any(w <= 0.0 or w > 1.0 for w, _ in comps):
            raise ValueError("ensemble weights must lie in (0, 1]")
        if abs(sum(w for w, _ in comps) - 1.0) > 1e-12:
            raise ValueError("ensemble weights must sum to 1")
        ref = comps[0][1].cutoff
        if any(s.cutoff != ref for _, s in comps):
            raise ValueError("ensemble components must share modes and cutoff")
        object.__setattr__(self, "components", comps)

    @property
    def cutoff(self) -> CutoffSpec:
        return self.components[0][1].cutoff

    @property
    def modes(self) -> int:
        return self.cutoff.modes


def components_of(state) -> tuple[tuple[float, FockState], ...]:
    """Uniform (weight, pure state) view of a FockState or MixedEnsemble."""
    if isinstance(state, MixedEnsemble):
        return state.components
    return ((1.0, state),)


# ---------------------------------------------------------------------------
# gate specifications


def _canonical_phase(phi: float) -> float:
    phi = float(phi) % TWO_PI
    return 0.0 if phi == TWO_PI else phi


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not -1e-12 <= theta <= math.pi + 1e-12:
        raise ValueError(f"beamsplitter angle {theta} outside [0, pi]")
    return min(max(theta, 0.0), math.pi)


@dataclass(frozen=True)
class Displacement:
    alpha: complex
    mode: int


@dataclass(frozen=True)
class Squeeze:
    z: complex
    mode: int


@dataclass(frozen=True)
class Beamsplitter:
    theta: float
    phi: float
    mode_i: int
    mode_j: int

    def __post_init__(self):
        object.__setattr__(self, "theta", _check_theta(self.theta))
        object.__setattr__(self, "phi", _canonical_phase(self.phi))
        if self.mode_i == self.mode_j:
            raise ValueError("beamsplitter modes must be distinct")


@dataclass(frozen=True)
class PhaseRotation:
    phi: float
    mode: int

    def __post_init__(self):
        object.__setattr__(self, "phi", _canonical_phase(self.phi))


@dataclass(frozen=True)
class TwoModeSqueeze:
    r: float
    mode_i: int
    mode_j: int

    def __post_init__(self):
        if self.mode_i == self.mode_j:
            raise ValueError("two-mode squeeze modes must be distinct")


@dataclass(frozen=True)
class ModeSwap:
    mode_i: int
    mode_j: int

    def __post_init__(self):
        if self.mode_i == self.mode_j:
            raise ValueError("mode swap modes must be distinct")


GateSpec = Displacement | Squeeze | Beamsplitter | PhaseRotation | TwoModeSqueeze | ModeSwap


def dagger(gate: GateSpec) -> GateSpec:
    """Inverse gate within the same gate family."""
    if isinstance(gate, Displacement):
        return Displacement(-gate.alpha, gate.mode)
    if isinstance(gate, Squeeze):
        return Squeeze(-gate.z, gate.mode)
    if isinstance(gate, Beamsplitter):
        return Beamsplitter(gate.theta, gate.phi + math.pi, gate.mode_i, gate.mode_j)
    if isinstance(gate, PhaseRotation):
        return PhaseRotation(-gate.phi, gate.mode)
    if isinstance(gate, TwoModeSqueeze):
        return TwoModeSqueeze(-gate.r, gate.mode_i, gate.mode_j)
    if isinstance(gate, ModeSwap):
        return gate
    raise TypeError(f"unknown gate {gate!r}")


def invert_circuit(gates) -> list[GateSpec]:
    """Gate list implementing the inverse of the given circuit."""
    return [dagger(g) for g in reversed(list(gates))]


# ---------------------------------------------------------------------------
# state constructors


def basis_state(pattern, cutoff: CutoffSpec) -> FockState:
    """Unit state with amplitude 1 on ``pattern``."""
    counts = _counts(pattern)
    if len(counts) != cutoff.modes:
        raise ValueError("pattern length does not match mode count")
    if any(n > cap for n, cap in zip(counts, cutoff.per_mode_max)):
        raise ValueError(f"pattern {counts} exceeds cutoff {cutoff.per_mode_max}")
    amps = np.zeros(cutoff.shape, dtype=np.complex128)
    amps[counts] = 1.0
    return FockState(cutoff, amps)


def inner_product(a: FockState, b: FockState) -> complex:
    """<a|b> with conjugation on ``a``."""
    if a.cutoff != b.cutoff:
        raise ValueError("inner product requires matching modes and cutoffs")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def tensor(a: FockState, b: FockState) -> FockState:
    """Tensor product; modes of ``b`` are appended after those of ``a``."""
    cutoff = CutoffSpec(a.cutoff.per_mode_max + b.cutoff.per_mode_max)
    amps = np.multiply.outer(a.amplitudes, b.amplitudes)
    return FockState(cutoff, amps)


def pad(state: FockState, per_mode_max) -> FockState:
    """Embed into larger per-mode cutoffs (zero fill above the old ones)."""
    caps = tuple(int(n) for n in per_mode_max)
    if len(caps) != state.modes:
        raise ValueError("pad spec must cover every mode")
    if any(new < old for new, old in zip(caps, state.cutoff.per_mode_max)):
        raise ValueError("pad cannot shrink a cutoff")
    if caps == state.cutoff.per_mode_max:
        return state
    cutoff = CutoffSpec(caps)
    amps = np.zeros(cutoff.shape, dtype=np.complex128)
    amps[tuple(slice(0, d) for d in state.cutoff.shape)] = state.amplitudes
    return FockState(cutoff, amps, leak=state.leak, leak_warning=state.leak_warning)


# ---------------------------------------------------------------------------
# exact single-mode gate matrices


def displacement_matrix(alpha: complex, dim: int) -> np.ndarray:
    """<m|D(alpha)|n> on an (dim x dim) truncated space.

    Column 0 is the coherent-state closed form; later columns follow the
    exact recurrence D[m, n+1] = (sqrt(m) D[m-1, n] - conj(alpha) D[m, n])
    / sqrt(n+1), which never references elements above the cutoff.
    """
    alpha = complex(alpha)
    mat = np.zeros((dim, dim), dtype=np.complex128)
    sqrt = np.sqrt(np.arange(dim))
    col = np.empty(dim, dtype=np.complex128)
    col[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for m in range(1, dim):
        col[m] = col[m - 1] * alpha / sqrt[m]
    mat[:, 0] = col
    for n in range(dim - 1):
        shifted = np.zeros(dim, dtype=np.complex128)
        shifted[1:] = sqrt[1:] * mat[: dim - 1, n]
        mat[:, n + 1] = (shifted - np.conj(alpha) * mat[:, n]) / sqrt[n + 1]
    return mat


def _squeeze_edge(z: complex, dim: int, sign: float) -> np.ndarray:
    """Squeezed-vacuum closed form: column 0 (sign=-1) or row 0 (sign=+1)."""
    r = abs(z)
    phase = z / r
    edge = np.zeros(dim, dtype=np.complex128)
    edge[0] = 1.0 / math.sqrt(math.cosh(r))
    ratio = sign * (phase if sign < 0 else np.conj(phase)) * math.tanh(r)
    for k in range(1, (dim - 1) // 2 + 1):
        edge[2 * k] = edge[2 * k - 2] * ratio * math.sqrt((2 * k - 1) / (2 * k))
    return edge


def squeeze_matrix(z: complex, dim: int) -> np.ndarray:
    """<m|S(z)|n> for S(z) = exp((conj(z) a^2 - z a^dag^2)/2).

    Seeded by the squeezed-vacuum column and row, filled by the two-term
    recurrence S[m+1, n] = (sqrt(n) S[m, n-1] - e^{i arg z} sinh|z| sqrt(m)
    S[m-1, n]) / (cosh|z| sqrt(m+1)); all references stay inside the box.
    """
    z = complex(z)
    if z == 0:
        return np.eye(dim, dtype=np.complex128)
    r = abs(z)
    phase = z / r
    ch, sh = math.cosh(r), math.sinh(r)
    sqrt = np.sqrt(np.arange(dim + 1))
    mat = np.zeros((dim, dim), dtype=np.complex128)
    mat[:, 0] = _squeeze_edge(z, dim, -1.0)
    mat[0, :] = _squeeze_edge(z, dim, +1.0)
    for n in range(1, dim):
        for m in range(0, dim - 1):
            upper = sqrt[n] * mat[m, n - 1]
            lower = phase * sh * sqrt[m] * mat[m - 1, n] if m > 0 else 0.0
            mat[m + 1, n] = (upper - lower) / (ch * sqrt[m + 1])
    return mat


def phase_matrix(phi: float, dim: int) -> np.ndarray:
    """Diagonal e^{-i phi n}."""
    return np.diag(np.exp(-1j * phi * np.arange(dim)))


# ---------------------------------------------------------------------------
# beamsplitter blocks


def _beamsplitter_blocks(theta: float, phi: float, t_max: int):
    """Yield (t, B_t) where B_t[j, a] = <j, t-j|U_BS|a, t-a>.

    Exact per-block recurrence: block t is obtained from block t-1 through
    the Heisenberg action on creation operators, so no element ever refers
    outside the total-photon sector.
    """
    c, s = math.cos(theta), math.sin(theta)
    eip, eim = cmath.exp(1j * phi), cmath.exp(-1j * phi)
    block = np.ones((1, 1), dtype=np.complex128)
    yield 0, block
    for t in range(1, t_max + 1):
        prev = block
        block = np.empty((t + 1, t + 1), dtype=np.complex128)
        sq = np.sqrt(np.arange(t + 1))
        up = np.zeros((t + 1, t), dtype=np.complex128)
        up[1:, :] = sq[1:, None] * prev
        down = np.zeros((t + 1, t), dtype=np.complex128)
        down[:-1, :] = sq[::-1][:-1, None] * prev
        # a = 0 descends from U b^dag = (e^{i phi} s a^dag + c b^dag) U,
        # a >= 1 from U a^dag = (c a^dag - e^{-i phi} s b^dag) U
        block[:, 0] = (eip * s * up[:, 0] + c * down[:, 0]) / sq[t]
        block[:, 1:] = (c * up - eim * s * down) / sq[1:][None, :]
        yield t, block


def _max_occupied_total(work: np.ndarray) -> int:
    """Largest n_i + n_j with any weight, over a (d1, d2, rest) view."""
    occupied = np.any(work != 0, axis=2)
    if not occupied.any():
        return -1
    rows, cols = np.nonzero(occupied)
    return int((rows + cols).max())


def _apply_beamsplitter(amps: np.ndarray, gate: Beamsplitter) -> np.ndarray:
    """Blockwise application along axes (mode_i, mode_j); truncation drops
    any weight pushed past the per-mode cutoffs."""
    moved = np.moveaxis(amps, (gate.mode_i, gate.mode_j), (0, 1))
    d1, d2 = moved.shape[0], moved.shape[1]
    work = moved.reshape(d1, d2, -1)
    out = np.zeros_like(work)
    t_hi = min(d1 + d2 - 2, _max_occupied_total(work))
    for t, block in _beamsplitter_blocks(gate.theta, gate.phi, t_hi):
        a_lo, a_hi = max(0, t - (d2 - 1)), min(d1 - 1, t)
        if a_lo > a_hi:
            continue
        rows = np.arange(a_lo, a_hi + 1)
        sub = block[np.ix_(rows, rows)]
        out[rows, t - rows, :] = sub @ work[rows, t - rows, :]
    return np.moveaxis(out.reshape(moved.shape), (0, 1), (gate.mode_i, gate.mode_j))


def beamsplitter_matrix(theta: float, phi: float, dims: tuple[int, int]) -> np.ndarray:
    """Dense (d1*d2 x d1*d2) matrix, row-major over (n_i, n_j)."""
    d1, d2 = dims
    if d1 * d2 > _MAX_TWO_MODE_DIM:
        raise ValueError("two-mode matrix too large to materialize; apply the gate instead")
    mat = np.zeros((d1 * d2, d1 * d2), dtype=np.complex128)
    for t, block in _beamsplitter_blocks(theta, phi, d1 + d2 - 2):
        a_lo, a_hi = max(0, t - (d2 - 1)), min(d1 - 1, t)
        if a_lo > a_hi:
            continue
        rows = np.arange(a_lo, a_hi + 1)
        flat = rows * d2 + (t - rows)
        mat[np.ix_(flat, flat)] = block[np.ix_(rows, rows)]
    return mat


def two_mode_squeeze_matrix(r: float, dims: tuple[int, int]) -> np.ndarray:
    """<m1 m2|exp(r(ab - a^dag b^dag))|n1 n2>, row-major over pairs.

    Column (0,0) is the two-mode squeezed vacuum; the remaining columns
    follow in-box recurrences in (n1, n2) derived from the Heisenberg
    action, preserving the photon-number difference sector.
    """
    d1, d2 = dims
    if d1 * d2 > _MAX_TWO_MODE_DIM:
        raise ValueError("two-mode matrix too large to materialize; reduce the cutoff")
    r = float(r)
    if r == 0.0:
        return np.eye(d1 * d2, dtype=np.complex128)
    ch, sh, th = math.cosh(r), math.sinh(r), math.tanh(r)
    sq1 = np.sqrt(np.arange(d1))
    sq2 = np.sqrt(np.arange(d2))
    T = np.zeros((d1, d2, d1, d2), dtype=np.complex128)
    n_diag = np.arange(min(d1, d2))
    T[n_diag, n_diag, 0, 0] = (-th) ** n_diag / ch
    for n1 in range(1, d1):
        prev = T[:, :, n1 - 1, 0]
        col = np.zeros((d1, d2), dtype=np.complex128)
        col[1:, :] = sq1[1:, None] * prev[:-1, :]
        T[:, :, n1, 0] = col / (ch * sq1[n1])
    for n2 in range(1, d2):
        for n1 in range(d1):
            prev = T[:, :, n1, n2 - 1]
            col = np.zeros((d1, d2), dtype=np.complex128)
            col[:, 1:] = sq2[None, 1:] * prev[:, :-1]
            if n1 > 0:
                col += sh * sq1[n1] * T[:, :, n1 - 1, n2 - 1]
            T[:, :, n1, n2] = col / (ch * sq2[n2])
    return T.reshape(d1 * d2, d1 * d2)


def mode_swap_matrix(dims: tuple[int, int]) -> np.ndarray:
    """Fock-index swap permutation; entries whose image leaves the box are
    dropped (sub-unitary when the two cutoffs differ)."""
    d1, d2 = dims
    if d1 * d2 > _MAX_TWO_MODE_DIM:
        raise ValueError("two-mode matrix too large to materialize; apply the gate instead")
    mat = np.zeros((d1 * d2, d1 * d2), dtype=np.complex128)
    for n in range(d1):
        for m in range(d2):
            if m < d1 and n < d2:
                mat[m * d2 + n, n * d2 + m] = 1.0
    return mat


# ---------------------------------------------------------------------------
# gate dispatch


def _mode_dims(cutoff: CutoffSpec, modes: tuple[int, ...]) -> tuple[int, ...]:
    for m in modes:
        if not 0 <= m < cutoff.modes:
            raise ValueError(f"gate mode {m} outside 0..{cutoff.modes - 1}")
    return tuple(cutoff.shape[m] for m in modes)


def gate_matrix(gate: GateSpec, cutoff: CutoffSpec) -> np.ndarray:
    """Truncated Fock matrix of the gate on its affected mode(s).

    Two-mode matrices are row-major over (n_i, n_j).  Number-conserving
    gates are unitary on every complete total-photon block; displacement
    and squeeze columns are sub-unitary by exactly the leaked weight.
    """
    if isinstance(gate, Displacement):
        (d,) = _mode_dims(cutoff, (gate.mode,))
        return displacement_matrix(gate.alpha, d)
    if isinstance(gate, Squeeze):
        (d,) = _mode_dims(cutoff, (gate.mode,))
        return squeeze_matrix(gate.z, d)
    if isinstance(gate, PhaseRotation):
        (d,) = _mode_dims(cutoff, (gate.mode,))
        return phase_matrix(gate.phi, d)
    if isinstance(gate, Beamsplitter):
        dims = _mode_dims(cutoff, (gate.mode_i, gate.mode_j))
        return beamsplitter_matrix(gate.theta, gate.phi, dims)
    if isinstance(gate, TwoModeSqueeze):
        dims = _mode_dims(cutoff, (gate.mode_i, gate.mode_j))
        return two_mode_squeeze_matrix(gate.r, dims)
    if isinstance(gate, ModeSwap):
        dims = _mode_dims(cutoff, (gate.mode_i, gate.mode_j))
        return mode_swap_matrix(dims)
    raise TypeError(f"unknown gate {gate!r}")


def _apply_single_mode(amps: np.ndarray, mat: np.ndarray, mode: int) -> np.ndarray:
    out = np.tensordot(mat, amps, axes=([1], [mode]))
    return np.moveaxis(out, 0, mode)


def _apply_two_mode_dense(amps: np.ndarray, mat: np.ndarray, mi: int, mj: int) -> np.ndarray:
    moved = np.moveaxis(amps, (mi, mj), (0, 1))
    d1, d2 = moved.shape[0], moved.shape[1]
    work = moved.reshape(d1 * d2, -1)
    out = (mat @ work).reshape(moved.shape)
    return np.moveaxis(out, (0, 1), (mi, mj))


def _apply_mode_swap(amps: np.ndarray, mi: int, mj: int) -> np.ndarray:
    d1, d2 = amps.shape[mi], amps.shape[mj]
    if d1 == d2:
        return np.swapaxes(amps, mi, mj)
    out = np.zeros_like(amps)
    k = min(d1, d2)
    src = [slice(None)] * amps.ndim
    dst = [slice(None)] * amps.ndim
    src[mi] = dst[mj] = slice(0, k)
    src[mj] = dst[mi] = slice(0, k)
    out[tuple(dst)] = np.swapaxes(amps[tuple(src)], mi, mj)
    return out


def apply_gate(state: FockState, gate: GateSpec) -> FockState:
    """New state with the gate contracted in; no renormalization."""
    amps = state.amplitudes
    if isinstance(gate, (Displacement, Squeeze, PhaseRotation)):
        mat = gate_matrix(gate, state.cutoff)
        out = _apply_single_mode(amps, mat, gate.mode)
    elif isinstance(gate, Beamsplitter):
        _mode_dims(state.cutoff, (gate.mode_i, gate.mode_j))
        out = _apply_beamsplitter(amps, gate)
    elif isinstance(gate, ModeSwap):
        _mode_dims(state.cutoff, (gate.mode_i, gate.mode_j))
        out = _apply_mode_swap(amps, gate.mode_i, gate.mode_j)
    elif isinstance(gate, TwoModeSqueeze):
        mat = gate_matrix(gate, state.cutoff)
        out = _apply_two_mode_dense(amps, mat, gate.mode_i, gate.mode_j)
    else:
        raise TypeError(f"unknown gate {gate!r}")
    return FockState(state.cutoff, out, leak=state.leak, leak_warning=state.leak_warning)


def apply_circuit(state: FockState, gates) -> FockState:
    for gate in gates:
        state = apply_gate(state, gate)
    return state


# ---------------------------------------------------------------------------
# preparations


def _leak_check(raw: np.ndarray, kind: str) -> tuple[float, bool]:
    captured = float(np.vdot(raw, raw).real)
    leak = max(0.0, 1.0 - captured)
    if leak > LEAK_HARD:
        raise PreparationLeakError(
            f"{kind} preparation leaks {leak:.3e} past the cutoff (limit {LEAK_HARD:.0e}); "
            "increase the cutoff"
        )
    return leak, leak >= LEAK_SOFT


def _coherent_amps(alpha: complex, dim: int) -> np.ndarray:
    amps = np.empty(dim, dtype=np.complex128)
    amps[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, dim):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    return amps


def prepare(kind: str, cutoff: CutoffSpec, *, alpha: complex = 0j,
            z: complex = 0j, r: float = 0.0) -> FockState:
    """Closed-form preparation, renormalized after truncation.

    kinds: ``vacuum``, ``coherent`` (alpha), ``squeezed`` (z), ``tmss`` (r,
    two modes).  The pre-normalization leak is recorded on the result; a
    leak above LEAK_HARD raises, one above LEAK_SOFT sets the warning flag.
    """
    if kind == "vacuum":
        return basis_state((0,) * cutoff.modes, cutoff)
    if kind == "coherent":
        if cutoff.modes != 1:
            raise ValueError("coherent preparation is single-mode")
        raw = _coherent_amps(complex(alpha), cutoff.shape[0])
    elif kind == "squeezed":
        if cutoff.modes != 1:
            raise ValueError("squeezed preparation is single-mode")
        if z == 0:
            return basis_state((0,), cutoff)
        raw = _squeeze_edge(complex(z), cutoff.shape[0], -1.0)
    elif kind == "tmss":
        if cutoff.modes != 2:
            raise ValueError("tmss preparation is two-mode")
        if r == 0.0:
            return basis_state((0, 0), cutoff)
        d1, d2 = cutoff.shape
        raw = np.zeros((d1, d2), dtype=np.complex128)
        n = np.arange(min(d1, d2))
        raw[n, n] = (-math.tanh(r)) ** n / math.cosh(r)
    else:
        raise ValueError(f"unknown preparation kind {kind!r}")
    leak, warn = _leak_check(raw, kind)
    amps = raw / math.sqrt(max(1.0 - leak, np.finfo(float).tiny))
    return FockState(cutoff, amps, leak=leak, leak_warning=warn)


# ---------------------------------------------------------------------------
# truncation weights


def _pattern_probabilities(state: FockState) -> np.ndarray:
    p = np.abs(state.amplitudes) ** 2
    total = p.sum()
    if total <= 0.0:
        raise ValueError("zero-norm state")
    return p / total


def truncation_weight(state, modes_subset, threshold: int) -> float:
    """Probability that the summed photon count over the subset is <= threshold."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    subset = tuple(modes_subset)
    value = 0.0
    for w, pure in components_of(state):
        p = _pattern_probabilities(pure)
        other = tuple(ax for ax in range(pure.modes) if ax not in subset)
        marginal = p.sum(axis=other) if other else p
        totals = np.zeros(marginal.shape, dtype=np.int64)
        for ax, mode in enumerate(subset):
            counts = np.arange(marginal.shape[ax])
            totals += counts.reshape((1,) * ax + (-1,) + (1,) * (marginal.ndim - ax - 1))
        value += w * float(marginal[totals <= threshold].sum())
    return min(value, 1.0)


def local_cumulative(state, mode: int, m: int) -> float:
    """Marginal photon-count CDF of one mode, evaluated at m."""
    value = 0.0
    for w, pure in components_of(state):
        p = _pattern_probabilities(pure)
        other = tuple(ax for ax in range(pure.modes) if ax != mode)
        marginal = p.sum(axis=other) if other else p
        value += w * float(marginal[: max(m, -1) + 1].sum())
    return min(value, 1.0)


# ---------------------------------------------------------------------------
# single-particle picture and the rectangular mesh


def single_particle_matrix(gates, n_modes: int) -> np.ndarray:
    """Composed action on creation operators, a_j -> sum_l U[l, j] a_l.

    Only passive gates (beamsplitters, phase rotations, mode swaps) have a
    single-particle matrix.
    """
    total = np.eye(n_modes, dtype=np.complex128)
    for gate in gates:
        mat = np.eye(n_modes, dtype=np.complex128)
        if isinstance(gate, Beamsplitter):
            c, s = math.cos(gate.theta), math.sin(gate.theta)
            i, j = gate.mode_i, gate.mode_j
            mat[i, i] = c
            mat[i, j] = cmath.exp(1j * gate.phi) * s
            mat[j, i] = -cmath.exp(-1j * gate.phi) * s
            mat[j, j] = c
        elif isinstance(gate, PhaseRotation):
            mat[gate.mode, gate.mode] = cmath.exp(-1j * gate.phi)
        elif isinstance(gate, ModeSwap):
            i, j = gate.mode_i, gate.mode_j
            mat[i, i] = mat[j, j] = 0.0
            mat[i, j] = mat[j, i] = 1.0
        else:
            raise TypeError(f"{gate!r} has no single-particle matrix")
        total = mat @ total
    return total


def rectangular_decompose(unitary: np.ndarray, tol: float = 1e-10) -> list[GateSpec]:
    """Factor an L x L unitary into a nearest-neighbor rectangular mesh.

    Givens eliminations walk anti-diagonals from the bottom-left corner,
    alternating column operations (even diagonals) and row operations (odd
    diagonals); the residual diagonal becomes phase rotations placed
    between the two beamsplitter half-meshes.  Gate count is L(L-1)/2
    beamsplitters plus at most L phases; depth is O(L).  Trivial gates
    (angle and phase below 1e-14) are dropped, so the identity yields an
    empty list.
    """
    u = np.array(unitary, dtype=np.complex128)
    n = u.shape[0]
    if u.shape != (n, n):
        raise ValueError("unitary must be square")
    if np.max(np.abs(u.conj().T @ u - np.eye(n))) > tol:
        raise ValueError("input is not unitary to the requested tolerance")

    right_ops: list[tuple[float, float, int]] = []  # (theta, phi, col)
    left_ops: list[tuple[float, float, int]] = []   # (theta, phi, upper row)
    for d in range(n - 1):
        if d % 2 == 0:
            # column ops; walk the diagonal from its bottom-right element up
            for j in range(d, -1, -1):
                r, c = n - 1 - d + j, j
                target, pivot = u[r, c], u[r, c + 1]
                if abs(target) == 0.0:
                    continue
                if abs(pivot) == 0.0:
                    theta, phi = math.pi / 2.0, 0.0
                else:
                    ratio = -target / pivot
                    theta = math.atan(abs(ratio))
                    phi = _canonical_phase(-cmath.phase(ratio))
                ct, st = math.cos(theta), math.sin(theta)
                cols = u[:, [c, c + 1]].copy()
                u[:, c] = ct * cols[:, 0] + cmath.exp(-1j * phi) * st * cols[:, 1]
                u[:, c + 1] = -cmath.exp(1j * phi) * st * cols[:, 0] + ct * cols[:, 1]
                u[r, c] = 0.0
                right_ops.append((theta, phi, c))
        else:
            # row ops; walk the diagonal from its top-left element down
            for j in range(d + 1):
                r, c = n - 1 - d + j, j
                target, pivot = u[r, c], u[r - 1, c]
                if abs(target) == 0.0:
                    continue
                if abs(pivot) == 0.0:
                    theta, phi = math.pi / 2.0, 0.0
                else:
                    ratio = target / pivot
                    theta = math.atan(abs(ratio))
                    phi = _canonical_phase(-cmath.phase(ratio))
                ct, st = math.cos(theta), math.sin(theta)
                rows = u[[r - 1, r], :].copy()
                u[r - 1, :] = ct * rows[0, :] + cmath.exp(1j * phi) * st * rows[1, :]
                u[r, :] = -cmath.exp(-1j * phi) * st * rows[0, :] + ct * rows[1, :]
                u[r, c] = 0.0
                left_ops.append((theta, phi, r - 1))

    off = u - np.diag(np.diag(u))
    if np.max(np.abs(off)) > 1e-9:
        raise RuntimeError("rectangular elimination failed to reach a diagonal")

    gates: list[GateSpec] = []
    for theta, phi, c in right_ops:
        if theta > 1e-14:
            gates.append(Beamsplitter(theta, phi, c, c + 1))
    for m in range(n):
        delta = cmath.phase(u[m, m])
        if abs(u[m, m]) > 0 and abs(delta) > 1e-14:
            gates.append(PhaseRotation(_canonical_phase(-delta), m))
    for theta, phi, row in reversed(left_ops):
        if theta > 1e-14:
            gates.append(Beamsplitter(theta, phi + math.pi, row, row + 1))
    return gates


# ---------------------------------------------------------------------------
# serialization


def state_to_document(state: FockState) -> dict:
    """Self-describing JSON document with interleaved re/im amplitudes."""
    flat = state.amplitudes.ravel()
    interleaved = np.empty(2 * flat.size, dtype=np.float64)
    interleaved[0::2] = flat.real
    interleaved[1::2] = flat.imag
    return {
        "modes": state.modes,
        "per_mode_max": list(state.cutoff.per_mode_max),
        "amplitudes": interleaved.tolist(),
    }


def state_from_document(doc: dict) -> FockState:
    cutoff = CutoffSpec(tuple(doc["per_mode_max"]))
    if int(doc["modes"]) != cutoff.modes:
        raise ValueError("mode count disagrees with per_mode_max length")
    raw = np.asarray(doc["amplitudes"], dtype=np.float64)
    if raw.size != 2 * cutoff.dim:
        raise ValueError("amplitude list length does not match cutoff")
    amps = raw[0::2] + 1j * raw[1::2]
    return FockState(cutoff, amps.reshape(cutoff.shape))


def save_state(state: FockState, path) -> None:
    Path(path).write_text(json.dumps(state_to_document(state)), encoding="utf-8")


def load_state(path) -> FockState:
    return state_from_document(json.loads(Path(path).read_text(encoding="utf-8")))
