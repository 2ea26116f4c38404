"""Cutoff-aware CV SWAP-test estimation.

The shot estimator applies the 50:50 beamsplitter inverse to each mode
pair, samples photon patterns, and weights a shot by the parity of the
first register's count when the pair total is within the detector
threshold 2M (weight 0 otherwise, still counted in the denominator).
Exact expectations, certified systematic-error bounds, analytic reference
formulas, and detector-cutoff planners live alongside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fock
from .fock import Beamsplitter, FockState, MixedEnsemble, components_of
from .sampling import BlockSpec, _as_root, blocks_estimate, estimator_statistics

__all__ = [
    "EstimatorResult",
    "CutoffPlan",
    "cv_swap_estimate",
    "swap2m_expectation",
    "swap2m_profile",
    "parity_overlap_estimate",
    "parity_overlap_expectation",
    "error_bound_global",
    "error_bound_local",
    "cutoff_for_squeezed",
    "cutoff_for_coherent_chernoff",
    "cutoff_for_coherent_normal",
    "cutoff_for_coherent_exact",
    "analytic_squeezed_overlap",
    "analytic_swap2m_squeezed",
    "normal_cdf",
    "normal_quantile",
]

# dense working tensors larger than this are refused with guidance
MAX_WORKING_ELEMENTS = 1 << 24


@dataclass(frozen=True)
class EstimatorResult:
    """Shot-estimator summary.

    ``discarded`` counts shots whose pair total exceeded a detector
    threshold; they contribute weight 0 but remain in the denominator.
    """

    mean: complex
    stderr: float
    shots: int
    discarded: int
    seed: int

    def __post_init__(self):
        if self.discarded > self.shots:
            raise ValueError("discarded shots cannot exceed total shots")
        if not math.isnan(self.stderr) and self.stderr < 0:
            raise ValueError("stderr must be >= 0")

    def to_dict(self) -> dict:
        return {
            "mean_re": self.mean.real,
            "mean_im": self.mean.imag,
            # a single shot has no dispersion estimate; keep documents
            # strict JSON by mapping NaN to null
            "stderr": None if math.isnan(self.stderr) else self.stderr,
            "shots": self.shots,
            "discarded": self.discarded,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EstimatorResult":
        stderr = doc["stderr"]
        return cls(
            complex(doc["mean_re"], doc["mean_im"]),
            math.nan if stderr is None else float(stderr),
            int(doc["shots"]),
            int(doc["discarded"]),
            int(doc["seed"]),
        )


@dataclass(frozen=True)
class CutoffPlan:
    """Chosen detector threshold with its certified systematic-error bound.

    ``reference_m`` carries the closed-form sufficient threshold reported
    alongside the squeezed-family plan.
    """

    M: int
    bound: float
    method: str
    target_eps: float
    reference_m: int | None = None

    def __post_init__(self):
        if self.M < 0:
            raise ValueError("threshold must be >= 0")

    def to_dict(self) -> dict:
        doc = {
            "M": self.M,
            "bound": self.bound,
            "method": self.method,
            "target_eps": self.target_eps,
        }
        if self.reference_m is not None:
            doc["reference_m"] = self.reference_m
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "CutoffPlan":
        return cls(
            int(doc["M"]),
            float(doc["bound"]),
            str(doc["method"]),
            float(doc["target_eps"]),
            None if doc.get("reference_m") is None else int(doc["reference_m"]),
        )


# ---------------------------------------------------------------------------
# block assembly for parity estimators


def _as_factors(joint) -> list:
    if isinstance(joint, (FockState, MixedEnsemble)):
        return [joint]
    return list(joint)


def _guard_elements(shape) -> None:
    total = int(np.prod([int(s) for s in shape], dtype=np.int64))
    if total > MAX_WORKING_ELEMENTS:
        raise ValueError(
            f"working tensor of {total} amplitudes exceeds the desk-scale limit; "
            "reduce cutoffs or mode count"
        )


def _normalize_thresholds(m_per_pair, n_pairs: int) -> list[int | None]:
    if m_per_pair is None:
        return [None] * n_pairs
    if isinstance(m_per_pair, (int, np.integer)):
        return [int(m_per_pair)] * n_pairs
    out = [None if m is None else int(m) for m in m_per_pair]
    if len(out) != n_pairs:
        raise ValueError("one threshold per pair required")
    if any(m is not None and m < 0 for m in out):
        raise ValueError("thresholds must be >= 0")
    return out


@dataclass
class _Group:
    factors: list          # FockState | MixedEnsemble, modes concatenated
    local_pairs: list[tuple[int, int]]
    thresholds: list[int | None]
    base_caps: list[int]


def _group_factors(factors: list, pairs, thresholds) -> list[_Group]:
    """Merge product factors connected through measurement pairs."""
    offsets = []
    total = 0
    for f in factors:
        offsets.append(total)
        total += f.modes
    owner = []
    for i, f in enumerate(factors):
        owner.extend([i] * f.modes)
    for a, b in pairs:
        for m in (a, b):
            if not 0 <= m < total:
                raise ValueError(f"pair mode {m} outside the joint register")
    flat = [m for p in pairs for m in p]
    if len(set(flat)) != len(flat):
        raise ValueError("measurement pairs must be disjoint")

    parent = list(range(len(factors)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in pairs:
        ra, rb = find(owner[a]), find(owner[b])
        if ra != rb:
            parent[ra] = rb

    groups: dict[int, list[int]] = {}
    for i in range(len(factors)):
        groups.setdefault(find(i), []).append(i)

    out = []
    for members in groups.values():
        local_of = {}
        caps = []
        for fi in members:
            for k in range(factors[fi].modes):
                local_of[offsets[fi] + k] = len(caps)
                caps.append(factors[fi].cutoff.per_mode_max[k])
        local_pairs, local_thr = [], []
        for (a, b), thr in zip(pairs, thresholds):
            if owner[a] in members:
                local_pairs.append((local_of[a], local_of[b]))
                local_thr.append(thr)
        out.append(_Group([factors[i] for i in members], local_pairs, local_thr, caps))
    return out


def _group_combos(group: _Group):
    """(weight, pure states) combinations across the group's factors."""
    combos = [(1.0, [])]
    for f in group.factors:
        combos = [
            (w * cw, states + [cs])
            for w, states in combos
            for cw, cs in components_of(f)
        ]
    return combos


def _tensor_all(states: list[FockState]) -> FockState:
    joint = states[0]
    for s in states[1:]:
        joint = fock.tensor(joint, s)
    return joint


def _parity_weights(shape, local_pairs, thresholds, total_threshold=None) -> np.ndarray:
    """Per-pattern weight grid: parity on the first mode of every pair,
    zeroed where a pair total (or the group total) exceeds its threshold."""
    weights = np.ones(shape, dtype=np.float64)
    counts = [np.arange(d).reshape((1,) * ax + (-1,) + (1,) * (len(shape) - ax - 1))
              for ax, d in enumerate(shape)]
    for (a, b), thr in zip(local_pairs, thresholds):
        weights = weights * np.where(counts[a] % 2 == 0, 1.0, -1.0)
        if thr is not None:
            weights = weights * (counts[a] + counts[b] <= 2 * thr)
    if total_threshold is not None:
        total = np.zeros(shape, dtype=np.int64)
        for ax in range(len(shape)):
            total = total + counts[ax]
        weights = weights * (total <= 2 * total_threshold)
    return weights


def _sampling_block(group: _Group, total_threshold=None) -> BlockSpec:
    """Distribution/weight block for the shot path.

    Each pair's two working cutoffs are padded to the pair total so the
    beamsplitter acts exactly; spectator modes keep their own cutoff.
    """
    caps = list(group.base_caps)
    for a, b in group.local_pairs:
        s = group.base_caps[a] + group.base_caps[b]
        caps[a] = max(caps[a], s)
        caps[b] = max(caps[b], s)
    shape = tuple(c + 1 for c in caps)
    _guard_elements(shape)

    gates = [Beamsplitter(math.pi / 4.0, math.pi, a, b) for a, b in group.local_pairs]
    combos = _group_combos(group)
    comp_w, dists = [], []
    for w, states in combos:
        state = fock.pad(_tensor_all(states), caps)
        state = fock.apply_circuit(state, gates)
        p = np.abs(state.amplitudes.ravel()) ** 2
        total = p.sum()
        if total <= 0:
            raise ValueError("zero-norm component")
        comp_w.append(w)
        dists.append(p / total)
    weights = _parity_weights(shape, group.local_pairs, group.thresholds, total_threshold)
    return BlockSpec(np.asarray(comp_w), tuple(dists), weights.ravel().astype(np.complex128))


def _group_expectation(group: _Group, total_threshold=None) -> float:
    """Exact tr(prod_p SWAP_2M_p rho) for one group, via the masked
    pair-swap form of the truncated SWAP observable (pairs are padded to a
    common cutoff first, which makes the axis swap exact)."""
    caps = list(group.base_caps)
    for a, b in group.local_pairs:
        m = max(caps[a], caps[b])
        caps[a] = caps[b] = m
    shape = tuple(c + 1 for c in caps)
    _guard_elements(shape)

    counts = [np.arange(d).reshape((1,) * ax + (-1,) + (1,) * (len(shape) - ax - 1))
              for ax, d in enumerate(shape)]
    mask = np.ones(shape, dtype=np.float64)
    for (a, b), thr in zip(group.local_pairs, group.thresholds):
        if thr is not None:
            mask = mask * (counts[a] + counts[b] <= 2 * thr)
    if total_threshold is not None:
        total = np.zeros(shape, dtype=np.int64)
        for ax in range(len(shape)):
            total = total + counts[ax]
        mask = mask * (total <= 2 * total_threshold)

    value = 0.0
    for w, states in _group_combos(group):
        psi = fock.pad(_tensor_all(states), caps).amplitudes
        norm = float(np.vdot(psi, psi).real)
        if norm <= 0:
            raise ValueError("zero-norm component")
        masked = psi * mask
        swapped = masked
        for a, b in group.local_pairs:
            swapped = np.swapaxes(swapped, a, b)
        value += w * float(np.vdot(masked, swapped).real) / norm
    return value


def run_parity_blocks(groups, thresholds_total, shots, seed) -> EstimatorResult:
    blocks = [_sampling_block(g, t) for g, t in zip(groups, thresholds_total)]
    weights, discarded = blocks_estimate(blocks, shots, seed)
    mean, stderr = estimator_statistics(weights)
    return EstimatorResult(mean, stderr, shots, discarded, _as_root(seed))


# ---------------------------------------------------------------------------
# public estimators


def _require_single_mode(state, name: str) -> None:
    if state.modes != 1:
        raise ValueError(f"{name} must be a single-mode state")


def cv_swap_estimate(state_a, state_b, m: int, shots: int, seed) -> EstimatorResult:
    """Shot estimate of tr(rho sigma) with detector threshold 2m.

    Applies the inverse 50:50 beamsplitter to the pair, samples a pattern
    (n, m'), and scores (-1)^n when n + m' <= 2m, else 0.
    """
    _require_single_mode(state_a, "state_a")
    _require_single_mode(state_b, "state_b")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if m < 0:
        raise ValueError("detector threshold must be >= 0")
    groups = _group_factors([state_a, state_b], [(0, 1)], [m])
    return run_parity_blocks(groups, [None] * len(groups), shots, seed)


def parity_overlap_estimate(joint, pairs, m_per_pair, shots: int, seed) -> EstimatorResult:
    """Parallel SWAP-test estimate over disjoint mode pairs.

    ``joint`` is a FockState/MixedEnsemble or a sequence of them read as a
    tensor product (modes concatenated).  The shot weight is the parity of
    the summed first-of-pair counts, zeroed whenever any pair exceeds its
    threshold.  Expectation equals tr(prod_p SWAP_2M_p . joint density).
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    factors = _as_factors(joint)
    pairs = [tuple(p) for p in pairs]
    thresholds = _normalize_thresholds(m_per_pair, len(pairs))
    groups = _group_factors(factors, pairs, thresholds)
    return run_parity_blocks(groups, [None] * len(groups), shots, seed)


def parity_overlap_expectation(joint, pairs, m_per_pair) -> float:
    """Exact expectation of the parity estimator (no sampling)."""
    factors = _as_factors(joint)
    pairs = [tuple(p) for p in pairs]
    thresholds = _normalize_thresholds(m_per_pair, len(pairs))
    groups = _group_factors(factors, pairs, thresholds)
    value = 1.0
    for g in groups:
        value *= _group_expectation(g)
    return value


def _signed_total_mass(joint) -> np.ndarray:
    """g[t] = sum_{n+m'=t} (-1)^n p(n, m') over the post-beamsplitter
    pattern distribution; the pair is padded to its total photon capacity
    first so the beamsplitter acts exactly on every in-box input."""
    if joint.modes != 2:
        raise ValueError("joint must be a two-mode state")
    c1, c2 = joint.cutoff.per_mode_max
    caps = (c1 + c2, c1 + c2)
    shape = tuple(c + 1 for c in caps)
    _guard_elements(shape)
    signs = np.where(np.arange(shape[0]) % 2 == 0, 1.0, -1.0)[:, None]
    totals = np.add.outer(np.arange(shape[0]), np.arange(shape[1])).ravel()
    g = np.zeros(2 * (c1 + c2) + 1)
    for w, pure in components_of(joint):
        state = fock.apply_gate(fock.pad(pure, caps), Beamsplitter(math.pi / 4.0, math.pi, 0, 1))
        p = np.abs(state.amplitudes) ** 2
        total = p.sum()
        if total <= 0:
            raise ValueError("zero-norm state")
        g += w * np.bincount(totals, weights=(p * signs).ravel(), minlength=g.size) / total
    return g


def swap2m_expectation(joint, m: int) -> float:
    """Exact sum_{n+m'<=2m} (-1)^n p(n, m') over the post-beamsplitter
    pattern distribution of the two-mode input."""
    return swap2m_profile(joint, [m])[0]


def swap2m_profile(joint, m_values) -> list[float]:
    """swap2m_expectation for several thresholds at the cost of one
    beamsplitter application."""
    if any(m < 0 for m in m_values):
        raise ValueError("detector threshold must be >= 0")
    cumulative = np.cumsum(_signed_total_mass(joint))
    top = cumulative.size - 1
    return [float(cumulative[min(2 * m, top)]) for m in m_values]


# ---------------------------------------------------------------------------
# systematic-error bounds


def error_bound_global(joint, m: int) -> float:
    """1 - q_2M: weight of the joint input outside the total-photon <= 2M
    subspace; upper bound on the cutoff-induced systematic error."""
    if joint.modes != 2:
        raise ValueError("joint must be a two-mode state")
    return 1.0 - fock.truncation_weight(joint, (0, 1), 2 * m)


def error_bound_local(rho, sigma, m: int) -> float:
    """1 - q^rho_M q^sigma_M from the per-register marginal CDFs; always
    dominates the global bound of the product state."""
    _require_single_mode(rho, "rho")
    _require_single_mode(sigma, "sigma")
    return 1.0 - fock.local_cumulative(rho, 0, m) * fock.local_cumulative(sigma, 0, m)


# ---------------------------------------------------------------------------
# analytic reference formulas (squeezed/anti-squeezed pair)


def analytic_squeezed_overlap(r: float) -> float:
    """|<psi|phi>|^2 for squeezed and anti-squeezed vacuum of strength r."""
    return 1.0 / math.cosh(2.0 * r)


def analytic_swap2m_squeezed(r: float, m: int) -> float:
    """Finite-threshold value (1 +/- tanh^{2(M+1)} r) / cosh 2r, sign by
    the parity of M."""
    sign = 1.0 if m % 2 == 0 else -1.0
    return (1.0 + sign * math.tanh(r) ** (2 * (m + 1))) / math.cosh(2.0 * r)


# ---------------------------------------------------------------------------
# normal distribution helpers


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


_PPND16_A = (
    3.387132872796366608e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
)
_PPND16_B = (
    1.0, 4.2313330701600911252e1, 6.871870074920579083e2, 5.3941960214247511077e3,
    2.1213794301586595867e4, 3.930789580009271061e4, 2.8729085735721942674e4,
    5.226495278852545674e3,
)
_PPND16_C = (
    1.42343711074968357734e0, 4.6303378461565452959e0, 5.7694972214606914055e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.4178072517745061177e-1,
    2.27238449892691845833e-2, 7.7454501427834140764e-4,
)
_PPND16_D = (
    1.0, 2.05319162663775882187e0, 1.6763848301838038494e0, 6.8976733498510000455e-1,
    1.4810397642748007459e-1, 1.51986665636164571966e-2, 5.475938084995344946e-4,
    1.05075007164441684324e-9,
)
_PPND16_E = (
    6.6579046435011037772e0, 5.4637849111641143699e0, 1.7848265399172913358e0,
    2.9656057182850489123e-1, 2.6532189526576123093e-2, 1.2426609473880784386e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
)
_PPND16_F = (
    1.0, 5.9983220655588793769e-1, 1.3692988092273580531e-1, 1.48753612908506148525e-2,
    7.868691311456132591e-4, 1.8463183175100546818e-5, 1.4215117583164458887e-7,
    2.04426310338993978564e-15,
)


def _poly(coeffs, x: float) -> float:
    value = 0.0
    for c in reversed(coeffs):
        value = value * x + c
    return value


def normal_quantile(p: float) -> float:
    """Standard normal quantile (probit) via the AS 241 rational
    approximations; absolute error well below 1e-9."""
    if not 0.0 < p < 1.0:
        if p == 0.0:
            return -math.inf
        if p == 1.0:
            return math.inf
        raise ValueError("quantile argument must lie in [0, 1]")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_PPND16_A, r) / _poly(_PPND16_B, r)
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        value = _poly(_PPND16_C, r) / _poly(_PPND16_D, r)
    else:
        r -= 5.0
        value = _poly(_PPND16_E, r) / _poly(_PPND16_F, r)
    return -value if q < 0 else value


# ---------------------------------------------------------------------------
# detector-cutoff planners


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    return eps


def cutoff_for_squeezed(r: float, eps: float) -> CutoffPlan:
    """Smallest M with tanh^{2(M+1)} r <= eps (exact tail of the
    squeezed/anti-squeezed pair); also reports the large-r sufficient
    threshold ceil(e^{2r}/4 ln(1/eps) - 1)."""
    if r <= 0:
        raise ValueError("squeezing strength must be > 0")
    eps = _check_eps(eps)
    log_t2 = 2.0 * math.log(math.tanh(r))
    m = max(0, math.ceil(math.log(eps) / log_t2 - 1.0))
    while m > 0 and math.tanh(r) ** (2 * m) <= eps:
        m -= 1
    while math.tanh(r) ** (2 * (m + 1)) > eps:
        m += 1
    reference = max(0, math.ceil(math.exp(2.0 * r) / 4.0 * math.log(1.0 / eps) - 1.0))
    return CutoffPlan(m, math.tanh(r) ** (2 * (m + 1)), "squeezed_closed_form", eps, reference)


def _chernoff_log_bound(energy: float, m: int) -> float:
    # log of (eE/M)^{2M} e^{-2E}, valid for M > E
    return 2.0 * m * (1.0 + math.log(energy) - math.log(m)) - 2.0 * energy


def cutoff_for_coherent_chernoff(energy: float, eps: float) -> CutoffPlan:
    """Candidate M = ceil(1.3 E + ln(1/eps)), bumped upward until the
    Poisson Chernoff tail bound (eE/M)^{2M} e^{-2E} drops below eps."""
    if energy <= 0:
        raise ValueError("energy must be > 0")
    eps = _check_eps(eps)
    m = math.ceil(1.3 * energy + math.log(1.0 / eps))
    while _chernoff_log_bound(energy, m) > math.log(eps):
        m += 1
    bound = math.exp(min(_chernoff_log_bound(energy, m), 0.0))
    return CutoffPlan(m, bound, "chernoff", eps)


def cutoff_for_coherent_normal(energy: float, eps: float) -> CutoffPlan:
    """M = ceil(E + sqrt(E) Phi^{-1}(sqrt(1-eps))) under the normal
    approximation to the Poisson marginals; refuses small energies where
    that approximation is not justified."""
    if energy < 25.0:
        raise ValueError(
            "normal-quantile planning needs energy >= 25; use the Chernoff planner instead"
        )
    eps = _check_eps(eps)
    m = max(0, math.ceil(energy + math.sqrt(energy) * normal_quantile(math.sqrt(1.0 - eps))))
    bound = 1.0 - normal_cdf((m - energy) / math.sqrt(energy)) ** 2
    return CutoffPlan(m, min(max(bound, 0.0), 1.0), "normal_quantile", eps)


def cutoff_for_coherent_exact(energy: float, eps: float) -> CutoffPlan:
    """Smallest M with the exact Poisson(2E) tail above 2M at or below eps
    (the total photon count of an isoenergetic coherent pair)."""
    if energy <= 0:
        raise ValueError("energy must be > 0")
    eps = _check_eps(eps)
    lam = 2.0 * energy
    log_pmf = -lam
    cdf = math.exp(log_pmf)
    k = 0
    m = None
    while True:
        if k % 2 == 0 and 1.0 - cdf <= eps:
            m = k // 2
            break
        k += 1
        log_pmf += math.log(lam) - math.log(k)
        cdf += math.exp(log_pmf)
        if k > 100 * lam + 1000:
            raise RuntimeError("Poisson tail scan failed to converge")
    return CutoffPlan(m, max(1.0 - cdf, 0.0), "exact_tail", eps)
