import math

import numpy as np
import pytest

from cvswap import fock


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def random_pure(rng, cap: int, modes: int = 1) -> fock.FockState:
    shape = tuple(cap + 1 for _ in range(modes))
    amps = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    amps /= np.linalg.norm(amps)
    return fock.FockState(fock.CutoffSpec.uniform(cap, modes), amps)


def random_number_conserving(rng, cap: int, modes: int = 2, max_total=None) -> fock.FockState:
    """Random state supported on totals <= max_total, where the truncated
    beamsplitter blocks are complete and gates act exactly unitarily."""
    if max_total is None:
        max_total = cap
    shape = tuple(cap + 1 for _ in range(modes))
    amps = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    totals = np.zeros(shape, dtype=int)
    for ax in range(modes):
        idx = np.arange(cap + 1).reshape((1,) * ax + (-1,) + (1,) * (modes - ax - 1))
        totals = totals + idx
    amps[totals > max_total] = 0.0
    amps /= np.linalg.norm(amps)
    return fock.FockState(fock.CutoffSpec.uniform(cap, modes), amps)


def random_ensemble(rng, cap: int, rank: int) -> fock.MixedEnsemble:
    weights = rng.random(rank)
    weights /= weights.sum()
    comps = tuple((float(w), random_pure(rng, cap)) for w in weights)
    return fock.MixedEnsemble(comps)


def density_matrix(state) -> np.ndarray:
    """Dense density-matrix oracle for a FockState or MixedEnsemble."""
    dim = state.cutoff.dim
    rho = np.zeros((dim, dim), dtype=np.complex128)
    for w, pure in fock.components_of(state):
        vec = pure.amplitudes.ravel() / math.sqrt(pure.norm_sq)
        rho += w * np.outer(vec, vec.conj())
    return rho


def purification_of(ensemble, cap: int) -> fock.FockState:
    """Two-mode purification of a single-mode mixed state."""
    rho = density_matrix(ensemble)
    vals, vecs = np.linalg.eigh(rho)
    vals = np.clip(vals, 0.0, None)
    amps = np.zeros((cap + 1, cap + 1), dtype=np.complex128)
    for k, v in enumerate(vals):
        amps += math.sqrt(v) * np.multiply.outer(vecs[:, k], np.eye(cap + 1)[k])
    return fock.FockState(fock.CutoffSpec.uniform(cap, 2), amps)


def ladder_ops(dim: int):
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    return a, a.conj().T


def two_mode_ladder_ops(dim: int):
    a, _ = ladder_ops(dim)
    eye = np.eye(dim)
    return np.kron(a, eye), np.kron(eye, a)
