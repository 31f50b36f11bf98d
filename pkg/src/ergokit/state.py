"""Density matrices and diagonal states in the energy eigenbasis.

A density matrix is a ``(d, d)`` complex ndarray; a diagonal state is a
length-``d`` real ndarray of populations. Functions accept either form
wherever that makes sense.
"""

from __future__ import annotations

import json
from typing import NamedTuple

import numpy as np

from .spectrum import Spectrum

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_PSD = 1e-9

# entropies are reported in bits
LOG_BASE = 2.0


class InvalidStateError(ValueError):
    """A state violates one of its type invariants."""

    def __init__(self, invariant: str, detail: str):
        super().__init__(f"{invariant}: {detail}")
        self.invariant = invariant


class EigenSpectrum(NamedTuple):
    ascending: np.ndarray
    descending: np.ndarray


def check_probs(probs, dim: int | None = None) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1:
        raise InvalidStateError("shape", f"diagonal state must be 1-D, got shape {p.shape}")
    if dim is not None and p.size != dim:
        raise InvalidStateError("dimension", f"expected {dim} levels, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise InvalidStateError("finite", "populations must be finite")
    if p.min() < -TOL_PSD:
        raise InvalidStateError("positive", f"negative population {p.min():.3e}")
    if abs(p.sum() - 1.0) > TOL_TRACE:
        raise InvalidStateError("trace", f"populations sum to {p.sum():.15g}")
    return p


def check_density_matrix(rho, dim: int | None = None) -> np.ndarray:
    r = np.asarray(rho, dtype=complex)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise InvalidStateError("shape", f"density matrix must be square, got shape {r.shape}")
    if dim is not None and r.shape[0] != dim:
        raise InvalidStateError("dimension", f"expected {dim}x{dim}, got {r.shape}")
    if not np.all(np.isfinite(r)):
        raise InvalidStateError("finite", "entries must be finite")
    herm = np.abs(r - r.conj().T).max()
    if herm > TOL_HERM:
        raise InvalidStateError("hermitian", f"max |rho - rho^H| = {herm:.3e}")
    tr = np.trace(r)
    if abs(tr - 1.0) > TOL_TRACE:
        raise InvalidStateError("trace", f"trace = {tr:.15g}")
    lo = np.linalg.eigvalsh(_hermitize(r))[0]
    if lo < -TOL_PSD:
        raise InvalidStateError("psd", f"minimum eigenvalue {lo:.3e}")
    return r


def _hermitize(r: np.ndarray) -> np.ndarray:
    return 0.5 * (r + r.conj().T)


def as_matrix(rho) -> np.ndarray:
    """Embed a diagonal state as a matrix; pass matrices through."""
    r = np.asarray(rho)
    if r.ndim == 1:
        return np.diag(r.astype(complex))
    return r.astype(complex, copy=False)


def _dims_match(rho, spec: Spectrum) -> None:
    d = np.shape(rho)[0]
    if d != spec.dim:
        raise ValueError(f"dimension mismatch: state has {d} levels, spectrum has {spec.dim}")


def populations(rho) -> np.ndarray:
    r = np.asarray(rho)
    if r.ndim == 1:
        return r.astype(float)
    return np.real(np.diag(r)).copy()


def mean_energy(rho, spec: Spectrum) -> float:
    _dims_match(rho, spec)
    return float(populations(rho) @ spec.levels)


def eigen_spectrum(rho) -> EigenSpectrum:
    """Eigenvalues of ``rho`` with solver noise clipped into [0, 1]."""
    r = np.asarray(rho)
    if r.ndim == 1:
        lam = np.sort(r.astype(float), kind="stable")
    else:
        lam = np.linalg.eigvalsh(_hermitize(r.astype(complex)))
    if lam.min() < -TOL_PSD:
        raise InvalidStateError("psd", f"minimum eigenvalue {lam.min():.3e}")
    if lam.min() < 0:
        lam = np.clip(lam, 0.0, None)
        lam = lam / lam.sum()
    lam = np.clip(lam, 0.0, 1.0)
    return EigenSpectrum(lam, lam[::-1].copy())


def dephase(rho) -> np.ndarray:
    return populations(rho)


def _sorted_eigs(rho, descending: bool) -> np.ndarray:
    r = np.asarray(rho)
    if r.ndim == 1:
        # stable sort keeps the original level order among ties
        p = r.astype(float)
        order = np.argsort(-p if descending else p, kind="stable")
        return p[order]
    eig = eigen_spectrum(r)
    return eig.descending if descending else eig.ascending


def passive_rearrangement(rho, spec: Spectrum | None = None) -> np.ndarray:
    """Eigenvalues of ``rho`` placed in decreasing order on increasing energies."""
    if spec is not None:
        _dims_match(rho, spec)
    return _sorted_eigs(rho, descending=True)


def antipassive_rearrangement(rho, spec: Spectrum | None = None) -> np.ndarray:
    if spec is not None:
        _dims_match(rho, spec)
    return _sorted_eigs(rho, descending=False)


def shannon_bits(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum() / np.log(LOG_BASE))


def entropy_bits(rho) -> float:
    return shannon_bits(eigen_spectrum(rho).ascending)


def coherence_rel_entropy_bits(rho) -> float:
    """Relative entropy of coherence, S(dephased) - S(rho)."""
    return shannon_bits(np.clip(dephase(rho), 0.0, None)) - entropy_bits(rho)


def pure_from_amplitudes(probs) -> np.ndarray:
    """Rank-one state with amplitudes sqrt(p_k) on each level."""
    p = check_probs(probs)
    amp = np.sqrt(np.clip(p, 0.0, None))
    return np.outer(amp, amp).astype(complex)


def basis_state(dim: int, k: int) -> np.ndarray:
    """Projector onto level ``k`` (0-indexed)."""
    r = np.zeros((dim, dim), dtype=complex)
    r[k, k] = 1.0
    return r


def maximally_mixed(dim: int) -> np.ndarray:
    return np.full(dim, 1.0 / dim)


# --- random test ensembles -------------------------------------------------

def haar_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def hilbert_schmidt_state(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    w = g @ g.conj().T
    return w / np.trace(w).real


def random_probs(dim: int, rng: np.random.Generator) -> np.ndarray:
    return rng.dirichlet(np.ones(dim))


def _mix_to_energy(sigma, spec: Spectrum, E: float):
    """Mix ``sigma`` with the ground or top level so the mean energy is E."""
    e0 = mean_energy(sigma, spec)
    if np.isclose(e0, E, rtol=0, atol=1e-15):
        return sigma
    if e0 > E:
        anchor, e_anchor = 0, spec.eps_min
    else:
        anchor, e_anchor = spec.dim - 1, spec.eps_max
    t = (E - e_anchor) / (e0 - e_anchor)
    t = min(max(t, 0.0), 1.0)
    if np.ndim(sigma) == 1:
        out = t * np.asarray(sigma, dtype=float)
        out[anchor] += 1.0 - t
    else:
        out = t * sigma
        out[anchor, anchor] += 1.0 - t
    return out


def sample_state_at_energy(spec: Spectrum, E: float, seed, kind: str | None = None) -> np.ndarray:
    """Random density matrix with mean energy ``E``.

    ``kind`` is one of ``"pure"``, ``"mixed"``, ``"diagonal"``; when omitted
    it is drawn from the generator. Deterministic given ``seed``.
    """
    E = spec.check_energy(E)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if kind is None:
        kind = ("pure", "mixed", "diagonal")[rng.integers(3)]
    d = spec.dim
    if kind == "pure":
        sigma = haar_pure_state(d, rng)
    elif kind == "mixed":
        sigma = hilbert_schmidt_state(d, rng, rank=int(rng.integers(1, d + 1)))
    elif kind == "diagonal":
        sigma = np.diag(random_probs(d, rng)).astype(complex)
    else:
        raise ValueError(f"unknown state kind {kind!r}")
    return _hermitize(_mix_to_energy(sigma, spec, E))


def sample_diagonal_at_energy(spec: Spectrum, E: float, seed) -> np.ndarray:
    """Random population vector with mean energy ``E``."""
    E = spec.check_energy(E)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return _mix_to_energy(random_probs(spec.dim, rng), spec, E)


# --- serialization ---------------------------------------------------------

def density_matrix_to_json(rho) -> str:
    r = as_matrix(rho)
    return json.dumps({"re": np.real(r).tolist(), "im": np.imag(r).tolist()})


def density_matrix_from_obj(obj) -> np.ndarray:
    if not isinstance(obj, dict) or "re" not in obj:
        raise InvalidStateError("schema", "expected an object with 're' (and optional 'im') arrays")
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != im.shape:
        raise InvalidStateError("shape", f"'re' shape {re.shape} differs from 'im' shape {im.shape}")
    return check_density_matrix(re + 1j * im)


def density_matrix_from_json(text: str) -> np.ndarray:
    return density_matrix_from_obj(json.loads(text))


def diagonal_state_to_json(probs) -> str:
    return json.dumps([float(x) for x in np.asarray(probs, dtype=float)])


def diagonal_state_from_json(text: str) -> np.ndarray:
    data = json.loads(text)
    if not isinstance(data, list):
        raise InvalidStateError("schema", "diagonal state must be a JSON array")
    return check_probs(data)


def state_from_json(text: str) -> np.ndarray:
    """Accept either a DensityMatrix object or a DiagonalState array."""
    data = json.loads(text)
    if isinstance(data, list):
        return check_probs(data)
    return density_matrix_from_obj(data)
