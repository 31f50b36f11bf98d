"""Fixed extraction/injection protocols and their worst-case performance.

The worst case of a channel over all states with mean energy E is a linear
minimisation over the state space with one energy constraint. It is computed
through its Lagrangian dual, a concave scalar function of the multiplier,
maximised by golden-section search.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.optimize import brentq

from .curves import min_anti_ergotropy, min_ergotropy
from .spectrum import Spectrum, check_qutrit_params, qutrit_spectrum
from .state import _hermitize, as_matrix, mean_energy, shannon_bits

Mode = Literal["extract", "inject"]

UNITARY_TOL = 1e-10
WEIGHT_TOL = 1e-12
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
MAX_BRACKET_DOUBLINGS = 60


class DegenerateDualError(ArithmeticError):
    """The dual problem is unbounded or its optimum yields no feasible witness."""


# --- channels --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class UnitaryChannel:
    matrix: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.matrix, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f"unitary must be square, got shape {u.shape}")
        err = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
        if err > UNITARY_TOL:
            raise ValueError(f"matrix is not unitary: max |U^H U - I| = {err:.3e}")
        u = u.copy()
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def members(self) -> list[tuple[float, "UnitaryChannel"]]:
        return [(1.0, self)]


@dataclass(frozen=True, eq=False)
class RandomUnitaryChannel:
    """Finite mixture sum_i w_i U_i . U_i^H."""

    members: tuple[tuple[float, UnitaryChannel], ...] = field(default_factory=tuple)

    def __post_init__(self):
        mem = tuple((float(w), u if isinstance(u, UnitaryChannel) else UnitaryChannel(u))
                    for w, u in self.members)
        if not mem:
            raise ValueError("random unitary channel needs at least one member")
        weights = np.array([w for w, _ in mem])
        if weights.min() < 0:
            raise ValueError("weights must be non-negative")
        if abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {weights.sum():.15g}, expected 1")
        dims = {u.dim for _, u in mem}
        if len(dims) != 1:
            raise ValueError(f"members have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "members", mem)

    @property
    def dim(self) -> int:
        return self.members[0][1].dim


Channel = UnitaryChannel | RandomUnitaryChannel


def identity_channel(d: int) -> UnitaryChannel:
    return UnitaryChannel(np.eye(d))


def u_rev(d: int) -> UnitaryChannel:
    """Permutation sending level k to level d+1-k."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return UnitaryChannel(np.eye(d)[::-1])


def _check_dim(channel: Channel, d: int) -> None:
    if channel.dim != d:
        raise ValueError(f"dimension mismatch: channel acts on {channel.dim} levels, state has {d}")


def apply(channel: Channel, rho) -> np.ndarray:
    r = as_matrix(rho)
    _check_dim(channel, r.shape[0])
    out = np.zeros_like(r)
    for w, u in channel.members:
        U = u.matrix
        out += w * (U @ r @ U.conj().T)
    return _hermitize(out)


def delta_E(rho, channel: Channel, spec: Spectrum) -> float:
    """Mean energy before minus mean energy after the channel."""
    r = as_matrix(rho)
    _check_dim(channel, spec.dim)
    if r.shape[0] != spec.dim:
        raise ValueError(f"dimension mismatch: state has {r.shape[0]} levels, spectrum has {spec.dim}")
    return mean_energy(r, spec) - mean_energy(apply(channel, r), spec)


def energy_change_operator(channel: Channel, spec: Spectrum) -> np.ndarray:
    """Hermitian A with delta_E(rho) = Tr[rho A], i.e. H - sum_i w_i U_i^H H U_i."""
    _check_dim(channel, spec.dim)
    H = spec.hamiltonian()
    A = H.copy()
    for w, u in channel.members:
        U = u.matrix
        A -= w * (U.conj().T @ H @ U)
    return _hermitize(A)


# --- worst case via the Lagrangian dual ------------------------------------

@dataclass(frozen=True)
class WorstCaseResult:
    value: float
    dual_multiplier: float
    witness_state: np.ndarray
    energy: float
    mode: str

    def to_dict(self) -> dict:
        w = self.witness_state
        return {
            "value": self.value,
            "dual_multiplier": self.dual_multiplier,
            "energy": self.energy,
            "mode": self.mode,
            "witness_state": {"re": np.real(w).tolist(), "im": np.imag(w).tolist()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _sign(mode: str) -> float:
    if mode == "extract":
        return 1.0
    if mode == "inject":
        return -1.0
    raise ValueError(f"mode must be 'extract' or 'inject', got {mode!r}")


def golden_section_max(f, lo: float, hi: float, tol: float, max_iter: int = 500):
    """Maximise a unimodal ``f`` on [lo, hi]; returns (argmax, max)."""
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def _level_gap(spec: Spectrum) -> float:
    diffs = np.diff(np.unique(spec.levels))
    floor = 1e-6 * max(spec.span, 1e-300)
    return max(float(diffs.min()) if diffs.size else spec.span, floor)


def _dual_objective(A: np.ndarray, H: np.ndarray, E: float):
    def g(lam: float) -> float:
        return lam * E + float(np.linalg.eigvalsh(A - lam * H)[0])

    def slope(lam: float) -> float:
        vals, vecs = np.linalg.eigh(A - lam * H)
        v = vecs[:, 0]
        return E - float(np.real(v.conj() @ H @ v))

    return g, slope


def _witness(A: np.ndarray, H: np.ndarray, lam: float, E: float, scale: float):
    """Lowest-cost mixture of two eigenvectors of A - lam*H with energy E."""
    M = _hermitize(A - lam * H)
    vals, vecs = np.linalg.eigh(M)
    cluster_tol = 1e-12 * max(scale, float(np.abs(vals).max()))
    # rotate each near-degenerate cluster so H is diagonal inside it
    cand_val, cand_vec, cand_e = [], [], []
    start = 0
    while start < len(vals):
        stop = start + 1
        while stop < len(vals) and vals[stop] - vals[start] <= cluster_tol:
            stop += 1
        V = vecs[:, start:stop]
        e_sub, w_sub = np.linalg.eigh(_hermitize(V.conj().T @ H @ V))
        for j in range(stop - start):
            x = V @ w_sub[:, j]
            cand_vec.append(x)
            cand_val.append(float(np.real(x.conj() @ M @ x)))
            cand_e.append(float(e_sub[j]))
        start = stop
    cand_val = np.array(cand_val)
    cand_e = np.array(cand_e)
    etol = 1e-12 * scale
    best = None
    for i in range(len(cand_e)):
        if abs(cand_e[i] - E) <= etol:
            cost = cand_val[i]
            if best is None or cost < best[0]:
                best = (cost, i, i, 1.0)
        for j in range(len(cand_e)):
            if cand_e[i] < E < cand_e[j]:
                t = (cand_e[j] - E) / (cand_e[j] - cand_e[i])
                cost = t * cand_val[i] + (1 - t) * cand_val[j]
                if best is None or cost < best[0]:
                    best = (cost, i, j, t)
    if best is None:
        raise DegenerateDualError(f"no eigenvector mixture of A - lam*H reaches energy {E!r}")
    _, i, j, t = best
    xi, xj = cand_vec[i], cand_vec[j]
    rho = t * np.outer(xi, xi.conj()) + (1 - t) * np.outer(xj, xj.conj())
    return _hermitize(rho)


def worst_case_delta_E(channel: Channel, spec: Spectrum, E: float, mode: Mode = "extract") -> WorstCaseResult:
    """Minimum of +-delta_E over all states with mean energy E.

    Solves max_lam [lam*E + lambda_min(A - lam*H)], A = +-(energy change
    operator). Boundary energies are evaluated directly on the (possibly
    degenerate) extreme eigenspace.
    """
    sign = _sign(mode)
    E = spec.check_energy(E)
    A = sign * energy_change_operator(channel, spec)
    H = spec.hamiltonian()
    scale = max(1.0, np.abs(A).max(), np.abs(spec.levels).max())
    edge_tol = 1e-12 * scale

    if spec.span == 0.0 or E - spec.eps_min <= edge_tol or spec.eps_max - E <= edge_tol:
        target = spec.eps_min if E - spec.eps_min <= spec.eps_max - E else spec.eps_max
        idx = np.flatnonzero(np.abs(spec.levels - target) <= edge_tol)
        block = A[np.ix_(idx, idx)]
        vals, vecs = np.linalg.eigh(block)
        v = np.zeros(spec.dim, dtype=complex)
        v[idx] = vecs[:, 0]
        return WorstCaseResult(float(vals[0]), 0.0, np.outer(v, v.conj()), E, mode)

    g, slope = _dual_objective(A, H, E)
    L = 1.0 + 10.0 * np.abs(A).max() / _level_gap(spec)
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if slope(-L) >= 0 and slope(L) <= 0:
            break
        L *= 2.0
    else:
        raise DegenerateDualError("dual bracket did not close after 60 doublings")

    lam, val = golden_section_max(g, -L, L, tol=1e-13 * L)
    # golden section only pins a smooth maximum to ~sqrt(eps); the
    # supergradient sign is sharper, so bisect on it as well
    lo, hi = _bisect_slope(slope, -L, L)
    for x in (lo, hi, -L, L, 0.0):
        gx = g(x)
        if gx > val:
            lam, val = x, gx
    try:
        witness = _bracket_witness(A, H, E, lo, hi)
    except DegenerateDualError:
        witness = _witness(A, H, lam, E, scale)
    return WorstCaseResult(float(val), float(lam), witness, E, mode)


def _bisect_slope(slope, lo: float, hi: float, iters: int = 200) -> tuple[float, float]:
    """Shrink [lo, hi] keeping slope(lo) >= 0 >= slope(hi)."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if slope(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def _bracket_witness(A: np.ndarray, H: np.ndarray, E: float, lo: float, hi: float) -> np.ndarray:
    """Mix the minimising eigenvectors at multipliers on both sides of the optimum."""
    vecs = [np.linalg.eigh(A - x * H)[1][:, 0] for x in (lo, hi)]
    e = [float(np.real(v.conj() @ H @ v)) for v in vecs]
    if not e[0] <= E <= e[1]:
        raise DegenerateDualError(f"supergradient bracket does not straddle energy {E!r}")
    t = 1.0 if e[1] == e[0] else (e[1] - E) / (e[1] - e[0])
    rho = t * np.outer(vecs[0], vecs[0].conj()) + (1 - t) * np.outer(vecs[1], vecs[1].conj())
    return _hermitize(rho)


# --- qutrit protocols ------------------------------------------------------

def _qutrit(eps: float, delta: float):
    check_qutrit_params(eps, delta)
    spec = qutrit_spectrum(eps, delta)
    e2, e3 = spec.levels[1], spec.levels[2]
    return spec, float(e2), float(e3)


def _check_qutrit_energy(spec: Spectrum, E: float) -> float:
    return spec.check_energy(E)


def qutrit_worst_rev(eps: float, delta: float, E: float) -> float:
    """Worst-case extraction by population reversal, switched off (0) below
    the energy where reversal would charge the worst state."""
    spec, e2, e3 = _qutrit(eps, delta)
    E = _check_qutrit_energy(spec, E)
    if delta <= 0:
        return 0.0 if E <= eps else 2.0 * E - 2.0 * eps
    return 0.0 if E <= e2 else e3 / (e3 - e2) * (E - e2)


def qutrit_qbar(delta: float) -> float:
    """Mixing weight that makes the two-level rotation exact on diagonal states."""
    s = 0.5 * (1.0 + delta)
    if delta <= 0:
        return (1.0 - 2.0 * s) / ((1.0 - s) * (2.0 - s))
    return (2.0 * s - 1.0) / (s * (s + 1.0))


def _two_level_block(q: float, alpha: float, theta: float, phi: float) -> np.ndarray:
    """Columns |psi>, |psi_perp> in the two-level subspace basis."""
    psi = np.exp(1j * theta) * np.array([math.sqrt(1 - q), np.exp(1j * phi) * math.sqrt(q)])
    perp = np.exp(1j * alpha) * np.array([math.sqrt(q), -np.exp(1j * phi) * math.sqrt(1 - q)])
    return np.column_stack([psi, perp])


def _qutrit_segment(spec: Spectrum, delta: float, E: float) -> str:
    """'idle', 'rotate' (rev times two-level rotation) or 'rev'."""
    mean = spec.eps_mean
    if E < mean:
        return "idle"
    if delta <= 0 or E <= 1.5 * mean:
        return "rotate"
    return "rev"


def qutrit_diag_optimal_unitary(eps: float, delta: float, E: float, alpha: float = 0.0,
                                theta: float = 0.0, phi: float = 0.0) -> UnitaryChannel:
    """Energy-dependent unitary extracting exactly the minimum ergotropy from
    every diagonal state of mean energy E."""
    spec, _, _ = _qutrit(eps, delta)
    E = _check_qutrit_energy(spec, E)
    seg = _qutrit_segment(spec, delta, E)
    if seg == "idle":
        return identity_channel(3)
    rev = u_rev(3).matrix
    if seg == "rev":
        return UnitaryChannel(rev)
    block = _two_level_block(qutrit_qbar(delta), alpha, theta, phi)
    U2 = np.eye(3, dtype=complex)
    sub = [0, 1] if delta <= 0 else [1, 2]
    U2[np.ix_(sub, sub)] = block
    return UnitaryChannel(rev @ U2)


def _penalty_segment(spec: Spectrum, delta: float, E: float) -> float:
    E = _check_qutrit_energy(spec, E)
    mean = spec.eps_mean
    hi = spec.eps_max if delta <= 0 else 1.5 * mean
    slack = 1e-12 * (spec.eps_max + 1.0)
    if not (mean - slack <= E <= hi + slack):
        raise ValueError(f"energy {E!r} outside the rotation segment [{mean!r}, {hi!r}]")
    return min(max(E, mean), hi)


def _max_population_product(spec: Spectrum, delta: float, E: float) -> np.ndarray:
    """Populations at energy E maximising lam2*lam3 (delta > 0) or lam1*lam2."""
    _, e2, e3 = spec.levels
    if delta <= 0:
        a = 1.0 - E / e3
        b = 1.0 - e2 / e3
        l2 = a / (2.0 * b)
        l3 = (E - l2 * e2) / e3
        return np.array([1.0 - l2 - l3, l2, l3])
    knee = e2 * e3 / (1.5 * spec.eps_mean)
    if E <= knee:
        l2, l3 = E / (2.0 * e2), E / (2.0 * e3)
        return np.array([1.0 - l2 - l3, l2, l3])
    l3 = (E - e2) / (e3 - e2)
    return np.array([0.0, 1.0 - l3, l3])


def qutrit_coherence_penalty(eps: float, delta: float, E: float) -> float:
    """Largest energy loss coherences can cause under the diagonal-optimal
    unitary at energy E (within its rotation segment)."""
    spec, e2, e3 = _qutrit(eps, delta)
    E = _penalty_segment(spec, delta, E)
    q = qutrit_qbar(delta)
    root = math.sqrt(q * (1.0 - q))
    if delta <= 0:
        s = e2 / e3
        return e3 * (1.0 - s) * root * (e3 - E) / math.sqrt(e3 * (e3 - e2))
    knee = e2 * e3 / (1.5 * spec.eps_mean)
    if E <= knee:
        f = E / (2.0 * math.sqrt(e2 * e3))
    else:
        f = math.sqrt(max((E - e2) * (e3 - E), 0.0)) / (e3 - e2)
    return 2.0 * e2 * root * f


def adversarial_coherent_state(eps: float, delta: float, E: float, alpha: float = 0.0,
                               theta: float = 0.0) -> np.ndarray:
    """State at energy E whose coherence costs the full penalty under the
    diagonal-optimal unitary built with the same (alpha, theta)."""
    spec, _, _ = _qutrit(eps, delta)
    E = _penalty_segment(spec, delta, E)
    lam = _max_population_product(spec, delta, E)
    lam = np.clip(lam, 0.0, None)
    rho = np.diag(lam).astype(complex)
    i, j = (0, 1) if delta <= 0 else (1, 2)
    c = math.sqrt(lam[i] * lam[j]) * np.exp(1j * (alpha - theta))
    rho[i, j] = c
    rho[j, i] = np.conj(c)
    return rho


def qutrit_random_unitary_channel(eps: float, delta: float, E: float, alpha: float = 0.0,
                                  theta: float = 0.0, phi: float = 0.0) -> RandomUnitaryChannel:
    """Equal mixture of the diagonal-optimal unitary at phases alpha and alpha+pi."""
    u0 = qutrit_diag_optimal_unitary(eps, delta, E, alpha, theta, phi)
    u1 = qutrit_diag_optimal_unitary(eps, delta, E, alpha + math.pi, theta, phi)
    return RandomUnitaryChannel(((0.5, u0), (0.5, u1)))


def qutrit_min_diag_optimal(eps: float, delta: float, E: float) -> float:
    """Worst-case extraction of the diagonal-optimal unitary: minimum ergotropy
    minus the coherence penalty inside the rotation segment."""
    spec, _, _ = _qutrit(eps, delta)
    E = _check_qutrit_energy(spec, E)
    seg = _qutrit_segment(spec, delta, E)
    base = min_ergotropy(spec, E)
    if seg == "rotate":
        return base - qutrit_coherence_penalty(eps, delta, E)
    return base


# --- Gibbs state and the Pinsker-type lower bound --------------------------

def _boltzmann(levels: np.ndarray, beta: float) -> np.ndarray:
    x = -beta * levels
    x -= x.max()
    w = np.exp(x)
    return w / w.sum()


def gibbs_beta(spec: Spectrum, E: float) -> float:
    """Inverse temperature (negative above eps_mean) with mean energy E."""
    E = float(E)
    if not (spec.eps_min < E < spec.eps_max):
        raise ValueError(f"energy {E!r} must lie strictly inside ({spec.eps_min!r}, {spec.eps_max!r})")
    lv = spec.levels
    if E == spec.eps_mean:
        return 0.0

    def resid(beta: float) -> float:
        return float(_boltzmann(lv, beta) @ lv) - E

    # E(beta) decreases monotonically; walk out until the root is bracketed
    step = 1.0 / max(spec.span, 1e-300)
    if E < spec.eps_mean:
        lo, hi = 0.0, step
        while resid(hi) > 0:
            lo, hi = hi, 2.0 * hi
    else:
        lo, hi = -step, 0.0
        while resid(lo) < 0:
            hi, lo = lo, 2.0 * lo
    return brentq(resid, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def gibbs_state(spec: Spectrum, E: float) -> np.ndarray:
    return _boltzmann(spec.levels, gibbs_beta(spec, E))


def pinsker_lower_bound(spec: Spectrum, E: float, mode: Mode = "extract") -> float:
    """Minimum (anti-)ergotropy minus sqrt(2 ln 2) * eps_max * sqrt(S_bits(Gibbs))."""
    sign = _sign(mode)
    entropy = shannon_bits(gibbs_state(spec, E))
    base = min_ergotropy(spec, E) if sign > 0 else min_anti_ergotropy(spec, E)
    return base - math.sqrt(2.0 * math.log(2.0)) * spec.eps_max * math.sqrt(entropy)


# --- serialization ---------------------------------------------------------

def channel_to_json(channel: Channel) -> str:
    return json.dumps({"members": [
        {"weight": w, "re": np.real(u.matrix).tolist(), "im": np.imag(u.matrix).tolist()}
        for w, u in channel.members
    ]})


def channel_from_obj(obj) -> Channel:
    if not isinstance(obj, dict) or "members" not in obj:
        raise ValueError("channel JSON must be an object with a 'members' array")
    members = []
    for m in obj["members"]:
        re = np.asarray(m["re"], dtype=float)
        im = np.asarray(m.get("im", np.zeros_like(re)), dtype=float)
        members.append((float(m.get("weight", 1.0)), UnitaryChannel(re + 1j * im)))
    if len(members) == 1 and abs(members[0][0] - 1.0) <= WEIGHT_TOL:
        return members[0][1]
    return RandomUnitaryChannel(tuple(members))


def channel_from_json(text: str) -> Channel:
    return channel_from_obj(json.loads(text))


def mixture(members: Sequence[tuple[float, np.ndarray | UnitaryChannel]]) -> RandomUnitaryChannel:
    return RandomUnitaryChannel(tuple(members))
