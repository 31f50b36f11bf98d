"""Brute-force oracles for cross-checking the analytic modules.

Nothing here relies on the vertex characterisation used by ``curves``:
ergotropy is recomputed by enumerating permutations, and constrained minima
by enumerating grid points or every ordering region of the simplex.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass

import numpy as np

from .spectrum import Spectrum

MAX_PERMUTATION_DIM = 8
MAX_GRID_DIM = 4
MIN_GRID_CELLS = 50


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class OracleReport:
    check: str
    method: str
    oracle_value: float
    analytic_value: float
    abs_gap: float
    samples_or_cells: int
    tolerance: float
    passed: bool

    @classmethod
    def compare(cls, check: str, method: str, oracle_value: float, analytic_value: float,
                samples_or_cells: int, tolerance: float) -> "OracleReport":
        gap = abs(oracle_value - analytic_value)
        return cls(check, method, float(oracle_value), float(analytic_value), float(gap),
                   int(samples_or_cells), float(tolerance), bool(gap <= tolerance))

    @classmethod
    def lower_bound(cls, check: str, method: str, oracle_value: float, analytic_value: float,
                    samples_or_cells: int, tolerance: float) -> "OracleReport":
        """One-sided check: the oracle may only sit above the analytic value."""
        gap = abs(oracle_value - analytic_value)
        ok = oracle_value >= analytic_value - tolerance
        return cls(check, method, float(oracle_value), float(analytic_value), float(gap),
                   int(samples_or_cells), float(tolerance), bool(ok))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _probs(probs, spec: Spectrum) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.shape != (spec.dim,):
        raise ValueError(f"expected {spec.dim} populations, got shape {p.shape}")
    return p


def ergotropy_permutation_oracle(probs, spec: Spectrum) -> float:
    """E minus the lowest energy reachable by permuting the populations."""
    p = _probs(probs, spec)
    d = spec.dim
    if d > MAX_PERMUTATION_DIM:
        raise OracleError(f"permutation oracle limited to d <= {MAX_PERMUTATION_DIM}, got {d}")
    perms = np.array(list(itertools.permutations(range(d))))
    energies = p[perms] @ spec.levels
    return float(p @ spec.levels - energies.min())


def anti_ergotropy_permutation_oracle(probs, spec: Spectrum) -> float:
    p = _probs(probs, spec)
    d = spec.dim
    if d > MAX_PERMUTATION_DIM:
        raise OracleError(f"permutation oracle limited to d <= {MAX_PERMUTATION_DIM}, got {d}")
    perms = np.array(list(itertools.permutations(range(d))))
    energies = p[perms] @ spec.levels
    return float(energies.max() - p @ spec.levels)


# --- grid oracle -----------------------------------------------------------

def _compositions(total: int, parts: int) -> np.ndarray:
    """All non-negative integer rows of length ``parts`` summing to at most ``total``."""
    if parts == 0:
        return np.zeros((1, 0), dtype=np.int64)
    rows = [np.arange(total + 1, dtype=np.int64)[:, None]]
    for _ in range(parts - 1):
        prev = rows[-1]
        used = prev.sum(axis=1)
        counts = total - used + 1
        rep = np.repeat(prev, counts, axis=0)
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        nxt = np.arange(rep.shape[0]) - starts
        rows.append(np.hstack([rep, nxt[:, None]]))
    return rows[-1]


def grid_slice(spec: Spectrum, E: float, cells_per_dim: int) -> np.ndarray:
    """Grid points of the probability simplex whose energy is within half a
    cell width of ``E``. Returns integer counts (rows sum to cells_per_dim).

    The cell energy width is span / cells_per_dim, the energy change of moving
    one cell of weight from the lowest to the highest level.
    """
    n = int(cells_per_dim)
    d = spec.dim
    lv = spec.levels
    half = 0.5 * spec.span / n
    if d == 1:
        return np.array([[n]], dtype=np.int64)
    # enumerate the first d-2 coordinates, solve the slab for coordinate d-1
    head = _compositions(n, d - 2)
    rest = n - head.sum(axis=1)
    base = head @ lv[: d - 2] + rest * lv[-1]  # energy * n with k_{d-1} = 0
    coef = lv[d - 2] - lv[d - 1]  # energy * n per unit of k_{d-1}, <= 0
    lo_e, hi_e = (E - half) * n, (E + half) * n
    if coef == 0.0:
        ok = (base >= lo_e) & (base <= hi_e)
        kmin = np.where(ok, 0, 1)
        kmax = np.where(ok, rest, 0)
    else:
        # base + coef*k in [lo_e, hi_e]  with coef < 0
        kmin = np.ceil((base - hi_e) / -coef - 1e-9).astype(np.int64)
        kmax = np.floor((base - lo_e) / -coef + 1e-9).astype(np.int64)
        kmin = np.maximum(kmin, 0)
        kmax = np.minimum(kmax, rest)
    counts = np.maximum(kmax - kmin + 1, 0)
    if counts.sum() == 0:
        return np.zeros((0, d), dtype=np.int64)
    rep_head = np.repeat(head, counts, axis=0)
    rep_rest = np.repeat(rest, counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    k = np.repeat(kmin, counts) + (np.arange(counts.sum()) - starts)
    pts = np.hstack([rep_head, k[:, None], (rep_rest - k)[:, None]])
    # the 1e-9 widening above may admit boundary points; filter exactly
    e = pts @ lv / n
    return pts[np.abs(e - E) <= half]


def min_ergotropy_grid_oracle(spec: Spectrum, E: float, cells_per_dim: int = 400) -> float:
    """Smallest ergotropy over grid points in the energy slice at ``E``."""
    if spec.dim > MAX_GRID_DIM:
        raise OracleError(f"grid oracle limited to d <= {MAX_GRID_DIM}, got {spec.dim}")
    if cells_per_dim < MIN_GRID_CELLS:
        raise OracleError(f"cells_per_dim must be >= {MIN_GRID_CELLS}")
    pts = grid_slice(spec, E, cells_per_dim)
    if pts.shape[0] == 0:
        raise OracleError(f"no grid point within the energy slice at E={E!r}")
    p = pts / float(cells_per_dim)
    energy = p @ spec.levels
    passive = -np.sort(-p, axis=1) @ spec.levels
    return float((energy - passive).min())


def min_anti_ergotropy_grid_oracle(spec: Spectrum, E: float, cells_per_dim: int = 400) -> float:
    if spec.dim > MAX_GRID_DIM:
        raise OracleError(f"grid oracle limited to d <= {MAX_GRID_DIM}, got {spec.dim}")
    if cells_per_dim < MIN_GRID_CELLS:
        raise OracleError(f"cells_per_dim must be >= {MIN_GRID_CELLS}")
    pts = grid_slice(spec, E, cells_per_dim)
    if pts.shape[0] == 0:
        raise OracleError(f"no grid point within the energy slice at E={E!r}")
    p = pts / float(cells_per_dim)
    energy = p @ spec.levels
    antipassive = np.sort(p, axis=1) @ spec.levels
    return float((antipassive - energy).min())


def grid_halfwidth(spec: Spectrum, cells_per_dim: int) -> float:
    """Energy half-width of the slice kept by the grid oracles."""
    return 0.5 * spec.span / int(cells_per_dim)


def grid_slack(spec: Spectrum, E: float, cells_per_dim: int = 400, mode: str = "extract") -> float:
    """Tolerance for comparing a grid oracle against the exact minimum.

    Slice points sit anywhere in [E - h, E + h], so the grid minimum can
    undershoot by the rise of the exact minimum over that window. The
    ``span / cells`` term covers the lattice spacing on the other side.
    The exact minimum comes from the region oracle, not the curve module.
    """
    h = grid_halfwidth(spec, cells_per_dim)
    oracle = min_ergotropy_region_oracle if mode == "extract" else min_anti_ergotropy_region_oracle
    lo = max(E - h, spec.eps_min)
    hi = min(E + h, spec.eps_max)
    window = abs(oracle(spec, hi) - oracle(spec, lo))
    return window + spec.span / int(cells_per_dim)


# --- ordering-region oracle ------------------------------------------------

def _region_minimum(spec: Spectrum, E: float, descending: bool) -> float:
    """Exact constrained minimum by enumerating every ordering region.

    On the region where populations follow the order sigma, the passive (or
    anti-passive) energy is linear, so ergotropy is linear too. The region is
    a simplex whose vertices are uniform mixtures over the first j levels of
    sigma; its intersection with the energy plane has vertices on the edges
    between a vertex below E and one above it.
    """
    d = spec.dim
    if d > MAX_PERMUTATION_DIM:
        raise OracleError(f"region oracle limited to d <= {MAX_PERMUTATION_DIM}, got {d}")
    E = spec.check_energy(E)
    lv = spec.levels
    tol = 1e-12 * max(abs(spec.eps_min), abs(spec.eps_max), 1.0)
    sorted_levels = lv if descending else lv[::-1]
    best = np.inf
    for sigma in itertools.permutations(range(d)):
        sig = np.array(sigma)
        # vertex j: weight 1/j on sig[:j]
        cum = np.cumsum(lv[sig])
        cum_sorted = np.cumsum(sorted_levels)
        j = np.arange(1, d + 1)
        energy = cum / j
        rearranged = cum_sorted / j
        value = energy - rearranged if descending else rearranged - energy
        below = np.flatnonzero(energy <= E + tol)
        above = np.flatnonzero(energy >= E - tol)
        on = np.flatnonzero(np.abs(energy - E) <= tol)
        if on.size:
            best = min(best, value[on].min())
        if below.size and above.size:
            eb = energy[below][:, None]
            ea = energy[above][None, :]
            span = ea - eb
            ok = span > tol
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(ok, (ea - E) / np.where(ok, span, 1.0), np.nan)
            mixed = t * value[below][:, None] + (1 - t) * value[above][None, :]
            if np.any(ok):
                best = min(best, np.nanmin(np.where(ok, mixed, np.nan)))
    return float(max(best, 0.0))


def min_ergotropy_region_oracle(spec: Spectrum, E: float) -> float:
    """Exact minimum ergotropy over diagonal states at energy E (d <= 8)."""
    return _region_minimum(spec, E, descending=True)


def min_anti_ergotropy_region_oracle(spec: Spectrum, E: float) -> float:
    return _region_minimum(spec, E, descending=False)


# --- sampling oracle -------------------------------------------------------

def worst_case_sampling_oracle(channel, spec: Spectrum, E: float, n: int, seed, mode: str = "extract") -> float:
    """Smallest +-delta_E over ``n`` random states at energy E.

    An upper estimate of the true worst case: sampling never finds a state
    below the minimum.
    """
    from .protocols import delta_E
    from .state import sample_state_at_energy

    if n < 1:
        raise ValueError("n must be >= 1")
    E = float(E)
    if not (spec.eps_min < E < spec.eps_max):
        raise ValueError(f"energy {E!r} must lie strictly inside ({spec.eps_min!r}, {spec.eps_max!r})")
    sign = {"extract": 1.0, "inject": -1.0}.get(mode)
    if sign is None:
        raise ValueError(f"mode must be 'extract' or 'inject', got {mode!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    best = np.inf
    for _ in range(int(n)):
        rho = sample_state_at_energy(spec, E, rng)
        best = min(best, sign * delta_E(rho, channel, spec))
    return float(best)


# --- suite -----------------------------------------------------------------

def random_spectrum(rng: np.random.Generator, dims=(2, 6), high: float = 10.0) -> Spectrum:
    d = int(rng.integers(dims[0], dims[1] + 1))
    return Spectrum(np.sort(rng.uniform(0.0, high, d)))


def _worst(reports: list[OracleReport], check: str, method: str, count: int) -> OracleReport:
    """Fold per-instance reports into one: failing first, then the largest gap."""
    worst = max(reports, key=lambda r: (not r.passed, r.abs_gap))
    return OracleReport(check, method, worst.oracle_value, worst.analytic_value, worst.abs_gap,
                        count, worst.tolerance, all(r.passed for r in reports))


def run_suite(seed=0, n_spectra: int = 50, grid_cells: int = 200, n_states: int = 200,
              n_samples: int = 200) -> list[OracleReport]:
    """Every oracle against its analytic counterpart; one report per check."""
    from .curves import min_anti_ergotropy, min_ergotropy
    from .ergotropy import anti_ergotropy, ergotropy
    from .protocols import u_rev, worst_case_delta_E
    from .state import random_probs

    rng = np.random.default_rng(seed)
    out = []

    perm, aperm = [], []
    for _ in range(n_states):
        spec = random_spectrum(rng)
        p = random_probs(spec.dim, rng)
        perm.append(OracleReport.compare("ergotropy", "permutations", ergotropy_permutation_oracle(p, spec),
                                         ergotropy(p, spec), 1, 1e-12))
        aperm.append(OracleReport.compare("anti_ergotropy", "permutations",
                                          anti_ergotropy_permutation_oracle(p, spec),
                                          anti_ergotropy(p, spec), 1, 1e-12))
    out.append(_worst(perm, "ergotropy", "permutations", n_states))
    out.append(_worst(aperm, "anti_ergotropy", "permutations", n_states))

    region, aregion, grid = [], [], []
    for _ in range(n_spectra):
        spec = random_spectrum(rng)
        E = float(rng.uniform(spec.eps_min, spec.eps_max))
        region.append(OracleReport.compare("min_ergotropy", "ordering_regions",
                                           min_ergotropy_region_oracle(spec, E), min_ergotropy(spec, E),
                                           1, 1e-10))
        aregion.append(OracleReport.compare("min_anti_ergotropy", "ordering_regions",
                                            min_anti_ergotropy_region_oracle(spec, E),
                                            min_anti_ergotropy(spec, E), 1, 1e-10))
        if spec.dim <= MAX_GRID_DIM:
            grid.append(OracleReport.compare("min_ergotropy_grid", "grid",
                                             min_ergotropy_grid_oracle(spec, E, grid_cells),
                                             min_ergotropy(spec, E), grid_cells,
                                             grid_slack(spec, E, grid_cells)))
    out.append(_worst(region, "min_ergotropy", "ordering_regions", n_spectra))
    out.append(_worst(aregion, "min_anti_ergotropy", "ordering_regions", n_spectra))
    if grid:
        out.append(_worst(grid, "min_ergotropy_grid", "grid", len(grid)))

    sampled = []
    for _ in range(max(1, n_spectra // 10)):
        spec = random_spectrum(rng)
        E = float(rng.uniform(spec.eps_min, spec.eps_max))
        ch = u_rev(spec.dim)
        exact = worst_case_delta_E(ch, spec, E).value
        est = worst_case_sampling_oracle(ch, spec, E, n_samples, rng)
        sampled.append(OracleReport.lower_bound("worst_case_rev", "sampling", est, exact, n_samples, 1e-8))
    out.append(_worst(sampled, "worst_case_rev", "sampling", len(sampled) * n_samples))
    return out
