"""Energy-constrained minimum ergotropy / anti-ergotropy curves.

Both curves are convex and piecewise linear in the mean energy. Their
breakpoints are simplex vertices: uniform mixtures over the top (for
ergotropy) or bottom (for anti-ergotropy) levels. The envelope is built by
scanning slopes from the leftmost candidate, O(d^2).
"""

from __future__ import annotations

import bisect
import csv
import io
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .spectrum import Spectrum, is_antisymmetric

Mode = Literal["extract", "inject"]

# relative tolerance under which two slopes count as equal
SLOPE_TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EnergyCurve:
    """Convex piecewise-linear curve stored as breakpoints.

    ``vertices`` holds the 1-based simplex-vertex index behind each
    breakpoint; ``kind`` is ``"ergotropy"`` or ``"anti_ergotropy"``.
    ``lower``/``upper`` bound the energies of the originating spectrum.
    """

    energies: tuple[float, ...]
    values: tuple[float, ...]
    vertices: tuple[int, ...]
    kind: str
    lower: float
    upper: float

    @property
    def breakpoints(self) -> list[tuple[float, float]]:
        return list(zip(self.energies, self.values))

    @property
    def domain(self) -> tuple[float, float]:
        return self.energies[0], self.energies[-1]

    def slopes(self) -> np.ndarray:
        e = np.asarray(self.energies)
        v = np.asarray(self.values)
        return np.diff(v) / np.diff(e)

    def __call__(self, E: float) -> float:
        return evaluate_curve(self, E)

    def to_json(self) -> str:
        return json.dumps({"breakpoints": [[e, v] for e, v in self.breakpoints]})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["E", "value"])
        for e, v in self.breakpoints:
            w.writerow([repr(e), repr(v)])
        return buf.getvalue()


def breakpoints_from_json(text: str) -> list[tuple[float, float]]:
    return [(float(e), float(v)) for e, v in json.loads(text)["breakpoints"]]


def breakpoints_from_csv(text: str) -> list[tuple[float, float]]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [(float(r["E"]), float(r["value"])) for r in rows]


# --- simplex vertices ------------------------------------------------------

def _check_k(spec: Spectrum, k: int) -> None:
    if not (1 <= k <= spec.dim):
        raise ValueError(f"vertex index {k} outside 1..{spec.dim}")


def antipassive_vertex(spec: Spectrum, k: int) -> np.ndarray:
    """Uniform mixture over levels k..d (1-based)."""
    _check_k(spec, k)
    p = np.zeros(spec.dim)
    p[k - 1:] = 1.0 / (spec.dim + 1 - k)
    return p


def passive_vertex(spec: Spectrum, k: int) -> np.ndarray:
    """Uniform mixture over levels 1..k (1-based)."""
    _check_k(spec, k)
    p = np.zeros(spec.dim)
    p[:k] = 1.0 / k
    return p


def antipassive_candidates(spec: Spectrum) -> tuple[np.ndarray, np.ndarray]:
    """Energies and ergotropies of the anti-passive vertices, k = 1..d."""
    lv = spec.levels
    d = spec.dim
    energies = np.empty(d)
    values = np.empty(d)
    for i in range(d):
        n = d - i
        upper = lv[i:].sum() / n
        lower = lv[:n].sum() / n
        energies[i] = upper
        values[i] = upper - lower
    _snap(energies, spec.eps_max, spec)
    return energies, values


def passive_candidates(spec: Spectrum) -> tuple[np.ndarray, np.ndarray]:
    """Energies and anti-ergotropies of the passive vertices, k = 1..d."""
    lv = spec.levels
    d = spec.dim
    energies = np.empty(d)
    values = np.empty(d)
    for i in range(d):
        n = i + 1
        lower = lv[:n].sum() / n
        upper = lv[d - n:].sum() / n
        energies[i] = lower
        values[i] = upper - lower
    _snap(energies, spec.eps_min, spec)
    return energies, values


def _snap(energies: np.ndarray, target: float, spec: Spectrum) -> None:
    # averages over degenerate extreme levels can miss the level by an ulp
    tol = 1e-13 * max(abs(spec.eps_min), abs(spec.eps_max), 1.0)
    energies[np.abs(energies - target) <= tol] = target


# --- envelope --------------------------------------------------------------

def _lower_envelope(energies, values) -> list[int]:
    """Indices (into the inputs) of the lower convex envelope, left to right.

    Candidates sharing an energy are collapsed to the lowest value first.
    Slope ties go to the farther candidate so collinear runs collapse.
    """
    order = sorted(range(len(energies)), key=lambda i: (energies[i], values[i]))
    scale = max(abs(energies[order[0]]), abs(energies[order[-1]]), 1.0)
    pts = [order[0]]
    for i in order[1:]:
        # equal energies come from degenerate levels; keep the lower value
        if energies[i] - energies[pts[-1]] <= 1e-13 * scale:
            continue
        pts.append(i)

    hull = [pts[0]]
    pos = 0
    while pos < len(pts) - 1:
        cur = hull[-1]
        nxt = pos + 1
        m = (values[pts[nxt]] - values[cur]) / (energies[pts[nxt]] - energies[cur])
        for h in range(pos + 1, len(pts)):
            test = (values[pts[h]] - values[cur]) / (energies[pts[h]] - energies[cur])
            if test <= m + SLOPE_TIE_TOL * max(1.0, abs(m)):
                m = min(m, test)
                nxt = h
        hull.append(pts[nxt])
        pos = nxt

    return _enforce_convexity(hull, energies, values)


def _enforce_convexity(hull, energies, values) -> list[int]:
    # rounding in near-collinear runs can leave a slope one ulp out of order
    changed = True
    while changed and len(hull) > 2:
        changed = False
        for j in range(1, len(hull) - 1):
            a, b, c = hull[j - 1], hull[j], hull[j + 1]
            s1 = (values[b] - values[a]) / (energies[b] - energies[a])
            s2 = (values[c] - values[b]) / (energies[c] - energies[b])
            if s2 < s1:
                del hull[j]
                changed = True
                break
    return hull


@lru_cache(maxsize=256)
def min_ergotropy_curve(spec: Spectrum) -> EnergyCurve:
    """Lower convex envelope of the anti-passive vertices, over [eps_mean, eps_max]."""
    energies, values = antipassive_candidates(spec)
    hull = _lower_envelope(energies, values)
    return EnergyCurve(
        energies=tuple(float(energies[i]) for i in hull),
        values=tuple(max(float(values[i]), 0.0) for i in hull),
        vertices=tuple(i + 1 for i in hull),
        kind="ergotropy",
        lower=spec.eps_min,
        upper=spec.eps_max,
    )


@lru_cache(maxsize=256)
def min_anti_ergotropy_curve(spec: Spectrum) -> EnergyCurve:
    """Lower convex envelope of the passive vertices, over [eps_min, eps_mean]."""
    energies, values = passive_candidates(spec)
    hull = _lower_envelope(energies, values)
    return EnergyCurve(
        energies=tuple(float(energies[i]) for i in hull),
        values=tuple(max(float(values[i]), 0.0) for i in hull),
        vertices=tuple(i + 1 for i in hull),
        kind="anti_ergotropy",
        lower=spec.eps_min,
        upper=spec.eps_max,
    )


def _locate(curve: EnergyCurve, E: float) -> tuple[int, float] | None:
    """Segment index ``a`` and weight ``p`` on its left end, or None outside."""
    es = curve.energies
    if E < es[0] or E > es[-1]:
        return None
    if len(es) == 1:
        return 0, 1.0
    a = bisect.bisect_right(es, E) - 1
    a = min(max(a, 0), len(es) - 2)
    if E == es[a]:
        return a, 1.0
    if E == es[a + 1]:
        return a, 0.0
    p = (es[a + 1] - E) / (es[a + 1] - es[a])
    return a, p


def evaluate_curve(curve: EnergyCurve, E: float) -> float:
    E = float(E)
    slack = 1e-12 * (abs(curve.lower) + abs(curve.upper) + 1.0)
    if not (curve.lower - slack <= E <= curve.upper + slack):
        raise ValueError(f"energy {E!r} outside [{curve.lower!r}, {curve.upper!r}]")
    loc = _locate(curve, E)
    if loc is None:
        return 0.0
    a, p = loc
    if p == 1.0:
        return curve.values[a]
    if p == 0.0:
        return curve.values[a + 1]
    return p * curve.values[a] + (1.0 - p) * curve.values[a + 1]


def min_ergotropy(spec: Spectrum, E: float) -> float:
    return evaluate_curve(min_ergotropy_curve(spec), E)


def min_anti_ergotropy(spec: Spectrum, E: float) -> float:
    return evaluate_curve(min_anti_ergotropy_curve(spec), E)


# --- minimum-achieving states ---------------------------------------------

@dataclass(frozen=True)
class MinimumStateWitness:
    vertex_low: int
    vertex_high: int
    mix_probability: float
    state: np.ndarray


def _witness(curve: EnergyCurve, spec: Spectrum, E: float, vertex) -> MinimumStateWitness:
    E = spec.check_energy(E)
    loc = _locate(curve, E)
    if loc is None:
        lo, hi = curve.domain
        raise ValueError(f"energy {E!r} outside the curve domain [{lo!r}, {hi!r}]")
    a, p = loc
    if len(curve.energies) == 1 or p == 1.0:
        k = curve.vertices[a]
        return MinimumStateWitness(k, k, 1.0, vertex(spec, k))
    if p == 0.0:
        k = curve.vertices[a + 1]
        return MinimumStateWitness(k, k, 1.0, vertex(spec, k))
    ka, kb = curve.vertices[a], curve.vertices[a + 1]
    state = p * vertex(spec, ka) + (1.0 - p) * vertex(spec, kb)
    return MinimumStateWitness(ka, kb, p, state)


def min_ergotropy_state(spec: Spectrum, E: float) -> MinimumStateWitness:
    """Two-vertex anti-passive state of minimum ergotropy at energy E."""
    return _witness(min_ergotropy_curve(spec), spec, E, antipassive_vertex)


def min_anti_ergotropy_state(spec: Spectrum, E: float) -> MinimumStateWitness:
    """Two-vertex passive state of minimum anti-ergotropy at energy E."""
    return _witness(min_anti_ergotropy_curve(spec), spec, E, passive_vertex)


# --- closed forms ----------------------------------------------------------

def max_ergotropy(spec: Spectrum, E: float) -> float:
    E = spec.check_energy(E)
    return E - spec.eps_min


def max_anti_ergotropy(spec: Spectrum, E: float) -> float:
    E = spec.check_energy(E)
    return spec.eps_max - E


def coherent_max(spec: Spectrum, E: float) -> tuple[float, float]:
    """Largest coherent ergotropy and coherent anti-ergotropy at energy E."""
    E = spec.check_energy(E)
    ce = max_ergotropy(spec, E) - min_ergotropy(spec, E)
    ca = max_anti_ergotropy(spec, E) - min_anti_ergotropy(spec, E)
    return max(ce, 0.0), max(ca, 0.0)


def antisymmetric_closed_form(spec: Spectrum, E: float, mode: Mode = "extract") -> float:
    c = is_antisymmetric(spec)
    if c is None:
        raise ValueError("spectrum is not antisymmetric within tolerance")
    E = spec.check_energy(E)
    mean = spec.eps_mean
    if mode == "extract":
        return max(0.0, 2.0 * (E - mean))
    if mode == "inject":
        return max(0.0, 2.0 * (mean - E))
    raise ValueError(f"mode must be 'extract' or 'inject', got {mode!r}")
