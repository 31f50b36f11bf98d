"""Hamiltonian spectra expressed in their own (sorted) eigenbasis."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

import numpy as np


class SpectrumStats(NamedTuple):
    eps_min: float
    eps_mean: float
    eps_max: float


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Sorted energy levels of a finite-dimensional Hamiltonian.

    Input may come in any order; it is sorted at construction and the
    permutation is discarded. Degenerate levels are kept as given.
    """

    levels: np.ndarray

    def __init__(self, levels: Iterable[float]):
        arr = np.asarray(list(levels) if not isinstance(levels, np.ndarray) else levels, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("spectrum needs at least one level")
        if not np.all(np.isfinite(arr)):
            raise ValueError("spectrum levels must be finite")
        arr = np.sort(arr, kind="stable")
        arr.setflags(write=False)
        object.__setattr__(self, "levels", arr)

    @property
    def dim(self) -> int:
        return int(self.levels.size)

    @property
    def eps_min(self) -> float:
        return float(self.levels[0])

    @property
    def eps_max(self) -> float:
        return float(self.levels[-1])

    @property
    def eps_mean(self) -> float:
        return float(np.mean(self.levels))

    @property
    def span(self) -> float:
        return self.eps_max - self.eps_min

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other) -> bool:
        if not isinstance(other, Spectrum):
            return NotImplemented
        return np.array_equal(self.levels, other.levels)

    def __hash__(self) -> int:
        return hash(self.levels.tobytes())

    def __repr__(self) -> str:
        return f"Spectrum({self.levels.tolist()!r})"

    def hamiltonian(self) -> np.ndarray:
        return np.diag(self.levels).astype(complex)

    def check_energy(self, E: float, *, name: str = "energy") -> float:
        E = float(E)
        slack = 1e-12 * (abs(self.eps_max) + abs(self.eps_min) + 1.0)
        if not (self.eps_min - slack <= E <= self.eps_max + slack):
            raise ValueError(f"{name} {E!r} outside [{self.eps_min!r}, {self.eps_max!r}]")
        return min(max(E, self.eps_min), self.eps_max)

    def to_json(self) -> str:
        return json.dumps([float(x) for x in self.levels])

    @classmethod
    def from_json(cls, text: str) -> "Spectrum":
        data = json.loads(text)
        if not isinstance(data, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in data):
            raise ValueError("spectrum JSON must be an array of numbers")
        return cls(data)

    @classmethod
    def from_csv(cls, text: str) -> "Spectrum":
        values = []
        for row in csv.reader(io.StringIO(text)):
            if not row or not row[0].strip():
                continue
            try:
                values.append(float(row[0]))
            except ValueError:
                if values:
                    raise
                # header line
        return cls(values)

    @classmethod
    def parse(cls, text: str) -> "Spectrum":
        """Parse either the JSON-array or the one-column CSV form."""
        stripped = text.strip()
        if stripped.startswith("["):
            return cls.from_json(stripped)
        return cls.from_csv(stripped)


def stats(spec: Spectrum) -> SpectrumStats:
    return SpectrumStats(spec.eps_min, spec.eps_mean, spec.eps_max)


def default_antisymmetry_tol(spec: Spectrum) -> float:
    return 1e-9 * (spec.eps_max - spec.eps_min + 1.0)


def is_antisymmetric(spec: Spectrum, tol: Optional[float] = None) -> Optional[float]:
    """Return the constant pair sum ``c`` if every level pairs with its mirror
    image to ``c`` within ``tol``, otherwise ``None``."""
    if tol is None:
        tol = default_antisymmetry_tol(spec)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    lv = spec.levels
    c = spec.eps_min + spec.eps_max
    if np.all(np.abs(lv + lv[::-1] - c) <= tol):
        return float(c)
    return None


def qutrit_spectrum(eps: float, delta: float) -> Spectrum:
    """Levels (0, (1+delta)*eps, 2*eps)."""
    check_qutrit_params(eps, delta)
    return Spectrum([0.0, (1.0 + delta) * eps, 2.0 * eps])


def check_qutrit_params(eps: float, delta: float) -> None:
    if not (np.isfinite(eps) and eps > 0):
        raise ValueError(f"qutrit eps must be positive, got {eps!r}")
    if not (np.isfinite(delta) and -1.0 <= delta <= 1.0):
        raise ValueError(f"qutrit delta must lie in [-1, 1], got {delta!r}")
