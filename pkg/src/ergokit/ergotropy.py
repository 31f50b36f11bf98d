"""Ergotropy, anti-ergotropy and their coherent parts for a given state."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .spectrum import Spectrum
from .state import _dims_match, _hermitize, dephase, eigen_spectrum, mean_energy

CLIP_TOL = 1e-10
UNITARY_TOL = 1e-10


class NumericalConsistencyError(ArithmeticError):
    """A quantity that must be non-negative came out clearly negative."""


def _clip(value: float, what: str) -> float:
    if value < -CLIP_TOL:
        raise NumericalConsistencyError(f"{what} = {value:.3e} is below -{CLIP_TOL:g}")
    return max(value, 0.0)


def passive_energy(rho, spec: Spectrum) -> float:
    _dims_match(rho, spec)
    return float(eigen_spectrum(rho).descending @ spec.levels)


def antipassive_energy(rho, spec: Spectrum) -> float:
    _dims_match(rho, spec)
    return float(eigen_spectrum(rho).ascending @ spec.levels)


def ergotropy(rho, spec: Spectrum) -> float:
    """Energy extractable by the best unitary: E - lambda_desc . eps_asc."""
    return _clip(mean_energy(rho, spec) - passive_energy(rho, spec), "ergotropy")


def anti_ergotropy(rho, spec: Spectrum) -> float:
    """Energy injectable by the best unitary: lambda_asc . eps_asc - E."""
    return _clip(antipassive_energy(rho, spec) - mean_energy(rho, spec), "anti-ergotropy")


def coherent_ergotropy(rho, spec: Spectrum) -> float:
    return _clip(ergotropy(rho, spec) - ergotropy(dephase(rho), spec), "coherent ergotropy")


def coherent_anti_ergotropy(rho, spec: Spectrum) -> float:
    return _clip(anti_ergotropy(rho, spec) - anti_ergotropy(dephase(rho), spec), "coherent anti-ergotropy")


@dataclass(frozen=True)
class ErgotropyReport:
    ergotropy: float
    anti_ergotropy: float
    coherent_ergotropy: float
    coherent_anti_ergotropy: float
    mean_energy: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def report(rho, spec: Spectrum) -> ErgotropyReport:
    return ErgotropyReport(
        ergotropy=ergotropy(rho, spec),
        anti_ergotropy=anti_ergotropy(rho, spec),
        coherent_ergotropy=coherent_ergotropy(rho, spec),
        coherent_anti_ergotropy=coherent_anti_ergotropy(rho, spec),
        mean_energy=mean_energy(rho, spec),
    )


def _eigvecs_descending(rho) -> np.ndarray:
    """Columns are eigenvectors of rho ordered by decreasing eigenvalue."""
    r = np.asarray(rho)
    if r.ndim == 1:
        order = np.argsort(-r.astype(float), kind="stable")
        return np.eye(r.size, dtype=complex)[:, order]
    vals, vecs = np.linalg.eigh(_hermitize(r.astype(complex)))
    order = np.argsort(-vals, kind="stable")
    return vecs[:, order]


def _assert_unitary(u: np.ndarray) -> np.ndarray:
    err = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
    if err > UNITARY_TOL:
        raise NumericalConsistencyError(f"constructed unitary deviates by {err:.3e}")
    return u


def optimal_extraction_unitary(rho, spec: Spectrum) -> np.ndarray:
    """U = sum_k |eps_k><phi_k| with phi_k sorted by decreasing eigenvalue."""
    _dims_match(rho, spec)
    return _assert_unitary(_eigvecs_descending(rho).conj().T)


def optimal_charging_unitary(rho, spec: Spectrum) -> np.ndarray:
    """U = sum_k |eps_{d+1-k}><phi_k|."""
    _dims_match(rho, spec)
    return _assert_unitary(_eigvecs_descending(rho).conj().T[::-1].copy())
