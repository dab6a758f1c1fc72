"""Gaussian-state kernel: covariance matrices, symplectic spectra, entropies.

Conventions used throughout the package:

* shot-noise units (SNU): the vacuum quadrature variance is 1,
* quadrature ordering (X1, P1, X2, P2, ...),
* all entropies and information quantities are in bits (log base 2).

Everything here is a pure function on immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateMeasurementError,
    SymplecticPairingError,
    UnphysicalStateError,
)

# Absolute asymmetry allowed when accepting a matrix as a covariance matrix.
SYMMETRY_TOL = 1e-12

# Symplectic eigenvalues may undershoot 1 by this much before a state is
# rejected as unphysical; anything in [1 - tol, 1] is treated as exactly 1.
PHYSICALITY_TOL = 1e-9


def symplectic_form(n_modes: int) -> np.ndarray:
    """Standard symplectic form, a direct sum of [[0, 1], [-1, 0]] blocks."""
    omega = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        omega[2 * k, 2 * k + 1] = 1.0
        omega[2 * k + 1, 2 * k] = -1.0
    return omega


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Symmetric 2n x 2n second-moment matrix of a zero-mean Gaussian state (SNU)."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"covariance matrix must be square, got shape {m.shape}")
        dim = m.shape[0]
        if dim == 0 or dim % 2 != 0:
            raise ValueError(f"covariance matrix dimension must be a positive even number, got {dim}")
        if not np.all(np.isfinite(m)):
            raise ValueError("covariance matrix entries must be finite")
        if np.max(np.abs(m - m.T)) > SYMMETRY_TOL:
            raise ValueError(f"covariance matrix is not symmetric within {SYMMETRY_TOL}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def n_modes(self) -> int:
        return self.entries.shape[0] // 2

    @classmethod
    def vacuum(cls, n_modes: int = 1) -> "CovarianceMatrix":
        return cls(np.eye(2 * n_modes))

    @classmethod
    def from_diagonal(cls, diagonal) -> "CovarianceMatrix":
        return cls(np.diag(np.asarray(diagonal, dtype=float)))

    def mode_block(self, mode: int) -> np.ndarray:
        """2x2 diagonal block of a single mode."""
        i = 2 * mode
        return np.array(self.entries[i:i + 2, i:i + 2])

    def submatrix(self, modes) -> "CovarianceMatrix":
        """Covariance matrix restricted to the listed modes, in the given order."""
        idx = []
        for m in modes:
            idx.extend((2 * m, 2 * m + 1))
        return CovarianceMatrix(self.entries[np.ix_(idx, idx)])

    def tensor(self, other: "CovarianceMatrix") -> "CovarianceMatrix":
        """Direct sum with another state's covariance matrix (appended modes)."""
        a, b = self.entries, other.entries
        out = np.zeros((a.shape[0] + b.shape[0],) * 2)
        out[:a.shape[0], :a.shape[0]] = a
        out[a.shape[0]:, a.shape[0]:] = b
        return CovarianceMatrix(out)

    def min_symplectic_eigenvalue(self) -> float:
        return symplectic_eigenvalues(self)[-1]

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        try:
            return self.min_symplectic_eigenvalue() >= 1.0 - tol
        except SymplecticPairingError:
            return False

    def assert_physical(self, tol: float = PHYSICALITY_TOL) -> None:
        nu_min = self.min_symplectic_eigenvalue()
        if nu_min < 1.0 - tol:
            raise UnphysicalStateError(
                f"minimal symplectic eigenvalue {nu_min:.12g} violates the uncertainty bound"
            )

    def to_json_dict(self) -> dict:
        """Row-major serialization used by the CLI debug dumps."""
        return {"n_modes": self.n_modes, "matrix": self.entries.tolist()}

    @classmethod
    def from_json_dict(cls, data: dict) -> "CovarianceMatrix":
        return cls(np.asarray(data["matrix"], dtype=float))


def symplectic_eigenvalues(cm: CovarianceMatrix) -> list[float]:
    """Symplectic spectrum of a covariance matrix, sorted descending.

    Computed through the Hermitian matrix i * sqrt(cm) @ Omega @ sqrt(cm),
    whose spectrum is the symmetric pair set {+nu_k, -nu_k}.  For a single
    mode this reduces to sqrt(det cm).
    """
    gamma = cm.entries
    evals, vecs = np.linalg.eigh(gamma)
    if evals[0] <= 0.0:
        raise SymplecticPairingError(
            "covariance matrix is not positive definite "
            f"(min eigenvalue {evals[0]:.6g}, condition number {_condition(gamma):.6g})"
        )
    root = (vecs * np.sqrt(evals)) @ vecs.T
    herm = 1j * (root @ symplectic_form(cm.n_modes) @ root)
    spectrum = np.linalg.eigvalsh(herm)  # ascending, symmetric about 0
    n = cm.n_modes
    positive = spectrum[n:][::-1]
    mirrored = -spectrum[:n]
    scale = max(1.0, float(mirrored[0]))
    if np.max(np.abs(positive - mirrored)) > 1e-8 * scale:
        raise SymplecticPairingError(
            "symplectic spectrum is not +/- symmetric within tolerance "
            f"(condition number {_condition(gamma):.6g})"
        )
    return [float(v) for v in 0.5 * (positive + mirrored)]


def _condition(matrix: np.ndarray) -> float:
    try:
        return float(np.linalg.cond(matrix))
    except np.linalg.LinAlgError:
        return math.inf


def entropy_g(nu: float) -> float:
    """Entropy in bits of a thermal mode with symplectic eigenvalue ``nu``.

    g(nu) = ((nu+1)/2) log2((nu+1)/2) - ((nu-1)/2) log2((nu-1)/2), with
    g(1) = 0.  Values in [1 - 1e-9, 1] are clamped to 1; smaller values are
    rejected as unphysical.
    """
    if nu < 1.0 - PHYSICALITY_TOL:
        raise UnphysicalStateError(
            f"symplectic eigenvalue {nu!r} is below 1 and outside the clamping band"
        )
    if nu <= 1.0:
        return 0.0
    a = (nu + 1.0) / 2.0
    b = (nu - 1.0) / 2.0
    return a * math.log2(a) - b * math.log2(b)


def von_neumann_entropy(cm: CovarianceMatrix) -> float:
    """Von Neumann entropy of a Gaussian state in bits: sum of g over the spectrum."""
    return sum(entropy_g(nu) for nu in symplectic_eigenvalues(cm))


def condition_on_homodyne(cm: CovarianceMatrix, measured_mode: int,
                          quadrature: str = "X") -> CovarianceMatrix:
    """Conditional state of the remaining modes after an ideal homodyne measurement.

    Schur complement gamma_A - gamma_C (Pi gamma_B Pi)^+ gamma_C^T with Pi the
    projector onto the measured quadrature; since the projected block is
    rank one this is the scalar update gamma_A - c c^T / v with v the measured
    variance and c the cross-covariance column.
    """
    if measured_mode < 0 or measured_mode >= cm.n_modes:
        raise ValueError(f"measured_mode {measured_mode} out of range for {cm.n_modes} modes")
    quad = quadrature.upper()
    if quad not in ("X", "P"):
        raise ValueError(f"quadrature must be 'X' or 'P', got {quadrature!r}")
    idx = 2 * measured_mode + (0 if quad == "X" else 1)
    variance = cm.entries[idx, idx]
    if variance <= 0.0:
        raise DegenerateMeasurementError(
            f"measured quadrature variance {variance:.6g} is not positive"
        )
    keep = [k for k in range(2 * cm.n_modes) if k not in (2 * measured_mode, 2 * measured_mode + 1)]
    cross = cm.entries[keep, idx]
    reduced = cm.entries[np.ix_(keep, keep)] - np.outer(cross, cross) / variance
    return CovarianceMatrix(0.5 * (reduced + reduced.T))


def apply_beamsplitter(cm: CovarianceMatrix, mode_i: int, mode_j: int,
                       transmittance: float) -> CovarianceMatrix:
    """Mix two modes on a beamsplitter of the given transmittance.

    Applies S @ cm @ S.T with the two-mode symplectic
    S = [[sqrt(t) I, sqrt(1-t) I], [-sqrt(1-t) I, sqrt(t) I]] acting on the
    (mode_i, mode_j) blocks, so mode_i keeps a sqrt(t) share of itself plus a
    sqrt(1-t) share of mode_j.
    """
    if mode_i == mode_j:
        raise ValueError("beamsplitter needs two distinct modes")
    for m in (mode_i, mode_j):
        if m < 0 or m >= cm.n_modes:
            raise ValueError(f"mode index {m} out of range for {cm.n_modes} modes")
    if not 0.0 <= transmittance <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {transmittance}")
    t = math.sqrt(transmittance)
    r = math.sqrt(1.0 - transmittance)
    s = np.eye(2 * cm.n_modes)
    ii, jj = 2 * mode_i, 2 * mode_j
    for off in (0, 1):
        s[ii + off, ii + off] = t
        s[jj + off, jj + off] = t
        s[ii + off, jj + off] = r
        s[jj + off, ii + off] = -r
    mixed = s @ cm.entries @ s.T
    return CovarianceMatrix(0.5 * (mixed + mixed.T))


def db_to_snu(db: float) -> float:
    """Convert a decibel value (relative to shot noise) to a linear SNU variance."""
    return 10.0 ** (db / 10.0)


def snu_to_db(value: float) -> float:
    """Convert a linear SNU variance to decibels relative to shot noise."""
    if value <= 0.0:
        raise ValueError(f"cannot express non-positive variance {value} in dB")
    return 10.0 * math.log10(value)
