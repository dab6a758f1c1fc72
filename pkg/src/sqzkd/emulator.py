"""Monte-Carlo emulation of the experiment's data path.

Draws quadrature samples through the channel model, reconstructs the 6x6
covariance matrix of the three parties' recorded variables, normalizes to
shot noise and recomputes the security quantities from data, mirroring how
the measured covariance matrices are produced in the laboratory.

Recorded variables per sample: the sender's alphabet value x_a and the
detected quadratures (x_b, p_b) and (x_e, p_e).  Detector imperfection is a
beamsplitter with vacuum in front of an ideal homodyne; the receiver's
electronic noise is added after (trusted).  The sender's phase quadrature is
never measured: its row in the reconstructed matrix is a configurable large
placeholder variance that keeps the 6x6 matrix physical without inventing
phase correlations.

Sampling uses numpy's counter-based Philox bit generator, so a seed fully
determines the output across platforms and numpy versions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InsufficientDataError, UnphysicalStateError
from .gaussian import (
    CovarianceMatrix,
    apply_beamsplitter,
    condition_on_homodyne,
    entropy_g,
    symplectic_eigenvalues,
)
from .protocol import (
    ProtocolParams,
    SecurityReport,
    build_joint_state,
    environment_variance,
)

# Statistical slack on the uncertainty bound for reconstructed matrices.
STATISTICAL_PHYSICALITY_TOL = 0.05

# Quadrature indices of the reconstructed 6x6 matrix, modes ordered (A, B, E).
XA, PA, XB, PB, XE, PE = range(6)


@dataclass(frozen=True)
class EmulationConfig:
    """Sampling configuration.

    n_samples            records to draw
    seed                 64-bit seed of the Philox counter-based generator
    eta_bob_det          receiver homodyne efficiency, in (0, 1]
    eta_eve_det          eavesdropper homodyne efficiency, in (0, 1]
    alice_p_placeholder  variance filled into the sender's unmeasured phase row
    ideal_detectors      when True both efficiencies are treated as exactly 1
    """

    n_samples: int
    seed: int
    eta_bob_det: float = 0.85
    eta_eve_det: float = 0.95
    alice_p_placeholder: float = 100.0
    ideal_detectors: bool = False

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError(f"n_samples must be >= 2, got {self.n_samples}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        for name in ("eta_bob_det", "eta_eve_det"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")
        if self.alice_p_placeholder <= 0.0:
            raise ValueError("alice_p_placeholder must be positive")

    def detector_efficiencies(self) -> tuple[float, float]:
        if self.ideal_detectors:
            return 1.0, 1.0
        return self.eta_bob_det, self.eta_eve_det


@dataclass(frozen=True)
class SampleBatch:
    """Recorded quadrature samples plus the settings that generated them."""

    x_a: np.ndarray
    x_b: np.ndarray
    p_b: np.ndarray
    x_e: np.ndarray
    p_e: np.ndarray
    params: ProtocolParams
    config: EmulationConfig

    CSV_COLUMNS = ("x_a", "x_b", "p_b", "x_e", "p_e")

    @property
    def n_samples(self) -> int:
        return self.x_a.shape[0]

    def columns(self) -> np.ndarray:
        """Records as an (n_samples, 5) array in CSV column order."""
        return np.column_stack([getattr(self, name) for name in self.CSV_COLUMNS])

    def write_csv(self, path) -> None:
        np.savetxt(path, self.columns(), fmt="%.12g", delimiter=",",
                   header=",".join(self.CSV_COLUMNS), comments="")


@dataclass(frozen=True)
class ReconstructedCM:
    """Sample covariance matrix of the recorded variables with entry-wise errors."""

    cm: CovarianceMatrix
    n_samples: int
    standard_errors: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "matrix": self.cm.entries.tolist(),
            "n_samples": self.n_samples,
            "standard_errors": self.standard_errors.tolist(),
        }


def generate_samples(p: ProtocolParams, cfg: EmulationConfig) -> SampleBatch:
    """Draw one batch of records through the channel and detector model.

    Per sample the independent latent variables are the alphabet value
    x_a ~ N(0, v_a), the source quadratures x_r ~ N(0, v_r) and
    p_r ~ N(0, 1/v_r + delta_v), the environment mode (vacuum, or the
    eavesdropper's injected arm of variance W for excess noise), one vacuum
    mode per imperfect detector, and the electronic noise x_n ~ N(0, v_n).
    The channel mixes signal and environment as

        x_b = sqrt(eta) (x_a + x_r) - sqrt(1-eta) e_x
        x_e = sqrt(1-eta) (x_a + x_r) + sqrt(eta) e_x

    (identically for P with the modulation absent), after which each detected
    quadrature is attenuated by its homodyne efficiency with vacuum making up
    the balance, and x_n is added to the receiver's X record.
    """
    n = cfg.n_samples
    rng = np.random.Generator(np.random.Philox(key=int(cfg.seed)))

    x_a = rng.standard_normal(n) * math.sqrt(p.v_a)
    x_r = rng.standard_normal(n) * math.sqrt(p.v_r)
    p_r = rng.standard_normal(n) * math.sqrt(p.anti_squeezed_variance)
    w = environment_variance(p)
    e_x = rng.standard_normal(n) * math.sqrt(w)
    e_p = rng.standard_normal(n) * math.sqrt(w)

    se, sr = math.sqrt(p.eta), math.sqrt(1.0 - p.eta)
    sig_x = x_a + x_r
    x_b = se * sig_x - sr * e_x
    p_b = se * p_r - sr * e_p
    x_e = sr * sig_x + se * e_x
    p_e = sr * p_r + se * e_p

    eta_b, eta_e = cfg.detector_efficiencies()
    if eta_b < 1.0:
        tb, rb = math.sqrt(eta_b), math.sqrt(1.0 - eta_b)
        x_b = tb * x_b + rb * rng.standard_normal(n)
        p_b = tb * p_b + rb * rng.standard_normal(n)
    if eta_e < 1.0:
        te, re = math.sqrt(eta_e), math.sqrt(1.0 - eta_e)
        x_e = te * x_e + re * rng.standard_normal(n)
        p_e = te * p_e + re * rng.standard_normal(n)

    x_b = x_b + rng.standard_normal(n) * math.sqrt(p.v_n)

    return SampleBatch(x_a=x_a, x_b=x_b, p_b=p_b, x_e=x_e, p_e=p_e,
                       params=p, config=cfg)


def reconstruct_covariance(batch: SampleBatch) -> ReconstructedCM:
    """Unbiased zero-mean second moments of the records as a 6x6 matrix.

    The model is zero-mean by construction, so moments are sums of products
    divided by n - 1 without mean subtraction.  The sender's phase row is the
    configured placeholder on the diagonal and zero elsewhere, with zero
    standard error.  Entry-wise standard errors are the asymptotic Gaussian
    values sqrt((M_ii M_jj + M_ij^2) / n).
    """
    n = batch.n_samples
    if n < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {n}")
    data = batch.columns()
    moments = data.T @ data / (n - 1)
    moments = 0.5 * (moments + moments.T)

    full = np.zeros((6, 6))
    recorded = [XA, XB, PB, XE, PE]
    full[np.ix_(recorded, recorded)] = moments
    full[PA, PA] = batch.config.alice_p_placeholder

    diag = np.diag(full)
    if np.any(diag <= 0.0):
        bad = int(np.argmax(diag <= 0.0))
        raise UnphysicalStateError(
            f"reconstructed variance at quadrature index {bad} is {diag[bad]:.6g}; "
            "a covariance matrix needs positive diagonal entries"
        )

    errors = np.sqrt((np.outer(diag, diag) + full ** 2) / n)
    errors[PA, :] = 0.0
    errors[:, PA] = 0.0
    return ReconstructedCM(cm=CovarianceMatrix(full), n_samples=n,
                           standard_errors=errors)


def normalize_to_shot_noise(batch: SampleBatch,
                            vacuum_calibration: SampleBatch) -> SampleBatch:
    """Rescale the detected quadratures by a vacuum calibration run.

    The calibration batch must be generated with v_a = 0, v_r = 1 and
    delta_v = 0 at the same detector settings; each of the receiver's and
    eavesdropper's quadratures is divided by the calibration's root mean
    square so that calibrated vacuum has unit variance.  The sender's data is
    left untouched (its scale cancels from every derived quantity).
    """
    cal_p = vacuum_calibration.params
    if not (cal_p.v_a == 0.0 and cal_p.v_r == 1.0 and cal_p.delta_v == 0.0):
        raise ValueError("calibration batch must be vacuum: v_a = 0, v_r = 1, delta_v = 0")
    ours, theirs = batch.config, vacuum_calibration.config
    if ours.detector_efficiencies() != theirs.detector_efficiencies():
        raise ValueError("calibration batch was taken at different detector settings")

    scaled = {}
    for name in ("x_b", "p_b", "x_e", "p_e"):
        cal = getattr(vacuum_calibration, name)
        scale = math.sqrt(float(np.mean(cal * cal)))
        if scale <= 0.0:
            raise ValueError(f"calibration variance for {name} is not positive")
        scaled[name] = getattr(batch, name) / scale
    return replace(batch, **scaled)


def expected_record_covariance(p: ProtocolParams, cfg: EmulationConfig) -> np.ndarray:
    """Analytic 6x6 covariance of the recorded variables for given settings.

    Built from the joint channel-output state by mixing in the detector
    vacua, adding the electronic noise to the receiver's X and attaching the
    sender's row from her cross moments.  Serves as the oracle the sampled
    reconstruction converges to.
    """
    joint, alice_cross = build_joint_state(p)
    eta_b, eta_e = cfg.detector_efficiencies()

    state = joint.tensor(CovarianceMatrix.vacuum(2))
    vac_b, vac_e = joint.n_modes, joint.n_modes + 1
    state = apply_beamsplitter(state, 0, vac_b, eta_b)
    state = apply_beamsplitter(state, 1, vac_e, eta_e)
    detected = state.submatrix([0, 1]).entries

    cross = alice_cross[:4].copy()
    cross[:2] *= math.sqrt(eta_b)
    cross[2:] *= math.sqrt(eta_e)

    full = np.zeros((6, 6))
    full[XA, XA] = p.v_a
    full[PA, PA] = cfg.alice_p_placeholder
    full[2:, 2:] = detected
    full[XA, 2:] = cross
    full[2:, XA] = cross
    full[XB, XB] += p.v_n
    return full


def _entropy_bits(cm: CovarianceMatrix, tol: float) -> float:
    """Entropy with the clamping band widened to a statistical tolerance."""
    total = 0.0
    for nu in symplectic_eigenvalues(cm):
        if nu < 1.0 - tol:
            raise UnphysicalStateError(
                f"symplectic eigenvalue {nu:.6g} below 1 beyond the statistical tolerance {tol}"
            )
        total += entropy_g(max(nu, 1.0))
    return total


def security_from_data(recon: ReconstructedCM, beta: float,
                       v_n_trusted: float = 0.0) -> SecurityReport:
    """Security quantities computed from a reconstructed covariance matrix.

    Follows the same extraction used on measured data: the Shannon
    information from the sender/receiver X block, the Holevo bound from the
    eavesdropper's block conditioned on the receiver's X via the homodyne
    Schur complement, and the classical correlation coefficients from the
    cross moments.

    ``v_n_trusted`` is electronic noise *not* embedded in the matrix; it is
    added to the receiver's measured X variance for the Shannon information
    and the conditioning.  Batches produced by generate_samples already carry
    the electronic noise in their records, so data paths pass 0 here.

    Symplectic eigenvalues may undershoot 1 by up to 0.05 to allow for
    statistical noise; the entropy evaluation clamps them to 1.  Harder
    violations raise with the offending eigenvalue.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if v_n_trusted < 0.0:
        raise ValueError(f"v_n_trusted must be >= 0, got {v_n_trusted}")
    m = recon.cm.entries
    tol = STATISTICAL_PHYSICALITY_TOL
    nu_min = min(symplectic_eigenvalues(recon.cm))
    if nu_min < 1.0 - tol:
        raise UnphysicalStateError(
            f"reconstructed matrix is statistically unphysical: "
            f"minimal symplectic eigenvalue {nu_min:.6g} < {1.0 - tol}"
        )

    v_b = m[XB, XB] + v_n_trusted
    v_b_given_a = v_b - m[XA, XB] ** 2 / m[XA, XA]
    i_ab = 0.5 * math.log2(v_b / v_b_given_a)

    be = recon.cm.submatrix([1, 2])  # receiver mode, eavesdropper mode
    eve = recon.cm.submatrix([2])
    s_e = _entropy_bits(eve, tol)
    noisy = np.array(be.entries)
    noisy[0, 0] += v_n_trusted
    conditioned = condition_on_homodyne(CovarianceMatrix(noisy), 0, "X")
    chi = s_e - _entropy_bits(conditioned, tol)
    if chi < -1e-9:
        raise RuntimeError(f"data-derived Holevo information {chi:.6g} < 0 beyond noise floor")
    chi = max(chi, 0.0)

    c_eb = m[XE, XB] ** 2 / (m[XE, XE] * v_b)
    c_ea = m[XA, XE] ** 2 / (m[XA, XA] * m[XE, XE])
    i_eb = 0.5 * math.log2(1.0 / (1.0 - c_eb)) if c_eb < 1.0 else math.inf
    i_ea = 0.5 * math.log2(1.0 / (1.0 - c_ea)) if c_ea < 1.0 else math.inf

    s_b = _entropy_bits(recon.cm.submatrix([1]), tol)
    qmi = max(s_b + s_e - _entropy_bits(be, tol), 0.0)

    return SecurityReport(
        i_ab=i_ab,
        chi_e=chi,
        key_rate=beta * i_ab - chi,
        c_eb=c_eb,
        c_ea=c_ea,
        i_eb_classical=i_eb,
        i_ea_classical=i_ea,
        qmi_eb=qmi,
    )
