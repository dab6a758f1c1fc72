"""Security analysis for a single-quadrature squeezed-state CV-QKD protocol.

Encoding a Gaussian alphabet of variance 1 - v_r on the squeezed quadrature
of a v_r-squeezed state makes the eavesdropper of a purely lossy channel
statistically independent of the receiver's homodyne data, eliminating both
her Shannon and Holevo information.  This package provides the Gaussian
covariance-matrix kernel, the analytic protocol model, finite-size
corrections, a Monte-Carlo emulator of the measured-data pipeline, and a CLI
for parameter sweeps.
"""

from .emulator import (
    EmulationConfig,
    ReconstructedCM,
    SampleBatch,
    expected_record_covariance,
    generate_samples,
    normalize_to_shot_noise,
    reconstruct_covariance,
    security_from_data,
)
from .errors import (
    DegenerateMeasurementError,
    InsufficientDataError,
    SymplecticPairingError,
    ThresholdUndefinedError,
    UnphysicalStateError,
)
from .finite_size import (
    FiniteSizeParams,
    RegionPoint,
    beta_threshold,
    delta_correction,
    key_rate_finite,
    security_region,
)
from .gaussian import (
    CovarianceMatrix,
    apply_beamsplitter,
    condition_on_homodyne,
    db_to_snu,
    entropy_g,
    snu_to_db,
    symplectic_eigenvalues,
    symplectic_form,
    von_neumann_entropy,
)
from .protocol import (
    ProtocolParams,
    SecurityReport,
    build_joint_state,
    classical_leakage,
    decoupling_modulation,
    eve_conditional_covariance,
    eve_covariance,
    holevo_eb,
    key_rate_asymptotic,
    mutual_information_ab,
    optimal_modulation,
    quantum_mutual_information_eb,
    security_report,
    source_covariance,
)

__version__ = "0.1.0"
