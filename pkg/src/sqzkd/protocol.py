"""Analytic security quantities for the single-quadrature squeezed-state protocol.

The sender prepares a squeezed state (squeezed quadrature variance ``v_r``,
anti-squeezed variance ``1/v_r + delta_v``), encodes a Gaussian alphabet of
variance ``v_a`` on the squeezed quadrature, and transmits through a channel
of transmittance ``eta``.  The receiver homodynes X with trusted electronic
noise ``v_n``.  The eavesdropper holds the channel environment: for a purely
lossy channel the tapped beamsplitter port, and for a channel with excess
noise ``epsilon`` both arms of the entangled two-mode state she injects to
realize that noise.

The central fact implemented here: with ``v_r + v_a = 1`` and ``epsilon = 0``
the eavesdropper's state is statistically independent of the receiver's
measurement outcome, so both her Shannon and Holevo information about it
vanish identically, for any loss, any detector noise and any impurity of the
squeezing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .gaussian import (
    CovarianceMatrix,
    apply_beamsplitter,
    condition_on_homodyne,
    entropy_g,
    von_neumann_entropy,
)

# |chi_E| below this is treated as floating-point noise and clamped to zero;
# anything more negative indicates a modelling bug and raises.
CHI_NOISE_FLOOR = 1e-9


@dataclass(frozen=True)
class ProtocolParams:
    """One protocol instance, all variances in shot-noise units.

    v_r      squeezed-quadrature variance, in (0, 1] (1 = coherent states)
    v_a      modulation variance of the Gaussian alphabet, >= 0
    eta      channel transmittance, in (0, 1]
    delta_v  excess variance of the anti-squeezed quadrature, >= 0
    epsilon  untrusted channel excess noise referred to the channel input, >= 0
    v_n      trusted electronic noise of the receiver's homodyne, >= 0
    beta     reconciliation efficiency, in (0, 1]
    """

    v_r: float
    v_a: float
    eta: float
    delta_v: float = 0.0
    epsilon: float = 0.0
    v_n: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.v_r <= 1.0:
            raise ValueError(f"v_r must lie in (0, 1], got {self.v_r}")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        for name in ("v_a", "delta_v", "epsilon", "v_n"):
            value = getattr(self, name)
            if value < 0.0 or not math.isfinite(value):
                raise ValueError(f"{name} must be finite and >= 0, got {value}")

    @property
    def anti_squeezed_variance(self) -> float:
        return 1.0 / self.v_r + self.delta_v

    def with_modulation(self, v_a: float) -> "ProtocolParams":
        return replace(self, v_a=v_a)


@dataclass(frozen=True)
class SecurityReport:
    """Derived security quantities for one protocol instance (bits per symbol)."""

    i_ab: float
    chi_e: float
    key_rate: float
    c_eb: float
    c_ea: float
    i_eb_classical: float
    i_ea_classical: float
    qmi_eb: float

    def as_dict(self) -> dict:
        return {
            "i_ab": self.i_ab,
            "chi_e": self.chi_e,
            "key_rate": self.key_rate,
            "c_eb": self.c_eb,
            "c_ea": self.c_ea,
            "i_eb_classical": self.i_eb_classical,
            "i_ea_classical": self.i_ea_classical,
            "qmi_eb": self.qmi_eb,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.as_dict(), indent=indent)


def source_covariance(p: ProtocolParams) -> CovarianceMatrix:
    """Modulated source state before the channel: diag[v_r + v_a, 1/v_r + delta_v]."""
    return CovarianceMatrix.from_diagonal([p.v_r + p.v_a, p.anti_squeezed_variance])


def environment_variance(p: ProtocolParams) -> float:
    """Variance of the mode the eavesdropper injects at the channel beamsplitter.

    1 for a purely lossy channel; for excess noise epsilon referred to the
    channel input, one arm of her entangled pair with variance
    W = 1 + eta * epsilon / (1 - eta), so the receiver sees eta * epsilon of
    extra noise.
    """
    if p.epsilon == 0.0:
        return 1.0
    if p.eta >= 1.0:
        raise ValueError("excess noise with a lossless channel leaves no port to inject it; "
                         "eta must be < 1 when epsilon > 0")
    return 1.0 + p.eta * p.epsilon / (1.0 - p.eta)


def eve_covariance(p: ProtocolParams) -> CovarianceMatrix:
    """Closed-form single-mode state available to the eavesdropper (lossy channel).

    diag[eta + (1-eta)(v_r + v_a), eta + (1-eta)(1/v_r + delta_v)].  Only valid
    for epsilon = 0; with excess noise her state is two-mode and must be taken
    from build_joint_state.
    """
    if p.epsilon != 0.0:
        raise ValueError("eve_covariance is the epsilon = 0 closed form; "
                         "use build_joint_state for a noisy channel")
    big_v = p.v_r + p.v_a
    return CovarianceMatrix.from_diagonal([
        p.eta + (1.0 - p.eta) * big_v,
        p.eta + (1.0 - p.eta) * p.anti_squeezed_variance,
    ])


def eve_conditional_covariance(p: ProtocolParams) -> CovarianceMatrix:
    """Eavesdropper's state conditioned on the receiver's noisy X homodyne.

    Only the X entry changes relative to eve_covariance:
    (V + v_n (1-eta) V + eta v_n) / (v_n + 1 - eta + eta V) with V = v_r + v_a.
    """
    if p.epsilon != 0.0:
        raise ValueError("eve_conditional_covariance is the epsilon = 0 closed form; "
                         "use build_joint_state for a noisy channel")
    big_v = p.v_r + p.v_a
    x_entry = (big_v + p.v_n * (1.0 - p.eta) * big_v + p.eta * p.v_n) / \
        (p.v_n + 1.0 - p.eta + p.eta * big_v)
    return CovarianceMatrix.from_diagonal([
        x_entry,
        p.eta + (1.0 - p.eta) * p.anti_squeezed_variance,
    ])


def build_joint_state(p: ProtocolParams) -> tuple[CovarianceMatrix, np.ndarray]:
    """Global Gaussian state of the channel outputs, plus the sender's cross moments.

    Returns ``(cm, alice_cross)`` where ``cm`` covers the receiver's mode B
    followed by the eavesdropper's mode(s): (B, E1) for a lossy channel and
    (B, E1, E2) when she injects one arm of an entangled pair to realize the
    excess noise.  The receiver's trusted electronic noise is *not* folded
    into the matrix; callers add it to the X_B entry when conditioning.

    ``alice_cross[k]`` is the second moment of the sender's alphabet variable
    X_A with quadrature k of ``cm``: sqrt(eta) v_a with X_B, sqrt(1-eta) v_a
    with X_E1, zero elsewhere.
    """
    w = environment_variance(p)
    if p.epsilon == 0.0:
        before = source_covariance(p).tensor(CovarianceMatrix.vacuum(1))
    else:
        c = math.sqrt(w * w - 1.0)
        # entangled pair (injected arm, kept arm): X-correlated, P-anticorrelated
        pair = CovarianceMatrix(np.array([
            [w, 0.0, c, 0.0],
            [0.0, w, 0.0, -c],
            [c, 0.0, w, 0.0],
            [0.0, -c, 0.0, w],
        ]))
        before = source_covariance(p).tensor(pair)
    # keeping the environment slot and retaining sqrt(eta) of it sends
    # sqrt(eta) S - sqrt(1-eta) E to the receiver's slot 0 and
    # sqrt(1-eta) S + sqrt(eta) E to the eavesdropper's slot 1
    joint = apply_beamsplitter(before, 1, 0, p.eta)

    se, sr = math.sqrt(p.eta), math.sqrt(1.0 - p.eta)
    alice_cross = np.zeros(2 * joint.n_modes)
    alice_cross[0] = se * p.v_a
    alice_cross[2] = sr * p.v_a
    return joint, alice_cross


def mutual_information_ab(p: ProtocolParams) -> float:
    """Shannon mutual information between the sender's alphabet and the receiver's X.

    0.5 log2((eta v_a + eta v_r + v_n + 1 - eta + eta epsilon)
             / (eta v_r + v_n + 1 - eta + eta epsilon)).
    """
    base = p.eta * p.v_r + p.v_n + 1.0 - p.eta + p.eta * p.epsilon
    return 0.5 * math.log2((p.eta * p.v_a + base) / base)


def _clamp_chi(chi: float) -> float:
    if chi < -CHI_NOISE_FLOOR:
        raise RuntimeError(
            f"Holevo information computed as {chi:.6g} < 0 beyond the noise floor; "
            "this indicates a modelling inconsistency"
        )
    return max(chi, 0.0)


def holevo_eb(p: ProtocolParams) -> float:
    """Holevo bound on the eavesdropper's information about the receiver's X data.

    chi = S(E) - S(E|B).  Lossy channels use the closed-form single-mode
    states; with excess noise the bound is evaluated on her two-mode state
    via the joint-state pipeline, conditioning on the receiver's noisy X.
    """
    if p.epsilon == 0.0:
        ge = eve_covariance(p).entries
        gc = eve_conditional_covariance(p).entries
        chi = entropy_g(math.sqrt(ge[0, 0] * ge[1, 1])) - \
            entropy_g(math.sqrt(gc[0, 0] * gc[1, 1]))
        return _clamp_chi(chi)
    joint, _ = build_joint_state(p)
    eve_modes = list(range(1, joint.n_modes))
    s_e = von_neumann_entropy(joint.submatrix(eve_modes))
    noisy = np.array(joint.entries)
    noisy[0, 0] += p.v_n
    conditioned = condition_on_homodyne(CovarianceMatrix(noisy), 0, "X")
    s_cond = von_neumann_entropy(conditioned)
    return _clamp_chi(s_e - s_cond)


def classical_leakage(p: ProtocolParams, party: str) -> tuple[float, float]:
    """Squared correlation coefficient with the eavesdropper's X, and its Shannon bound.

    Returns (C, I) with C = <X_E X_i>^2 / (<X_E^2> <X_i^2>) and
    I = 0.5 log2(1 / (1 - C)), for i the sender ("A") or the receiver ("B").
    The receiver cross moment is sqrt(eta (1-eta)) (v_r + v_a - W); the sender
    one is sqrt(1-eta) v_a.  C >= 1 cannot occur for physical parameters and
    is reported as infinite information defensively.
    """
    w = environment_variance(p)
    big_v = p.v_r + p.v_a
    v_e = (1.0 - p.eta) * big_v + p.eta * w
    which = party.upper()
    if which == "B":
        cov = math.sqrt(p.eta * (1.0 - p.eta)) * (big_v - w)
        v_other = p.eta * big_v + (1.0 - p.eta) * w + p.v_n
    elif which == "A":
        if p.v_a == 0.0:
            return 0.0, 0.0
        cov = math.sqrt(1.0 - p.eta) * p.v_a
        v_other = p.v_a
    else:
        raise ValueError(f"party must be 'A' or 'B', got {party!r}")
    correlation = cov * cov / (v_e * v_other)
    if correlation >= 1.0:
        return correlation, math.inf
    return correlation, 0.5 * math.log2(1.0 / (1.0 - correlation))


def quantum_mutual_information_eb(p: ProtocolParams) -> float:
    """Quantum mutual information S(B) + S(E) - S(BE) of the channel outputs.

    A property of the quantum state alone: the receiver's electronic noise
    does not enter.  Vanishes only with no squeezing and no modulation, or
    for a lossless channel.
    """
    joint, _ = build_joint_state(p)
    s_b = von_neumann_entropy(joint.submatrix([0]))
    s_e = von_neumann_entropy(joint.submatrix(range(1, joint.n_modes)))
    s_be = von_neumann_entropy(joint)
    return max(s_b + s_e - s_be, 0.0)


def key_rate_asymptotic(p: ProtocolParams) -> float:
    """Asymptotic lower bound on the secret key rate: beta * I_AB - chi_E.

    May be negative; the protocol is secure when the value is positive.
    """
    return p.beta * mutual_information_ab(p) - holevo_eb(p)


def decoupling_modulation(v_r: float) -> float:
    """Modulation variance that decouples the eavesdropper in a lossy channel: 1 - v_r."""
    if v_r <= 0.0:
        raise ValueError(f"squeezed variance must be positive, got {v_r}")
    if v_r > 1.0:
        raise ValueError(
            f"no non-negative decoupling modulation exists for v_r = {v_r} > 1"
        )
    return 1.0 - v_r


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def optimal_modulation(p: ProtocolParams, v_a_range: tuple[float, float],
                       tol: float = 1e-6) -> tuple[float, float]:
    """Modulation maximizing the asymptotic key rate over a closed interval.

    Golden-section search to absolute tolerance ``tol`` in v_a.  The searched
    rate must be finite everywhere on the interval.
    """
    lo, hi = float(v_a_range[0]), float(v_a_range[1])
    if lo < 0.0 or hi < lo:
        raise ValueError(f"invalid modulation range ({lo}, {hi})")

    def rate(v_a: float) -> float:
        value = key_rate_asymptotic(p.with_modulation(v_a))
        if not math.isfinite(value):
            raise ValueError(f"key rate is not finite at v_a = {v_a}")
        return value

    if hi == lo:
        return lo, rate(lo)
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = rate(c), rate(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = rate(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = rate(d)
    best = 0.5 * (a + b)
    return best, rate(best)


def security_report(p: ProtocolParams) -> SecurityReport:
    """All derived security quantities for one protocol instance."""
    i_ab = mutual_information_ab(p)
    chi = holevo_eb(p)
    c_eb, i_eb = classical_leakage(p, "B")
    c_ea, i_ea = classical_leakage(p, "A")
    return SecurityReport(
        i_ab=i_ab,
        chi_e=chi,
        key_rate=p.beta * i_ab - chi,
        c_eb=c_eb,
        c_ea=c_ea,
        i_eb_classical=i_eb,
        i_ea_classical=i_ea,
        qmi_eb=quantum_mutual_information_eb(p),
    )
