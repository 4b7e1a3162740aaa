"""Online stage: uplink training across the codebook and codeword selection.

For each codeword the RIS is configured, orthogonal pilots are received
through the true composite channel, a least-squares channel estimate feeds
a zero-forcing precoder, and the codeword whose estimated channels promise
the highest sum rate is selected. The delivered performance is then scored
on the true channels including the residual interference that estimation
errors leave behind.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, composite_channel
from .codebook import Codebook, RcConfig, received_powers_from_allocation, waterfill
from .linalg import SingularMatrixError, gram_inverse


def pilot_matrix(k: int) -> np.ndarray:
    """K x K discrete-Fourier pilot block: unit-modulus entries, X X^H = K I."""
    if k < 1:
        raise ValueError("k must be >= 1")
    idx = np.arange(k)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / k)


def validate_pilots(x: np.ndarray, k: int):
    """Check a pilot block is K x K with orthogonal unit-power rows."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (k, k):
        raise ValueError(f"pilot matrix must be {k} x {k}, got {x.shape}")
    gram = x @ x.conj().T
    if np.max(np.abs(gram - k * np.eye(k))) > 1e-10:
        raise ValueError("pilot rows must satisfy X X^H = K I")
    return x


def simulate_uplink_block(h_q: np.ndarray, x: np.ndarray, p_ul: float,
                          sigma_z2: float, rng: np.random.Generator) -> np.ndarray:
    """Received uplink block Y = sqrt(P_ul) H X + Z with CN(0, sigma_z2) noise."""
    h_q = np.asarray(h_q, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if h_q.shape[1] != x.shape[0]:
        raise ValueError(f"shape mismatch: H {h_q.shape}, X {x.shape}")
    y = np.sqrt(p_ul) * (h_q @ x)
    if sigma_z2 > 0:
        noise = (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
        y = y + np.sqrt(sigma_z2 / 2.0) * noise
    return y


def ls_estimate(y_q: np.ndarray, x: np.ndarray, p_ul: float) -> np.ndarray:
    """Least-squares composite-channel estimate Y X^H / (K sqrt(P_ul))."""
    if p_ul <= 0:
        raise ValueError("p_ul must be > 0")
    y_q = np.asarray(y_q, dtype=complex)
    x = np.asarray(x, dtype=complex)
    k = x.shape[0]
    return (y_q @ x.conj().T) / (k * np.sqrt(p_ul))


def precode_from_estimate(h_hat: np.ndarray, p_d: float, noise: np.ndarray):
    """Zero-forcing precoder and water-filled allocation from an estimate.

    Returns (precoder, power_allocation, predicted_sum_rate). The precoder
    columns satisfy h_hat^H W = diag(sqrt(received powers)).
    """
    h_hat = np.asarray(h_hat, dtype=complex)
    noise = np.asarray(noise, dtype=float)
    u_mat = gram_inverse(h_hat)
    u_diag = np.real(np.diag(u_mat)).copy()
    if np.any(u_diag <= 0):
        raise SingularMatrixError(0.0)
    alloc = waterfill(u_diag, noise, p_d)
    received = received_powers_from_allocation(u_diag, alloc)
    precoder = (h_hat @ u_mat) * np.sqrt(received)[None, :]
    predicted = float(np.sum(np.log2(1.0 + received / noise)))
    return precoder, alloc, predicted


@dataclass
class CandidateEvaluation:
    """Per-codeword training outcome: estimate, precoder, predicted rate."""

    q: int                       # 1-based codeword number
    estimated_channels: np.ndarray = None
    precoder: np.ndarray = None
    power_allocation: np.ndarray = None
    predicted_sum_rate: float = -math.inf


def select_codeword(evaluations: list) -> int:
    """1-based index of the highest predicted sum rate; ties go to the smallest."""
    if not evaluations:
        raise ValueError("no candidate evaluations to select from")
    best = evaluations[0]
    for ev in evaluations[1:]:
        if ev.predicted_sum_rate > best.predicted_sum_rate:
            best = ev
    return best.q


def true_sinr_rates(h_true: np.ndarray, precoder: np.ndarray,
                    noise: np.ndarray) -> np.ndarray:
    """Per-user rates on the true channels with residual interference.

    SINR_k = |h_k^H w_k|^2 / (sum_{l != k} |h_k^H w_l|^2 + noise_k); the
    cross terms matter because estimation error breaks exact zero-forcing.
    """
    cross = h_true.conj().T @ precoder          # K x K, entry (k, l) = h_k^H w_l
    power = np.abs(cross) ** 2
    signal = np.diag(power).copy()
    interference = power.sum(axis=1) - signal
    sinr = signal / (interference + np.asarray(noise, dtype=float))
    return np.log2(1.0 + sinr)


@dataclass
class ProtocolResult:
    """Outcome of one online training sweep and downlink evaluation."""

    selected_index: int          # 1-based, in [1, Q]
    rc_applied: RcConfig
    true_sum_rate: float
    predicted_sum_rate: float
    per_user_rates: np.ndarray
    per_user_signal_power: np.ndarray
    estimation_error_norm: np.ndarray = field(default=None)
    evaluations: list = field(default=None, repr=False)


def run_online(realization: ChannelRealization, cb: Codebook, p_ul: float,
               p_d: float, sigma_z2: float, noise_users: np.ndarray,
               rng: np.random.Generator, pilots: np.ndarray = None) -> ProtocolResult:
    """Train over every codeword, select the best, score it on the truth.

    A candidate whose estimated channels are numerically singular is
    demoted to predicted rate -inf instead of aborting the sweep. The
    selected precoder is applied to the true composite channels, so the
    reported true sum rate includes any residual inter-user interference.
    """
    k_users = realization.num_users
    if cb.meta.num_users != k_users or cb.meta.num_elements != realization.g.shape[0]:
        raise ValueError("codebook dimensions do not match the channel realization")
    noise_users = np.asarray(noise_users, dtype=float)
    if pilots is None:
        pilots = pilot_matrix(k_users)
    else:
        pilots = validate_pilots(pilots, k_users)

    true_channels = []
    evaluations = []
    error_norms = np.zeros(len(cb.codewords))
    for q, cw in enumerate(cb.codewords, start=1):
        phi = cw.rc.phase_vector
        h_true = np.column_stack([
            composite_channel(realization.g, realization.h_r[k], realization.h_d[k], phi)
            for k in range(k_users)
        ])
        true_channels.append(h_true)
        y = simulate_uplink_block(h_true, pilots, p_ul, sigma_z2, rng)
        h_hat = ls_estimate(y, pilots, p_ul)
        error_norms[q - 1] = np.linalg.norm(h_hat - h_true)
        ev = CandidateEvaluation(q=q, estimated_channels=h_hat)
        try:
            ev.precoder, ev.power_allocation, ev.predicted_sum_rate = \
                precode_from_estimate(h_hat, p_d, noise_users)
        except SingularMatrixError:
            pass                                 # demoted: stays at -inf
        evaluations.append(ev)

    q_hat = select_codeword(evaluations)
    chosen = evaluations[q_hat - 1]
    if chosen.precoder is None:
        raise SingularMatrixError(0.0)           # every candidate was singular
    h_true = true_channels[q_hat - 1]
    per_user = true_sinr_rates(h_true, chosen.precoder, noise_users)
    cross = h_true.conj().T @ chosen.precoder
    signal_power = np.abs(np.diag(cross)) ** 2

    return ProtocolResult(
        selected_index=q_hat,
        rc_applied=cb.codewords[q_hat - 1].rc,
        true_sum_rate=float(per_user.sum()),
        predicted_sum_rate=chosen.predicted_sum_rate,
        per_user_rates=per_user,
        per_user_signal_power=signal_power,
        estimation_error_norm=error_norms,
        evaluations=evaluations,
    )
