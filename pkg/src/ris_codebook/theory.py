"""Closed-form received-power scaling law for the single-user scenario.

Evaluates the expected downlink signal power after selecting the best of Q
trained codewords, under a blocked direct link and a rank-one LoS BS-RIS
channel: an N^2 term from the aligned LoS part, a sqrt(pi) cross term, and
an N (log Q + C) term from picking the maximum of Q near-independent
exponential NLoS contributions, degraded by a factor mu when the selection
is driven by noisy channel estimates. Also provides the exact finite-Q
order-statistics expectation for quantifying the asymptotic gap.
"""

import math
from dataclasses import dataclass

EULER_MASCHERONI = 0.5772156649


@dataclass(frozen=True)
class ScalingLawInputs:
    """Parameters of the single-user received-power law."""

    p_d: float                   # downlink transmit power, watts
    m: int                       # BS antennas
    n: int                       # RIS elements
    q_size: int                  # codebook size
    beta_r: float                # RIS-user link gain, linear
    beta_g: float                # BS-RIS link gain, linear
    f_r_db: float                # RIS-user Rician factor, dB
    sigma_q2: float = 0.0        # estimation-error variance, watts

    def __post_init__(self):
        if self.p_d <= 0 or self.beta_r <= 0 or self.beta_g <= 0:
            raise ValueError("powers and path gains must be > 0")
        if self.m < 1 or self.q_size < 1:
            raise ValueError("m and q_size must be >= 1")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.sigma_q2 < 0:
            raise ValueError("sigma_q2 must be >= 0")


@dataclass(frozen=True)
class ScalingLawBreakdown:
    """Received-power terms in watts plus the dimensionless factors."""

    los_term: float
    cross_term: float
    nlos_term: float
    total: float
    f1: float
    f2: float
    mu: float
    euler_c: float = EULER_MASCHERONI


def _rician_split(f_r_db: float):
    f = 10.0 ** (f_r_db / 10.0)
    f1 = math.sqrt(f / (f + 1.0))
    f2 = math.sqrt(1.0 / (f + 1.0))
    return f1, f2


def selection_degradation(n: int, beta_r: float, beta_g: float,
                          sigma_q2: float) -> float:
    """Factor mu in (0, 1] shrinking the NLoS gain under noisy selection.

    Equals 1 exactly when sigma_q2 = 0 and decreases monotonically as the
    estimation-error variance grows relative to the per-element cascaded
    channel power beta_r * beta_g.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if sigma_q2 == 0.0:
        return 1.0       # (n-1) * sqrt(1/(n-1)) = sqrt(n-1) exactly
    cascade = beta_r * beta_g
    ratio = math.sqrt(cascade / ((n - 1) * cascade + sigma_q2))
    return (n + (math.pi / 2.0) * (n - 1) * ratio) / (n + (math.pi / 2.0) * math.sqrt(n - 1))


def scaling_law(inputs: ScalingLawInputs) -> ScalingLawBreakdown:
    """Average received signal power after best-of-Q codeword selection.

    total = P_d M beta_r beta_g (N^2 F1^2 + N F1 F2 sqrt(pi)
            + N F2^2 mu (log Q + C)) with natural log and C the
    Euler-Mascheroni constant.
    """
    f1, f2 = _rician_split(inputs.f_r_db)
    mu = selection_degradation(inputs.n, inputs.beta_r, inputs.beta_g, inputs.sigma_q2)
    prefactor = inputs.p_d * inputs.m * inputs.beta_r * inputs.beta_g
    n = float(inputs.n)
    los = prefactor * n * n * f1 * f1
    cross = prefactor * n * f1 * f2 * math.sqrt(math.pi)
    nlos = prefactor * n * f2 * f2 * mu * (math.log(inputs.q_size) + EULER_MASCHERONI)
    return ScalingLawBreakdown(
        los_term=los, cross_term=cross, nlos_term=nlos,
        total=los + cross + nlos, f1=f1, f2=f2, mu=mu,
    )


def perfect_csi_power(p_d: float, m: int, n: int, q_size: int,
                      beta_r: float, beta_g: float, f_r_db: float) -> float:
    """Received-power asymptote when estimation errors vanish.

    P_d beta_r beta_g M (F1^2 N^2 + F2^2 N (log Q + C) + sqrt(pi) F1 F2 N),
    i.e. :func:`scaling_law` with sigma_q2 = 0, where mu = 1.
    """
    inputs = ScalingLawInputs(p_d=p_d, m=m, n=n, q_size=q_size,
                              beta_r=beta_r, beta_g=beta_g, f_r_db=f_r_db,
                              sigma_q2=0.0)
    return scaling_law(inputs).total


def exact_max_expectation(q_size: int, n: int) -> float:
    """Exact E[max of Q i.i.d. exponentials with mean N]: N times H_Q.

    The harmonic number H_Q replaces the asymptotic log Q + C; the gap is
    about 1/(2Q), useful for judging the approximation at small Q.
    """
    if q_size < 1:
        raise ValueError("q_size must be >= 1")
    harmonic = math.fsum(1.0 / q for q in range(1, q_size + 1))
    return n * harmonic


def estimation_error_variance(sigma_z2: float, k: int, p_ul: float) -> float:
    """Per-entry error variance of the least-squares composite estimate.

    With orthogonal pilots of length K the estimate error per entry is
    CN(0, sigma_z^2 / (K P_ul)); this is the sigma_q2 that the scaling law
    consumes.
    """
    if sigma_z2 < 0:
        raise ValueError("sigma_z2 must be >= 0")
    if k < 1:
        raise ValueError("k must be >= 1")
    if p_ul <= 0:
        raise ValueError("p_ul must be > 0")
    return sigma_z2 / (k * p_ul)
