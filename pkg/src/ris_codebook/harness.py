"""Monte Carlo campaign driver: sweeps, aggregation, and CSV emission.

Stream discipline: every random draw comes from a generator keyed by
(root seed, purpose, ...) so results are reproducible and adding sweep
points or schemes never perturbs existing streams. Channel realizations
are keyed by trial only, so the same trial sees the same channel at every
sweep point and under every scheme; uplink noise is keyed by (scheme,
trial) and re-created per sweep point so codeword q always sees the same
noise regardless of how many codewords follow it.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import sample_channel_realization
from .codebook import Codebook, build_codebook, random_codebook
from .config import ExperimentConfig, apply_sweep_value, dbm_to_watts
from .protocol import run_online
from .theory import ScalingLawInputs, estimation_error_variance, scaling_law

# Purpose tags for derived random streams.
_STREAM_CODEBOOK = 0
_STREAM_CHANNEL = 1
_STREAM_ONLINE = 2


class CampaignError(RuntimeError):
    """A sweep cell failed; the message names the sweep point and scheme."""

_SCHEME_IDS = {"environment_aware": 0, "random_codebook": 1}


def _derive_seed(*key) -> int:
    """Collapse an integer key tuple into one 64-bit seed."""
    ss = np.random.SeedSequence([int(k) for k in key])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _trial_channel_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, _STREAM_CHANNEL, trial])


def _trial_online_rng(seed: int, scheme_id: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, _STREAM_ONLINE, scheme_id, trial])


@dataclass
class SweepPointStats:
    """Aggregated outcome of one (sweep value, scheme) cell."""

    sweep_var: str
    sweep_value: float
    scheme: str
    mean_rate: float
    stderr: float
    trials: int
    theory_value: float = None           # theoretical rate, when applicable
    theory_power: float = None           # theoretical received power, watts
    mean_signal_power: np.ndarray = None  # per-user mean received signal power
    selected_counts: dict = field(default_factory=dict)
    effective_rates: dict = field(default_factory=dict)   # T_c -> R_e
    effective_rate_flagged: dict = field(default_factory=dict)
    rates: np.ndarray = field(default=None, repr=False)   # per-trial sum rates
    signal_powers: np.ndarray = field(default=None, repr=False)  # trials x K


@dataclass
class McStatistics:
    """All sweep cells of one campaign, in deterministic emission order."""

    config: ExperimentConfig
    rows: list = field(default_factory=list)


def effective_rate(sum_rate: float, t_c: float, tau: float) -> float:
    """Training-discounted rate (T_c - tau)/T_c * sum_rate.

    Returns 0.0 when the training overhead tau exceeds the coherence time;
    the campaign flags such sweep points.
    """
    if t_c <= 0:
        raise ValueError("t_c must be > 0")
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if tau > t_c:
        return 0.0
    return (t_c - tau) / t_c * sum_rate


def theory_applies(cfg: ExperimentConfig) -> bool:
    """Whether the single-user scaling law describes this configuration."""
    return (cfg.num_users == 1
            and cfg.direct_blocked
            and cfg.link_bs_ris.rician_factor_db >= 100.0
            and cfg.num_ris_elements >= 2)


def _theory_for_point(cfg: ExperimentConfig, csi) -> tuple:
    """(theoretical rate, theoretical received power) for one sweep cell."""
    if cfg.csi_mode == "imperfect":
        sigma_q2 = estimation_error_variance(dbm_to_watts(cfg.sigma_z2_dbm),
                                             cfg.num_users,
                                             dbm_to_watts(cfg.p_ul_dbm))
    else:
        sigma_q2 = 0.0
    law = scaling_law(ScalingLawInputs(
        p_d=dbm_to_watts(cfg.p_d_dbm), m=cfg.num_bs_antennas,
        n=cfg.num_ris_elements, q_size=cfg.q_size,
        beta_r=float(csi.beta_ris_user[0]), beta_g=csi.beta_bs_ris,
        f_r_db=cfg.link_ris_user.rician_factor_db, sigma_q2=sigma_q2,
    ))
    rate = math.log2(1.0 + law.total / dbm_to_watts(cfg.sigma_k2_dbm))
    return rate, law.total


def _blocked_realization(realization):
    for k in range(realization.num_users):
        realization.h_d[k] = np.zeros_like(realization.h_d[k])
    return realization


def _codebook_for_point(cfg: ExperimentConfig, csi, scheme: str,
                        build_q: int, build_p_d_dbm: float, value_key: int) -> Codebook:
    build_seed = _derive_seed(cfg.seed, _STREAM_CODEBOOK,
                              _SCHEME_IDS[scheme], value_key)
    if scheme == "random_codebook":
        return random_codebook(cfg.num_ris_elements, cfg.bits, build_q, build_seed,
                               num_users=cfg.num_users,
                               csi_fingerprint=csi.fingerprint())
    noise = np.full(cfg.num_users, dbm_to_watts(cfg.sigma_k2_dbm))
    return build_codebook(csi, build_q, dbm_to_watts(build_p_d_dbm), noise,
                          cfg.bits, cfg.ao, build_seed)


def run_campaign(cfg: ExperimentConfig,
                 codebook_override: Codebook = None) -> McStatistics:
    """Execute the full sweep: offline codebooks once, then online trials.

    The environment-aware codebook is rebuilt only when the sweep variable
    changes its offline inputs (an N sweep). Q sweeps slice prefixes of one
    build, which makes the training sets nested; P_d sweeps reuse the
    codebook built at the campaign's base power so per-trial outcomes stay
    comparable across points. ``codebook_override`` replaces the built
    environment-aware codebook (not valid for N sweeps).
    """
    if codebook_override is not None and cfg.sweep == "N":
        raise ValueError("a fixed codebook cannot serve an N sweep")
    stats = McStatistics(config=cfg)
    noise_users = np.full(cfg.num_users, dbm_to_watts(cfg.sigma_k2_dbm))
    p_ul = dbm_to_watts(cfg.p_ul_dbm)
    sigma_z2 = 0.0 if cfg.csi_mode == "perfect" else dbm_to_watts(cfg.sigma_z2_dbm)

    shared_cache = {}          # scheme -> Codebook, for sweeps with fixed offline inputs
    max_q = int(max(cfg.sweep_values)) if cfg.sweep == "Q" else cfg.q_size

    for sweep_value in cfg.sweep_values:
        point_cfg = apply_sweep_value(cfg, sweep_value)
        csi = point_cfg.build_csi()
        p_d = dbm_to_watts(point_cfg.p_d_dbm)

        for scheme in cfg.schemes:
            try:
                if cfg.sweep == "N":
                    cb = _codebook_for_point(point_cfg, csi, scheme,
                                             point_cfg.q_size, point_cfg.p_d_dbm,
                                             value_key=int(sweep_value))
                else:
                    if scheme not in shared_cache:
                        if scheme == "environment_aware" and codebook_override is not None:
                            shared_cache[scheme] = codebook_override
                        else:
                            shared_cache[scheme] = _codebook_for_point(
                                cfg, csi, scheme, max_q, cfg.p_d_dbm, value_key=0)
                    cb = shared_cache[scheme]
                    if len(cb) != point_cfg.q_size:
                        cb = cb.prefix(point_cfg.q_size)

                rates = np.zeros(cfg.trials)
                signal_power = np.zeros((cfg.trials, cfg.num_users))
                selected_counts = {}
                scheme_id = _SCHEME_IDS[scheme]
                for trial in range(cfg.trials):
                    realization = sample_channel_realization(
                        csi, _trial_channel_rng(cfg.seed, trial))
                    if cfg.direct_blocked:
                        realization = _blocked_realization(realization)
                    result = run_online(realization, cb, p_ul, p_d, sigma_z2,
                                        noise_users,
                                        _trial_online_rng(cfg.seed, scheme_id, trial))
                    rates[trial] = result.true_sum_rate
                    signal_power[trial] = result.per_user_signal_power
                    selected_counts[result.selected_index] = \
                        selected_counts.get(result.selected_index, 0) + 1
            except Exception as err:
                raise CampaignError(
                    f"sweep {cfg.sweep}={sweep_value}, scheme {scheme}: {err}"
                ) from err

            mean_rate = float(rates.mean())
            stderr = float(rates.std(ddof=1) / np.sqrt(cfg.trials)) if cfg.trials > 1 else 0.0

            theory_rate = theory_power = None
            if scheme == "environment_aware" and theory_applies(point_cfg):
                theory_rate, theory_power = _theory_for_point(point_cfg, csi)

            tau = point_cfg.q_size * cfg.num_users
            eff = {t_c: effective_rate(mean_rate, t_c, tau)
                   for t_c in point_cfg.t_c_values}
            flagged = {t_c: tau > t_c for t_c in point_cfg.t_c_values}

            stats.rows.append(SweepPointStats(
                sweep_var=cfg.sweep, sweep_value=float(sweep_value), scheme=scheme,
                mean_rate=mean_rate, stderr=stderr, trials=cfg.trials,
                theory_value=theory_rate, theory_power=theory_power,
                mean_signal_power=signal_power.mean(axis=0),
                selected_counts=dict(sorted(selected_counts.items())),
                effective_rates=eff, effective_rate_flagged=flagged,
                rates=rates, signal_powers=signal_power,
            ))
    return stats


def _fmt(x) -> str:
    if x is None:
        return ""
    value = float(x)
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return f"{value:.16e}"


CSV_HEADER = "sweep_var,sweep_value,scheme,mean_rate,stderr,trials,theory_value"


def emit_csv(stats: McStatistics, path):
    """Write one row per (sweep value, scheme) with deterministic formatting.

    Floats carry 17 significant digits so re-parsing reproduces the
    in-memory values exactly; ``theory_value`` is empty where the scaling
    law does not apply.
    """
    lines = [CSV_HEADER]
    for row in stats.rows:
        lines.append(",".join([
            row.sweep_var,
            _fmt(row.sweep_value),
            row.scheme,
            f"{row.mean_rate:.16e}",
            f"{row.stderr:.16e}",
            str(row.trials),
            "" if row.theory_value is None else f"{row.theory_value:.16e}",
        ]))
    data = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(data)
    return data
