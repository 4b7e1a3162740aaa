"""Experiment configuration: schema, file parsing, and figure presets.

Configs are line-oriented ``key = value`` text with ``[section]`` headers
(sections: experiment, geometry, link_g, link_r, link_d). Keys before any
section header belong to [experiment]. Missing keys fall back to the
standard two-user deployment defaults; unknown keys are an error.
"""

import configparser
import math
from dataclasses import dataclass, replace

from .channel import LinkParams, SystemGeometry, build_statistical_csi
from .codebook import AoOptions

SWEEP_VARIABLES = ("P_d", "N", "Q", "T_c")
CSI_MODES = ("perfect", "imperfect")
SCHEMES = ("environment_aware", "random_codebook")
SCENARIOS = ("fig3a", "fig3b", "fig5a", "fig5b", "fig5c", "fig5d")

# Rician factor (dB) treated as a pure-LoS link from here on up.
LOS_ONLY_F_DB = 300.0


class ConfigError(ValueError):
    """Config file failed to parse or validate."""


def dbm_to_watts(x: float) -> float:
    """Power in dBm to watts: 10^((x - 30) / 10)."""
    return 10.0 ** ((x - 30.0) / 10.0)


def watts_to_dbm(x: float) -> float:
    if x <= 0:
        raise ValueError("power must be > 0 to express in dBm")
    return 10.0 * math.log10(x) + 30.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one Monte Carlo campaign."""

    geometry: SystemGeometry
    link_bs_ris: LinkParams
    link_ris_user: LinkParams
    link_bs_user: LinkParams
    bits: int
    q_size: int
    p_d_dbm: float
    p_ul_dbm: float
    sigma_z2_dbm: float
    sigma_k2_dbm: float
    trials: int
    seed: int
    sweep: str
    sweep_values: tuple
    csi_mode: str = "perfect"
    schemes: tuple = ("environment_aware",)
    t_c_values: tuple = (200,)
    direct_blocked: bool = False
    ao: AoOptions = AoOptions()
    scenario: str = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.bits < 1:
            raise ConfigError("b must be >= 1")
        if self.q_size < 1:
            raise ConfigError("Q must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if self.sweep not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep must be one of {SWEEP_VARIABLES}, got {self.sweep!r}")
        if len(self.sweep_values) < 1:
            raise ConfigError("sweep_values must be nonempty")
        if self.csi_mode not in CSI_MODES:
            raise ConfigError(f"csi_mode must be one of {CSI_MODES}, got {self.csi_mode!r}")
        if not self.schemes or any(s not in SCHEMES for s in self.schemes):
            raise ConfigError(f"schemes must be a nonempty subset of {SCHEMES}")
        if self.sweep in ("N", "Q", "T_c"):
            if any(v != int(v) or v < 1 for v in self.sweep_values):
                raise ConfigError(f"sweep_values for {self.sweep} must be positive integers")
        if any(t != int(t) or t < 1 for t in self.t_c_values):
            raise ConfigError("T_c values must be positive integers")

    @property
    def num_users(self) -> int:
        return self.geometry.num_users

    @property
    def num_bs_antennas(self) -> int:
        return self.geometry.bs_antennas

    @property
    def num_ris_elements(self) -> int:
        return self.geometry.num_ris_elements

    def build_csi(self):
        return build_statistical_csi(self.geometry, self.link_bs_ris,
                                     self.link_ris_user, self.link_bs_user)


def near_square_factors(n: int):
    """Split N into rows x cols with rows the largest divisor <= sqrt(N)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rows = 1
    for d in range(1, int(math.isqrt(n)) + 1):
        if n % d == 0:
            rows = d
    return rows, n // rows


# Standard deployment (two users behind the RIS, BS 100 m away).
_PAPER_GEOMETRY = dict(
    bs_position=(0.0, 0.0, 5.0),
    bs_antennas=8,
    bs_spacing=0.5,
    ris_position=(0.0, 100.0, 5.0),
    ris_rows=10,
    ris_cols=10,
    ris_spacing=0.125,
    user_positions=((2.0, 100.0, 0.0), (-2.0, 100.0, 0.0)),
)

_PAPER_LINKS = dict(
    link_g=dict(rician_factor_db=4.0, pathloss_exponent=2.4,
                reference_loss_db=-20.0, reference_distance=1.0),
    link_r=dict(rician_factor_db=3.0, pathloss_exponent=2.5,
                reference_loss_db=-20.0, reference_distance=1.0),
    link_d=dict(rician_factor_db=-3.0, pathloss_exponent=3.5,
                reference_loss_db=-20.0, reference_distance=1.0),
)

_PAPER_EXPERIMENT = dict(
    b=1, Q=50, P_d_dbm=40.0, P_ul_dbm=-20.0,
    sigma_z2_dbm=-110.0, sigma_k2_dbm=-90.0,
    trials=1000, seed=0, csi_mode="perfect",
    schemes="environment_aware", T_c="200", direct_blocked="false",
    ao_max_outer_iterations=20, ao_convergence_tol=1e-4, ao_sweep_passes=1,
)

# Single-user scaling-law validation: BS, RIS, and user placed on the RIS
# boresight so every LoS steering entry is exactly 1 and a 1-bit codebook
# can align the LoS cascade with zero quantization loss. Array sizes and
# spacings inherit the standard defaults.
_VALIDATION_GEOMETRY = dict(
    bs_position=(50.0, 0.0, 0.0),
    ris_position=(0.0, 0.0, 0.0),
    user_positions=((30.0, 0.0, 0.0),),
)

_EXPERIMENT_KEYS = {
    "scenario", "seed", "trials", "sweep", "sweep_values", "csi_mode", "schemes",
    "M", "K", "N", "b", "Q", "P_d_dbm", "P_ul_dbm", "sigma_z2_dbm", "sigma_k2_dbm",
    "T_c", "direct_blocked",
    "ao_max_outer_iterations", "ao_convergence_tol", "ao_sweep_passes",
}
_GEOMETRY_KEYS = {
    "bs_position", "bs_antennas", "bs_spacing", "ris_position",
    "ris_rows", "ris_cols", "ris_spacing", "user_positions",
}
_LINK_KEYS = {"rician_factor_db", "pathloss_exponent",
              "reference_loss_db", "reference_distance"}
_SECTION_KEYS = {
    "experiment": _EXPERIMENT_KEYS,
    "geometry": _GEOMETRY_KEYS,
    "link_g": _LINK_KEYS,
    "link_r": _LINK_KEYS,
    "link_d": _LINK_KEYS,
}


def _scenario_overrides(name: str, desk_scale: bool) -> dict:
    """Structural settings that define each figure scenario."""
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; valid names: {', '.join(SCENARIOS)}")
    ov = {"experiment": {"scenario": name}, "geometry": {}, "link_g": {}, "link_r": {},
          "link_d": {}}
    exp = ov["experiment"]
    if name in ("fig3a", "fig3b"):
        ov["geometry"] = dict(_VALIDATION_GEOMETRY)
        exp.update(sweep="Q", sweep_values="5, 10, 20, 50", Q=50,
                   direct_blocked="true", schemes="environment_aware",
                   csi_mode="perfect" if name == "fig3a" else "imperfect")
        ov["link_g"] = {"rician_factor_db": LOS_ONLY_F_DB}
    elif name == "fig5a":
        exp.update(sweep="P_d", sweep_values="30, 35, 40, 45, 50",
                   schemes="environment_aware, random_codebook")
    elif name == "fig5b":
        exp.update(sweep="N", sweep_values="16, 36, 64, 100",
                   schemes="environment_aware, random_codebook")
    elif name == "fig5c":
        exp.update(sweep="Q", sweep_values="5, 10, 20, 50",
                   schemes="environment_aware, random_codebook")
    elif name == "fig5d":
        # Overhead/performance trade-off needs selection gain to matter:
        # weak direct link, scattering-dominated RIS-user link, and a power
        # level that keeps the users out of the log-saturated regime.
        exp.update(sweep="Q", sweep_values="5, 10, 25, 50, 80",
                   schemes="environment_aware", csi_mode="perfect",
                   T_c="120, 200", P_d_dbm=30.0, sigma_k2_dbm=-57.0)
        ov["link_r"] = {"rician_factor_db": -60.0}
        ov["link_d"] = {"pathloss_exponent": 4.5}
    if desk_scale:
        exp["trials"] = 200
        if name == "fig5b":
            exp["sweep_values"] = "4, 16, 36, 64"
        else:
            exp["N"] = 16
        if name in ("fig5a", "fig5b"):
            exp["Q"] = 10
    return ov


def _parse_scalar(section: str, key: str, raw: str, kind):
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if kind is int:
            value = int(str(raw).strip())
        else:
            value = float(str(raw).strip())
        return value
    except (TypeError, ValueError):
        raise ConfigError(
            f"invalid value for {key} in [{section}]: {raw!r}"
        ) from None


def _parse_number_list(section: str, key: str, raw: str):
    parts = [p for chunk in str(raw).split(",") for p in chunk.split()]
    if not parts:
        raise ConfigError(f"invalid value for {key} in [{section}]: empty list")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"invalid value for {key} in [{section}]: {raw!r}") from None


def _parse_position(section: str, key: str, raw: str):
    vals = _parse_number_list(section, key, raw)
    if len(vals) != 3:
        raise ConfigError(f"invalid value for {key} in [{section}]: need 3 coordinates")
    return vals


def _parse_positions(section: str, key: str, raw: str):
    groups = [g.strip() for g in str(raw).split(";") if g.strip()]
    if not groups:
        raise ConfigError(f"invalid value for {key} in [{section}]: empty list")
    return tuple(_parse_position(section, key, g) for g in groups)


def _read_sections(text: str) -> dict:
    """Parse raw config text into {section: {key: raw string}}."""
    wrapped = "[experiment]\n" + text
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#",), interpolation=None,
                                   strict=True, empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string(wrapped)
    except configparser.Error as err:
        message = str(err).replace("<string>", "config")
        raise ConfigError(f"parse error: {message} (line numbers offset by 1)") from None

    sections = {}
    unknown = []
    for section in cp.sections():
        if section not in _SECTION_KEYS:
            unknown.append(f"[{section}]")
            continue
        sections[section] = dict(cp.items(section))
        for key in sections[section]:
            if key not in _SECTION_KEYS[section]:
                unknown.append(f"{key} (in [{section}])")
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(sorted(unknown)))
    return sections


def _merge(base: dict, override: dict) -> dict:
    out = {sec: dict(base.get(sec, {})) for sec in _SECTION_KEYS}
    for sec, kv in override.items():
        out.setdefault(sec, {}).update(kv)
    return out


def _assemble(settings: dict) -> ExperimentConfig:
    exp = settings.get("experiment", {})
    geo = settings.get("geometry", {})

    def exp_scalar(key, kind, required=False):
        if key not in exp or exp[key] is None:
            if required:
                raise ConfigError(f"missing required key {key} in [experiment]")
            return None
        return _parse_scalar("experiment", key, exp[key], kind)

    # Geometry, starting from the defaults and applying overrides.
    gd = dict(_PAPER_GEOMETRY)
    for key in ("bs_position", "ris_position"):
        if key in geo:
            gd[key] = _parse_position("geometry", key, geo[key]) \
                if isinstance(geo[key], str) else tuple(geo[key])
    if "user_positions" in geo:
        raw = geo["user_positions"]
        gd["user_positions"] = _parse_positions("geometry", "user_positions", raw) \
            if isinstance(raw, str) else tuple(tuple(u) for u in raw)
    for key, kind in (("bs_antennas", int), ("ris_rows", int), ("ris_cols", int)):
        if key in geo:
            gd[key] = _parse_scalar("geometry", key, geo[key], kind)
    for key in ("bs_spacing", "ris_spacing"):
        if key in geo:
            gd[key] = _parse_scalar("geometry", key, geo[key], float)

    m_key = exp_scalar("M", int)
    if m_key is not None:
        if "bs_antennas" in geo and gd["bs_antennas"] != m_key:
            raise ConfigError("M conflicts with [geometry] bs_antennas")
        gd["bs_antennas"] = m_key

    n_key = exp_scalar("N", int)
    if n_key is not None:
        if "ris_rows" in geo or "ris_cols" in geo:
            if gd["ris_rows"] * gd["ris_cols"] != n_key:
                raise ConfigError("N conflicts with [geometry] ris_rows * ris_cols")
        else:
            gd["ris_rows"], gd["ris_cols"] = near_square_factors(n_key)

    k_key = exp_scalar("K", int)
    if k_key is not None:
        if "user_positions" in geo:
            if len(gd["user_positions"]) != k_key:
                raise ConfigError("K conflicts with [geometry] user_positions")
        elif k_key <= len(gd["user_positions"]):
            gd["user_positions"] = tuple(gd["user_positions"][:k_key])
        else:
            raise ConfigError(
                f"K={k_key} exceeds the {len(gd['user_positions'])} default user "
                f"positions; provide [geometry] user_positions"
            )

    try:
        geometry = SystemGeometry(**gd)
    except ValueError as err:
        raise ConfigError(f"invalid geometry: {err}") from None

    def link(section: str) -> LinkParams:
        vals = dict(_PAPER_LINKS[section])
        for key, raw in settings.get(section, {}).items():
            vals[key] = _parse_scalar(section, key, raw, float)
        try:
            return LinkParams(**vals)
        except ValueError as err:
            raise ConfigError(f"invalid [{section}]: {err}") from None

    sweep = exp.get("sweep")
    if sweep is None:
        raise ConfigError("missing required key sweep in [experiment]")
    sweep = str(sweep).strip()
    raw_sweep_values = exp.get("sweep_values")
    if raw_sweep_values is None:
        raise ConfigError("missing required key sweep_values in [experiment]")
    sweep_values = _parse_number_list("experiment", "sweep_values", raw_sweep_values)

    schemes_raw = exp.get("schemes", "environment_aware")
    schemes = tuple(p.strip() for p in str(schemes_raw).split(",") if p.strip())
    csi_mode = str(exp.get("csi_mode", "perfect")).strip()

    t_c_raw = exp.get("T_c", "200")
    t_c_values = tuple(int(v) for v in _parse_number_list("experiment", "T_c", str(t_c_raw)))

    max_outer = exp_scalar("ao_max_outer_iterations", int)
    tol = exp_scalar("ao_convergence_tol", float)
    sweeps = exp_scalar("ao_sweep_passes", int)
    try:
        ao = AoOptions(
            max_outer_iterations=20 if max_outer is None else max_outer,
            convergence_tol=1e-4 if tol is None else tol,
            sweep_passes_per_refinement=1 if sweeps is None else sweeps,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None

    scenario = exp.get("scenario")
    try:
        return ExperimentConfig(
            geometry=geometry,
            link_bs_ris=link("link_g"),
            link_ris_user=link("link_r"),
            link_bs_user=link("link_d"),
            bits=exp_scalar("b", int) if "b" in exp else 1,
            q_size=exp_scalar("Q", int) if "Q" in exp else 50,
            p_d_dbm=exp_scalar("P_d_dbm", float) if "P_d_dbm" in exp else 40.0,
            p_ul_dbm=exp_scalar("P_ul_dbm", float) if "P_ul_dbm" in exp else -20.0,
            sigma_z2_dbm=exp_scalar("sigma_z2_dbm", float) if "sigma_z2_dbm" in exp else -110.0,
            sigma_k2_dbm=exp_scalar("sigma_k2_dbm", float) if "sigma_k2_dbm" in exp else -90.0,
            trials=exp_scalar("trials", int) if "trials" in exp else 1000,
            seed=exp_scalar("seed", int) if "seed" in exp else 0,
            sweep=sweep,
            sweep_values=sweep_values,
            csi_mode=csi_mode,
            schemes=schemes,
            t_c_values=t_c_values,
            direct_blocked=_parse_scalar("experiment", "direct_blocked",
                                         str(exp.get("direct_blocked", "false")), bool),
            ao=ao,
            scenario=str(scenario).strip() if scenario is not None else None,
        )
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(str(err)) from None


def load_config(path, scenario: str = None) -> ExperimentConfig:
    """Load and validate an experiment config file.

    A ``scenario`` key in the file (or the ``scenario`` argument) layers
    that scenario's structural settings (sweep, schemes, CSI mode, special
    geometry) under the file's explicit keys; everything else falls back to
    the standard full-scale deployment defaults. The ``scenario`` argument
    selects the desk-scale preset as the base instead.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    file_sections = _read_sections(text)

    file_scenario = file_sections.get("experiment", {}).get("scenario")
    if scenario is not None:
        if file_scenario is not None and str(file_scenario).strip() != scenario:
            raise ConfigError(
                f"scenario argument {scenario!r} conflicts with config file "
                f"scenario {file_scenario!r}"
            )
        base = _scenario_overrides(scenario, desk_scale=True)
    elif file_scenario is not None:
        base = _scenario_overrides(str(file_scenario).strip(), desk_scale=False)
    else:
        base = {}

    merged = _merge({"experiment": dict(_PAPER_EXPERIMENT)},
                    _merge(base, file_sections))
    return _assemble(merged)


def scenario_presets(name: str) -> ExperimentConfig:
    """Desk-scale preset for one of the figure scenarios.

    fig3a/fig3b: single-user scaling-law validation (perfect / imperfect
    CSI) sweeping the codebook size. fig5a: sum rate versus transmit power.
    fig5b: versus RIS size. fig5c: versus codebook size with the random
    baseline. fig5d: effective rate versus codebook size for two coherence
    times. Desk scale means a 16-element RIS and 200 trials; pass overrides
    through a config file for full-scale runs.
    """
    base = _merge({"experiment": dict(_PAPER_EXPERIMENT)},
                  _scenario_overrides(name, desk_scale=True))
    return _assemble(base)


def apply_sweep_value(cfg: ExperimentConfig, value) -> ExperimentConfig:
    """Config for one sweep point (sweeping T_c leaves the campaign config as is)."""
    if cfg.sweep == "P_d":
        return replace(cfg, p_d_dbm=float(value))
    if cfg.sweep == "Q":
        return replace(cfg, q_size=int(value))
    if cfg.sweep == "N":
        rows, cols = near_square_factors(int(value))
        return replace(cfg, geometry=replace(cfg.geometry, ris_rows=rows, ris_cols=cols))
    if cfg.sweep == "T_c":
        return replace(cfg, t_c_values=(int(value),))
    raise ConfigError(f"unsupported sweep variable {cfg.sweep!r}")
