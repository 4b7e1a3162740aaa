"""Command-line front end.

Subcommands: ``run`` (full campaign to CSV), ``codebook`` (offline stage
only, writes a codebook file), ``theory`` (closed-form curves only). Exit
codes: 0 success, 1 configuration/validation error, 2 runtime error.
"""

import argparse
import sys
import warnings
from dataclasses import replace

import numpy as np

from .codebook import deserialize_codebook, serialize_codebook
from .config import ConfigError, dbm_to_watts, load_config, scenario_presets
from .harness import _codebook_for_point, emit_csv, run_campaign, theory_applies
from .theory import ScalingLawInputs, estimation_error_variance, scaling_law


def _load(args):
    if args.config is None and getattr(args, "scenario", None) is None:
        raise ConfigError("provide --config and/or --scenario")
    if args.config is not None:
        cfg = load_config(args.config, scenario=getattr(args, "scenario", None))
    else:
        cfg = scenario_presets(args.scenario)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "trials", None) is not None:
        cfg = replace(cfg, trials=args.trials)
    return cfg


def _cmd_run(args) -> int:
    cfg = _load(args)
    external_codebook = None
    if args.codebook_in is not None:
        with open(args.codebook_in, "r", encoding="utf-8") as fh:
            text = fh.read()
        csi = cfg.build_csi()
        external_codebook = deserialize_codebook(text, expected_fingerprint=csi.fingerprint())
        if external_codebook.meta.num_elements != cfg.num_ris_elements \
                or external_codebook.meta.num_users != cfg.num_users:
            raise ConfigError("--codebook-in dimensions do not match the configuration")
        if cfg.sweep == "N":
            raise ConfigError("--codebook-in cannot be combined with an N sweep")
        needed = max(int(v) for v in cfg.sweep_values) if cfg.sweep == "Q" else cfg.q_size
        if len(external_codebook) < needed:
            raise ConfigError(
                f"--codebook-in holds {len(external_codebook)} codewords, "
                f"the campaign needs {needed}"
            )

    if args.codebook_out is not None:
        csi = cfg.build_csi()
        cb = external_codebook if external_codebook is not None else \
            _codebook_for_point(cfg, csi, "environment_aware", cfg.q_size,
                                cfg.p_d_dbm, value_key=0)
        with open(args.codebook_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(serialize_codebook(cb))

    stats = run_campaign(cfg, codebook_override=external_codebook)

    if args.out is not None:
        emit_csv(stats, args.out)
    else:
        for row in stats.rows:
            print(f"{row.sweep_var}={row.sweep_value:g} {row.scheme}: "
                  f"mean rate {row.mean_rate:.6f} +/- {row.stderr:.6f} "
                  f"({row.trials} trials)")
    return 0


def _cmd_codebook(args) -> int:
    cfg = _load(args)
    csi = cfg.build_csi()
    cb = _codebook_for_point(cfg, csi, "environment_aware", cfg.q_size,
                             cfg.p_d_dbm, value_key=0)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_codebook(cb))
    print(f"wrote {len(cb)} codewords to {args.out}")
    return 0


def _cmd_theory(args) -> int:
    cfg = _load(args)
    if not theory_applies(cfg):
        raise ConfigError(
            "theory curves need a single-user config with a blocked direct "
            "link and a LoS-only BS-RIS channel (use scenario fig3a or fig3b)"
        )
    lines = ["sweep_var,sweep_value,total_power_watts,los_term,cross_term,"
             "nlos_term,mu,rate_bits"]
    from .config import apply_sweep_value

    for value in cfg.sweep_values:
        point = apply_sweep_value(cfg, value)
        csi = point.build_csi()
        sigma_q2 = 0.0 if point.csi_mode == "perfect" else estimation_error_variance(
            dbm_to_watts(point.sigma_z2_dbm), point.num_users,
            dbm_to_watts(point.p_ul_dbm))
        law = scaling_law(ScalingLawInputs(
            p_d=dbm_to_watts(point.p_d_dbm), m=point.num_bs_antennas,
            n=point.num_ris_elements, q_size=point.q_size,
            beta_r=float(csi.beta_ris_user[0]), beta_g=csi.beta_bs_ris,
            f_r_db=point.link_ris_user.rician_factor_db, sigma_q2=sigma_q2))
        rate = np.log2(1.0 + law.total / dbm_to_watts(point.sigma_k2_dbm))
        lines.append(",".join([
            cfg.sweep, f"{float(value):g}",
            f"{law.total:.16e}", f"{law.los_term:.16e}", f"{law.cross_term:.16e}",
            f"{law.nlos_term:.16e}", f"{law.mu:.16e}", f"{rate:.16e}",
        ]))
    data = "\n".join(lines) + "\n"
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ris-codebook",
        description="Environment-aware RIS codebook simulation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo campaign")
    run.add_argument("--config", help="experiment config file")
    run.add_argument("--scenario", help="desk-scale preset name (fig3a..fig5d)")
    run.add_argument("--seed", type=int, help="override the root seed")
    run.add_argument("--trials", type=int, help="override the trial count")
    run.add_argument("--out", help="CSV output path")
    run.add_argument("--codebook-out", help="also write the offline codebook here")
    run.add_argument("--codebook-in", help="reuse a previously built codebook file")
    run.set_defaults(func=_cmd_run)

    cb = sub.add_parser("codebook", help="offline stage only: build a codebook file")
    cb.add_argument("--config", help="experiment config file")
    cb.add_argument("--scenario", help="desk-scale preset name")
    cb.add_argument("--seed", type=int, help="override the root seed")
    cb.add_argument("--out", required=True, help="codebook output path")
    cb.set_defaults(func=_cmd_codebook)

    th = sub.add_parser("theory", help="closed-form scaling-law curves only")
    th.add_argument("--config", help="experiment config file")
    th.add_argument("--scenario", help="desk-scale preset name")
    th.add_argument("--out", help="CSV output path (stdout if omitted)")
    th.set_defaults(func=_cmd_theory)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args)
    except (ConfigError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:   # runtime failures map to exit code 2
        print(f"runtime error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
