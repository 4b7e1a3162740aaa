"""Run every desk-scale campaign preset and emit plot-ready CSVs.

fig3a/fig3b: single-user rate versus training size against the theory
curve (perfect / imperfect CSI). fig5a: sum rate versus transmit power.
fig5b: versus RIS size. fig5c: versus training size, with the random
baseline. fig5d: effective rate versus training size for two coherence
times. Expect a few minutes at the default trial counts; pass --quick to
shrink them.
"""

import sys
from dataclasses import replace
from pathlib import Path

from ris_codebook import emit_csv, run_campaign, scenario_presets

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

quick = "--quick" in sys.argv

for name in ("fig3a", "fig3b", "fig5a", "fig5b", "fig5c", "fig5d"):
    cfg = scenario_presets(name)
    if quick:
        cfg = replace(cfg, trials=30)
    stats = run_campaign(cfg)
    path = OUT / f"{name}.csv"
    emit_csv(stats, path)
    print(f"{name}: {len(stats.rows)} rows -> {path}")
    for row in stats.rows:
        theory = f"  theory {row.theory_value:.3f}" if row.theory_value else ""
        extra = ""
        if name == "fig5d":
            extra = "  R_e " + " ".join(
                f"Tc{t}:{v:.3f}" for t, v in sorted(row.effective_rates.items()))
        print(f"  {row.sweep_var}={row.sweep_value:g} {row.scheme:>18}: "
              f"{row.mean_rate:7.3f} +- {row.stderr:.3f}{theory}{extra}")
