"""Walk through the channel model: geometry, LoS structure, Rician draws.

Builds the standard two-user deployment, inspects the statistical CSI it
induces, and verifies the sampling moments empirically.
"""

import numpy as np

from ris_codebook import (
    LinkParams,
    SystemGeometry,
    build_statistical_csi,
    composite_channel,
    sample_channel_realization,
    sample_rician_vector,
)

geom = SystemGeometry(
    bs_position=(0.0, 0.0, 5.0), bs_antennas=8, bs_spacing=0.5,
    ris_position=(0.0, 100.0, 5.0), ris_rows=4, ris_cols=4, ris_spacing=0.125,
    user_positions=((2.0, 100.0, 0.0), (-2.0, 100.0, 0.0)),
)
links = dict(
    bs_ris=LinkParams(rician_factor_db=4.0, pathloss_exponent=2.4),
    ris_user=LinkParams(rician_factor_db=3.0, pathloss_exponent=2.5),
    bs_user=LinkParams(rician_factor_db=-3.0, pathloss_exponent=3.5),
)

print("distances: BS-RIS %.1f m, RIS-user0 %.2f m, BS-user0 %.2f m" % (
    geom.bs_ris_distance, geom.ris_user_distance(0), geom.bs_user_distance(0)))

csi = build_statistical_csi(geom, links["bs_ris"], links["ris_user"], links["bs_user"])
print("path gains: beta_g %.3e, beta_r %.3e, beta_d %.3e" % (
    csi.beta_bs_ris, csi.beta_ris_user[0], csi.beta_bs_user[0]))
print("CSI fingerprint:", csi.fingerprint()[:16], "...")

# the BS-RIS LoS component is an outer product of two steering vectors
gram = csi.los_bs_ris.conj().T @ csi.los_bs_ris
t1 = np.real(np.trace(gram))
t2 = np.real(np.trace(gram @ gram))
print("LoS BS-RIS rank-1 check: trace^2 / trace-of-square = %.12f (1 = rank one)"
      % (t1 * t1 / t2))

# per-entry second moment of a Rician draw equals the link gain
rng = np.random.default_rng(0)
samples = [sample_rician_vector(csi.los_ris_user[0], 3.0, csi.beta_ris_user[0], rng)
           for _ in range(20_000)]
moment = np.mean([np.mean(np.abs(s) ** 2) for s in samples])
print("empirical E|h_r entry|^2 / beta_r = %.4f (expect 1)" % (moment / csi.beta_ris_user[0]))

# a full realization and the composite channel under a random 1-bit pattern
real = sample_channel_realization(csi, np.random.default_rng(1))
phi = np.exp(1j * np.pi * np.random.default_rng(2).integers(0, 2, geom.num_ris_elements))
h0 = composite_channel(real.g, real.h_r[0], real.h_d[0], phi)
print("composite channel user 0: shape %s, power %.3e" % (h0.shape, np.sum(np.abs(h0) ** 2)))
direct_only = composite_channel(real.g, np.zeros_like(real.h_r[0]), real.h_d[0], phi)
print("direct path alone:        power %.3e" % np.sum(np.abs(direct_only) ** 2))
