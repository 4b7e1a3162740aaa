"""Geometry-driven Rician channel model for the BS-RIS-user downlink.

Builds deterministic line-of-sight components from node positions (BS
uniform linear array along the z-axis, RIS uniform planar array in the
y-z plane), converts distances to linear path gains, and samples seeded
Rician realizations of all three links.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LinkParams:
    """Large-scale parameters of one link: Rician factor and path-loss law."""

    rician_factor_db: float
    pathloss_exponent: float
    reference_loss_db: float = -20.0
    reference_distance: float = 1.0

    def __post_init__(self):
        if self.pathloss_exponent < 0:
            raise ValueError("pathloss_exponent must be >= 0")
        if self.reference_distance <= 0:
            raise ValueError("reference_distance must be > 0")

    @property
    def rician_factor(self) -> float:
        """Rician factor as a linear power ratio."""
        return 10.0 ** (self.rician_factor_db / 10.0)


@dataclass(frozen=True)
class SystemGeometry:
    """3-D placement of the BS array, the RIS panel, and the users.

    Antenna/element spacings are in wavelengths, so carrier wavelength
    never enters the phase terms explicitly.
    """

    bs_position: tuple
    bs_antennas: int
    ris_position: tuple
    ris_rows: int
    ris_cols: int
    user_positions: tuple
    bs_spacing: float = 0.5
    ris_spacing: float = 0.125

    def __post_init__(self):
        object.__setattr__(self, "bs_position", tuple(float(x) for x in self.bs_position))
        object.__setattr__(self, "ris_position", tuple(float(x) for x in self.ris_position))
        object.__setattr__(
            self, "user_positions",
            tuple(tuple(float(x) for x in u) for u in self.user_positions),
        )
        if self.bs_antennas < 1 or self.ris_rows < 1 or self.ris_cols < 1:
            raise ValueError("antenna and element counts must be >= 1")
        if len(self.user_positions) < 1:
            raise ValueError("at least one user required")
        if self.bs_spacing <= 0 or self.ris_spacing <= 0:
            raise ValueError("element spacings must be > 0")
        if len(self.bs_position) != 3 or len(self.ris_position) != 3 or any(
            len(u) != 3 for u in self.user_positions
        ):
            raise ValueError("positions must be 3-D")
        for name, d in [("BS-RIS", self.bs_ris_distance)] + [
            (f"RIS-user{k}", self.ris_user_distance(k)) for k in range(self.num_users)
        ] + [(f"BS-user{k}", self.bs_user_distance(k)) for k in range(self.num_users)]:
            if d <= 0:
                raise ValueError(f"{name} distance must be > 0")

    @property
    def num_users(self) -> int:
        return len(self.user_positions)

    @property
    def num_ris_elements(self) -> int:
        return self.ris_rows * self.ris_cols

    @property
    def bs_ris_distance(self) -> float:
        return float(np.linalg.norm(np.subtract(self.ris_position, self.bs_position)))

    def ris_user_distance(self, k: int) -> float:
        return float(np.linalg.norm(np.subtract(self.user_positions[k], self.ris_position)))

    def bs_user_distance(self, k: int) -> float:
        return float(np.linalg.norm(np.subtract(self.user_positions[k], self.bs_position)))


def pathloss_linear(d: float, p: LinkParams) -> float:
    """Distance-based path loss as a linear power gain.

    ``10^(C0_dB/10) * (d/d0)^(-alpha)`` with C0 the reference loss at d0.
    """
    if d <= 0:
        raise ValueError(f"distance must be > 0, got {d}")
    c0 = 10.0 ** (p.reference_loss_db / 10.0)
    return c0 * (d / p.reference_distance) ** (-p.pathloss_exponent)


def steering_ula(m: int, spacing: float, sin_angle: float) -> np.ndarray:
    """Uniform-linear-array steering vector, entry i = exp(j 2 pi s i sin)."""
    if m < 1:
        raise ValueError("element count must be >= 1")
    if abs(sin_angle) > 1.0:
        raise ValueError(f"sin_angle must lie in [-1, 1], got {sin_angle}")
    idx = np.arange(m)
    return np.exp(2j * np.pi * spacing * idx * sin_angle)


def steering_upa(rows: int, cols: int, spacing: float,
                 azimuth_sin: float, elevation_sin: float) -> np.ndarray:
    """Uniform-planar-array steering vector of length rows*cols.

    Kronecker structure: entry (r, c) at flat index r*cols + c equals
    exp(j 2 pi s (r*elevation_sin + c*azimuth_sin)).
    """
    if rows < 1 or cols < 1:
        raise ValueError("element counts must be >= 1")
    if abs(azimuth_sin) > 1.0 or abs(elevation_sin) > 1.0:
        raise ValueError("direction sines must lie in [-1, 1]")
    row_part = steering_ula(rows, spacing, elevation_sin)
    col_part = steering_ula(cols, spacing, azimuth_sin)
    return np.kron(row_part, col_part)


@dataclass(frozen=True)
class StatisticalCsi:
    """Slowly varying channel knowledge: LoS components and large-scale gains.

    ``los_bs_ris`` is N x M and rank one by construction (outer product of
    the RIS receive and BS transmit steering vectors); per-user LoS vectors
    and path gains follow the user list order of the geometry.
    """

    los_bs_ris: np.ndarray
    los_ris_user: tuple          # K vectors of length N
    los_bs_user: tuple           # K vectors of length M
    params_bs_ris: LinkParams
    params_ris_user: LinkParams
    params_bs_user: LinkParams
    beta_bs_ris: float
    beta_ris_user: np.ndarray    # K linear gains
    beta_bs_user: np.ndarray     # K linear gains

    def __post_init__(self):
        if self.beta_bs_ris <= 0 or np.any(self.beta_ris_user <= 0) or np.any(self.beta_bs_user <= 0):
            raise ValueError("path gains must be strictly positive")
        for arr in (self.los_bs_ris, *self.los_ris_user, *self.los_bs_user):
            if np.max(np.abs(np.abs(arr) - 1.0)) > 1e-12:
                raise ValueError("LoS entries must have unit modulus")

    @property
    def num_users(self) -> int:
        return len(self.los_ris_user)

    @property
    def num_ris_elements(self) -> int:
        return self.los_bs_ris.shape[0]

    @property
    def num_bs_antennas(self) -> int:
        return self.los_bs_ris.shape[1]

    def fingerprint(self) -> str:
        """SHA-256 hex digest of the LoS components and link parameters."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.los_bs_ris, dtype=complex).tobytes())
        for v in self.los_ris_user:
            h.update(np.ascontiguousarray(v, dtype=complex).tobytes())
        for v in self.los_bs_user:
            h.update(np.ascontiguousarray(v, dtype=complex).tobytes())
        scalars = [self.beta_bs_ris, *np.atleast_1d(self.beta_ris_user),
                   *np.atleast_1d(self.beta_bs_user)]
        for p in (self.params_bs_ris, self.params_ris_user, self.params_bs_user):
            scalars += [p.rician_factor_db, p.pathloss_exponent,
                        p.reference_loss_db, p.reference_distance]
        h.update(np.asarray(scalars, dtype=float).tobytes())
        return h.hexdigest()


@dataclass
class ChannelRealization:
    """One draw of all links: G (N x M), per-user h_r (N,) and h_d (M,)."""

    g: np.ndarray
    h_r: list = field(default_factory=list)
    h_d: list = field(default_factory=list)

    @property
    def num_users(self) -> int:
        return len(self.h_r)


def _unit_direction(src, dst) -> np.ndarray:
    delta = np.subtract(dst, src, dtype=float)
    norm = np.linalg.norm(delta)
    if norm <= 0:
        raise ValueError("coincident node positions")
    return delta / norm


def _bs_steering(geom: SystemGeometry, target) -> np.ndarray:
    # BS ULA oriented along the z-axis: phase argument is the z direction cosine.
    u = _unit_direction(geom.bs_position, target)
    return steering_ula(geom.bs_antennas, geom.bs_spacing, u[2])


def _ris_steering(geom: SystemGeometry, target) -> np.ndarray:
    # RIS UPA in the y-z plane: rows step along z, columns along y.
    u = _unit_direction(geom.ris_position, target)
    return steering_upa(geom.ris_rows, geom.ris_cols, geom.ris_spacing,
                        azimuth_sin=u[1], elevation_sin=u[2])


def build_statistical_csi(geom: SystemGeometry,
                          params_bs_ris: LinkParams,
                          params_ris_user: LinkParams,
                          params_bs_user: LinkParams) -> StatisticalCsi:
    """Derive all LoS components and path gains from node geometry.

    The BS-RIS LoS matrix is the rank-one outer product of the RIS receive
    steering vector (toward the BS) and the conjugated BS transmit steering
    vector (toward the RIS).
    """
    a_ris_bs = _ris_steering(geom, geom.bs_position)
    a_bs_ris = _bs_steering(geom, geom.ris_position)
    los_g = np.outer(a_ris_bs, a_bs_ris.conj())

    los_r = tuple(_ris_steering(geom, u) for u in geom.user_positions)
    los_d = tuple(_bs_steering(geom, u) for u in geom.user_positions)

    beta_g = pathloss_linear(geom.bs_ris_distance, params_bs_ris)
    beta_r = np.array([pathloss_linear(geom.ris_user_distance(k), params_ris_user)
                       for k in range(geom.num_users)])
    beta_d = np.array([pathloss_linear(geom.bs_user_distance(k), params_bs_user)
                       for k in range(geom.num_users)])

    return StatisticalCsi(
        los_bs_ris=los_g, los_ris_user=los_r, los_bs_user=los_d,
        params_bs_ris=params_bs_ris, params_ris_user=params_ris_user,
        params_bs_user=params_bs_user,
        beta_bs_ris=beta_g, beta_ris_user=beta_r, beta_bs_user=beta_d,
    )


def complex_normal(shape, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. circularly-symmetric complex Gaussian entries, unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_rician_vector(los: np.ndarray, f_db: float, beta: float,
                         rng: np.random.Generator) -> np.ndarray:
    """One Rician draw: sqrt(beta) (sqrt(F/(F+1)) los + sqrt(1/(F+1)) n).

    ``los`` may be any shape; the NLoS part matches it elementwise with
    CN(0, 1) entries, so the per-entry second moment is beta exactly.
    """
    if beta <= 0:
        raise ValueError("beta must be > 0")
    f = 10.0 ** (f_db / 10.0)
    los_scale = np.sqrt(f / (f + 1.0))
    nlos_scale = np.sqrt(1.0 / (f + 1.0))
    nlos = complex_normal(np.shape(los), rng)
    return np.sqrt(beta) * (los_scale * np.asarray(los) + nlos_scale * nlos)


def sample_channel_realization(csi: StatisticalCsi,
                               rng: np.random.Generator) -> ChannelRealization:
    """Sample all links with fresh NLoS components from ``rng``.

    Draw order is fixed (G, then each h_r, then each h_d) so a given seed
    always reproduces the same realization.
    """
    g = sample_rician_vector(csi.los_bs_ris, csi.params_bs_ris.rician_factor_db,
                             csi.beta_bs_ris, rng)
    h_r = [sample_rician_vector(csi.los_ris_user[k],
                                csi.params_ris_user.rician_factor_db,
                                float(csi.beta_ris_user[k]), rng)
           for k in range(csi.num_users)]
    h_d = [sample_rician_vector(csi.los_bs_user[k],
                                csi.params_bs_user.rician_factor_db,
                                float(csi.beta_bs_user[k]), rng)
           for k in range(csi.num_users)]
    return ChannelRealization(g=g, h_r=h_r, h_d=h_d)


def composite_channel(g: np.ndarray, h_r: np.ndarray, h_d: np.ndarray,
                      phi: np.ndarray) -> np.ndarray:
    """Effective BS-to-user channel h with h^H = h_r^H diag(phi) G + h_d^H.

    ``phi`` is the vector of unit-modulus reflection coefficients (use
    ``RcConfig.phase_vector`` for a discrete configuration). Returns the
    column vector h of length M.
    """
    g = np.asarray(g, dtype=complex)
    h_r = np.asarray(h_r, dtype=complex)
    h_d = np.asarray(h_d, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    n, m = g.shape
    if h_r.shape != (n,) or phi.shape != (n,) or h_d.shape != (m,):
        raise ValueError(
            f"inconsistent shapes: g {g.shape}, h_r {h_r.shape}, "
            f"h_d {h_d.shape}, phi {phi.shape}"
        )
    h_herm = (h_r.conj() * phi) @ g + h_d.conj()
    return h_herm.conj()
