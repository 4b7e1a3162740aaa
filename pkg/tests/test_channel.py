import numpy as np
import pytest

from ris_codebook.channel import (
    LinkParams,
    SystemGeometry,
    build_statistical_csi,
    composite_channel,
    pathloss_linear,
    sample_channel_realization,
    sample_rician_vector,
    steering_ula,
    steering_upa,
)


def default_geometry(**overrides):
    params = dict(
        bs_position=(0.0, 0.0, 5.0), bs_antennas=8,
        ris_position=(0.0, 100.0, 5.0), ris_rows=4, ris_cols=4,
        user_positions=((2.0, 100.0, 0.0), (-2.0, 100.0, 0.0)),
    )
    params.update(overrides)
    return SystemGeometry(**params)


def default_links():
    return (LinkParams(rician_factor_db=4.0, pathloss_exponent=2.4),
            LinkParams(rician_factor_db=3.0, pathloss_exponent=2.5),
            LinkParams(rician_factor_db=-3.0, pathloss_exponent=3.5))


class TestPathloss:
    def test_reference_distance(self):
        p = LinkParams(rician_factor_db=0.0, pathloss_exponent=2.4,
                       reference_loss_db=-20.0, reference_distance=1.0)
        assert pathloss_linear(1.0, p) == pytest.approx(0.01)

    def test_hundred_meters(self):
        p = LinkParams(rician_factor_db=0.0, pathloss_exponent=2.4,
                       reference_loss_db=-20.0, reference_distance=1.0)
        # direct evaluation: 10^(-2) * 100^(-2.4) = 10^(-6.8)
        assert pathloss_linear(100.0, p) == pytest.approx(10 ** -6.8, rel=1e-12)
        assert pathloss_linear(100.0, p) == pytest.approx(1.585e-7, rel=1e-3)

    def test_zero_exponent(self):
        p = LinkParams(rician_factor_db=0.0, pathloss_exponent=0.0,
                       reference_loss_db=-20.0)
        for d in (0.5, 3.0, 1000.0):
            assert pathloss_linear(d, p) == pytest.approx(0.01)

    def test_nonpositive_distance(self):
        p = LinkParams(rician_factor_db=0.0, pathloss_exponent=2.0)
        with pytest.raises(ValueError):
            pathloss_linear(0.0, p)
        with pytest.raises(ValueError):
            pathloss_linear(-1.0, p)


class TestSteering:
    def test_ula_broadside(self):
        assert np.allclose(steering_ula(5, 0.5, 0.0), np.ones(5))

    def test_ula_endfire_half_wavelength(self):
        v = steering_ula(2, 0.5, 1.0)
        assert np.allclose(v, [1.0, -1.0])

    def test_ula_unit_modulus(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            v = steering_ula(int(rng.integers(1, 12)), rng.uniform(0.05, 1.0),
                             rng.uniform(-1, 1))
            assert np.max(np.abs(np.abs(v) - 1.0)) < 1e-12

    def test_ula_rejects_bad_angle(self):
        with pytest.raises(ValueError):
            steering_ula(4, 0.5, 1.5)

    def test_upa_broadside(self):
        assert np.allclose(steering_upa(3, 4, 0.125, 0.0, 0.0), np.ones(12))

    def test_upa_degenerate_row_equals_ula(self):
        v = steering_upa(1, 6, 0.25, 0.7, 0.0)
        assert np.allclose(v, steering_ula(6, 0.25, 0.7))

    def test_upa_2x2_exponents(self):
        # direct exponent evaluation at spacing 1/8, both sines 1
        v = steering_upa(2, 2, 0.125, 1.0, 1.0)
        expected = np.exp(1j * np.pi * np.array([0.0, 0.25, 0.25, 0.5]))
        assert np.max(np.abs(v - expected)) < 1e-12

    def test_upa_rejects_bad_angles(self):
        with pytest.raises(ValueError):
            steering_upa(2, 2, 0.125, -1.2, 0.0)


class TestStatisticalCsi:
    def test_broadside_all_ones(self):
        geom = SystemGeometry(bs_position=(50.0, 0.0, 0.0), bs_antennas=4,
                              ris_position=(0.0, 0.0, 0.0), ris_rows=2, ris_cols=3,
                              user_positions=((30.0, 0.0, 0.0),))
        csi = build_statistical_csi(geom, *default_links())
        assert np.allclose(csi.los_bs_ris, 1.0)
        assert np.allclose(csi.los_ris_user[0], 1.0)
        assert np.allclose(csi.los_bs_user[0], 1.0)

    def test_paper_distances_give_expected_gain(self):
        geom = default_geometry(ris_rows=10, ris_cols=10)
        csi = build_statistical_csi(geom, *default_links())
        assert csi.beta_bs_ris == pytest.approx(0.01 * 100 ** -2.4, rel=1e-12)
        assert csi.beta_bs_ris == pytest.approx(1.585e-7, rel=1e-3)

    def test_bs_ris_los_rank_one(self):
        csi = build_statistical_csi(default_geometry(), *default_links())
        a = csi.los_bs_ris
        # all 2x2 minors vanish for a rank-1 matrix
        n, m = a.shape
        rng = np.random.default_rng(1)
        for _ in range(200):
            i, j = rng.integers(0, n, 2)
            p, q = rng.integers(0, m, 2)
            minor = a[i, p] * a[j, q] - a[i, q] * a[j, p]
            assert abs(minor) < 1e-10

    def test_rank_one_via_gram_trace(self):
        # trace(A^H A)^2 == trace((A^H A)^2) iff one singular value carries
        # all the mass; checks the second singular value is negligible.
        csi = build_statistical_csi(default_geometry(), *default_links())
        gram = csi.los_bs_ris.conj().T @ csi.los_bs_ris
        t1 = np.real(np.trace(gram))
        t2 = np.real(np.trace(gram @ gram))
        ratio = max(t1 * t1 / t2 - 1.0, 0.0)    # ~ (s2/s1)^2 for rank ~1
        assert ratio < 1e-10

    def test_unit_modulus_validation(self):
        csi = build_statistical_csi(default_geometry(), *default_links())
        for arr in (csi.los_bs_ris, *csi.los_ris_user, *csi.los_bs_user):
            assert np.max(np.abs(np.abs(arr) - 1.0)) < 1e-12


class TestRicianSampling:
    def test_pure_los_limit(self):
        rng = np.random.default_rng(2)
        los = steering_ula(16, 0.5, 0.3)
        out = sample_rician_vector(los, 130.0, 2.0, rng)   # F = 1e13
        expected = np.sqrt(2.0) * los
        assert np.linalg.norm(out - expected) / np.linalg.norm(expected) < 1e-5

    def test_pure_nlos_moment(self):
        rng = np.random.default_rng(3)
        los = np.ones(10)
        total = 0.0
        count = 0
        for _ in range(10_000):
            out = sample_rician_vector(los, -130.0, 3.0, rng)
            total += np.sum(np.abs(out) ** 2) / 3.0
            count += out.size
        assert 0.99 < total / count < 1.01

    def test_unit_second_moment_any_factor(self):
        rng = np.random.default_rng(4)
        los = np.exp(1j * np.linspace(0, 3, 20))
        for f_db in (-10.0, 0.0, 7.0):
            total = 0.0
            count = 0
            for _ in range(5_000):
                out = sample_rician_vector(los, f_db, 1.0, rng)
                total += np.sum(np.abs(out) ** 2)
                count += out.size
            assert 0.99 < total / count < 1.01

    def test_rejects_bad_beta(self):
        with pytest.raises(ValueError):
            sample_rician_vector(np.ones(3), 0.0, 0.0, np.random.default_rng(0))


class TestChannelRealization:
    def test_same_seed_identical(self):
        csi = build_statistical_csi(default_geometry(), *default_links())
        a = sample_channel_realization(csi, np.random.default_rng(42))
        b = sample_channel_realization(csi, np.random.default_rng(42))
        assert np.array_equal(a.g, b.g)
        for x, y in zip(a.h_r + a.h_d, b.h_r + b.h_d):
            assert np.array_equal(x, y)

    def test_los_dominance_high_factor(self):
        links = default_links()
        strong = LinkParams(rician_factor_db=60.0, pathloss_exponent=2.4)
        csi = build_statistical_csi(default_geometry(), strong, links[1], links[2])
        real = sample_channel_realization(csi, np.random.default_rng(5))
        los = np.sqrt(csi.beta_bs_ris) * csi.los_bs_ris
        assert np.linalg.norm(real.g - los) / np.linalg.norm(real.g) < 1e-2

    def test_shapes(self):
        geom = default_geometry()
        csi = build_statistical_csi(geom, *default_links())
        real = sample_channel_realization(csi, np.random.default_rng(6))
        assert real.g.shape == (16, 8)
        assert len(real.h_r) == 2 and len(real.h_d) == 2
        assert real.h_r[0].shape == (16,)
        assert real.h_d[0].shape == (8,)


class TestCompositeChannel:
    def composite_oracle(self, g, h_r, h_d, phi):
        """Scalar-loop evaluation of h^H = sum_n h_r[n]^* phi[n] g[n,:] + h_d^H."""
        m = g.shape[1]
        h_herm = np.zeros(m, dtype=complex)
        for n in range(g.shape[0]):
            h_herm += np.conj(h_r[n]) * phi[n] * g[n, :]
        h_herm += np.conj(h_d)
        return h_herm.conj()

    def test_single_element_identity_phase(self):
        rng = np.random.default_rng(7)
        g = (rng.standard_normal((1, 3)) + 1j * rng.standard_normal((1, 3)))
        h_r = rng.standard_normal(1) + 1j * rng.standard_normal(1)
        h_d = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        out = composite_channel(g, h_r, h_d, np.ones(1))
        expected = (np.conj(h_r[0]) * g[0, :] + h_d.conj()).conj()
        assert np.allclose(out, expected)

    def test_no_reflected_path(self):
        rng = np.random.default_rng(8)
        g = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
        h_d = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        out = composite_channel(g, np.zeros(4), h_d, np.ones(4))
        assert np.allclose(out, h_d)

    def test_matches_scalar_loop_oracle(self):
        rng = np.random.default_rng(9)
        g = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
        h_r = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        h_d = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        phi = np.exp(1j * np.pi * rng.integers(0, 2, 4))   # 1-bit phases
        out = composite_channel(g, h_r, h_d, phi)
        assert np.max(np.abs(out - self.composite_oracle(g, h_r, h_d, phi))) < 1e-12

    def test_linear_in_both_channel_parts(self):
        rng = np.random.default_rng(10)
        g = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
        phi = np.exp(1j * rng.uniform(0, 2 * np.pi, 6))
        h_r1, h_r2 = (rng.standard_normal(6) + 1j * rng.standard_normal(6) for _ in range(2))
        h_d1, h_d2 = (rng.standard_normal(4) + 1j * rng.standard_normal(4) for _ in range(2))
        lhs = composite_channel(g, h_r1 + h_r2, h_d1 + h_d2, phi)
        rhs = (composite_channel(g, h_r1, h_d1, phi)
               + composite_channel(g, h_r2, h_d2, phi))
        assert np.max(np.abs(lhs - rhs)) < 1e-10 * np.max(np.abs(lhs))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            composite_channel(np.zeros((3, 2)), np.zeros(4), np.zeros(2), np.ones(3))


class TestGeometryValidation:
    def test_rejects_coincident_nodes(self):
        with pytest.raises(ValueError):
            default_geometry(ris_position=(0.0, 0.0, 5.0))

    def test_rejects_no_users(self):
        with pytest.raises(ValueError):
            default_geometry(user_positions=())

    def test_rejects_bad_spacing(self):
        with pytest.raises(ValueError):
            default_geometry(bs_spacing=0.0)
