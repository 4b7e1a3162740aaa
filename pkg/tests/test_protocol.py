import numpy as np
import pytest

from ris_codebook.channel import (
    ChannelRealization,
    LinkParams,
    SystemGeometry,
    build_statistical_csi,
    composite_channel,
    sample_channel_realization,
)
from ris_codebook.codebook import AoOptions, build_codebook, random_codebook
from ris_codebook.linalg import SingularMatrixError
from ris_codebook.protocol import (
    CandidateEvaluation,
    ls_estimate,
    pilot_matrix,
    precode_from_estimate,
    run_online,
    select_codeword,
    simulate_uplink_block,
    true_sinr_rates,
)


def cx(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def make_csi(k=2, n_rows=2, n_cols=2, f_r_db=3.0):
    users = ((30.0, 0.0, 0.0), (28.0, 2.0, 0.0))[:k]
    geom = SystemGeometry(bs_position=(50.0, 0.0, 0.0), bs_antennas=4,
                          ris_position=(0.0, 0.0, 0.0),
                          ris_rows=n_rows, ris_cols=n_cols, user_positions=users)
    return build_statistical_csi(
        geom,
        LinkParams(rician_factor_db=4.0, pathloss_exponent=2.4),
        LinkParams(rician_factor_db=f_r_db, pathloss_exponent=2.5),
        LinkParams(rician_factor_db=-3.0, pathloss_exponent=3.5),
    )


class TestPilots:
    def test_k1(self):
        assert np.array_equal(pilot_matrix(1), np.array([[1.0 + 0j]]))

    def test_k2_rows(self):
        x = pilot_matrix(2)
        assert np.allclose(x[0], [1, 1])
        assert np.allclose(x[1], [1, -1])
        assert np.allclose(x @ x.conj().T, 2 * np.eye(2))

    def test_k4_orthogonality(self):
        x = pilot_matrix(4)
        assert np.max(np.abs(x @ x.conj().T - 4 * np.eye(4))) < 1e-12
        assert np.max(np.abs(np.abs(x) - 1)) < 1e-12

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            pilot_matrix(0)


class TestUplinkBlock:
    def test_noiseless_exact(self):
        rng = np.random.default_rng(0)
        h = cx(rng, (5, 2))
        x = pilot_matrix(2)
        y = simulate_uplink_block(h, x, 4.0, 0.0, rng)
        assert np.array_equal(y, 2.0 * (h @ x))

    def test_noise_variance(self):
        rng = np.random.default_rng(1)
        h = np.zeros((10, 2), dtype=complex)
        x = pilot_matrix(2)
        total, count = 0.0, 0
        for _ in range(5_000):
            y = simulate_uplink_block(h, x, 1.0, 0.3, rng)
            total += np.sum(np.abs(y) ** 2)
            count += y.size
        assert total / count == pytest.approx(0.3, rel=0.02)

    def test_same_seed_identical(self):
        rng = np.random.default_rng(2)
        h = cx(rng, (4, 2))
        x = pilot_matrix(2)
        a = simulate_uplink_block(h, x, 1.0, 0.5, np.random.default_rng(9))
        b = simulate_uplink_block(h, x, 1.0, 0.5, np.random.default_rng(9))
        assert np.array_equal(a, b)


class TestLsEstimate:
    def test_noiseless_recovery(self):
        rng = np.random.default_rng(3)
        h = cx(rng, (6, 3))
        x = pilot_matrix(3)
        y = simulate_uplink_block(h, x, 2.5, 0.0, rng)
        assert np.max(np.abs(ls_estimate(y, x, 2.5) - h)) < 1e-10

    def test_error_variance(self):
        # per-entry error variance sigma_z^2 / (K P_ul) under orthogonal pilots
        rng = np.random.default_rng(4)
        m, k = 8, 2
        p_ul, sigma_z2 = 0.5, 0.2
        h = cx(rng, (m, k))
        x = pilot_matrix(k)
        total, count = 0.0, 0
        for _ in range(10_000):
            y = simulate_uplink_block(h, x, p_ul, sigma_z2, rng)
            err = ls_estimate(y, x, p_ul) - h
            total += np.sum(np.abs(err) ** 2)
            count += err.size
        expected = sigma_z2 / (k * p_ul)
        assert total / count == pytest.approx(expected, rel=0.05)

    def test_error_scales_with_pilot_power(self):
        rng = np.random.default_rng(5)
        m, k = 6, 2
        h = cx(rng, (m, k))
        x = pilot_matrix(k)

        def mean_sq_error(p_ul, trials=4_000):
            total = 0.0
            for _ in range(trials):
                y = simulate_uplink_block(h, x, p_ul, 0.1, rng)
                total += np.sum(np.abs(ls_estimate(y, x, p_ul) - h) ** 2)
            return total / trials

        low, high = mean_sq_error(0.25), mean_sq_error(1.0)
        assert low / high == pytest.approx(4.0, rel=0.15)

    def test_rejects_nonpositive_power(self):
        with pytest.raises(ValueError):
            ls_estimate(np.zeros((2, 2), dtype=complex), pilot_matrix(2), 0.0)


class TestPrecodeFromEstimate:
    def test_symmetric_channel_closed_form(self):
        # orthonormal columns scaled by c: equal split, known rate
        c = 3.0
        m = k = 4
        h = c * np.linalg.qr(np.exp(1j * np.random.default_rng(6).uniform(0, 2 * np.pi, (m, k))))[0]
        p_d, noise = 8.0, np.full(k, 0.5)
        w, alloc, rate = precode_from_estimate(h, p_d, noise)
        assert np.allclose(alloc, p_d / k)
        expected = k * np.log2(1 + c * c * p_d / (k * 0.5))
        assert rate == pytest.approx(expected, rel=1e-10)

    def test_zf_residual_on_estimate(self):
        rng = np.random.default_rng(7)
        h = cx(rng, (8, 3))
        noise = np.array([0.1, 0.2, 0.3])
        w, alloc, rate = precode_from_estimate(h, 5.0, noise)
        received = alloc / np.real(np.diag(np.linalg.inv(h.conj().T @ h)))
        resid = h.conj().T @ w - np.diag(np.sqrt(received))
        assert np.max(np.abs(resid)) < 1e-8

    def test_noiseless_estimate_consistency(self):
        rng = np.random.default_rng(8)
        csi = make_csi()
        real = sample_channel_realization(csi, rng)
        phi = np.exp(1j * np.pi * rng.integers(0, 2, 4))
        h = np.column_stack([
            composite_channel(real.g, real.h_r[k], real.h_d[k], phi) for k in range(2)
        ])
        noise = np.array([1e-9, 1e-9])
        _, _, rate = precode_from_estimate(h, 2.0, noise)
        from ris_codebook.codebook import RcConfig, sum_rate_given_phases
        # reconstruct the configuration indices from phi (entries 1 or -1)
        idx = tuple(int(round(a / np.pi)) % 2 for a in np.angle(phi) % (2 * np.pi))
        rc = RcConfig(idx, 1)
        assert rate == pytest.approx(sum_rate_given_phases(real, rc, 2.0, noise), rel=1e-10)


class TestSelectCodeword:
    def test_single(self):
        assert select_codeword([CandidateEvaluation(q=1, predicted_sum_rate=2.0)]) == 1

    def test_argmax(self):
        evs = [CandidateEvaluation(q=i + 1, predicted_sum_rate=r)
               for i, r in enumerate([1.0, 3.0, 2.0])]
        assert select_codeword(evs) == 2

    def test_tie_goes_to_smallest(self):
        evs = [CandidateEvaluation(q=i + 1, predicted_sum_rate=1.5) for i in range(4)]
        assert select_codeword(evs) == 1

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            select_codeword([])


class TestRunOnline:
    def setup_run(self, sigma_z2, k=2, q_size=4, seed=0, f_r_db=3.0):
        csi = make_csi(k=k, f_r_db=f_r_db)
        noise = np.full(k, 1e-9)
        cb = build_codebook(csi, q_size, 2.0, noise, 1, AoOptions(), seed=41)
        real = sample_channel_realization(csi, np.random.default_rng(seed))
        result = run_online(real, cb, 1e-4, 2.0, sigma_z2, noise,
                            np.random.default_rng(seed + 1))
        return csi, cb, real, result

    def test_perfect_csi_predicted_equals_true(self):
        _, _, _, result = self.setup_run(sigma_z2=0.0)
        assert result.true_sum_rate == pytest.approx(result.predicted_sum_rate, abs=1e-8)

    def test_single_codeword(self):
        _, cb, real, result = self.setup_run(sigma_z2=0.0, q_size=1)
        assert result.selected_index == 1
        assert result.rc_applied == cb.codewords[0].rc

    def test_selected_maximizes_true_rate_perfect_csi(self):
        for seed in range(10):
            _, cb, real, result = self.setup_run(sigma_z2=0.0, seed=seed)
            rates = [ev.predicted_sum_rate for ev in result.evaluations]
            assert result.selected_index == int(np.argmax(rates)) + 1
            assert result.predicted_sum_rate == pytest.approx(max(rates))

    def test_superset_dominance_prefix(self):
        csi = make_csi()
        noise = np.full(2, 1e-9)
        cb = build_codebook(csi, 8, 2.0, noise, 1, AoOptions(), seed=42)
        for seed in range(25):
            real = sample_channel_realization(csi, np.random.default_rng(seed))
            small = run_online(real, cb.prefix(3), 1e-4, 2.0, 0.0, noise,
                               np.random.default_rng(seed))
            big = run_online(real, cb, 1e-4, 2.0, 0.0, noise,
                             np.random.default_rng(seed))
            assert big.true_sum_rate >= small.true_sum_rate - 1e-12

    def test_estimation_error_norms_reported(self):
        _, cb, _, result = self.setup_run(sigma_z2=1e-9)
        assert result.estimation_error_norm.shape == (len(cb),)
        assert np.all(result.estimation_error_norm > 0)

    def test_pilot_design_invariance_noiseless(self):
        # any X with X X^H = K I recovers the channel exactly when the
        # uplink is noiseless, so the protocol output cannot depend on the
        # pilot design
        csi = make_csi()
        noise = np.full(2, 1e-9)
        cb = build_codebook(csi, 4, 2.0, noise, 1, AoOptions(), seed=43)
        real = sample_channel_realization(csi, np.random.default_rng(5))
        hadamard_variant = np.array([[1.0, -1.0], [1.0, 1.0]], dtype=complex)
        a = run_online(real, cb, 1e-4, 2.0, 0.0, noise, np.random.default_rng(6))
        b = run_online(real, cb, 1e-4, 2.0, 0.0, noise, np.random.default_rng(6),
                       pilots=hadamard_variant)
        assert a.selected_index == b.selected_index
        assert a.true_sum_rate == pytest.approx(b.true_sum_rate, abs=1e-9)
        assert a.predicted_sum_rate == pytest.approx(b.predicted_sum_rate, abs=1e-9)

    def test_bad_pilots_rejected(self):
        csi = make_csi()
        noise = np.full(2, 1e-9)
        cb = build_codebook(csi, 2, 2.0, noise, 1, AoOptions(), seed=44)
        real = sample_channel_realization(csi, np.random.default_rng(7))
        with pytest.raises(ValueError, match="pilot"):
            run_online(real, cb, 1e-4, 2.0, 0.0, noise, np.random.default_rng(8),
                       pilots=np.ones((2, 2), dtype=complex))

    def test_imperfect_csi_not_better_on_average(self):
        csi = make_csi()
        noise = np.full(2, 1e-9)
        cb = build_codebook(csi, 4, 2.0, noise, 1, AoOptions(), seed=45)
        gaps = []
        for seed in range(500):
            real = sample_channel_realization(csi, np.random.default_rng(seed))
            perfect = run_online(real, cb, 1e-4, 2.0, 0.0, noise,
                                 np.random.default_rng(10_000 + seed))
            noisy = run_online(real, cb, 1e-4, 2.0, 1e-9, noise,
                               np.random.default_rng(10_000 + seed))
            gaps.append(perfect.true_sum_rate - noisy.true_sum_rate)
        gaps = np.asarray(gaps)
        mean_gap = gaps.mean()
        stderr = gaps.std(ddof=1) / np.sqrt(len(gaps))
        print(f"\nmean perfect-vs-imperfect gap: {mean_gap:.4f} +- {stderr:.4f} bits")
        assert mean_gap > -2 * stderr

    def test_singular_candidate_demoted(self):
        # a codebook evaluated on a rank-deficient channel: duplicate user
        csi = make_csi(k=2)
        noise = np.full(2, 1e-9)
        cb = build_codebook(csi, 3, 2.0, noise, 1, AoOptions(), seed=46)
        real = sample_channel_realization(csi, np.random.default_rng(11))
        real.h_r[1] = real.h_r[0].copy()
        real.h_d[1] = real.h_d[0].copy()
        with pytest.raises(SingularMatrixError):
            run_online(real, cb, 1e-4, 2.0, 0.0, noise, np.random.default_rng(12))
        # with noise the estimates are full rank again and candidates survive
        result = run_online(real, cb, 1e-4, 2.0, 1e-6, noise, np.random.default_rng(12))
        assert np.isfinite(result.predicted_sum_rate)

    def test_dimension_mismatch(self):
        csi = make_csi()
        noise = np.full(2, 1e-9)
        cb = build_codebook(csi, 2, 2.0, noise, 1, AoOptions(), seed=47)
        other = make_csi(n_rows=3, n_cols=3)
        real = sample_channel_realization(other, np.random.default_rng(13))
        with pytest.raises(ValueError, match="dimensions"):
            run_online(real, cb, 1e-4, 2.0, 0.0, noise, np.random.default_rng(14))


class TestTrueSinr:
    def test_matches_manual_loop(self):
        rng = np.random.default_rng(15)
        h = cx(rng, (5, 3))
        w = cx(rng, (5, 3))
        noise = np.array([0.2, 0.4, 0.1])
        rates = true_sinr_rates(h, w, noise)
        for k in range(3):
            signal = abs(np.vdot(h[:, k], w[:, k])) ** 2
            interf = sum(abs(np.vdot(h[:, k], w[:, l])) ** 2 for l in range(3) if l != k)
            expected = np.log2(1 + signal / (interf + noise[k]))
            assert rates[k] == pytest.approx(expected, rel=1e-10)
