from dataclasses import replace

import numpy as np
import pytest

from irsuplink import (
    GainParams,
    PathLossParams,
    SystemConfig,
    path_loss_db,
    perturb_csi,
    sample_channel_set,
    sample_direct_channel,
    sample_irs_links,
    sample_multi_antenna_channels,
    ula_steering,
    ura_steering,
)

NO_SHADOW_LOS = PathLossParams(chi_a=61.4, chi_b=2.0, sigma_kappa=0.0)
NO_SHADOW_NLOS = PathLossParams(chi_a=72.0, chi_b=2.92, sigma_kappa=0.0)


def cfg_for(M=4, N_az=2, N_el=2, K=1, L=3, rho_b=0.0, user_xy=((40.0, 40.0),),
            los=NO_SHADOW_LOS, nlos=NO_SHADOW_NLOS, gain=None):
    return SystemConfig(M=M, N_az=N_az, N_el=N_el, K=K, L=L, rho_b=rho_b,
                        user_xy=user_xy, path_loss_los=los, path_loss_nlos=nlos,
                        gain=gain or GainParams(nu=15.0))


class TestSteering:
    def test_single_element(self):
        sv = ula_steering(1, 0.5)
        assert sv.length == 1
        assert sv.entries == pytest.approx([1.0 + 0.0j])

    def test_broadside_two_elements(self):
        sv = ula_steering(2, 0.0)
        assert sv.entries == pytest.approx(np.ones(2) / np.sqrt(2))

    def test_phases_match_scalar_loop(self):
        # direct evaluation with the centered index set {-1.5,-0.5,0.5,1.5}
        sv = ula_steering(4, 0.3)
        for i, idx in enumerate([-1.5, -0.5, 0.5, 1.5]):
            expected = np.exp(-1j * np.pi * 0.3 * idx) / 2.0
            assert sv.entries[i] == pytest.approx(expected, abs=1e-15)

    def test_unit_norm(self, rng):
        for _ in range(50):
            m = int(rng.integers(1, 40))
            sv = ula_steering(m, rng.uniform(-1, 1))
            assert abs(np.linalg.norm(sv.entries) - 1.0) < 1e-12

    def test_zero_elements_rejected(self):
        with pytest.raises(ValueError):
            ula_steering(0, 0.1)
        with pytest.raises(ValueError):
            ura_steering(0, 2, 0.1, 0.1)
        with pytest.raises(ValueError):
            ura_steering(2, 0, 0.1, 0.1)

    def test_ura_trivial_and_kronecker(self):
        assert ura_steering(1, 1, 0.3, -0.2).entries == pytest.approx([1.0])
        np.testing.assert_allclose(ura_steering(2, 1, 0.0, 0.7).entries,
                                   ula_steering(2, 0.0).entries, atol=1e-15)
        sv = ura_steering(2, 2, 0.2, 0.4)
        a_az = ula_steering(2, 0.2).entries
        a_el = ula_steering(2, 0.4).entries
        for i in range(2):
            for j in range(2):
                assert sv.entries[2 * i + j] == pytest.approx(a_az[i] * a_el[j], abs=1e-15)

    def test_ura_reduces_to_ula(self, rng):
        for n in (1, 3, 7):
            az, el = rng.uniform(-1, 1, 2)
            np.testing.assert_allclose(ura_steering(n, 1, az, el).entries,
                                       ula_steering(n, az).entries, atol=1e-14)
            np.testing.assert_allclose(ura_steering(1, n, az, el).entries,
                                       ula_steering(n, el).entries, atol=1e-14)
            assert abs(np.linalg.norm(ura_steering(n, n, az, el).entries) - 1) < 1e-12


class TestPathLoss:
    def test_reference_values(self, rng):
        assert path_loss_db(NO_SHADOW_LOS, 1.0, rng) == pytest.approx(61.4)
        assert path_loss_db(NO_SHADOW_LOS, 100.0, rng) == pytest.approx(101.4)
        assert path_loss_db(NO_SHADOW_NLOS, 10.0, rng) == pytest.approx(101.2)

    def test_monotone_in_distance(self, rng):
        dists = np.linspace(1.0, 200.0, 40)
        vals = [path_loss_db(NO_SHADOW_LOS, d, rng) for d in dists]
        assert np.all(np.diff(vals) > 0)

    def test_rejects_nonpositive_distance(self, rng):
        with pytest.raises(ValueError):
            path_loss_db(NO_SHADOW_LOS, 0.0, rng)
        with pytest.raises(ValueError):
            path_loss_db(NO_SHADOW_LOS, -3.0, rng)

    def test_deterministic_given_seed(self):
        params = PathLossParams(chi_a=61.4, chi_b=2.0, sigma_kappa=5.8)
        a = path_loss_db(params, 50.0, np.random.default_rng(3))
        b = path_loss_db(params, 50.0, np.random.default_rng(3))
        assert a == b

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            PathLossParams(chi_a=61.4, chi_b=0.0, sigma_kappa=1.0)
        with pytest.raises(ValueError):
            PathLossParams(chi_a=61.4, chi_b=2.0, sigma_kappa=-1.0)


class TestGains:
    def test_nu_determines_rho_i(self):
        g = GainParams(rho_U=0.0, rho_B=9.82, nu=15.0)
        assert g.rho_I == pytest.approx(15.0 + 9.82 / 2)
        assert g.nu == pytest.approx(15.0)

    def test_rho_i_determines_nu(self):
        g = GainParams(rho_U=0.0, rho_B=9.82, rho_I=19.91)
        assert g.nu == pytest.approx(15.0)

    def test_inconsistent_rejected(self):
        with pytest.raises(ValueError):
            GainParams(rho_U=0.0, rho_B=9.82, rho_I=10.0, nu=15.0)
        with pytest.raises(ValueError):
            GainParams(rho_U=0.0, rho_B=9.82)


class TestDirectChannel:
    def test_single_los_path_structure(self, rng):
        # L=0, unblocked, user broadside of the AP: h = sqrt(M) xi aB aU a_M(0)
        cfg = cfg_for(M=4, L=0, user_xy=((0.0, 50.0),))
        h = sample_direct_channel(cfg, (0.0, 50.0), False, rng)
        amp = cfg.gain.amp_ap * cfg.gain.amp_user
        steer = ula_steering(4, 0.0).entries
        ratio = h / (np.sqrt(4) * amp * steer)
        assert np.allclose(ratio, ratio[0], atol=1e-12)

    def test_blocked_without_nlos_is_zero(self, rng):
        cfg = cfg_for(M=4, L=0)
        h = sample_direct_channel(cfg, (40.0, 40.0), True, rng)
        assert np.all(h == 0)

    def test_mean_power_matches_path_loss(self):
        # equal LoS/NLoS parameters and no shadowing: E||h||^2 = M aB^2 aU^2 10^(-PL/10)
        params = PathLossParams(chi_a=61.4, chi_b=2.0, sigma_kappa=0.0)
        cfg = cfg_for(M=4, L=3, los=params, nlos=params, user_xy=((30.0, 40.0),))
        rng = np.random.default_rng(7)
        dist = 50.0
        pl = 61.4 + 20.0 * np.log10(dist)
        expect = 4 * (cfg.gain.amp_ap * cfg.gain.amp_user) ** 2 * 10 ** (-pl / 10)
        acc = 0.0
        n_draws = 10_000
        for _ in range(n_draws):
            h = sample_direct_channel(cfg, (30.0, 40.0), False, rng)
            acc += np.linalg.norm(h) ** 2
        assert acc / n_draws == pytest.approx(expect, rel=0.05)


class TestIrsLinks:
    def test_rank_one_and_structure(self, rng):
        cfg = cfg_for(M=4, N_az=3, N_el=2)
        h_irs, G = sample_irs_links(cfg, cfg.user_xy, rng)
        s = np.linalg.svd(G, compute_uv=False)
        assert s[1] < 1e-10 * s[0]
        # h_r is a scaled steering vector: entries have equal magnitude
        mags = np.abs(h_irs[0])
        assert np.allclose(mags, mags[0], rtol=1e-12)

    def test_irs_user_norm_statistics(self):
        cfg = cfg_for(M=2, N_az=2, N_el=2, user_xy=((79.0, 0.0),))
        rng = np.random.default_rng(11)
        pl = 61.4  # distance 1 m from the IRS at (80, 0)
        expect = 4 * (cfg.gain.amp_irs * cfg.gain.amp_user) ** 2 * 10 ** (-pl / 10)
        acc = 0.0
        for _ in range(10_000):
            h_irs, _ = sample_irs_links(cfg, cfg.user_xy, rng)
            acc += np.linalg.norm(h_irs[0]) ** 2
        assert acc / 10_000 == pytest.approx(expect, rel=0.05)

    def test_g_outer_product_structure(self, rng):
        cfg = cfg_for(M=2, N_az=2, N_el=1)
        _, G = sample_irs_links(cfg, cfg.user_xy, rng)
        # AP sees the IRS at bearing 0 from broadside +y: sine -1; IRS sees AP broadside
        a_ap = ula_steering(2, -1.0).entries
        a_irs = ura_steering(2, 1, 0.0, 0.0).entries
        expected_shape = np.outer(a_ap, a_irs.conj())
        ratio = G / expected_shape
        assert np.allclose(ratio, ratio[0, 0], atol=1e-10 * np.abs(ratio[0, 0]))


class TestChannelSet:
    def test_reproducible(self):
        cfg = cfg_for(K=1, rho_b=0.5)
        a = sample_channel_set(cfg, np.random.default_rng(5))
        b = sample_channel_set(cfg, np.random.default_rng(5))
        np.testing.assert_array_equal(a.h_direct, b.h_direct)
        np.testing.assert_array_equal(a.h_irs, b.h_irs)
        np.testing.assert_array_equal(a.G, b.G)
        np.testing.assert_array_equal(a.blockage, b.blockage)

    def test_draws_paired_across_array_sizes(self):
        # the same seed must give identical direct channels and blockage for
        # any IRS size, so sweeps over N stay paired
        small = sample_channel_set(cfg_for(N_az=2, N_el=2), np.random.default_rng(9))
        large = sample_channel_set(cfg_for(N_az=8, N_el=8), np.random.default_rng(9))
        np.testing.assert_array_equal(small.h_direct, large.h_direct)
        np.testing.assert_array_equal(small.blockage, large.blockage)
        # and the IRS gains share the scalar draw: ratios of norms fixed by N
        r_small = np.linalg.norm(small.h_irs[0]) / np.sqrt(small.num_irs_elements)
        r_large = np.linalg.norm(large.h_irs[0]) / np.sqrt(large.num_irs_elements)
        assert r_small == pytest.approx(r_large, rel=1e-12)

    def test_blockage_coupled_across_probability(self):
        base = cfg_for(K=1)
        cfgs = [replace(base, rho_b=r) for r in (0.0, 0.5, 1.0)]
        blocked = [sample_channel_set(c, np.random.default_rng(21)).blockage[0] for c in cfgs]
        assert blocked[0] == False  # noqa: E712
        assert blocked[2] == True  # noqa: E712
        # monotone coupling: blocked at 0.5 implies blocked at 1.0
        assert (not blocked[1]) or blocked[2]

    def test_without_irs_view(self, rng):
        cfg = cfg_for()
        ch = sample_channel_set(cfg, rng)
        bare = ch.without_irs()
        assert bare.num_irs_elements == 0
        np.testing.assert_array_equal(bare.h_direct, ch.h_direct)


class TestMultiAntenna:
    def test_single_antenna_matches_simo_model_shape(self):
        cfg = cfg_for(K=2, user_xy=((40.0, 40.0), (50.0, -20.0)))
        mu = sample_multi_antenna_channels(cfg, np.random.default_rng(3))
        assert mu.H_direct.shape == (2, 4, 1)
        assert mu.num_user_antennas == 1

    def test_antenna_count_does_not_shift_draws(self):
        base = cfg_for(K=1, L=0, user_xy=((0.0, 50.0),))
        one = sample_multi_antenna_channels(replace(base, N_u=1), np.random.default_rng(13))
        two = sample_multi_antenna_channels(replace(base, N_u=2), np.random.default_rng(13))
        # the AP-IRS matrix is independent of the user antenna count
        assert np.linalg.norm(two.G) == pytest.approx(np.linalg.norm(one.G), rel=1e-12)
        # single LoS path: same gain draw, Frobenius power scales exactly with N_u
        assert mu_total_power(two) / mu_total_power(one) == pytest.approx(2.0, rel=1e-9)

    def test_reduce_collapses_to_columns(self, rng):
        cfg = cfg_for(K=1)
        mu = sample_multi_antenna_channels(cfg, rng)
        qbar = np.ones((1, 1), dtype=complex)
        ch = mu.reduce(qbar)
        np.testing.assert_allclose(ch.h_direct, mu.H_direct[:, :, 0])
        np.testing.assert_allclose(ch.h_irs, mu.H_irs[:, :, 0])


def mu_total_power(mu):
    return sum(np.linalg.norm(mu.H_direct[k]) ** 2 for k in range(mu.H_direct.shape[0]))


class TestPerturbCsi:
    def test_zero_level_is_identity(self, rng):
        h = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        np.testing.assert_array_equal(perturb_csi(h, 0.0, rng), h)

    def test_bound_always_holds(self, rng):
        h = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        mu = 0.3
        for _ in range(1000):
            d = perturb_csi(h, mu, rng) - h
            assert np.linalg.norm(d) <= mu * np.linalg.norm(h) * (1 + 1e-12)

    def test_mean_relative_error_inside_interval(self, rng):
        h = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        mu = 0.2
        errs = [np.linalg.norm(perturb_csi(h, mu, rng) - h) / np.linalg.norm(h)
                for _ in range(1000)]
        assert 0.0 < np.mean(errs) < mu

    def test_negative_level_rejected(self, rng):
        with pytest.raises(ValueError):
            perturb_csi(np.ones(3, complex), -0.1, rng)
