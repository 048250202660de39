import numpy as np
import pytest

from scnls import report as rpt
from scnls import studies, wkb
from scnls.grid import Field, SobolevIndex, lp_norm, make_grid, norm
from scnls.studies import (
    GaussianSpec,
    RunCache,
    ScalingParams,
    SweepConfig,
    corollary_bookkeeping,
    fit_loglog,
    ghost_higher_order_study,
    ghost_separation_study,
    inflation_bookkeeping,
    small_time_study,
    wkb_error_study,
)


@pytest.fixture(scope="module")
def cache():
    return RunCache()


@pytest.fixture(scope="module")
def short_cfg():
    return SweepConfig(eps_list=(0.25, 0.125, 0.0625), s_list=(0.0, 1.0))


@pytest.fixture(scope="module")
def ghost_report(short_cfg, cache):
    return ghost_separation_study(short_cfg, cache)


class TestSweepConfig:
    def test_rejects_increasing_eps(self):
        with pytest.raises(ValueError, match="decreasing"):
            SweepConfig(eps_list=(0.125, 0.25))

    def test_rejects_eps_out_of_range(self):
        with pytest.raises(ValueError, match="eps_list"):
            SweepConfig(eps_list=(2.0, 1.0))

    def test_rejects_misaligned_tau(self):
        with pytest.raises(ValueError, match="save grid"):
            SweepConfig(eps_list=(0.25, 0.125), tau=0.21)

    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError, match="a1_mode"):
            SweepConfig(eps_list=(0.25,), a1_mode="sideways")

    def test_grid_growth_and_cap(self):
        cfg = SweepConfig(eps_list=(0.25, 0.125), points_base=256)
        assert cfg.grid_for(0.25).points_per_axis == 256
        assert cfg.grid_for(0.0625).points_per_axis == 1024
        small_cap = SweepConfig(eps_list=(0.25,), max_points_per_axis=512)
        with pytest.raises(ValueError, match="cap"):
            small_cap.grid_for(0.001)

    def test_tau_index(self, short_cfg):
        assert short_cfg.tau_index == 8  # tau = 0.2 on a 0.025 save grid


class TestWkbErrorStudy:
    def test_slopes_within_bands(self, short_cfg, cache):
        rep = wkb_error_study(short_cfg, cache)
        for family, band in (
            ("profile_plain", (0.8, 1.2)),
            ("profile_perturbed", (0.8, 1.2)),
            ("hyperbolic_gap", (0.8, 1.2)),
            ("expansion_gap", (1.7, 2.3)),
        ):
            for s in short_cfg.s_list:
                slope = rep.slope(family, s)["slope"]
                assert band[0] <= slope <= band[1], (family, s, slope)
        assert rep.passed()

    def test_zero_datum_gives_zero_errors(self, cache):
        cfg = SweepConfig(
            eps_list=(0.25, 0.125, 0.0625), s_list=(0.0, 1.0), a0=GaussianSpec(amplitude=0.0)
        )
        rep = wkb_error_study(cfg, cache)
        assert all(r["value"] == 0.0 for r in rep.rows)
        assert rep.passed()

    def test_h0_eps_error_is_plain_l2_error(self, short_cfg, cache):
        # weight (1 + |eps k|^2)^0 == 1, so the s = 0 column must be the
        # L2 distance; recompute one entry directly from the cached runs.
        rep = wkb_error_study(short_cfg, cache)
        eps = short_cfg.eps_list[0]
        fine = short_cfg.grid_for(eps)
        u = studies._nls_trajectory(cache, short_cfg, eps, 1.0)
        limit = studies._limit_trajectory(cache, short_cfg, "equal_a0")
        sup = 0.0
        for (bg, corr), us in zip(limit, u):
            a_f, phi_f, _ = studies._profile_fields(bg, corr, fine.points_per_axis)
            diff = Field(fine, us.u.values - a_f.values * np.exp(1j * phi_f / eps))
            sup = max(sup, norm(diff))
        study_val = [
            r["value"]
            for r in rep.rows
            if r["family"] == "profile_plain" and r["eps"] == eps and r["s"] == 0.0
        ][0]
        assert study_val == pytest.approx(sup, rel=1e-12)


class TestSmallTimeStudy:
    def test_cubic_slopes(self, short_cfg, cache):
        rep = small_time_study(short_cfg, cache)
        for family in ("phase_residual", "corrector_phase_residual"):
            for s in short_cfg.s_list:
                assert 2.7 <= rep.slope(family, s)["slope"] <= 3.3
        assert rep.passed()

    def test_constant_datum_flat_phase_is_exact(self):
        # phi(t) = -c^2 t solves the limit system for a constant datum, and
        # RK4 integrates the constant rate exactly.
        g = make_grid(1, 4.0, 32)
        c = 0.8
        const = Field(g, np.full(g.shape, c, dtype=complex))
        cfg = wkb.WkbRunConfig(dt=1e-2, T=0.2, save_every=5, enforce_decay=False)
        traj = wkb.solve_limit_with_corrector(const, const, cfg)
        for bg, corr in traj:
            t = bg.t
            assert np.abs(bg.phi.values.real + c**2 * t).max() < 1e-13
            assert np.abs(corr.phi1.values.real + 2 * c**2 * t).max() < 1e-13


class TestGhostStudy:
    def test_control_run_vanishes(self, cache):
        cfg = SweepConfig(eps_list=(0.25, 0.125), s_list=(0.0, 1.0), a1_mode="zero")
        rep = ghost_separation_study(cfg, cache)
        for s in cfg.s_list:
            assert rep.checks[f"control_null_s{s:g}"]["passed"]
        assert max(abs(v) for v in rep.values("ghost", "separation_scaled", 0.0)) <= 1e-10

    def test_rows_and_floor(self, short_cfg, ghost_report):
        d0 = ghost_report.values("ghost", "separation_scaled", 0.0)
        assert len(d0) == len(short_cfg.eps_list)
        assert all(v > 0 for v in d0)
        assert ghost_report.checks["above_floor_s0"]["passed"]
        l4 = ghost_report.values("ghost", "diff_l4")
        assert len(l4) == len(short_cfg.eps_list)

    def test_l2_separation_approaches_profile_limit(self, ghost_report):
        # The L2 norm is oscillation-blind, so D_0 tends to the profile
        # value computed purely from the limit fields; at the finest eps of
        # the short sweep they already agree to ~10%.
        ratios = ghost_report.values("ghost", "ratio_to_profile", 0.0)
        assert abs(ratios[-1] - 1.0) < 0.15

    def test_refinement_certificate(self, cache):
        cfg = SweepConfig(
            eps_list=(0.25, 0.125), s_list=(0.0, 1.0), certify_refinement=True
        )
        rep = ghost_separation_study(cfg, cache)
        changes = rep.values("ghost", "refined_rel_change", 0.0)
        assert changes and all(c < 0.05 for c in changes)
        assert rep.checks["grid_independent_s0"]["passed"]

    def test_difference_norms_symmetric_under_swap(self, grid_1d):
        rng = np.random.default_rng(3)
        f = Field(grid_1d, rng.normal(size=grid_1d.shape) + 1j * rng.normal(size=grid_1d.shape))
        g = Field(grid_1d, rng.normal(size=grid_1d.shape) + 1j * rng.normal(size=grid_1d.shape))
        for s in (0.0, 1.0, 2.0):
            idx = SobolevIndex(s, homogeneous=True)
            a = norm(Field(grid_1d, f.values - g.values), idx)
            b = norm(Field(grid_1d, g.values - f.values), idx)
            assert a == pytest.approx(b, rel=1e-14)

    def test_needs_two_sweep_points(self, cache):
        cfg = SweepConfig(eps_list=(0.25,), s_list=(0.0,))
        with pytest.raises(ValueError, match="two sweep points"):
            ghost_separation_study(cfg, cache)


class TestGhostHigherOrder:
    def test_order_one_reduces_to_plain_ghost(self, cache, short_cfg, ghost_report):
        cfg = SweepConfig(
            eps_list=short_cfg.eps_list, s_list=short_cfg.s_list,
            a1_mode="scaled", scaled_order=1,
        )
        rep = ghost_higher_order_study(cfg, cache)
        for s in cfg.s_list:
            base = ghost_report.values("ghost", "separation_scaled", s)
            higher = rep.values("ghost", "higher_order_scaled", s)
            assert higher == pytest.approx(base, rel=1e-12)

    def test_zero_datum_zero_for_all_orders(self, cache):
        cfg = SweepConfig(
            eps_list=(0.25, 0.125), s_list=(0.0,), a0=GaussianSpec(amplitude=0.0),
            a1_mode="scaled", scaled_order=3,
        )
        rep = ghost_higher_order_study(cfg, cache)
        assert all(v == 0.0 for v in rep.values("ghost", "higher_order_scaled", 0.0))

    def test_requires_scaled_mode(self, short_cfg, cache):
        with pytest.raises(ValueError, match="scaled"):
            ghost_higher_order_study(short_cfg, cache)


class TestScalingParams:
    def test_threshold_and_exponent(self):
        p = ScalingParams(n=6, s=1.0, sigma=1.5, k=1.0)
        assert p.s_c == pytest.approx(2.0)
        assert p.k_threshold == pytest.approx(0.5)
        assert p.growth_exponent() == pytest.approx(1.0)
        assert p.growth_exponent(p.k_threshold) == pytest.approx(0.0, abs=1e-14)

    def test_rejects_supercritical_s(self):
        # n = 4 gives s_c = 1, so s = 1 is excluded
        with pytest.raises(ValueError, match="s_c"):
            ScalingParams(n=4, s=1.0, sigma=0.5, k=0.5)

    def test_rejects_bad_k_and_sigma(self):
        with pytest.raises(ValueError, match="k"):
            ScalingParams(n=6, s=1.0, sigma=1.0, k=0.0)
        with pytest.raises(ValueError, match="sigma"):
            ScalingParams(n=6, s=1.0, sigma=2.5, k=1.0)

    def test_j_at_least_one(self):
        p = ScalingParams(n=6, s=1.0, sigma=1.0, k=1.0)
        for eps in (1.0, 0.5, 0.01):
            assert p.j_for(eps) >= 1.0

    def test_sign_flip_lattice(self):
        # the growth exponent changes sign exactly at the threshold
        for n in range(3, 9):
            s_c = n / 2 - 1
            for s in np.linspace(0.1, 0.9, 5) * s_c:
                p = ScalingParams(n=n, s=float(s), sigma=0.0, k=1.0)
                k_star = p.k_threshold
                assert p.growth_exponent(k_star * (1 + 1e-6)) > 0
                assert p.growth_exponent(k_star * (1 - 1e-6)) < 0
                assert abs(p.growth_exponent(k_star)) <= 1e-12


class TestInflationBookkeeping:
    def test_rows_follow_exact_rescaling(self, ghost_report):
        p = ScalingParams(n=6, s=1.0, sigma=1.5, k=1.0)
        rep = inflation_bookkeeping(p, ghost_report)
        eps_list = ghost_report.header["config"]["eps_list"]
        raws = ghost_report.values("ghost", "diff_hs_raw", 1.0)
        js = rep.values("inflation", "j")
        phys = rep.values("inflation", "physical_diff_hk")
        for eps, raw, j, val in zip(eps_list, raws, js, phys):
            assert j == pytest.approx(eps ** (1 / (1.0 - 2.0)))
            assert val == pytest.approx(j ** (p.k - p.s) * raw, rel=1e-12)
        tjs = rep.values("inflation", "t_j")
        assert all(a > b for a, b in zip(tjs, tjs[1:]))  # t_j -> 0
        assert rep.checks["data_differences_vanish"]["passed"]
        assert rep.checks["exponent_matches_threshold_side"]["passed"]
        assert rep.checks["measured_growth_sign"]["passed"]
        assert rep.header["limitation"]

    def test_datum_norms_shrink(self, ghost_report):
        p = ScalingParams(n=6, s=1.0, sigma=1.5, k=1.0)
        rep = inflation_bookkeeping(p, ghost_report)
        h = rep.values("inflation", "data_diff_hsigma_bound")
        assert all(a > b for a, b in zip(h, h[1:]))

    def test_missing_k_rejected(self, ghost_report):
        p = ScalingParams(n=6, s=1.0, sigma=1.5, k=0.7)
        with pytest.raises(ValueError, match="difference rows"):
            inflation_bookkeeping(p, ghost_report)


class TestCorollaryBookkeeping:
    def test_rejects_small_dimension(self, ghost_report):
        with pytest.raises(ValueError, match="n >= 5"):
            corollary_bookkeeping(4, ghost_report)

    def test_scaled_data_quantities_match_two_grid_quadrature(self):
        # Oracle: realize lam * a0(jx) on the shrunken grid and integrate;
        # the mass, gradient, and quartic terms must follow the exact j
        # exponents used by the bookkeeping (checked here at n = 1, where
        # the volume factor j^{-n} is numerically accessible).
        n_dim = 1
        s = 0.6
        big = make_grid(1, 12.0, 512)
        a0 = GaussianSpec().realize(big)
        l2_sq = norm(a0) ** 2
        grad_sq = norm(a0, SobolevIndex(1.0, homogeneous=True)) ** 2
        quart = lp_norm(a0, 4.0) ** 4
        for j in (2.0, 4.0):
            lam = j ** (n_dim / 2 - s)
            small = make_grid(1, 12.0 / j, 512)
            fj = Field(small, lam * a0.values)
            mass_direct = norm(fj) ** 2
            grad_direct = norm(fj, SobolevIndex(1.0, homogeneous=True)) ** 2
            quart_direct = lp_norm(fj, 4.0) ** 4
            assert mass_direct == pytest.approx(lam**2 * j**-n_dim * l2_sq, rel=1e-10)
            assert grad_direct == pytest.approx(
                lam**2 * j ** (2 - n_dim) * grad_sq, rel=1e-10
            )
            assert quart_direct == pytest.approx(lam**4 * j**-n_dim * quart, rel=1e-10)

    def test_report_structure_and_vanishing_checks(self, cache):
        # j reaches eps^{-2} = 1024 here, past the delta-band threshold,
        # and the extrapolated difference energy has stabilized.
        cfg = SweepConfig(eps_list=(0.25, 0.125, 0.0625, 0.03125), s_list=(0.0, 1.0))
        measured = ghost_separation_study(cfg, cache)
        rep = corollary_bookkeeping(6, measured, delta=0.2)
        assert rep.checks["mass_vanishes"]["passed"]
        assert rep.checks["data_energy_difference_vanishes"]["passed"]
        assert rep.checks["data_energies_in_band"]["passed"]
        assert rep.checks["solution_energy_bounded_below"]["passed"]
        masses = rep.values("corollary", "mass_data")
        assert all(a > b for a, b in zip(masses, masses[1:]))
        # leading energy term is j-independent for s = n/4
        energies = rep.values("corollary", "energy_data")
        c0 = rep.header["leading_energy"]
        assert all(e >= c0 for e in energies)
        assert energies[-1] - c0 < energies[0] - c0
        assert rep.header["limitation"]


class TestFitAndReportPlumbing:
    def test_fit_requires_three_points(self):
        with pytest.raises(ValueError, match="3 points"):
            fit_loglog([1.0, 2.0], [1.0, 2.0])
        with pytest.raises(ValueError, match="positive"):
            fit_loglog([1.0, 2.0, 3.0], [1.0, 0.0, 2.0])

    def test_fit_recovers_power_law(self):
        xs = [1.0, 0.5, 0.25, 0.125]
        ys = [3.0 * x**1.7 for x in xs]
        slope, intercept, resid = fit_loglog(xs, ys)
        assert slope == pytest.approx(1.7, abs=1e-12)
        assert resid < 1e-12

    def test_csv_and_summary_deterministic(self, ghost_report, tmp_path):
        p1 = rpt.write_study_csv(ghost_report, tmp_path / "a.csv")
        p2 = rpt.write_study_csv(ghost_report, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        rpt.write_summary_json(ghost_report, tmp_path / "a.json")
        rpt.write_summary_json(ghost_report, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        header = (tmp_path / "a.csv").read_text().splitlines()[0]
        assert header.split(",") == rpt.STUDY_COLUMNS

    def test_trajectory_rows(self, grid_1d, gaussian_1d):
        from scnls import nls

        cfg = nls.NlsRunConfig(dt=1e-2, T=0.1, save_every=5)
        traj = nls.solve_nls(gaussian_1d, 0.5, cfg)
        rows = rpt.nls_trajectory_rows(traj, norm_orders=(1.0,))
        assert [r["t"] for r in rows] == pytest.approx([0.0, 0.05, 0.1])
        assert all("h1" in r and "mass" in r and "energy" in r for r in rows)

        wcfg = wkb.WkbRunConfig(dt=1e-2, T=0.1, save_every=5)
        wtraj = wkb.solve_limit_with_corrector(gaussian_1d, gaussian_1d, wcfg)
        wrows = rpt.wkb_trajectory_rows(wtraj, norm_orders=(1.0,))
        assert all("grad_phi_max" in r and "phi1_linf" in r for r in wrows)
