from __future__ import annotations

import numpy as np
import pytest

from litsphere import (
    ContractError,
    GlossGrid,
    PhongMaterial,
    ViewPose,
    fit_phong,
    load_basis,
    precompute_basis,
    render_reflectance_map,
    render_specular_rm,
    save_basis,
    solve_kd_ks,
)
from litsphere.render import ReflectanceMap
from conftest import smooth_env
from reference import ref_fit_gloss_index, ref_solve_grid


@pytest.fixture(scope="module")
def basis16():
    r = np.random.default_rng(7)
    env = smooth_env(r, 16, 16)
    view = ViewPose(0.8, 0.05)
    grid = GlossGrid.make()
    return env, view, precompute_basis(env, view, grid, resolution=16)


class TestGlossGrid:
    def test_default_grid(self):
        g = GlossGrid.make()
        assert g.levels.size == 100
        assert g.levels[0] == 1.0
        assert g.levels[-1] == 1024.0
        ratios = g.levels[1:] / g.levels[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)

    def test_strictly_increasing_enforced(self):
        with pytest.raises(ContractError):
            GlossGrid(np.array([1.0, 1.0, 2.0]))
        with pytest.raises(ContractError):
            GlossGrid(np.array([0.5, 2.0]))


class TestSolveKdKs:
    def test_exact_diffuse_multiple(self, rng):
        l_d = rng.uniform(0.1, 1.0, 100)
        l_s = rng.uniform(0.1, 1.0, 100)
        kd, ks, res = solve_kd_ks(2.0 * l_d, l_d, l_s)
        assert kd == pytest.approx(2.0, abs=1e-6)
        assert ks == pytest.approx(0.0, abs=1e-6)
        assert res < 1e-9

    def test_zero_observation(self, rng):
        l_d = rng.uniform(0.1, 1.0, 50)
        l_s = rng.uniform(0.1, 1.0, 50)
        kd, ks, res = solve_kd_ks(np.zeros(50), l_d, l_s)
        assert kd == pytest.approx(0.0, abs=1e-9)
        assert ks == pytest.approx(0.0, abs=1e-9)
        assert res == pytest.approx(0.0, abs=1e-12)

    def test_matches_grid_search(self, rng):
        for _ in range(10):
            l_d = rng.uniform(0.0, 1.0, 100)
            l_s = rng.uniform(0.0, 1.0, 100)
            true_kd, true_ks = rng.uniform(0.0, 1.8, 2)
            l_o = true_kd * l_d + true_ks * l_s + rng.normal(0, 0.02, 100)
            kd, ks, res = solve_kd_ks(l_o, l_d, l_s)
            gkd, gks, gres = ref_solve_grid(l_o, l_d, l_s)
            # the solver must do at least as well as the grid, and the grid
            # must be able to get within its own resolution of the solver
            assert res <= gres + 1e-9
            assert abs(kd - gkd) < 2e-3 + 1e-6
            assert abs(ks - gks) < 2e-3 + 1e-6

    def test_negative_coefficient_clamped(self, rng):
        l_d = rng.uniform(0.5, 1.0, 80)
        l_s = l_d + rng.normal(0, 0.01, 80)  # nearly collinear
        l_o = 0.5 * l_d - 0.45 * l_s
        kd, ks, res = solve_kd_ks(l_o, l_d, l_s)
        assert kd >= 0.0 and ks >= 0.0
        gkd, gks, gres = ref_solve_grid(l_o, l_d, l_s, lim=1.0)
        assert res <= gres + 1e-9

    def test_too_short_rejected(self):
        with pytest.raises(ContractError):
            solve_kd_ks(np.array([1.0]), np.array([1.0]), np.array([1.0]))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ContractError):
            solve_kd_ks(np.ones(3), np.ones(4), np.ones(4))


class TestFitPhong:
    def test_diffuse_only_material(self, basis16):
        env, view, basis = basis16
        m = PhongMaterial((0.5, 0.5, 0.5), (0, 0, 0), 17.0)
        rm = render_reflectance_map(env, m, view, 16)
        got = fit_phong(rm, basis)
        np.testing.assert_allclose(got.kd, m.kd, atol=1e-3)
        np.testing.assert_allclose(got.ks, (0, 0, 0), atol=1e-3)

    def test_on_grid_exact_recovery(self, basis16):
        env, view, basis = basis16
        kg = float(basis.grid.levels[37])
        m = PhongMaterial((0.2, 0.3, 0.4), (0.6, 0.6, 0.6), kg)
        rm = render_reflectance_map(env, m, view, 16)
        got = fit_phong(rm, basis)
        assert got.kg == kg
        np.testing.assert_allclose(got.kd, m.kd, rtol=1e-3)
        np.testing.assert_allclose(got.ks, m.ks, rtol=1e-3)

    def test_off_grid_lands_on_neighbor(self, basis16):
        env, view, basis = basis16
        lv = basis.grid.levels
        kg = float(np.sqrt(lv[40] * lv[41]))  # geometric midpoint
        m = PhongMaterial((0.3, 0.3, 0.3), (0.7, 0.7, 0.7), kg)
        rm = render_reflectance_map(env, m, view, 16)
        got = fit_phong(rm, basis)
        idx = int(np.argmin(np.abs(lv - got.kg)))
        assert idx in (40, 41)

    def test_scale_equivariance(self, basis16):
        env, view, basis = basis16
        m = PhongMaterial((0.25, 0.35, 0.45), (0.5, 0.4, 0.3), float(basis.grid.levels[60]))
        rm = render_reflectance_map(env, m, view, 16)
        scaled = ReflectanceMap(
            np.ascontiguousarray(rm.pixels * 3.0), rm.mask.copy()
        )
        a = fit_phong(rm, basis)
        b = fit_phong(scaled, basis)
        assert a.kg == b.kg
        np.testing.assert_allclose(np.array(b.kd), 3.0 * np.array(a.kd), rtol=1e-9)
        np.testing.assert_allclose(np.array(b.ks), 3.0 * np.array(a.ks), rtol=1e-9)

    def test_matches_naive_argmin(self, rng):
        env = smooth_env(rng, 16, 16)
        view = ViewPose(0.4, -0.06)
        grid = GlossGrid.make(count=40)
        basis = precompute_basis(env, view, grid, resolution=16)
        mask = basis.diffuse.mask
        diff_vals = basis.diffuse.pixels[mask]
        spec_vals = np.stack([s.pixels[mask] for s in basis.specular])
        for _ in range(5):
            kd = tuple(rng.uniform(0, 1, 3))
            ks = tuple(rng.uniform(0.05, 1, 3))
            kg = float(np.exp(rng.uniform(0, np.log(1024))))
            rm = render_reflectance_map(env, PhongMaterial(kd, ks, kg), view, 16)
            got = fit_phong(rm, basis)
            want_idx = ref_fit_gloss_index(rm.pixels[mask], diff_vals, spec_vals)
            got_idx = int(np.argmin(np.abs(grid.levels - got.kg)))
            assert got_idx == want_idx

    def test_mask_mismatch_rejected(self, basis16):
        env, view, basis = basis16
        other = render_reflectance_map(
            env, PhongMaterial((1, 1, 1), (0, 0, 0), 2.0), view, 32
        )
        with pytest.raises(ContractError):
            fit_phong(other, basis)


class TestBasisProperties:
    def test_single_level_grid(self, rng):
        env = smooth_env(rng, 16, 16)
        view = ViewPose(1.2, 0.03)
        grid = GlossGrid(np.array([23.0]))
        basis = precompute_basis(env, view, grid, resolution=16)
        single = render_specular_rm(env, view, 23.0, 16)
        np.testing.assert_allclose(basis.specular[0].pixels, single.pixels, rtol=1e-12)

    def test_constant_env_analytic_values(self):
        from litsphere import EnvironmentMap

        # 128 azimuth texels are needed to resolve the kg = 1024 lobe
        env = EnvironmentMap(np.ones((128, 128, 3)))
        view = ViewPose(0.3, 0.0)
        grid = GlossGrid.make(count=12)
        basis = precompute_basis(env, view, grid, resolution=8)
        dvals = basis.diffuse.pixels[basis.diffuse.mask]
        assert np.all(np.abs(dvals / np.pi - 1.0) < 0.01)
        for i, g in enumerate(grid.levels):
            svals = basis.specular[i].pixels[basis.diffuse.mask]
            assert np.all(np.abs(svals / (2 * np.pi / (g + 1)) - 1.0) < 0.02)

    def test_linear_in_env(self, rng):
        env = smooth_env(rng, 16, 16)
        from litsphere import EnvironmentMap

        scaled = EnvironmentMap(env.pixels * 1.7)
        view = ViewPose(0.0, 0.1)
        grid = GlossGrid.make(count=5)
        a = precompute_basis(env, view, grid, resolution=8)
        b = precompute_basis(scaled, view, grid, resolution=8)
        np.testing.assert_allclose(b.diffuse.pixels, 1.7 * a.diffuse.pixels, rtol=1e-9)
        np.testing.assert_allclose(
            b.specular[3].pixels, 1.7 * a.specular[3].pixels, rtol=1e-9
        )


class TestBasisCache:
    def test_round_trip(self, tmp_path, rng):
        env = smooth_env(rng, 16, 16)
        view = ViewPose(0.5, -0.08)
        grid = GlossGrid.make(count=7)
        basis = precompute_basis(env, view, grid, resolution=16, env_id="probe")
        save_basis(basis, tmp_path / "cache")
        back = load_basis(tmp_path / "cache")
        assert back.env_id == "probe"
        assert back.view == view
        np.testing.assert_allclose(back.grid.levels, grid.levels)
        np.testing.assert_array_equal(
            back.diffuse.pixels, basis.diffuse.pixels.astype(np.float32)
        )
        np.testing.assert_array_equal(
            back.specular[4].pixels, basis.specular[4].pixels.astype(np.float32)
        )

    def test_fit_from_cached_basis(self, tmp_path, basis16):
        env, view, basis = basis16
        save_basis(basis, tmp_path / "c2")
        cached = load_basis(tmp_path / "c2")
        kg = float(basis.grid.levels[25])
        m = PhongMaterial((0.4, 0.2, 0.6), (0.5, 0.5, 0.5), kg)
        rm = render_reflectance_map(env, m, view, 16)
        got = fit_phong(rm, cached)
        assert got.kg == kg
        np.testing.assert_allclose(got.kd, m.kd, rtol=5e-3)
