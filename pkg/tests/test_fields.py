"""Grid, transform, derivative, and norm-proxy tests."""

import numpy as np
import pytest

from ssgsim import fields as F


@pytest.fixture
def grid():
    return F.TorusGrid(16, 16)


def make_cos(grid, k1=1, k2=0, amp=1.0):
    X1, X2 = grid.mesh
    return F.to_spectral(amp * np.cos(2 * np.pi * (k1 * X1 + k2 * X2)), grid)


class TestTorusGrid:
    @pytest.mark.parametrize("n", [7, 6, 9, 15])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ValueError):
            F.TorusGrid(n, 16)
        with pytest.raises(ValueError):
            F.TorusGrid(16, n)

    def test_spacing_is_exact(self):
        g = F.TorusGrid(32, 64)
        assert g.spacing == (1.0 / 32, 1.0 / 64)
        assert g.x1[1] == 1.0 / 32
        assert g.x2[-1] == 63.0 / 64


class TestToSpectral:
    def test_constant_field_dc_mode(self, grid):
        f = F.to_spectral(np.full(grid.shape, 2.5), grid)
        assert f.coeffs[0, 0] == pytest.approx(2.5, abs=1e-15)
        others = f.coeffs.copy()
        others[0, 0] = 0
        assert np.max(np.abs(others)) < 1e-15

    def test_cosine_against_dft_oracle(self):
        # independent slow DFT on an 8x8 grid
        g = F.TorusGrid(8, 8)
        X1, X2 = g.mesh
        phys = np.cos(2 * np.pi * X1)
        oracle = np.zeros((8, 8), dtype=complex)
        for k1 in range(8):
            for k2 in range(8):
                for i in range(8):
                    for j in range(8):
                        oracle[k1, k2] += phys[i, j] * np.exp(
                            -2j * np.pi * (k1 * i + k2 * j) / 8
                        )
        oracle /= 64
        f = F.to_spectral(phys, g)
        assert np.max(np.abs(f.coeffs - oracle)) < 1e-14
        assert f.coeffs[1, 0] == pytest.approx(0.5, abs=1e-14)
        assert f.coeffs[-1 % 8, 0] == pytest.approx(0.5, abs=1e-14)

    def test_round_trip(self, grid):
        rng = np.random.default_rng(7)
        phys = rng.standard_normal(grid.shape)
        back = F.to_spectral(phys, grid).to_physical()
        assert np.max(np.abs(back - phys)) < 1e-13 * np.max(np.abs(phys))

    def test_parseval(self, grid):
        rng = np.random.default_rng(8)
        phys = rng.standard_normal(grid.shape)
        f = F.to_spectral(phys, grid)
        grid_l2sq = np.mean(phys**2)
        spec_l2sq = f.l2_norm() ** 2
        assert spec_l2sq == pytest.approx(grid_l2sq, rel=1e-12)

    def test_dimension_mismatch(self, grid):
        with pytest.raises(ValueError):
            F.to_spectral(np.zeros((16, 12)), grid)
        with pytest.raises(ValueError):
            F.to_spectral(np.zeros(16))


class TestDerivatives:
    def test_cosine_first_derivative(self, grid):
        f = make_cos(grid)
        df = F.spectral_derivative(f, 1, 1).to_physical()
        X1, _ = grid.mesh
        assert np.max(np.abs(df + 2 * np.pi * np.sin(2 * np.pi * X1))) < 1e-12

    def test_constant_derivative_zero(self, grid):
        f = F.to_spectral(np.ones(grid.shape), grid)
        for direction in (1, 2):
            for order in (1, 2):
                df = F.spectral_derivative(f, direction, order)
                assert np.max(np.abs(df.coeffs)) == 0.0

    def test_second_derivative_other_axis_zero(self, grid):
        f = make_cos(grid, k1=0, k2=1)
        d = F.spectral_derivative(f, 1, 2)
        assert np.max(np.abs(d.coeffs)) < 1e-15

    def test_unsupported_order(self, grid):
        f = make_cos(grid)
        with pytest.raises(ValueError):
            F.spectral_derivative(f, 1, 3)
        with pytest.raises(ValueError):
            F.spectral_derivative(f, 3, 1)

    def test_commutes_with_finite_differences_at_order_2(self):
        # centred difference of f approaches the spectral derivative at O(h^2)
        errs = []
        for n in (32, 64):
            g = F.TorusGrid(n, n)
            f = F.random_band_limited(g, 3, seed=5)
            phys = f.to_physical()
            fd = (np.roll(phys, -1, axis=0) - np.roll(phys, 1, axis=0)) * (n / 2.0)
            spectral = F.spectral_derivative(f, 1, 1).to_physical()
            errs.append(np.max(np.abs(fd - spectral)))
        rate = np.log2(errs[0] / errs[1])
        assert rate > 1.9

    def test_nyquist_zeroed_for_odd_order(self, grid):
        c = np.zeros(grid.shape, dtype=complex)
        c[grid.n1 // 2, 0] = 1.0
        f = F.from_coeffs(grid, c, hermitianize=False)
        assert np.max(np.abs(F.spectral_derivative(f, 1, 1).coeffs)) == 0.0
        assert np.max(np.abs(F.spectral_derivative(f, 1, 2).coeffs)) > 0.0


class TestPerpGradient:
    def test_sine_profile(self, grid):
        X1, _ = grid.mesh
        psi = F.to_spectral(np.sin(2 * np.pi * X1), grid)
        w1, w2 = F.perp_gradient(psi)
        assert np.max(np.abs(w1.to_physical())) < 1e-13
        expected = 2 * np.pi * np.cos(2 * np.pi * X1)
        assert np.max(np.abs(w2.to_physical() - expected)) < 1e-12

    def test_constant_stream(self, grid):
        psi = F.to_spectral(np.full(grid.shape, 3.0), grid)
        w1, w2 = F.perp_gradient(psi)
        assert np.max(np.abs(w1.coeffs)) == 0.0
        assert np.max(np.abs(w2.coeffs)) == 0.0

    def test_divergence_free(self, grid):
        psi = F.random_band_limited(grid, 5, seed=11)
        w1, w2 = F.perp_gradient(psi)
        div = F.divergence(w1, w2)
        assert np.max(np.abs(div.coeffs)) < 1e-12


class TestDealias:
    def test_idempotent(self, grid):
        f = F.random_band_limited(grid, 7, seed=2)
        once = F.dealias(f)
        twice = F.dealias(once)
        assert np.array_equal(once.coeffs, twice.coeffs)

    def test_band(self):
        g = F.TorusGrid(64, 64)
        band = (64 - 1) // 3
        c = np.zeros(g.shape, dtype=complex)
        c[band, 0] = 1.0
        c[band + 1, 2] = 1.0
        f = F.from_coeffs(g, c, hermitianize=False)
        d = F.dealias(f)
        assert d.coeffs[band, 0] == 1.0
        assert d.coeffs[band + 1, 2] == 0.0

    def test_products_of_dealiased_fields_alias_free(self):
        # compare the pseudo-spectral product on the working grid against
        # the exact product computed on a 3x finer grid
        g = F.TorusGrid(32, 32)
        a = F.dealias(F.random_band_limited(g, 10, seed=3))
        b = F.dealias(F.random_band_limited(g, 10, seed=4))
        prod = F.dealias(F.to_spectral(a.to_physical() * b.to_physical(), g))

        fine = F.to_spectral(F.upsample_physical(a, 3) * F.upsample_physical(b, 3))
        mask = g.dealias_mask
        k1 = g.k1.astype(int)
        k2 = g.k2.astype(int)
        K1 = np.broadcast_to(k1, g.shape)[mask]
        K2 = np.broadcast_to(k2, g.shape)[mask]
        exact = fine.coeffs[K1 % 96, K2 % 96]
        assert np.max(np.abs(prod.coeffs[mask] - exact)) < 1e-13


class TestHolderNorms:
    def test_zero_field(self, grid):
        norms = F.discrete_holder_norms(F.SpectralField2D.zero(grid), 0.5)
        assert norms.sup == 0.0
        assert norms.grad_sup == 0.0
        assert norms.holder_seminorm == 0.0

    def test_cosine_sup(self):
        g = F.TorusGrid(16, 16)
        norms = F.discrete_holder_norms(make_cos(g), 0.5)
        assert norms.sup == pytest.approx(1.0, abs=1e-12)
        assert norms.grad_sup == pytest.approx(2 * np.pi, rel=1e-10)

    def test_seminorm_below_exhaustive_value(self):
        # brute force over all O(N^4) pairs on a 16x16 grid
        g = F.TorusGrid(16, 16)
        f = F.random_band_limited(g, 4, seed=9)
        alpha = 0.5
        g1, g2 = F.gradient_physical(f)
        pts = np.stack([g1.ravel(), g2.ravel()])
        ii, jj = np.meshgrid(np.arange(16), np.arange(16), indexing="ij")
        x1 = (ii / 16).ravel()
        x2 = (jj / 16).ravel()
        d1 = np.abs(x1[:, None] - x1[None, :])
        d2 = np.abs(x2[:, None] - x2[None, :])
        d1 = np.minimum(d1, 1 - d1)
        d2 = np.minimum(d2, 1 - d2)
        dist = np.hypot(d1, d2)
        diff = np.sqrt(
            (pts[0][:, None] - pts[0][None, :]) ** 2
            + (pts[1][:, None] - pts[1][None, :]) ** 2
        )
        mask = dist > 0
        exhaustive = np.max(diff[mask] / dist[mask] ** alpha)

        norms = F.discrete_holder_norms(f, alpha, pair_budget=4000, seed=1)
        assert norms.holder_seminorm <= exhaustive * (1 + 1e-12)
        # with all NN pairs plus thousands of samples it should be close
        assert norms.holder_seminorm > 0.5 * exhaustive

    def test_deterministic_and_monotone_in_budget(self, grid):
        f = F.random_band_limited(grid, 4, seed=10)
        a = F.discrete_holder_norms(f, 0.4, pair_budget=256, seed=3)
        b = F.discrete_holder_norms(f, 0.4, pair_budget=256, seed=3)
        assert a.holder_seminorm == b.holder_seminorm
        c = F.discrete_holder_norms(f, 0.4, pair_budget=2048, seed=3)
        assert c.holder_seminorm >= a.holder_seminorm

    def test_budget_precondition(self, grid):
        f = F.random_band_limited(grid, 4, seed=10)
        with pytest.raises(ValueError):
            F.discrete_holder_norms(f, 0.4, pair_budget=100)

    def test_alpha_range(self, grid):
        f = F.random_band_limited(grid, 4, seed=10)
        for alpha in (0.0, 1.0, -0.2):
            with pytest.raises(ValueError):
                F.discrete_holder_norms(f, alpha)


class TestSnapshotIO:
    @pytest.mark.parametrize("kind", ["spectral", "physical"])
    def test_round_trip(self, tmp_path, grid, kind):
        f = F.random_band_limited(grid, 5, seed=20)
        path = tmp_path / "field.ssgf"
        F.save_field(path, f, kind=kind)
        back = F.load_field(path)
        tol = 0.0 if kind == "spectral" else 1e-14
        assert np.max(np.abs(back.coeffs - f.coeffs)) <= tol

    def test_header_layout(self, tmp_path, grid):
        f = F.SpectralField2D.zero(grid)
        path = tmp_path / "field.ssgf"
        F.save_field(path, f, kind="physical")
        raw = path.read_bytes()
        assert raw[:4] == b"SSGF"
        assert int.from_bytes(raw[4:8], "little") == 1
        assert int.from_bytes(raw[8:12], "little") == 16
        assert int.from_bytes(raw[12:16], "little") == 16
        assert raw[16] == 0
        assert len(raw) == 17 + 16 * 16 * 8

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.ssgf"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(ValueError):
            F.load_field(path)


class TestUpsample:
    def test_factor_one_is_plain_transform(self, grid):
        f = F.random_band_limited(grid, 5, seed=30)
        assert np.array_equal(F.upsample_physical(f, 1), f.to_physical())

    def test_nodes_reproduced(self, grid):
        rng = np.random.default_rng(31)
        phys = rng.standard_normal(grid.shape)
        f = F.to_spectral(phys, grid)
        up = F.upsample_physical(f, 2)
        assert np.max(np.abs(up[::2, ::2] - phys)) < 1e-13

    def test_matches_direct_mode_sum(self, grid):
        f = F.random_band_limited(grid, 5, seed=32)
        up = F.upsample_physical(f, 2)
        big = F.TorusGrid(32, 32)
        X1, X2 = big.mesh
        acc = np.zeros(big.shape, dtype=complex)
        for k1 in range(-7, 8):
            for k2 in range(-7, 8):
                acc += f.coeffs[k1 % 16, k2 % 16] * np.exp(
                    2j * np.pi * (k1 * X1 + k2 * X2)
                )
        assert np.max(np.abs(up - acc.real)) < 1e-13
