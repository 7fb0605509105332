import math

import numpy as np
import pytest
from scipy.stats import nbinom

import agririsk as ar
from agririsk.errors import InputError, ModelError

from conftest import make_banded

# regression constant: sum of eps_j / v_j on the bundled dataset, single
# sector, unit = 1; recomputed independently in test_bundled_single_sector_rate
BUNDLED_SINGLE_SECTOR_RATE = 0.568306248457


def poisson_pmf(lam: float, n: int) -> float:
    return math.exp(-lam) * lam**n / math.factorial(n)


def one_sector(params: ar.SectorParams, bands, unit: float = 1.0) -> ar.BandedPortfolio:
    return make_banded([("s", params, bands)], unit=unit)


def params_for(bands, cv: float) -> ar.SectorParams:
    """Sector params consistent with the bands' expected count, at a given CV."""
    count = sum(eps / v for v, eps in bands)
    return ar.SectorParams(count, cv * count)


def poisson_sector(bands, unit: float = 1.0) -> ar.BandedPortfolio:
    return one_sector(params_for(bands, 0.0), bands, unit=unit)


class TestUnitsCeiling:
    def test_round_up(self):
        assert ar.units_ceiling(250.0, 100.0) == 3

    def test_exact_multiple_not_rounded_up(self):
        assert ar.units_ceiling(300.0, 100.0) == 3

    def test_quotient_float_fuzz_snaps(self):
        # 4.35 / 0.05 evaluates to 87.00000000000001
        assert ar.units_ceiling(4.35, 0.05) == 87

    def test_small_amounts_land_in_band_one(self):
        assert ar.units_ceiling(0.2, 100.0) == 1


class TestBanding:
    def test_bulgaria_band(self, bundled_portfolio):
        bulgaria = ar.Portfolio(obligors=(bundled_portfolio.obligors[0],))
        sectored = ar.assign_sectors(bulgaria, ar.SectorAssignment("single"))
        banded = ar.band_exposures(sectored, 1.0)
        band = banded.sectors[0].bands[0]
        assert band.v == 801
        assert band.epsilon == pytest.approx(24.96, abs=1e-6)
        assert band.mu == pytest.approx(24.96 / 801, rel=1e-9)

    def test_same_level_bands_merge(self):
        p = ar.parse_portfolio(
            "id,name,exposure,mean_loss_rate,loss_rate_stddev,crop_ratio,livestock_ratio\n"
            "A,A,250,0.1,0.0,1.0,0.0\n"
            "B,B,201,0.2,0.0,1.0,0.0\n"
        )
        sectored = ar.assign_sectors(p, ar.SectorAssignment("single"))
        banded = ar.band_exposures(sectored, 100.0)
        assert [b.v for b in banded.sectors[0].bands] == [3]
        assert banded.sectors[0].bands[0].epsilon == pytest.approx((250 * 0.1 + 201 * 0.2) / 100)
        assert len(banded.obligor_bands["A"]) == 1
        assert len(banded.obligor_bands["B"]) == 1

    def test_banding_preserves_expected_loss(self, bundled_portfolio, bundled_banded):
        assert bundled_banded.expected_loss == pytest.approx(
            bundled_portfolio.total_expected_loss, rel=1e-6
        )

    def test_band_levels_are_ceilings(self, bundled_portfolio):
        sectored = ar.assign_sectors(bundled_portfolio, ar.SectorAssignment("crop-livestock"))
        banded = ar.band_exposures(sectored, 1.0)
        expected_levels = {
            (sector.name, ar.units_ceiling(sub.amount, 1.0))
            for sector in sectored.sectors
            for sub in sector.subs
        }
        got_levels = {(s.name, b.v) for s in banded.sectors for b in s.bands}
        assert got_levels == expected_levels

    def test_nonpositive_unit_rejected(self, bundled_portfolio):
        sectored = ar.assign_sectors(bundled_portfolio, ar.SectorAssignment("single"))
        with pytest.raises(InputError, match="unit"):
            ar.band_exposures(sectored, 0.0)


class TestPoissonRate:
    def test_single_band(self):
        assert ar.poisson_rate(poisson_sector([(1, 2.5)])) == pytest.approx(2.5)

    def test_two_bands(self):
        assert ar.poisson_rate(poisson_sector([(1, 1.0), (2, 3.0)])) == pytest.approx(2.5)

    def test_bundled_single_sector_rate(self, bundled_portfolio):
        sectored = ar.assign_sectors(bundled_portfolio, ar.SectorAssignment("single"))
        banded = ar.band_exposures(sectored, 1.0)
        # independent recomputation straight from the obligor records
        direct = sum(
            (o.exposure * o.mean_loss_rate) / math.ceil(o.exposure) for o in bundled_portfolio
        )
        assert ar.poisson_rate(banded) == pytest.approx(direct, rel=1e-12)
        assert ar.poisson_rate(banded) == pytest.approx(BUNDLED_SINGLE_SECTOR_RATE, abs=1e-9)


class TestSeverityPolynomial:
    def test_single_band_point_mass(self):
        f = ar.severity_polynomial((ar.Band(3, 1.7),))
        assert f.tolist() == [0.0, 0.0, 0.0, 1.0]

    def test_normalization(self):
        f = ar.severity_polynomial((ar.Band(1, 1.0), ar.Band(2, 6.0)))
        assert f[1] == pytest.approx(0.25)
        assert f[2] == pytest.approx(0.75)

    def test_coefficients_sum_to_one(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            bands = tuple(
                ar.Band(int(v), float(eps))
                for v, eps in zip(rng.integers(1, 50, 8), rng.uniform(0.01, 5.0, 8))
            )
            f = ar.severity_polynomial(bands)
            assert f.sum() == pytest.approx(1.0, abs=1e-12)
            assert f[0] == 0.0

    def test_degenerate_sector_rejected(self):
        with pytest.raises(ModelError, match="degenerate"):
            ar.severity_polynomial((ar.Band(2, 0.0),))


class TestLossDistPoisson:
    def test_matches_direct_poisson_formula(self):
        lam = 2.0
        dist = ar.loss_dist_poisson(poisson_sector([(1, lam)]), 64)
        for n in range(11):
            assert dist.pmf[n] == pytest.approx(poisson_pmf(lam, n), rel=1e-12)

    def test_two_band_hand_enumeration(self):
        # bands (v=1, mu=1), (v=2, mu=1): pmf[2] = e^-2 (1/2! + 1)
        dist = ar.loss_dist_poisson(poisson_sector([(1, 1.0), (2, 2.0)]), 32)
        assert dist.pmf[2] == pytest.approx(math.exp(-2.0) * 1.5, rel=1e-12)

    def test_zero_risk_portfolio_is_point_mass_at_zero(self):
        dist = ar.loss_dist_poisson(poisson_sector([(1, 0.0), (5, 0.0)]), 16)
        assert dist.pmf[0] == 1.0
        assert dist.pmf[1:].sum() == 0.0

    def test_small_grid_error_names_minimum(self):
        with pytest.raises(ModelError, match="at least 6"):
            ar.loss_dist_poisson(poisson_sector([(5, 1.0)]), 4)


class TestLossDistSector:
    def test_negative_binomial_closed_form(self):
        params = ar.SectorParams.from_alpha_rho(2.0, 0.3)
        dist = ar.loss_dist_sector(one_sector(params, [(1, params.mu_k)]), 64)
        expected = nbinom.pmf(np.arange(11), 2.0, 0.7)
        np.testing.assert_allclose(dist.pmf[:11], expected, rtol=0, atol=1e-12)

    def test_poisson_limit(self):
        bands = [(1, 0.5), (3, 0.9), (7, 0.35)]
        mixed = one_sector(params_for(bands, 1e-6 / 0.02), bands)
        dist_mixed = ar.loss_dist_sector(mixed, 512)
        dist_poisson = ar.loss_dist_poisson(mixed, 512)
        tv = 0.5 * np.abs(dist_mixed.pmf - dist_poisson.pmf).sum()
        assert tv < 1e-4

    def test_two_sectors_equal_convolution_of_parts(self):
        bands_a = [(1, 0.8), (4, 1.2)]
        bands_b = [(2, 0.6), (3, 0.9)]
        pa = params_for(bands_a, 0.9)
        pb = params_for(bands_b, 0.5)
        combined = ar.loss_dist_sector(make_banded([("a", pa, bands_a), ("b", pb, bands_b)]), 512)
        alone_a = ar.loss_dist_sector(make_banded([("a", pa, bands_a)]), 512)
        alone_b = ar.loss_dist_sector(make_banded([("b", pb, bands_b)]), 512)
        tv = 0.5 * np.abs(combined.pmf - ar.convolve(alone_a, alone_b).pmf).sum()
        assert tv <= 1e-12

    def test_sigma_zero_sector_falls_back_to_poisson(self):
        bands = [(1, 0.5), (3, 0.9)]
        banded = poisson_sector(bands)
        np.testing.assert_array_equal(
            ar.loss_dist_sector(banded, 128).pmf, ar.loss_dist_poisson(banded, 128).pmf
        )

    def test_tail_fattens_with_sector_volatility(self):
        # one band at v=1, mean count fixed at 2; tail beyond 2x mean must be
        # nondecreasing across a 3-point volatility grid
        mean_count = 2.0
        tails = []
        for sigma in (1.0, 2.0, 4.0):
            dist = ar.loss_dist_sector(
                one_sector(ar.SectorParams(mean_count, sigma), [(1, mean_count)]), 4096
            )
            tails.append(1.0 - dist.cdf)
        for q in (4, 6, 10, 20):
            assert tails[0][q] <= tails[1][q] <= tails[2][q]


class TestLossDistFft:
    def test_poisson_single_band_matches_direct_formula(self):
        lam = 2.0
        dist = ar.loss_dist_fft(poisson_sector([(1, lam)]), 64)
        for n in range(20):
            assert dist.pmf[n] == pytest.approx(poisson_pmf(lam, n), abs=1e-10)

    def test_matches_panjer_on_mixed_sectors(self):
        bands_a = [(1, 0.4), (5, 1.0)]
        bands_b = [(2, 0.8), (7, 0.6)]
        banded = make_banded(
            [("a", params_for(bands_a, 1.2), bands_a), ("b", params_for(bands_b, 0.0), bands_b)]
        )
        fft = ar.loss_dist_fft(banded, 1024)
        panjer = ar.loss_dist_sector(banded, 1024)
        assert 0.5 * np.abs(fft.pmf - panjer.pmf).sum() <= 1e-8

    def test_tiny_rho_series_branch_matches_panjer(self):
        bands = [(1, 0.3), (4, 0.9)]
        params = params_for(bands, 5e-5)
        assert 0.0 < params.rho < 1e-4
        banded = one_sector(params, bands)
        fft = ar.loss_dist_fft(banded, 512)
        panjer = ar.loss_dist_sector(banded, 512)
        assert 0.5 * np.abs(fft.pmf - panjer.pmf).sum() <= 1e-8

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ModelError, match="power of two"):
            ar.loss_dist_fft(poisson_sector([(1, 1.0)]), 100)

    def test_insufficient_padding_rejected(self):
        with pytest.raises(ModelError, match="at least 22"):
            ar.loss_dist_fft(poisson_sector([(10, 1.0)]), 16)

    def test_negatives_clamped_and_bounded(self, bundled_banded, bundled_dist):
        assert float(bundled_dist.pmf.min()) >= 0.0
        raw = np.fft.ifft(np.exp(np.zeros(8, dtype=complex))).real  # exact point mass
        assert ar.engine._finalize_pmf(raw, 1.0).pmf[0] == 1.0
        assert bundled_dist.pmf.sum() <= 1.0 + 1e-9
        assert bundled_dist.truncation_mass >= -1e-9

    def test_large_negative_entry_is_an_error(self):
        raw = np.array([0.5, -1e-10, 0.5])
        with pytest.raises(ModelError, match="clamp"):
            ar.engine._finalize_pmf(raw, 1.0)


class TestConvolve:
    def point_mass(self, n: int, size: int = 16, unit: float = 1.0) -> ar.LossDistribution:
        pmf = np.zeros(size)
        pmf[n] = 1.0
        return ar.LossDistribution(unit=unit, pmf=pmf, truncation_mass=0.0)

    def test_identity_element(self):
        lam = 1.3
        d = ar.loss_dist_poisson(poisson_sector([(1, lam)]), 32)
        out = ar.convolve(self.point_mass(0, 32), d)
        np.testing.assert_allclose(out.pmf, d.pmf, rtol=0, atol=1e-15)

    def test_shift(self):
        out = ar.convolve(self.point_mass(2), self.point_mass(3))
        assert out.pmf[5] == pytest.approx(1.0, abs=1e-12)
        assert out.pmf.sum() == pytest.approx(1.0, abs=1e-12)

    def test_poisson_additivity(self):
        d1 = ar.loss_dist_poisson(poisson_sector([(1, 1.0)]), 64)
        d2 = ar.loss_dist_poisson(poisson_sector([(1, 2.0)]), 64)
        d3 = ar.loss_dist_poisson(poisson_sector([(1, 3.0)]), 64)
        tv = 0.5 * np.abs(ar.convolve(d1, d2).pmf - d3.pmf).sum()
        assert tv <= 1e-12

    def test_unit_mismatch_rejected(self):
        with pytest.raises(ModelError, match="unit mismatch"):
            ar.convolve(self.point_mass(1, unit=1.0), self.point_mass(1, unit=2.0))

    def test_reduction_order_independent(self):
        parts = [
            ar.loss_dist_poisson(poisson_sector([(1, lam)]), 128) for lam in (0.5, 1.1, 2.7)
        ]
        left = ar.convolve(ar.convolve(parts[0], parts[1]), parts[2])
        right = ar.convolve(parts[0], ar.convolve(parts[1], parts[2]))
        assert 0.5 * np.abs(left.pmf - right.pmf).sum() <= 1e-12


class TestSectorParams:
    def test_invariants_from_rate_stats(self):
        params = ar.SectorParams.from_rate_stats(0.021, 0.018, 0.57)
        assert params.alpha == pytest.approx(params.mu_k**2 / params.sigma_k**2, rel=1e-12)
        assert params.beta == pytest.approx(params.sigma_k**2 / params.mu_k, rel=1e-12)
        assert params.rho == pytest.approx(params.beta / (1 + params.beta), rel=1e-12)
        assert params.cv == pytest.approx(0.018 / 0.021, rel=1e-12)

    def test_from_alpha_rho_round_trip(self):
        params = ar.SectorParams.from_alpha_rho(2.0, 0.3)
        assert params.alpha == pytest.approx(2.0, rel=1e-12)
        assert params.rho == pytest.approx(0.3, rel=1e-12)

    def test_zero_mean_with_volatility_rejected(self):
        with pytest.raises(ModelError):
            ar.SectorParams(0.0, 0.5)

    def test_rho_outside_unit_interval_rejected(self):
        with pytest.raises(ModelError):
            ar.SectorParams.from_alpha_rho(2.0, 1.0)


class TestMomentConservation:
    def test_mean_matches_banded_expected_loss(self, bundled_banded, bundled_dist):
        assert bundled_dist.truncation_mass < 1e-9
        mom = ar.moments(bundled_dist)
        assert mom.mean == pytest.approx(bundled_banded.expected_loss, rel=1e-6)

    def test_one_sector_variance_formula(self):
        bands = [(1, 0.3), (4, 0.5), (9, 0.3)]
        count = sum(eps / v for v, eps in bands)
        params = ar.SectorParams.from_rate_stats(0.03, 0.024, count)
        banded = one_sector(params, bands, unit=2.0)
        dist = ar.loss_dist_fft(banded, ar.auto_grid_size(banded))
        assert dist.truncation_mass < 1e-9
        eps_total = sum(eps for _, eps in bands)
        expected_var = 4.0 * (
            sum(eps * v for v, eps in bands) + (0.024 / 0.03) ** 2 * eps_total**2
        )
        mom = ar.moments(dist)
        assert mom.variance == pytest.approx(expected_var, rel=1e-5)
        mean_money, var_money = ar.analytic_moments(banded)
        assert mom.mean == pytest.approx(mean_money, rel=1e-9)
        assert var_money == pytest.approx(expected_var, rel=1e-12)


class TestSerialization:
    def test_csv_columns_and_cdf(self):
        d = ar.loss_dist_poisson(poisson_sector([(1, 1.0)]), 8)
        lines = d.to_csv().strip().splitlines()
        assert lines[0] == "loss_units,loss_money,pmf,cdf"
        assert len(lines) == 9
        first = lines[1].split(",")
        assert first[0] == "0"
        assert float(first[2]) == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_json_dict_round_trip(self):
        d = ar.loss_dist_poisson(poisson_sector([(1, 1.0)]), 8)
        payload = d.to_json_dict()
        assert payload["unit"] == 1.0
        assert payload["truncation_mass"] == d.truncation_mass
        np.testing.assert_allclose(payload["pmf"], d.pmf)
