import math
from fractions import Fraction
from itertools import product

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recatom.distributions import (
    DistributionSpec,
    DomainError,
    gaussian_cdf,
    gaussian_quantile,
    geometric_moments,
    geometric_pmf,
    multinomial_cov,
    nb_cdf,
    nb_pmf,
    sample_stream,
    sample_x,
)


def first_success_prob(p: Fraction, h: int) -> Fraction:
    """Sum over explicit S/F strings of length h whose first S is at trial h."""
    total = Fraction(0)
    for outcome in product("SF", repeat=h):
        if "S" in outcome and outcome.index("S") == h - 1:
            prob = Fraction(1)
            for c in outcome:
                prob *= p if c == "S" else 1 - p
            total += prob
    return total


def convolved_pmf(k: int, p: float, n_max: int) -> list[float]:
    """k-fold convolution of the geometric pmf, index = number of trials."""
    geo = [0.0] + [(1 - p) ** (h - 1) * p for h in range(1, n_max + 1)]
    out = [1.0] + [0.0] * n_max
    for _ in range(k):
        nxt = [0.0] * (n_max + 1)
        for a, va in enumerate(out):
            if va:
                for h in range(1, n_max + 1 - a):
                    nxt[a + h] += va * geo[h]
        out = nxt
    return out


class TestGeometric:
    def test_trivial_values(self):
        assert geometric_pmf(0.5, 1) == 0.5
        assert geometric_pmf(0.5, 3) == 0.125

    def test_matches_outcome_enumeration(self):
        assert math.isclose(geometric_pmf(0.3, 4), 0.1029, rel_tol=1e-12)
        assert math.isclose(geometric_pmf(0.3, 4), float(first_success_prob(Fraction(3, 10), 4)), rel_tol=1e-12)

    @pytest.mark.parametrize("p, h", [(0.0, 1), (1.0, 1), (-0.1, 2), (0.5, 0)])
    def test_domain(self, p, h):
        with pytest.raises(DomainError):
            geometric_pmf(p, h)

    def test_moments(self):
        m = geometric_moments(0.5)
        assert (m.nu, m.sigma2, m.gamma) == (2.0, 2.0, 6.0)
        m = geometric_moments(0.25)
        assert (m.nu, m.sigma2, m.gamma) == (4.0, 12.0, 84.0)
        with pytest.raises(DomainError):
            geometric_moments(1.0)

    @pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
    def test_moments_against_simulation(self, p):
        draws = np.random.default_rng(7).geometric(p, size=10**6)
        m = geometric_moments(p)
        se_mean = math.sqrt(m.sigma2 / len(draws))
        assert abs(draws.mean() - m.nu) <= 3 * se_mean
        centered = draws - draws.mean()
        se_var = math.sqrt((np.mean(centered**4) - m.sigma2**2) / len(draws))
        assert abs(draws.var(ddof=1) - m.sigma2) <= 3 * se_var


class TestNegativeBinomial:
    def test_trivial_values(self):
        assert nb_pmf(1, 0.5, 3) == pytest.approx(0.125, abs=1e-15)
        assert nb_pmf(2, 0.5, 2) == pytest.approx(0.25, abs=1e-15)
        assert nb_pmf(3, 0.5, 2) == 0.0

    def test_convolution_example(self):
        assert nb_pmf(3, 0.5, 5) == pytest.approx(0.1875, abs=1e-14)
        assert convolved_pmf(3, 0.5, 5)[5] == pytest.approx(0.1875, abs=1e-15)

    @pytest.mark.parametrize("k", range(1, 7))
    @pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
    def test_equals_geometric_convolution(self, k, p):
        ref = convolved_pmf(k, p, 60)
        for n in range(1, 61):
            assert abs(nb_pmf(k, p, n) - ref[n]) <= 1e-12

    @pytest.mark.parametrize("k", [1, 3, 10])
    @pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
    def test_truncated_mass_and_mean(self, k, p):
        top = int(k + 50 / p)
        n = np.arange(k, top + 1)
        pmf = np.array([nb_pmf(k, p, int(v)) for v in n])
        assert 1.0 - pmf.sum() < 1e-6
        assert abs(float(n @ pmf) - k / p) <= 1e-4

    def test_cdf_accumulates_pmf(self):
        n = np.arange(0, 40)
        cdf = nb_cdf(4, 0.3, n)
        acc = np.cumsum([nb_pmf(4, 0.3, int(v)) for v in n])
        np.testing.assert_allclose(cdf, acc, atol=1e-13)
        assert nb_cdf(4, 0.3, 3) == 0.0

    def test_large_k_no_overflow(self):
        k, p = 10**5, 0.25
        mode = int((k - 1) / p) + 1
        val = nb_pmf(k, p, mode)
        assert 0.0 < val < 1.0
        assert math.isfinite(val)

    def test_domain(self):
        with pytest.raises(DomainError):
            nb_pmf(0, 0.5, 3)
        with pytest.raises(DomainError):
            nb_pmf(2, 1.5, 3)


class TestDistributionSpec:
    def test_binomial_expansion(self):
        spec = DistributionSpec.binomial(2, 0.5)
        assert spec.support == (0.0, 1.0, 2.0)
        assert spec.probs == (0.25, 0.5, 0.25)
        spec = DistributionSpec.binomial(5, 0.3)
        for j, q in enumerate(spec.probs):
            assert q == pytest.approx(math.comb(5, j) * 0.3**j * 0.7 ** (5 - j), rel=1e-12)

    @pytest.mark.parametrize(
        "support, probs",
        [((0, 1), (0.5, 0.6)), ((1, 0), (0.5, 0.5)), ((0, 0), (0.5, 0.5)), ((0, 1), (1.2, -0.2)), ((), ())],
    )
    def test_invalid(self, support, probs):
        with pytest.raises(DomainError):
            DistributionSpec(support, probs)

    @pytest.mark.parametrize("r, alpha", [(0, 0.5), (2, 0.0), (2, 1.0), (1.5, 0.5)])
    def test_invalid_binomial(self, r, alpha):
        with pytest.raises(DomainError):
            DistributionSpec.binomial(r, alpha)

    def test_dict_round_trip(self):
        for spec in (DistributionSpec.binomial(3, 0.2), DistributionSpec((-1, 7), (0.3, 0.7))):
            assert DistributionSpec.from_dict(spec.to_dict()) == spec


class TestSampling:
    def test_degenerate(self):
        spec = DistributionSpec((3.5,), (1.0,))
        rng = np.random.default_rng(0)
        assert all(sample_x(spec, rng) == 3.5 for _ in range(100))

    def test_binomial_frequency(self):
        spec = DistributionSpec.binomial(2, 0.5)
        draws = sample_stream(spec, 10**6, np.random.default_rng(11))
        freq = np.mean(draws == 0.0)
        assert abs(freq - 0.25) <= 3 * math.sqrt(0.25 * 0.75 / 10**6)

    def test_deterministic_given_seed(self):
        spec = DistributionSpec.binomial(4, 0.3)
        rng1, rng2 = np.random.default_rng(99), np.random.default_rng(99)
        a = [sample_x(spec, rng1) for _ in range(50)]
        b = [sample_x(spec, rng2) for _ in range(50)]
        assert a == b

    def test_scalar_and_vector_paths_agree(self):
        spec = DistributionSpec((0, 1, 2, 5), (0.1, 0.0, 0.6, 0.3))
        rng1, rng2 = np.random.default_rng(3), np.random.default_rng(3)
        scalar = [sample_x(spec, rng1) for _ in range(500)]
        vector = sample_stream(spec, 500, rng2).tolist()
        assert scalar == vector
        assert 1.0 not in scalar  # zero-mass support point never drawn


class TestMultinomialCov:
    def test_example(self):
        sigma = multinomial_cov((0.25, 0.25, 0.5))
        np.testing.assert_allclose(np.diag(sigma), (0.75, 0.75, 0.5), atol=1e-15)
        assert sigma[0, 1] == pytest.approx(-0.25, abs=1e-15)
        assert sigma[0, 2] == pytest.approx(-0.353553, abs=1e-6)
        assert sigma[1, 2] == sigma[0, 2]
        np.testing.assert_array_equal(sigma, sigma.T)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3))
    def test_null_vector_and_psd(self, raw):
        p = np.asarray(raw) / sum(raw)
        p[-1] = 1.0 - p[0] - p[1]
        sigma = multinomial_cov(p)
        np.testing.assert_allclose(sigma @ np.sqrt(p), 0.0, atol=1e-12)
        assert np.linalg.eigvalsh(sigma).min() >= -1e-12

    @pytest.mark.parametrize("p", [(0.5, 0.5, 0.0), (0.2, 0.2, 0.2), (0.5, 0.6, -0.1)])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            multinomial_cov(p)


class TestGaussian:
    def test_symmetry(self):
        assert gaussian_cdf(0.0) == 0.5
        for x in (0.5, 1.0, 2.0, 3.0):
            assert gaussian_cdf(-x) == pytest.approx(1.0 - gaussian_cdf(x), abs=1e-15)

    def test_against_high_precision_reference(self):
        mpmath.mp.dps = 40
        for x in np.linspace(-8, 8, 161):
            ref = float(mpmath.ncdf(mpmath.mpf(float(x))))
            assert abs(gaussian_cdf(float(x)) - ref) <= 1e-10
        for u in (1e-9, 1e-4, 0.025, 0.3, 0.5, 0.8, 0.975, 1 - 1e-6):
            ref = float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(u) - 1))
            assert abs(gaussian_quantile(u) - ref) <= 1e-9

    def test_quantile_reference_value(self):
        assert gaussian_quantile(0.975) == pytest.approx(1.959964, abs=1e-5)

    def test_round_trip(self):
        for x in np.linspace(-6, 6, 241):
            assert abs(gaussian_quantile(gaussian_cdf(float(x))) - x) <= 1e-8

    def test_monotone(self):
        grid = np.linspace(-8, 8, 10**4)
        values = gaussian_cdf(grid)
        assert np.all(np.diff(values) >= 0.0)
        assert [gaussian_cdf(float(x)) for x in grid[::500]] == pytest.approx(values[::500].tolist(), abs=1e-15)

    @pytest.mark.parametrize("u", [0.0, 1.0, -0.1])
    def test_quantile_domain(self, u):
        with pytest.raises(DomainError):
            gaussian_quantile(u)
