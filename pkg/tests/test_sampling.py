import math
import time

import numpy as np
import pytest
from scipy.stats import binom, chi2

from entrokit.alphabet import FamilySpec, HARMONIC, build_family, validate_pmf
from entrokit.sampling import (
    AliasTable,
    CounterRng,
    CountVector,
    SeedSpec,
    _binomial,
    _binomial_btrs,
    _binomial_inversion,
    _mix64,
    _mix64_array,
    derive_stream_seed,
    derive_stream_seeds,
    sample_counts_categorical,
    sample_counts_multinomial,
)

SAMPLERS = (sample_counts_categorical, sample_counts_multinomial)


class TestStreamDerivation:
    def test_deterministic(self):
        spec = SeedSpec(123456789, 42)
        assert derive_stream_seed(spec) == derive_stream_seed(spec)

    def test_batch_matches_scalar(self):
        batch = derive_stream_seeds(99, 1000, 50)
        scalar = [derive_stream_seed(SeedSpec(99, 1000 + i)) for i in range(50)]
        assert batch.tolist() == scalar

    def test_collision_free_over_a_million_indices(self):
        seeds = derive_stream_seeds(0xDEADBEEF, 0, 10**6)
        assert np.unique(seeds).size == 10**6

    def test_batch_matches_scalar_at_large_offsets(self):
        # experiment grids start replicate blocks at multiples of 2^32
        start = 3 << 32
        batch = derive_stream_seeds(7, start, 8)
        scalar = [derive_stream_seed(SeedSpec(7, start + i)) for i in range(8)]
        assert batch.tolist() == scalar

    def test_adjacent_streams_differ_for_a_million_masters(self):
        # vectorized over master seeds using the same mixing pipeline
        rng = np.random.default_rng(5)
        masters = rng.integers(0, 2**64, size=10**6, dtype=np.uint64)
        golden = np.uint64(0x9E3779B97F4A7C15)
        h_master = _mix64_array(masters + golden)
        idx0 = np.uint64(_mix64((0 * 0xD1342543DE82EF95 + 0x632BE59BD9B4E019) & (2**64 - 1)))
        idx1 = np.uint64(_mix64((1 * 0xD1342543DE82EF95 + 0x632BE59BD9B4E019) & (2**64 - 1)))
        s0 = _mix64_array(h_master ^ idx0)
        s1 = _mix64_array(h_master ^ idx1)
        assert not np.any(s0 == s1)
        # spot-check the vectorization against the public scalar op
        assert s0[0] == derive_stream_seed(SeedSpec(int(masters[0]), 0))

    def test_validation(self):
        with pytest.raises(ValueError):
            SeedSpec(-1, 0)
        with pytest.raises(ValueError):
            SeedSpec(2**64, 0)
        with pytest.raises(ValueError):
            SeedSpec(0, -1)


class TestCounterRng:
    def test_scalar_and_batch_agree(self):
        a = CounterRng(777)
        b = CounterRng(777)
        batch = b.uniforms(64)
        scalars = [a.uniform() for _ in range(64)]
        assert batch.tolist() == scalars

    def test_mixed_call_pattern_is_one_stream(self):
        a = CounterRng(31337)
        b = CounterRng(31337)
        mixed = [a.uniform(), *a.uniforms(3).tolist(), a.uniform()]
        assert mixed == b.uniforms(5).tolist()

    def test_range_and_coarse_uniformity(self):
        u = CounterRng(2024).uniforms(200_000)
        assert np.all(u >= 0.0) and np.all(u < 1.0)
        assert abs(u.mean() - 0.5) < 0.004
        assert abs(np.mean(u < 0.25) - 0.25) < 0.004


class TestCountVector:
    def test_validation(self):
        with pytest.raises(ValueError):
            CountVector(np.array([1, 2]), 4)
        with pytest.raises(ValueError):
            CountVector(np.array([-1, 5]), 4)
        with pytest.raises(ValueError):
            CountVector(np.array([], dtype=np.int64), 0)

    def test_immutable(self):
        cv = CountVector(np.array([3, 1]), 4)
        with pytest.raises(ValueError):
            cv.counts[0] = 5


class TestSamplers:
    @pytest.mark.parametrize("sample", SAMPLERS)
    def test_single_atom(self, sample):
        pmf = validate_pmf((1.0,))
        counts = sample(pmf, 7, derive_stream_seed(SeedSpec(1, 0)))
        assert counts.counts.tolist() == [7]

    @pytest.mark.parametrize("sample", SAMPLERS)
    def test_n_equals_one(self, sample):
        pmf = build_family(FamilySpec(HARMONIC, 6))
        counts = sample(pmf, 1, derive_stream_seed(SeedSpec(2, 3)))
        assert counts.counts.sum() == 1
        assert np.max(counts.counts) == 1

    @pytest.mark.parametrize("sample", SAMPLERS)
    def test_deterministic_given_seed(self, sample):
        pmf = build_family(FamilySpec(HARMONIC, 12))
        seed = derive_stream_seed(SeedSpec(99, 7))
        first = sample(pmf, 5000, seed)
        second = sample(pmf, 5000, seed)
        assert np.array_equal(first.counts, second.counts)

    @pytest.mark.parametrize("sample", SAMPLERS)
    def test_total_preserved_on_random_cases(self, sample):
        rng = np.random.default_rng(8)
        for trial in range(20):
            k = int(rng.integers(1, 40))
            weights = rng.gamma(1.0, size=k) + 1e-3
            pmf = validate_pmf(weights / weights.sum())
            n = int(rng.integers(1, 5000))
            counts = sample(pmf, n, int(rng.integers(0, 2**64, dtype=np.uint64)))
            assert int(counts.counts.sum()) == n
            assert counts.size == k

    def test_categorical_binomial_concentration(self):
        # fair coin, one million draws: within 4 binomial standard deviations
        pmf = validate_pmf((0.5, 0.5))
        counts = sample_counts_categorical(pmf, 10**6, derive_stream_seed(SeedSpec(1234, 0)))
        sd = math.sqrt(10**6 * 0.25)
        assert abs(counts.counts[0] - 500_000) <= 4.0 * sd

    def test_multinomial_cell_means(self):
        # replicate means match n p_i within 5 standard errors, every cell
        pmf = build_family(FamilySpec(HARMONIC, 100))
        n, reps = 10**5, 10**4
        totals = np.zeros(100, dtype=np.int64)
        sq = np.zeros(100, dtype=np.float64)
        seeds = derive_stream_seeds(2718, 0, reps)
        for seed in seeds:
            c = sample_counts_multinomial(pmf, n, int(seed)).counts
            totals += c
            sq += c.astype(np.float64) ** 2
        mean = totals / reps
        var = sq / reps - mean**2
        se = np.sqrt(np.maximum(var, 1e-9) / reps)
        dev = np.abs(mean - n * pmf.probs) / se
        assert float(np.max(dev)) <= 5.0

    def test_rejects_zero_draws(self):
        pmf = validate_pmf((0.5, 0.5))
        for sample in SAMPLERS:
            with pytest.raises(ValueError):
                sample(pmf, 0, 1)

    def test_cross_sampler_pooled_chisquare(self):
        # small-scale version of the full cross-validation gate
        pmf = build_family(FamilySpec(HARMONIC, 20))
        n, reps = 200, 2000
        pools = []
        for offset, sample in ((0, sample_counts_categorical), (1 << 40, sample_counts_multinomial)):
            total = np.zeros(20, dtype=np.int64)
            for j in range(reps):
                total += sample(pmf, n, derive_stream_seed(SeedSpec(4242, offset + j))).counts
            pools.append(total.astype(np.float64))
        a, b = pools
        col = a + b
        ea = col * a.sum() / col.sum()
        eb = col * b.sum() / col.sum()
        stat = float(np.sum((a - ea) ** 2 / ea) + np.sum((b - eb) ** 2 / eb))
        assert stat < chi2.ppf(0.999, 19)


class TestBinomialSampler:
    def test_degenerate_probabilities(self):
        rng = CounterRng(5)
        assert _binomial(10, 0.0, rng) == 0
        assert _binomial(10, 1.0, rng) == 10

    def test_inversion_matches_exact_distribution(self):
        # n p = 10 <= 30: inversion path against the exact pmf
        n, p, draws = 50, 0.2, 20_000
        rng = CounterRng(97)
        samples = np.array([_binomial_inversion(n, p, rng.uniform()) for _ in range(draws)])
        edges = [-0.5, 4.5, 6.5, 8.5, 10.5, 12.5, 14.5, n + 0.5]
        observed = np.histogram(samples, bins=edges)[0]
        probs = np.diff([binom.cdf(e, n, p) for e in edges])
        stat = float(np.sum((observed - draws * probs) ** 2 / (draws * probs)))
        assert stat < chi2.ppf(0.999, len(observed) - 1)

    def test_btrs_matches_exact_distribution(self):
        # n p = 60 > 30: rejection path against the exact pmf
        n, p, draws = 200, 0.3, 20_000
        rng = CounterRng(131)
        samples = np.array([_binomial_btrs(n, p, rng) for _ in range(draws)])
        assert np.all(samples >= 0) and np.all(samples <= n)
        qs = [binom.ppf(q, n, p) for q in (0.05, 0.2, 0.4, 0.6, 0.8, 0.95)]
        edges = [-0.5] + [q + 0.5 for q in qs] + [n + 0.5]
        observed = np.histogram(samples, bins=edges)[0]
        probs = np.diff([binom.cdf(e, n, p) for e in edges])
        stat = float(np.sum((observed - draws * probs) ** 2 / (draws * probs)))
        assert stat < chi2.ppf(0.999, len(observed) - 1)

    def test_flip_path_mean(self):
        # p > 1/2 goes through the complement; check the mean survives it
        rng = CounterRng(17)
        draws = np.array([_binomial(400, 0.9, rng) for _ in range(5000)])
        se = math.sqrt(400 * 0.9 * 0.1 / 5000)
        assert abs(draws.mean() - 360.0) <= 5.0 * se


class TestAliasTable:
    def test_single_symbol(self):
        table = AliasTable(np.array([1.0]))
        idx = table.draw(CounterRng(3), 100)
        assert np.all(idx == 0)

    def test_draw_frequencies(self):
        probs = np.array([0.5, 0.3, 0.15, 0.05])
        table = AliasTable(probs)
        idx = table.draw(CounterRng(11), 200_000)
        freq = np.bincount(idx, minlength=4) / 200_000
        assert np.max(np.abs(freq - probs)) < 0.005

    def test_build_and_draw_timing_smoke(self):
        # generous bounds; guards against accidentally quadratic construction
        probs = build_family(FamilySpec(HARMONIC, 10**5)).probs
        t0 = time.perf_counter()
        table = AliasTable(probs)
        build_time = time.perf_counter() - t0
        t0 = time.perf_counter()
        table.draw(CounterRng(1), 10**5)
        draw_time = time.perf_counter() - t0
        assert build_time < 5.0
        assert draw_time < 2.0
