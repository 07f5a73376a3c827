#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "tsnas/scoring.hpp"

using namespace tsnas;

namespace {
Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (auto& v : m.data) v = rng.uniform(lo, hi);
    return m;
}
} // namespace

TEST_CASE("anomaly_score: perfect reconstruction and analytic case") {
    Matrix w(1, 2), r1(1, 2), r2(1, 2);
    CHECK(anomaly_score(w, w, w) == 0.0);
    r1.at(0, 0) = 1.0;
    r1.at(0, 1) = 1.0;
    CHECK(anomaly_score(r1, w, w) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("anomaly_score brute-force oracle on random triples") {
    Rng rng(1);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t K = 1 + rng.uniform_int(1, 6), m = rng.uniform_int(1, 4);
        Matrix w = random_matrix(K, m, rng), r1 = random_matrix(K, m, rng),
               r2 = random_matrix(K, m, rng);
        double expect = 0.0;
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            expect += 0.5 * (r1.data[i] - w.data[i]) * (r1.data[i] - w.data[i]);
            expect += 0.5 * (r2.data[i] - w.data[i]) * (r2.data[i] - w.data[i]);
        }
        CHECK(std::abs(anomaly_score(r1, r2, w) - expect) < 1e-12);
    }
    Matrix bad(2, 2);
    CHECK_THROWS_AS(anomaly_score(bad, bad, Matrix(2, 3)), DimensionError);
}

TEST_CASE("pot_threshold: degenerate fallback and anchor bound") {
    std::vector<double> flat(100, 3.5);
    auto res = pot_threshold(flat, 0.98, 1e-4);
    CHECK(res.fallback);
    CHECK(res.threshold == doctest::Approx(3.5));

    Rng rng(2);
    std::vector<double> scores(5000);
    for (auto& s : scores) s = -std::log(1.0 - rng.uniform());
    auto fit = pot_threshold(scores, 0.98, 1e-4);
    CHECK_FALSE(fit.fallback);
    CHECK(fit.threshold >= fit.anchor);
}

TEST_CASE("pot_threshold: exponential tail analytic check") {
    Rng rng(3);
    std::vector<double> scores(100000);
    for (auto& s : scores) s = -std::log(1.0 - rng.uniform());
    auto res = pot_threshold(scores, 0.98, 1e-4);
    const double expect = std::log(1e4);
    CHECK(res.threshold > 0.9 * expect);
    CHECK(res.threshold < 1.1 * expect);
}

TEST_CASE("pot_threshold anchor is monotone in q") {
    Rng rng(4);
    std::vector<double> scores(2000);
    for (auto& s : scores) s = rng.uniform(0.0, 10.0);
    double prev = -1.0;
    for (double q : {0.8, 0.9, 0.95, 0.99}) {
        auto res = pot_threshold(scores, q, 1e-4);
        CHECK(res.anchor >= prev);
        prev = res.anchor;
    }
    CHECK_THROWS_AS(pot_threshold({}, 0.98, 1e-4), ContractError);
}

TEST_CASE("mpot: disabled alpha, zero MAD, and the hand-computed MAD case") {
    CHECK(mpot_threshold(5.0, {1.0, 2.0, 9.0}, 0.0) == 5.0);
    CHECK(mpot_threshold(5.0, {4.0, 4.0, 4.0}, 2.0) == 5.0);
    // recent [1,2,3,4,100]: median 3, deviations [2,1,0,1,97], MAD 1.
    CHECK(mpot_threshold(5.0, {1.0, 2.0, 3.0, 4.0, 100.0}, 1.0) == doctest::Approx(6.0));
}

TEST_CASE("recent_deviation matches a brute-force MAD on random windows") {
    Rng rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.uniform_int(1, 40);
        std::vector<double> xs(n);
        for (auto& x : xs) x = rng.uniform(-5.0, 5.0);
        auto med = [](std::vector<double> v) {
            std::sort(v.begin(), v.end());
            const std::size_t n2 = v.size() / 2;
            return v.size() % 2 ? v[n2] : 0.5 * (v[n2 - 1] + v[n2]);
        };
        const double m = med(xs);
        std::vector<double> dev(n);
        for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(xs[i] - m);
        CHECK(std::abs(recent_deviation(xs) - med(dev)) < 1e-12);
    }
}

TEST_CASE("mat_threshold: constants, hand case, brute force") {
    std::vector<double> c(20, 2.5);
    for (double v : mat_threshold(c, 4)) CHECK(v == doctest::Approx(2.5));

    auto t = mat_threshold({1.0, 2.0, 3.0, 4.0}, 3);
    REQUIRE(t.size() == 4);
    CHECK(t[0] == doctest::Approx(1.0));
    CHECK(t[1] == doctest::Approx(1.5));
    CHECK(t[2] == doctest::Approx(2.0));
    CHECK(t[3] == doctest::Approx(3.0));

    Rng rng(6);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.uniform_int(1, 50);
        const std::size_t N = 1 + rng.uniform_int(0, 9);
        std::vector<double> xs(n);
        for (auto& x : xs) x = rng.uniform(0.0, 3.0);
        auto out = mat_threshold(xs, N);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = i + 1 >= N ? i + 1 - N : 0;
            double s = 0.0;
            for (std::size_t j = lo; j <= i; ++j) s += xs[j];
            CHECK(std::abs(out[i] - s / static_cast<double>(i - lo + 1)) < 1e-12);
        }
    }
}

TEST_CASE("rolling_stats: constants, analytic pair, brute force") {
    auto [mu_c, sig_c] = rolling_stats(std::vector<double>(10, 7.0), 3);
    for (double v : sig_c) CHECK(v == doctest::Approx(0.0));
    for (double v : mu_c) CHECK(v == doctest::Approx(7.0));

    auto [mu, sig] = rolling_stats({0.0, 2.0}, 2);
    CHECK(mu[1] == doctest::Approx(1.0));
    CHECK(sig[1] == doctest::Approx(1.0));

    Rng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.uniform_int(1, 40);
        const std::size_t W = 1 + rng.uniform_int(0, 7);
        std::vector<double> xs(n);
        for (auto& x : xs) x = rng.uniform(-2.0, 2.0);
        auto [m, s] = rolling_stats(xs, W);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = i + 1 >= W ? i + 1 - W : 0;
            const auto len = static_cast<double>(i - lo + 1);
            double mean = 0.0;
            for (std::size_t j = lo; j <= i; ++j) mean += xs[j];
            mean /= len;
            double var = 0.0;
            for (std::size_t j = lo; j <= i; ++j) var += (xs[j] - mean) * (xs[j] - mean);
            var /= len;
            CHECK(std::abs(m[i] - mean) < 1e-12);
            CHECK(std::abs(s[i] - std::sqrt(var)) < 1e-12);
        }
    }
}

TEST_CASE("append_rolling_stats widens the matrix to 3m columns") {
    Rng rng(8);
    Matrix m = random_matrix(30, 2, rng);
    Matrix out = append_rolling_stats(m, 5);
    CHECK(out.rows == 30);
    CHECK(out.cols == 6);
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(out.at(i, j) == m.at(i, j));
}

TEST_CASE("evaluate: perfect, empty-detection, and hand-counted point adjustment") {
    std::vector<int> labels{0, 1, 1, 0};
    auto perfect = evaluate(labels, labels, false);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);

    auto empty = evaluate({0, 0, 0, 0}, labels, false);
    CHECK(empty.recall == 0.0);
    CHECK(empty.f1 == 0.0);

    std::vector<int> partial{0, 0, 1, 0};
    auto plain = evaluate(partial, labels, false);
    CHECK(plain.precision == doctest::Approx(1.0));
    CHECK(plain.recall == doctest::Approx(0.5));
    CHECK(plain.f1 == doctest::Approx(2.0 / 3.0));
    auto adjusted = evaluate(partial, labels, true);
    CHECK(adjusted.recall == doctest::Approx(1.0));
    CHECK(adjusted.f1 == doctest::Approx(1.0));

    CHECK_THROWS_AS(evaluate({0, 1}, {0, 1, 1}, false), ContractError);
}

TEST_CASE("evaluate counts always sum to the series length") {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.uniform_int(1, 60);
        std::vector<int> d(n), l(n);
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = rng.bernoulli(0.3);
            l[i] = rng.bernoulli(0.2);
        }
        auto rep = evaluate(d, l, rng.bernoulli(0.5));
        CHECK(rep.tp + rep.fp + rep.tn + rep.fn == n);
        if (rep.precision + rep.recall > 0.0)
            CHECK(rep.f1 == doctest::Approx(2.0 * rep.precision * rep.recall /
                                            (rep.precision + rep.recall)));
    }
}

TEST_CASE("F1 is invariant under joint permutation") {
    Rng rng(10);
    std::vector<int> d(50), l(50);
    for (std::size_t i = 0; i < 50; ++i) {
        d[i] = rng.bernoulli(0.4);
        l[i] = rng.bernoulli(0.3);
    }
    auto base = evaluate(d, l, false);
    std::vector<std::size_t> perm(50);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 49; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
    std::vector<int> dp(50), lp(50);
    for (std::size_t i = 0; i < 50; ++i) {
        dp[i] = d[perm[i]];
        lp[i] = l[perm[i]];
    }
    auto permuted = evaluate(dp, lp, false);
    CHECK(permuted.f1 == base.f1);
    CHECK(permuted.precision == base.precision);
    CHECK(permuted.recall == base.recall);
}

TEST_CASE("eacs: worked cohort, boundary, and monotonicity") {
    EacsInput a;
    a.f1 = 0.9;
    a.training_time_seconds = 10.0;
    a.parameter_count = 100.0;
    a.max_f1 = 0.9;
    a.max_training_time = 100.0;
    a.max_parameter_count = 1000.0;
    CHECK(eacs(a) == doctest::Approx(0.94).epsilon(1e-12));
    EacsInput b = a;
    b.f1 = 0.8;
    b.training_time_seconds = 100.0;
    b.parameter_count = 1000.0;
    CHECK(eacs(b) == doctest::Approx(0.4 * 8.0 / 9.0).epsilon(1e-12));

    // Single-row cohort: own values are the maxima.
    EacsInput solo;
    solo.f1 = solo.max_f1 = 0.7;
    solo.training_time_seconds = solo.max_training_time = 42.0;
    solo.parameter_count = solo.max_parameter_count = 999.0;
    CHECK(eacs(solo) == doctest::Approx(0.4).epsilon(1e-12));

    EacsInput zero;
    zero.max_f1 = zero.max_training_time = zero.max_parameter_count = 0.0;
    CHECK_THROWS_AS(eacs(zero), ContractError);

    Rng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        EacsInput x;
        x.max_f1 = rng.uniform(0.5, 1.0);
        x.max_training_time = rng.uniform(10.0, 100.0);
        x.max_parameter_count = rng.uniform(100.0, 10000.0);
        x.f1 = rng.uniform(0.0, x.max_f1);
        x.training_time_seconds = rng.uniform(0.0, x.max_training_time);
        x.parameter_count = rng.uniform(0.0, x.max_parameter_count);
        const double base = eacs(x);
        EacsInput up = x;
        up.f1 = std::min(x.max_f1, x.f1 + 0.01);
        if (up.f1 > x.f1) CHECK(eacs(up) > base);
        EacsInput slower = x;
        slower.training_time_seconds = std::min(x.max_training_time,
                                                x.training_time_seconds + 1.0);
        if (slower.training_time_seconds > x.training_time_seconds) CHECK(eacs(slower) < base);
        EacsInput bigger = x;
        bigger.parameter_count = std::min(x.max_parameter_count, x.parameter_count + 10.0);
        if (bigger.parameter_count > x.parameter_count) CHECK(eacs(bigger) < base);
    }
}

TEST_CASE("ScoreSeries decisions are threshold-consistent") {
    Rng rng(12);
    std::vector<double> scores(100);
    for (auto& s : scores) s = rng.uniform(0.0, 1.0);
    auto series = ScoreSeries::from_threshold(scores, 0.5);
    for (std::size_t t = 0; t < 100; ++t)
        CHECK(series.decisions[t] == (scores[t] > 0.5 ? 1 : 0));
    // Flipping one score across the threshold flips exactly that decision.
    auto flipped = series;
    flipped.scores[7] = flipped.scores[7] > 0.5 ? 0.0 : 1.0;
    flipped.refresh_decisions();
    for (std::size_t t = 0; t < 100; ++t)
        CHECK((flipped.decisions[t] != series.decisions[t]) == (t == 7));
}

TEST_CASE("compute_scores matches per-window reconstruction scoring end to end") {
    Genome g;
    g.dim_feedforward = 8;
    auto model = AnomalyModel::build(g, 2, 77);
    Matrix series = random_matrix(40, 2, *[] { static Rng r(13); return &r; }(), 0.0, 1.0);
    WindowSet ws = make_windows_of(series, 10);
    Matrix per_dim;
    auto scores = compute_scores(model, ws, &per_dim, {});
    REQUIRE(scores.size() == 40);
    REQUIRE(per_dim.rows == 40);
    REQUIRE(per_dim.cols == 2);
    for (std::size_t t = 0; t < 40; ++t) {
        CHECK(scores[t] >= 0.0);
        CHECK(scores[t] == doctest::Approx(per_dim.at(t, 0) + per_dim.at(t, 1)).epsilon(1e-9));
    }
}
