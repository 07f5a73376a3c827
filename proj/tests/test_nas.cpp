#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "helpers.hpp"
#include "tsnas/nas.hpp"

using namespace tsnas;

namespace {
using Point = std::vector<double>;

// O(N^2) reference: fronts by repeated extraction of the non-dominated set.
std::vector<std::vector<std::size_t>> brute_force_fronts(const std::vector<Point>& pts,
                                                         const std::vector<Direction>& dirs) {
    auto dom = [&](std::size_t a, std::size_t b) { return dominates(pts[a], pts[b], dirs); };
    std::vector<std::size_t> remaining(pts.size());
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<std::vector<std::size_t>> fronts;
    while (!remaining.empty()) {
        std::vector<std::size_t> front, rest;
        for (std::size_t a : remaining) {
            bool dominated = false;
            for (std::size_t b : remaining) dominated |= b != a && dom(b, a);
            (dominated ? rest : front).push_back(a);
        }
        fronts.push_back(front);
        remaining = rest;
    }
    return fronts;
}

// Direct sort-and-gap recomputation of normalized crowding distances.
std::vector<double> brute_force_crowding(const std::vector<Point>& front) {
    const std::size_t n = front.size();
    std::vector<double> d(n, 0.0);
    if (n <= 2) return std::vector<double>(n, std::numeric_limits<double>::infinity());
    for (std::size_t obj = 0; obj < front[0].size(); ++obj) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return front[a][obj] < front[b][obj]; });
        const double range = front[idx.back()][obj] - front[idx.front()][obj];
        d[idx.front()] = d[idx.back()] = std::numeric_limits<double>::infinity();
        if (range == 0.0) continue;
        for (std::size_t i = 1; i + 1 < n; ++i)
            d[idx[i]] += (front[idx[i + 1]][obj] - front[idx[i - 1]][obj]) / range;
    }
    return d;
}
} // namespace

TEST_CASE("sample_genome respects every range over bulk sampling") {
    Rng rng(1);
    int lr_below_mid = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        Genome g = sample_genome(rng);
        CHECK(g.validation_errors().empty());
        CHECK(g.learning_rate >= 1e-5);
        CHECK(g.learning_rate <= 1e-1);
        CHECK(g.batch_size % 16 == 0);
        lr_below_mid += g.learning_rate < 1e-3;
    }
    // Log-uniform: 1e-3 is the midpoint of [1e-5, 1e-1] in log space.
    const double frac = static_cast<double>(lr_below_mid) / n;
    CHECK(frac > 0.45);
    CHECK(frac < 0.55);

    Rng a(7), b(7);
    CHECK(sample_genome(a) == sample_genome(b));
}

TEST_CASE("dominance is antisymmetric and reflexive-free") {
    const std::vector<Direction> dirs{Direction::Minimize, Direction::Minimize};
    Rng rng(2);
    for (int i = 0; i < 500; ++i) {
        Point x{rng.uniform(), rng.uniform()}, y{rng.uniform(), rng.uniform()};
        CHECK_FALSE(dominates(x, x, dirs));
        CHECK_FALSE((dominates(x, y, dirs) && dominates(y, x, dirs)));
    }
}

TEST_CASE("non_dominated_sort: worked minimize-both example") {
    const std::vector<Point> pts{{1, 1}, {2, 2}, {1, 3}};
    const std::vector<Direction> dirs{Direction::Minimize, Direction::Minimize};
    auto fronts = non_dominated_sort(pts, dirs);
    REQUIRE(fronts.size() == 2);
    CHECK(fronts[0] == std::vector<std::size_t>{0});
    std::set<std::size_t> second(fronts[1].begin(), fronts[1].end());
    CHECK(second == std::set<std::size_t>{1, 2});

    auto single = non_dominated_sort({{3.0, 4.0}}, dirs);
    REQUIRE(single.size() == 1);
    CHECK(single[0] == std::vector<std::size_t>{0});

    auto dup = non_dominated_sort({{1, 1}, {1, 1}}, dirs);
    CHECK(dup.size() == 1);
    CHECK(dup[0].size() == 2);
}

TEST_CASE("non_dominated_sort matches brute force on random instances") {
    Rng rng(3);
    for (int inst = 0; inst < 40; ++inst) {
        const std::size_t n = 1 + rng.uniform_int(0, 199);
        std::vector<Point> pts(n);
        for (auto& p : pts)
            p = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
        const std::vector<Direction> dirs{
            rng.bernoulli(0.5) ? Direction::Maximize : Direction::Minimize,
            rng.bernoulli(0.5) ? Direction::Maximize : Direction::Minimize};
        auto fast = non_dominated_sort(pts, dirs);
        auto slow = brute_force_fronts(pts, dirs);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t k = 0; k < fast.size(); ++k) {
            std::set<std::size_t> a(fast[k].begin(), fast[k].end());
            std::set<std::size_t> b(slow[k].begin(), slow[k].end());
            CHECK(a == b);
        }
    }
}

TEST_CASE("crowding_distance: boundary infinities and the worked middle point") {
    auto two = crowding_distance({{1, 2}, {2, 1}});
    for (double v : two) CHECK(std::isinf(v));

    auto three = crowding_distance({{1, 3}, {2, 2}, {3, 1}});
    CHECK(std::isinf(three[0]));
    CHECK(std::isinf(three[2]));
    CHECK(three[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("crowding_distance matches direct recomputation and permutes with the front") {
    Rng rng(4);
    for (int inst = 0; inst < 50; ++inst) {
        const std::size_t n = 1 + rng.uniform_int(0, 30);
        std::vector<Point> front(n);
        for (auto& p : front) p = {rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0)};
        auto fast = crowding_distance(front);
        auto slow = brute_force_crowding(front);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (std::isinf(slow[i]))
                CHECK(std::isinf(fast[i]));
            else
                CHECK(std::abs(fast[i] - slow[i]) < 1e-12);
        }
    }
}

namespace {
std::vector<TrialRecord> fake_population(Rng& rng, std::size_t n) {
    std::vector<TrialRecord> pop;
    for (std::size_t i = 0; i < n; ++i) {
        TrialRecord r;
        r.trial_id = i;
        r.genome = sample_genome(rng);
        r.f1 = rng.uniform(0.0, 1.0);
        r.parameter_count = 100 + rng.uniform_int(0, 5000);
        r.status = TrialStatus::Completed;
        pop.push_back(r);
    }
    return pop;
}
} // namespace

TEST_CASE("evolve: disabled operators copy tournament winners") {
    Rng rng(5);
    auto pop = fake_population(rng, 8);
    auto offspring = evolve(pop, rng, 0.0, 0.0, 16);
    REQUIRE(offspring.size() == 16);
    for (const auto& child : offspring) {
        const bool is_copy = std::any_of(pop.begin(), pop.end(),
                                         [&](const TrialRecord& p) { return p.genome == child; });
        CHECK(is_copy);
    }
}

TEST_CASE("evolve: full mutation still yields valid genomes") {
    Rng rng(6);
    auto pop = fake_population(rng, 6);
    for (int round = 0; round < 50; ++round)
        for (const auto& child : evolve(pop, rng, 0.9, 1.0, 20))
            CHECK(child.validation_errors().empty());
}

TEST_CASE("evolve requires two completed trials") {
    Rng rng(7);
    auto pop = fake_population(rng, 1);
    CHECK_THROWS_AS(evolve(pop, rng, 0.9, 0.1, 4), ContractError);
}

TEST_CASE("elitism: merged re-sort keeps undominated parents in rank 1") {
    Rng rng(8);
    auto parents = fake_population(rng, 10);
    auto children = fake_population(rng, 10);
    std::vector<Point> merged;
    const std::vector<Direction> dirs{Direction::Maximize, Direction::Minimize};
    for (const auto& r : parents)
        merged.push_back({r.f1, static_cast<double>(r.parameter_count)});
    for (const auto& r : children)
        merged.push_back({r.f1, static_cast<double>(r.parameter_count)});
    auto fronts = non_dominated_sort(merged, dirs);
    std::set<std::size_t> rank1(fronts[0].begin(), fronts[0].end());
    for (std::size_t i = 0; i < parents.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < merged.size(); ++j)
            dominated |= j != i && dominates(merged[j], merged[i], dirs);
        if (!dominated) CHECK(rank1.count(i) == 1);
    }
}

TEST_CASE("select_from_front policies") {
    auto rec = [](double f1, std::uint64_t params) {
        TrialRecord r;
        r.f1 = f1;
        r.parameter_count = params;
        r.status = TrialStatus::Completed;
        return r;
    };
    std::vector<TrialRecord> front{rec(0.9, 100), rec(0.8, 10)};
    CHECK(select_from_front(front, SelectionPolicy::BestF1).parameter_count == 100);
    CHECK(select_from_front(front, SelectionPolicy::MinParams).parameter_count == 10);

    std::vector<TrialRecord> solo{rec(0.5, 50)};
    for (auto pol : {SelectionPolicy::BestF1, SelectionPolicy::MinParams, SelectionPolicy::Knee})
        CHECK(select_from_front(solo, pol).parameter_count == 50);

    // Convex 5-point front: knee = farthest from the endpoint chord after
    // normalizing both objectives to [0,1].
    std::vector<TrialRecord> convex{rec(1.0, 1000), rec(0.97, 500), rec(0.9, 200),
                                    rec(0.7, 120), rec(0.4, 100)};
    double best = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < convex.size(); ++i) {
        const double x = (convex[i].f1 - 0.4) / 0.6;
        const double y = (static_cast<double>(convex[i].parameter_count) - 100.0) / 900.0;
        // Chord from (0,0) to (1,1): distance ~ |x - y|.
        const double dist = std::abs(x - y) / std::sqrt(2.0);
        if (dist > best) {
            best = dist;
            best_idx = i;
        }
    }
    CHECK(select_from_front(convex, SelectionPolicy::Knee).parameter_count ==
          convex[best_idx].parameter_count);
    CHECK_THROWS_AS(select_from_front({}, SelectionPolicy::BestF1), ContractError);
}

TEST_CASE("ledger round-trips through JSONL") {
    namespace fs = std::filesystem;
    Rng rng(9);
    auto records = fake_population(rng, 5);
    records[2].status = TrialStatus::Failed;
    records[2].reason = "window too large";
    const auto path = (fs::temp_directory_path() / "tsnas_ledger_test.jsonl").string();
    save_ledger(path, records);
    auto back = load_ledger(path);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(back[i].genome == records[i].genome);
        CHECK(back[i].f1 == records[i].f1);
        CHECK(back[i].parameter_count == records[i].parameter_count);
        CHECK(back[i].status == records[i].status);
        CHECK(back[i].reason == records[i].reason);
    }
    fs::remove(path);
}

TEST_CASE("run_search smoke: small budget, non-dominated front, deterministic rerun") {
    SynthSpec spec;
    spec.train_length = 100;
    spec.test_length = 100;
    spec.features = 2;
    spec.anomaly_types = {AnomalyType::Spike};
    spec.anomaly_rate = 0.08;
    spec.seed = 33;
    auto ds = normalize(synth_generate(spec), 1e-8);

    SearchBudget budget;
    budget.population = 4;
    budget.generations = 1;
    budget.per_trial_epochs = 1;
    budget.per_trial_seconds = 30.0;
    SearchOptions opt;
    opt.jobs = 2;
    opt.record_wall_clock = false;

    auto r1 = run_search(ds, budget, 99, opt);
    CHECK(r1.records.size() == 4);
    REQUIRE(!r1.front.empty());
    const std::vector<Direction> dirs{Direction::Maximize, Direction::Minimize};
    for (std::size_t a : r1.front)
        for (std::size_t b : r1.front) {
            if (a == b) continue;
            const Point pa{r1.records[a].f1, double(r1.records[a].parameter_count)};
            const Point pb{r1.records[b].f1, double(r1.records[b].parameter_count)};
            CHECK_FALSE(dominates(pa, pb, dirs));
        }

    auto r2 = run_search(ds, budget, 99, opt);
    REQUIRE(r2.records.size() == r1.records.size());
    for (std::size_t i = 0; i < r1.records.size(); ++i) {
        CHECK(r1.records[i].genome == r2.records[i].genome);
        CHECK(r1.records[i].f1 == r2.records[i].f1);
        CHECK(r1.records[i].training_time_seconds == r2.records[i].training_time_seconds);
    }
}
