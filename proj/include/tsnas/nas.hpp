#ifndef TSNAS_NAS_HPP
#define TSNAS_NAS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tsnas/dataset.hpp"
#include "tsnas/genome.hpp"
#include "tsnas/scoring.hpp"
#include "tsnas/training.hpp"

namespace tsnas {

// ---- genome sampling and variation ----

inline Genome sample_genome(Rng& rng) {
    Genome g;
    g.learning_rate = rng.log_uniform(1e-5, 1e-1);
    g.dropout = rng.uniform(0.1, 0.5);
    g.batch_size = 16 * static_cast<int>(rng.uniform_int(1, 8));
    g.gaussian_noise = rng.log_uniform(1e-4, 1e-1);
    g.time_warping = rng.bernoulli(0.5);
    g.time_masking = rng.bernoulli(0.5);
    g.window_size = static_cast<int>(rng.uniform_int(10, 30));
    g.pos_encoding = rng.bernoulli(0.5) ? PosEncoding::Sinusoidal : PosEncoding::Fourier;
    g.dim_feedforward = std::clamp(
        static_cast<int>(std::lround(rng.log_uniform(8.0, 128.0))), 8, 128);
    g.encoder_layers = static_cast<int>(rng.uniform_int(1, 3));
    g.decoder_layers = static_cast<int>(rng.uniform_int(1, 3));
    switch (rng.uniform_int(0, 3)) {
    case 0: g.activation = Activation::Relu; break;
    case 1: g.activation = Activation::LeakyRelu; break;
    case 2: g.activation = Activation::Sigmoid; break;
    default: g.activation = Activation::Tanh; break;
    }
    g.use_linear_embedding = rng.bernoulli(0.5);
    switch (rng.uniform_int(0, 2)) {
    case 0: g.norm_type = NormType::Layer; break;
    case 1: g.norm_type = NormType::Batch; break;
    default: g.norm_type = NormType::Instance; break;
    }
    g.self_conditioning = rng.bernoulli(0.5);
    g.ffn_layers = static_cast<int>(rng.uniform_int(1, 3));
    switch (rng.uniform_int(0, 2)) {
    case 0: g.phase_type = PhaseType::OnePhase; break;
    case 1: g.phase_type = PhaseType::TwoPhase; break;
    default: g.phase_type = PhaseType::Iterative; break;
    }
    return g;
}

namespace detail {

constexpr std::size_t kGeneCount = 17;

// Resamples one gene from its search-space distribution.
inline void mutate_gene(Genome& g, std::size_t gene, Rng& rng) {
    switch (gene) {
    case 0: g.learning_rate = rng.log_uniform(1e-5, 1e-1); break;
    case 1: g.dropout = rng.uniform(0.1, 0.5); break;
    case 2: g.batch_size = 16 * static_cast<int>(rng.uniform_int(1, 8)); break;
    case 3: g.gaussian_noise = rng.log_uniform(1e-4, 1e-1); break;
    case 4: g.time_warping = rng.bernoulli(0.5); break;
    case 5: g.time_masking = rng.bernoulli(0.5); break;
    case 6: g.window_size = static_cast<int>(rng.uniform_int(10, 30)); break;
    case 7:
        g.pos_encoding = rng.bernoulli(0.5) ? PosEncoding::Sinusoidal : PosEncoding::Fourier;
        break;
    case 8:
        g.dim_feedforward =
            std::clamp(static_cast<int>(std::lround(rng.log_uniform(8.0, 128.0))), 8, 128);
        break;
    case 9: g.encoder_layers = static_cast<int>(rng.uniform_int(1, 3)); break;
    case 10: g.decoder_layers = static_cast<int>(rng.uniform_int(1, 3)); break;
    case 11:
        switch (rng.uniform_int(0, 3)) {
        case 0: g.activation = Activation::Relu; break;
        case 1: g.activation = Activation::LeakyRelu; break;
        case 2: g.activation = Activation::Sigmoid; break;
        default: g.activation = Activation::Tanh; break;
        }
        break;
    case 12: g.use_linear_embedding = rng.bernoulli(0.5); break;
    case 13:
        switch (rng.uniform_int(0, 2)) {
        case 0: g.norm_type = NormType::Layer; break;
        case 1: g.norm_type = NormType::Batch; break;
        default: g.norm_type = NormType::Instance; break;
        }
        break;
    case 14: g.self_conditioning = rng.bernoulli(0.5); break;
    case 15: g.ffn_layers = static_cast<int>(rng.uniform_int(1, 3)); break;
    default:
        switch (rng.uniform_int(0, 2)) {
        case 0: g.phase_type = PhaseType::OnePhase; break;
        case 1: g.phase_type = PhaseType::TwoPhase; break;
        default: g.phase_type = PhaseType::Iterative; break;
        }
        break;
    }
}

// Copies gene `gene` of `src` into `dst`.
inline void copy_gene(Genome& dst, const Genome& src, std::size_t gene) {
    switch (gene) {
    case 0: dst.learning_rate = src.learning_rate; break;
    case 1: dst.dropout = src.dropout; break;
    case 2: dst.batch_size = src.batch_size; break;
    case 3: dst.gaussian_noise = src.gaussian_noise; break;
    case 4: dst.time_warping = src.time_warping; break;
    case 5: dst.time_masking = src.time_masking; break;
    case 6: dst.window_size = src.window_size; break;
    case 7: dst.pos_encoding = src.pos_encoding; break;
    case 8: dst.dim_feedforward = src.dim_feedforward; break;
    case 9: dst.encoder_layers = src.encoder_layers; break;
    case 10: dst.decoder_layers = src.decoder_layers; break;
    case 11: dst.activation = src.activation; break;
    case 12: dst.use_linear_embedding = src.use_linear_embedding; break;
    case 13: dst.norm_type = src.norm_type; break;
    case 14: dst.self_conditioning = src.self_conditioning; break;
    case 15: dst.ffn_layers = src.ffn_layers; break;
    default: dst.phase_type = src.phase_type; break;
    }
}

} // namespace detail

// ---- non-dominated sorting and crowding ----

enum class Direction { Maximize, Minimize };

// True when a dominates b: no worse in every objective, strictly better in
// at least one.
inline bool dominates(const std::vector<double>& a, const std::vector<double>& b,
                      const std::vector<Direction>& dirs) {
    bool strictly_better = false;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        const double da = dirs[i] == Direction::Maximize ? a[i] : -a[i];
        const double db = dirs[i] == Direction::Maximize ? b[i] : -b[i];
        if (da < db) return false;
        if (da > db) strictly_better = true;
    }
    return strictly_better;
}

// Deb's fast non-dominated sort; returns fronts of indices.
inline std::vector<std::vector<std::size_t>> non_dominated_sort(
    const std::vector<std::vector<double>>& points, const std::vector<Direction>& dirs) {
    const std::size_t n = points.size();
    for (const auto& p : points)
        if (p.size() != dirs.size())
            throw ContractError("non_dominated_sort: objective arity mismatch");
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> dom_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (dominates(points[i], points[j], dirs)) dominated[i].push_back(j);
            else if (dominates(points[j], points[i], dirs)) ++dom_count[i];
        }
    for (std::size_t i = 0; i < n; ++i)
        if (dom_count[i] == 0) current.push_back(i);
    while (!current.empty()) {
        fronts.push_back(current);
        std::vector<std::size_t> next;
        for (std::size_t i : current)
            for (std::size_t j : dominated[i])
                if (--dom_count[j] == 0) next.push_back(j);
        std::sort(next.begin(), next.end());
        current = std::move(next);
    }
    return fronts;
}

// Normalized crowding distance within one front. Boundary points per
// objective get +inf; interior points accumulate neighbor gaps divided by the
// objective range; zero-range objectives contribute nothing.
inline std::vector<double> crowding_distance(const std::vector<std::vector<double>>& front) {
    if (front.empty()) throw ContractError("crowding_distance: empty front");
    const std::size_t n = front.size();
    const std::size_t k = front[0].size();
    std::vector<double> dist(n, 0.0);
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t obj = 0; obj < k; ++obj) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return front[a][obj] < front[b][obj];
        });
        dist[idx.front()] = inf;
        dist[idx.back()] = inf;
        const double range = front[idx.back()][obj] - front[idx.front()][obj];
        if (range <= 0.0) continue;
        for (std::size_t i = 1; i + 1 < n; ++i)
            if (dist[idx[i]] != inf)
                dist[idx[i]] += (front[idx[i + 1]][obj] - front[idx[i - 1]][obj]) / range;
    }
    return dist;
}

// ---- trial bookkeeping ----

enum class TrialStatus { Completed, Pruned, Failed };

inline std::string to_string(TrialStatus s) {
    switch (s) {
    case TrialStatus::Completed: return "completed";
    case TrialStatus::Pruned: return "pruned";
    default: return "failed";
    }
}

struct TrialRecord {
    std::size_t trial_id = 0;
    std::size_t generation = 0;
    std::size_t slot = 0;
    Genome genome;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    std::size_t parameter_count = 0;
    double training_time_seconds = 0.0;
    TrialStatus status = TrialStatus::Completed;
    std::string reason;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        return nlohmann::json{{"schema_version", 1},
                              {"trial_id", trial_id},
                              {"generation", generation},
                              {"slot", slot},
                              {"genome", genome_to_json(genome)},
                              {"f1", f1},
                              {"precision", precision},
                              {"recall", recall},
                              {"parameter_count", parameter_count},
                              {"training_time_seconds", training_time_seconds},
                              {"status", to_string(status)},
                              {"reason", reason},
                              {"seed", seed}};
    }

    static TrialRecord from_json(const nlohmann::json& j) {
        TrialRecord r;
        r.trial_id = j.at("trial_id").get<std::size_t>();
        r.generation = j.at("generation").get<std::size_t>();
        r.slot = j.at("slot").get<std::size_t>();
        r.genome = genome_from_json(j.at("genome"));
        r.f1 = j.at("f1").get<double>();
        r.precision = j.at("precision").get<double>();
        r.recall = j.at("recall").get<double>();
        r.parameter_count = j.at("parameter_count").get<std::size_t>();
        r.training_time_seconds = j.at("training_time_seconds").get<double>();
        const auto s = j.at("status").get<std::string>();
        r.status = s == "completed" ? TrialStatus::Completed
                   : s == "pruned"  ? TrialStatus::Pruned
                                    : TrialStatus::Failed;
        r.reason = j.at("reason").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        return r;
    }
};

inline std::vector<std::vector<double>> objectives_of(const std::vector<TrialRecord>& recs) {
    std::vector<std::vector<double>> pts;
    pts.reserve(recs.size());
    for (const auto& r : recs)
        pts.push_back({r.f1, static_cast<double>(r.parameter_count)});
    return pts;
}

inline const std::vector<Direction>& nas_directions() {
    static const std::vector<Direction> dirs{Direction::Maximize, Direction::Minimize};
    return dirs;
}

// ---- evolution ----

// Binary tournament on (rank, crowding distance), uniform per-gene crossover,
// per-gene resampling mutation. Parents must be completed trials.
inline std::vector<Genome> evolve(const std::vector<TrialRecord>& completed, Rng& rng,
                                  double p_crossover, double p_mutation,
                                  std::size_t n_offspring) {
    if (completed.size() < 2) throw ContractError("evolve: need at least 2 completed trials");
    const auto pts = objectives_of(completed);
    const auto fronts = non_dominated_sort(pts, nas_directions());
    std::vector<std::size_t> rank(completed.size(), 0);
    std::vector<double> crowd(completed.size(), 0.0);
    for (std::size_t f = 0; f < fronts.size(); ++f) {
        std::vector<std::vector<double>> fp;
        for (std::size_t i : fronts[f]) {
            rank[i] = f;
            fp.push_back(pts[i]);
        }
        const auto cd = crowding_distance(fp);
        for (std::size_t i = 0; i < fronts[f].size(); ++i) crowd[fronts[f][i]] = cd[i];
    }
    auto tournament = [&]() -> const Genome& {
        const auto a = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(completed.size()) - 1));
        const auto b = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(completed.size()) - 1));
        const bool a_wins = rank[a] != rank[b] ? rank[a] < rank[b] : crowd[a] >= crowd[b];
        return completed[a_wins ? a : b].genome;
    };
    std::vector<Genome> offspring;
    offspring.reserve(n_offspring);
    for (std::size_t i = 0; i < n_offspring; ++i) {
        Genome child = tournament();
        if (rng.bernoulli(p_crossover)) {
            const Genome& other = tournament();
            for (std::size_t gene = 0; gene < detail::kGeneCount; ++gene)
                if (rng.bernoulli(0.5)) detail::copy_gene(child, other, gene);
        }
        for (std::size_t gene = 0; gene < detail::kGeneCount; ++gene)
            if (rng.bernoulli(p_mutation)) detail::mutate_gene(child, gene, rng);
        offspring.push_back(child);
    }
    return offspring;
}

// ---- search driver ----

struct SearchBudget {
    std::size_t population = 20;
    std::size_t generations = 5;
    int per_trial_epochs = 5;
    double per_trial_seconds = 120.0;
};

struct SearchOptions {
    double pot_q = 0.98;
    double pot_coeff = 1e-4;
    bool point_adjust = true;
    double p_crossover = 0.9;
    double p_mutation = 1.0 / static_cast<double>(detail::kGeneCount);
    std::size_t jobs = 1;
    // When false, training_time_seconds records optimizer steps instead of
    // wall clock so repeated runs produce byte-identical ledgers.
    bool record_wall_clock = true;
    std::string eval_split = "test"; // or "holdout": first half of test only
    double val_fraction = 0.1;
};

struct SearchEmptyError : ContractError {
    using ContractError::ContractError;
};

struct SearchResult {
    std::vector<TrialRecord> records;       // all trials, ledger order
    std::vector<std::size_t> front;         // indices of rank-1 completed records
};

namespace detail {

inline TrialRecord evaluate_trial(const TimeSeriesDataset& ds, Genome genome,
                                  std::uint64_t seed, const SearchBudget& budget,
                                  const SearchOptions& opt) {
    TrialRecord rec;
    rec.genome = genome;
    rec.seed = seed;
    try {
        const std::size_t m = ds.feature_count();
        AnomalyModel model = AnomalyModel::build(genome, m, seed);
        rec.parameter_count = model.parameter_count();

        auto [train_ws, test_ws] =
            make_windows(ds, static_cast<std::size_t>(genome.window_size));
        TrainConfig cfg;
        cfg.epochs = budget.per_trial_epochs;
        cfg.seed = seed;
        cfg.max_train_seconds = budget.per_trial_seconds;
        cfg.val_fraction = opt.val_fraction;
        cfg.early_stop_patience = 3;
        TrainReport report = train_model(model, train_ws.windows, cfg);
        rec.training_time_seconds = opt.record_wall_clock
                                        ? report.wall_clock_seconds
                                        : static_cast<double>(report.optimizer_steps);
        if (report.diverged) {
            rec.status = TrialStatus::Pruned;
            rec.reason = "adversarial divergence";
            return rec;
        }

        ScoreOptions sopt;
        const auto train_scores = compute_scores(model, train_ws, nullptr, sopt);
        auto test_scores = compute_scores(model, test_ws, nullptr, sopt);
        std::vector<int> labels = ds.test_labels;
        if (opt.eval_split == "holdout") {
            const std::size_t half = test_scores.size() / 2;
            test_scores.resize(half);
            labels.resize(half);
        }
        const PotResult pot = pot_threshold(train_scores, opt.pot_q, opt.pot_coeff);
        ScoreSeries series = ScoreSeries::from_threshold(test_scores, pot.threshold);
        const EvalReport ev = evaluate(series.decisions, labels, opt.point_adjust);
        rec.f1 = ev.f1;
        rec.precision = ev.precision;
        rec.recall = ev.recall;
        rec.status = TrialStatus::Completed;
    } catch (const TrainingError& e) {
        rec.status = TrialStatus::Pruned;
        rec.reason = e.what();
    } catch (const std::exception& e) {
        rec.status = TrialStatus::Failed;
        rec.reason = e.what();
    }
    return rec;
}

} // namespace detail

// NSGA-II loop: sample generation 0, then evolve offspring per generation;
// survivors are reselected from parents + offspring by (rank, crowding).
// Trials inside a generation may run on opt.jobs threads; per-trial seeds
// derive from (master seed, generation, slot) so results are independent of
// scheduling.
inline SearchResult run_search(const TimeSeriesDataset& ds, const SearchBudget& budget,
                               std::uint64_t master_seed, const SearchOptions& opt = {}) {
    if (budget.population < 2 || budget.generations < 1)
        throw ContractError("run_search: budget must have population >= 2, generations >= 1");
    SearchResult result;
    std::vector<TrialRecord> survivors; // completed parents carried forward
    Rng evolve_rng(Rng::derive_seed(master_seed, 0xE0, 0));
    std::size_t next_trial_id = 0;

    for (std::size_t gen = 0; gen < budget.generations; ++gen) {
        std::vector<Genome> genomes;
        std::vector<TrialRecord> completed = survivors;
        if (gen == 0 || completed.size() < 2) {
            Rng sample_rng(Rng::derive_seed(master_seed, 0x5A, gen));
            for (std::size_t i = 0; i < budget.population; ++i)
                genomes.push_back(sample_genome(sample_rng));
        } else {
            genomes = evolve(completed, evolve_rng, opt.p_crossover, opt.p_mutation,
                             budget.population);
        }

        std::vector<TrialRecord> gen_records(genomes.size());
        const std::size_t jobs = std::max<std::size_t>(1, opt.jobs);
        std::atomic<std::size_t> cursor{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t slot = cursor.fetch_add(1);
                if (slot >= genomes.size()) break;
                const std::uint64_t seed = Rng::derive_seed(master_seed, gen + 1, slot);
                gen_records[slot] = detail::evaluate_trial(ds, genomes[slot], seed, budget, opt);
            }
        };
        if (jobs == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
        for (std::size_t slot = 0; slot < gen_records.size(); ++slot) {
            gen_records[slot].generation = gen;
            gen_records[slot].slot = slot;
            gen_records[slot].trial_id = next_trial_id++;
            result.records.push_back(gen_records[slot]);
            if (gen_records[slot].status == TrialStatus::Completed)
                completed.push_back(gen_records[slot]);
        }

        // Environmental selection for the next generation's parents.
        if (!completed.empty()) {
            const auto pts = objectives_of(completed);
            const auto fronts = non_dominated_sort(pts, nas_directions());
            std::vector<TrialRecord> next;
            for (const auto& front : fronts) {
                if (next.size() >= budget.population) break;
                if (next.size() + front.size() <= budget.population) {
                    for (std::size_t i : front) next.push_back(completed[i]);
                } else {
                    std::vector<std::vector<double>> fp;
                    for (std::size_t i : front) fp.push_back(pts[i]);
                    const auto cd = crowding_distance(fp);
                    std::vector<std::size_t> order(front.size());
                    std::iota(order.begin(), order.end(), std::size_t{0});
                    std::stable_sort(order.begin(), order.end(),
                                     [&](std::size_t a, std::size_t b) { return cd[a] > cd[b]; });
                    for (std::size_t i : order) {
                        if (next.size() >= budget.population) break;
                        next.push_back(completed[front[i]]);
                    }
                }
            }
            survivors = std::move(next);
        }
    }

    // Pareto front over every completed trial in the ledger.
    std::vector<std::size_t> completed_idx;
    for (std::size_t i = 0; i < result.records.size(); ++i)
        if (result.records[i].status == TrialStatus::Completed) completed_idx.push_back(i);
    if (completed_idx.empty()) throw SearchEmptyError("run_search: zero completed trials");
    std::vector<std::vector<double>> pts;
    for (std::size_t i : completed_idx)
        pts.push_back({result.records[i].f1,
                       static_cast<double>(result.records[i].parameter_count)});
    const auto fronts = non_dominated_sort(pts, nas_directions());
    for (std::size_t i : fronts[0]) result.front.push_back(completed_idx[i]);
    return result;
}

// ---- front selection ----

enum class SelectionPolicy { BestF1, MinParams, Knee };

inline SelectionPolicy selection_policy_from_string(const std::string& s) {
    if (s == "best_f1") return SelectionPolicy::BestF1;
    if (s == "min_params") return SelectionPolicy::MinParams;
    if (s == "knee") return SelectionPolicy::Knee;
    throw ContractError("unknown selection policy: " + s);
}

inline const TrialRecord& select_from_front(const std::vector<TrialRecord>& front,
                                            SelectionPolicy policy) {
    if (front.empty()) throw ContractError("select_from_front: empty front");
    switch (policy) {
    case SelectionPolicy::BestF1:
        return *std::max_element(front.begin(), front.end(),
                                 [](const TrialRecord& a, const TrialRecord& b) {
                                     if (a.f1 != b.f1) return a.f1 < b.f1;
                                     return a.parameter_count > b.parameter_count;
                                 });
    case SelectionPolicy::MinParams:
        return *std::min_element(front.begin(), front.end(),
                                 [](const TrialRecord& a, const TrialRecord& b) {
                                     if (a.parameter_count != b.parameter_count)
                                         return a.parameter_count < b.parameter_count;
                                     return a.f1 > b.f1;
                                 });
    case SelectionPolicy::Knee:
    default: {
        if (front.size() == 1) return front.front();
        // Normalize both objectives to [0,1] and take the point farthest from
        // the chord through the front's endpoints.
        double f1_lo = front[0].f1, f1_hi = front[0].f1;
        double p_lo = static_cast<double>(front[0].parameter_count);
        double p_hi = p_lo;
        for (const auto& r : front) {
            f1_lo = std::min(f1_lo, r.f1);
            f1_hi = std::max(f1_hi, r.f1);
            p_lo = std::min(p_lo, static_cast<double>(r.parameter_count));
            p_hi = std::max(p_hi, static_cast<double>(r.parameter_count));
        }
        const double f1_range = std::max(f1_hi - f1_lo, 1e-300);
        const double p_range = std::max(p_hi - p_lo, 1e-300);
        auto norm = [&](const TrialRecord& r) {
            return std::pair<double, double>{
                (r.f1 - f1_lo) / f1_range,
                (static_cast<double>(r.parameter_count) - p_lo) / p_range};
        };
        const TrialRecord* a = &front[0];
        const TrialRecord* b = &front[0];
        for (const auto& r : front) {
            if (r.f1 > b->f1) b = &r;
            if (static_cast<double>(r.parameter_count) <
                static_cast<double>(a->parameter_count))
                a = &r;
        }
        auto [ax, ay] = norm(*a);
        auto [bx, by] = norm(*b);
        const double len = std::hypot(bx - ax, by - ay);
        const TrialRecord* best = a;
        double best_dist = -1.0;
        for (const auto& r : front) {
            auto [x, y] = norm(r);
            const double dist =
                len > 0.0 ? std::abs((bx - ax) * (ay - y) - (ax - x) * (by - ay)) / len : 0.0;
            if (dist > best_dist) {
                best_dist = dist;
                best = &r;
            }
        }
        return *best;
    }
    }
}

// ---- ledger + export ----

inline void save_ledger(const std::string& path, const std::vector<TrialRecord>& records) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    for (const auto& r : records) out << r.to_json().dump() << "\n";
}

inline std::vector<TrialRecord> load_ledger(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<TrialRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            records.push_back(TrialRecord::from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return records;
}

// CSV consumable by any plotting tool: one row per completed trial with its
// front rank and crowding distance.
inline void save_pareto_csv(const std::string& path, const std::vector<TrialRecord>& records) {
    std::vector<std::size_t> completed;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].status == TrialStatus::Completed) completed.push_back(i);
    std::vector<std::vector<double>> pts;
    for (std::size_t i : completed)
        pts.push_back({records[i].f1, static_cast<double>(records[i].parameter_count)});
    std::vector<std::size_t> rank(completed.size(), 0);
    std::vector<double> crowd(completed.size(), 0.0);
    if (!completed.empty()) {
        const auto fronts = non_dominated_sort(pts, nas_directions());
        for (std::size_t f = 0; f < fronts.size(); ++f) {
            std::vector<std::vector<double>> fp;
            for (std::size_t i : fronts[f]) fp.push_back(pts[i]);
            const auto cd = crowding_distance(fp);
            for (std::size_t i = 0; i < fronts[f].size(); ++i) {
                rank[fronts[f][i]] = f + 1;
                crowd[fronts[f][i]] = cd[i];
            }
        }
    }
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out.precision(17);
    out << "trial_id,f1,parameter_count,training_time,rank,crowding_distance\n";
    for (std::size_t i = 0; i < completed.size(); ++i) {
        const auto& r = records[completed[i]];
        out << r.trial_id << "," << r.f1 << "," << r.parameter_count << ","
            << r.training_time_seconds << "," << rank[i] << "," << crowd[i] << "\n";
    }
}

} // namespace tsnas

#endif
