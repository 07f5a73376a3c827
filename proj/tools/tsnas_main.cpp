// tsnas: dataset preparation, training, detection, evaluation, and
// NSGA-II architecture search for transformer time-series anomaly models.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsnas/config.hpp"
#include "tsnas/nas.hpp"
#include "tsnas/scoring.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;    // input/contract error
constexpr int kExitOverwrite = 3;
constexpr int kExitEmptySearch = 4;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 0;
    bool jobs_set = false;
    bool force = false;
};

tsnas::RunConfig effective_config(const GlobalArgs& ga) {
    tsnas::RunConfig cfg;
    if (!ga.config_path.empty()) cfg = tsnas::load_config(ga.config_path);
    if (ga.seed_set) cfg.seed = ga.seed;
    if (ga.jobs_set) cfg.jobs = ga.jobs;
    return cfg;
}

// Refuses to clobber an existing artifact unless --force is given.
void guard_overwrite(const fs::path& artifact, bool force) {
    if (!force && fs::exists(artifact)) {
        std::ostringstream msg;
        msg << "refusing to overwrite " << artifact.string() << " (use --force)";
        throw std::system_error(std::make_error_code(std::errc::file_exists), msg.str());
    }
}

void write_effective_config(const fs::path& dir, const tsnas::RunConfig& cfg) {
    tsnas::save_config((dir / "effective_config.ini").string(), cfg);
}

tsnas::TimeSeriesDataset load_bundle(const std::string& dir) {
    const fs::path d(dir);
    return tsnas::load_csv((d / "train.csv").string(), (d / "test.csv").string(),
                           (d / "labels.csv").string());
}

std::vector<tsnas::AnomalyType> parse_anomaly_types(const std::string& csv) {
    std::vector<tsnas::AnomalyType> types;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) types.push_back(tsnas::anomaly_type_from_string(tok));
    return types;
}

// Threshold trace per the configured mode; train scores anchor POT.
std::vector<double> threshold_trace(const tsnas::RunConfig& cfg,
                                    const std::vector<double>& train_scores,
                                    const std::vector<double>& test_scores) {
    if (cfg.threshold_mode == "mat") {
        auto trace = tsnas::mat_threshold(test_scores, static_cast<std::size_t>(cfg.mat_n));
        for (auto& v : trace) v *= cfg.mat_kappa;
        return trace;
    }
    const tsnas::PotResult pot = tsnas::pot_threshold(train_scores, cfg.pot_q, cfg.pot_coeff);
    if (cfg.threshold_mode == "pot")
        return std::vector<double>(test_scores.size(), pot.threshold);
    if (cfg.threshold_mode != "mpot")
        throw tsnas::ContractError("pot.threshold_mode must be pot, mpot, or mat");
    // mPOT: POT base plus alpha * MAD over the trailing window of scores.
    const auto R = static_cast<std::size_t>(cfg.pot_recent_window);
    std::vector<double> trace(test_scores.size(), pot.threshold);
    for (std::size_t t = 0; t < test_scores.size(); ++t) {
        const std::size_t lo = t + 1 >= R ? t + 1 - R : 0;
        std::vector<double> recent(test_scores.begin() + static_cast<std::ptrdiff_t>(lo),
                                   test_scores.begin() + static_cast<std::ptrdiff_t>(t + 1));
        trace[t] = tsnas::mpot_threshold(pot.threshold, recent, cfg.pot_alpha);
    }
    return trace;
}

int cmd_prepare(const GlobalArgs& ga) {
    auto cfg = effective_config(ga);
    const fs::path out(ga.out_dir);
    fs::create_directories(out);
    guard_overwrite(out / "train.csv", ga.force);

    tsnas::TimeSeriesDataset ds;
    if (!cfg.dataset_train.empty()) {
        ds = tsnas::load_csv(cfg.dataset_train, cfg.dataset_test, cfg.dataset_labels);
    } else if (cfg.synth_enabled) {
        tsnas::SynthSpec spec;
        spec.train_length = static_cast<std::size_t>(cfg.synth_train_length);
        spec.test_length = static_cast<std::size_t>(cfg.synth_test_length);
        spec.features = static_cast<std::size_t>(cfg.synth_features);
        spec.anomaly_types = parse_anomaly_types(cfg.synth_anomaly_types);
        spec.anomaly_rate = cfg.synth_anomaly_rate;
        spec.noise_std = cfg.synth_noise_std;
        spec.seed = cfg.seed;
        ds = tsnas::synth_generate(spec);
    } else {
        throw tsnas::ContractError("no dataset paths and synth.enabled = false");
    }
    ds = tsnas::normalize(ds, cfg.dataset_eps);
    if (cfg.dataset_rolling_stats_window > 0) {
        const auto W = static_cast<std::size_t>(cfg.dataset_rolling_stats_window);
        ds.train = tsnas::append_rolling_stats(ds.train, W);
        ds.test = tsnas::append_rolling_stats(ds.test, W);
    }

    tsnas::save_csv_matrix((out / "train.csv").string(), ds.train);
    tsnas::save_csv_matrix((out / "test.csv").string(), ds.test);
    tsnas::save_labels((out / "labels.csv").string(), ds.test_labels);
    double anomaly_fraction = 0.0;
    for (int v : ds.test_labels) anomaly_fraction += v;
    anomaly_fraction /= static_cast<double>(ds.test_labels.size());
    const json meta{{"schema_version", 1},
                    {"train_length", ds.train.rows},
                    {"test_length", ds.test.rows},
                    {"features", ds.train.cols},
                    {"anomaly_fraction", anomaly_fraction}};
    std::ofstream((out / "meta.json").string()) << meta.dump(2) << "\n";
    write_effective_config(out, cfg);
    std::cout << "prepared bundle in " << out.string() << " (T=" << ds.train.rows
              << ", T'=" << ds.test.rows << ", m=" << ds.train.cols << ")\n";
    return kExitOk;
}

int cmd_train(const GlobalArgs& ga, const std::string& bundle, const std::string& genome_file) {
    auto cfg = effective_config(ga);
    const std::string bdir = bundle.empty() ? cfg.dataset_bundle : bundle;
    if (bdir.empty()) throw tsnas::ContractError("no bundle directory given (--bundle)");
    const fs::path out(ga.out_dir);
    fs::create_directories(out);
    guard_overwrite(out / "checkpoint.bin", ga.force);

    std::ifstream gin(genome_file);
    if (!gin) throw tsnas::ParseError("cannot open genome " + genome_file);
    tsnas::Genome genome = tsnas::genome_from_json(json::parse(gin));
    const auto errs = genome.validation_errors();
    if (!errs.empty()) {
        std::string msg = "genome validation failed:";
        for (const auto& e : errs) msg += " " + e + ";";
        throw tsnas::ValidationError(msg);
    }

    auto ds = load_bundle(bdir);
    auto model = tsnas::AnomalyModel::build(genome, ds.feature_count(), cfg.seed);
    auto [train_ws, test_ws] =
        tsnas::make_windows(ds, static_cast<std::size_t>(model.genome().window_size));

    tsnas::TrainConfig tc;
    tc.epochs = cfg.train_epochs;
    tc.seed = cfg.seed;
    if (cfg.train_max_seconds > 0.0) tc.max_train_seconds = cfg.train_max_seconds;
    tc.val_fraction = cfg.train_val_fraction;
    tc.early_stop_patience = cfg.train_patience;
    tc.iterative_eps = cfg.iterative_eps;
    tc.iterative_max_iters = cfg.iterative_max_iters;
    tc.self_adv_weight = cfg.self_adv_weight;
    tc.grad_clip_norm = cfg.grad_clip;
    const tsnas::TrainReport report = tsnas::train_model(model, train_ws.windows, tc);

    model.save_checkpoint((out / "checkpoint.bin").string());
    std::ofstream((out / "train_report.json").string()) << report.to_json().dump(2) << "\n";
    {
        std::ofstream curve((out / "loss_curve.csv").string());
        curve.precision(17);
        curve << "epoch,train_loss\n";
        for (std::size_t e = 0; e < report.loss_curve.size(); ++e)
            curve << e << "," << report.loss_curve[e] << "\n";
    }
    write_effective_config(out, cfg);
    std::cout << "trained " << tsnas::to_string(genome.phase_type) << " model, "
              << model.parameter_count() << " params, final loss " << report.final_train_loss
              << "\n";
    return kExitOk;
}

int cmd_detect(const GlobalArgs& ga, const std::string& bundle, const std::string& checkpoint,
               bool per_dim) {
    auto cfg = effective_config(ga);
    const std::string bdir = bundle.empty() ? cfg.dataset_bundle : bundle;
    if (bdir.empty()) throw tsnas::ContractError("no bundle directory given (--bundle)");
    const fs::path out(ga.out_dir);
    fs::create_directories(out);
    guard_overwrite(out / "scores.csv", ga.force);

    auto model = tsnas::AnomalyModel::load_checkpoint(checkpoint);
    auto ds = load_bundle(bdir);
    if (ds.feature_count() != model.feature_count())
        throw tsnas::DimensionError("bundle has " + std::to_string(ds.feature_count()) +
                                    " features, checkpoint expects " +
                                    std::to_string(model.feature_count()));
    auto [train_ws, test_ws] =
        tsnas::make_windows(ds, static_cast<std::size_t>(model.genome().window_size));

    tsnas::ScoreOptions sopt;
    sopt.iterative_eps = cfg.iterative_eps;
    sopt.iterative_max_iters = cfg.iterative_max_iters;
    const auto train_scores = tsnas::compute_scores(model, train_ws, nullptr, sopt);
    tsnas::Matrix per_dim_scores;
    const auto test_scores =
        tsnas::compute_scores(model, test_ws, per_dim ? &per_dim_scores : nullptr, sopt);

    auto trace = threshold_trace(cfg, train_scores, test_scores);
    auto series = tsnas::ScoreSeries::from_trace(test_scores, trace);

    if (per_dim) {
        // Per-dimension POT thresholds; the aggregate decision is the any-of
        // rule over dimension exceedances.
        tsnas::Matrix train_pd;
        tsnas::compute_scores(model, train_ws, &train_pd, sopt);
        std::vector<double> dim_thresholds(ds.feature_count());
        for (std::size_t j = 0; j < ds.feature_count(); ++j) {
            std::vector<double> col(train_pd.rows);
            for (std::size_t i = 0; i < train_pd.rows; ++i) col[i] = train_pd.at(i, j);
            dim_thresholds[j] = tsnas::pot_threshold(col, cfg.pot_q, cfg.pot_coeff).threshold;
        }
        std::ofstream pd((out / "per_dim_scores.csv").string());
        pd.precision(17);
        pd << "timestamp";
        for (std::size_t j = 0; j < ds.feature_count(); ++j) pd << ",score_" << j;
        for (std::size_t j = 0; j < ds.feature_count(); ++j) pd << ",threshold_" << j;
        pd << ",decision\n";
        for (std::size_t t = 0; t < per_dim_scores.rows; ++t) {
            int any = 0;
            pd << t;
            for (std::size_t j = 0; j < ds.feature_count(); ++j)
                pd << "," << per_dim_scores.at(t, j);
            for (std::size_t j = 0; j < ds.feature_count(); ++j) {
                pd << "," << dim_thresholds[j];
                any |= per_dim_scores.at(t, j) > dim_thresholds[j] ? 1 : 0;
            }
            pd << "," << any << "\n";
            series.decisions[t] = any;
        }
    }

    tsnas::save_score_series_csv((out / "scores.csv").string(), series, &ds.test_labels);
    double rate = 0.0;
    for (int d : series.decisions) rate += d;
    rate /= static_cast<double>(series.decisions.size());
    const json summary{{"schema_version", 1},
                       {"threshold_mode", cfg.threshold_mode},
                       {"detection_rate", rate},
                       {"timestamps", series.scores.size()}};
    std::ofstream((out / "detect_summary.json").string()) << summary.dump(2) << "\n";
    write_effective_config(out, cfg);
    std::cout << "detected anomalies at rate " << rate << " over " << series.scores.size()
              << " timestamps\n";
    return kExitOk;
}

int cmd_evaluate(const GlobalArgs& ga, const std::string& scores_path,
                 const std::string& labels_path) {
    auto cfg = effective_config(ga);
    const fs::path out(ga.out_dir);
    fs::create_directories(out);
    guard_overwrite(out / "eval_report.json", ga.force);

    const tsnas::Matrix sc = tsnas::load_csv_matrix(scores_path);
    // scores.csv layout: timestamp,score,threshold,decision[,label]
    if (sc.cols < 4)
        throw tsnas::ParseError(scores_path + ": expected scores.csv with decision column");
    std::vector<int> decisions(sc.rows);
    for (std::size_t i = 0; i < sc.rows; ++i) decisions[i] = sc.at(i, 3) != 0.0 ? 1 : 0;
    std::vector<int> labels;
    if (!labels_path.empty()) {
        labels = tsnas::load_labels(labels_path, sc.rows);
    } else if (sc.cols >= 5) {
        labels.resize(sc.rows);
        for (std::size_t i = 0; i < sc.rows; ++i) labels[i] = sc.at(i, 4) != 0.0 ? 1 : 0;
    } else {
        throw tsnas::ContractError("no labels: pass --labels or use scores.csv with labels");
    }

    const auto plain = tsnas::evaluate(decisions, labels, false);
    const auto adjusted = tsnas::evaluate(decisions, labels, true);
    const json rep{{"schema_version", 1},
                   {"plain", plain.to_json()},
                   {"point_adjusted", adjusted.to_json()}};
    std::ofstream((out / "eval_report.json").string()) << rep.dump(2) << "\n";
    write_effective_config(out, cfg);
    std::cout << "plain F1 " << plain.f1 << ", point-adjusted F1 " << adjusted.f1 << "\n";
    return kExitOk;
}

int cmd_search(const GlobalArgs& ga, const std::string& bundle) {
    auto cfg = effective_config(ga);
    const std::string bdir = bundle.empty() ? cfg.dataset_bundle : bundle;
    if (bdir.empty()) throw tsnas::ContractError("no bundle directory given (--bundle)");
    const fs::path out(ga.out_dir);
    fs::create_directories(out);
    guard_overwrite(out / "ledger.jsonl", ga.force);

    auto ds = load_bundle(bdir);
    tsnas::SearchBudget budget;
    budget.population = static_cast<std::size_t>(cfg.nas_population);
    budget.generations = static_cast<std::size_t>(cfg.nas_generations);
    budget.per_trial_epochs = cfg.nas_per_trial_epochs;
    budget.per_trial_seconds = cfg.nas_per_trial_seconds;
    tsnas::SearchOptions opt;
    opt.pot_q = cfg.pot_q;
    opt.pot_coeff = cfg.pot_coeff;
    opt.point_adjust = cfg.point_adjust;
    opt.p_crossover = cfg.nas_p_crossover;
    opt.p_mutation = cfg.nas_p_mutation;
    opt.record_wall_clock = cfg.nas_record_wall_clock;
    opt.eval_split = cfg.nas_eval_split;
    opt.val_fraction = cfg.train_val_fraction;
    opt.jobs = cfg.jobs > 0 ? static_cast<std::size_t>(cfg.jobs)
                            : std::max(1u, std::thread::hardware_concurrency());

    tsnas::SearchResult result;
    try {
        result = tsnas::run_search(ds, budget, cfg.seed, opt);
    } catch (const tsnas::SearchEmptyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEmptySearch;
    }

    tsnas::save_ledger((out / "ledger.jsonl").string(), result.records);
    tsnas::save_pareto_csv((out / "pareto.csv").string(), result.records);
    std::vector<tsnas::TrialRecord> front;
    for (std::size_t i : result.front) front.push_back(result.records[i]);
    for (const auto& [policy, name] :
         {std::pair{tsnas::SelectionPolicy::BestF1, "best_f1"},
          std::pair{tsnas::SelectionPolicy::MinParams, "min_params"},
          std::pair{tsnas::SelectionPolicy::Knee, "knee"}}) {
        const auto& rec = tsnas::select_from_front(front, policy);
        std::ofstream((out / (std::string("genome_") + name + ".json")).string())
            << tsnas::genome_to_json(rec.genome).dump(2) << "\n";
    }
    write_effective_config(out, cfg);
    std::cout << "search finished: " << result.records.size() << " trials, front size "
              << front.size() << "\n";
    return kExitOk;
}

int cmd_pareto(const GlobalArgs& ga, const std::string& ledger_path) {
    auto cfg = effective_config(ga);
    const fs::path out(ga.out_dir);
    fs::create_directories(out);
    guard_overwrite(out / "pareto.csv", ga.force);
    const auto records = tsnas::load_ledger(ledger_path);
    tsnas::save_pareto_csv((out / "pareto.csv").string(), records);
    write_effective_config(out, cfg);
    std::cout << "wrote pareto.csv for " << records.size() << " ledger rows\n";
    return kExitOk;
}

// Accepts a ledger (JSONL) or a CSV with header f1,training_time,parameter_count.
int cmd_eacs(const GlobalArgs& ga, const std::string& input) {
    auto cfg = effective_config(ga);
    const fs::path out(ga.out_dir);
    fs::create_directories(out);
    guard_overwrite(out / "eacs.csv", ga.force);

    struct Row {
        std::string id;
        double f1, time, params;
        double score = 0.0;
    };
    std::vector<Row> rows;
    if (input.size() > 6 && input.substr(input.size() - 6) == ".jsonl") {
        for (const auto& r : tsnas::load_ledger(input))
            if (r.status == tsnas::TrialStatus::Completed)
                rows.push_back({std::to_string(r.trial_id), r.f1, r.training_time_seconds,
                                static_cast<double>(r.parameter_count)});
    } else {
        const tsnas::Matrix m = tsnas::load_csv_matrix(input);
        if (m.cols < 3)
            throw tsnas::ParseError(input + ": need columns f1,training_time,parameter_count");
        for (std::size_t i = 0; i < m.rows; ++i)
            rows.push_back({std::to_string(i), m.at(i, 0), m.at(i, 1), m.at(i, 2)});
    }
    if (rows.empty()) throw tsnas::ContractError("eacs: empty input cohort");

    tsnas::EacsInput base;
    base.max_f1 = base.max_training_time = base.max_parameter_count = 0.0;
    for (const auto& r : rows) {
        base.max_f1 = std::max(base.max_f1, r.f1);
        base.max_training_time = std::max(base.max_training_time, r.time);
        base.max_parameter_count = std::max(base.max_parameter_count, r.params);
    }
    for (auto& r : rows) {
        tsnas::EacsInput in = base;
        in.f1 = r.f1;
        in.training_time_seconds = r.time;
        in.parameter_count = r.params;
        r.score = tsnas::eacs(in);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.score > b.score; });
    std::ofstream csv((out / "eacs.csv").string());
    csv.precision(17);
    csv << "id,f1,training_time,parameter_count,eacs\n";
    for (const auto& r : rows)
        csv << r.id << "," << r.f1 << "," << r.time << "," << r.params << "," << r.score << "\n";
    write_effective_config(out, cfg);
    std::cout << "wrote eacs.csv for " << rows.size() << " rows\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"transformer time-series anomaly detection with NSGA-II architecture search"};
    app.require_subcommand(1);

    GlobalArgs ga;
    app.add_option("--config", ga.config_path, "config file (ini-style key = value)");
    app.add_option("--out", ga.out_dir, "output directory");
    app.add_option("--seed", ga.seed, "master RNG seed")->each([&](const std::string&) {
        ga.seed_set = true;
    });
    app.add_option("--jobs", ga.jobs, "concurrent trial evaluations")
        ->each([&](const std::string&) { ga.jobs_set = true; });
    app.add_flag("--force", ga.force, "overwrite existing outputs");

    auto* prepare = app.add_subcommand("prepare", "build a normalized dataset bundle");
    auto* train = app.add_subcommand("train", "train one model from a genome JSON");
    auto* detect = app.add_subcommand("detect", "score a test split with a trained checkpoint");
    auto* evaluate = app.add_subcommand("evaluate", "precision/recall/F1 from scores + labels");
    auto* search = app.add_subcommand("search", "NSGA-II architecture search");
    auto* pareto = app.add_subcommand("pareto", "recompute the Pareto export from a ledger");
    auto* eacs = app.add_subcommand("eacs", "EACS table from a ledger or CSV cohort");

    std::string bundle, genome_file, checkpoint, scores_path, labels_path, ledger_path, eacs_in;
    bool per_dim = false;
    train->add_option("--bundle", bundle, "prepared bundle directory");
    train->add_option("--genome", genome_file, "genome JSON file")->required();
    detect->add_option("--bundle", bundle, "prepared bundle directory");
    detect->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    detect->add_flag("--per-dim", per_dim, "emit per-dimension scores and any-of decisions");
    evaluate->add_option("--scores", scores_path, "scores.csv from detect")->required();
    evaluate->add_option("--labels", labels_path, "labels file (optional if scores carry them)");
    search->add_option("--bundle", bundle, "prepared bundle directory");
    pareto->add_option("--ledger", ledger_path, "ledger.jsonl from search")->required();
    eacs->add_option("--input", eacs_in, "ledger.jsonl or CSV cohort")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare->parsed()) return cmd_prepare(ga);
        if (train->parsed()) return cmd_train(ga, bundle, genome_file);
        if (detect->parsed()) return cmd_detect(ga, bundle, checkpoint, per_dim);
        if (evaluate->parsed()) return cmd_evaluate(ga, scores_path, labels_path);
        if (search->parsed()) return cmd_search(ga, bundle);
        if (pareto->parsed()) return cmd_pareto(ga, ledger_path);
        if (eacs->parsed()) return cmd_eacs(ga, eacs_in);
    } catch (const std::system_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOverwrite;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
