#ifndef TSNAS_CONFIG_HPP
#define TSNAS_CONFIG_HPP

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tsnas/errors.hpp"

namespace tsnas {

// Flat key = value config, one [section] per module. Every key has a
// documented default; unknown keys are rejected so typos fail loudly. The
// effective (merged) config is echoed beside every command's outputs.
struct RunConfig {
    // [dataset]
    std::string dataset_train;   // CSV path; empty means synthetic
    std::string dataset_test;
    std::string dataset_labels;
    std::string dataset_bundle;  // prepared bundle directory
    double dataset_eps = 1e-8;
    int dataset_rolling_stats_window = 0; // 0 disables the extra channels

    // [synth]
    bool synth_enabled = true;
    int synth_train_length = 2000;
    int synth_test_length = 2000;
    int synth_features = 1;
    std::string synth_anomaly_types = "spike"; // comma-separated
    double synth_anomaly_rate = 0.05;
    double synth_noise_std = 0.05;

    // [pot]
    double pot_q = 0.98;
    double pot_coeff = 1e-4;
    double pot_alpha = 0.1;        // mPOT weight
    int pot_recent_window = 50;    // trailing window for the MAD term
    int mat_n = 50;                // MAT moving-average window
    double mat_kappa = 3.0;        // multiplicative MAT margin
    std::string threshold_mode = "pot"; // pot | mpot | mat
    bool point_adjust = true;

    // [train]
    int train_epochs = 10;
    double train_val_fraction = 0.1;
    int train_patience = 3;
    double train_max_seconds = 0.0; // 0 disables the budget
    double iterative_eps = 1e-5;
    int iterative_max_iters = 5;
    double self_adv_weight = 0.0;
    double grad_clip = 5.0;

    // [nas]
    int nas_population = 20;
    int nas_generations = 5;
    int nas_per_trial_epochs = 5;
    double nas_per_trial_seconds = 120.0;
    double nas_p_crossover = 0.9;
    double nas_p_mutation = 1.0 / 17.0;
    bool nas_record_wall_clock = true;
    std::string nas_eval_split = "test"; // test | holdout

    // [run]
    std::uint64_t seed = 0;
    int jobs = 0; // 0 = hardware concurrency

    template <class F>
    void for_each_key(F&& f) {
        f("dataset", "train", dataset_train);
        f("dataset", "test", dataset_test);
        f("dataset", "labels", dataset_labels);
        f("dataset", "bundle", dataset_bundle);
        f("dataset", "eps", dataset_eps);
        f("dataset", "rolling_stats_window", dataset_rolling_stats_window);
        f("synth", "enabled", synth_enabled);
        f("synth", "train_length", synth_train_length);
        f("synth", "test_length", synth_test_length);
        f("synth", "features", synth_features);
        f("synth", "anomaly_types", synth_anomaly_types);
        f("synth", "anomaly_rate", synth_anomaly_rate);
        f("synth", "noise_std", synth_noise_std);
        f("pot", "q", pot_q);
        f("pot", "coeff", pot_coeff);
        f("pot", "alpha", pot_alpha);
        f("pot", "recent_window", pot_recent_window);
        f("pot", "mat_n", mat_n);
        f("pot", "mat_kappa", mat_kappa);
        f("pot", "threshold_mode", threshold_mode);
        f("pot", "point_adjust", point_adjust);
        f("train", "epochs", train_epochs);
        f("train", "val_fraction", train_val_fraction);
        f("train", "patience", train_patience);
        f("train", "max_seconds", train_max_seconds);
        f("train", "iterative_eps", iterative_eps);
        f("train", "iterative_max_iters", iterative_max_iters);
        f("train", "self_adv_weight", self_adv_weight);
        f("train", "grad_clip", grad_clip);
        f("nas", "population", nas_population);
        f("nas", "generations", nas_generations);
        f("nas", "per_trial_epochs", nas_per_trial_epochs);
        f("nas", "per_trial_seconds", nas_per_trial_seconds);
        f("nas", "p_crossover", nas_p_crossover);
        f("nas", "p_mutation", nas_p_mutation);
        f("nas", "record_wall_clock", nas_record_wall_clock);
        f("nas", "eval_split", nas_eval_split);
        f("run", "seed", seed);
        f("run", "jobs", jobs);
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline void assign_value(const std::string& raw, std::string& out) { out = raw; }
inline void assign_value(const std::string& raw, double& out) {
    std::size_t pos = 0;
    out = std::stod(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument("trailing characters");
}
inline void assign_value(const std::string& raw, int& out) {
    std::size_t pos = 0;
    out = std::stoi(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument("trailing characters");
}
inline void assign_value(const std::string& raw, std::uint64_t& out) {
    std::size_t pos = 0;
    out = std::stoull(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument("trailing characters");
}
inline void assign_value(const std::string& raw, bool& out) {
    if (raw == "true" || raw == "1") out = true;
    else if (raw == "false" || raw == "0") out = false;
    else throw std::invalid_argument("expected true/false");
}

inline std::string value_to_string(const std::string& v) { return v; }
inline std::string value_to_string(bool v) { return v ? "true" : "false"; }
inline std::string value_to_string(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}
template <class T>
std::string value_to_string(T v) {
    return std::to_string(v);
}

} // namespace detail

inline RunConfig parse_config_text(const std::string& text, const std::string& origin,
                                   RunConfig base = {}) {
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = detail::trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string val = detail::trim(t.substr(eq + 1));
        bool matched = false;
        base.for_each_key([&](const char* sec, const char* k, auto& field) {
            if (!matched && section == sec && key == k) {
                try {
                    detail::assign_value(val, field);
                } catch (const std::exception& e) {
                    throw ParseError(origin + ":" + std::to_string(lineno) + ": bad value for " +
                                     section + "." + key + ": " + e.what());
                }
                matched = true;
            }
        });
        if (!matched)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": unknown key " +
                             (section.empty() ? key : section + "." + key));
    }
    return base;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str(), path, std::move(base));
}

inline std::string config_to_ini(RunConfig cfg) {
    std::ostringstream out;
    std::string current;
    cfg.for_each_key([&](const char* sec, const char* key, auto& field) {
        if (current != sec) {
            if (!current.empty()) out << "\n";
            out << "[" << sec << "]\n";
            current = sec;
        }
        out << key << " = " << detail::value_to_string(field) << "\n";
    });
    return out.str();
}

inline void save_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << config_to_ini(cfg);
}

} // namespace tsnas

#endif
