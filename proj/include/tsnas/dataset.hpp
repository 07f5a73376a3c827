#ifndef TSNAS_DATASET_HPP
#define TSNAS_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tsnas/errors.hpp"
#include "tsnas/rng.hpp"

namespace tsnas {

// Plain row-major matrix for time-series storage; tensors enter only once a
// window is fed to a model.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    bool operator==(const Matrix& o) const {
        return rows == o.rows && cols == o.cols && data == o.data;
    }
};

struct TimeSeriesDataset {
    Matrix train;                 // T x m
    Matrix test;                  // T' x m
    std::vector<int> test_labels; // length T', values in {0,1}
    std::vector<std::string> names;

    std::size_t feature_count() const { return train.cols; }
};

// One context window per source timestamp, each K x m.
struct WindowSet {
    std::vector<Matrix> windows;
    std::size_t window_size = 0;
};

namespace detail {

inline bool parse_double(const std::string& s, double& out) {
    const char* b = s.c_str();
    char* end = nullptr;
    out = std::strtod(b, &end);
    if (end == b) return false;
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    return *end == '\0';
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

// Numeric CSV, '.' decimal point, optional header auto-detected by a
// non-numeric first row.
inline Matrix load_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    Matrix m;
    std::string line;
    std::size_t lineno = 0;
    bool first_data_row = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = detail::split_csv_line(line);
        std::vector<double> row;
        row.reserve(cells.size());
        bool numeric = true;
        for (const auto& c : cells) {
            double v;
            if (!detail::parse_double(c, v)) {
                numeric = false;
                break;
            }
            row.push_back(v);
        }
        if (!numeric) {
            if (first_data_row) continue; // header row
            throw ParseError(path + ":" + std::to_string(lineno) + ": non-numeric cell");
        }
        if (first_data_row) {
            m.cols = row.size();
            first_data_row = false;
        } else if (row.size() != m.cols) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": ragged row, expected " +
                             std::to_string(m.cols) + " cells, got " +
                             std::to_string(row.size()));
        }
        m.data.insert(m.data.end(), row.begin(), row.end());
        ++m.rows;
    }
    if (m.rows == 0) throw ParseError(path + ": no data rows");
    return m;
}

inline void save_csv_matrix(const std::string& path, const Matrix& m,
                            const std::vector<std::string>& header = {}) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out.precision(17);
    if (!header.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j)
            out << header[j] << (j + 1 < header.size() ? "," : "\n");
    }
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j)
            out << m.at(i, j) << (j + 1 < m.cols ? "," : "\n");
}

inline void save_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    for (int v : labels) out << v << "\n";
}

// Labels: a single 0/1 column, or m columns reduced by any-of.
inline std::vector<int> load_labels(const std::string& path, std::size_t expected_len) {
    Matrix m = load_csv_matrix(path);
    if (m.rows != expected_len)
        throw ParseError(path + ": label count " + std::to_string(m.rows) +
                         " != test length " + std::to_string(expected_len));
    std::vector<int> labels(m.rows, 0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        int any = 0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            const double v = m.at(i, j);
            if (v != 0.0 && v != 1.0)
                throw ParseError(path + ":" + std::to_string(i + 1) +
                                 ": label must be 0 or 1");
            any |= (v != 0.0);
        }
        labels[i] = any;
    }
    return labels;
}

inline TimeSeriesDataset load_csv(const std::string& train_path, const std::string& test_path,
                                  const std::string& labels_path) {
    TimeSeriesDataset ds;
    ds.train = load_csv_matrix(train_path);
    ds.test = load_csv_matrix(test_path);
    if (ds.train.cols != ds.test.cols)
        throw ParseError("feature count mismatch: train has " + std::to_string(ds.train.cols) +
                         " columns, test has " + std::to_string(ds.test.cols));
    ds.test_labels = load_labels(labels_path, ds.test.rows);
    return ds;
}

// Min-max rescale per dimension with statistics computed on train only; the
// same affine map is applied to test, so test values may leave [0,1].
inline TimeSeriesDataset normalize(const TimeSeriesDataset& ds, double eps = 1e-8) {
    if (ds.train.rows == 0) throw ContractError("normalize: empty train split");
    if (eps <= 0.0) throw ContractError("normalize: eps must be > 0");
    TimeSeriesDataset out = ds;
    const std::size_t m = ds.train.cols;
    for (std::size_t j = 0; j < m; ++j) {
        double lo = ds.train.at(0, j), hi = ds.train.at(0, j);
        for (std::size_t i = 1; i < ds.train.rows; ++i) {
            lo = std::min(lo, ds.train.at(i, j));
            hi = std::max(hi, ds.train.at(i, j));
        }
        const double denom = hi - lo + eps;
        for (std::size_t i = 0; i < out.train.rows; ++i)
            out.train.at(i, j) = (ds.train.at(i, j) - lo) / denom;
        for (std::size_t i = 0; i < out.test.rows; ++i)
            out.test.at(i, j) = (ds.test.at(i, j) - lo) / denom;
    }
    return out;
}

// W_t = [x_{t-K+1} .. x_t], left-padded by replicating the first point.
inline WindowSet make_windows_of(const Matrix& series, std::size_t K) {
    if (K < 1) throw ContractError("make_windows: K must be >= 1");
    if (K > series.rows)
        throw ContractError("make_windows: K=" + std::to_string(K) + " exceeds series length " +
                            std::to_string(series.rows));
    WindowSet ws;
    ws.window_size = K;
    ws.windows.reserve(series.rows);
    const std::size_t m = series.cols;
    for (std::size_t t = 0; t < series.rows; ++t) {
        Matrix w(K, m);
        for (std::size_t k = 0; k < K; ++k) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) -
                                       static_cast<std::ptrdiff_t>(K - 1 - k);
            const std::size_t row = src < 0 ? 0 : static_cast<std::size_t>(src);
            for (std::size_t j = 0; j < m; ++j) w.at(k, j) = series.at(row, j);
        }
        ws.windows.push_back(std::move(w));
    }
    return ws;
}

inline std::pair<WindowSet, WindowSet> make_windows(const TimeSeriesDataset& ds, std::size_t K) {
    return {make_windows_of(ds.train, K), make_windows_of(ds.test, K)};
}

// Training-time augmentation knobs; filled from a Genome by the training loop.
struct AugmentSpec {
    double gaussian_noise_std = 0.0;
    bool time_warping = false;
    bool time_masking = false;
    double warp_strength = 0.2; // +-20% monotone warp of the time axis
    double mask_fraction = 0.1; // contiguous zeroed span, ceil(frac*K) long
};

namespace detail {

// Random monotone warp of [0, K-1] onto itself, linear interpolation between
// rows. Endpoints stay fixed so the window still ends at x_t.
inline Matrix time_warp(const Matrix& w, double strength, Rng& rng) {
    const std::size_t K = w.rows, m = w.cols;
    if (K < 3) return w;
    std::vector<double> src(K);
    src[0] = 0.0;
    src[K - 1] = static_cast<double>(K - 1);
    for (std::size_t k = 1; k + 1 < K; ++k) {
        const double jitter = rng.uniform(-strength, strength);
        src[k] = std::clamp(static_cast<double>(k) * (1.0 + jitter), 0.0,
                            static_cast<double>(K - 1));
    }
    std::sort(src.begin(), src.end());
    Matrix out(K, m);
    for (std::size_t k = 0; k < K; ++k) {
        const double pos = src[k];
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, K - 1);
        const double frac = pos - static_cast<double>(lo);
        for (std::size_t j = 0; j < m; ++j)
            out.at(k, j) = (1.0 - frac) * w.at(lo, j) + frac * w.at(hi, j);
    }
    return out;
}

} // namespace detail

// Applies noise, warping, masking in that order. Training batches only;
// output shape always equals input shape.
inline std::vector<Matrix> augment(const std::vector<Matrix>& batch, const AugmentSpec& spec,
                                   Rng& rng) {
    std::vector<Matrix> out;
    out.reserve(batch.size());
    for (const Matrix& win : batch) {
        Matrix w = win;
        if (spec.gaussian_noise_std > 0.0)
            for (auto& v : w.data) v += rng.normal(0.0, spec.gaussian_noise_std);
        if (spec.time_warping) w = detail::time_warp(w, spec.warp_strength, rng);
        if (spec.time_masking) {
            const std::size_t K = w.rows;
            const auto span = static_cast<std::size_t>(
                std::ceil(spec.mask_fraction * static_cast<double>(K)));
            const std::size_t len = std::max<std::size_t>(1, std::min(span, K));
            const std::size_t start =
                static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(K - len)));
            for (std::size_t k = start; k < start + len; ++k)
                for (std::size_t j = 0; j < w.cols; ++j) w.at(k, j) = 0.0;
        }
        out.push_back(std::move(w));
    }
    return out;
}

// ---- synthetic data ----

enum class AnomalyType { Spike, LevelShift, Flatline, FrequencyShift };

struct SynthSpec {
    std::size_t train_length = 2000;
    std::size_t test_length = 2000;
    std::size_t features = 1;
    std::vector<AnomalyType> anomaly_types = {AnomalyType::Spike};
    double anomaly_rate = 0.05; // fraction of test timestamps, in (0, 0.5)
    std::uint64_t seed = 0;
    double noise_std = 0.05;
};

inline AnomalyType anomaly_type_from_string(const std::string& s) {
    if (s == "spike") return AnomalyType::Spike;
    if (s == "level_shift") return AnomalyType::LevelShift;
    if (s == "flatline") return AnomalyType::Flatline;
    if (s == "frequency_shift") return AnomalyType::FrequencyShift;
    throw ContractError("unknown anomaly type: " + s);
}

namespace detail {

inline Matrix synth_base(std::size_t T, std::size_t m, Rng& rng, double noise_std) {
    Matrix out(T, m);
    std::vector<double> period(m), phase(m), amp(m);
    for (std::size_t j = 0; j < m; ++j) {
        period[j] = rng.uniform(40.0, 120.0);
        phase[j] = rng.uniform(0.0, 6.28318530717958647692);
        amp[j] = rng.uniform(0.6, 1.2);
    }
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < m; ++j)
            out.at(t, j) = amp[j] * std::sin(6.28318530717958647692 *
                                                 static_cast<double>(t) / period[j] +
                                             phase[j]) +
                           rng.normal(0.0, noise_std);
    return out;
}

} // namespace detail

// Sinusoid-plus-noise base with injected anomalies and exact labels. The
// achieved anomaly fraction lands within +-20% of the requested rate.
inline TimeSeriesDataset synth_generate(const SynthSpec& spec) {
    if (spec.anomaly_rate <= 0.0 || spec.anomaly_rate >= 0.5)
        throw ContractError("synth_generate: anomaly rate must lie in (0, 0.5), got " +
                            std::to_string(spec.anomaly_rate));
    if (spec.anomaly_types.empty())
        throw ContractError("synth_generate: at least one anomaly type required");
    Rng rng(spec.seed);
    TimeSeriesDataset ds;
    ds.train = detail::synth_base(spec.train_length, spec.features, rng, spec.noise_std);
    ds.test = detail::synth_base(spec.test_length, spec.features, rng, spec.noise_std);
    ds.test_labels.assign(spec.test_length, 0);

    const auto target =
        static_cast<std::size_t>(spec.anomaly_rate * static_cast<double>(spec.test_length));
    std::size_t labeled = 0;
    std::size_t guard = 0;
    while (labeled < target && guard < 10000) {
        ++guard;
        const auto type =
            spec.anomaly_types[static_cast<std::size_t>(rng.uniform_int(
                0, static_cast<std::int64_t>(spec.anomaly_types.size()) - 1))];
        const std::size_t seg_len =
            type == AnomalyType::Spike
                ? 1
                : static_cast<std::size_t>(rng.uniform_int(5, 20));
        if (seg_len > spec.test_length) continue;
        const auto start = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(spec.test_length - seg_len)));
        bool overlap = false;
        for (std::size_t t = start; t < start + seg_len; ++t) overlap |= (ds.test_labels[t] != 0);
        if (overlap) continue;
        const std::size_t dim = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(spec.features) - 1));
        switch (type) {
        case AnomalyType::Spike: {
            const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
            ds.test.at(start, dim) += sign * rng.uniform(3.0, 6.0);
            break;
        }
        case AnomalyType::LevelShift: {
            const double shift = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(1.5, 3.0);
            for (std::size_t t = start; t < start + seg_len; ++t) ds.test.at(t, dim) += shift;
            break;
        }
        case AnomalyType::Flatline: {
            const double held = ds.test.at(start, dim);
            for (std::size_t t = start; t < start + seg_len; ++t) ds.test.at(t, dim) = held;
            break;
        }
        case AnomalyType::FrequencyShift: {
            for (std::size_t t = start; t < start + seg_len; ++t)
                ds.test.at(t, dim) +=
                    1.5 * std::sin(1.3 * static_cast<double>(t - start));
            break;
        }
        }
        for (std::size_t t = start; t < start + seg_len; ++t) ds.test_labels[t] = 1;
        labeled += seg_len;
    }
    return ds;
}

} // namespace tsnas

#endif
