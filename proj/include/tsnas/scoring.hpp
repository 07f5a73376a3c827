#ifndef TSNAS_SCORING_HPP
#define TSNAS_SCORING_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsnas/dataset.hpp"
#include "tsnas/model.hpp"
#include "tsnas/training.hpp"

namespace tsnas {

// ---- anomaly score ----

// s = 1/2 ||R1 - W||^2 + 1/2 ||R2 - W||^2. For single-reconstruction
// pathways pass R1 twice.
inline double anomaly_score(const Matrix& r1, const Matrix& r2, const Matrix& w) {
    if (!(r1.rows == w.rows && r1.cols == w.cols && r2.rows == w.rows && r2.cols == w.cols))
        throw DimensionError("anomaly_score: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < w.data.size(); ++i) {
        const double d1 = r1.data[i] - w.data[i];
        const double d2 = r2.data[i] - w.data[i];
        acc += 0.5 * d1 * d1 + 0.5 * d2 * d2;
    }
    return acc;
}

// Column-wise split of the same quantity; sums to the scalar score.
inline std::vector<double> anomaly_score_per_dim(const Matrix& r1, const Matrix& r2,
                                                 const Matrix& w) {
    if (!(r1.rows == w.rows && r1.cols == w.cols && r2.rows == w.rows && r2.cols == w.cols))
        throw DimensionError("anomaly_score_per_dim: shape mismatch");
    std::vector<double> out(w.cols, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i)
        for (std::size_t j = 0; j < w.cols; ++j) {
            const double d1 = r1.at(i, j) - w.at(i, j);
            const double d2 = r2.at(i, j) - w.at(i, j);
            out[j] += 0.5 * d1 * d1 + 0.5 * d2 * d2;
        }
    return out;
}

// ---- POT thresholding ----

struct PotResult {
    double threshold = 0.0;
    double anchor = 0.0;  // initial quantile u
    double gamma = 0.0;   // GPD shape
    double sigma = 0.0;   // GPD scale
    bool fallback = false;
    std::size_t n_exceedances = 0;
};

namespace detail {

inline double empirical_quantile(std::vector<double> sorted_unsafe, double q) {
    std::sort(sorted_unsafe.begin(), sorted_unsafe.end());
    const auto n = sorted_unsafe.size();
    const auto idx = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(n - 1),
                         std::floor(q * static_cast<double>(n - 1))));
    return sorted_unsafe[idx];
}

} // namespace detail

// Fits a generalized Pareto tail to exceedances over the q-quantile anchor by
// profile maximum likelihood on a bracketed tau = gamma/sigma grid (Grimshaw's
// reduction), then extrapolates the coeff-level threshold. Fewer than 8
// exceedances falls back to the empirical (1 - coeff) quantile.
inline PotResult pot_threshold(const std::vector<double>& train_scores, double q = 0.98,
                               double coeff = 1e-4) {
    if (train_scores.empty()) throw ContractError("pot_threshold: empty scores");
    if (q <= 0.0 || q >= 1.0) throw ContractError("pot_threshold: q must lie in (0, 1)");
    PotResult res;
    res.anchor = detail::empirical_quantile(train_scores, q);

    std::vector<double> y;
    for (double s : train_scores)
        if (s > res.anchor) y.push_back(s - res.anchor);
    res.n_exceedances = y.size();
    const auto n_total = static_cast<double>(train_scores.size());

    if (y.size() < 8) {
        res.fallback = true;
        res.threshold = detail::empirical_quantile(train_scores, 1.0 - coeff);
        return res;
    }

    const auto n_u = static_cast<double>(y.size());
    double y_max = 0.0, y_mean = 0.0;
    for (double v : y) {
        y_max = std::max(y_max, v);
        y_mean += v;
    }
    y_mean /= n_u;

    // Exponential limit (gamma -> 0) as the baseline candidate.
    double best_gamma = 0.0;
    double best_sigma = y_mean;
    double best_ll = -n_u * std::log(y_mean) - n_u;

    auto consider = [&](double tau) {
        if (tau == 0.0 || tau <= -1.0 / y_max) return;
        double xi = 0.0;
        for (double v : y) xi += std::log1p(tau * v);
        xi /= n_u;
        if (xi == 0.0) return;
        const double sigma = xi / tau;
        if (sigma <= 0.0) return;
        const double ll = -n_u * std::log(sigma) - n_u * (1.0 + xi);
        if (std::isfinite(ll) && ll > best_ll) {
            best_ll = ll;
            best_gamma = xi;
            best_sigma = sigma;
        }
    };
    const int grid = 400;
    for (int i = 1; i <= grid; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(grid);
        consider(-0.999 / y_max * f);        // bounded-tail branch
        consider(f * f * 100.0 / y_mean);    // heavy-tail branch, denser near 0
    }

    res.gamma = best_gamma;
    res.sigma = best_sigma;
    const double ratio = coeff * n_total / n_u;
    if (std::abs(best_gamma) < 1e-8)
        res.threshold = res.anchor + best_sigma * std::log(n_u / (coeff * n_total));
    else
        res.threshold =
            res.anchor + best_sigma / best_gamma * (std::pow(ratio, -best_gamma) - 1.0);
    res.threshold = std::max(res.threshold, res.anchor);
    return res;
}

// Median absolute deviation of the trailing scores from their median.
inline double recent_deviation(const std::vector<double>& recent) {
    if (recent.empty()) throw ContractError("recent_deviation: empty input");
    auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    const double med = median_of(recent);
    std::vector<double> dev(recent.size());
    for (std::size_t i = 0; i < recent.size(); ++i) dev[i] = std::abs(recent[i] - med);
    return median_of(dev);
}

// mPOT = POT + alpha * MAD(recent window).
inline double mpot_threshold(double base_pot, const std::vector<double>& recent_scores,
                             double alpha) {
    if (alpha < 0.0) throw ContractError("mpot_threshold: alpha must be >= 0");
    return base_pot + alpha * recent_deviation(recent_scores);
}

// Moving average over the trailing N scores, prefix-truncated at the start.
inline std::vector<double> mat_threshold(const std::vector<double>& scores, std::size_t N) {
    if (N < 1) throw ContractError("mat_threshold: N must be >= 1");
    std::vector<double> out(scores.size(), 0.0);
    double acc = 0.0;
    for (std::size_t t = 0; t < scores.size(); ++t) {
        acc += scores[t];
        if (t >= N) acc -= scores[t - N];
        out[t] = acc / static_cast<double>(std::min(t + 1, N));
    }
    return out;
}

// Trailing-window mean and population standard deviation.
inline std::pair<std::vector<double>, std::vector<double>> rolling_stats(
    const std::vector<double>& series, std::size_t W) {
    if (W < 1) throw ContractError("rolling_stats: W must be >= 1");
    std::vector<double> mu(series.size(), 0.0), sigma(series.size(), 0.0);
    for (std::size_t t = 0; t < series.size(); ++t) {
        const std::size_t lo = t + 1 >= W ? t + 1 - W : 0;
        const auto n = static_cast<double>(t - lo + 1);
        double m = 0.0;
        for (std::size_t i = lo; i <= t; ++i) m += series[i];
        m /= n;
        double v = 0.0;
        for (std::size_t i = lo; i <= t; ++i) v += (series[i] - m) * (series[i] - m);
        mu[t] = m;
        sigma[t] = std::sqrt(v / n);
    }
    return {mu, sigma};
}

// Appends rolling mean/std channels (2 per feature) to a series matrix.
inline Matrix append_rolling_stats(const Matrix& series, std::size_t W) {
    Matrix out(series.rows, series.cols * 3);
    for (std::size_t j = 0; j < series.cols; ++j) {
        std::vector<double> col(series.rows);
        for (std::size_t i = 0; i < series.rows; ++i) col[i] = series.at(i, j);
        auto [mu, sigma] = rolling_stats(col, W);
        for (std::size_t i = 0; i < series.rows; ++i) {
            out.at(i, j) = col[i];
            out.at(i, series.cols + 2 * j) = mu[i];
            out.at(i, series.cols + 2 * j + 1) = sigma[i];
        }
    }
    return out;
}

// ---- evaluation ----

struct EvalReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    bool point_adjust = false;

    nlohmann::json to_json() const {
        return nlohmann::json{{"schema_version", 1}, {"precision", precision},
                              {"recall", recall},   {"f1", f1},
                              {"tp", tp},           {"fp", fp},
                              {"tn", tn},           {"fn", fn},
                              {"point_adjust", point_adjust}};
    }
};

// Confusion counts with optional point-adjust: any hit inside a contiguous
// true-anomaly segment credits the whole segment before counting.
inline EvalReport evaluate(const std::vector<int>& decisions, const std::vector<int>& labels,
                           bool point_adjust) {
    if (decisions.size() != labels.size())
        throw ContractError("evaluate: " + std::to_string(decisions.size()) + " decisions vs " +
                            std::to_string(labels.size()) + " labels");
    std::vector<int> dec = decisions;
    if (point_adjust) {
        std::size_t t = 0;
        while (t < labels.size()) {
            if (labels[t] == 1) {
                std::size_t end = t;
                while (end < labels.size() && labels[end] == 1) ++end;
                bool hit = false;
                for (std::size_t i = t; i < end; ++i) hit |= (dec[i] == 1);
                if (hit)
                    for (std::size_t i = t; i < end; ++i) dec[i] = 1;
                t = end;
            } else {
                ++t;
            }
        }
    }
    EvalReport r;
    r.point_adjust = point_adjust;
    for (std::size_t i = 0; i < dec.size(); ++i) {
        if (dec[i] == 1 && labels[i] == 1) ++r.tp;
        else if (dec[i] == 1 && labels[i] == 0) ++r.fp;
        else if (dec[i] == 0 && labels[i] == 1) ++r.fn;
        else ++r.tn;
    }
    r.precision = (r.tp + r.fp) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp)
                                    : 0.0;
    r.recall = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn)
                                 : 0.0;
    r.f1 = (r.precision + r.recall) > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
}

// ---- EACS ----

struct EacsInput {
    double f1 = 0.0;
    double training_time_seconds = 0.0;
    double parameter_count = 0.0;
    double max_f1 = 1.0;
    double max_training_time = 1.0;
    double max_parameter_count = 1.0;
};

// Weighted combination of normalized F1, inverted training time, and inverted
// parameter count.
inline double eacs(const EacsInput& in, double w_acc = 0.4, double w_time = 0.4,
                   double w_params = 0.2) {
    if (in.max_f1 <= 0.0 || in.max_training_time <= 0.0 || in.max_parameter_count <= 0.0)
        throw ContractError("eacs: cohort maxima must be > 0");
    return w_acc * (in.f1 / in.max_f1) +
           w_time * (1.0 - in.training_time_seconds / in.max_training_time) +
           w_params * (1.0 - in.parameter_count / in.max_parameter_count);
}

// ---- model inference pathway ----

struct ScoreOptions {
    std::size_t chunk = 64; // fixed batching keeps batch-norm statistics reproducible
    double iterative_eps = 1e-5;
    int iterative_max_iters = 5;
};

namespace detail {

inline Matrix tensor_to_matrix(const Tensor& t) {
    Matrix m(t.rows(), t.cols());
    m.data = t.data();
    return m;
}

} // namespace detail

// Per-timestamp anomaly scores for a window set. per_dim, when non-null,
// receives a T x m matrix of per-dimension scores.
inline std::vector<double> compute_scores(AnomalyModel& model, const WindowSet& ws,
                                          Matrix* per_dim = nullptr,
                                          const ScoreOptions& opt = {}) {
    const std::size_t T = ws.windows.size();
    std::vector<double> scores(T, 0.0);
    if (per_dim) *per_dim = Matrix(T, model.feature_count());
    Rng rng(0);
    for (std::size_t start = 0; start < T; start += opt.chunk) {
        const std::size_t end = std::min(start + opt.chunk, T);
        std::vector<Matrix> part(ws.windows.begin() + static_cast<std::ptrdiff_t>(start),
                                 ws.windows.begin() + static_cast<std::ptrdiff_t>(end));
        Graph g;
        std::vector<Tensor> wins;
        wins.reserve(part.size());
        for (const auto& w : part) wins.push_back(Graph::leaf(w.rows, w.cols, w.data, false));

        std::vector<Matrix> r1(part.size()), r2(part.size());
        switch (model.genome().phase_type) {
        case PhaseType::OnePhase: {
            auto outs = model.forward_batch(g, wins, nullptr, {0}, false, rng);
            for (std::size_t i = 0; i < part.size(); ++i) {
                r1[i] = detail::tensor_to_matrix(outs[0][i]);
                r2[i] = r1[i];
            }
            break;
        }
        case PhaseType::TwoPhase: {
            auto pass1 = model.forward_batch(g, wins, nullptr, {0}, false, rng);
            std::vector<Tensor> focus(part.size());
            for (std::size_t i = 0; i < part.size(); ++i) {
                Tensor d = sub(g, pass1[0][i], wins[i]);
                focus[i] = mul(g, d, d);
            }
            auto pass2 = model.forward_batch(g, wins, &focus, {0, 1}, false, rng);
            for (std::size_t i = 0; i < part.size(); ++i) {
                r1[i] = detail::tensor_to_matrix(pass2[0][i]);
                r2[i] = detail::tensor_to_matrix(pass2[1][i]);
            }
            break;
        }
        case PhaseType::Iterative: {
            IterativeResult res = iterative_loss(g, model, wins, opt.iterative_eps,
                                                 opt.iterative_max_iters, 0.0, false, rng);
            for (std::size_t i = 0; i < part.size(); ++i) {
                r1[i] = detail::tensor_to_matrix(res.best_recon[i]);
                r2[i] = r1[i];
            }
            break;
        }
        }
        for (std::size_t i = 0; i < part.size(); ++i) {
            scores[start + i] = anomaly_score(r1[i], r2[i], part[i]);
            if (per_dim) {
                auto pd = anomaly_score_per_dim(r1[i], r2[i], part[i]);
                for (std::size_t j = 0; j < pd.size(); ++j) per_dim->at(start + i, j) = pd[j];
            }
        }
    }
    return scores;
}

// ---- score series + export ----

struct ScoreSeries {
    std::vector<double> scores;
    std::vector<double> threshold_trace;
    std::vector<int> decisions;

    static ScoreSeries from_threshold(std::vector<double> scores, double threshold) {
        ScoreSeries s;
        s.threshold_trace.assign(scores.size(), threshold);
        s.scores = std::move(scores);
        s.refresh_decisions();
        return s;
    }

    static ScoreSeries from_trace(std::vector<double> scores, std::vector<double> trace) {
        if (scores.size() != trace.size())
            throw ContractError("ScoreSeries: trace length mismatch");
        ScoreSeries s;
        s.scores = std::move(scores);
        s.threshold_trace = std::move(trace);
        s.refresh_decisions();
        return s;
    }

    void refresh_decisions() {
        decisions.resize(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i)
            decisions[i] = scores[i] > threshold_trace[i] ? 1 : 0;
    }
};

inline void save_score_series_csv(const std::string& path, const ScoreSeries& s,
                                  const std::vector<int>* labels = nullptr) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out.precision(17);
    out << "timestamp,score,threshold,decision";
    if (labels) out << ",label";
    out << "\n";
    for (std::size_t t = 0; t < s.scores.size(); ++t) {
        out << t << "," << s.scores[t] << "," << s.threshold_trace[t] << "," << s.decisions[t];
        if (labels) out << "," << (*labels)[t];
        out << "\n";
    }
}

} // namespace tsnas

#endif
