#ifndef TSNAS_TRAINING_HPP
#define TSNAS_TRAINING_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <json.hpp>

#include "tsnas/dataset.hpp"
#include "tsnas/model.hpp"
#include "tsnas/tensor.hpp"

namespace tsnas {

struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrainConfig {
    int epochs = 10;
    std::uint64_t seed = 0;
    std::optional<double> max_train_seconds;
    double val_fraction = 0.1;  // tail split of train windows, [0, 0.5)
    int early_stop_patience = 3;
    double iterative_eps = 1e-5;
    int iterative_max_iters = 5;
    double self_adv_weight = 0.0; // optional regularizer on L_self-adv
    double grad_clip_norm = 5.0;

    void validate() const {
        if (epochs < 1) throw ContractError("TrainConfig: epochs must be >= 1");
        if (val_fraction < 0.0 || val_fraction >= 0.5)
            throw ContractError("TrainConfig: val_fraction must lie in [0, 0.5)");
        if (iterative_eps <= 0.0) throw ContractError("TrainConfig: iterative_eps must be > 0");
        if (iterative_max_iters < 1)
            throw ContractError("TrainConfig: iterative_max_iters must be >= 1");
    }
};

struct TrainReport {
    double final_train_loss = 0.0;
    std::vector<double> loss_curve;     // one entry per completed epoch
    double wall_clock_seconds = 0.0;
    bool stopped_early = false;
    bool diverged = false;
    std::size_t optimizer_steps = 0;
    std::size_t non_converged_batches = 0; // iterative phase only

    nlohmann::json to_json() const {
        return nlohmann::json{{"schema_version", 1},
                              {"final_train_loss", final_train_loss},
                              {"loss_curve", loss_curve},
                              {"wall_clock_seconds", wall_clock_seconds},
                              {"stopped_early", stopped_early},
                              {"diverged", diverged},
                              {"optimizer_steps", optimizer_steps},
                              {"non_converged_batches", non_converged_batches}};
    }
};

// Adam with global-norm gradient clipping.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Tensor>& params, double lr, double clip_norm = 5.0,
                  double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : params_(params), lr_(lr), clip_(clip_norm), b1_(beta1), b2_(beta2), eps_(eps) {
        for (const auto& p : params_) {
            m_.emplace_back(p.size(), 0.0);
            v_.emplace_back(p.size(), 0.0);
        }
    }

    void step() {
        ++t_;
        double sq = 0.0;
        for (auto& p : params_)
            for (double gv : p.grad()) sq += gv * gv;
        const double norm = std::sqrt(sq);
        const double scale = (clip_ > 0.0 && norm > clip_) ? clip_ / norm : 1.0;
        const double c1 = 1.0 - std::pow(b1_, t_);
        const double c2 = 1.0 - std::pow(b2_, t_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& data = params_[i].data();
            auto& grad = params_[i].grad();
            for (std::size_t j = 0; j < data.size(); ++j) {
                const double gv = grad[j] * scale;
                m_[i][j] = b1_ * m_[i][j] + (1.0 - b1_) * gv;
                v_[i][j] = b2_ * v_[i][j] + (1.0 - b2_) * gv * gv;
                data[j] -= lr_ * (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + eps_);
            }
        }
    }

private:
    std::vector<Tensor>& params_;
    double lr_, clip_, b1_, b2_, eps_;
    int t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// ---- per-batch losses (exposed for gradient-check tests) ----

inline Tensor batch_mse(Graph& g, const std::vector<Tensor>& recon,
                        const std::vector<Tensor>& target) {
    std::vector<Tensor> terms(recon.size());
    for (std::size_t i = 0; i < recon.size(); ++i) terms[i] = squared_error(g, recon[i], target[i]);
    Tensor acc = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) acc = add(g, acc, terms[i]);
    return scale(g, acc, 1.0 / static_cast<double>(recon.size()));
}

inline Tensor one_phase_loss(Graph& g, AnomalyModel& model, const std::vector<Tensor>& windows,
                             bool training, Rng& rng) {
    auto outs = model.forward_batch(g, windows, nullptr, {0}, training, rng);
    return batch_mse(g, outs[0], windows);
}

struct TwoPhaseLosses {
    Tensor focus; // mean ||O_initial - W||^2
    Tensor adv1;  // mean ||O_adv1 - W||^2
    Tensor adv2;  // -mean ||O_adv2 - W||^2
    Tensor total; // w_n * focus + (1 - w_n) * (adv1 + adv2)
    std::vector<Tensor> initial_recon;
    std::vector<Tensor> adv1_recon;
    std::vector<Tensor> adv2_recon;
};

// Pass 1 reconstructs with a zero condition; the elementwise focus score
// (O_initial - W)^2 conditions pass 2 through both decoders. Gradient flows
// through the focus path.
inline TwoPhaseLosses two_phase_losses(Graph& g, AnomalyModel& model,
                                       const std::vector<Tensor>& windows, double w_n,
                                       bool training, Rng& rng) {
    if (model.n_decoders() != 2)
        throw ContractError("two_phase_losses: model does not have two decoders");
    TwoPhaseLosses out;
    auto pass1 = model.forward_batch(g, windows, nullptr, {0}, training, rng);
    out.initial_recon = pass1[0];
    std::vector<Tensor> focus(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
        Tensor d = sub(g, pass1[0][i], windows[i]);
        focus[i] = mul(g, d, d);
    }
    auto pass2 = model.forward_batch(g, windows, &focus, {0, 1}, training, rng);
    out.adv1_recon = pass2[0];
    out.adv2_recon = pass2[1];
    out.focus = batch_mse(g, pass1[0], windows);
    out.adv1 = batch_mse(g, pass2[0], windows);
    out.adv2 = scale(g, batch_mse(g, pass2[1], windows), -1.0);
    Tensor adv = add(g, out.adv1, out.adv2);
    out.total = add(g, scale(g, out.focus, w_n), scale(g, adv, 1.0 - w_n));
    return out;
}

struct IterativeResult {
    Tensor best_loss;                 // loss tensor of the best iteration
    std::vector<double> iter_losses;  // recorded per-iteration loss values
    bool converged = false;           // delta-L dropped below eps
    double last_self_adv = 0.0;       // (L_prev - L_current)^2 at the stop point
    std::vector<Tensor> best_recon;
    Tensor objective;                 // best_loss (+ optional self-adv term)
};

// Inner refinement loop: each pass conditions on the previous reconstruction's
// squared deviation; halts the first time |L_cur - L_prev| < eps or at
// max_iters. The smallest-loss iteration supplies the training signal.
inline IterativeResult iterative_loss(Graph& g, AnomalyModel& model,
                                      const std::vector<Tensor>& windows, double eps,
                                      int max_iters, double self_adv_weight, bool training,
                                      Rng& rng) {
    IterativeResult res;
    std::vector<Tensor> cond;
    const std::vector<Tensor>* cp = nullptr;
    Tensor prev_loss;
    Tensor best;
    double best_val = std::numeric_limits<double>::infinity();
    Tensor last_self_adv_t;
    for (int it = 0; it < max_iters; ++it) {
        auto outs = model.forward_batch(g, windows, cp, {0}, training, rng);
        Tensor loss = batch_mse(g, outs[0], windows);
        res.iter_losses.push_back(loss.item());
        if (loss.item() < best_val) {
            best_val = loss.item();
            best = loss;
            res.best_recon = outs[0];
        }
        if (prev_loss.valid()) {
            Tensor d = sub(g, prev_loss, loss);
            last_self_adv_t = mul(g, d, d);
            res.last_self_adv = last_self_adv_t.item();
            if (std::abs(loss.item() - prev_loss.item()) < eps) {
                res.converged = true;
                break;
            }
        }
        prev_loss = loss;
        cond.resize(windows.size());
        for (std::size_t i = 0; i < windows.size(); ++i) {
            Tensor d = sub(g, outs[0][i], windows[i]);
            cond[i] = mul(g, d, d);
        }
        cp = &cond;
    }
    res.best_loss = best;
    res.objective = best;
    if (self_adv_weight > 0.0 && last_self_adv_t.valid())
        res.objective = add(g, best, scale(g, last_self_adv_t, self_adv_weight));
    return res;
}

// ---- training drivers ----

namespace detail {

inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1],
                  idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
}

inline AugmentSpec augment_spec_from(const Genome& g) {
    AugmentSpec s;
    s.gaussian_noise_std = g.gaussian_noise;
    s.time_warping = g.time_warping;
    s.time_masking = g.time_masking;
    return s;
}

inline std::vector<Tensor> to_tensors(const std::vector<Matrix>& mats) {
    std::vector<Tensor> out;
    out.reserve(mats.size());
    for (const auto& m : mats) out.push_back(Graph::leaf(m.rows, m.cols, m.data, false));
    return out;
}

// Plain reconstruction loss on a held-out slice, inference mode.
inline double validation_loss(AnomalyModel& model, const std::vector<Matrix>& val_windows) {
    if (val_windows.empty()) return 0.0;
    Graph g;
    Rng rng(0);
    double acc = 0.0;
    const std::size_t chunk = 64;
    std::size_t count = 0;
    for (std::size_t i = 0; i < val_windows.size(); i += chunk) {
        const std::size_t end = std::min(i + chunk, val_windows.size());
        std::vector<Matrix> part(val_windows.begin() + static_cast<std::ptrdiff_t>(i),
                                 val_windows.begin() + static_cast<std::ptrdiff_t>(end));
        auto wins = to_tensors(part);
        auto outs = model.forward_batch(g, wins, nullptr, {0}, false, rng);
        acc += batch_mse(g, outs[0], wins).item() * static_cast<double>(part.size());
        count += part.size();
        g.reset();
    }
    return acc / static_cast<double>(count);
}

} // namespace detail

// Shared driver: phase dispatch happens per batch through the loss builders.
inline TrainReport train_model(AnomalyModel& model, const std::vector<Matrix>& windows,
                               const TrainConfig& cfg) {
    cfg.validate();
    const Genome& genome = model.genome();
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    const std::size_t n_val =
        static_cast<std::size_t>(cfg.val_fraction * static_cast<double>(windows.size()));
    const std::size_t n_train = windows.size() - n_val;
    if (n_train == 0) throw ContractError("train: no training windows after validation split");
    std::vector<Matrix> train_windows(windows.begin(),
                                      windows.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<Matrix> val_windows(windows.begin() + static_cast<std::ptrdiff_t>(n_train),
                                    windows.end());

    TrainReport report;
    Rng rng(cfg.seed);
    AdamOptimizer opt(model.parameters(), genome.learning_rate, cfg.grad_clip_norm);
    const AugmentSpec aug = detail::augment_spec_from(genome);
    const auto B = static_cast<std::size_t>(genome.batch_size);

    double best_val = std::numeric_limits<double>::infinity();
    int patience_left = cfg.early_stop_patience;
    double initial_loss = std::numeric_limits<double>::quiet_NaN();
    bool stop_all = false;

    for (int epoch = 0; epoch < cfg.epochs && !stop_all; ++epoch) {
        std::vector<std::size_t> order(n_train);
        std::iota(order.begin(), order.end(), std::size_t{0});
        detail::shuffle_indices(order, rng);
        const double w_n = std::pow(0.95, epoch);

        double epoch_loss = 0.0;
        std::size_t epoch_batches = 0;
        for (std::size_t start = 0; start < n_train; start += B) {
            const std::size_t end = std::min(start + B, n_train);
            std::vector<Matrix> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(train_windows[order[i]]);
            batch = augment(batch, aug, rng);
            auto wins = detail::to_tensors(batch);

            Graph g;
            double loss_val = 0.0;
            switch (genome.phase_type) {
            case PhaseType::OnePhase: {
                Tensor loss = one_phase_loss(g, model, wins, true, rng);
                loss_val = loss.item();
                g.backward(loss);
                break;
            }
            case PhaseType::TwoPhase: {
                TwoPhaseLosses l = two_phase_losses(g, model, wins, w_n, true, rng);
                loss_val = l.total.item();
                g.backward(l.total);
                break;
            }
            case PhaseType::Iterative: {
                IterativeResult r =
                    iterative_loss(g, model, wins, cfg.iterative_eps, cfg.iterative_max_iters,
                                   cfg.self_adv_weight, true, rng);
                if (!r.converged && cfg.iterative_max_iters > 1) ++report.non_converged_batches;
                loss_val = r.objective.item();
                g.backward(r.objective);
                break;
            }
            }
            if (!std::isfinite(loss_val))
                throw TrainingError("non-finite training loss (lr=" +
                                    std::to_string(genome.learning_rate) + ", batch index " +
                                    std::to_string(epoch_batches) + ")");
            if (std::isnan(initial_loss)) initial_loss = std::abs(loss_val) + 1e-12;
            if (std::abs(loss_val) > 1e3 * initial_loss) {
                report.diverged = true;
                stop_all = true;
                break;
            }
            opt.step();
            model.zero_grad();
            ++report.optimizer_steps;
            epoch_loss += loss_val;
            ++epoch_batches;

            if (cfg.max_train_seconds && elapsed() > *cfg.max_train_seconds) {
                report.stopped_early = true;
                stop_all = true;
                break;
            }
        }
        if (epoch_batches > 0) {
            epoch_loss /= static_cast<double>(epoch_batches);
            report.loss_curve.push_back(epoch_loss);
            report.final_train_loss = epoch_loss;
        }
        if (stop_all) break;

        if (!val_windows.empty()) {
            const double vl = detail::validation_loss(model, val_windows);
            if (vl < best_val - 1e-12) {
                best_val = vl;
                patience_left = cfg.early_stop_patience;
            } else if (--patience_left <= 0) {
                report.stopped_early = true;
                break;
            }
        }
    }
    report.wall_clock_seconds = std::max(elapsed(), 1e-9);
    return report;
}

inline TrainReport train_1phase(AnomalyModel& model, const std::vector<Matrix>& windows,
                                const TrainConfig& cfg) {
    if (model.genome().phase_type != PhaseType::OnePhase)
        throw ContractError("train_1phase: genome phase_type is not 1phase");
    return train_model(model, windows, cfg);
}

inline TrainReport train_2phase(AnomalyModel& model, const std::vector<Matrix>& windows,
                                const TrainConfig& cfg) {
    if (model.genome().phase_type != PhaseType::TwoPhase)
        throw ContractError("train_2phase: genome phase_type is not 2phase");
    return train_model(model, windows, cfg);
}

inline TrainReport train_iterative(AnomalyModel& model, const std::vector<Matrix>& windows,
                                   const TrainConfig& cfg) {
    if (model.genome().phase_type != PhaseType::Iterative)
        throw ContractError("train_iterative: genome phase_type is not iterative");
    return train_model(model, windows, cfg);
}

} // namespace tsnas

#endif
