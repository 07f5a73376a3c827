#ifndef TSNAS_MODEL_HPP
#define TSNAS_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "tsnas/dataset.hpp"
#include "tsnas/genome.hpp"
#include "tsnas/tensor.hpp"

namespace tsnas {

// ---- positional encodings ----

// Sinusoidal: PE(t,2i)=sin(t/10000^(2i/d)), PE(t,2i+1)=cos(same argument).
// Fourier: sin/cos of t*f_j with f_j log-uniform in [1/K, 1], fixed by seed,
// non-trainable.
inline Matrix positional_encoding(PosEncoding kind, std::size_t K, std::size_t d_model,
                                  std::uint64_t seed) {
    Matrix pe(K, d_model);
    if (kind == PosEncoding::Sinusoidal) {
        for (std::size_t t = 0; t < K; ++t)
            for (std::size_t i = 0; i < d_model; ++i) {
                const double exponent =
                    static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model);
                const double arg = static_cast<double>(t) / std::pow(10000.0, exponent);
                pe.at(t, i) = (i % 2 == 0) ? std::sin(arg) : std::cos(arg);
            }
    } else {
        Rng rng(seed);
        const std::size_t n_freq = (d_model + 1) / 2;
        std::vector<double> freq(n_freq);
        for (auto& f : freq) f = rng.log_uniform(1.0 / static_cast<double>(K), 1.0);
        for (std::size_t t = 0; t < K; ++t)
            for (std::size_t i = 0; i < d_model; ++i) {
                const double arg = static_cast<double>(t) * freq[i / 2];
                pe.at(t, i) = (i % 2 == 0) ? std::sin(arg) : std::cos(arg);
            }
    }
    return pe;
}

// ---- building blocks ----

struct LinearLayer {
    Tensor W; // in x out
    Tensor b; // 1 x out
};

struct AttnParams {
    Tensor Wq, Wk, Wv, Wo; // each d x d
};

struct NormParams {
    Tensor gamma, beta; // each 1 x d
};

struct FfnParams {
    std::vector<LinearLayer> hidden; // first d->dff, rest dff->dff
    LinearLayer proj;                // dff -> d
};

struct EncoderLayerParams {
    AttnParams attn;
    NormParams norm1;
    FfnParams ffn;
    NormParams norm2;
};

struct DecoderLayerParams {
    AttnParams self_attn;
    NormParams norm1;
    AttnParams cross_attn;
    NormParams norm2;
    FfnParams ffn;
    NormParams norm3;
};

inline Tensor apply_linear(Graph& g, const Tensor& x, const LinearLayer& l) {
    return add_rowvec(g, matmul(g, x, l.W), l.b);
}

inline Tensor apply_activation(Graph& g, const Tensor& x, Activation act) {
    switch (act) {
    case Activation::Relu: return relu(g, x);
    case Activation::LeakyRelu: return leaky_relu(g, x, 0.01);
    case Activation::Sigmoid: return sigmoid(g, x);
    default: return tanh_op(g, x);
    }
}

// Scaled dot-product attention over one sequence, scale 1/sqrt(d_head of the
// given tensors).
inline Tensor scaled_dot_attention(Graph& g, const Tensor& Q, const Tensor& K, const Tensor& V) {
    const double s = 1.0 / std::sqrt(static_cast<double>(Q.cols()));
    Tensor logits = scale(g, matmul(g, Q, transpose(g, K)), s);
    return matmul(g, softmax_rows(g, logits), V);
}

// Projects q/k/v, splits into heads of width d/n_heads, attends per head,
// concatenates and output-projects.
inline Tensor multi_head_attention(Graph& g, const Tensor& q_in, const Tensor& k_in,
                                   const Tensor& v_in, const AttnParams& p,
                                   std::size_t n_heads) {
    const std::size_t d = q_in.cols();
    if (n_heads == 0 || d % n_heads != 0)
        throw DimensionError("multi_head_attention: width " + std::to_string(d) +
                             " not divisible by " + std::to_string(n_heads) + " heads");
    const std::size_t dh = d / n_heads;
    Tensor Q = matmul(g, q_in, p.Wq);
    Tensor K = matmul(g, k_in, p.Wk);
    Tensor V = matmul(g, v_in, p.Wv);
    std::vector<Tensor> heads;
    heads.reserve(n_heads);
    for (std::size_t h = 0; h < n_heads; ++h) {
        Tensor Qh = slice_cols(g, Q, h * dh, (h + 1) * dh);
        Tensor Kh = slice_cols(g, K, h * dh, (h + 1) * dh);
        Tensor Vh = slice_cols(g, V, h * dh, (h + 1) * dh);
        heads.push_back(scaled_dot_attention(g, Qh, Kh, Vh));
    }
    return matmul(g, concat_cols(g, heads), p.Wo);
}

// ---- the model ----

class AnomalyModel {
public:
    AnomalyModel() = default;

    // Deterministic build from (genome, m, seed). n_heads is pinned to the
    // feature dimension here, matching the search-space rule.
    static AnomalyModel build(Genome genome, std::size_t m, std::uint64_t seed = 0) {
        genome.validate();
        if (m < 1) throw ContractError("build: m must be >= 1");
        genome.n_heads = static_cast<int>(m);
        AnomalyModel mdl;
        mdl.genome_ = genome;
        mdl.m_ = m;
        mdl.d_model_ = 2 * m;
        mdl.seed_ = seed;
        Rng rng(seed);

        const std::size_t d = mdl.d_model_;
        const auto dff = static_cast<std::size_t>(genome.dim_feedforward);

        if (genome.use_linear_embedding) {
            mdl.embed_ = mdl.make_linear(rng, mdl.input_width(), d);
        }
        for (int l = 0; l < genome.encoder_layers; ++l) {
            EncoderLayerParams lay;
            lay.attn = mdl.make_attn(rng, d);
            lay.norm1 = mdl.make_norm(d);
            lay.ffn = mdl.make_ffn(rng, d, dff, static_cast<std::size_t>(genome.ffn_layers));
            lay.norm2 = mdl.make_norm(d);
            mdl.encoder_.push_back(std::move(lay));
        }
        const std::size_t n_decoders = genome.phase_type == PhaseType::TwoPhase ? 2 : 1;
        for (std::size_t s = 0; s < n_decoders; ++s) {
            std::vector<DecoderLayerParams> stack;
            for (int l = 0; l < genome.decoder_layers; ++l) {
                DecoderLayerParams lay;
                lay.self_attn = mdl.make_attn(rng, d);
                lay.norm1 = mdl.make_norm(d);
                lay.cross_attn = mdl.make_attn(rng, d);
                lay.norm2 = mdl.make_norm(d);
                lay.ffn = mdl.make_ffn(rng, d, dff, static_cast<std::size_t>(genome.ffn_layers));
                lay.norm3 = mdl.make_norm(d);
                stack.push_back(std::move(lay));
            }
            mdl.decoders_.push_back(std::move(stack));
        }
        mdl.output_ = mdl.make_linear(rng, d, m);
        mdl.pos_ = positional_encoding(genome.pos_encoding,
                                       static_cast<std::size_t>(genome.window_size), d, seed);
        mdl.pos_tensor_ = Graph::leaf(mdl.pos_.rows, mdl.pos_.cols, mdl.pos_.data, false);
        return mdl;
    }

    const Genome& genome() const { return genome_; }
    std::size_t feature_count() const { return m_; }
    std::size_t d_model() const { return d_model_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t n_decoders() const { return decoders_.size(); }
    std::vector<Tensor>& parameters() { return params_; }
    const std::vector<Tensor>& parameters() const { return params_; }

    // The condition channel exists for every non-1phase model (the second
    // phase / iteration feeds a focus signal back) and for self-conditioned
    // 1phase models.
    bool has_condition_channel() const {
        return genome_.phase_type != PhaseType::OnePhase || genome_.self_conditioning;
    }

    std::size_t input_width() const { return has_condition_channel() ? 2 * m_ : m_; }

    // NAS objective f2: exact count of trainable scalar entries.
    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p.size();
        return n;
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    // Reconstructions for a batch of K x m windows from the requested decoder
    // stacks. conditions, when present, must match the batch in shape;
    // gradient flows through them so in-graph focus scores backpropagate.
    std::vector<std::vector<Tensor>> forward_batch(Graph& g, const std::vector<Tensor>& windows,
                                                   const std::vector<Tensor>* conditions,
                                                   const std::vector<std::size_t>& decoder_ids,
                                                   bool training, Rng& rng) {
        const std::size_t B = windows.size();
        if (B == 0) throw ContractError("forward_batch: empty batch");
        const auto K = static_cast<std::size_t>(genome_.window_size);
        for (const auto& w : windows)
            if (w.rows() != K || w.cols() != m_)
                throw DimensionError("forward_batch: window " + shape_str(w) + ", expected " +
                                     std::to_string(K) + "x" + std::to_string(m_));
        if (conditions && conditions->size() != B)
            throw DimensionError("forward_batch: condition count mismatch");

        // Embed + positional encoding.
        std::vector<Tensor> z(B);
        for (std::size_t i = 0; i < B; ++i) {
            Tensor xin = windows[i];
            if (has_condition_channel()) {
                Tensor cond = conditions ? (*conditions)[i] : Graph::zeros(K, m_);
                xin = concat_cols(g, {windows[i], cond});
            }
            Tensor e;
            if (genome_.use_linear_embedding) {
                e = apply_linear(g, xin, embed_);
            } else if (has_condition_channel()) {
                e = xin; // width 2m == d_model already
            } else {
                e = concat_cols(g, {windows[i], windows[i]});
            }
            z[i] = add(g, e, pos_tensor_);
        }

        // Encoder stack; the embedded sequence is kept as the decoder query.
        std::vector<Tensor> embedded = z;
        for (const auto& lay : encoder_) {
            std::vector<Tensor> attn_out(B);
            for (std::size_t i = 0; i < B; ++i) {
                Tensor a = multi_head_attention(g, z[i], z[i], z[i], lay.attn,
                                                static_cast<std::size_t>(genome_.n_heads));
                attn_out[i] = add(g, z[i], dropout(g, a, genome_.dropout, rng, training));
            }
            std::vector<Tensor> normed = apply_norm(g, attn_out, lay.norm1);
            for (std::size_t i = 0; i < B; ++i) {
                Tensor f = apply_ffn(g, normed[i], lay.ffn, training, rng);
                attn_out[i] = add(g, normed[i], f);
            }
            z = apply_norm(g, attn_out, lay.norm2);
        }
        const std::vector<Tensor>& memory = z;

        // Decoder query sequence is the embedded input window; encoder output
        // enters through cross-attention.
        const std::vector<Tensor>& query = embedded;

        std::vector<std::vector<Tensor>> outputs;
        for (std::size_t dec_id : decoder_ids) {
            if (dec_id >= decoders_.size())
                throw ContractError("forward_batch: decoder index out of range");
            std::vector<Tensor> x = query;
            for (const auto& lay : decoders_[dec_id]) {
                std::vector<Tensor> tmp(B);
                for (std::size_t i = 0; i < B; ++i) {
                    Tensor a = multi_head_attention(g, x[i], x[i], x[i], lay.self_attn,
                                                    static_cast<std::size_t>(genome_.n_heads));
                    tmp[i] = add(g, x[i], dropout(g, a, genome_.dropout, rng, training));
                }
                std::vector<Tensor> n1 = apply_norm(g, tmp, lay.norm1);
                for (std::size_t i = 0; i < B; ++i) {
                    Tensor a = multi_head_attention(g, n1[i], memory[i], memory[i],
                                                    lay.cross_attn,
                                                    static_cast<std::size_t>(genome_.n_heads));
                    tmp[i] = add(g, n1[i], dropout(g, a, genome_.dropout, rng, training));
                }
                std::vector<Tensor> n2 = apply_norm(g, tmp, lay.norm2);
                for (std::size_t i = 0; i < B; ++i) {
                    Tensor f = apply_ffn(g, n2[i], lay.ffn, training, rng);
                    tmp[i] = add(g, n2[i], f);
                }
                x = apply_norm(g, tmp, lay.norm3);
            }
            std::vector<Tensor> recon(B);
            for (std::size_t i = 0; i < B; ++i) recon[i] = apply_linear(g, x[i], output_);
            outputs.push_back(std::move(recon));
        }
        return outputs;
    }

    // Convenience single-window path through decoder 0.
    Tensor forward_one(Graph& g, const Tensor& window, const Tensor* condition, bool training,
                       Rng& rng) {
        std::vector<Tensor> win{window};
        std::vector<Tensor> cond;
        const std::vector<Tensor>* cp = nullptr;
        if (condition) {
            cond.push_back(*condition);
            cp = &cond;
        }
        return forward_batch(g, win, cp, {0}, training, rng)[0][0];
    }

    // ---- checkpoint I/O ----

    static constexpr char kMagic[8] = {'T', 'S', 'N', 'A', 'S', 'C', 'P', '1'};

    void save_checkpoint(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ParseError("cannot write checkpoint " + path);
        out.write(kMagic, 8);
        const std::string gj = genome_to_json(genome_).dump();
        write_u64(out, m_);
        write_u64(out, seed_);
        write_u64(out, gj.size());
        out.write(gj.data(), static_cast<std::streamsize>(gj.size()));
        write_u64(out, params_.size());
        for (const auto& p : params_) {
            write_u64(out, p.rows());
            write_u64(out, p.cols());
            out.write(reinterpret_cast<const char*>(p.data().data()),
                      static_cast<std::streamsize>(p.size() * sizeof(double)));
        }
    }

    static AnomalyModel load_checkpoint(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ParseError("cannot open checkpoint " + path);
        char magic[8];
        in.read(magic, 8);
        if (!in || std::string(magic, 8) != std::string(kMagic, 8))
            throw ParseError(path + ": bad checkpoint magic");
        const std::uint64_t m = read_u64(in, path);
        const std::uint64_t seed = read_u64(in, path);
        const std::uint64_t jlen = read_u64(in, path);
        std::string gj(jlen, '\0');
        in.read(gj.data(), static_cast<std::streamsize>(jlen));
        Genome genome = genome_from_json(nlohmann::json::parse(gj));
        AnomalyModel mdl = build(genome, m, seed);
        const std::uint64_t np = read_u64(in, path);
        if (np != mdl.params_.size())
            throw ParseError(path + ": parameter tensor count mismatch");
        for (auto& p : mdl.params_) {
            const std::uint64_t r = read_u64(in, path);
            const std::uint64_t c = read_u64(in, path);
            if (r != p.rows() || c != p.cols())
                throw ParseError(path + ": parameter shape mismatch");
            in.read(reinterpret_cast<char*>(p.data().data()),
                    static_cast<std::streamsize>(p.size() * sizeof(double)));
            if (!in) throw ParseError(path + ": truncated checkpoint");
        }
        return mdl;
    }

private:
    Tensor make_param(Rng& rng, std::size_t rows, std::size_t cols, bool xavier) {
        std::vector<double> data(rows * cols, 0.0);
        if (xavier) {
            const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
            for (auto& v : data) v = rng.uniform(-limit, limit);
        }
        Tensor t = Graph::leaf(rows, cols, std::move(data), true);
        params_.push_back(t);
        return t;
    }

    LinearLayer make_linear(Rng& rng, std::size_t in, std::size_t out) {
        LinearLayer l;
        l.W = make_param(rng, in, out, true);
        l.b = make_param(rng, 1, out, false);
        return l;
    }

    AttnParams make_attn(Rng& rng, std::size_t d) {
        AttnParams a;
        a.Wq = make_param(rng, d, d, true);
        a.Wk = make_param(rng, d, d, true);
        a.Wv = make_param(rng, d, d, true);
        a.Wo = make_param(rng, d, d, true);
        return a;
    }

    NormParams make_norm(std::size_t d) {
        NormParams n;
        n.gamma = Graph::leaf(1, d, std::vector<double>(d, 1.0), true);
        params_.push_back(n.gamma);
        n.beta = Graph::leaf(1, d, std::vector<double>(d, 0.0), true);
        params_.push_back(n.beta);
        return n;
    }

    FfnParams make_ffn(Rng& rng, std::size_t d, std::size_t dff, std::size_t layers) {
        FfnParams f;
        f.hidden.push_back(make_linear(rng, d, dff));
        for (std::size_t l = 1; l < layers; ++l) f.hidden.push_back(make_linear(rng, dff, dff));
        f.proj = make_linear(rng, dff, d);
        return f;
    }

    Tensor apply_ffn(Graph& g, const Tensor& x, const FfnParams& f, bool training, Rng& rng) {
        Tensor h = x;
        for (const auto& lay : f.hidden) {
            h = apply_activation(g, apply_linear(g, h, lay), genome_.activation);
            h = dropout(g, h, genome_.dropout, rng, training);
        }
        return apply_linear(g, h, f.proj);
    }

    // layer: over features per position; batch: over the whole batch per
    // feature; instance: over time per window per feature.
    std::vector<Tensor> apply_norm(Graph& g, const std::vector<Tensor>& xs,
                                   const NormParams& p) {
        std::vector<Tensor> ys(xs.size());
        switch (genome_.norm_type) {
        case NormType::Layer:
            for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = normalize_rows(g, xs[i]);
            break;
        case NormType::Instance:
            for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = normalize_cols(g, xs[i]);
            break;
        case NormType::Batch: {
            Tensor cat = concat_rows(g, xs);
            Tensor normed = normalize_cols(g, cat);
            std::size_t off = 0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                ys[i] = slice_rows(g, normed, off, off + xs[i].rows());
                off += xs[i].rows();
            }
            break;
        }
        }
        for (auto& y : ys) y = add_rowvec(g, mul_rowvec(g, y, p.gamma), p.beta);
        return ys;
    }

    static void write_u64(std::ofstream& out, std::uint64_t v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    static std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        if (!in) throw ParseError(path + ": truncated checkpoint");
        return v;
    }

    Genome genome_;
    std::size_t m_ = 0;
    std::size_t d_model_ = 0;
    std::uint64_t seed_ = 0;
    LinearLayer embed_;
    std::vector<EncoderLayerParams> encoder_;
    std::vector<std::vector<DecoderLayerParams>> decoders_;
    LinearLayer output_;
    Matrix pos_;
    Tensor pos_tensor_;
    std::vector<Tensor> params_;
};

} // namespace tsnas

#endif
