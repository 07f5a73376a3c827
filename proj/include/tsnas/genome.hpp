#ifndef TSNAS_GENOME_HPP
#define TSNAS_GENOME_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsnas/errors.hpp"

namespace tsnas {

enum class PosEncoding { Sinusoidal, Fourier };
enum class Activation { Relu, LeakyRelu, Sigmoid, Tanh };
enum class NormType { Layer, Batch, Instance };
enum class PhaseType { OnePhase, TwoPhase, Iterative };

inline std::string to_string(PosEncoding v) {
    return v == PosEncoding::Sinusoidal ? "sinusoidal" : "fourier";
}
inline std::string to_string(Activation v) {
    switch (v) {
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Sigmoid: return "sigmoid";
    default: return "tanh";
    }
}
inline std::string to_string(NormType v) {
    switch (v) {
    case NormType::Layer: return "layer";
    case NormType::Batch: return "batch";
    default: return "instance";
    }
}
inline std::string to_string(PhaseType v) {
    switch (v) {
    case PhaseType::OnePhase: return "1phase";
    case PhaseType::TwoPhase: return "2phase";
    default: return "iterative";
    }
}

namespace detail {
inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}
} // namespace detail

inline PosEncoding pos_encoding_from_string(const std::string& s) {
    const auto v = detail::lower(s);
    if (v == "sinusoidal") return PosEncoding::Sinusoidal;
    if (v == "fourier") return PosEncoding::Fourier;
    throw ValidationError("pos_encoding: '" + s + "' not in {sinusoidal, fourier}");
}
inline Activation activation_from_string(const std::string& s) {
    const auto v = detail::lower(s);
    if (v == "relu") return Activation::Relu;
    if (v == "leaky_relu") return Activation::LeakyRelu;
    if (v == "sigmoid") return Activation::Sigmoid;
    if (v == "tanh") return Activation::Tanh;
    throw ValidationError("activation: '" + s + "' not in {relu, leaky_relu, sigmoid, tanh}");
}
inline NormType norm_type_from_string(const std::string& s) {
    const auto v = detail::lower(s);
    if (v == "layer") return NormType::Layer;
    if (v == "batch") return NormType::Batch;
    if (v == "instance") return NormType::Instance;
    throw ValidationError("norm_type: '" + s + "' not in {layer, batch, instance}");
}
inline PhaseType phase_type_from_string(const std::string& s) {
    const auto v = detail::lower(s);
    if (v == "1phase") return PhaseType::OnePhase;
    if (v == "2phase") return PhaseType::TwoPhase;
    if (v == "iterative") return PhaseType::Iterative;
    throw ValidationError("phase_type: '" + s + "' not in {1phase, 2phase, iterative}");
}

// One point in the architecture/training search space.
struct Genome {
    double learning_rate = 1e-3;       // 1e-5 .. 1e-1, log scale
    double dropout = 0.1;              // 0.1 .. 0.5
    int batch_size = 32;               // 16 .. 128, step 16
    double gaussian_noise = 1e-4;      // 1e-4 .. 1e-1, log scale
    bool time_warping = false;
    bool time_masking = false;
    int window_size = 10;              // 10 .. 30
    PosEncoding pos_encoding = PosEncoding::Sinusoidal;
    int dim_feedforward = 16;          // 8 .. 128, log scale
    int encoder_layers = 1;            // 1 .. 3
    int decoder_layers = 1;            // 1 .. 3
    Activation activation = Activation::Relu;
    std::string attention = "scaled_dot_product";
    int n_heads = 1;                   // equal to feature dimension, set at build
    bool use_linear_embedding = true;
    NormType norm_type = NormType::Layer;
    bool self_conditioning = false;
    int ffn_layers = 1;                // 1 .. 3
    PhaseType phase_type = PhaseType::OnePhase;

    // Collects every out-of-range field; empty means valid.
    std::vector<std::string> validation_errors() const {
        std::vector<std::string> errs;
        auto bad = [&](const std::string& field, const std::string& range) {
            errs.push_back(field + " outside range " + range);
        };
        if (learning_rate < 1e-5 || learning_rate > 1e-1)
            bad("learning_rate", "[1e-5, 1e-1]");
        if (dropout < 0.1 || dropout > 0.5) bad("dropout", "[0.1, 0.5]");
        if (batch_size < 16 || batch_size > 128 || batch_size % 16 != 0)
            bad("batch_size", "{16, 32, ..., 128}");
        if (gaussian_noise < 1e-4 || gaussian_noise > 1e-1)
            bad("gaussian_noise", "[1e-4, 1e-1]");
        if (window_size < 10 || window_size > 30) bad("window_size", "[10, 30]");
        if (dim_feedforward < 8 || dim_feedforward > 128) bad("dim_feedforward", "[8, 128]");
        if (encoder_layers < 1 || encoder_layers > 3) bad("encoder_layers", "[1, 3]");
        if (decoder_layers < 1 || decoder_layers > 3) bad("decoder_layers", "[1, 3]");
        if (attention != "scaled_dot_product") bad("attention", "{scaled_dot_product}");
        if (n_heads < 1) bad("n_heads", "[1, inf)");
        if (ffn_layers < 1 || ffn_layers > 3) bad("ffn_layers", "[1, 3]");
        return errs;
    }

    void validate() const {
        const auto errs = validation_errors();
        if (!errs.empty()) {
            std::string msg = "invalid genome:";
            for (const auto& e : errs) msg += " " + e + ";";
            throw ValidationError(msg);
        }
    }

    bool operator==(const Genome&) const = default;
};

inline nlohmann::json genome_to_json(const Genome& g) {
    return nlohmann::json{{"learning_rate", g.learning_rate},
                          {"dropout", g.dropout},
                          {"batch_size", g.batch_size},
                          {"gaussian_noise", g.gaussian_noise},
                          {"time_warping", g.time_warping},
                          {"time_masking", g.time_masking},
                          {"window_size", g.window_size},
                          {"pos_encoding", to_string(g.pos_encoding)},
                          {"dim_feedforward", g.dim_feedforward},
                          {"encoder_layers", g.encoder_layers},
                          {"decoder_layers", g.decoder_layers},
                          {"activation", to_string(g.activation)},
                          {"attention", g.attention},
                          {"n_heads", g.n_heads},
                          {"use_linear_embedding", g.use_linear_embedding},
                          {"norm_type", to_string(g.norm_type)},
                          {"self_conditioning", g.self_conditioning},
                          {"ffn_layers", g.ffn_layers},
                          {"phase_type", to_string(g.phase_type)}};
}

inline Genome genome_from_json(const nlohmann::json& j) {
    Genome g;
    try {
        g.learning_rate = j.at("learning_rate").get<double>();
        g.dropout = j.at("dropout").get<double>();
        g.batch_size = j.at("batch_size").get<int>();
        g.gaussian_noise = j.at("gaussian_noise").get<double>();
        g.time_warping = j.at("time_warping").get<bool>();
        g.time_masking = j.at("time_masking").get<bool>();
        g.window_size = j.at("window_size").get<int>();
        g.pos_encoding = pos_encoding_from_string(j.at("pos_encoding").get<std::string>());
        g.dim_feedforward = j.at("dim_feedforward").get<int>();
        g.encoder_layers = j.at("encoder_layers").get<int>();
        g.decoder_layers = j.at("decoder_layers").get<int>();
        g.activation = activation_from_string(j.at("activation").get<std::string>());
        g.attention = j.at("attention").get<std::string>();
        g.n_heads = j.at("n_heads").get<int>();
        g.use_linear_embedding = j.at("use_linear_embedding").get<bool>();
        g.norm_type = norm_type_from_string(j.at("norm_type").get<std::string>());
        g.self_conditioning = j.at("self_conditioning").get<bool>();
        g.ffn_layers = j.at("ffn_layers").get<int>();
        g.phase_type = phase_type_from_string(j.at("phase_type").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("genome JSON: ") + e.what());
    }
    return g;
}

} // namespace tsnas

#endif
