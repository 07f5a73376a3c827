#ifndef TSNAS_TEST_HELPERS_HPP
#define TSNAS_TEST_HELPERS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "tsnas/rng.hpp"
#include "tsnas/tensor.hpp"

namespace testutil {

inline double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-3});
    return std::abs(a - b) / denom;
}

// Central finite differences over every entry of every leaf against a
// re-evaluable scalar loss. loss_fn must rebuild the forward pass from the
// current leaf values on a fresh graph; RNG is re-seeded per evaluation so
// stochastic layers (dropout) see identical masks.
template <class LossFn>
double max_grad_rel_err(std::vector<tsnas::Tensor>& leaves, LossFn loss_fn, double h = 1e-5,
                        std::uint64_t rng_seed = 1234) {
    using tsnas::Graph;
    using tsnas::Rng;
    for (auto& p : leaves) p.zero_grad();
    Graph g;
    Rng rng(rng_seed);
    g.backward(loss_fn(g, rng));
    double worst = 0.0;
    for (auto& p : leaves) {
        const std::vector<double> analytic = p.grad();
        for (std::size_t i = 0; i < p.data().size(); ++i) {
            const double orig = p.data()[i];
            p.data()[i] = orig + h;
            Graph gu;
            Rng ru(rng_seed);
            const double up = loss_fn(gu, ru).item();
            p.data()[i] = orig - h;
            Graph gd;
            Rng rd(rng_seed);
            const double dn = loss_fn(gd, rd).item();
            p.data()[i] = orig;
            worst = std::max(worst, rel_err(analytic[i], (up - dn) / (2.0 * h)));
        }
    }
    return worst;
}

inline tsnas::Tensor random_leaf(std::size_t r, std::size_t c, tsnas::Rng& rng,
                                 bool requires_grad = true, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(r * c);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return tsnas::Graph::leaf(r, c, std::move(v), requires_grad);
}

// Published best-model configurations, one JSON per benchmark column.
inline const std::array<std::string, 8>& table5_genomes() {
    static const std::array<std::string, 8> rows = {
        // SMAP
        R"({"learning_rate":0.0002128,"dropout":0.2353,"dim_feedforward":101,"batch_size":32,
            "encoder_layers":2,"decoder_layers":1,"activation":"sigmoid","time_warping":false,
            "time_masking":true,"gaussian_noise":0.000151,"use_linear_embedding":false,
            "phase_type":"2phase","self_conditioning":false,"norm_type":"batch",
            "pos_encoding":"sinusoidal","ffn_layers":1,"n_heads":25,"window_size":10,
            "attention":"scaled_dot_product"})",
        // UCR
        R"({"learning_rate":0.0019997,"dropout":0.4474,"dim_feedforward":124,"batch_size":48,
            "encoder_layers":1,"decoder_layers":2,"activation":"leaky_relu","time_warping":true,
            "time_masking":true,"gaussian_noise":0.027956,"use_linear_embedding":true,
            "phase_type":"iterative","self_conditioning":true,"norm_type":"batch",
            "pos_encoding":"fourier","ffn_layers":1,"n_heads":1,"window_size":20,
            "attention":"scaled_dot_product"})",
        // MBA
        R"({"learning_rate":0.003441,"dropout":0.1795,"dim_feedforward":41,"batch_size":16,
            "encoder_layers":3,"decoder_layers":1,"activation":"tanh","time_warping":true,
            "time_masking":false,"gaussian_noise":0.007925,"use_linear_embedding":false,
            "phase_type":"iterative","self_conditioning":false,"norm_type":"batch",
            "pos_encoding":"fourier","ffn_layers":1,"n_heads":2,"window_size":14,
            "attention":"scaled_dot_product"})",
        // SWaT
        R"({"learning_rate":0.0000403,"dropout":0.3836,"dim_feedforward":42,"batch_size":32,
            "encoder_layers":2,"decoder_layers":3,"activation":"tanh","time_warping":true,
            "time_masking":true,"gaussian_noise":0.058019,"use_linear_embedding":false,
            "phase_type":"2phase","self_conditioning":true,"norm_type":"layer",
            "pos_encoding":"sinusoidal","ffn_layers":3,"n_heads":51,"window_size":22,
            "attention":"scaled_dot_product"})",
        // MSL
        R"({"learning_rate":0.006192,"dropout":0.3730,"dim_feedforward":121,"batch_size":32,
            "encoder_layers":2,"decoder_layers":3,"activation":"leaky_relu","time_warping":true,
            "time_masking":true,"gaussian_noise":0.000428,"use_linear_embedding":true,
            "phase_type":"2phase","self_conditioning":true,"norm_type":"layer",
            "pos_encoding":"fourier","ffn_layers":2,"n_heads":55,"window_size":26,
            "attention":"scaled_dot_product"})",
        // SMD
        R"({"learning_rate":0.0002273,"dropout":0.1554,"dim_feedforward":86,"batch_size":48,
            "encoder_layers":3,"decoder_layers":1,"activation":"sigmoid","time_warping":false,
            "time_masking":false,"gaussian_noise":0.000628,"use_linear_embedding":true,
            "phase_type":"2phase","self_conditioning":false,"norm_type":"layer",
            "pos_encoding":"sinusoidal","ffn_layers":3,"n_heads":38,"window_size":12,
            "attention":"scaled_dot_product"})",
        // NAB
        R"({"learning_rate":0.006924,"dropout":0.4560,"dim_feedforward":10,"batch_size":96,
            "encoder_layers":1,"decoder_layers":2,"activation":"relu","time_warping":false,
            "time_masking":true,"gaussian_noise":0.000119,"use_linear_embedding":true,
            "phase_type":"iterative","self_conditioning":true,"norm_type":"batch",
            "pos_encoding":"sinusoidal","ffn_layers":1,"n_heads":1,"window_size":18,
            "attention":"scaled_dot_product"})",
        // WADI ("2Phase" spelling exercises case-insensitive parsing)
        R"({"learning_rate":0.0000131,"dropout":0.2237,"dim_feedforward":16,"batch_size":112,
            "encoder_layers":2,"decoder_layers":1,"activation":"sigmoid","time_warping":false,
            "time_masking":false,"gaussian_noise":0.000194,"use_linear_embedding":true,
            "phase_type":"2Phase","self_conditioning":true,"norm_type":"layer",
            "pos_encoding":"fourier","ffn_layers":3,"n_heads":127,"window_size":26,
            "attention":"scaled_dot_product"})",
    };
    return rows;
}

} // namespace testutil

#endif
