#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cad/decode.hpp"
#include "cad/error.hpp"
#include "cad/language_model.hpp"

// Transformer inference cost model. Counts are held as doubles: exact for
// integer results up to 2^53, relative error <= 1e-12 beyond.
namespace cad::flops {

enum class Approximation { exact_with_attention, two_n_approx };

inline const char* to_string(Approximation a) {
    return a == Approximation::exact_with_attention ? "exact_with_attention" : "two_n_approx";
}

inline Approximation parse_approximation(const std::string& s) {
    if (s == "exact" || s == "exact_with_attention") return Approximation::exact_with_attention;
    if (s == "approx" || s == "two_n_approx" || s == "2n") return Approximation::two_n_approx;
    throw InvalidParameter("unknown FLOPs approximation '" + s + "'");
}

enum class Decoding { vanilla, cad };

// Non-embedding parameters: 2 d_model n_layer (2 d_attn + d_ff).
inline double n_params(const ModelConfig& c) {
    c.validate();
    return 2.0 * static_cast<double>(c.d_model) * static_cast<double>(c.n_layer) *
           (2.0 * static_cast<double>(c.d_attn) + static_cast<double>(c.d_ff));
}

// Per-token forward FLOPs for an input of n_input tokens.
inline double c_forward(const ModelConfig& c, std::uint64_t n_input, Approximation mode) {
    if (n_input < 1) throw InvalidParameter("n_input must be >= 1");
    const double two_n = 2.0 * n_params(c);
    if (mode == Approximation::two_n_approx) return two_n;
    return two_n + 2.0 * static_cast<double>(c.n_layer) * static_cast<double>(n_input) * static_cast<double>(c.d_attn);
}

// Step cost in units of C_forward for step t (t tokens already generated):
// vanilla (t + x + c), CAD (2t + 2x + c).
inline std::uint64_t step_units(Decoding d, std::uint64_t len_c, std::uint64_t len_x, std::uint64_t t) {
    return d == Decoding::vanilla ? t + len_x + len_c : 2 * t + 2 * len_x + len_c;
}

// Absolute step FLOPs. The CAD step is the with-context stream (t + x + c
// tokens) plus the context-free stream (t + x tokens), each charged at the
// C_forward of its own input length. Under two_n_approx this is exactly
// step_units * 2N.
inline double step_flops(const ModelConfig& cfg, Decoding d, std::uint64_t len_c, std::uint64_t len_x,
                         std::uint64_t t, Approximation mode) {
    auto stream = [&](std::uint64_t n) { return n == 0 ? 0.0 : static_cast<double>(n) * c_forward(cfg, n, mode); };
    const double with_ctx = stream(t + len_x + len_c);
    return d == Decoding::vanilla ? with_ctx : with_ctx + stream(t + len_x);
}

// Closed-form sum of step_units over t = 0 .. steps-1.
inline std::uint64_t total_units(Decoding d, std::uint64_t len_c, std::uint64_t len_x, std::uint64_t steps) {
    const std::uint64_t tri = steps == 0 ? 0 : steps * (steps - 1) / 2;
    return d == Decoding::vanilla ? tri + steps * (len_x + len_c) : 2 * tri + steps * (2 * len_x + len_c);
}

inline double total_flops(const ModelConfig& cfg, Decoding d, std::uint64_t len_c, std::uint64_t len_x,
                          std::uint64_t steps, Approximation mode) {
    double total = 0.0;
    for (std::uint64_t t = 0; t < steps; ++t) total += step_flops(cfg, d, len_c, len_x, t, mode);
    return total;
}

struct CostBreakdown {
    double n_params_nonembed = 0.0;
    Approximation approximation = Approximation::exact_with_attention;
    std::uint64_t len_c = 0;
    std::uint64_t len_x = 0;
    std::vector<double> step_flops_vanilla;
    std::vector<double> step_flops_cad;
    double total_flops_vanilla = 0.0;
    double total_flops_cad = 0.0;
};

inline CostBreakdown breakdown(const ModelConfig& cfg, std::uint64_t len_c, std::uint64_t len_x,
                               std::uint64_t steps, Approximation mode) {
    CostBreakdown b;
    b.n_params_nonembed = n_params(cfg);
    b.approximation = mode;
    b.len_c = len_c;
    b.len_x = len_x;
    for (std::uint64_t t = 0; t < steps; ++t) {
        b.step_flops_vanilla.push_back(step_flops(cfg, Decoding::vanilla, len_c, len_x, t, mode));
        b.step_flops_cad.push_back(step_flops(cfg, Decoding::cad, len_c, len_x, t, mode));
        b.total_flops_vanilla += b.step_flops_vanilla.back();
        b.total_flops_cad += b.step_flops_cad.back();
    }
    return b;
}

// Fills record.flops_estimate. The context-free prompt length plays |x| and
// the extra length of the with-context prompt plays |c|; every step that ran
// a forward pass (including an EOS step) is charged.
inline GenerationRecord annotate(GenerationRecord record, const std::optional<ModelConfig>& config,
                                 Approximation mode = Approximation::exact_with_attention) {
    if (!config) throw UnsupportedCapability("FLOPs annotation needs the model configuration");
    const std::uint64_t len_x = record.prompt_tokens_without_context;
    const std::uint64_t len_a = record.prompt_tokens_with_context;
    const std::uint64_t len_c = len_a > len_x ? len_a - len_x : 0;
    const std::uint64_t base_x = len_a > len_x ? len_x : len_a;
    const Decoding d = record.alpha ? Decoding::cad : Decoding::vanilla;
    record.flops_estimate = total_flops(*config, d, len_c, base_x, record.steps, mode);
    return record;
}

}  // namespace cad::flops
