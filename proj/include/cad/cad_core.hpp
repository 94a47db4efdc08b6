#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cad/error.hpp"
#include "cad/vocabulary.hpp"

// Context-aware decoding arithmetic. Everything here is pure; the combination
// happens in logit space and probabilities are only materialized by softmax.
namespace cad {

struct CadParams {
    double alpha = 0.0;  // PMI weight; 0 recovers vanilla decoding
    double tau = 1.0;    // temperature applied to the combined logits

    void validate() const {
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidParameter("alpha must be finite and >= 0");
        if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidParameter("temperature must be finite and > 0");
    }
};

namespace detail {

inline void check_same_length(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InvalidInput("logit vectors differ in length: " + std::to_string(a.size()) + " vs " +
                           std::to_string(b.size()));
    }
    if (a.empty()) throw InvalidInput("logit vectors must not be empty");
}

inline double max_finite_or_lowest(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    return m;
}

}  // namespace detail

// log-sum-exp with max subtraction. -inf entries contribute nothing.
inline double log_sum_exp(std::span<const double> v) {
    const double m = detail::max_finite_or_lowest(v);
    if (!std::isfinite(m)) throw InvalidInput("log_sum_exp needs at least one finite entry");
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

inline std::vector<double> log_softmax(std::span<const double> logits) {
    const double lse = log_sum_exp(logits);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

// softmax(logits / tau). Entries equal to -inf (masked tokens) get probability 0.
inline ProbDist softmax(std::span<const double> logits, double tau = 1.0) {
    if (!(tau > 0.0)) throw InvalidParameter("temperature must be > 0");
    if (logits.empty()) throw InvalidInput("softmax of an empty vector");
    const double m = detail::max_finite_or_lowest(logits);
    if (!std::isfinite(m)) throw InvalidInput("softmax needs at least one finite logit");
    ProbDist p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp((logits[i] - m) / tau);
        z += p[i];
    }
    for (double& x : p) x /= z;
    return p;
}

// (1 + alpha) * ctx - alpha * unc, unscaled by temperature. For alpha = 0 the
// result is bit-identical to ctx.
inline LogitVector combine_logits(std::span<const double> logits_ctx, std::span<const double> logits_unc,
                                  double alpha) {
    detail::check_same_length(logits_ctx, logits_unc);
    if (!(alpha >= 0.0)) throw InvalidParameter("alpha must be >= 0");
    LogitVector out(logits_ctx.size());
    const double w_ctx = 1.0 + alpha;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = w_ctx * logits_ctx[i] - alpha * logits_unc[i];
    return out;
}

// Vanilla next-token distribution: softmax(ctx / tau).
inline ProbDist vanilla_dist(std::span<const double> logits_ctx, double tau) {
    if (!(tau > 0.0)) throw InvalidParameter("temperature must be > 0");
    return softmax(logits_ctx, tau);
}

// Per-token log p(y | c, x) - log p(y | x), both at unit temperature.
inline std::vector<double> pmi(std::span<const double> logits_ctx, std::span<const double> logits_unc) {
    detail::check_same_length(logits_ctx, logits_unc);
    const double lse_c = log_sum_exp(logits_ctx);
    const double lse_u = log_sum_exp(logits_unc);
    std::vector<double> out(logits_ctx.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (logits_ctx[i] - lse_c) - (logits_unc[i] - lse_u);
    return out;
}

// Context-aware distribution softmax(((1 + alpha) ctx - alpha unc) / tau).
inline ProbDist cad_dist(std::span<const double> logits_ctx, std::span<const double> logits_unc,
                         const CadParams& params) {
    params.validate();
    return vanilla_dist(combine_logits(logits_ctx, logits_unc, params.alpha), params.tau);
}

namespace diagnostics {

// Probability-space route: p * (p / q)^alpha, raised to 1/tau, renormalized.
// Kept as a regression oracle for cad_dist; it underflows for extreme logits
// where cad_dist does not, so the decoder never calls it.
inline ProbDist cad_dist_via_pmi(std::span<const double> logits_ctx, std::span<const double> logits_unc,
                                 const CadParams& params) {
    params.validate();
    detail::check_same_length(logits_ctx, logits_unc);
    const ProbDist p = softmax(logits_ctx, 1.0);
    const ProbDist q = softmax(logits_unc, 1.0);
    ProbDist w(p.size());
    double z = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double weighted = p[i] * std::pow(p[i] / q[i], params.alpha);
        w[i] = params.tau == 1.0 ? weighted : std::pow(weighted, 1.0 / params.tau);
        z += w[i];
    }
    for (double& x : w) x /= z;
    return w;
}

}  // namespace diagnostics

inline double total_variation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidInput("distributions differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return 0.5 * s;
}

}  // namespace cad
