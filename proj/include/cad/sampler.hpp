#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cad/error.hpp"
#include "cad/vocabulary.hpp"

namespace cad {

enum class SamplingStrategy { greedy, topk_topp };

inline const char* to_string(SamplingStrategy s) { return s == SamplingStrategy::greedy ? "greedy" : "topk_topp"; }

inline SamplingStrategy parse_sampling_strategy(const std::string& s) {
    if (s == "greedy") return SamplingStrategy::greedy;
    if (s == "topk_topp" || s == "sample") return SamplingStrategy::topk_topp;
    throw InvalidParameter("unknown sampling strategy '" + s + "'");
}

struct SamplingConfig {
    SamplingStrategy strategy = SamplingStrategy::topk_topp;
    std::size_t top_k = 50;
    double top_p = 0.9;
    double repetition_penalty = 1.0;
    std::size_t min_new_tokens = 0;
    std::size_t max_new_tokens = 30;
    std::uint64_t seed = 0;

    void validate() const {
        if (top_k < 1) throw InvalidParameter("top_k must be >= 1");
        if (!(top_p > 0.0 && top_p <= 1.0)) throw InvalidParameter("top_p must be in (0, 1]");
        if (!(repetition_penalty >= 1.0) || !std::isfinite(repetition_penalty)) {
            throw InvalidParameter("repetition_penalty must be >= 1");
        }
        if (min_new_tokens > max_new_tokens) throw InvalidParameter("min_new_tokens exceeds max_new_tokens");
    }

    friend bool operator==(const SamplingConfig&, const SamplingConfig&) = default;
};

// Sampling RNG: the 64-bit Mersenne Twister (std::mt19937_64, whose output
// sequence is fixed by the standard). A uniform draw in [0, 1) takes the top
// 53 bits of one output: (x >> 11) * 2^-53. Reimplementations that follow
// the same two rules reproduce every draw.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// SplitMix64 finalizer, used to derive independent per-example seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace detail {

// The `limit` highest-probability token ids among those with positive mass
// (all of them when limit is 0), descending, lowest id first on ties.
// Zero-mass entries never matter to a filter, so they are skipped; with a
// limit only a partial sort is needed.
inline std::vector<TokenId> rank_tokens(std::span<const double> dist, std::size_t limit = 0) {
    std::vector<TokenId> order;
    order.reserve(dist.size());
    for (TokenId i = 0; i < dist.size(); ++i) {
        if (dist[i] > 0.0) order.push_back(i);
    }
    auto before = [&](TokenId a, TokenId b) { return dist[a] > dist[b] || (dist[a] == dist[b] && a < b); };
    if (limit > 0 && limit < order.size()) {
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(limit), order.end(), before);
        order.resize(limit);
    } else {
        std::sort(order.begin(), order.end(), before);
    }
    return order;
}

inline ProbDist keep_and_renormalize(std::span<const double> dist, std::span<const TokenId> keep) {
    ProbDist out(dist.size(), 0.0);
    double mass = 0.0;
    for (TokenId id : keep) mass += dist[id];
    if (!(mass > 0.0)) throw InvalidInput("filter retained no probability mass");
    for (TokenId id : keep) out[id] = dist[id] / mass;
    return out;
}

}  // namespace detail

inline ProbDist filter_top_k(std::span<const double> dist, std::size_t k) {
    if (k < 1) throw InvalidParameter("top_k must be >= 1");
    if (k >= dist.size()) return ProbDist(dist.begin(), dist.end());
    return detail::keep_and_renormalize(dist, detail::rank_tokens(dist, k));
}

// Smallest descending-probability prefix whose mass reaches p.
inline ProbDist filter_top_p(std::span<const double> dist, double p) {
    if (!(p > 0.0 && p <= 1.0)) throw InvalidParameter("top_p must be in (0, 1]");
    if (p == 1.0) return ProbDist(dist.begin(), dist.end());
    auto order = detail::rank_tokens(dist);
    double cumulative = 0.0;
    std::size_t keep = 0;
    while (keep < order.size()) {
        cumulative += dist[order[keep]];
        ++keep;
        if (cumulative >= p) break;
    }
    order.resize(keep);
    return detail::keep_and_renormalize(dist, order);
}

// Tokens present in `history`: positive logits divided by the penalty,
// non-positive logits multiplied by it.
inline LogitVector apply_repetition_penalty(std::span<const double> logits, std::span<const TokenId> history,
                                            double penalty) {
    if (!(penalty >= 1.0)) throw InvalidParameter("repetition_penalty must be >= 1");
    LogitVector out(logits.begin(), logits.end());
    if (penalty == 1.0) return out;
    std::vector<bool> seen(out.size(), false);
    for (TokenId id : history) {
        if (id >= out.size()) throw InvalidInput("history token id out of range");
        if (seen[id]) continue;
        seen[id] = true;
        out[id] = out[id] > 0.0 ? out[id] / penalty : out[id] * penalty;
    }
    return out;
}

inline TokenId argmax(std::span<const double> dist) {
    if (dist.empty()) throw InvalidInput("argmax of an empty distribution");
    TokenId best = 0;
    for (TokenId i = 1; i < dist.size(); ++i) {
        if (dist[i] > dist[best]) best = i;
    }
    return best;
}

// Inverse-CDF draw in token-id order using one uniform from `rng`.
inline TokenId draw_categorical(std::span<const double> dist, Rng& rng) {
    const double u = uniform01(rng);
    double cumulative = 0.0;
    TokenId last_positive = 0;
    bool any = false;
    for (TokenId i = 0; i < dist.size(); ++i) {
        if (dist[i] <= 0.0) continue;
        cumulative += dist[i];
        last_positive = i;
        any = true;
        if (u < cumulative) return i;
    }
    if (!any) throw InvalidInput("cannot sample from a distribution with no mass");
    return last_positive;
}

// greedy: argmax, no RNG use. topk_topp: top-k, then top-p, then one draw.
inline TokenId sample(std::span<const double> dist, const SamplingConfig& config, Rng& rng) {
    if (config.strategy == SamplingStrategy::greedy) return argmax(dist);
    const ProbDist filtered = filter_top_p(filter_top_k(dist, config.top_k), config.top_p);
    return draw_categorical(filtered, rng);
}

}  // namespace cad
