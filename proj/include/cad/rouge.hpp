#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "cad/detail/porter_stemmer.hpp"
#include "cad/error.hpp"

// Sentence-level, single-reference ROUGE with clipped n-gram counts.
namespace cad::rouge {

struct RougeOptions {
    bool stem = false;  // Porter stemming of every token
};

// Lowercase, split on runs of non-alphanumeric ASCII, drop empties.
inline std::vector<std::string> tokenize(const std::string& text, const RougeOptions& options = {}) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        out.push_back(options.stem ? detail::PorterStemmer{}(std::move(cur)) : std::move(cur));
        cur.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline Prf make_prf(double overlap, double candidate_total, double reference_total) {
    Prf s;
    s.precision = candidate_total > 0 ? overlap / candidate_total : 0.0;
    s.recall = reference_total > 0 ? overlap / reference_total : 0.0;
    s.f1 = (s.precision + s.recall) > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

namespace detail {

using Ngram = std::vector<std::string>;

inline std::map<Ngram, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
    std::map<Ngram, std::size_t> counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

}  // namespace detail

inline Prf rouge_n(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
                   std::size_t n) {
    if (n < 1) throw InvalidParameter("rouge n must be >= 1");
    const auto cand = detail::ngram_counts(candidate, n);
    const auto ref = detail::ngram_counts(reference, n);
    std::size_t overlap = 0;
    for (const auto& [gram, count] : cand) {
        if (auto it = ref.find(gram); it != ref.end()) overlap += std::min(count, it->second);
    }
    const std::size_t cand_total = candidate.size() >= n ? candidate.size() - n + 1 : 0;
    const std::size_t ref_total = reference.size() >= n ? reference.size() - n + 1 : 0;
    return make_prf(static_cast<double>(overlap), static_cast<double>(cand_total), static_cast<double>(ref_total));
}

template <typename T>
std::size_t lcs_length(const std::vector<T>& a, const std::vector<T>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline Prf rouge_l(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
    const auto lcs = lcs_length(candidate, reference);
    return make_prf(static_cast<double>(lcs), static_cast<double>(candidate.size()),
                    static_cast<double>(reference.size()));
}

struct RougeScore {
    Prf rouge1;
    Prf rouge2;
    Prf rougeL;
};

inline RougeScore score(const std::string& candidate, const std::string& reference,
                        const RougeOptions& options = {}) {
    const auto c = tokenize(candidate, options);
    const auto r = tokenize(reference, options);
    return {rouge_n(c, r, 1), rouge_n(c, r, 2), rouge_l(c, r)};
}

}  // namespace cad::rouge
