#pragma once

#include <algorithm>
#include <array>
#include <bitset>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

// Exhaustive common-subsequence oracle over short sequences of a 3-symbol
// alphabet. For each sequence every subsequence (one per index mask) is
// recorded in a per-length bitset keyed by its base-3 code, so the longest
// common subsequence of a pair is the largest length with a shared bit.
namespace cadtest {

inline constexpr int kLcsMaxLen = 6;

struct SubsequenceSets {
    std::vector<int> symbols;
    std::array<std::bitset<729>, kLcsMaxLen + 1> by_length{};
};

inline SubsequenceSets subsequence_sets(const std::vector<int>& seq) {
    SubsequenceSets s;
    s.symbols = seq;
    const unsigned n = static_cast<unsigned>(seq.size());
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        int code = 0, len = 0;
        for (unsigned i = 0; i < n; ++i) {
            if (mask & (1u << i)) {
                code = code * 3 + seq[i];
                ++len;
            }
        }
        s.by_length[len].set(static_cast<std::size_t>(code));
    }
    return s;
}

inline int exhaustive_lcs(const SubsequenceSets& a, const SubsequenceSets& b) {
    const int top = static_cast<int>(std::min(a.symbols.size(), b.symbols.size()));
    for (int len = top; len > 0; --len) {
        if ((a.by_length[len] & b.by_length[len]).any()) return len;
    }
    return 0;
}

// Every sequence of length 0..kLcsMaxLen over {0, 1, 2}.
inline std::vector<std::vector<int>> all_short_sequences() {
    std::vector<std::vector<int>> out{{}};
    std::vector<std::vector<int>> frontier{{}};
    for (int len = 1; len <= kLcsMaxLen; ++len) {
        std::vector<std::vector<int>> next;
        for (const auto& s : frontier) {
            for (int sym = 0; sym < 3; ++sym) {
                auto t = s;
                t.push_back(sym);
                next.push_back(t);
            }
        }
        out.insert(out.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return out;
}

inline std::vector<std::string> as_words(const std::vector<int>& seq) {
    static const char* names[] = {"a", "b", "c"};
    std::vector<std::string> out;
    for (int s : seq) out.emplace_back(names[s]);
    return out;
}

// Runs `check(lcs_from_library, lcs_from_oracle)` over all pairs; returns the
// number of mismatches.
template <typename Lcs>
std::size_t count_lcs_mismatches(Lcs&& library_lcs) {
    const auto seqs = all_short_sequences();
    std::vector<SubsequenceSets> sets;
    std::vector<std::vector<std::string>> words;
    for (const auto& s : seqs) {
        sets.push_back(subsequence_sets(s));
        words.push_back(as_words(s));
    }
    std::size_t bad = 0;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        for (std::size_t j = 0; j < seqs.size(); ++j) {
            if (static_cast<int>(library_lcs(words[i], words[j])) != exhaustive_lcs(sets[i], sets[j])) ++bad;
        }
    }
    return bad;
}

}  // namespace cadtest
