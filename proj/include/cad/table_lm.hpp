#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cad/error.hpp"
#include "cad/language_model.hpp"
#include "cad/vocabulary.hpp"

namespace cad {

// Probabilities below this are floored before taking logs so logits stay finite.
inline constexpr double kLogitFloorProb = 1e-12;

struct TableRule {
    TokenSequence suffix;
    ProbDist dist;
};

// Declarative description of a suffix-rule language model.
struct TableLMSpec {
    Vocabulary vocab;
    std::size_t order = 1;
    std::vector<TableRule> rules;
    ProbDist default_dist;
    std::optional<ModelConfig> config;
    std::optional<ModelFamily> family;
    std::optional<std::size_t> max_input_length;
    std::string name = "table";
};

namespace detail {

inline void check_distribution(const ProbDist& d, std::size_t vocab_size, const std::string& what) {
    if (d.size() != vocab_size) throw InvalidInput(what + ": distribution length does not match vocabulary");
    double sum = 0.0;
    for (double p : d) {
        if (!std::isfinite(p) || p < 0.0) throw InvalidInput(what + ": negative or non-finite probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw InvalidInput(what + ": probabilities sum to " + std::to_string(sum) + ", expected 1");
    }
}

inline LogitVector floored_log(const ProbDist& d) {
    LogitVector out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = std::log(std::max(d[i], kLogitFloorProb));
    return out;
}

}  // namespace detail

// Deterministic table-driven LM. The longest rule suffix matching the end of
// the input wins; the default distribution is the final fallback. Immutable
// after construction.
class TableLM final : public LanguageModel {
public:
    explicit TableLM(TableLMSpec spec) : spec_(std::move(spec)) {
        const std::size_t v = spec_.vocab.size();
        if (spec_.order == 0) throw InvalidInput("table LM order must be >= 1");
        detail::check_distribution(spec_.default_dist, v, "default");
        default_logits_ = detail::floored_log(spec_.default_dist);
        by_length_.resize(spec_.order + 1);
        for (std::size_t r = 0; r < spec_.rules.size(); ++r) {
            const auto& rule = spec_.rules[r];
            const std::string what = "rule " + std::to_string(r);
            if (rule.suffix.empty()) throw InvalidInput(what + ": empty suffix");
            if (rule.suffix.size() > spec_.order) throw InvalidInput(what + ": suffix longer than declared order");
            spec_.vocab.validate(rule.suffix);
            detail::check_distribution(rule.dist, v, what);
            auto [it, inserted] = by_length_[rule.suffix.size()].emplace(rule.suffix, detail::floored_log(rule.dist));
            if (!inserted) throw InvalidInput(what + ": duplicate suffix");
        }
        if (spec_.config) spec_.config->validate();
    }

    const Vocabulary& vocabulary() const override { return spec_.vocab; }

    LogitVector forward(std::span<const TokenId> input) const override {
        if (input.empty()) throw InvalidInput("forward requires a non-empty input");
        spec_.vocab.validate(input);
        if (spec_.max_input_length && input.size() > *spec_.max_input_length) {
            throw InputTooLong("input", input.size(), *spec_.max_input_length);
        }
        return matched_logits(input);
    }

    bool supports_batching() const override { return true; }

    std::vector<LogitVector> forward_batch(std::span<const TokenSequence> inputs) const override {
        std::vector<LogitVector> out;
        out.reserve(inputs.size());
        for (const auto& seq : inputs) out.push_back(forward(seq));
        return out;
    }

    // Declared geometry, or a small synthetic one when none was declared.
    ModelConfig model_config() const override {
        if (spec_.config) return *spec_.config;
        return {2, 8, 8, 32, 1, spec_.vocab.size()};
    }

    std::optional<ModelFamily> family() const override { return spec_.family; }

    std::optional<std::size_t> max_input_length() const override { return spec_.max_input_length; }

    std::string id() const override { return spec_.name; }

    std::size_t order() const noexcept { return spec_.order; }
    const TableLMSpec& spec() const noexcept { return spec_; }

    // Length of the rule suffix used for `input`; 0 means the default fired.
    std::size_t matched_length(std::span<const TokenId> input) const {
        for (std::size_t len = std::min(spec_.order, input.size()); len >= 1; --len) {
            TokenSequence key(input.end() - static_cast<std::ptrdiff_t>(len), input.end());
            if (by_length_[len].count(key)) return len;
        }
        return 0;
    }

private:
    const LogitVector& matched_logits(std::span<const TokenId> input) const {
        for (std::size_t len = std::min(spec_.order, input.size()); len >= 1; --len) {
            TokenSequence key(input.end() - static_cast<std::ptrdiff_t>(len), input.end());
            const auto& table = by_length_[len];
            if (auto it = table.find(key); it != table.end()) return it->second;
        }
        return default_logits_;
    }

    TableLMSpec spec_;
    std::vector<std::map<TokenSequence, LogitVector>> by_length_;
    LogitVector default_logits_;
};

namespace detail {

inline ProbDist parse_dist(const nlohmann::json& j, const Vocabulary& vocab, const std::string& what) {
    if (!j.is_object()) throw InvalidInput(what + ": distribution must be an object of token -> probability");
    ProbDist d(vocab.size(), 0.0);
    for (const auto& [tok, p] : j.items()) {
        auto id = vocab.find(tok);
        if (!id) throw InvalidInput(what + ": token '" + tok + "' not in vocabulary");
        if (!p.is_number()) throw InvalidInput(what + ": probability for '" + tok + "' is not a number");
        d[*id] = p.get<double>();
    }
    return d;
}

inline ModelConfig parse_model_config(const nlohmann::json& j, std::uint64_t n_vocab_fallback) {
    ModelConfig c;
    c.n_layer = j.at("n_layer").get<std::uint64_t>();
    c.d_model = j.at("d_model").get<std::uint64_t>();
    c.d_attn = j.value("d_attn", c.d_model);
    c.d_ff = j.value("d_ff", 4 * c.d_model);
    c.n_heads = j.value("n_heads", std::uint64_t{1});
    c.n_vocab = j.value("n_vocab", n_vocab_fallback);
    c.validate();
    return c;
}

}  // namespace detail

// Parses the TableLM JSON document:
//   {"order": n, "vocab": [...], "eos": "</s>", "unk": "<unk>"?,
//    "rules": [{"suffix": [...], "dist": {...}}], "default": {...},
//    "config": {...}?, "family": "decoder_only"?, "max_input_length": n?, "name": "..."?}
inline TableLMSpec parse_table_lm_spec(const nlohmann::json& j) {
    try {
        TableLMSpec spec;
        auto tokens = j.at("vocab").get<std::vector<std::string>>();
        std::vector<std::string> copy = tokens;
        auto eos_name = j.at("eos").get<std::string>();
        auto eos_it = std::find(copy.begin(), copy.end(), eos_name);
        if (eos_it == copy.end()) throw InvalidInput("eos token '" + eos_name + "' not in vocab");
        std::optional<TokenId> unk;
        if (j.contains("unk")) {
            auto unk_name = j.at("unk").get<std::string>();
            auto it = std::find(copy.begin(), copy.end(), unk_name);
            if (it == copy.end()) throw InvalidInput("unk token '" + unk_name + "' not in vocab");
            unk = static_cast<TokenId>(it - copy.begin());
        }
        spec.vocab = Vocabulary(std::move(tokens), static_cast<TokenId>(eos_it - copy.begin()), unk);
        spec.order = j.at("order").get<std::size_t>();
        for (const auto& r : j.value("rules", nlohmann::json::array())) {
            TableRule rule;
            for (const auto& tok : r.at("suffix")) rule.suffix.push_back(spec.vocab.id_of(tok.get<std::string>()));
            rule.dist = detail::parse_dist(r.at("dist"), spec.vocab, "rule " + std::to_string(spec.rules.size()));
            spec.rules.push_back(std::move(rule));
        }
        spec.default_dist = detail::parse_dist(j.at("default"), spec.vocab, "default");
        if (j.contains("config")) spec.config = detail::parse_model_config(j.at("config"), spec.vocab.size());
        if (j.contains("family")) spec.family = parse_model_family(j.at("family").get<std::string>());
        if (j.contains("max_input_length")) spec.max_input_length = j.at("max_input_length").get<std::size_t>();
        spec.name = j.value("name", std::string("table"));
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed table LM spec: ") + e.what());
    }
}

inline TableLM load_table_lm(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open table LM spec '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("table LM spec '" + path.string() + "' is not valid JSON: " + e.what());
    }
    auto spec = parse_table_lm_spec(j);
    if (!j.contains("name")) spec.name = path.stem().string();
    return TableLM(std::move(spec));
}

}  // namespace cad
