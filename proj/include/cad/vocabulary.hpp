#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cad/error.hpp"

namespace cad {

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;
using LogitVector = std::vector<double>;
// Normalized next-token distribution indexed by token id.
using ProbDist = std::vector<double>;

// Bijective id <-> string mapping with a designated end-of-sequence token.
// An optional unknown-word token lets whitespace tokenization accept text
// outside the vocabulary (prompt boilerplate against a toy model).
class Vocabulary {
public:
    Vocabulary() = default;

    Vocabulary(std::vector<std::string> tokens, TokenId eos_id,
               std::optional<TokenId> unk_id = std::nullopt)
        : tokens_(std::move(tokens)), eos_id_(eos_id), unk_id_(unk_id) {
        if (tokens_.empty()) throw InvalidInput("vocabulary must not be empty");
        index_.reserve(tokens_.size());
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
            if (!inserted) throw InvalidInput("duplicate vocabulary token '" + tokens_[i] + "'");
        }
        if (eos_id_ >= tokens_.size()) throw InvalidInput("eos id out of range");
        if (unk_id_ && *unk_id_ >= tokens_.size()) throw InvalidInput("unk id out of range");
    }

    std::size_t size() const noexcept { return tokens_.size(); }
    TokenId eos_id() const noexcept { return eos_id_; }
    std::optional<TokenId> unk_id() const noexcept { return unk_id_; }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    std::optional<TokenId> find(const std::string& token) const {
        auto it = index_.find(token);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    TokenId id_of(const std::string& token) const {
        if (auto id = find(token)) return *id;
        throw InvalidInput("token '" + token + "' not in vocabulary");
    }

    const std::string& token_of(TokenId id) const {
        if (id >= tokens_.size()) throw InvalidInput("token id " + std::to_string(id) + " out of range");
        return tokens_[id];
    }

    bool contains(TokenId id) const noexcept { return id < tokens_.size(); }

    void validate(std::span<const TokenId> ids) const {
        for (TokenId id : ids) {
            if (!contains(id)) {
                throw InvalidInput("unknown token id " + std::to_string(id) + " (vocabulary size " +
                                   std::to_string(size()) + ")");
            }
        }
    }

    // Whitespace tokenization. Words missing from the vocabulary map to the
    // unknown token when one is declared, otherwise they are an error.
    TokenSequence tokenize(const std::string& text) const {
        TokenSequence out;
        std::istringstream in(text);
        std::string word;
        while (in >> word) {
            if (auto id = find(word)) {
                out.push_back(*id);
            } else if (unk_id_) {
                out.push_back(*unk_id_);
            } else {
                throw InvalidInput("word '" + word + "' not in vocabulary and no unknown token declared");
            }
        }
        return out;
    }

    std::string detokenize(std::span<const TokenId> ids) const {
        std::string out;
        for (TokenId id : ids) {
            if (id == eos_id_) continue;
            if (!out.empty()) out += ' ';
            out += token_of(id);
        }
        return out;
    }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
    TokenId eos_id_ = 0;
    std::optional<TokenId> unk_id_;
};

}  // namespace cad
