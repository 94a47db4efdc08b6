#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cad/error.hpp"
#include "cad/vocabulary.hpp"

namespace cad {

enum class ModelFamily { decoder_only, encoder_decoder };

inline const char* to_string(ModelFamily f) {
    return f == ModelFamily::decoder_only ? "decoder_only" : "encoder_decoder";
}

inline ModelFamily parse_model_family(const std::string& s) {
    if (s == "decoder_only" || s == "decoder-only") return ModelFamily::decoder_only;
    if (s == "encoder_decoder" || s == "encoder-decoder") return ModelFamily::encoder_decoder;
    throw InvalidInput("unknown model family '" + s + "'");
}

// Transformer geometry consumed by the FLOPs model.
struct ModelConfig {
    std::uint64_t n_layer = 0;
    std::uint64_t d_model = 0;
    std::uint64_t d_attn = 0;
    std::uint64_t d_ff = 0;
    std::uint64_t n_heads = 0;
    std::uint64_t n_vocab = 0;

    void validate() const {
        if (n_layer == 0 || d_model == 0 || d_attn == 0 || d_ff == 0 || n_heads == 0 || n_vocab == 0) {
            throw InvalidInput("model config fields must all be strictly positive");
        }
    }

    // Standard proportions: d_attn = d_model, d_ff = 4 d_model.
    static ModelConfig standard(std::uint64_t n_layer, std::uint64_t d_model, std::uint64_t n_heads = 1,
                                std::uint64_t n_vocab = 1) {
        return {n_layer, d_model, d_model, 4 * d_model, n_heads, n_vocab};
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Backend contract. Implementations must be safe for concurrent const calls.
class LanguageModel {
public:
    virtual ~LanguageModel() = default;

    virtual const Vocabulary& vocabulary() const = 0;

    // Next-token logits for the position after `input`.
    virtual LogitVector forward(std::span<const TokenId> input) const = 0;

    virtual bool supports_batching() const { return false; }

    // One batched call over several prefixes; same result as calling forward
    // on each. Only valid when supports_batching() is true.
    virtual std::vector<LogitVector> forward_batch(std::span<const TokenSequence> inputs) const {
        (void)inputs;
        throw UnsupportedCapability("backend does not support batched forward");
    }

    virtual ModelConfig model_config() const = 0;

    virtual std::optional<ModelFamily> family() const { return std::nullopt; }

    // Largest accepted input length in tokens, if the backend has one.
    virtual std::optional<std::size_t> max_input_length() const { return std::nullopt; }

    virtual TokenSequence tokenize(const std::string& text) const { return vocabulary().tokenize(text); }

    virtual std::string detokenize(std::span<const TokenId> ids) const { return vocabulary().detokenize(ids); }

    virtual std::string id() const = 0;
};

}  // namespace cad
