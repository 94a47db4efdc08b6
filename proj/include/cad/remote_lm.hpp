#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cad/detail/http_json.hpp"
#include "cad/error.hpp"
#include "cad/language_model.hpp"
#include "cad/table_lm.hpp"
#include "cad/vocabulary.hpp"

namespace cad {

// Client for the remote logit protocol:
//   POST /v1/logits        {"tokens": [...]}          -> {"logits": [...]}
//   POST /v1/logits_batch  {"batch": [[...], [...]]}  -> {"logits": [[...], [...]]}   (optional; 501 when off)
//   GET  /v1/config        -> {"n_layer", "d_model", "d_attn", "d_ff", "n_heads", "n_vocab",
//                              "family"?, "max_input_length"?}                      (optional)
//   GET  /v1/vocab         -> {"tokens": [...], "eos": id, "unk"?: id}
//   POST /v1/tokenize      {"text": str}              -> {"tokens": [...]}          (optional, preferred)
//   POST /v1/detokenize    {"tokens": [...]}          -> {"text": str}              (optional)
// Requests are stateless: the full prefix is sent every call.
class RemoteLM final : public LanguageModel {
public:
    explicit RemoteLM(std::string base_url) : url_(std::move(base_url)) {
        auto vocab = detail::get_json(url_, "/v1/vocab");
        if (vocab.status != 200 || !vocab.body.is_object()) {
            throw ModelError("GET /v1/vocab failed with status " + std::to_string(vocab.status));
        }
        try {
            std::optional<TokenId> unk;
            if (vocab.body.contains("unk") && !vocab.body["unk"].is_null()) unk = vocab.body["unk"].get<TokenId>();
            vocab_ = Vocabulary(vocab.body.at("tokens").get<std::vector<std::string>>(),
                                vocab.body.at("eos").get<TokenId>(), unk);
        } catch (const nlohmann::json::exception& e) {
            throw ModelError(std::string("malformed /v1/vocab response: ") + e.what());
        }

        auto cfg = detail::get_json(url_, "/v1/config");
        if (cfg.status == 200 && cfg.body.is_object()) {
            try {
                config_ = detail::parse_model_config(cfg.body, vocab_.size());
            } catch (const std::exception& e) {
                throw ModelError(std::string("malformed /v1/config response: ") + e.what());
            }
            if (cfg.body.contains("family")) family_ = parse_model_family(cfg.body["family"].get<std::string>());
            if (cfg.body.contains("max_input_length")) max_len_ = cfg.body["max_input_length"].get<std::size_t>();
        }

        has_tokenize_ = detail::post_json(url_, "/v1/tokenize", {{"text", ""}}).status == 200;
        has_detokenize_ =
            detail::post_json(url_, "/v1/detokenize", {{"tokens", nlohmann::json::array()}}).status == 200;
    }

    const Vocabulary& vocabulary() const override { return vocab_; }

    LogitVector forward(std::span<const TokenId> input) const override {
        if (input.empty()) throw InvalidInput("forward requires a non-empty input");
        vocab_.validate(input);
        nlohmann::json body{{"tokens", std::vector<TokenId>(input.begin(), input.end())}};
        auto reply = detail::post_json(url_, "/v1/logits", body);
        check_status(reply, input.size());
        try {
            return checked_logits(reply.body.at("logits"));
        } catch (const nlohmann::json::exception& e) {
            throw ModelError(std::string("malformed /v1/logits response: ") + e.what());
        }
    }

    bool supports_batching() const override { return true; }

    std::vector<LogitVector> forward_batch(std::span<const TokenSequence> inputs) const override {
        nlohmann::json batch = nlohmann::json::array();
        std::size_t longest = 0;
        for (const auto& seq : inputs) {
            if (seq.empty()) throw InvalidInput("forward requires a non-empty input");
            vocab_.validate(seq);
            batch.push_back(seq);
            longest = std::max(longest, seq.size());
        }
        auto reply = detail::post_json(url_, "/v1/logits_batch", {{"batch", batch}});
        if (reply.status == 501 || reply.status == 404) {
            throw UnsupportedCapability("backend does not serve batched logits");
        }
        check_status(reply, longest);
        try {
            std::vector<LogitVector> out;
            for (const auto& row : reply.body.at("logits")) out.push_back(checked_logits(row));
            if (out.size() != inputs.size()) throw ModelError("batched response has wrong number of rows");
            return out;
        } catch (const nlohmann::json::exception& e) {
            throw ModelError(std::string("malformed /v1/logits_batch response: ") + e.what());
        }
    }

    ModelConfig model_config() const override {
        if (!config_) throw UnsupportedCapability("backend at " + url_ + " exposes no /v1/config metadata");
        return *config_;
    }

    std::optional<ModelFamily> family() const override { return family_; }
    std::optional<std::size_t> max_input_length() const override { return max_len_; }

    TokenSequence tokenize(const std::string& text) const override {
        if (!has_tokenize_) return vocab_.tokenize(text);
        auto reply = detail::post_json(url_, "/v1/tokenize", {{"text", text}});
        if (reply.status != 200) throw ModelError("POST /v1/tokenize failed with status " + std::to_string(reply.status));
        auto ids = reply.body.at("tokens").get<TokenSequence>();
        vocab_.validate(ids);
        return ids;
    }

    std::string detokenize(std::span<const TokenId> ids) const override {
        if (!has_detokenize_) return vocab_.detokenize(ids);
        nlohmann::json body{{"tokens", std::vector<TokenId>(ids.begin(), ids.end())}};
        auto reply = detail::post_json(url_, "/v1/detokenize", body);
        if (reply.status != 200) {
            throw ModelError("POST /v1/detokenize failed with status " + std::to_string(reply.status));
        }
        return reply.body.at("text").get<std::string>();
    }

    std::string id() const override { return "remote:" + url_; }

    bool has_remote_tokenizer() const noexcept { return has_tokenize_; }

private:
    void check_status(const detail::HttpReply& reply, std::size_t input_len) const {
        if (reply.status == 200 && reply.body.is_object()) return;
        if (reply.status == 413) {
            std::size_t limit = max_len_.value_or(0);
            if (reply.body.is_object() && reply.body.contains("max_length")) {
                limit = reply.body["max_length"].get<std::size_t>();
            }
            throw InputTooLong("input", input_len, limit);
        }
        throw ModelError("backend returned status " + std::to_string(reply.status) + ": " + reply.raw);
    }

    LogitVector checked_logits(const nlohmann::json& j) const {
        auto logits = j.get<LogitVector>();
        if (logits.size() != vocab_.size()) {
            throw ModelError("logit vector length " + std::to_string(logits.size()) + " != vocabulary size " +
                             std::to_string(vocab_.size()));
        }
        for (double x : logits) {
            if (!std::isfinite(x)) throw ModelError("backend returned a non-finite logit");
        }
        return logits;
    }

    std::string url_;
    Vocabulary vocab_;
    std::optional<ModelConfig> config_;
    std::optional<ModelFamily> family_;
    std::optional<std::size_t> max_len_;
    bool has_tokenize_ = false;
    bool has_detokenize_ = false;
};

}  // namespace cad
