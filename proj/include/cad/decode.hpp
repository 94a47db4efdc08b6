#pragma once

#include <chrono>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cad/cad_core.hpp"
#include "cad/error.hpp"
#include "cad/language_model.hpp"
#include "cad/sampler.hpp"
#include "cad/templates.hpp"

namespace cad {

enum class ExecutionMode { two_pass, packed_batch };

inline const char* to_string(ExecutionMode m) { return m == ExecutionMode::two_pass ? "two_pass" : "packed_batch"; }

inline ExecutionMode parse_execution_mode(const std::string& s) {
    if (s == "two_pass") return ExecutionMode::two_pass;
    if (s == "packed_batch") return ExecutionMode::packed_batch;
    throw InvalidParameter("unknown execution mode '" + s + "'");
}

struct DecodeRequest {
    std::string id;
    std::string context;  // the document
    std::string query;
    PromptTemplate prompt_template;
    std::optional<double> alpha;  // absent: vanilla decoding, one stream
    double temperature = 1.0;
    SamplingConfig sampling;
    ExecutionMode mode = ExecutionMode::two_pass;

    bool is_cad() const noexcept { return alpha.has_value(); }
};

struct GenerationRecord {
    std::string id;
    std::string generated_text;
    TokenSequence generated_tokens;  // EOS excluded
    std::size_t generated_token_count = 0;
    std::size_t steps = 0;               // sampling steps, including one that produced EOS
    std::size_t forward_pass_count = 0;  // logical sequences run through the model
    std::size_t model_calls = 0;         // backend invocations (a packed pair is one call)
    bool ended_with_eos = false;
    double wall_seconds = 0.0;
    double seconds_per_token = 0.0;  // wall_seconds / steps
    std::optional<double> flops_estimate;
    std::string prompt_with_context;
    std::string prompt_without_context;
    std::size_t prompt_tokens_with_context = 0;
    std::size_t prompt_tokens_without_context = 0;
    std::optional<double> alpha;
    std::string mode;  // "vanilla", "two_pass" or "packed_batch" (as executed)
    bool complete = true;
    std::string error;
    std::vector<std::string> warnings;
};

namespace detail {

inline void check_stream_fits(const LanguageModel& model, const char* stream, std::size_t prompt_len,
                              std::size_t max_new_tokens) {
    const auto limit = model.max_input_length();
    if (!limit) return;
    // The last forward sees the prompt plus max_new_tokens - 1 generated tokens.
    const std::size_t longest = prompt_len + (max_new_tokens > 0 ? max_new_tokens - 1 : 0);
    if (longest > *limit) throw InputTooLong(stream, longest, *limit);
}

}  // namespace detail

// Autoregressive loop. Vanilla requests run the with-context stream only; CAD
// requests run both streams and combine their logits. The same sampled token
// is appended to both streams. Per step: combine -> repetition penalty ->
// EOS mask (while below min_new_tokens) -> softmax(/tau) -> top-k -> top-p -> draw.
inline GenerationRecord decode(const LanguageModel& model, const DecodeRequest& request) {
    request.sampling.validate();
    if (request.sampling.max_new_tokens < 1) throw InvalidParameter("max_new_tokens must be >= 1");
    if (!(request.temperature > 0.0)) throw InvalidParameter("temperature must be > 0");
    if (request.alpha) CadParams{*request.alpha, request.temperature}.validate();

    GenerationRecord rec;
    rec.id = request.id;
    rec.alpha = request.alpha;

    const auto prompts = render(request.prompt_template, request.query, request.context);
    rec.prompt_with_context = prompts.with_context;
    rec.prompt_without_context = prompts.without_context;

    TokenSequence stream_ctx;
    TokenSequence stream_unc;
    try {
        stream_ctx = model.tokenize(prompts.with_context);
        stream_unc = model.tokenize(prompts.without_context);
    } catch (const TransportError& e) {
        rec.complete = false;
        rec.error = std::string("transport: ") + e.what();
        return rec;
    }
    rec.prompt_tokens_with_context = stream_ctx.size();
    rec.prompt_tokens_without_context = stream_unc.size();
    if (stream_ctx.empty()) throw InvalidInput("with-context prompt tokenizes to nothing");
    if (request.is_cad() && stream_unc.empty()) throw InvalidInput("context-free prompt tokenizes to nothing");

    const std::size_t max_new = request.sampling.max_new_tokens;
    detail::check_stream_fits(model, "with_context", stream_ctx.size(), max_new);
    if (request.is_cad()) detail::check_stream_fits(model, "without_context", stream_unc.size(), max_new);

    const TokenId eos = model.vocabulary().eos_id();
    const bool cad = request.is_cad();
    bool packed = cad && request.mode == ExecutionMode::packed_batch;
    if (packed && !model.supports_batching()) {
        rec.warnings.push_back("backend cannot batch; falling back to two_pass");
        packed = false;
    }

    Rng rng(request.sampling.seed);
    const auto start = std::chrono::steady_clock::now();

    try {
        for (std::size_t t = 0; t < max_new; ++t) {
            LogitVector combined;
            if (!cad) {
                combined = model.forward(stream_ctx);
                rec.forward_pass_count += 1;
                rec.model_calls += 1;
            } else {
                LogitVector logits_ctx;
                LogitVector logits_unc;
                if (packed) {
                    try {
                        const std::vector<TokenSequence> batch{stream_ctx, stream_unc};
                        auto out = model.forward_batch(batch);
                        if (out.size() != 2) throw ModelError("batched forward returned wrong number of rows");
                        logits_ctx = std::move(out[0]);
                        logits_unc = std::move(out[1]);
                        rec.model_calls += 1;
                    } catch (const UnsupportedCapability&) {
                        rec.warnings.push_back("backend rejected batched forward; falling back to two_pass");
                        packed = false;
                    }
                }
                if (!packed) {
                    logits_ctx = model.forward(stream_ctx);
                    logits_unc = model.forward(stream_unc);
                    rec.model_calls += 2;
                }
                rec.forward_pass_count += 2;
                combined = combine_logits(logits_ctx, logits_unc, *request.alpha);
            }

            combined = apply_repetition_penalty(combined, rec.generated_tokens, request.sampling.repetition_penalty);
            if (t < request.sampling.min_new_tokens) combined[eos] = -std::numeric_limits<double>::infinity();
            const ProbDist dist = softmax(combined, request.temperature);
            const TokenId next = sample(dist, request.sampling, rng);
            ++rec.steps;

            if (next == eos) {
                rec.ended_with_eos = true;
                break;
            }
            rec.generated_tokens.push_back(next);
            stream_ctx.push_back(next);
            stream_unc.push_back(next);
        }
    } catch (const TransportError& e) {
        rec.complete = false;
        rec.error = std::string("transport: ") + e.what();
    } catch (const ModelError& e) {
        rec.complete = false;
        rec.error = std::string("model: ") + e.what();
    }

    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.seconds_per_token = rec.steps > 0 ? rec.wall_seconds / static_cast<double>(rec.steps) : 0.0;
    rec.generated_token_count = rec.generated_tokens.size();
    try {
        rec.generated_text = model.detokenize(rec.generated_tokens);
    } catch (const Error& e) {
        // Remote detokenizer gone; the local vocabulary still gives a usable text.
        rec.generated_text = model.vocabulary().detokenize(rec.generated_tokens);
        rec.warnings.push_back(std::string("detokenize failed, used vocabulary join: ") + e.what());
    }
    rec.mode = !cad ? "vanilla" : (packed ? "packed_batch" : "two_pass");
    return rec;
}

// Results-file line with the stable field names. Timing fields are null
// unless `with_timing`, which keeps generation files byte-reproducible.
inline nlohmann::ordered_json to_json(const GenerationRecord& r, bool with_timing) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["output"] = r.generated_text;
    j["n_tokens"] = r.generated_token_count;
    j["n_forward"] = r.forward_pass_count;
    j["wall_s"] = with_timing ? nlohmann::ordered_json(r.wall_seconds) : nlohmann::ordered_json(nullptr);
    j["s_per_token"] = with_timing ? nlohmann::ordered_json(r.seconds_per_token) : nlohmann::ordered_json(nullptr);
    j["mode"] = r.mode;
    j["alpha"] = r.alpha ? nlohmann::ordered_json(*r.alpha) : nlohmann::ordered_json(nullptr);
    j["n_steps"] = r.steps;
    j["n_calls"] = r.model_calls;
    j["flops"] = r.flops_estimate ? nlohmann::ordered_json(*r.flops_estimate) : nlohmann::ordered_json(nullptr);
    j["prompt_tokens"] = {r.prompt_tokens_with_context, r.prompt_tokens_without_context};
    j["complete"] = r.complete;
    if (!r.error.empty()) j["error"] = r.error;
    if (!r.warnings.empty()) j["warnings"] = r.warnings;
    return j;
}

// ---------------------------------------------------------------------------
// Decoding speed.

struct SpeedSample {
    std::string request_id;
    double wall_seconds = 0.0;
    std::size_t steps = 0;
    std::size_t generated_tokens = 0;
    std::size_t forward_passes = 0;
    double seconds_per_token = 0.0;
};

struct SpeedReport {
    std::string mode;
    std::vector<SpeedSample> samples;
    double mean_seconds_per_token = 0.0;       // mean of per-request values
    double aggregate_seconds_per_token = 0.0;  // total wall / total steps
    std::size_t total_forward_passes = 0;
    std::size_t total_steps = 0;
    std::size_t total_tokens = 0;
    double total_wall_seconds = 0.0;
    bool complete = true;
};

inline SpeedReport measure_speed(const LanguageModel& model, std::span<const DecodeRequest> requests) {
    if (requests.empty()) throw InvalidInput("measure_speed needs at least one request");
    SpeedReport report;
    double sum_spt = 0.0;
    for (const auto& req : requests) {
        const auto rec = decode(model, req);
        if (report.mode.empty()) report.mode = rec.mode;
        report.complete = report.complete && rec.complete;
        report.samples.push_back(
            {rec.id, rec.wall_seconds, rec.steps, rec.generated_token_count, rec.forward_pass_count, rec.seconds_per_token});
        sum_spt += rec.seconds_per_token;
        report.total_forward_passes += rec.forward_pass_count;
        report.total_steps += rec.steps;
        report.total_tokens += rec.generated_token_count;
        report.total_wall_seconds += rec.wall_seconds;
    }
    report.mean_seconds_per_token = sum_spt / static_cast<double>(requests.size());
    report.aggregate_seconds_per_token =
        report.total_steps > 0 ? report.total_wall_seconds / static_cast<double>(report.total_steps) : 0.0;
    return report;
}

}  // namespace cad
