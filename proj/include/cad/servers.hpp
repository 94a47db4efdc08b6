#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cad/error.hpp"
#include "cad/language_model.hpp"
#include "cad/rouge.hpp"

// Small HTTP services speaking the wire protocols the engine consumes. The
// logit server exposes any LanguageModel (useful for protocol tests and for
// serving a TableLM remotely); the mock scorer stands in for model-based
// metrics in end-to-end runs.
namespace cad {

struct LogitServerOptions {
    bool enable_batching = true;
    bool expose_config = true;
    bool expose_tokenize = true;
};

inline void install_logit_routes(httplib::Server& server, const LanguageModel& model,
                                 const LogitServerOptions& options = {}) {
    auto reply_json = [](httplib::Response& res, int status, const nlohmann::json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    };
    auto handle = [reply_json](httplib::Response& res, auto&& fn) {
        try {
            fn();
        } catch (const InputTooLong& e) {
            reply_json(res, 413, {{"error", e.what()}, {"max_length", e.limit()}});
        } catch (const InvalidInput& e) {
            reply_json(res, 400, {{"error", e.what()}});
        } catch (const nlohmann::json::exception& e) {
            reply_json(res, 400, {{"error", e.what()}});
        } catch (const std::exception& e) {
            reply_json(res, 500, {{"error", e.what()}});
        }
    };

    server.Get("/v1/vocab", [&model, reply_json](const httplib::Request&, httplib::Response& res) {
        const auto& v = model.vocabulary();
        nlohmann::json body{{"tokens", v.tokens()}, {"eos", v.eos_id()}};
        if (v.unk_id()) body["unk"] = *v.unk_id();
        reply_json(res, 200, body);
    });

    if (options.expose_config) {
        server.Get("/v1/config", [&model, reply_json](const httplib::Request&, httplib::Response& res) {
            const auto c = model.model_config();
            nlohmann::json body{{"n_layer", c.n_layer}, {"d_model", c.d_model}, {"d_attn", c.d_attn},
                                {"d_ff", c.d_ff},       {"n_heads", c.n_heads}, {"n_vocab", c.n_vocab}};
            if (auto f = model.family()) body["family"] = to_string(*f);
            if (auto m = model.max_input_length()) body["max_input_length"] = *m;
            reply_json(res, 200, body);
        });
    }

    server.Post("/v1/logits", [&model, reply_json, handle](const httplib::Request& req, httplib::Response& res) {
        handle(res, [&] {
            auto tokens = nlohmann::json::parse(req.body).at("tokens").get<TokenSequence>();
            reply_json(res, 200, {{"logits", model.forward(tokens)}});
        });
    });

    server.Post("/v1/logits_batch", [&model, options, reply_json, handle](const httplib::Request& req,
                                                                          httplib::Response& res) {
        if (!options.enable_batching) {
            reply_json(res, 501, {{"error", "batch packing disabled"}});
            return;
        }
        handle(res, [&] {
            auto batch = nlohmann::json::parse(req.body).at("batch").get<std::vector<TokenSequence>>();
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& seq : batch) rows.push_back(model.forward(seq));
            reply_json(res, 200, {{"logits", rows}});
        });
    });

    if (options.expose_tokenize) {
        server.Post("/v1/tokenize", [&model, reply_json, handle](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&] {
                auto text = nlohmann::json::parse(req.body).at("text").get<std::string>();
                reply_json(res, 200, {{"tokens", model.tokenize(text)}});
            });
        });
        server.Post("/v1/detokenize", [&model, reply_json, handle](const httplib::Request& req,
                                                                   httplib::Response& res) {
            handle(res, [&] {
                auto ids = nlohmann::json::parse(req.body).at("tokens").get<TokenSequence>();
                reply_json(res, 200, {{"text", model.detokenize(ids)}});
            });
        });
    }
}

enum class MockScorerMode { constant, echo };

// Mock external scorer. constant: always `value`. echo: 1.0 when candidate
// equals reference, otherwise the ROUGE-1 F1 between them.
inline void install_mock_scorer_routes(httplib::Server& server, MockScorerMode mode, double value = 0.5) {
    server.Post("/v1/score", [mode, value](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("candidate") || !body.contains("reference")) {
            res.status = 400;
            res.set_content(R"({"error":"expected {metric, candidate, reference, document}"})", "application/json");
            return;
        }
        double score = value;
        if (mode == MockScorerMode::echo) {
            const auto cand = body["candidate"].get<std::string>();
            const auto ref = body["reference"].get<std::string>();
            score = cand == ref ? 1.0 : rouge::score(cand, ref).rouge1.f1;
        }
        res.set_content(nlohmann::json{{"score", score}}.dump(), "application/json");
    });
}

// Runs an httplib server on a background thread bound to an ephemeral port.
class BackgroundServer {
public:
    template <typename Install>
    explicit BackgroundServer(Install&& install, const std::string& host = "127.0.0.1") {
        install(server_);
        port_ = server_.bind_to_any_port(host);
        if (port_ <= 0) throw IoError("could not bind a port on " + host);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        url_ = "http://" + host + ":" + std::to_string(port_);
    }

    BackgroundServer(const BackgroundServer&) = delete;
    BackgroundServer& operator=(const BackgroundServer&) = delete;

    ~BackgroundServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    const std::string& url() const noexcept { return url_; }
    int port() const noexcept { return port_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::string url_;
};

}  // namespace cad
