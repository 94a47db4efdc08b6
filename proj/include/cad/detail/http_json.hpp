#pragma once

#include <optional>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "cad/error.hpp"

namespace cad::detail {

struct HttpReply {
    int status = 0;
    nlohmann::json body;  // null when the body is not JSON
    std::string raw;
};

inline httplib::Client make_client(const std::string& base_url, int read_timeout_s = 300) {
    httplib::Client cli(base_url);
    if (!cli.is_valid()) throw InvalidInput("invalid backend URL '" + base_url + "'");
    cli.set_connection_timeout(5, 0);
    cli.set_read_timeout(read_timeout_s, 0);
    cli.set_write_timeout(30, 0);
    return cli;
}

inline HttpReply to_reply(const httplib::Result& res, const std::string& what) {
    if (!res) throw TransportError(what + ": " + httplib::to_string(res.error()));
    HttpReply reply;
    reply.status = res->status;
    reply.raw = res->body;
    reply.body = nlohmann::json::parse(res->body, nullptr, /*allow_exceptions=*/false);
    if (reply.body.is_discarded()) reply.body = nullptr;
    return reply;
}

// A fresh connection per request keeps the caller free of shared mutable state.
inline HttpReply get_json(const std::string& base_url, const std::string& path) {
    auto cli = make_client(base_url);
    return to_reply(cli.Get(path), "GET " + base_url + path);
}

inline HttpReply post_json(const std::string& base_url, const std::string& path, const nlohmann::json& body) {
    auto cli = make_client(base_url);
    return to_reply(cli.Post(path, body.dump(), "application/json"), "POST " + base_url + path);
}

}  // namespace cad::detail
