#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cad/detail/http_json.hpp"
#include "cad/error.hpp"

namespace cad {

// Metric ids carried by the external scorer protocol.
inline constexpr const char* kMetricBertScoreP = "bertscore_p";
inline constexpr const char* kMetricFactKb = "factkb";

struct ExternalScoreRequest {
    std::string metric;
    std::string candidate;
    std::string reference;
    std::string document;
};

struct ExternalScoreResponse {
    std::optional<double> score;  // nullopt: scored-as-missing, see error
    std::string provenance = "external";
    std::string error;

    bool missing() const noexcept { return !score.has_value(); }
};

// Routes metric ids to scorer services speaking
//   POST /v1/score {"metric", "candidate", "reference", "document"} -> {"score": float}
// Scores are never computed locally.
class ExternalScorers {
public:
    void register_metric(const std::string& metric, const std::string& base_url) { routes_[metric] = base_url; }

    bool has(const std::string& metric) const { return routes_.count(metric) > 0; }

    std::vector<std::string> metrics() const {
        std::vector<std::string> out;
        for (const auto& [m, url] : routes_) out.push_back(m);
        return out;
    }

    ExternalScoreResponse score(const ExternalScoreRequest& request) const {
        auto it = routes_.find(request.metric);
        if (it == routes_.end()) {
            throw UnsupportedCapability("no external scorer registered for metric '" + request.metric + "'");
        }
        ExternalScoreResponse response;
        try {
            nlohmann::json body{{"metric", request.metric},
                                {"candidate", request.candidate},
                                {"reference", request.reference},
                                {"document", request.document}};
            auto reply = detail::post_json(it->second, "/v1/score", body);
            if (reply.status != 200 || !reply.body.is_object() || !reply.body.contains("score") ||
                !reply.body["score"].is_number()) {
                response.error = "scorer returned status " + std::to_string(reply.status);
                return response;
            }
            const double s = reply.body["score"].get<double>();
            if (!(s >= 0.0 && s <= 1.0)) {
                response.error = "scorer returned out-of-range score " + std::to_string(s);
                return response;
            }
            response.score = s;
        } catch (const TransportError& e) {
            response.error = e.what();
        }
        return response;
    }

private:
    std::map<std::string, std::string> routes_;
};

}  // namespace cad
