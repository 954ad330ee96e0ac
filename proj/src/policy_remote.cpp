#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <semaphore>

#include <httplib.h>
#include <json.hpp>

#include "senseforge/policy.hpp"

namespace senseforge::policy {

namespace {

using nlohmann::json;

// Replies are almost-JSON in practice: Python literals, tuples for route
// points, unquoted keys, single quotes. Normalize before parsing; anything
// that still fails to parse counts as malformed.
std::string liberalize(const std::string& text) {
    std::string out;
    out.reserve(text.size() + 16);
    bool in_str = false;
    char quote = '"';
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_str) {
            if (c == '\\' && i + 1 < text.size()) {
                out += c;
                out += text[++i];
                continue;
            }
            if (c == quote) {
                in_str = false;
                out += '"';
                continue;
            }
            if (c == '"') {
                out += "\\\"";
                continue;
            }
            out += c;
            continue;
        }
        if (c == '"' || c == '\'') {
            in_str = true;
            quote = c;
            out += '"';
            continue;
        }
        if (c == '(') {
            out += '[';
            continue;
        }
        if (c == ')') {
            out += ']';
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) ||
                                       text[j] == '_'))
                ++j;
            const std::string word = text.substr(i, j - i);
            std::size_t k = j;
            while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
            if (k < text.size() && text[k] == ':')
                out += '"' + word + '"';
            else if (word == "True")
                out += "true";
            else if (word == "False")
                out += "false";
            else if (word == "None")
                out += "null";
            else
                out += word;
            i = j - 1;
            continue;
        }
        out += c;
    }
    return out;
}

json parse_payload(const std::string& reply) {
    json doc = json::parse(liberalize(extract_json_payload(reply)), nullptr, false);
    if (doc.is_discarded())
        throw SenseError("malformed_response", "reply payload is not valid JSON");
    return doc;
}

int require_integer(const json& value) {
    if (!value.is_number())
        throw SenseError("contract_violation", "route coordinate is not a number");
    const double v = value.get<double>();
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-9)
        throw SenseError("contract_violation", "route coordinate is not an integer");
    return static_cast<int>(r);
}

Route parse_path(const json& value) {
    if (!value.is_array())
        throw SenseError("contract_violation", "route payload is not an array");
    Route route;
    for (const auto& elem : value) {
        if (!elem.is_array() || elem.size() < 3)
            throw SenseError("contract_violation", "route point is not an (x, y, t) triple");
        route.points.push_back(RoutePoint{require_integer(elem[0]), require_integer(elem[1]),
                                          require_integer(elem[2])});
    }
    return route;
}

std::string optional_text(const json& obj, const char* key) {
    if (obj.is_object() && obj.contains(key) && obj[key].is_string())
        return obj[key].get<std::string>();
    return "";
}

std::string trim_token(std::string text) {
    const auto is_trim = [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '\'' ||
               c == '.' || c == '[' || c == ']' || c == '{' || c == '}';
    };
    while (!text.empty() && is_trim(text.front())) text.erase(text.begin());
    while (!text.empty() && is_trim(text.back())) text.pop_back();
    return text;
}

// ---- transport ----

struct UrlParts {
    std::string base;
    std::string path;
};

UrlParts split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos)
        throw SenseError("endpoint_unavailable", "endpoint URL '" + url + "' has no scheme");
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return UrlParts{url, "/"};
    return UrlParts{url.substr(0, slash), url.substr(slash)};
}

// Shared in-flight limiter per configured concurrency level; one process, one
// endpoint is the normal case. The client is synchronous, so each response is
// tied to its own request rather than to arrival order.
std::shared_ptr<std::counting_semaphore<>> shared_limiter(int concurrency) {
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<std::counting_semaphore<>>> pool;
    const int n = std::max(concurrency, 1);
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = pool[n];
    if (!slot) slot = std::make_shared<std::counting_semaphore<>>(n);
    return slot;
}

std::string chat_once(const RemoteConfig& config, const ChatMessages& messages) {
    const UrlParts parts = split_url(config.url);
    httplib::Client client(parts.base);
    client.set_connection_timeout(std::chrono::milliseconds(config.timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(config.timeout_ms));
    client.set_write_timeout(std::chrono::milliseconds(config.timeout_ms));

    httplib::Headers headers;
    if (!config.key.empty()) headers.emplace("Authorization", "Bearer " + config.key);

    const json body{
        {"model", config.model},
        {"messages", json::array({json{{"role", "system"}, {"content", messages.system}},
                                  json{{"role", "user"}, {"content", messages.user}}})}};
    auto res = client.Post(parts.path, headers, body.dump(), "application/json");
    if (!res)
        throw SenseError("endpoint_unavailable",
                         "no response from " + config.url + ": " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw SenseError("endpoint_unavailable",
                         config.url + " answered HTTP " + std::to_string(res->status));

    json doc = json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() ||
        doc["choices"].empty() || !doc["choices"][0].contains("message") ||
        !doc["choices"][0]["message"].contains("content") ||
        !doc["choices"][0]["message"]["content"].is_string())
        throw SenseError("malformed_response", "reply envelope is not a chat completion");
    return doc["choices"][0]["message"]["content"].get<std::string>();
}

template <typename Parse>
auto remote_call(const RemoteConfig& config, const ChatMessages& messages, Parse parse) {
    auto limiter = shared_limiter(config.concurrency);
    for (int attempt = 0;; ++attempt) {
        try {
            limiter->acquire();
            std::string content;
            try {
                content = chat_once(config, messages);
            } catch (...) {
                limiter->release();
                throw;
            }
            limiter->release();
            return parse(content);
        } catch (const SenseError& e) {
            if (e.code() == "malformed_response" && attempt < config.max_retries) continue;
            throw;
        }
    }
}

bool is_remote_failure(const SenseError& e) {
    return e.code() == "endpoint_unavailable" || e.code() == "malformed_response" ||
           e.code() == "contract_violation";
}

}  // namespace

std::string extract_json_payload(const std::string& reply) {
    std::size_t start = std::string::npos;
    for (std::size_t i = 0; i < reply.size(); ++i) {
        if (reply[i] == '{' || reply[i] == '[') {
            start = i;
            break;
        }
    }
    if (start == std::string::npos)
        throw SenseError("malformed_response", "reply contains no JSON object");

    int depth = 0;
    bool in_str = false;
    char quote = '"';
    for (std::size_t i = start; i < reply.size(); ++i) {
        const char c = reply[i];
        if (in_str) {
            if (c == '\\')
                ++i;
            else if (c == quote)
                in_str = false;
            continue;
        }
        if (c == '"' || c == '\'') {
            in_str = true;
            quote = c;
        } else if (c == '{' || c == '[' || c == '(') {
            ++depth;
        } else if (c == '}' || c == ']' || c == ')') {
            --depth;
            if (depth == 0) return reply.substr(start, i - start + 1);
        }
    }
    throw SenseError("malformed_response", "reply JSON object is unbalanced");
}

RefineResponse parse_refine_reply(const std::string& reply) {
    const json doc = parse_payload(reply);
    if (!doc.is_object() || !doc.contains("final_path"))
        throw SenseError("contract_violation", "reply lacks final_path");
    return RefineResponse{parse_path(doc["final_path"]), optional_text(doc, "explanation")};
}

TieBreakResponse parse_tiebreak_reply(const std::string& reply, const TieBreakRequest& req) {
    std::string chosen;
    bool structured = true;
    json doc;
    try {
        doc = parse_payload(reply);
    } catch (const SenseError&) {
        structured = false;  // bare id replies are allowed
    }
    if (structured) {
        if (doc.is_string()) {
            chosen = doc.get<std::string>();
        } else if (doc.is_array() && !doc.empty() && doc[0].is_string()) {
            chosen = doc[0].get<std::string>();
        } else if (doc.is_object()) {
            static const char* keys[] = {"selected_participants", "selected", "ids",
                                         "id", "participant_id", "chosen", "worker_id"};
            for (const char* key : keys) {
                if (!doc.contains(key)) continue;
                const json& val = doc[key];
                if (val.is_string())
                    chosen = val.get<std::string>();
                else if (val.is_array() && !val.empty() && val[0].is_string())
                    chosen = val[0].get<std::string>();
                break;
            }
        }
        if (chosen.empty())
            throw SenseError("contract_violation", "tie-break reply names no participant");
    } else {
        chosen = trim_token(reply);
        if (chosen.empty())
            throw SenseError("malformed_response", "empty tie-break reply");
    }
    for (const auto& cand : req.candidates)
        if (cand.id == chosen) return TieBreakResponse{chosen};
    throw SenseError("contract_violation", "chosen id '" + chosen + "' is not a tied candidate");
}

ProposalResponse parse_propose_reply(const std::string& reply, const ProposalRequest& req) {
    const json doc = parse_payload(reply);
    if (!doc.is_object() || !doc.contains("refined_routes") || !doc["refined_routes"].is_object())
        throw SenseError("contract_violation", "reply lacks refined_routes");
    const json& routes = doc["refined_routes"];
    auto path_for = [&](const std::string& id, const char* alias) -> const json& {
        if (routes.contains(id)) return routes[id];
        if (routes.contains(alias)) return routes[alias];
        throw SenseError("contract_violation", "refined_routes lacks a path for '" + id + "'");
    };
    ProposalResponse out;
    out.route_u = parse_path(path_for(req.u.participant.id(), "u"));
    out.route_v = parse_path(path_for(req.v.participant.id(), "v"));
    if (doc.contains("incentives") && doc["incentives"].is_object()) {
        const json& inc = doc["incentives"];
        out.incentive_u = optional_text(inc, req.u.participant.id().c_str());
        if (out.incentive_u.empty()) out.incentive_u = optional_text(inc, "u");
        out.incentive_v = optional_text(inc, req.v.participant.id().c_str());
        if (out.incentive_v.empty()) out.incentive_v = optional_text(inc, "v");
    }
    return out;
}

FeedbackResponse parse_feedback_reply(const std::string& reply) {
    const json doc = parse_payload(reply);
    if (!doc.is_object() || !doc.contains("agreement"))
        throw SenseError("contract_violation", "reply lacks agreement");
    if (!doc["agreement"].is_boolean())
        throw SenseError("contract_violation", "agreement is not a boolean");
    return FeedbackResponse{doc["agreement"].get<bool>(), optional_text(doc, "feedback")};
}

RemoteConfig RemoteConfig::from_env() {
    RemoteConfig config;
    const char* url = std::getenv("SF_LLM_URL");
    if (!url || !*url)
        throw SenseError("endpoint_unavailable", "SF_LLM_URL is not set");
    config.url = url;
    if (const char* v = std::getenv("SF_LLM_KEY")) config.key = v;
    if (const char* v = std::getenv("SF_LLM_MODEL")) config.model = v;
    if (const char* v = std::getenv("SF_LLM_TIMEOUT_MS"))
        config.timeout_ms = std::max(1, std::atoi(v));
    if (const char* v = std::getenv("SF_LLM_CONCURRENCY"))
        config.concurrency = std::max(1, std::atoi(v));
    return config;
}

RefineResponse remote_refine(const RefineRequest& req, const TaskSpec& spec,
                             const RemoteConfig& config) {
    return remote_call(config, render_refine_prompt(req, spec),
                       [](const std::string& reply) { return parse_refine_reply(reply); });
}

TieBreakResponse remote_tiebreak(const TieBreakRequest& req, const RemoteConfig& config) {
    return remote_call(config, render_tiebreak_prompt(req), [&](const std::string& reply) {
        return parse_tiebreak_reply(reply, req);
    });
}

ProposalResponse remote_propose(const ProposalRequest& req, const TaskSpec& spec,
                                const RemoteConfig& config) {
    return remote_call(config, render_propose_prompt(req, spec),
                       [&](const std::string& reply) { return parse_propose_reply(reply, req); });
}

FeedbackResponse remote_feedback(const FeedbackRequest& req, const TaskSpec& spec,
                                 const RemoteConfig& config) {
    return remote_call(config, render_feedback_prompt(req, spec),
                       [](const std::string& reply) { return parse_feedback_reply(reply); });
}

PolicySet remote_policies(RemoteConfig config) {
    PolicySet set;
    set.refine = [config](const RefineRequest& req, const TaskSpec& spec) {
        try {
            return remote_refine(req, spec, config);
        } catch (const SenseError& e) {
            if (!is_remote_failure(e)) throw;
            return RefineResponse{req.initial_route, "endpoint failure (" + e.code() +
                                                         "): kept the input route"};
        }
    };
    set.tiebreak = [config](const TieBreakRequest& req) {
        try {
            return remote_tiebreak(req, config);
        } catch (const SenseError& e) {
            if (!is_remote_failure(e)) throw;
            return heuristic_tiebreak(req);
        }
    };
    set.propose = [config](const ProposalRequest& req, const TaskSpec& spec) {
        try {
            return remote_propose(req, spec, config);
        } catch (const SenseError& e) {
            if (!is_remote_failure(e)) throw;
            return ProposalResponse{req.u.route, req.v.route, "", ""};
        }
    };
    set.feedback = [config](const FeedbackRequest& req, const TaskSpec& spec) {
        (void)spec;
        try {
            return remote_feedback(req, spec, config);
        } catch (const SenseError& e) {
            if (!is_remote_failure(e)) throw;
            return FeedbackResponse{false, "endpoint failure (" + e.code() + "): rejected"};
        }
    };
    return set;
}

}  // namespace senseforge::policy
