#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "senseforge/domain.hpp"

namespace senseforge::policy {

struct RefineRequest {
    Participant participant;  // schedule and profile travel together
    Route initial_route;
    int residual_steps = 0;
    std::string instructions;
    std::shared_ptr<const GridMap> grid;  // attribute lookups for prompt context
};

struct RefineResponse {
    Route final_path;
    std::string explanation;
};

struct TieBreakCandidate {
    std::string id;
    ParticipantProfile profile;
    int history_count = 0;
};

struct TieBreakRequest {
    std::vector<TieBreakCandidate> candidates;
};

struct TieBreakResponse {
    std::string chosen_id;
};

struct NegotiationParty {
    Participant participant;
    Route route;
    std::string feedback;  // accumulated rejections from earlier rounds
};

struct ProposalRequest {
    NegotiationParty u;
    NegotiationParty v;
};

struct ProposalResponse {
    Route route_u;
    Route route_v;
    std::string incentive_u;
    std::string incentive_v;
};

struct FeedbackRequest {
    Participant participant;
    Route proposed;
    Route original;
    std::string incentive;
    std::string feedback_memory;
};

struct FeedbackResponse {
    bool agreement = false;
    std::string feedback;
};

// Tolerated satisfaction drop before the heuristic participant pushes back.
inline constexpr double kFeedbackDelta = 0.05;

RefineResponse heuristic_refine(const RefineRequest& req, const TaskSpec& spec);
TieBreakResponse heuristic_tiebreak(const TieBreakRequest& req);
ProposalResponse heuristic_propose(const ProposalRequest& req, const TaskSpec& spec);
FeedbackResponse heuristic_feedback(const FeedbackRequest& req, const TaskSpec& spec,
                                    double delta = kFeedbackDelta);

// One callable per agent touchpoint so backends can be mixed per touchpoint.
struct PolicySet {
    std::function<RefineResponse(const RefineRequest&, const TaskSpec&)> refine;
    std::function<TieBreakResponse(const TieBreakRequest&)> tiebreak;
    std::function<ProposalResponse(const ProposalRequest&, const TaskSpec&)> propose;
    std::function<FeedbackResponse(const FeedbackRequest&, const TaskSpec&)> feedback;
};

PolicySet heuristic_policies(double feedback_delta = kFeedbackDelta);

struct RemoteConfig {
    std::string url;  // full endpoint URL, e.g. http://host:1234/v1/chat/completions
    std::string key;  // bearer token; empty sends no Authorization header
    std::string model;
    int timeout_ms = 30000;
    int concurrency = 4;
    int max_retries = 2;  // re-asks on unparseable replies only

    // Reads SF_LLM_URL, SF_LLM_KEY, SF_LLM_MODEL, SF_LLM_TIMEOUT_MS,
    // SF_LLM_CONCURRENCY; throws "endpoint_unavailable" when the URL is unset.
    static RemoteConfig from_env();
};

// Direct calls throw SenseError on failure: "endpoint_unavailable" (network,
// timeout, HTTP error), "malformed_response" (no parseable JSON after
// retries), "contract_violation" (JSON parsed but breaks the reply schema).
RefineResponse remote_refine(const RefineRequest& req, const TaskSpec& spec,
                             const RemoteConfig& config);
TieBreakResponse remote_tiebreak(const TieBreakRequest& req, const RemoteConfig& config);
ProposalResponse remote_propose(const ProposalRequest& req, const TaskSpec& spec,
                                const RemoteConfig& config);
FeedbackResponse remote_feedback(const FeedbackRequest& req, const TaskSpec& spec,
                                 const RemoteConfig& config);

// Failure-mapped backend: any of the errors above degrades to the conservative
// default (keep the input route, heuristic tie rule, echo originals, reject)
// so pipeline runs survive a flaky endpoint.
PolicySet remote_policies(RemoteConfig config);

struct ChatMessages {
    std::string system;
    std::string user;
};

extern const char kPromptVersion[];

ChatMessages render_refine_prompt(const RefineRequest& req, const TaskSpec& spec);
ChatMessages render_tiebreak_prompt(const TieBreakRequest& req);
ChatMessages render_propose_prompt(const ProposalRequest& req, const TaskSpec& spec);
ChatMessages render_feedback_prompt(const FeedbackRequest& req, const TaskSpec& spec);

std::string render_profile(const ParticipantProfile& profile, const std::string& worker_id,
                           const std::array<double, kNumLandUse>& preference, double speed);
std::string render_route(const Route& route);

// First complete JSON value in `reply` (brace matched, string aware), with
// common almost-JSON habits normalized first: unquoted keys, single quotes,
// (x, y, t) tuples, True/False/None. Throws "malformed_response".
std::string extract_json_payload(const std::string& reply);

RefineResponse parse_refine_reply(const std::string& reply);
TieBreakResponse parse_tiebreak_reply(const std::string& reply, const TieBreakRequest& req);
ProposalResponse parse_propose_reply(const std::string& reply, const ProposalRequest& req);
FeedbackResponse parse_feedback_reply(const std::string& reply);

}  // namespace senseforge::policy
