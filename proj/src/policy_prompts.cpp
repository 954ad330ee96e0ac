#include <algorithm>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "senseforge/policy.hpp"

namespace senseforge::policy {

const char kPromptVersion[] = "v1";

namespace {

std::string replace_all(std::string text, const std::string& token, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        text.replace(pos, token.size(), value);
        pos += value.size();
    }
    return text;
}

std::string point_str(Coord c, int t) {
    return "(" + std::to_string(c.x) + ", " + std::to_string(c.y) + ", " + std::to_string(t) + ")";
}

std::string task_setting(const TaskSpec& spec) {
    return "grid " + std::to_string(spec.grid->width()) + "x" +
           std::to_string(spec.grid->height()) + ", time steps 0.." +
           std::to_string(spec.horizon) + " (" + std::to_string(spec.interval_minutes) +
           " minutes each), budget " + std::to_string(spec.budget);
}

std::string schedule_str(const Participant& p) {
    return "from (" + std::to_string(p.origin().x) + ", " + std::to_string(p.origin().y) +
           ") at t=" + std::to_string(p.depart()) + " to (" + std::to_string(p.destination().x) +
           ", " + std::to_string(p.destination().y) + ") by t=" + std::to_string(p.arrive()) +
           ", speed " + std::to_string(p.speed());
}

// The prompts offer grid attribute lookups; instead of a tool loop the
// relevant table is embedded directly, capped to keep prompts bounded.
constexpr int kMaxAttributeRows = 400;

std::string grid_attribute_table(const GridMap& grid, int x_lo, int y_lo, int x_hi, int y_hi) {
    x_lo = std::max(x_lo, 0);
    y_lo = std::max(y_lo, 0);
    x_hi = std::min(x_hi, grid.width() - 1);
    y_hi = std::min(y_hi, grid.height() - 1);
    std::string out;
    int rows = 0;
    for (int x = x_lo; x <= x_hi; ++x) {
        for (int y = y_lo; y <= y_hi; ++y) {
            if (rows == kMaxAttributeRows) {
                out += "... (truncated)\n";
                return out;
            }
            const Coord c{x, y};
            out += "(" + std::to_string(x) + ", " + std::to_string(y) +
                   "): land_use=" + land_use_names()[grid.dominant_category(c)] +
                   ", crime=" + std::to_string(grid.at(c).crime_count) + "\n";
            ++rows;
        }
    }
    return out;
}

std::string route_attribute_table(const GridMap& grid, std::initializer_list<const Route*> routes,
                                  int margin) {
    int x_lo = grid.width(), y_lo = grid.height(), x_hi = -1, y_hi = -1;
    for (const Route* route : routes) {
        for (const auto& pt : route->points) {
            x_lo = std::min(x_lo, pt.x);
            y_lo = std::min(y_lo, pt.y);
            x_hi = std::max(x_hi, pt.x);
            y_hi = std::max(y_hi, pt.y);
        }
    }
    if (x_hi < 0) return "";
    return grid_attribute_table(grid, x_lo - margin, y_lo - margin, x_hi + margin, y_hi + margin);
}

const char kRefineSystem[] =
    "You are a worker agent participating in an urban sensing task on a 2D grid of size "
    "{grid_size}. Time steps range from {start_time} to {end_time}. At each time step, you may "
    "move up to {speed} grid units in total distance (Manhattan metric), choosing among up, "
    "down, left, right, or staying in place.\n"
    "\n"
    "Your goal is to plan a feasible and realistic route from the origin to the destination, "
    "balancing efficiency, personal preferences, and overall convenience.\n"
    "\n"
    "Grid-level environmental attributes for the relevant area (dominant land use and crime "
    "count per cell):\n"
    "{grid_attributes}";

const char kRefineUser[] =
    "Please help optimize the path for the worker traveling from {start_point} to {end_point} "
    "(x, y, t), with a speed limit of {speed} grids per unit time.\n"
    "\n"
    "Here is an initial path for the worker to begin with:\n"
    "{initial_path_str}\n"
    "\n"
    "The worker has {residual_step} residual step(s) remaining after completing the initial "
    "path.\n"
    "\n"
    "The worker's profile and preferences are as follows:\n"
    "{worker_profile}\n"
    "\n"
    "Here are additional instructions from the coordinator agent regarding path planning:\n"
    "Instruction: {instructions}\n"
    "Please carefully take the coordinator agent's instructions into account when generating "
    "the final path.\n"
    "\n"
    "Please generate an optimized path following these steps:\n"
    "1. Use the residual {residual_step} step(s) to add new waypoints along the initial path. "
    "These waypoints should prioritize areas that align with the worker's preferences and the "
    "attributes of the region.\n"
    "2. Refine the path to better accommodate the worker's preferred areas and time "
    "constraints.\n"
    "\n"
    "# Output Format:\n"
    "{\n"
    "  final_path: [(x, y, t), ...],\n"
    "  explanation: reasoning process...\n"
    "}\n"
    "\n"
    "Do NOT include any comments or non-coordinate text inside final_path. Do NOT include any "
    "text outside the JSON object.";

const char kTieBreakSystem[] =
    "You are a fairness-aware assistant for participant selection in an urban sensing task.\n"
    "\n"
    "You are given a set of candidate participants who are tied according to quantitative "
    "selection criteria and all satisfy budget and feasibility constraints. For each candidate, "
    "you are provided with a short profile containing background and historical participation "
    "information.\n"
    "\n"
    "Your task is to select one participant by considering high-level fairness and equity "
    "principles that are not captured by numerical scores, such as prior participation "
    "opportunities or socioeconomic context.";

const char kTieBreakUser[] =
    "The following candidate participants are tied under the current selection criteria. All "
    "candidates satisfy feasibility and budget constraints. For each candidate, a profile is "
    "provided including background information and historical participation records. Select "
    "one participant from the list based on fairness considerations.\n"
    "\n"
    "- Candidates:\n"
    "{candidates}\n"
    "# Output: Return the ids of the selected participants.";

const char kProposeSystem[] =
    "You are a coordinator agent responsible for refining sensing routes through negotiation "
    "in an urban sensing task. You act as a mediator between participant agents and cannot "
    "enforce route changes; all refinements must be accepted by the participants.\n"
    "\n"
    "Your objective is to propose refined routes that:\n"
    "- reduce spatial overlap between participants;\n"
    "- remain feasible under task setting and constraints;\n"
    "- respect participant preferences as much as possible.\n"
    "\n"
    "You should iteratively improve your proposals based on feedback from previous negotiation "
    "rounds.\n"
    "\n"
    "Task setting: {task_setting}\n"
    "\n"
    "Grid-level attributes for the area covered by both routes (dominant land use and crime "
    "count per cell):\n"
    "{grid_attributes}";

const char kProposeUser[] =
    "Two participants have been identified with highly overlapping routes.\n"
    "\n"
    "Participant u: {ID: {u}, Route: {route_u}, Profile: {profile_u}, Feedback: {feedback_u}}\n"
    "\n"
    "Participant v: {ID: {v}, Route: {route_v}, Profile: {profile_v}, Feedback: {feedback_v}}\n"
    "\n"
    "Your task is to propose refined routes for both participants that reduce overlap while "
    "keeping each participant's origin and destination unchanged. Adjustments should focus on "
    "overlapping or middle segments and preserve route feasibility and realism.\n"
    "\n"
    "You may optionally provide short incentive messages explaining the rationale behind the "
    "proposed refinements to each participant.\n"
    "\n"
    "# Output Format:\n"
    "{\n"
    "  \"refined_routes\": {\n"
    "    \"{u}\": [(x, y, t), ...],\n"
    "    \"{v}\": [(x, y, t), ...]\n"
    "  },\n"
    "  \"incentives\": {\n"
    "    \"{u}\": \"incentive to accept refined route...\",\n"
    "    \"{v}\": \"incentive to accept refined route...\"\n"
    "  }\n"
    "}\n"
    "\n"
    "Do NOT include any text outside the JSON object.";

const char kFeedbackSystem[] =
    "You are a participant agent in an urban sensing task. Your role is to evaluate route "
    "refinements proposed by the coordinator agent and decide whether to accept them.\n"
    "\n"
    "Your decision should consider the following information:\n"
    "- Task setting: {task_setting}\n"
    "- Your schedule: {schedule}\n"
    "- Your profile and preferences: {participant_profile}\n"
    "\n"
    "When making decision, consider the following criteria:\n"
    "- feasibility considering your schedule and task constraints;\n"
    "- alignment with your personal preferences; and\n"
    "- the reasonableness of the coordinator's explanation.\n"
    "\n"
    "You may tolerate minor inconvenience if the proposal is well justified. If you reject a "
    "proposal, clearly state the primary reason for rejection.";

const char kFeedbackUser[] =
    "A refined route has been proposed for you.\n"
    "- Proposed route: {proposed_route}\n"
    "- Original route: {original_route}\n"
    "- Coordinator message (if any): {incentive_message}\n"
    "- Feedback from previous negotiation rounds (if any): {feedback_memory}\n"
    "\n"
    "Your task is to determine whether to accept the proposed route.\n"
    "\n"
    "# Output Format:\n"
    "{\n"
    "  agreement: True/False,\n"
    "  feedback: Brief explanation of your decision. If rejected, clearly state the main "
    "reason.\n"
    "}\n"
    "\n"
    "Do NOT include any text outside the JSON object.";

}  // namespace

std::string render_route(const Route& route) {
    std::string out = "[";
    for (std::size_t i = 0; i < route.points.size(); ++i) {
        if (i) out += ", ";
        out += point_str(route.points[i].cell(), route.points[i].t);
    }
    return out + "]";
}

std::string render_profile(const ParticipantProfile& profile, const std::string& worker_id,
                           const std::array<double, kNumLandUse>& preference, double speed) {
    nlohmann::ordered_json doc;
    doc["worker_id"] = worker_id;
    doc["gender"] = profile.gender;
    doc["age"] = profile.age;
    doc["age_group"] = profile.age_group;
    doc["economic_status"] = profile.economic_status;
    doc["hobbies"] = profile.hobbies;
    doc["type"] = profile.archetype;
    doc["description"] = profile.description;
    nlohmann::ordered_json prefs;
    for (std::size_t i = 0; i < kNumLandUse; ++i)
        prefs[land_use_names()[i] + "_area"] = preference[i];
    doc["preferences"] = std::move(prefs);
    doc["speed"] = speed;
    return doc.dump(2);
}

ChatMessages render_refine_prompt(const RefineRequest& req, const TaskSpec& spec) {
    const GridMap& grid = req.grid ? *req.grid : *spec.grid;
    const Participant& p = req.participant;
    const int margin = std::max(req.residual_steps, 1) * p.speed();

    std::string system = kRefineSystem;
    system = replace_all(system, "{grid_size}",
                         std::to_string(grid.width()) + "x" + std::to_string(grid.height()));
    system = replace_all(system, "{start_time}", std::to_string(p.depart()));
    system = replace_all(system, "{end_time}", std::to_string(p.arrive()));
    system = replace_all(system, "{speed}", std::to_string(p.speed()));
    system = replace_all(system, "{grid_attributes}",
                         route_attribute_table(grid, {&req.initial_route}, margin));

    std::string user = kRefineUser;
    user = replace_all(user, "{start_point}", point_str(p.origin(), p.depart()));
    user = replace_all(user, "{end_point}", point_str(p.destination(), p.arrive()));
    user = replace_all(user, "{speed}", std::to_string(p.speed()));
    user = replace_all(user, "{initial_path_str}", render_route(req.initial_route));
    user = replace_all(user, "{residual_step}", std::to_string(req.residual_steps));
    user = replace_all(user, "{worker_profile}",
                       render_profile(p.profile(), p.id(), p.preference(), p.speed()));
    user = replace_all(user, "{instructions}",
                       req.instructions.empty() ? "(none)" : req.instructions);
    return ChatMessages{std::move(system), std::move(user)};
}

ChatMessages render_tiebreak_prompt(const TieBreakRequest& req) {
    std::string candidates;
    for (const auto& cand : req.candidates) {
        candidates += "(" + cand.id + ", history=" + std::to_string(cand.history_count) + ", " +
                      render_profile(cand.profile, cand.id, {}, 0.0) + ")\n";
    }
    return ChatMessages{kTieBreakSystem,
                        replace_all(kTieBreakUser, "{candidates}", candidates)};
}

ChatMessages render_propose_prompt(const ProposalRequest& req, const TaskSpec& spec) {
    const GridMap& grid = *spec.grid;
    std::string system = kProposeSystem;
    system = replace_all(system, "{task_setting}", task_setting(spec));
    system = replace_all(system, "{grid_attributes}",
                         route_attribute_table(grid, {&req.u.route, &req.v.route}, 1));

    auto side = [](const NegotiationParty& party, std::string text, const std::string& id_tok,
                   const std::string& route_tok, const std::string& profile_tok,
                   const std::string& feedback_tok) {
        const Participant& p = party.participant;
        text = replace_all(std::move(text), id_tok, p.id());
        text = replace_all(std::move(text), route_tok, render_route(party.route));
        text = replace_all(std::move(text), profile_tok,
                           render_profile(p.profile(), p.id(), p.preference(), p.speed()));
        text = replace_all(std::move(text), feedback_tok,
                           party.feedback.empty() ? "(none)" : party.feedback);
        return text;
    };
    std::string user = kProposeUser;
    user = side(req.u, std::move(user), "{u}", "{route_u}", "{profile_u}", "{feedback_u}");
    user = side(req.v, std::move(user), "{v}", "{route_v}", "{profile_v}", "{feedback_v}");
    return ChatMessages{std::move(system), std::move(user)};
}

ChatMessages render_feedback_prompt(const FeedbackRequest& req, const TaskSpec& spec) {
    const Participant& p = req.participant;
    std::string system = kFeedbackSystem;
    system = replace_all(system, "{task_setting}", task_setting(spec));
    system = replace_all(system, "{schedule}", schedule_str(p));
    system = replace_all(system, "{participant_profile}",
                         render_profile(p.profile(), p.id(), p.preference(), p.speed()));

    std::string user = kFeedbackUser;
    user = replace_all(user, "{proposed_route}", render_route(req.proposed));
    user = replace_all(user, "{original_route}", render_route(req.original));
    user = replace_all(user, "{incentive_message}",
                       req.incentive.empty() ? "(none)" : req.incentive);
    user = replace_all(user, "{feedback_memory}",
                       req.feedback_memory.empty() ? "(none)" : req.feedback_memory);
    return ChatMessages{std::move(system), std::move(user)};
}

}  // namespace senseforge::policy
