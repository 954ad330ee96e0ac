#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "senseforge/baselines.hpp"
#include "senseforge/domain.hpp"
#include "senseforge/policy.hpp"

namespace senseforge::pipeline {

struct SelectionScore {
    std::string id;
    double gain_norm = 0.0;      // normalized marginal coverage gain
    double fairness_norm = 0.0;  // normalized 1/(1+history)
    double score = 0.0;          // blended selection score
};

struct SelectionState {
    std::vector<std::string> selected;  // selection order
    double remaining_budget = 0.0;
    std::vector<SelectionScore> log;  // one row per pick
};

struct TranscriptEntry {
    std::string u;
    std::string v;
    int round = 0;  // 1-based within the pair
    Route proposed_u;
    Route proposed_v;
    bool u_accept = false;
    bool v_accept = false;
    bool committed = false;
    std::string feedback_u;
    std::string feedback_v;
    std::string incentive_u;
    std::string incentive_v;
    std::string note;  // "no_change_proposed" / "commit_gate_failed" when set
};

struct NegotiationState {
    std::map<std::string, Route> routes;
    std::set<std::pair<std::string, std::string>> failed_pairs;  // first < second
    std::vector<TranscriptEntry> transcript;
};

// Participation gate: the window must fit the horizon and the trip must be
// coverable at the participant's speed.
bool accept_task(const Participant& participant, const TaskSpec& spec);

// Baseline seed plus up to max_refine_iters policy refinements; a candidate
// replaces the incumbent only when it validates and strictly improves
// lambda*phi({r}) + (1-lambda)*PSS(r).
Route generate_route(const Participant& participant, const TaskSpec& spec, const GridMap& grid,
                     const policy::PolicySet& policies, const std::string& instructions = "");

// Budgeted greedy over the blended score of normalized coverage gain and
// fairness; score ties within tie_epsilon go to the tie-break policy.
// `histories` overrides each participant's own history count when present.
SelectionState select_participants(const std::vector<const Participant*>& candidates,
                                   const std::map<std::string, Route>& routes,
                                   const std::map<std::string, int>& histories,
                                   const TaskSpec& spec, const policy::PolicySet& policies);

// Consent-driven overlap reduction: up to `max_pairs` times, pick the
// max-overlap pair not yet failed, run at most max_negotiation_rounds
// propose/feedback rounds, and commit only on mutual acceptance of a
// validating, length-preserving proposal. max_pairs < 0 means
// min(n*(n-1)/2, max_pair_attempts).
NegotiationState negotiate(NegotiationState state,
                           const std::vector<const Participant*>& participants,
                           const TaskSpec& spec, const GridMap& grid,
                           const policy::PolicySet& policies, int max_pairs = -1);

struct Snapshot {
    double overlap_pct = 0.0;  // mean pairwise overlap, percent
    double coverage = 0.0;     // coverage utility over the route union
    double entropy = 0.0;
    long long count = 0;  // covered point count
    double mean_pss = 0.0;
};

Snapshot snapshot_of(const std::map<std::string, Route>& routes,
                     const std::vector<const Participant*>& participants, const TaskSpec& spec);

struct PipelineResult {
    baselines::PlanResult plan;  // post-negotiation
    SelectionState selection;
    NegotiationState negotiation;
    Snapshot before;  // selected routes prior to negotiation
    Snapshot after;
};

PipelineResult run_pipeline(const Instance& instance, const policy::PolicySet& policies,
                            const std::map<std::string, int>& histories = {},
                            int max_pairs = -1);

struct Decision {
    std::string id;
    std::string decision;  // unaffected | rerouted | stuck | destination_blocked | detoured
};

struct DisturbanceOutcome {
    std::map<std::string, Route> routes;
    std::vector<Decision> decisions;  // participant order
};

// Per-participant reaction to mid-task events: blocked cells force a reroute
// around the blocked windows (or leave the route in place when the
// destination itself is blocked or no alternative exists); priority regions
// attract a detour when the utility gain plus bonus is positive.
DisturbanceOutcome apply_disturbance(const std::map<std::string, Route>& routes,
                                     const std::vector<DisturbanceEvent>& events,
                                     const std::vector<const Participant*>& participants,
                                     const TaskSpec& spec, const GridMap& grid);

}  // namespace senseforge::pipeline
