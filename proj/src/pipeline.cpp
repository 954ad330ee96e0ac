#include "senseforge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "senseforge/detail/coverage_stats.hpp"
#include "senseforge/metrics.hpp"
#include "senseforge/routing.hpp"

namespace senseforge::pipeline {

namespace {

using detail::CoverageStats;
using detail::phi_from;

bool route_ok(const Route& route, const Participant& p, const TaskSpec& spec) {
    try {
        return validate_route(route, p, spec).ok;
    } catch (const SenseError&) {
        return false;  // empty or otherwise unscorable candidates fail the gate
    }
}

double route_utility(const Route& route, const Participant& p, const TaskSpec& spec) {
    CoverageStats stats = CoverageStats::for_task(spec);
    stats.add_route(route);
    return spec.lambda_ * stats.phi(spec.alpha, spec.log_base) +
           (1.0 - spec.lambda_) * metrics::path_satisfaction(route, p, *spec.grid, spec.mu);
}

int wait_steps(const Route& route) {
    int waits = 0;
    for (std::size_t i = 1; i < route.points.size(); ++i)
        if (route.points[i].cell() == route.points[i - 1].cell()) ++waits;
    return waits;
}

// Min-max to [0,1]; a constant vector maps to all-ones so the blend stays
// well-defined and true ties reach the tie-break policy.
std::vector<double> min_max(const std::vector<double>& values) {
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<double> out(values.size(), 1.0);
    if (hi - lo > 0.0)
        for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo);
    return out;
}

std::map<std::string, const Participant*> index_by_id(
    const std::vector<const Participant*>& participants) {
    std::map<std::string, const Participant*> by_id;
    for (const Participant* p : participants) by_id.emplace(p->id(), p);
    return by_id;
}

}  // namespace

bool accept_task(const Participant& participant, const TaskSpec& spec) {
    if (participant.depart() < 0 || participant.arrive() > spec.horizon) return false;
    return manhattan(participant.origin(), participant.destination()) <=
           static_cast<long long>(participant.speed()) *
               (participant.arrive() - participant.depart());
}

Route generate_route(const Participant& participant, const TaskSpec& spec, const GridMap& grid,
                     const policy::PolicySet& policies, const std::string& instructions) {
    (void)grid;
    const auto seed = routing::baseline_route(routing::schedule_of(participant), spec);
    Route best = seed.route;
    double best_utility = route_utility(best, participant, spec);

    for (int i = 0; i < spec.max_refine_iters; ++i) {
        policy::RefineRequest req{participant, best, wait_steps(best), instructions, spec.grid};
        const auto response = policies.refine(req, spec);
        const Route& cand = response.final_path;
        if (!route_ok(cand, participant, spec)) continue;
        const double utility = route_utility(cand, participant, spec);
        if (utility > best_utility) {
            best = cand;
            best_utility = utility;
        }
    }
    return best;
}

SelectionState select_participants(const std::vector<const Participant*>& candidates,
                                   const std::map<std::string, Route>& routes,
                                   const std::map<std::string, int>& histories,
                                   const TaskSpec& spec, const policy::PolicySet& policies) {
    SelectionState state;
    state.remaining_budget = spec.budget;

    CoverageStats stats = CoverageStats::for_task(spec);
    double phi_sel = 0.0;
    std::set<std::string> chosen;
    const Route no_route;
    const auto history_of = [&](const Participant& p) {
        const auto it = histories.find(p.id());
        return it != histories.end() ? it->second : p.history_count();
    };

    for (;;) {
        std::vector<const Participant*> feasible;
        for (const Participant* p : candidates)
            if (!chosen.count(p->id()) && p->cost() <= state.remaining_budget)
                feasible.push_back(p);
        if (feasible.empty()) break;

        std::vector<double> gain(feasible.size()), fairness(feasible.size());
        for (std::size_t i = 0; i < feasible.size(); ++i) {
            gain[i] = phi_from(stats.preview_swap(no_route, routes.at(feasible[i]->id())),
                               spec.alpha, spec.log_base) -
                      phi_sel;
            fairness[i] = 1.0 / (1.0 + history_of(*feasible[i]));
        }
        const auto gain_norm = min_max(gain);
        const auto fair_norm = min_max(fairness);
        std::vector<double> score(feasible.size());
        for (std::size_t i = 0; i < feasible.size(); ++i)
            score[i] = spec.beta * gain_norm[i] + (1.0 - spec.beta) * fair_norm[i];

        const double top = *std::max_element(score.begin(), score.end());
        std::vector<std::size_t> tied;
        for (std::size_t i = 0; i < feasible.size(); ++i)
            if (score[i] >= top - spec.tie_epsilon) tied.push_back(i);

        std::size_t pick = tied.front();
        if (tied.size() > 1) {
            policy::TieBreakRequest req;
            for (std::size_t i : tied)
                req.candidates.push_back(policy::TieBreakCandidate{
                    feasible[i]->id(), feasible[i]->profile(), history_of(*feasible[i])});
            std::string chosen_id;
            try {
                chosen_id = policies.tiebreak(req).chosen_id;
            } catch (const SenseError&) {
                chosen_id = policy::heuristic_tiebreak(req).chosen_id;
            }
            bool found = false;
            for (std::size_t i : tied) {
                if (feasible[i]->id() == chosen_id) {
                    pick = i;
                    found = true;
                    break;
                }
            }
            if (!found) {  // policy named a non-candidate; fall back to the tie rule
                const std::string fallback = policy::heuristic_tiebreak(req).chosen_id;
                for (std::size_t i : tied)
                    if (feasible[i]->id() == fallback) pick = i;
            }
        }

        const Participant& winner = *feasible[pick];
        chosen.insert(winner.id());
        state.selected.push_back(winner.id());
        state.remaining_budget -= winner.cost();
        stats.add_route(routes.at(winner.id()));
        phi_sel = stats.phi(spec.alpha, spec.log_base);
        state.log.push_back(
            SelectionScore{winner.id(), gain_norm[pick], fair_norm[pick], score[pick]});
    }
    return state;
}

NegotiationState negotiate(NegotiationState state,
                           const std::vector<const Participant*>& participants,
                           const TaskSpec& spec, const GridMap& grid,
                           const policy::PolicySet& policies, int max_pairs) {
    (void)grid;
    const auto by_id = index_by_id(participants);
    std::vector<std::string> ids;
    for (const auto& [id, route] : state.routes) ids.push_back(id);

    const long long all_pairs =
        static_cast<long long>(ids.size()) * (static_cast<long long>(ids.size()) - 1) / 2;
    const int n_pairs =
        max_pairs >= 0
            ? max_pairs
            : static_cast<int>(std::min<long long>(all_pairs, spec.max_pair_attempts));

    for (int iter = 0; iter < n_pairs; ++iter) {
        double o_max = -1.0;
        std::pair<std::string, std::string> top;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            for (std::size_t j = i + 1; j < ids.size(); ++j) {
                if (state.failed_pairs.count({ids[i], ids[j]})) continue;
                const double o =
                    metrics::route_overlap(state.routes.at(ids[i]), state.routes.at(ids[j]));
                if (o > o_max) {  // strict: ties keep the lexicographically first pair
                    o_max = o;
                    top = {ids[i], ids[j]};
                }
            }
        }
        if (o_max < spec.overlap_threshold) break;

        const std::string& u = top.first;
        const std::string& v = top.second;
        const Participant& pu = *by_id.at(u);
        const Participant& pv = *by_id.at(v);
        std::string f_u, f_v;
        bool success = false;

        for (int round = 1; round <= spec.max_negotiation_rounds; ++round) {
            policy::ProposalRequest preq{
                policy::NegotiationParty{pu, state.routes.at(u), f_u},
                policy::NegotiationParty{pv, state.routes.at(v), f_v}};
            const auto proposal = policies.propose(preq, spec);

            TranscriptEntry entry;
            entry.u = u;
            entry.v = v;
            entry.round = round;
            entry.proposed_u = proposal.route_u;
            entry.proposed_v = proposal.route_v;
            entry.incentive_u = proposal.incentive_u;
            entry.incentive_v = proposal.incentive_v;

            if (proposal.route_u.points == state.routes.at(u).points &&
                proposal.route_v.points == state.routes.at(v).points) {
                // The coordinator has nothing new; drop to the failed set now
                // rather than looping on identical proposals.
                entry.note = "no_change_proposed";
                state.transcript.push_back(std::move(entry));
                break;
            }

            const auto fb_u = policies.feedback(
                policy::FeedbackRequest{pu, proposal.route_u, state.routes.at(u),
                                        proposal.incentive_u, f_v},
                spec);
            entry.u_accept = fb_u.agreement;
            entry.feedback_u = fb_u.feedback;
            f_u = fb_u.feedback;

            // The second participant sees the first one's fresh feedback.
            const auto fb_v = policies.feedback(
                policy::FeedbackRequest{pv, proposal.route_v, state.routes.at(v),
                                        proposal.incentive_v, f_u},
                spec);
            entry.v_accept = fb_v.agreement;
            entry.feedback_v = fb_v.feedback;
            f_v = fb_v.feedback;

            if (fb_u.agreement && fb_v.agreement) {
                const bool valid =
                    route_ok(proposal.route_u, pu, spec) && route_ok(proposal.route_v, pv, spec) &&
                    proposal.route_u.points.size() == state.routes.at(u).points.size() &&
                    proposal.route_v.points.size() == state.routes.at(v).points.size();
                if (valid) {
                    state.routes.at(u) = proposal.route_u;
                    state.routes.at(v) = proposal.route_v;
                    entry.committed = true;
                    state.transcript.push_back(std::move(entry));
                    success = true;
                    break;
                }
                entry.note = "commit_gate_failed";
            }
            state.transcript.push_back(std::move(entry));
        }
        if (!success) state.failed_pairs.insert({u, v});
    }
    return state;
}

Snapshot snapshot_of(const std::map<std::string, Route>& routes,
                     const std::vector<const Participant*>& participants, const TaskSpec& spec) {
    Snapshot snap;
    if (routes.empty()) return snap;
    const auto by_id = index_by_id(participants);

    CoverageStats stats = CoverageStats::for_task(spec);
    double pss_sum = 0.0;
    for (const auto& [id, route] : routes) {
        stats.add_route(route);
        pss_sum += metrics::path_satisfaction(route, *by_id.at(id), *spec.grid, spec.mu);
    }
    const auto parts = stats.parts();
    snap.count = parts.q;
    snap.coverage = phi_from(parts, spec.alpha, spec.log_base);
    if (parts.q > 0) {
        double entropy = std::log(static_cast<double>(parts.q)) -
                         parts.s / static_cast<double>(parts.q);
        if (spec.log_base == LogBase::base10) entropy /= std::log(10.0);
        snap.entropy = entropy;
    }
    snap.mean_pss = pss_sum / static_cast<double>(routes.size());

    if (routes.size() > 1) {
        double total = 0.0;
        long long pairs = 0;
        for (auto it = routes.begin(); it != routes.end(); ++it) {
            for (auto jt = std::next(it); jt != routes.end(); ++jt) {
                total += metrics::route_overlap(it->second, jt->second);
                ++pairs;
            }
        }
        snap.overlap_pct = 100.0 * total / static_cast<double>(pairs);
    }
    return snap;
}

PipelineResult run_pipeline(const Instance& instance, const policy::PolicySet& policies,
                            const std::map<std::string, int>& histories, int max_pairs) {
    const TaskSpec& spec = instance.spec;
    const GridMap& grid = *spec.grid;

    std::vector<const Participant*> accepted;
    for (const auto& p : instance.participants)
        if (accept_task(p, spec)) accepted.push_back(&p);
    std::sort(accepted.begin(), accepted.end(),
              [](const Participant* a, const Participant* b) { return a->id() < b->id(); });

    std::map<std::string, Route> routes;
    for (const Participant* p : accepted)
        routes.emplace(p->id(), generate_route(*p, spec, grid, policies));

    PipelineResult result;
    result.selection = select_participants(accepted, routes, histories, spec, policies);

    const auto by_id = index_by_id(accepted);
    std::vector<const Participant*> selected;
    NegotiationState nego;
    for (const auto& id : result.selection.selected) {
        selected.push_back(by_id.at(id));
        nego.routes.emplace(id, routes.at(id));
    }

    result.before = snapshot_of(nego.routes, selected, spec);
    result.negotiation = negotiate(std::move(nego), selected, spec, grid, policies, max_pairs);
    result.after = snapshot_of(result.negotiation.routes, selected, spec);
    result.plan =
        baselines::finish_plan(result.selection.selected, result.negotiation.routes, instance);
    return result;
}

DisturbanceOutcome apply_disturbance(const std::map<std::string, Route>& routes,
                                     const std::vector<DisturbanceEvent>& events,
                                     const std::vector<const Participant*>& participants,
                                     const TaskSpec& spec, const GridMap& grid) {
    for (const auto& event : events) validate_event(event, spec);

    const auto blocked_at = [&](Coord cell, int t) {
        for (const auto& event : events) {
            if (event.kind != DisturbanceEvent::Kind::cell_blocked) continue;
            if (event.cell == cell && event.t_from <= t && t <= event.t_to) return true;
        }
        return false;
    };
    const auto hits_blocked = [&](const Route& route) {
        for (const auto& pt : route.points)
            if (blocked_at(pt.cell(), pt.t)) return true;
        return false;
    };

    DisturbanceOutcome outcome;
    outcome.routes = routes;

    for (const Participant* p : participants) {
        const auto it = outcome.routes.find(p->id());
        if (it == outcome.routes.end()) continue;
        Route& route = it->second;

        std::size_t first_hit = route.points.size();
        std::size_t last_hit = 0;
        bool destination_hit = false;
        for (std::size_t i = 0; i < route.points.size(); ++i) {
            if (!blocked_at(route.points[i].cell(), route.points[i].t)) continue;
            if (route.points[i].cell() == p->destination()) destination_hit = true;
            first_hit = std::min(first_hit, i);
            last_hit = std::max(last_hit, i);
        }

        if (destination_hit) {
            outcome.decisions.push_back({p->id(), "destination_blocked"});
            continue;
        }
        if (first_hit < route.points.size()) {
            std::string decision = "stuck";
            if (first_hit > 0 && last_hit + 1 < route.points.size()) {
                const auto rerouted =
                    routing::reroute_segment(route, first_hit - 1, last_hit + 1, blocked_at,
                                             grid, p->speed());
                if (rerouted && !hits_blocked(*rerouted)) {
                    route = *rerouted;
                    decision = "rerouted";
                }
            }
            outcome.decisions.push_back({p->id(), decision});
            continue;
        }

        // No block on the path; consider priority regions worth a detour.
        struct BestDetour {
            double gain;
            Route route;
        };
        std::optional<BestDetour> best;
        const double base_utility = route_utility(route, *p, spec);
        for (const auto& event : events) {
            if (event.kind != DisturbanceEvent::Kind::priority_region) continue;
            auto detoured = routing::insert_detour_within(route, event.cell, event.t_from,
                                                          event.t_to,
                                                          routing::schedule_of(*p), grid);
            if (!detoured || detoured->points == route.points) continue;
            if (hits_blocked(*detoured)) continue;
            const double gain =
                route_utility(*detoured, *p, spec) - base_utility + event.bonus;
            if (gain <= 0.0) continue;
            if (!best || gain > best->gain) best = BestDetour{gain, std::move(*detoured)};
        }
        if (best) {
            route = std::move(best->route);
            outcome.decisions.push_back({p->id(), "detoured"});
        } else {
            outcome.decisions.push_back({p->id(), "unaffected"});
        }
    }
    return outcome;
}

}  // namespace senseforge::pipeline
