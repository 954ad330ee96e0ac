#include "senseforge/policy.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "senseforge/detail/coverage_stats.hpp"
#include "senseforge/metrics.hpp"
#include "senseforge/routing.hpp"

namespace senseforge::policy {

namespace {

std::set<Coord> visited_cells(const Route& route) {
    std::set<Coord> cells;
    for (const auto& pt : route.points) cells.insert(pt.cell());
    return cells;
}

}  // namespace

RefineResponse heuristic_refine(const RefineRequest& req, const TaskSpec& spec) {
    const GridMap& grid = *spec.grid;
    const auto sched = routing::schedule_of(req.participant);

    Route route = req.initial_route;
    detail::CoverageStats stats = detail::CoverageStats::for_task(spec);
    stats.add_route(route);
    double phi_cur = stats.phi(spec.alpha, spec.log_base);
    double pss_cur = metrics::path_satisfaction(route, req.participant, grid, spec.mu);

    std::vector<Coord> added;
    int remaining = req.residual_steps;
    while (remaining > 0) {
        const auto on_route = visited_cells(route);
        struct Best {
            double delta;
            double phi;
            double pss;
            Coord via;
            Route route;
        };
        std::optional<Best> best;
        for (int x = 0; x < grid.width(); ++x) {
            for (int y = 0; y < grid.height(); ++y) {
                const Coord via{x, y};
                if (on_route.count(via)) continue;
                auto cand = routing::insert_detour(route, via, sched, grid);
                if (!cand || cand->points == route.points) continue;
                const double phi_new =
                    detail::phi_from(stats.preview_swap(route, *cand), spec.alpha, spec.log_base);
                const double pss_new =
                    metrics::path_satisfaction(*cand, req.participant, grid, spec.mu);
                const double delta = spec.lambda_ * (phi_new - phi_cur) +
                                     (1.0 - spec.lambda_) * (pss_new - pss_cur);
                if (delta <= 0.0) continue;
                // ties keep the first hit, i.e. the lowest (x, y) in scan order
                if (!best || delta > best->delta)
                    best = Best{delta, phi_new, pss_new, via, std::move(*cand)};
            }
        }
        if (!best) break;
        stats.remove_route(route);
        route = std::move(best->route);
        stats.add_route(route);
        phi_cur = best->phi;
        pss_cur = best->pss;
        added.push_back(best->via);
        --remaining;
    }

    std::string explanation;
    if (added.empty()) {
        explanation = "kept the initial path; no detour improves utility";
    } else {
        explanation = "added waypoints:";
        for (const Coord& c : added)
            explanation += " (" + std::to_string(c.x) + ", " + std::to_string(c.y) + ")";
    }
    return RefineResponse{std::move(route), std::move(explanation)};
}

TieBreakResponse heuristic_tiebreak(const TieBreakRequest& req) {
    if (req.candidates.empty())
        throw SenseError("no_candidates", "tie-break request with no candidates");
    const TieBreakCandidate* best = &req.candidates.front();
    for (const auto& cand : req.candidates) {
        if (cand.history_count < best->history_count ||
            (cand.history_count == best->history_count && cand.id < best->id))
            best = &cand;
    }
    return TieBreakResponse{best->id};
}

ProposalResponse heuristic_propose(const ProposalRequest& req, const TaskSpec& spec) {
    const GridMap& grid = *spec.grid;
    const ProposalResponse echo{req.u.route, req.v.route, "", ""};

    const auto cells_u = visited_cells(req.u.route);
    const auto cells_v = visited_cells(req.v.route);
    std::set<Coord> overlap;
    std::set_intersection(cells_u.begin(), cells_u.end(), cells_v.begin(), cells_v.end(),
                          std::inserter(overlap, overlap.begin()));
    if (overlap.empty()) return echo;

    // Overlap stake: how many shared cells sit in the party's favorite land-use
    // class. The party with less to lose is asked to move first.
    auto stake = [&](const Participant& p) {
        const auto& pref = p.preference();
        const auto fav = static_cast<std::size_t>(
            std::max_element(pref.begin(), pref.end()) - pref.begin());
        int n = 0;
        for (const Coord& c : overlap)
            if (grid.dominant_category(c) == fav) ++n;
        return n;
    };
    const int stake_u = stake(req.u.participant);
    const int stake_v = stake(req.v.participant);
    bool u_moves = stake_u < stake_v ||
                   (stake_u == stake_v && req.u.participant.id() <= req.v.participant.id());
    // A party that already pushed back gets spared on the next attempt.
    if (u_moves && !req.u.feedback.empty() && req.v.feedback.empty()) u_moves = false;
    if (!u_moves && !req.v.feedback.empty() && req.u.feedback.empty()) u_moves = true;

    const double overlap_before = metrics::route_overlap(req.u.route, req.v.route);
    auto attempt = [&](const NegotiationParty& side, const Route& other) -> std::optional<Route> {
        const Route& route = side.route;
        std::size_t first = route.points.size();
        std::size_t last = 0;
        for (std::size_t i = 0; i < route.points.size(); ++i) {
            if (!overlap.count(route.points[i].cell())) continue;
            first = std::min(first, i);
            last = std::max(last, i);
        }
        if (first == route.points.size()) return std::nullopt;
        const std::size_t from = first > 0 ? first - 1 : 0;
        const std::size_t to = std::min(last + 1, route.points.size() - 1);
        if (to - from < 2) return std::nullopt;
        // Ideally the detour leaves the partner's corridor entirely; settle for
        // dodging just the shared cells when that is the only feasible move.
        std::set<Coord> partner_cells(visited_cells(other));
        partner_cells.insert(overlap.begin(), overlap.end());
        for (const auto* avoid : {&partner_cells, &overlap}) {
            auto out = routing::reroute_segment(route, from, to, *avoid, grid,
                                                side.participant.speed());
            if (!out || out->points == route.points) continue;
            if (metrics::route_overlap(*out, other) >= overlap_before) continue;
            return out;
        }
        return std::nullopt;
    };

    for (int pass = 0; pass < 2; ++pass) {
        const bool moving_u = pass == 0 ? u_moves : !u_moves;
        const auto& mover = moving_u ? req.u : req.v;
        const auto& stayer = moving_u ? req.v : req.u;
        auto rerouted = attempt(mover, stayer.route);
        if (!rerouted) continue;
        const std::string move_note = "reroute avoids the " + std::to_string(overlap.size()) +
                                      " shared cell(s); origin, destination and timing unchanged";
        const std::string stay_note = "partner reroutes around the shared segment; your route stays as is";
        if (moving_u)
            return ProposalResponse{std::move(*rerouted), req.v.route, move_note, stay_note};
        return ProposalResponse{req.u.route, std::move(*rerouted), stay_note, move_note};
    }
    return echo;
}

FeedbackResponse heuristic_feedback(const FeedbackRequest& req, const TaskSpec& spec,
                                    double delta) {
    if (!validate_route(req.proposed, req.participant, spec).ok)
        return FeedbackResponse{false, "infeasible"};
    const GridMap& grid = *spec.grid;
    const double pss_new = metrics::path_satisfaction(req.proposed, req.participant, grid, spec.mu);
    const double pss_old = metrics::path_satisfaction(req.original, req.participant, grid, spec.mu);
    if (pss_new < pss_old - delta)
        return FeedbackResponse{false, "satisfaction drop exceeds tolerance"};
    return FeedbackResponse{true, ""};
}

PolicySet heuristic_policies(double feedback_delta) {
    PolicySet set;
    set.refine = [](const RefineRequest& req, const TaskSpec& spec) {
        return heuristic_refine(req, spec);
    };
    set.tiebreak = [](const TieBreakRequest& req) { return heuristic_tiebreak(req); };
    set.propose = [](const ProposalRequest& req, const TaskSpec& spec) {
        return heuristic_propose(req, spec);
    };
    set.feedback = [feedback_delta](const FeedbackRequest& req, const TaskSpec& spec) {
        return heuristic_feedback(req, spec, feedback_delta);
    };
    return set;
}

}  // namespace senseforge::policy
