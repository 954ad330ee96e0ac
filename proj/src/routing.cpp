#include "senseforge/routing.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace senseforge::routing {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Cells occupied after each step of an x-leg-first Manhattan walk from `from`
// to `to` at full speed; excludes the starting cell.
std::vector<Coord> l_path_cells(Coord from, Coord to, int speed) {
    std::vector<Coord> cells;
    Coord cur = from;
    while (cur != to) {
        int budget = speed;
        const int dx = to.x - cur.x;
        const int sx = dx > 0 ? 1 : -1;
        const int step_x = std::min(budget, std::abs(dx));
        cur.x += sx * step_x;
        budget -= step_x;
        const int dy = to.y - cur.y;
        const int sy = dy > 0 ? 1 : -1;
        const int step_y = std::min(budget, std::abs(dy));
        cur.y += sy * step_y;
        cells.push_back(cur);
    }
    return cells;
}

}  // namespace

Schedule schedule_of(const Participant& participant) {
    return {participant.origin(), participant.destination(), participant.depart(),
            participant.arrive(), participant.speed()};
}

BaselineRoute baseline_route(const Schedule& schedule, const TaskSpec& spec) {
    const GridMap& grid = *spec.grid;
    if (!grid.in_bounds(schedule.origin) || !grid.in_bounds(schedule.destination))
        throw SenseError("out_of_bounds", "schedule endpoints outside grid");
    const int window = schedule.arrive - schedule.depart;
    const int dist = manhattan(schedule.origin, schedule.destination);
    if (schedule.speed < 1 || window < 1 ||
        dist > static_cast<long long>(schedule.speed) * window)
        throw SenseError("infeasible_schedule", "destination unreachable within window");

    BaselineRoute result;
    result.route.points.push_back({schedule.origin.x, schedule.origin.y, schedule.depart});
    int t = schedule.depart;
    for (Coord c : l_path_cells(schedule.origin, schedule.destination, schedule.speed))
        result.route.points.push_back({c.x, c.y, ++t});
    while (t < schedule.arrive)
        result.route.points.push_back({schedule.destination.x, schedule.destination.y, ++t});
    result.residual_steps = window - (dist == 0 ? 0 : ceil_div(dist, schedule.speed));
    return result;
}

namespace {

std::optional<Route> insert_detour_impl(const Route& route, Coord via, int t_from, int t_to,
                                        const Schedule& schedule, const GridMap& grid,
                                        bool windowed) {
    if (!grid.in_bounds(via)) throw SenseError("out_of_bounds", "via cell outside grid");
    if (route.points.empty()) throw SenseError("empty_route", "route has no points");
    for (const auto& p : route.points) {
        if (p.cell() != via) continue;
        if (!windowed || (p.t >= t_from && p.t <= t_to)) return route;
    }

    const int last_idx = static_cast<int>(route.points.size()) - 1;
    const Coord dest = route.points.back().cell();
    const int v = schedule.speed;

    struct Candidate {
        int steps;
        int via_t;
        int split;
        int pre_waits;
    };
    std::optional<Candidate> best;
    for (int a = 0; a <= last_idx; ++a) {
        const Coord p = route.points[a].cell();
        const int t_a = route.points[a].t;
        const int s1 = ceil_div(manhattan(p, via), v);
        const int s2 = ceil_div(manhattan(via, dest), v);
        const int slack = last_idx - a - s1 - s2;
        if (slack < 0) continue;
        int waits = 0;
        if (windowed) {
            const int earliest = t_a + s1;
            const int latest = earliest + slack;
            const int via_t = std::max(earliest, t_from);
            if (via_t > std::min(latest, t_to)) continue;
            waits = via_t - earliest;
        }
        const Candidate cand{s1 + s2, t_a + waits + s1, a, waits};
        if (!best || cand.steps < best->steps ||
            (cand.steps == best->steps && cand.via_t < best->via_t))
            best = cand;
    }
    if (!best) return std::nullopt;

    Route out;
    out.points.assign(route.points.begin(), route.points.begin() + best->split + 1);
    const Coord anchor = out.points.back().cell();
    int t = out.points.back().t;
    for (int w = 0; w < best->pre_waits; ++w) out.points.push_back({anchor.x, anchor.y, ++t});
    for (Coord c : l_path_cells(anchor, via, v)) out.points.push_back({c.x, c.y, ++t});
    for (Coord c : l_path_cells(via, dest, v)) out.points.push_back({c.x, c.y, ++t});
    const int t_last = route.points.back().t;
    while (t < t_last) out.points.push_back({dest.x, dest.y, ++t});
    return out;
}

}  // namespace

std::optional<Route> insert_detour(const Route& route, Coord via, const Schedule& schedule,
                                   const GridMap& grid) {
    return insert_detour_impl(route, via, 0, 0, schedule, grid, false);
}

std::optional<Route> insert_detour_within(const Route& route, Coord via, int t_from, int t_to,
                                          const Schedule& schedule, const GridMap& grid) {
    return insert_detour_impl(route, via, t_from, t_to, schedule, grid, true);
}

std::optional<Route> reroute_segment(const Route& route, std::size_t from_idx,
                                     std::size_t to_idx,
                                     const std::function<bool(Coord, int)>& blocked,
                                     const GridMap& grid, int speed) {
    if (from_idx >= to_idx || to_idx >= route.points.size())
        throw SenseError("bad_segment", "segment indices out of range");
    if (to_idx - from_idx < 2) return route;  // no interior to replace

    const Coord start = route.points[from_idx].cell();
    const Coord target = route.points[to_idx].cell();
    const int t_start = route.points[from_idx].t;
    const int t_target = route.points[to_idx].t;

    // Layered search over (cell, t): every feasible replacement has the same
    // number of steps, so among them prefer the one that stays closest to the
    // original segment (least total cell displacement). Keeps detours local.
    struct Node {
        long long cost = 0;
        Coord parent{};
    };
    std::vector<std::map<Coord, Node>> layers(t_target - t_start + 1);
    layers[0][start] = {0, start};
    for (int step = 0; step + 1 <= t_target - t_start; ++step) {
        const int t_next = t_start + step + 1;
        const bool final_step = t_next == t_target;
        const Coord orig_next = route.points[from_idx + step + 1].cell();
        for (const auto& [cell, node] : layers[step]) {
            for (int dx = -speed; dx <= speed; ++dx) {
                const int rem = speed - std::abs(dx);
                for (int dy = -rem; dy <= rem; ++dy) {
                    const Coord next{cell.x + dx, cell.y + dy};
                    if (!grid.in_bounds(next)) continue;
                    if (final_step) {
                        if (next != target) continue;
                    } else {
                        if (blocked(next, t_next)) continue;
                        if (manhattan(next, target) >
                            static_cast<long long>(speed) * (t_target - t_next))
                            continue;
                    }
                    const long long cost = node.cost + manhattan(next, orig_next);
                    auto [it, fresh] = layers[step + 1].try_emplace(next, Node{cost, cell});
                    if (!fresh && (cost < it->second.cost ||
                                   (cost == it->second.cost && cell < it->second.parent)))
                        it->second = {cost, cell};
                }
            }
        }
        if (layers[step + 1].empty()) return std::nullopt;
    }
    if (!layers.back().count(target)) return std::nullopt;

    std::vector<Coord> path(t_target - t_start + 1);
    Coord cur = target;
    for (int step = t_target - t_start; step >= 0; --step) {
        path[step] = cur;
        cur = layers[step].at(cur).parent;
    }

    Route out = route;
    for (std::size_t i = from_idx; i <= to_idx; ++i) {
        out.points[i].x = path[i - from_idx].x;
        out.points[i].y = path[i - from_idx].y;
    }
    return out;
}

std::optional<Route> reroute_segment(const Route& route, std::size_t from_idx,
                                     std::size_t to_idx, const std::set<Coord>& forbidden_cells,
                                     const GridMap& grid, int speed) {
    return reroute_segment(
        route, from_idx, to_idx,
        [&forbidden_cells](Coord c, int) { return forbidden_cells.count(c) > 0; }, grid, speed);
}

}  // namespace senseforge::routing
