#pragma once

#include <functional>
#include <optional>
#include <set>

#include "senseforge/domain.hpp"

namespace senseforge::routing {

struct Schedule {
    Coord origin;
    Coord destination;
    int depart = 0;
    int arrive = 0;
    int speed = 1;
};

Schedule schedule_of(const Participant& participant);

struct BaselineRoute {
    Route route;
    int residual_steps = 0;
};

// L-shaped Manhattan shortest path (x-leg first) at full speed, then waits at
// the destination through timestep `arrive`. Throws "infeasible_schedule".
BaselineRoute baseline_route(const Schedule& schedule, const TaskSpec& spec);

// Cheapest suffix rebuild visiting `via`: smallest detour step count, then
// earliest via timestep, then earliest split index. Endpoints and length are
// preserved. nullopt when no placement fits the time budget.
std::optional<Route> insert_detour(const Route& route, Coord via, const Schedule& schedule,
                                   const GridMap& grid);

// As insert_detour, but the via visit must happen within [t_from, t_to].
std::optional<Route> insert_detour_within(const Route& route, Coord via, int t_from, int t_to,
                                          const Schedule& schedule, const GridMap& grid);

// Replaces points strictly between from_idx and to_idx with a path found by
// BFS over (cell, t) states that avoids `blocked(cell, t)`; boundary points
// and all timestamps are preserved. Throws "bad_segment" on invalid indices.
std::optional<Route> reroute_segment(const Route& route, std::size_t from_idx,
                                     std::size_t to_idx,
                                     const std::function<bool(Coord, int)>& blocked,
                                     const GridMap& grid, int speed);

std::optional<Route> reroute_segment(const Route& route, std::size_t from_idx,
                                     std::size_t to_idx, const std::set<Coord>& forbidden_cells,
                                     const GridMap& grid, int speed);

}  // namespace senseforge::routing
