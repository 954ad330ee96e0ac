#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "senseforge/routing.hpp"

using namespace senseforge;
using namespace test_helpers;
namespace r = senseforge::routing;

namespace {

bool visits(const Route& route, Coord cell) {
    for (const auto& p : route.points)
        if (p.cell() == cell) return true;
    return false;
}

int visit_time(const Route& route, Coord cell) {
    for (const auto& p : route.points)
        if (p.cell() == cell) return p.t;
    return -1;
}

bool unit_steps(const Route& route, int speed) {
    for (std::size_t i = 1; i < route.points.size(); ++i) {
        if (route.points[i].t != route.points[i - 1].t + 1) return false;
        if (manhattan(route.points[i - 1].cell(), route.points[i].cell()) > speed) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("schedule_of copies the participant window") {
    const auto p = simple_participant("p", {1, 2}, {3, 0}, 2, 7, 2);
    const auto s = r::schedule_of(p);
    CHECK(s.origin == Coord{1, 2});
    CHECK(s.destination == Coord{3, 0});
    CHECK(s.depart == 2);
    CHECK(s.arrive == 7);
    CHECK(s.speed == 2);
}

TEST_CASE("baseline route walks the x leg first then waits") {
    const auto spec = spec_for(uniform_grid(5, 5), 10);
    r::Schedule s{{0, 0}, {2, 1}, 1, 7, 1};
    const auto base = r::baseline_route(s, spec);
    const Route& route = base.route;
    REQUIRE(route.points.size() == 7);  // t = 1..7
    CHECK(route.points[0] == RoutePoint{0, 0, 1});
    CHECK(route.points[1] == RoutePoint{1, 0, 2});
    CHECK(route.points[2] == RoutePoint{2, 0, 3});
    CHECK(route.points[3] == RoutePoint{2, 1, 4});
    CHECK(route.points[4] == RoutePoint{2, 1, 5});
    CHECK(route.points.back() == RoutePoint{2, 1, 7});
    CHECK(base.residual_steps == 3);  // distance 3 covered, window 6, slack 3
}

TEST_CASE("baseline route uses full speed per step") {
    const auto spec = spec_for(uniform_grid(8, 8), 10);
    r::Schedule s{{0, 0}, {5, 2}, 0, 4, 3};
    const auto base = r::baseline_route(s, spec);
    CHECK(unit_steps(base.route, 3));
    CHECK(base.route.points.front() == RoutePoint{0, 0, 0});
    CHECK(base.route.points.back() == RoutePoint{5, 2, 4});
    // distance 7 at speed 3 needs ceil(7/3)=3 moves
    CHECK(base.residual_steps == 1);
}

TEST_CASE("baseline route rejects unreachable schedules") {
    const auto spec = spec_for(uniform_grid(4, 4), 10);
    r::Schedule s{{0, 0}, {3, 3}, 0, 2, 1};
    CHECK(thrown_code([&] { r::baseline_route(s, spec); }) == "infeasible_schedule");
    r::Schedule outside{{0, 0}, {9, 0}, 0, 9, 3};
    CHECK(thrown_code([&] { r::baseline_route(outside, spec); }) == "out_of_bounds");
}

TEST_CASE("insert_detour preserves endpoints and length") {
    const auto spec = spec_for(uniform_grid(6, 6), 12);
    r::Schedule s{{0, 0}, {3, 0}, 0, 8, 1};
    const auto base = r::baseline_route(s, spec);
    const auto detoured = r::insert_detour(base.route, {2, 2}, s, *spec.grid);
    REQUIRE(detoured.has_value());
    CHECK(visits(*detoured, {2, 2}));
    CHECK(detoured->points.size() == base.route.points.size());
    CHECK(detoured->points.front() == base.route.points.front());
    CHECK(detoured->points.back() == base.route.points.back());
    CHECK(unit_steps(*detoured, s.speed));
}

TEST_CASE("insert_detour keeps an already-visited via unchanged") {
    const auto spec = spec_for(uniform_grid(6, 6), 12);
    r::Schedule s{{0, 0}, {3, 0}, 0, 8, 1};
    const auto base = r::baseline_route(s, spec);
    const auto same = r::insert_detour(base.route, {1, 0}, s, *spec.grid);
    REQUIRE(same.has_value());
    CHECK(*same == base.route);
}

TEST_CASE("insert_detour fails when the slack cannot reach the via") {
    const auto spec = spec_for(uniform_grid(8, 8), 12);
    r::Schedule s{{0, 0}, {4, 0}, 0, 4, 1};  // zero slack
    const auto base = r::baseline_route(s, spec);
    CHECK_FALSE(r::insert_detour(base.route, {0, 3}, s, *spec.grid).has_value());
}

TEST_CASE("insert_detour prefers the earliest equal-cost placement") {
    const auto spec = spec_for(uniform_grid(4, 4), 12);
    r::Schedule s{{0, 0}, {0, 0}, 0, 6, 1};
    Route stay;
    for (int t = 0; t <= 6; ++t) stay.points.push_back({0, 0, t});
    const auto detoured = r::insert_detour(stay, {0, 1}, s, *spec.grid);
    REQUIRE(detoured.has_value());
    // cheapest detour costs 2 steps; the earliest placement visits at t=1
    CHECK(visit_time(*detoured, {0, 1}) == 1);
    CHECK(detoured->points.front() == RoutePoint{0, 0, 0});
    CHECK(detoured->points.back() == RoutePoint{0, 0, 6});
    CHECK(detoured->points.size() == stay.points.size());
}

TEST_CASE("insert_detour_within respects the visit window") {
    const auto spec = spec_for(uniform_grid(4, 4), 12);
    r::Schedule s{{0, 0}, {0, 0}, 0, 8, 1};
    Route stay;
    for (int t = 0; t <= 8; ++t) stay.points.push_back({0, 0, t});

    const auto windowed = r::insert_detour_within(stay, {0, 1}, 4, 6, s, *spec.grid);
    REQUIRE(windowed.has_value());
    const int when = visit_time(*windowed, {0, 1});
    CHECK(when >= 4);
    CHECK(when <= 6);

    CHECK_FALSE(r::insert_detour_within(stay, {3, 3}, 0, 2, s, *spec.grid).has_value());
}

TEST_CASE("reroute_segment avoids forbidden cells and keeps timestamps") {
    const auto spec = spec_for(uniform_grid(5, 5), 10);
    const Route route = x_walk(0, 2, 0, 4, 2);  // two trailing waits give slack
    std::set<Coord> forbidden{{2, 2}};
    const auto rerouted = r::reroute_segment(route, 0, 6, forbidden, *spec.grid, 1);
    REQUIRE(rerouted.has_value());
    CHECK_FALSE(visits(*rerouted, {2, 2}));
    CHECK(rerouted->points.front() == route.points.front());
    CHECK(rerouted->points.back() == route.points.back());
    REQUIRE(rerouted->points.size() == route.points.size());
    for (std::size_t i = 0; i < route.points.size(); ++i)
        CHECK(rerouted->points[i].t == route.points[i].t);
    CHECK(unit_steps(*rerouted, 1));
}

TEST_CASE("reroute_segment supports time-varying blockers") {
    const auto spec = spec_for(uniform_grid(5, 5), 10);
    const Route route = x_walk(0, 2, 0, 4, 2);
    auto blocked = [](Coord c, int t) { return c == Coord{2, 2} && t == 2; };
    const auto rerouted = r::reroute_segment(route, 0, 6, blocked, *spec.grid, 1);
    REQUIRE(rerouted.has_value());
    // cell (2,2) is only closed at t=2; any other visit time is allowed
    for (const auto& p : rerouted->points)
        CHECK_FALSE((p.cell() == Coord{2, 2} && p.t == 2));
    CHECK(rerouted->points.front() == route.points.front());
    CHECK(rerouted->points.back() == route.points.back());
}

TEST_CASE("reroute_segment returns nullopt when walled off") {
    const auto spec = spec_for(uniform_grid(3, 3), 10);
    const Route route = x_walk(0, 1, 0, 2);
    std::set<Coord> wall{{1, 0}, {1, 1}, {1, 2}};
    CHECK_FALSE(r::reroute_segment(route, 0, 2, wall, *spec.grid, 1).has_value());
}

TEST_CASE("reroute_segment index contract") {
    const auto spec = spec_for(uniform_grid(5, 5), 10);
    const Route route = x_walk(0, 2, 0, 4);
    std::set<Coord> none;
    CHECK(thrown_code([&] { r::reroute_segment(route, 3, 1, none, *spec.grid, 1); }) ==
          "bad_segment");
    CHECK(thrown_code([&] { r::reroute_segment(route, 0, 9, none, *spec.grid, 1); }) ==
          "bad_segment");
    // adjacent boundaries leave nothing to replace
    const auto unchanged = r::reroute_segment(route, 1, 2, none, *spec.grid, 1);
    REQUIRE(unchanged.has_value());
    CHECK(*unchanged == route);
}
