#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "senseforge/domain.hpp"

using namespace senseforge;
using namespace test_helpers;

TEST_CASE("manhattan distance") {
    CHECK(manhattan({0, 0}, {0, 0}) == 0);
    CHECK(manhattan({1, 2}, {4, 0}) == 5);
    CHECK(manhattan({4, 0}, {1, 2}) == 5);
    CHECK(manhattan({-2, 3}, {2, -1}) == 8);
}

TEST_CASE("category and archetype name tables") {
    const auto& lu = land_use_names();
    CHECK(lu == std::array<std::string, 6>{"vegetation", "industrial", "institutional", "medical",
                                           "residential", "commercial"});
    const auto& arch = archetype_names();
    CHECK(arch == std::array<std::string, 5>{"eco_enthusiast", "city_dweller", "industrial_worker",
                                             "community_helper", "explorer"});
    CHECK(archetype_valid("explorer"));
    CHECK_FALSE(archetype_valid("wanderer"));
}

TEST_CASE("grid map stores cells column-major by x") {
    const auto grid = patterned_grid(4, 3);
    CHECK(grid->width() == 4);
    CHECK(grid->height() == 3);
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 3; ++y) {
            CHECK(grid->index({x, y}) == static_cast<std::size_t>(x) * 3 + y);
            CHECK(grid->at({x, y}).crime_count == grid->cells()[grid->index({x, y})].crime_count);
        }
    CHECK(grid->in_bounds({3, 2}));
    CHECK_FALSE(grid->in_bounds({4, 0}));
    CHECK_FALSE(grid->in_bounds({0, -1}));
    CHECK(thrown_code([&] { grid->at({4, 0}); }) == "out_of_bounds");
}

TEST_CASE("dominant category breaks ties toward the lower index") {
    const auto grid = uniform_grid(2, 2);
    CHECK(grid->dominant_category({0, 0}) == 0);  // all six shares equal
    const auto pat = patterned_grid(6, 1);
    for (int x = 0; x < 6; ++x) CHECK(pat->dominant_category({x, 0}) == x % 6);
}

TEST_CASE("grid map caches crime extremes") {
    const auto grid = patterned_grid(5, 4);
    int lo = grid->cells().front().crime_count;
    int hi = lo;
    for (const auto& c : grid->cells()) {
        lo = std::min(lo, c.crime_count);
        hi = std::max(hi, c.crime_count);
    }
    CHECK(grid->min_crime() == lo);
    CHECK(grid->max_crime() == hi);
}

TEST_CASE("grid map rejects malformed construction") {
    CHECK(thrown_code([] { GridMap(0, 3); }) == "bad_grid");
    CHECK(thrown_code([] { GridMap(2, 2, std::vector<CellAttributes>(3)); }) == "bad_grid");

    std::vector<CellAttributes> bad_sum(1);
    bad_sum[0].landuse = {0.5, 0.5, 0.5, 0.0, 0.0, 0.0};
    CHECK(thrown_code([&] { GridMap(1, 1, bad_sum); }) == "bad_distribution");

    std::vector<CellAttributes> negative(1);
    negative[0].landuse = {1.2, -0.2, 0.0, 0.0, 0.0, 0.0};
    CHECK(thrown_code([&] { GridMap(1, 1, negative); }) == "bad_distribution");

    std::vector<CellAttributes> crime(1);
    crime[0].crime_count = -1;
    CHECK(thrown_code([&] { GridMap(1, 1, crime); }) == "bad_grid");
}

TEST_CASE("participant constructor enforces feasibility") {
    CHECK_NOTHROW(simple_participant("p1", {0, 0}, {2, 1}, 0, 3));

    auto code = [](auto&& f) { return thrown_code(f); };
    CHECK(code([] { simple_participant("", {0, 0}, {0, 0}, 0, 1); }) == "infeasible_participant");
    CHECK(code([] { simple_participant("p", {0, 0}, {0, 0}, -1, 1); }) ==
          "infeasible_participant");
    CHECK(code([] { simple_participant("p", {0, 0}, {0, 0}, 2, 2); }) == "infeasible_participant");
    CHECK(code([] { simple_participant("p", {0, 0}, {0, 0}, 0, 1, 0); }) ==
          "infeasible_participant");
    CHECK(code([] { simple_participant("p", {0, 0}, {0, 0}, 0, 1, 1, 0.0); }) ==
          "infeasible_participant");
    CHECK(code([] { simple_participant("p", {0, 0}, {0, 0}, 0, 1, 1, 1.0, -3); }) ==
          "infeasible_participant");
    CHECK(code([] { simple_participant("p", {0, 0}, {5, 5}, 0, 2, 1); }) ==
          "infeasible_participant");  // 10 cells in 2 steps at speed 1

    std::array<double, kNumLandUse> bad{};
    bad.fill(0.5);
    CHECK(code([&] { simple_participant("p", {0, 0}, {0, 0}, 0, 1, 1, 1.0, 0, bad); }) ==
          "bad_distribution");

    ParticipantProfile profile;
    profile.archetype = "wanderer";
    CHECK(thrown_code([&] {
              Participant("p", {0, 0}, {0, 0}, 0, 1, 1, 1.0, uniform_pref(), 0, profile);
          }) == "infeasible_participant");
}

TEST_CASE("task spec validation and defaults") {
    const auto spec = spec_for(uniform_grid(3, 3), 5, 10.0);
    CHECK(spec.horizon == 5);
    CHECK(spec.interval_minutes == 15);
    CHECK(spec.budget == 10.0);
    CHECK(spec.alpha == 0.5);
    CHECK(spec.beta == 0.5);
    CHECK(spec.eta == 1.0);
    CHECK(spec.lambda_ == 0.5);
    CHECK(spec.mu == 0.2);
    CHECK(spec.overlap_threshold == 0.01);
    CHECK(spec.tie_epsilon == 1e-6);
    CHECK(spec.max_negotiation_rounds == 3);
    CHECK(spec.max_pair_attempts == 20);
    CHECK(spec.max_refine_iters == 3);
    CHECK(spec.log_base == LogBase::natural);

    auto broken = [&](auto&& mutate) {
        TaskSpec s = spec;
        mutate(s);
        return thrown_code([&] { s.validate(); });
    };
    CHECK(broken([](TaskSpec& s) { s.grid = nullptr; }) == "bad_task_spec");
    CHECK(broken([](TaskSpec& s) { s.horizon = 0; }) == "bad_task_spec");
    CHECK(broken([](TaskSpec& s) { s.interval_minutes = 0; }) == "bad_task_spec");
    CHECK(broken([](TaskSpec& s) { s.budget = 0.0; }) == "bad_task_spec");
    CHECK(broken([](TaskSpec& s) { s.alpha = 1.5; }) == "bad_task_spec");
    CHECK(broken([](TaskSpec& s) { s.beta = -0.1; }) == "bad_task_spec");
    CHECK(broken([](TaskSpec& s) { s.lambda_ = 2.0; }) == "bad_task_spec");
    CHECK(broken([](TaskSpec& s) { s.overlap_threshold = 1.1; }) == "bad_task_spec");
    CHECK(broken([](TaskSpec& s) { s.eta = -1.0; }) == "bad_task_spec");
    CHECK(broken([](TaskSpec& s) { s.mu = -0.5; }) == "bad_task_spec");
    CHECK(broken([](TaskSpec& s) { s.tie_epsilon = -1e-9; }) == "bad_task_spec");
    CHECK(broken([](TaskSpec& s) { s.max_negotiation_rounds = 0; }) == "bad_task_spec");
    CHECK(broken([](TaskSpec& s) { s.max_pair_attempts = -1; }) == "bad_task_spec");
    CHECK(broken([](TaskSpec& s) { s.max_refine_iters = -1; }) == "bad_task_spec");
}

TEST_CASE("coverage tensor spans timesteps zero through horizon") {
    const auto spec = spec_for(uniform_grid(3, 2), 4);
    auto tensor = CoverageTensor::for_task(spec);
    CHECK(tensor.width() == 3);
    CHECK(tensor.height() == 2);
    CHECK(tensor.time_slots() == 5);  // 0..horizon inclusive
    CHECK_NOTHROW(tensor.add_point(2, 1, 4));
    CHECK(thrown_code([&] { tensor.add_point(2, 1, 5); }) == "out_of_bounds");
    CHECK(thrown_code([&] { tensor.add_point(3, 0, 0); }) == "out_of_bounds");
    CHECK(thrown_code([] { CoverageTensor(0, 1, 1); }) == "bad_tensor");
}

TEST_CASE("coverage tensor route arithmetic round-trips") {
    auto tensor = CoverageTensor(3, 3, 4);
    const Route route = x_walk(0, 1, 0, 2, 1);
    tensor.add_route(route);
    tensor.add_route(route);
    CHECK(tensor.at(0, 1, 0) == 2.0);
    CHECK(tensor.at(2, 1, 2) == 2.0);
    CHECK(tensor.at(2, 1, 3) == 2.0);
    tensor.remove_route(route);
    tensor.remove_route(route);
    for (const double c : tensor.counts()) CHECK(c == 0.0);

    auto other = CoverageTensor(3, 3, 4);
    other.add_route(route);
    tensor.add(other);
    CHECK(tensor.at(1, 1, 1) == 1.0);
    const auto mismatched = CoverageTensor(2, 3, 4);
    CHECK(thrown_code([&] { tensor.add(mismatched); }) == "bad_tensor");
}

TEST_CASE("route validation flags each violation category once") {
    const auto spec = spec_for(uniform_grid(4, 4), 6);
    const auto p = simple_participant("p", {0, 0}, {2, 0}, 1, 4);

    SUBCASE("valid route") {
        const Route r = x_walk(0, 0, 1, 2, 1);
        const auto res = validate_route(r, p, spec);
        CHECK(res.ok);
        CHECK(res.violations.empty());
    }
    SUBCASE("empty route throws") {
        CHECK(thrown_code([&] { validate_route({}, p, spec); }) == "empty_route");
    }
    SUBCASE("origin and timing") {
        Route r = x_walk(1, 0, 1, 2);  // starts at the wrong cell
        r.points.push_back({2, 0, 3});
        auto res = validate_route(r, p, spec);
        CHECK_FALSE(res.ok);
        CHECK(std::count(res.violations.begin(), res.violations.end(), "origin_mismatch") == 1);
    }
    SUBCASE("wrong start time is an origin violation") {
        const Route r = x_walk(0, 0, 0, 2);  // departs one step early
        const auto res = validate_route(r, p, spec);
        CHECK(std::count(res.violations.begin(), res.violations.end(), "origin_mismatch") == 1);
    }
    SUBCASE("destination and arrival") {
        Route r = x_walk(0, 0, 1, 3);  // overshoots the destination
        auto res = validate_route(r, p, spec);
        CHECK(std::count(res.violations.begin(), res.violations.end(), "destination_mismatch") ==
              1);
        Route late = x_walk(0, 0, 1, 2, 2);  // waits one step past arrive
        res = validate_route(late, p, spec);
        CHECK(std::count(res.violations.begin(), res.violations.end(), "arrival_exceeded") == 1);
    }
    SUBCASE("motion constraints deduplicate") {
        Route r;
        r.points = {{0, 0, 1}, {2, 0, 3}, {2, 0, 4}, {0, 3, 5}, {2, 0, 6}};
        const auto res = validate_route(r, p, spec);
        CHECK_FALSE(res.ok);
        // two timestep gaps and two speed jumps collapse to one flag each
        CHECK(std::count(res.violations.begin(), res.violations.end(), "timestep_not_unit") == 1);
        CHECK(std::count(res.violations.begin(), res.violations.end(), "speed_exceeded") == 1);
    }
    SUBCASE("out of bounds") {
        Route r;
        r.points = {{0, 0, 1}, {0, -1, 2}, {0, 0, 3}, {1, 0, 4}};
        auto res = validate_route(r, p, spec);
        CHECK(std::count(res.violations.begin(), res.violations.end(), "out_of_bounds") == 1);
        CHECK(std::count(res.violations.begin(), res.violations.end(), "destination_mismatch") ==
              1);
    }
}

TEST_CASE("disturbance event validation") {
    const auto spec = spec_for(uniform_grid(3, 3), 5);
    DisturbanceEvent ok{DisturbanceEvent::Kind::cell_blocked, {1, 1}, 0, 5, 0.0};
    CHECK_NOTHROW(validate_event(ok, spec));

    DisturbanceEvent outside = ok;
    outside.cell = {3, 0};
    CHECK(thrown_code([&] { validate_event(outside, spec); }) == "out_of_bounds");

    DisturbanceEvent inverted = ok;
    inverted.t_from = 4;
    inverted.t_to = 2;
    CHECK(thrown_code([&] { validate_event(inverted, spec); }) == "bad_event");

    DisturbanceEvent beyond = ok;
    beyond.t_to = 6;
    CHECK(thrown_code([&] { validate_event(beyond, spec); }) == "bad_event");

    DisturbanceEvent paid_block = ok;
    paid_block.bonus = 1.0;
    CHECK(thrown_code([&] { validate_event(paid_block, spec); }) == "bad_event");

    DisturbanceEvent priority{DisturbanceEvent::Kind::priority_region, {1, 1}, 0, 5, 2.0};
    CHECK_NOTHROW(validate_event(priority, spec));
    priority.bonus = -1.0;
    CHECK(thrown_code([&] { validate_event(priority, spec); }) == "bad_event");
}
