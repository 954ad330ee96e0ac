#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "senseforge/harness.hpp"
#include "senseforge/pipeline.hpp"
#include "senseforge/routing.hpp"
#include "senseforge/rng.hpp"

using namespace senseforge;
using namespace test_helpers;
namespace pl = senseforge::pipeline;

namespace {

std::vector<const Participant*> pointers(const std::vector<Participant>& participants) {
    std::vector<const Participant*> out;
    for (const auto& p : participants) out.push_back(&p);
    return out;
}

Route stay_route(Coord cell, int t0, int t1) {
    Route r;
    for (int t = t0; t <= t1; ++t) r.points.push_back({cell.x, cell.y, t});
    return r;
}

}  // namespace

TEST_CASE("accept_task gates on the task horizon") {
    const auto spec = spec_for(uniform_grid(5, 5), 6);
    CHECK(pl::accept_task(simple_participant("a", {0, 0}, {4, 0}, 0, 6), spec));
    CHECK(pl::accept_task(simple_participant("b", {0, 0}, {0, 0}, 6, 7), spec) == false);
    CHECK(pl::accept_task(simple_participant("c", {0, 0}, {0, 0}, 0, 1), spec));
}

TEST_CASE("generate_route never scores below the baseline") {
    const auto grid = patterned_grid(6, 6);
    const auto spec = spec_for(grid, 8);
    const auto policies = policy::heuristic_policies();
    const auto p = simple_participant("p", {0, 0}, {3, 0}, 0, 8, 1, 1.0, 0, one_hot(3));
    const auto base = routing::baseline_route(routing::schedule_of(p), spec);

    auto utility = [&](const Route& r) {
        CoverageTensor t = CoverageTensor::for_task(spec);
        t.add_route(r);
        return spec.lambda_ * test_oracles::phi_direct(t, spec) +
               (1.0 - spec.lambda_) * metrics::path_satisfaction(r, p, *grid, spec.mu);
    };

    const Route route = pl::generate_route(p, spec, *grid, policies);
    CHECK(validate_route(route, p, spec).ok);
    CHECK(utility(route) >= utility(base.route) - 1e-12);
}

TEST_CASE("generate_route ignores invalid policy suggestions") {
    const auto grid = uniform_grid(5, 5);
    const auto spec = spec_for(grid, 6);
    const auto p = simple_participant("p", {0, 0}, {2, 0}, 0, 6);
    const auto base = routing::baseline_route(routing::schedule_of(p), spec);

    auto policies = policy::heuristic_policies();
    int calls = 0;
    policies.refine = [&](const policy::RefineRequest&, const TaskSpec&) {
        ++calls;
        Route bogus;
        bogus.points = {{4, 4, 0}, {4, 4, 1}};  // wrong origin, wrong destination
        return policy::RefineResponse{bogus, "trust me"};
    };
    const Route route = pl::generate_route(p, spec, *grid, policies);
    CHECK(route == base.route);
    CHECK(calls == spec.max_refine_iters);
}

namespace {

// Four stay-at-home participants on disjoint cells: every route adds the same
// number of fresh bins, so coverage gains tie exactly and the blend is decided
// by fairness and the tie rule.
struct TiedWorld {
    TaskSpec spec;
    std::vector<Participant> participants;
    std::map<std::string, Route> routes;

    explicit TiedWorld(std::vector<int> histories) {
        spec = spec_for(uniform_grid(4, 4), 4, 10.0);
        for (int i = 0; i < 4; ++i) {
            const std::string id = "p" + std::to_string(i + 1);
            const Coord home{i, i};
            participants.push_back(
                simple_participant(id, home, home, 0, 4, 1, 1.0, histories[i]));
            routes.emplace(id, stay_route(home, 0, 4));
        }
    }
};

}  // namespace

TEST_CASE("selection blends coverage gain with fairness") {
    TiedWorld world({5, 5, 0, 5});  // p3 never served before
    const auto policies = policy::heuristic_policies();
    const auto cands = pointers(world.participants);
    const auto state = pl::select_participants(cands, world.routes, {}, world.spec, policies);

    REQUIRE(state.selected.size() == 4);
    CHECK(state.selected[0] == "p3");  // fairness breaks the coverage tie
    CHECK(state.selected[1] == "p1");
    CHECK(state.selected[2] == "p2");
    CHECK(state.selected[3] == "p4");
    CHECK(state.remaining_budget == doctest::Approx(6.0));

    REQUIRE(state.log.size() == 4);
    CHECK(state.log[0].id == "p3");
    CHECK(state.log[0].gain_norm == 1.0);  // constant gains normalize to one
    CHECK(state.log[0].fairness_norm == 1.0);
    CHECK(state.log[0].score == 1.0);
    for (const auto& row : state.log) {
        CHECK(row.score >= 0.0);
        CHECK(row.score <= 1.0);
    }
}

TEST_CASE("selection stops when the budget gates every candidate") {
    TiedWorld world({0, 0, 0, 0});
    world.spec.budget = 2.5;
    const auto policies = policy::heuristic_policies();
    const auto state =
        pl::select_participants(pointers(world.participants), world.routes, {}, world.spec,
                                policies);
    CHECK(state.selected == std::vector<std::string>{"p1", "p2"});
    CHECK(state.remaining_budget == doctest::Approx(0.5));
}

TEST_CASE("history overrides replace the participants' own counts") {
    TiedWorld world({0, 0, 0, 0});
    const auto policies = policy::heuristic_policies();
    std::map<std::string, int> histories{{"p1", 9}, {"p2", 9}, {"p4", 9}};  // p3 stays 0
    const auto state =
        pl::select_participants(pointers(world.participants), world.routes, histories,
                                world.spec, policies);
    CHECK(state.selected[0] == "p3");
}

TEST_CASE("exact score ties reach the tie-break policy") {
    TiedWorld world({0, 0, 0, 0});  // identical histories: four-way tie
    auto policies = policy::heuristic_policies();

    SUBCASE("the policy's choice wins") {
        std::vector<std::size_t> seen;
        policies.tiebreak = [&](const policy::TieBreakRequest& req) {
            seen.push_back(req.candidates.size());
            return policy::TieBreakResponse{"p4"};
        };
        const auto state = pl::select_participants(pointers(world.participants), world.routes,
                                                   {}, world.spec, policies);
        CHECK(state.selected[0] == "p4");
        // every later pick ties again; the stale "p4" answer falls back to the tie rule
        CHECK(state.selected == std::vector<std::string>{"p4", "p1", "p2", "p3"});
        CHECK(seen == std::vector<std::size_t>{4, 3, 2});
    }
    SUBCASE("a policy naming a non-candidate falls back to the tie rule") {
        policies.tiebreak = [](const policy::TieBreakRequest&) {
            return policy::TieBreakResponse{"nobody"};
        };
        const auto state = pl::select_participants(pointers(world.participants), world.routes,
                                                   {}, world.spec, policies);
        CHECK(state.selected[0] == "p1");
    }
    SUBCASE("a throwing policy falls back to the tie rule") {
        policies.tiebreak = [](const policy::TieBreakRequest&) -> policy::TieBreakResponse {
            throw SenseError("endpoint_unavailable", "offline");
        };
        const auto state = pl::select_participants(pointers(world.participants), world.routes,
                                                   {}, world.spec, policies);
        CHECK(state.selected[0] == "p1");
    }
}

namespace {

struct RandomWorld {
    std::shared_ptr<GridMap> grid;
    TaskSpec spec;
    std::vector<Participant> participants;
    std::map<std::string, Route> routes;
};

RandomWorld random_world(std::uint64_t seed) {
    RandomWorld world;
    world.grid = patterned_grid(5, 5);
    world.spec = spec_for(world.grid, 6, 12.0);
    Rng rng(seed);
    for (int i = 0; i < 8; ++i) {
        const int depart = static_cast<int>(rng.uniform_int(0, 3));
        const int window = static_cast<int>(rng.uniform_int(1, 6 - depart));
        const int speed = static_cast<int>(rng.uniform_int(1, 2));
        const Coord origin{static_cast<int>(rng.uniform_int(0, 4)),
                           static_cast<int>(rng.uniform_int(0, 4))};
        Coord dest = origin;
        for (int tries = 0; tries < 64; ++tries) {
            const Coord cand{static_cast<int>(rng.uniform_int(0, 4)),
                             static_cast<int>(rng.uniform_int(0, 4))};
            if (manhattan(origin, cand) <= speed * window) {
                dest = cand;
                break;
            }
        }
        world.participants.push_back(Participant(
            "p" + std::to_string(i), origin, dest, depart, depart + window, speed,
            static_cast<double>(rng.uniform_int(1, 3)), uniform_pref(),
            static_cast<int>(rng.uniform_int(0, 4)), {}));
    }
    for (const auto& p : world.participants)
        world.routes.emplace(
            p.id(), routing::baseline_route(routing::schedule_of(p), world.spec).route);
    return world;
}

}  // namespace

TEST_CASE("pure coverage selection matches the brute-force greedy oracle") {
    const auto policies = policy::heuristic_policies();
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        auto world = random_world(seed);
        world.spec.beta = 1.0;
        world.spec.tie_epsilon = 0.0;
        const auto cands = pointers(world.participants);
        const auto state =
            pl::select_participants(cands, world.routes, {}, world.spec, policies);
        const auto expected =
            test_oracles::greedy_selection_oracle(cands, world.routes, {}, world.spec);
        CAPTURE(seed);
        CHECK(state.selected == expected);
    }
}

TEST_CASE("pure fairness selection serves thin histories first") {
    const auto policies = policy::heuristic_policies();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto world = random_world(seed + 100);
        world.spec.beta = 0.0;
        const auto state =
            pl::select_participants(pointers(world.participants), world.routes, {}, world.spec,
                                    policies);
        REQUIRE(!state.selected.empty());
        std::map<std::string, int> history;
        for (const auto& p : world.participants) history[p.id()] = p.history_count();
        for (std::size_t i = 1; i < state.selected.size(); ++i) {
            CAPTURE(seed);
            CHECK(history.at(state.selected[i - 1]) <= history.at(state.selected[i]));
        }
    }
}

TEST_CASE("negotiation trims overlap without losing coverage points") {
    const auto grid = uniform_grid(5, 5);
    const auto spec = spec_for(grid, 8);
    std::vector<Participant> people;
    people.push_back(simple_participant("u", {0, 2}, {4, 2}, 0, 6));
    people.push_back(simple_participant("v", {4, 2}, {0, 2}, 0, 6));
    const auto parts = pointers(people);

    pl::NegotiationState state;
    state.routes.emplace("u", x_walk(0, 2, 0, 4, 2));
    state.routes.emplace("v", x_walk(4, 2, 0, 0, 2));
    const auto before = pl::snapshot_of(state.routes, parts, spec);

    const auto policies = policy::heuristic_policies();
    const auto after_state = pl::negotiate(std::move(state), parts, spec, *grid, policies);
    const auto after = pl::snapshot_of(after_state.routes, parts, spec);

    CHECK(after.count == before.count);
    CHECK(after.overlap_pct < before.overlap_pct);
    REQUIRE(!after_state.transcript.empty());
    const auto& last = after_state.transcript.back();
    CHECK(last.committed);
    CHECK(last.u_accept);
    CHECK(last.v_accept);
    for (const auto& [id, route] : after_state.routes)
        CHECK(validate_route(route, *parts[id == "u" ? 0 : 1], spec).ok);
}

TEST_CASE("a coordinator with no new ideas fails the pair immediately") {
    const auto grid = uniform_grid(5, 5);
    const auto spec = spec_for(grid, 8);
    std::vector<Participant> people;
    people.push_back(simple_participant("u", {0, 2}, {4, 2}, 0, 6));
    people.push_back(simple_participant("v", {4, 2}, {0, 2}, 0, 6));
    const auto parts = pointers(people);

    pl::NegotiationState state;
    state.routes.emplace("u", x_walk(0, 2, 0, 4, 2));
    state.routes.emplace("v", x_walk(4, 2, 0, 0, 2));
    const auto original = state.routes;

    auto policies = policy::heuristic_policies();
    policies.propose = [](const policy::ProposalRequest& req, const TaskSpec&) {
        return policy::ProposalResponse{req.u.route, req.v.route, "", ""};  // echo
    };
    const auto out = pl::negotiate(std::move(state), parts, spec, *grid, policies);
    CHECK(out.routes == original);
    REQUIRE(out.transcript.size() == 1);
    CHECK(out.transcript[0].note == "no_change_proposed");
    CHECK(out.transcript[0].round == 1);
    CHECK(out.failed_pairs.count({"u", "v"}) == 1);
}

TEST_CASE("negotiation relays each side's latest objections") {
    const auto grid = uniform_grid(5, 5);
    auto spec = spec_for(grid, 8);
    spec.max_negotiation_rounds = 2;
    std::vector<Participant> people;
    people.push_back(simple_participant("u", {0, 2}, {4, 2}, 0, 6));
    people.push_back(simple_participant("v", {4, 2}, {0, 2}, 0, 6));
    const auto parts = pointers(people);

    pl::NegotiationState state;
    state.routes.emplace("u", x_walk(0, 2, 0, 4, 2));
    state.routes.emplace("v", x_walk(4, 2, 0, 0, 2));

    auto policies = policy::heuristic_policies();
    policies.propose = [](const policy::ProposalRequest& req, const TaskSpec&) {
        auto moved = req.u.route;
        moved.points[1].y += 1;  // always offers something new
        return policy::ProposalResponse{moved, req.v.route, "", ""};
    };
    std::vector<std::string> memories;
    policies.feedback = [&](const policy::FeedbackRequest& req, const TaskSpec&) {
        memories.push_back(req.feedback_memory);
        const bool is_u = req.participant.id() == "u";
        return policy::FeedbackResponse{false, is_u ? "note-from-u" : "note-from-v"};
    };

    const auto out = pl::negotiate(std::move(state), parts, spec, *grid, policies);
    CHECK(memories ==
          std::vector<std::string>{"", "note-from-u", "note-from-v", "note-from-u"});
    CHECK(out.failed_pairs.count({"u", "v"}) == 1);
    REQUIRE(out.transcript.size() == 2);
    CHECK(out.transcript[0].feedback_u == "note-from-u");
    CHECK(out.transcript[0].feedback_v == "note-from-v");
    CHECK_FALSE(out.transcript[0].committed);
}

TEST_CASE("snapshot arithmetic on a hand-built pair") {
    const auto spec = spec_for(uniform_grid(4, 4), 4);
    std::vector<Participant> people;
    people.push_back(simple_participant("u", {0, 0}, {2, 0}, 0, 2));
    people.push_back(simple_participant("v", {2, 0}, {3, 0}, 2, 3));
    const auto parts = pointers(people);

    std::map<std::string, Route> routes;
    routes.emplace("u", x_walk(0, 0, 0, 2));  // bins (0,0,0) (1,0,1) (2,0,2)
    routes.emplace("v", x_walk(2, 0, 2, 3));  // bins (2,0,2) (3,0,3)
    const auto snap = pl::snapshot_of(routes, parts, spec);

    CHECK(snap.count == 5);
    const double entropy = std::log(5.0) - (2.0 * std::log(2.0)) / 5.0;
    CHECK(snap.entropy == doctest::Approx(entropy).epsilon(1e-12));
    CHECK(snap.coverage ==
          doctest::Approx(0.5 * entropy + 0.5 * std::log(5.0)).epsilon(1e-12));
    CHECK(snap.overlap_pct == doctest::Approx(25.0).epsilon(1e-12));  // one shared cell of four
    CHECK(snap.mean_pss == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));

    const auto empty = pl::snapshot_of({}, {}, spec);
    CHECK(empty.count == 0);
    CHECK(empty.coverage == 0.0);
    CHECK(empty.overlap_pct == 0.0);
}

TEST_CASE("the full pipeline holds its bookkeeping together") {
    const auto preset = harness::find_preset("tdrive_small");
    REQUIRE(preset.has_value());
    const auto instance = harness::generate_instance(*preset, 42);
    const auto policies = policy::heuristic_policies();
    const auto result = pl::run_pipeline(instance, policies);

    CHECK(result.plan.selected == result.selection.selected);
    CHECK(result.before.count == result.after.count);
    CHECK(result.after.overlap_pct <= result.before.overlap_pct + 1e-9);

    std::map<std::string, const Participant*> by_id;
    for (const auto& p : instance.participants) by_id.emplace(p.id(), &p);
    double cost = 0.0;
    for (const auto& id : result.selection.selected) {
        REQUIRE(result.negotiation.routes.count(id) == 1);
        CHECK(validate_route(result.negotiation.routes.at(id), *by_id.at(id), instance.spec).ok);
        cost += by_id.at(id)->cost();
    }
    CHECK(cost <= instance.spec.budget + 1e-9);
    REQUIRE(result.plan.report.has_value());
    CHECK(result.plan.report->q == doctest::Approx(static_cast<double>(result.after.count)));
}

TEST_CASE("disturbances split into the five decision kinds") {
    const auto grid = uniform_grid(5, 5);
    const auto spec = spec_for(grid, 8);
    std::vector<Participant> people;
    people.push_back(simple_participant("pa", {0, 2}, {4, 2}, 0, 6));
    people.push_back(simple_participant("pb", {0, 0}, {4, 0}, 0, 4));
    people.push_back(simple_participant("pc", {0, 4}, {4, 4}, 0, 8));
    people.push_back(simple_participant("pd", {0, 1}, {4, 1}, 0, 6));
    people.push_back(simple_participant("pe", {0, 3}, {0, 3}, 0, 6));
    const auto parts = pointers(people);

    // pa pauses on (2,2) while the cell is closed for one step: a reroute can
    // sidestep just that wait. pb crosses its block with zero slack.
    Route pa_route;
    pa_route.points = {{0, 2, 0}, {1, 2, 1}, {2, 2, 2}, {2, 2, 3},
                       {2, 2, 4}, {3, 2, 5}, {4, 2, 6}};
    std::map<std::string, Route> routes;
    routes.emplace("pa", pa_route);
    routes.emplace("pb", x_walk(0, 0, 0, 4));     // no slack at all
    routes.emplace("pc", x_walk(0, 4, 0, 4, 4));  // waits on its destination
    routes.emplace("pd", x_walk(0, 1, 0, 4, 2));  // too far from the hot zone
    routes.emplace("pe", stay_route({0, 3}, 0, 6));

    std::vector<DisturbanceEvent> events{
        {DisturbanceEvent::Kind::cell_blocked, {2, 2}, 3, 3, 0.0},
        {DisturbanceEvent::Kind::cell_blocked, {2, 0}, 0, 8, 0.0},
        {DisturbanceEvent::Kind::cell_blocked, {4, 4}, 5, 8, 0.0},
        {DisturbanceEvent::Kind::priority_region, {1, 3}, 0, 6, 0.5},
    };

    const auto outcome = pl::apply_disturbance(routes, events, parts, spec, *grid);
    REQUIRE(outcome.decisions.size() == 5);
    CHECK(outcome.decisions[0].id == "pa");
    CHECK(outcome.decisions[0].decision == "rerouted");
    CHECK(outcome.decisions[1].decision == "stuck");
    CHECK(outcome.decisions[2].decision == "destination_blocked");
    CHECK(outcome.decisions[3].decision == "unaffected");
    CHECK(outcome.decisions[4].decision == "detoured");

    // the reroute cleared the blocked window and kept the schedule
    CHECK(outcome.routes.at("pa") != routes.at("pa"));
    bool pa_hits = false;
    for (const auto& pt : outcome.routes.at("pa").points)
        if (pt.cell() == Coord{2, 2} && pt.t == 3) pa_hits = true;
    CHECK_FALSE(pa_hits);
    CHECK(validate_route(outcome.routes.at("pa"), people[0], spec).ok);
    CHECK(outcome.routes.at("pb") == routes.at("pb"));
    CHECK(outcome.routes.at("pc") == routes.at("pc"));
    CHECK(outcome.routes.at("pd") == routes.at("pd"));
    bool pe_visits = false;
    for (const auto& pt : outcome.routes.at("pe").points)
        if (pt.cell() == Coord{1, 3}) pe_visits = true;
    CHECK(pe_visits);

    const auto calm = pl::apply_disturbance(routes, {}, parts, spec, *grid);
    for (const auto& d : calm.decisions) CHECK(d.decision == "unaffected");
    CHECK(calm.routes == routes);
}
