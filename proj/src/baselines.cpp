#include "senseforge/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "senseforge/detail/coverage_stats.hpp"
#include "senseforge/rng.hpp"
#include "senseforge/routing.hpp"

namespace senseforge::baselines {

namespace {

using detail::CoverageStats;
using detail::PhiParts;
using detail::phi_from;
using routing::baseline_route;
using routing::insert_detour;
using routing::schedule_of;

constexpr int kDetourFailCap = 20;

// Candidates whose window fits the task horizon, in id order.
std::vector<const Participant*> eligible(const Instance& instance) {
    std::vector<const Participant*> out;
    for (const auto& p : instance.participants)
        if (p.depart() >= 0 && p.arrive() <= instance.spec.horizon) out.push_back(&p);
    std::sort(out.begin(), out.end(),
              [](const Participant* a, const Participant* b) { return a->id() < b->id(); });
    return out;
}

int wait_steps(const Route& route) {
    int waits = 0;
    for (std::size_t i = 1; i < route.points.size(); ++i)
        if (route.points[i].cell() == route.points[i - 1].cell()) ++waits;
    return waits;
}

// Baseline route plus random feasible detours; each success spends one unit
// of the initial slack, and kDetourFailCap consecutive misses give up.
Route randomized_route(const Participant& p, const TaskSpec& spec, Rng& rng) {
    const GridMap& grid = *spec.grid;
    Route route = baseline_route(schedule_of(p), spec).route;
    int successes_left = wait_steps(route);
    int fails = 0;
    while (successes_left > 0 && fails < kDetourFailCap) {
        const Coord via{static_cast<int>(rng.uniform_int(0, grid.width() - 1)),
                        static_cast<int>(rng.uniform_int(0, grid.height() - 1))};
        auto detoured = insert_detour(route, via, schedule_of(p), grid);
        if (detoured && detoured->points != route.points) {
            route = std::move(*detoured);
            --successes_left;
            fails = 0;
        } else {
            ++fails;
        }
    }
    return route;
}

enum class InsertRule { value_first, cost_first };

// Shared TVPG/TCPG loop: repeatedly apply the best improving (participant,
// detour-cell) insertion, measured on the union tensor of all candidate
// routes. Cell index means x*height + y throughout.
std::map<std::string, Route> greedy_insert_routes(const Instance& instance, InsertRule rule) {
    const TaskSpec& spec = instance.spec;
    const GridMap& grid = *spec.grid;
    const auto cands = eligible(instance);

    std::map<std::string, Route> routes;
    CoverageStats stats = CoverageStats::for_task(spec);
    for (const Participant* p : cands) {
        Route route = baseline_route(schedule_of(*p), spec).route;
        stats.add_route(route);
        routes.emplace(p->id(), std::move(route));
    }

    for (;;) {
        const double phi_cur = stats.phi(spec.alpha, spec.log_base);
        struct Best {
            double phi_new;
            double cost;
            std::size_t cand_idx;
            std::size_t cell_idx;
            Route route;
        };
        std::optional<Best> best;
        for (std::size_t ci = 0; ci < cands.size(); ++ci) {
            const Participant& p = *cands[ci];
            const Route& cur = routes.at(p.id());
            std::set<std::size_t> on_route;
            for (const auto& pt : cur.points) on_route.insert(grid.index(pt.cell()));
            for (int x = 0; x < grid.width(); ++x) {
                for (int y = 0; y < grid.height(); ++y) {
                    const Coord via{x, y};
                    const std::size_t cell_idx = grid.index(via);
                    if (on_route.count(cell_idx)) continue;
                    auto detoured = insert_detour(cur, via, schedule_of(p), grid);
                    if (!detoured) continue;
                    const double phi_new =
                        phi_from(stats.preview_swap(cur, *detoured), spec.alpha, spec.log_base);
                    if (phi_new <= phi_cur) continue;
                    bool better = false;
                    if (!best) {
                        better = true;
                    } else if (rule == InsertRule::value_first) {
                        better = phi_new > best->phi_new ||
                                 (phi_new == best->phi_new && p.cost() < best->cost);
                    } else {
                        better = p.cost() < best->cost ||
                                 (p.cost() == best->cost && phi_new > best->phi_new);
                    }
                    if (better)
                        best = Best{phi_new, p.cost(), ci, cell_idx, std::move(*detoured)};
                }
            }
        }
        if (!best) break;
        Route& cur = routes.at(cands[best->cand_idx]->id());
        stats.remove_route(cur);
        cur = std::move(best->route);
        stats.add_route(cur);
    }
    return routes;
}

// Budgeted greedy by marginal-phi-per-unit-cost.
std::vector<std::string> select_by_ratio(const std::vector<const Participant*>& cands,
                                         const std::map<std::string, Route>& routes,
                                         const TaskSpec& spec) {
    CoverageStats stats = CoverageStats::for_task(spec);
    double remaining = spec.budget;
    double phi_sel = 0.0;
    std::vector<bool> taken(cands.size(), false);
    std::vector<std::string> selected;
    const Route empty;
    for (;;) {
        struct Best {
            double ratio;
            double gain;
            double cost;
            std::size_t idx;
            double phi_new;
        };
        std::optional<Best> best;
        for (std::size_t i = 0; i < cands.size(); ++i) {
            if (taken[i] || cands[i]->cost() > remaining) continue;
            const double phi_new = phi_from(stats.preview_swap(empty, routes.at(cands[i]->id())),
                                            spec.alpha, spec.log_base);
            const double gain = phi_new - phi_sel;
            const double ratio = gain / cands[i]->cost();
            const bool better =
                !best || ratio > best->ratio ||
                (ratio == best->ratio &&
                 (gain > best->gain || (gain == best->gain && cands[i]->cost() < best->cost)));
            if (better) best = Best{ratio, gain, cands[i]->cost(), i, phi_new};
        }
        if (!best) break;
        taken[best->idx] = true;
        stats.add_route(routes.at(cands[best->idx]->id()));
        phi_sel = best->phi_new;
        remaining -= best->cost;
        selected.push_back(cands[best->idx]->id());
    }
    return selected;
}

PlanResult greedy_plan(const Instance& instance, InsertRule rule) {
    auto routes = greedy_insert_routes(instance, rule);
    const auto cands = eligible(instance);
    auto selected = select_by_ratio(cands, routes, instance.spec);
    std::map<std::string, Route> kept;
    for (const auto& id : selected) kept.emplace(id, routes.at(id));
    return finish_plan(std::move(selected), std::move(kept), instance);
}

void validate_sa(const SaSchedule& schedule) {
    if (!(schedule.t0 > 0.0) || !(schedule.cooling > 0.0) || !(schedule.cooling < 1.0) ||
        schedule.iters < 0 || schedule.restarts < 1)
        throw SenseError("bad_sa_schedule",
                         "need t0 > 0, cooling in (0,1), iters >= 0, restarts >= 1");
}

struct SaPlan {
    std::vector<const Participant*> selected;  // selection order
    std::map<std::string, Route> routes;
};

SaPlan random_sa_plan(const std::vector<const Participant*>& cands, const TaskSpec& spec,
                      Rng& rng) {
    SaPlan plan;
    std::vector<std::size_t> order(cands.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    double remaining = spec.budget;
    for (std::size_t idx : order) {
        if (cands[idx]->cost() > remaining) continue;
        remaining -= cands[idx]->cost();
        plan.selected.push_back(cands[idx]);
        plan.routes.emplace(cands[idx]->id(), randomized_route(*cands[idx], spec, rng));
    }
    return plan;
}

// Random interior cell of a route (neither endpoint); nullopt for 2-point routes.
std::optional<Coord> random_interior_cell(const Route& route, Rng& rng) {
    if (route.points.size() < 3) return std::nullopt;
    const auto idx = static_cast<std::size_t>(
        rng.uniform_int(1, static_cast<std::int64_t>(route.points.size()) - 2));
    return route.points[idx].cell();
}

// One annealing iteration: propose a neighborhood move, accept with the
// Metropolis rule, and keep `stats`/`plan`/`cur_phi` consistent.
void sa_step(SaPlan& plan, CoverageStats& stats, double& cur_phi, double temp, Rng& rng,
             const Instance& instance) {
    const TaskSpec& spec = instance.spec;
    const GridMap& grid = *spec.grid;
    if (plan.selected.empty()) return;

    std::vector<std::pair<std::string, Route>> changes;
    const int kind = static_cast<int>(rng.uniform_int(0, 2));
    if (kind == 0) {
        const Participant& p = *plan.selected[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(plan.selected.size()) - 1))];
        const Coord via{static_cast<int>(rng.uniform_int(0, grid.width() - 1)),
                        static_cast<int>(rng.uniform_int(0, grid.height() - 1))};
        auto detoured = insert_detour(plan.routes.at(p.id()), via, schedule_of(p), grid);
        if (detoured && detoured->points != plan.routes.at(p.id()).points)
            changes.emplace_back(p.id(), std::move(*detoured));
    } else if (kind == 1) {
        if (plan.selected.size() < 2) return;
        const auto n = static_cast<std::int64_t>(plan.selected.size());
        const auto i = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, n - 1));
        if (i == j) return;
        const Participant& u = *plan.selected[i];
        const Participant& w = *plan.selected[j];
        const auto cell_u = random_interior_cell(plan.routes.at(u.id()), rng);
        const auto cell_w = random_interior_cell(plan.routes.at(w.id()), rng);
        if (!cell_u || !cell_w) return;
        auto new_u = insert_detour(plan.routes.at(u.id()), *cell_w, schedule_of(u), grid);
        auto new_w = insert_detour(plan.routes.at(w.id()), *cell_u, schedule_of(w), grid);
        if (!new_u || !new_w) return;
        if (new_u->points == plan.routes.at(u.id()).points &&
            new_w->points == plan.routes.at(w.id()).points)
            return;
        changes.emplace_back(u.id(), std::move(*new_u));
        changes.emplace_back(w.id(), std::move(*new_w));
    } else {
        const Participant& p = *plan.selected[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(plan.selected.size()) - 1))];
        const Route& cur = plan.routes.at(p.id());
        const auto len = static_cast<std::int64_t>(cur.points.size());
        if (len < 4) return;
        auto i = static_cast<std::size_t>(rng.uniform_int(1, len - 2));
        auto j = static_cast<std::size_t>(rng.uniform_int(1, len - 2));
        if (i == j) return;
        if (i > j) std::swap(i, j);
        Route reversed = cur;
        std::reverse(reversed.points.begin() + i, reversed.points.begin() + j + 1);
        for (std::size_t k = i; k <= j; ++k) reversed.points[k].t = cur.points[k].t;
        if (!validate_route(reversed, p, spec).ok) return;
        if (reversed.points == cur.points) return;
        changes.emplace_back(p.id(), std::move(reversed));
    }
    if (changes.empty()) return;

    for (const auto& [id, route] : changes) {
        stats.remove_route(plan.routes.at(id));
        stats.add_route(route);
    }
    const double new_phi = stats.phi(spec.alpha, spec.log_base);
    const double loss = cur_phi - new_phi;
    if (rng.uniform_real() < std::exp(-loss / temp)) {
        for (auto& [id, route] : changes) plan.routes.at(id) = std::move(route);
        cur_phi = new_phi;
    } else {
        for (const auto& [id, route] : changes) {
            stats.remove_route(route);
            stats.add_route(plan.routes.at(id));
        }
    }
}

PlanResult finish_sa(const SaPlan& plan, const Instance& instance) {
    std::vector<std::string> selected;
    for (const Participant* p : plan.selected) selected.push_back(p->id());
    return finish_plan(std::move(selected), plan.routes, instance);
}

PlanResult anneal(const Instance& instance, std::uint64_t seed, const SaSchedule& schedule,
                  const std::optional<SaPlan>& fixed_init) {
    validate_sa(schedule);
    const TaskSpec& spec = instance.spec;
    const auto cands = eligible(instance);

    std::optional<SaPlan> best;
    double best_phi = 0.0;
    auto consider = [&](const SaPlan& plan, double phi) {
        if (!best || phi > best_phi) {
            best = plan;
            best_phi = phi;
        }
    };

    for (int r = 0; r < schedule.restarts; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        SaPlan plan = fixed_init ? *fixed_init : random_sa_plan(cands, spec, rng);
        CoverageStats stats = CoverageStats::for_task(spec);
        for (const auto& [id, route] : plan.routes) stats.add_route(route);
        double cur_phi = stats.phi(spec.alpha, spec.log_base);
        consider(plan, cur_phi);
        double temp = schedule.t0;
        for (int it = 0; it < schedule.iters; ++it) {
            sa_step(plan, stats, cur_phi, temp, rng, instance);
            consider(plan, cur_phi);
            temp *= schedule.cooling;
        }
    }
    return best ? finish_sa(*best, instance) : PlanResult{};
}

// Max-new-bin route for one participant under speed/window constraints, given
// the bins already committed by earlier routes. Forward DP over (cell, t).
Route graphdp_route(const Participant& p, const CoverageStats& committed,
                    const TaskSpec& spec) {
    const GridMap& grid = *spec.grid;
    const int h = grid.height();
    const int n_cells = grid.width() * h;
    const int t0 = p.depart();
    const int t1 = p.arrive();
    const int v = p.speed();
    const Coord dest = p.destination();
    auto reward = [&](int x, int y, int t) {
        return committed.count_at(x, y, t) == 0 ? 1 : 0;
    };

    std::vector<std::vector<int>> val(t1 - t0 + 1, std::vector<int>(n_cells, -1));
    std::vector<std::vector<int>> par(t1 - t0 + 1, std::vector<int>(n_cells, -1));
    const int start = static_cast<int>(grid.index(p.origin()));
    val[0][start] = reward(p.origin().x, p.origin().y, t0);

    for (int step = 0; step < t1 - t0; ++step) {
        const int t_next = t0 + step + 1;
        for (int c = 0; c < n_cells; ++c) {
            if (val[step][c] < 0) continue;
            const Coord cell{c / h, c % h};
            for (int dx = -v; dx <= v; ++dx) {
                const int rem = v - std::abs(dx);
                for (int dy = -rem; dy <= rem; ++dy) {
                    const Coord next{cell.x + dx, cell.y + dy};
                    if (!grid.in_bounds(next)) continue;
                    if (manhattan(next, dest) > static_cast<long long>(v) * (t1 - t_next))
                        continue;
                    const int nc = static_cast<int>(grid.index(next));
                    const int cand = val[step][c] + reward(next.x, next.y, t_next);
                    if (cand > val[step + 1][nc]) {
                        val[step + 1][nc] = cand;
                        par[step + 1][nc] = c;
                    }
                }
            }
        }
    }

    Route route;
    route.points.resize(t1 - t0 + 1);
    int c = static_cast<int>(grid.index(dest));
    for (int step = t1 - t0; step >= 0; --step) {
        route.points[step] = {c / h, c % h, t0 + step};
        c = step > 0 ? par[step][c] : c;
    }
    return route;
}

// phi and routes for a fixed selection, committing DP routes in (cost, id) order.
std::pair<double, std::map<std::string, Route>> graphdp_replan(
    std::vector<const Participant*> sel, const TaskSpec& spec) {
    std::sort(sel.begin(), sel.end(), [](const Participant* a, const Participant* b) {
        return a->cost() != b->cost() ? a->cost() < b->cost() : a->id() < b->id();
    });
    CoverageStats stats = CoverageStats::for_task(spec);
    std::map<std::string, Route> routes;
    for (const Participant* p : sel) {
        Route route = graphdp_route(*p, stats, spec);
        stats.add_route(route);
        routes.emplace(p->id(), std::move(route));
    }
    return {stats.phi(spec.alpha, spec.log_base), std::move(routes)};
}

}  // namespace

PlanResult finish_plan(std::vector<std::string> selected, std::map<std::string, Route> routes,
                       const Instance& instance) {
    PlanResult result;
    result.selected = std::move(selected);
    result.routes = std::move(routes);
    if (result.selected.empty()) return result;

    const TaskSpec& spec = instance.spec;
    std::map<std::string, const Participant*> by_id;
    for (const auto& p : instance.participants) by_id.emplace(p.id(), &p);

    CoverageTensor tensor = CoverageTensor::for_task(spec);
    double pss_sum = 0.0;
    for (const auto& id : result.selected) {
        const Route& route = result.routes.at(id);
        tensor.add_route(route);
        pss_sum += metrics::path_satisfaction(route, *by_id.at(id), *spec.grid, spec.mu);
    }
    result.report = metrics::coverage_report(tensor, spec);
    result.mean_pss = pss_sum / static_cast<double>(result.selected.size());
    return result;
}

PlanResult plan_rn(const Instance& instance, std::uint64_t seed) {
    const TaskSpec& spec = instance.spec;
    const auto cands = eligible(instance);
    Rng rng(seed);
    std::vector<std::size_t> order(cands.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    std::vector<std::string> selected;
    std::map<std::string, Route> routes;
    double remaining = spec.budget;
    for (std::size_t idx : order) {
        if (cands[idx]->cost() > remaining) continue;
        remaining -= cands[idx]->cost();
        selected.push_back(cands[idx]->id());
        routes.emplace(cands[idx]->id(), randomized_route(*cands[idx], spec, rng));
    }
    return finish_plan(std::move(selected), std::move(routes), instance);
}

PlanResult plan_tvpg(const Instance& instance) {
    return greedy_plan(instance, InsertRule::value_first);
}

PlanResult plan_tcpg(const Instance& instance) {
    return greedy_plan(instance, InsertRule::cost_first);
}

std::map<std::string, Route> tvpg_routes(const Instance& instance) {
    return greedy_insert_routes(instance, InsertRule::value_first);
}

std::map<std::string, Route> tcpg_routes(const Instance& instance) {
    return greedy_insert_routes(instance, InsertRule::cost_first);
}

PlanResult plan_msa(const Instance& instance, std::uint64_t seed, const SaSchedule& schedule) {
    return anneal(instance, seed, schedule, std::nullopt);
}

PlanResult plan_msagi(const Instance& instance, std::uint64_t seed, const SaSchedule& schedule) {
    validate_sa(schedule);
    PlanResult tvpg = plan_tvpg(instance);
    SaPlan init;
    std::map<std::string, const Participant*> by_id;
    for (const auto& p : instance.participants) by_id.emplace(p.id(), &p);
    for (const auto& id : tvpg.selected) init.selected.push_back(by_id.at(id));
    init.routes = tvpg.routes;
    return anneal(instance, seed, schedule, init);
}

PlanResult plan_graphdp(const Instance& instance) {
    const TaskSpec& spec = instance.spec;
    const long long states = static_cast<long long>(spec.grid->width()) *
                             spec.grid->height() * (spec.horizon + 1);
    if (states > kGraphDpStateCap)
        throw SenseError("instance_too_large",
                         "per-participant state space exceeds the GraphDP cap");

    auto order = eligible(instance);
    std::sort(order.begin(), order.end(), [](const Participant* a, const Participant* b) {
        return a->cost() != b->cost() ? a->cost() < b->cost() : a->id() < b->id();
    });

    std::vector<const Participant*> selected;
    std::vector<const Participant*> skipped;
    double remaining = spec.budget;
    for (const Participant* p : order) {
        if (p->cost() <= remaining) {
            remaining -= p->cost();
            selected.push_back(p);
        } else {
            skipped.push_back(p);
        }
    }

    double phi_cur = graphdp_replan(selected, spec).first;
    for (;;) {
        double total_cost = 0.0;
        for (const Participant* p : selected) total_cost += p->cost();
        struct Swap {
            std::size_t sel_idx;
            std::size_t skip_idx;
            double phi;
        };
        std::optional<Swap> best;
        for (std::size_t si = 0; si < selected.size(); ++si) {
            for (std::size_t wi = 0; wi < skipped.size(); ++wi) {
                if (total_cost - selected[si]->cost() + skipped[wi]->cost() > spec.budget)
                    continue;
                std::vector<const Participant*> trial = selected;
                trial[si] = skipped[wi];
                const double phi = graphdp_replan(trial, spec).first;
                if (phi > phi_cur && (!best || phi > best->phi))
                    best = Swap{si, wi, phi};
            }
        }
        if (!best) break;
        std::swap(selected[best->sel_idx], skipped[best->skip_idx]);
        phi_cur = best->phi;
    }

    auto [phi, routes] = graphdp_replan(selected, spec);
    (void)phi;
    std::sort(selected.begin(), selected.end(),
              [](const Participant* a, const Participant* b) {
                  return a->cost() != b->cost() ? a->cost() < b->cost() : a->id() < b->id();
              });
    std::vector<std::string> ids;
    for (const Participant* p : selected) ids.push_back(p->id());
    return finish_plan(std::move(ids), std::move(routes), instance);
}

const std::vector<std::string>& planner_keys() {
    static const std::vector<std::string> keys = {"rn",  "tvpg",  "tcpg",
                                                  "msa", "msagi", "graphdp"};
    return keys;
}

bool is_planner(const std::string& key) {
    const auto& keys = planner_keys();
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

PlanResult run_planner(const std::string& key, const Instance& instance, std::uint64_t seed) {
    if (key == "rn") return plan_rn(instance, seed);
    if (key == "tvpg") return plan_tvpg(instance);
    if (key == "tcpg") return plan_tcpg(instance);
    if (key == "msa") return plan_msa(instance, seed);
    if (key == "msagi") return plan_msagi(instance, seed);
    if (key == "graphdp") return plan_graphdp(instance);
    std::string keys;
    for (const auto& k : planner_keys()) keys += (keys.empty() ? "" : ", ") + k;
    throw SenseError("unknown_method", "unknown planner '" + key + "'; registered: " + keys);
}

}  // namespace senseforge::baselines
