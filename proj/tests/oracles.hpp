#pragma once

// Brute-force reference implementations the tests compare library results
// against. These deliberately recompute everything from first principles and
// share no incremental state with the code under test.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "senseforge/domain.hpp"

namespace test_oracles {

using senseforge::CoverageTensor;
using senseforge::LogBase;
using senseforge::Participant;
using senseforge::Route;
using senseforge::RoutePoint;
using senseforge::TaskSpec;

// Shannon entropy straight from the definition, -sum p*log(p).
inline double entropy_direct(const CoverageTensor& tensor, LogBase base) {
    double q = 0.0;
    for (const double c : tensor.counts()) q += c;
    double e = 0.0;
    for (const double c : tensor.counts()) {
        if (c <= 0.0) continue;
        const double p = c / q;
        e -= p * (base == LogBase::natural ? std::log(p) : std::log10(p));
    }
    return e;
}

// Entropy through the algebraic identity E = log Q - (sum c*log c)/Q.
inline double entropy_identity(const CoverageTensor& tensor, LogBase base) {
    double q = 0.0;
    double s = 0.0;
    for (const double c : tensor.counts()) {
        q += c;
        if (c > 0.0) s += c * std::log(c);
    }
    const double e_nat = std::log(q) - s / q;
    return base == LogBase::natural ? e_nat : e_nat / std::log(10.0);
}

inline double phi_direct(const CoverageTensor& tensor, const TaskSpec& spec) {
    double q = 0.0;
    for (const double c : tensor.counts()) q += c;
    if (q <= 0.0) return 0.0;
    const double log_q =
        spec.log_base == LogBase::natural ? std::log(q) : std::log10(q);
    return spec.alpha * entropy_direct(tensor, spec.log_base) + (1.0 - spec.alpha) * log_q;
}

// Every unit-timestep route from origin@depart to destination@arrive whose
// steps respect the speed bound. Exponential; keep windows tiny.
inline std::vector<Route> all_feasible_routes(const Participant& p, const TaskSpec& spec) {
    const auto& grid = *spec.grid;
    std::vector<Route> out;
    Route current;
    current.points.push_back({p.origin().x, p.origin().y, p.depart()});

    auto extend = [&](auto&& self) -> void {
        // copy: push_back below may reallocate and invalidate references
        const RoutePoint last = current.points.back();
        if (last.t == p.arrive()) {
            if (last.cell() == p.destination()) out.push_back(current);
            return;
        }
        for (int x = 0; x < grid.width(); ++x)
            for (int y = 0; y < grid.height(); ++y) {
                const senseforge::Coord next{x, y};
                if (senseforge::manhattan(last.cell(), next) > p.speed()) continue;
                const int remaining = p.arrive() - (last.t + 1);
                if (senseforge::manhattan(next, p.destination()) >
                    static_cast<long long>(p.speed()) * remaining)
                    continue;
                current.points.push_back({x, y, last.t + 1});
                self(self);
                current.points.pop_back();
            }
    };
    extend(extend);
    return out;
}

// Points of `route` landing on bins that `committed` leaves empty.
inline long long fresh_points(const Route& route, const CoverageTensor& committed) {
    // Duplicate visits within the route itself stay fresh only once.
    std::map<std::tuple<int, int, int>, int> local;
    long long fresh = 0;
    for (const auto& pt : route.points) {
        const bool taken = committed.at(pt.x, pt.y, pt.t) > 0.0 ||
                           local[{pt.x, pt.y, pt.t}] > 0;
        if (!taken) ++fresh;
        local[{pt.x, pt.y, pt.t}] += 1;
    }
    return fresh;
}

// Coverage utility as a pure function of the count multiset: counts are
// sorted before summation so that bin placement cannot perturb the result.
// Structurally identical candidate sets therefore tie bitwise, matching the
// incremental bookkeeping in the selection loop (fresh bins contribute an
// exact zero to sum n*log n there as well).
inline double phi_sorted(const CoverageTensor& tensor, const TaskSpec& spec) {
    std::vector<double> counts;
    for (const double c : tensor.counts())
        if (c > 0.0) counts.push_back(c);
    if (counts.empty()) return 0.0;
    std::sort(counts.begin(), counts.end());
    double q = 0.0;
    double s = 0.0;
    for (const double c : counts) {
        q += c;
        s += c * std::log(c);
    }
    double entropy = std::log(q) - s / q;
    double log_q = std::log(q);
    if (spec.log_base == LogBase::base10) {
        entropy /= std::log(10.0);
        log_q /= std::log(10.0);
    }
    return spec.alpha * entropy + (1.0 - spec.alpha) * log_q;
}

// Budgeted coverage-greedy selection mirroring the published score contract:
// marginal phi gain, min-max normalized, ties by (history, id). Gains are
// recomputed from whole tensors each pick.
inline std::vector<std::string> greedy_selection_oracle(
    const std::vector<const Participant*>& candidates,
    const std::map<std::string, Route>& routes,
    const std::map<std::string, int>& histories, const TaskSpec& spec) {
    std::vector<std::string> order;
    std::vector<const Participant*> pool = candidates;
    double remaining = spec.budget;
    CoverageTensor united = CoverageTensor::for_task(spec);
    bool any_selected = false;

    auto history_of = [&](const Participant* p) {
        const auto it = histories.find(p->id());
        return it != histories.end() ? it->second : p->history_count();
    };

    for (;;) {
        std::vector<const Participant*> feasible;
        for (const Participant* p : pool)
            if (p->cost() <= remaining && routes.count(p->id())) feasible.push_back(p);
        if (feasible.empty()) break;

        const double phi_before = any_selected ? phi_sorted(united, spec) : 0.0;
        std::vector<double> gains;
        gains.reserve(feasible.size());
        for (const Participant* p : feasible) {
            CoverageTensor trial = united;
            trial.add_route(routes.at(p->id()));
            gains.push_back(phi_sorted(trial, spec) - phi_before);
        }
        const double lo = *std::min_element(gains.begin(), gains.end());
        const double hi = *std::max_element(gains.begin(), gains.end());
        std::vector<double> norm(gains.size(), 1.0);
        if (hi > lo)
            for (std::size_t i = 0; i < gains.size(); ++i) norm[i] = (gains[i] - lo) / (hi - lo);
        const double best = *std::max_element(norm.begin(), norm.end());

        const Participant* chosen = nullptr;
        for (std::size_t i = 0; i < feasible.size(); ++i) {
            if (norm[i] < best) continue;
            if (!chosen || history_of(feasible[i]) < history_of(chosen) ||
                (history_of(feasible[i]) == history_of(chosen) &&
                 feasible[i]->id() < chosen->id()))
                chosen = feasible[i];
        }
        order.push_back(chosen->id());
        remaining -= chosen->cost();
        united.add_route(routes.at(chosen->id()));
        any_selected = true;
        pool.erase(std::find(pool.begin(), pool.end(), chosen));
    }
    return order;
}

}  // namespace test_oracles
