#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "senseforge/domain.hpp"
#include "senseforge/metrics.hpp"

namespace senseforge::baselines {

struct PlanResult {
    std::vector<std::string> selected;     // selection order
    std::map<std::string, Route> routes;   // routes of the selected participants
    std::optional<metrics::CoverageReport> report;  // nullopt marks the empty plan
    double mean_pss = 0.0;
};

// Report + mean PSS for an already-decided plan.
PlanResult finish_plan(std::vector<std::string> selected, std::map<std::string, Route> routes,
                       const Instance& instance);

struct SaSchedule {
    double t0 = 1.0;
    double cooling = 0.95;
    int iters = 500;
    int restarts = 5;
};

PlanResult plan_rn(const Instance& instance, std::uint64_t seed);
PlanResult plan_tvpg(const Instance& instance);
PlanResult plan_tcpg(const Instance& instance);
PlanResult plan_msa(const Instance& instance, std::uint64_t seed,
                    const SaSchedule& schedule = {});
PlanResult plan_msagi(const Instance& instance, std::uint64_t seed,
                      const SaSchedule& schedule = {});
PlanResult plan_graphdp(const Instance& instance);

// Greedy-insertion route maps for every in-horizon candidate (before any
// selection); exposed for the route-generation ablation.
std::map<std::string, Route> tvpg_routes(const Instance& instance);
std::map<std::string, Route> tcpg_routes(const Instance& instance);

// Per-participant state-space cap for plan_graphdp.
inline constexpr long long kGraphDpStateCap = 200000;

const std::vector<std::string>& planner_keys();
bool is_planner(const std::string& key);
PlanResult run_planner(const std::string& key, const Instance& instance, std::uint64_t seed);

}  // namespace senseforge::baselines
