#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "senseforge/domain.hpp"
#include "senseforge/pipeline.hpp"

namespace senseforge::harness {

struct InstanceConfig {
    std::string name = "custom";
    int width = 0;
    int height = 0;
    int n_participants = 0;
    double budget = 0.0;
    int horizon_minutes = 0;
    int interval_minutes = 1;
    bool with_crime = true;  // grab-style presets have no usable crime data
    // Generator knobs the presets leave at their documented defaults.
    int min_speed = 1;
    int max_speed = 3;
    double min_cost = 1.0;
    double max_cost = 5.0;
};

const std::vector<std::string>& preset_names();
std::optional<InstanceConfig> find_preset(const std::string& name);

struct ProfileSample {
    ParticipantProfile profile;
    std::array<double, kNumLandUse> preference{};
};

// Demographics from fixed distributions, archetype weighted by demographic
// compatibility, preferences = archetype base blended with Dirichlet noise.
ProfileSample sample_profile(std::uint64_t seed);

// Pure function of (config, seed). Throws "degenerate_config" when the
// horizon admits no feasible window.
Instance generate_instance(const InstanceConfig& config, std::uint64_t seed);

// CSV with header x,y,lu_vegetation,lu_industrial,lu_institutional,
// lu_medical,lu_residential,lu_commercial,crime_count. Unlisted cells stay
// uniform with zero crime; crime counts below 10 are zeroed; land-use rows
// off unit sum by <= 0.05 are renormalized with a warning on stderr.
GridMap load_attributes(const std::string& path, int width, int height);

struct TrajectoryLoad {
    std::vector<Participant> participants;
    int dropped = 0;  // rows whose schedule cannot be honored
};

// CSV with header traj_id,x,y,timestamp (grid units, minutes). First/last
// points become origin/destination, timestamps snap to interval boundaries.
TrajectoryLoad load_trajectories(const std::string& path, const GridMap& grid, int horizon,
                                 int interval_minutes, int speed_cap = 3);

// Planner keys plus "mapus" (the full pipeline).
const std::vector<std::string>& method_keys();
bool is_method(const std::string& key);

// Unknown keys throw "unknown_method" listing the registered keys. The
// policy set only matters for "mapus"; null means the heuristic default.
baselines::PlanResult run_method(const std::string& key, const Instance& instance,
                                 std::uint64_t seed,
                                 const policy::PolicySet* policies = nullptr);

struct ComparisonRow {
    std::string config;
    std::string method;
    std::uint64_t seed = 0;
    bool failed = false;  // failed rows carry nan coverage/pss
    double coverage = 0.0;
    double pss = 0.0;
    double runtime_ms = 0.0;
};

struct Aggregate {
    std::string config;
    std::string method;
    int n = 0;
    int failures = 0;
    double mean_coverage = 0.0;
    double var_coverage = 0.0;
    double mean_pss = 0.0;
    double var_pss = 0.0;
    double mean_runtime_ms = 0.0;
};

struct ExperimentReport {
    std::vector<ComparisonRow> rows;
    std::vector<Aggregate> aggregates;  // recomputable from rows
};

// One row per (config, instance, method); failures are recorded, not fatal.
// Cells run across `jobs` threads, each on its own derived seed.
ExperimentReport run_comparison(const std::vector<InstanceConfig>& configs,
                                const std::vector<std::string>& methods, int n_instances,
                                std::uint64_t base_seed, int jobs = 1,
                                const policy::PolicySet* pipeline_policies = nullptr);

// Variants: full, wo_prg (greedy-insertion route generator), wo_fps
// (beta = 1, exact ties only), wo_nrr (negotiation disabled).
ExperimentReport run_ablation(const InstanceConfig& config, int n_instances,
                              std::uint64_t base_seed);

struct FairnessRow {
    std::string strategy;
    std::string worker_id;
    int count = 0;
};

struct FairnessStrategyStats {
    std::string strategy;
    double count_mean = 0.0;
    double count_variance = 0.0;
    double count_gini = 0.0;
    std::vector<std::pair<long, double>> count_cdf;  // (count, fraction <= count)
    double mean_coverage = 0.0;
    double mean_pss = 0.0;
};

struct FairnessReport {
    std::vector<FairnessRow> rows;
    std::vector<FairnessStrategyStats> stats;
};

// Sequential tasks against persistent per-strategy histories. Strategies:
// ur (uniform random), ls (least selected first), cg (coverage greedy),
// fps (the selection stage with its defaults).
FairnessReport run_fairness(std::uint64_t seed, int n_workers = 30, int n_tasks = 60,
                            int k_per_task = 20);

struct NegotiationEffectRow {
    int instance_index = 0;
    std::string phase;  // "before" or "after"
    pipeline::Snapshot snapshot;
};

struct SnapshotMeans {
    double overlap_pct = 0.0;
    double coverage = 0.0;
    double entropy = 0.0;
    double count = 0.0;
    double mean_pss = 0.0;
};

struct NegotiationEffectReport {
    std::vector<NegotiationEffectRow> rows;
    SnapshotMeans mean_before;
    SnapshotMeans mean_after;
};

NegotiationEffectReport run_negotiation_effect(const InstanceConfig& config, int n_instances,
                                               std::uint64_t base_seed);

}  // namespace senseforge::harness
