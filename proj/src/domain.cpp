#include "senseforge/domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace senseforge {

int manhattan(Coord a, Coord b) {
    return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

const std::array<std::string, kNumLandUse>& land_use_names() {
    static const std::array<std::string, kNumLandUse> names = {
        "vegetation", "industrial", "institutional", "medical", "residential", "commercial"};
    return names;
}

const std::array<std::string, 5>& archetype_names() {
    static const std::array<std::string, 5> names = {
        "eco_enthusiast", "city_dweller", "industrial_worker", "community_helper", "explorer"};
    return names;
}

bool archetype_valid(const std::string& name) {
    const auto& all = archetype_names();
    return std::find(all.begin(), all.end(), name) != all.end();
}

namespace {

void check_distribution(const std::array<double, kNumLandUse>& v, const char* what) {
    double sum = 0.0;
    for (double x : v) {
        if (x < 0.0) throw SenseError("bad_distribution", std::string(what) + " has a negative component");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw SenseError("bad_distribution", std::string(what) + " does not sum to 1");
}

}  // namespace

GridMap::GridMap(int width, int height)
    : GridMap(width, height,
              std::vector<CellAttributes>(static_cast<std::size_t>(width > 0 ? width : 0) *
                                          (height > 0 ? height : 0))) {}

GridMap::GridMap(int width, int height, std::vector<CellAttributes> cells)
    : width_(width), height_(height), cells_(std::move(cells)) {
    if (width_ < 1 || height_ < 1)
        throw SenseError("bad_grid", "grid dimensions must be positive");
    if (cells_.size() != static_cast<std::size_t>(width_) * height_)
        throw SenseError("bad_grid", "cells array length must equal width*height");
    for (const auto& cell : cells_) {
        check_distribution(cell.landuse, "cell land-use distribution");
        if (cell.crime_count < 0)
            throw SenseError("bad_grid", "crime counts must be nonnegative");
    }
    min_crime_ = cells_.front().crime_count;
    max_crime_ = cells_.front().crime_count;
    for (const auto& cell : cells_) {
        min_crime_ = std::min(min_crime_, cell.crime_count);
        max_crime_ = std::max(max_crime_, cell.crime_count);
    }
}

const CellAttributes& GridMap::at(Coord c) const {
    if (!in_bounds(c)) throw SenseError("out_of_bounds", "cell outside grid");
    return cells_[index(c)];
}

int GridMap::dominant_category(Coord c) const {
    const auto& lu = at(c).landuse;
    int best = 0;
    for (int k = 1; k < kNumLandUse; ++k)
        if (lu[k] > lu[best]) best = k;
    return best;
}

Participant::Participant(std::string id, Coord origin, Coord destination, int depart,
                         int arrive, int speed, double cost,
                         std::array<double, kNumLandUse> preference, int history_count,
                         ParticipantProfile profile)
    : id_(std::move(id)),
      origin_(origin),
      destination_(destination),
      depart_(depart),
      arrive_(arrive),
      speed_(speed),
      cost_(cost),
      preference_(preference),
      history_count_(history_count),
      profile_(std::move(profile)) {
    if (id_.empty()) throw SenseError("infeasible_participant", "participant id must be non-empty");
    if (depart_ < 0 || depart_ >= arrive_)
        throw SenseError("infeasible_participant",
                         "participant " + id_ + ": window must satisfy 0 <= depart < arrive");
    if (speed_ < 1)
        throw SenseError("infeasible_participant", "participant " + id_ + ": speed must be >= 1");
    if (!(cost_ > 0.0))
        throw SenseError("infeasible_participant", "participant " + id_ + ": cost must be positive");
    if (history_count_ < 0)
        throw SenseError("infeasible_participant",
                         "participant " + id_ + ": history_count must be nonnegative");
    check_distribution(preference_, "preference vector");
    if (!profile_.archetype.empty() && !archetype_valid(profile_.archetype))
        throw SenseError("infeasible_participant",
                         "participant " + id_ + ": unknown archetype " + profile_.archetype);
    if (manhattan(origin_, destination_) > static_cast<long long>(speed_) * (arrive_ - depart_))
        throw SenseError("infeasible_participant",
                         "participant " + id_ + ": destination unreachable within window");
}

void TaskSpec::validate() const {
    auto fail = [](const std::string& msg) { throw SenseError("bad_task_spec", msg); };
    if (!grid) fail("grid is required");
    if (horizon < 1) fail("horizon must be >= 1");
    if (interval_minutes < 1) fail("interval_minutes must be >= 1");
    if (!(budget > 0.0)) fail("budget must be positive");
    auto unit = [&](double v, const char* name) {
        if (v < 0.0 || v > 1.0) fail(std::string(name) + " must lie in [0,1]");
    };
    unit(alpha, "alpha");
    unit(beta, "beta");
    unit(lambda_, "lambda_");
    unit(overlap_threshold, "overlap_threshold");
    if (eta < 0.0) fail("eta must be >= 0");
    if (mu < 0.0) fail("mu must be >= 0");
    if (tie_epsilon < 0.0) fail("tie_epsilon must be >= 0");
    if (max_negotiation_rounds < 1) fail("max_negotiation_rounds must be >= 1");
    if (max_pair_attempts < 0) fail("max_pair_attempts must be >= 0");
    if (max_refine_iters < 0) fail("max_refine_iters must be >= 0");
}

TaskSpec make_task_spec(std::shared_ptr<const GridMap> grid, int horizon,
                        int interval_minutes, double budget) {
    TaskSpec spec;
    spec.grid = std::move(grid);
    spec.horizon = horizon;
    spec.interval_minutes = interval_minutes;
    spec.budget = budget;
    spec.validate();
    return spec;
}

void validate_event(const DisturbanceEvent& event, const TaskSpec& spec) {
    if (!spec.grid->in_bounds(event.cell))
        throw SenseError("out_of_bounds", "disturbance cell outside grid");
    if (event.t_from < 0 || event.t_to > spec.horizon || event.t_from > event.t_to)
        throw SenseError("bad_event", "disturbance window must lie within [0, horizon]");
    if (event.kind == DisturbanceEvent::Kind::cell_blocked && event.bonus != 0.0)
        throw SenseError("bad_event", "bonus is only meaningful for priority_region events");
    if (event.bonus < 0.0) throw SenseError("bad_event", "bonus must be >= 0");
}

CoverageTensor::CoverageTensor(int width, int height, int time_slots)
    : width_(width), height_(height), time_slots_(time_slots) {
    if (width_ < 1 || height_ < 1 || time_slots_ < 1)
        throw SenseError("bad_tensor", "tensor dimensions must be positive");
    counts_.assign(static_cast<std::size_t>(width_) * height_ * time_slots_, 0.0);
}

CoverageTensor CoverageTensor::for_task(const TaskSpec& spec) {
    return CoverageTensor(spec.grid->width(), spec.grid->height(), spec.horizon + 1);
}

void CoverageTensor::add_point(int x, int y, int t, double amount) {
    if (x < 0 || x >= width_ || y < 0 || y >= height_ || t < 0 || t >= time_slots_)
        throw SenseError("out_of_bounds", "tensor index outside bounds");
    counts_[index(x, y, t)] += amount;
}

void CoverageTensor::add_route(const Route& route) {
    for (const auto& p : route.points) add_point(p.x, p.y, p.t, 1.0);
}

void CoverageTensor::remove_route(const Route& route) {
    for (const auto& p : route.points) add_point(p.x, p.y, p.t, -1.0);
}

void CoverageTensor::add(const CoverageTensor& other) {
    if (other.width_ != width_ || other.height_ != height_ || other.time_slots_ != time_slots_)
        throw SenseError("bad_tensor", "tensor dimensions mismatch");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

ValidationResult validate_route(const Route& route, const Participant& participant,
                                const TaskSpec& spec) {
    if (route.points.empty()) throw SenseError("empty_route", "route has no points");
    ValidationResult result;
    auto flag = [&](const char* category) {
        for (const auto& v : result.violations)
            if (v == category) return;
        result.ok = false;
        result.violations.emplace_back(category);
    };

    const GridMap& grid = *spec.grid;
    for (const auto& p : route.points)
        if (!grid.in_bounds(p.cell())) {
            flag("out_of_bounds");
            break;
        }
    for (std::size_t i = 1; i < route.points.size(); ++i) {
        if (route.points[i].t != route.points[i - 1].t + 1) {
            flag("timestep_not_unit");
            break;
        }
    }
    for (std::size_t i = 1; i < route.points.size(); ++i) {
        if (manhattan(route.points[i - 1].cell(), route.points[i].cell()) > participant.speed()) {
            flag("speed_exceeded");
            break;
        }
    }
    const RoutePoint& first = route.points.front();
    const RoutePoint& last = route.points.back();
    if (first.cell() != participant.origin() || first.t != participant.depart())
        flag("origin_mismatch");
    if (last.cell() != participant.destination()) flag("destination_mismatch");
    if (last.t > participant.arrive()) flag("arrival_exceeded");
    return result;
}

}  // namespace senseforge
