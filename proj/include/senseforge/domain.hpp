#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace senseforge {

// Every domain failure carries a stable machine-readable code alongside the
// human-readable message.
class SenseError : public std::runtime_error {
public:
    SenseError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

struct Coord {
    int x = 0;
    int y = 0;
    auto operator<=>(const Coord&) const = default;
};

int manhattan(Coord a, Coord b);

inline constexpr int kNumLandUse = 6;

// Canonical category order; ties in argmax break toward the earlier entry.
const std::array<std::string, kNumLandUse>& land_use_names();

struct CellAttributes {
    std::array<double, kNumLandUse> landuse{1.0 / 6, 1.0 / 6, 1.0 / 6,
                                            1.0 / 6, 1.0 / 6, 1.0 / 6};
    int crime_count = 0;
};

class GridMap {
public:
    // All cells uniform land use, zero crime.
    GridMap(int width, int height);
    GridMap(int width, int height, std::vector<CellAttributes> cells);

    int width() const { return width_; }
    int height() const { return height_; }
    bool in_bounds(Coord c) const {
        return c.x >= 0 && c.x < width_ && c.y >= 0 && c.y < height_;
    }
    std::size_t index(Coord c) const {
        return static_cast<std::size_t>(c.x) * height_ + c.y;
    }
    const CellAttributes& at(Coord c) const;
    const std::vector<CellAttributes>& cells() const { return cells_; }
    // Argmax land-use category index; tie -> lowest index.
    int dominant_category(Coord c) const;
    int max_crime() const { return max_crime_; }
    int min_crime() const { return min_crime_; }

private:
    int width_;
    int height_;
    std::vector<CellAttributes> cells_;
    int min_crime_ = 0;
    int max_crime_ = 0;
};

struct ParticipantProfile {
    std::string gender;
    int age = 0;
    std::string age_group;
    std::string economic_status;
    std::vector<std::string> hobbies;
    std::string archetype;
    std::string description;
};

const std::array<std::string, 5>& archetype_names();
bool archetype_valid(const std::string& name);

struct RoutePoint {
    int x = 0;
    int y = 0;
    int t = 0;
    Coord cell() const { return {x, y}; }
    auto operator<=>(const RoutePoint&) const = default;
};

struct Route {
    std::vector<RoutePoint> points;
    bool operator==(const Route&) const = default;
};

class Participant {
public:
    // Rejects infeasible mobility (manhattan(origin,destination) > speed*(arrive-depart)),
    // inverted windows, non-positive speed/cost, and malformed preference vectors.
    Participant(std::string id, Coord origin, Coord destination, int depart, int arrive,
                int speed, double cost, std::array<double, kNumLandUse> preference,
                int history_count, ParticipantProfile profile);

    const std::string& id() const { return id_; }
    Coord origin() const { return origin_; }
    Coord destination() const { return destination_; }
    int depart() const { return depart_; }
    int arrive() const { return arrive_; }
    int speed() const { return speed_; }
    double cost() const { return cost_; }
    const std::array<double, kNumLandUse>& preference() const { return preference_; }
    int history_count() const { return history_count_; }
    const ParticipantProfile& profile() const { return profile_; }

private:
    std::string id_;
    Coord origin_;
    Coord destination_;
    int depart_;
    int arrive_;
    int speed_;
    double cost_;
    std::array<double, kNumLandUse> preference_;
    int history_count_;
    ParticipantProfile profile_;
};

enum class LogBase { natural, base10 };

struct TaskSpec {
    std::shared_ptr<const GridMap> grid;
    int horizon = 0;  // timesteps run 0..horizon inclusive
    int interval_minutes = 1;
    double budget = 0.0;
    double alpha = 0.5;
    double beta = 0.5;
    double eta = 1.0;
    double lambda_ = 0.5;
    double mu = 0.2;
    double overlap_threshold = 0.01;
    double tie_epsilon = 1e-6;
    int max_negotiation_rounds = 3;
    int max_pair_attempts = 20;
    int max_refine_iters = 3;
    LogBase log_base = LogBase::natural;

    // Throws SenseError("bad_task_spec") when any range constraint fails.
    void validate() const;
};

TaskSpec make_task_spec(std::shared_ptr<const GridMap> grid, int horizon,
                        int interval_minutes, double budget);

// A full problem instance: the task (grid + scalars) and the candidate pool.
struct Instance {
    TaskSpec spec;
    std::vector<Participant> participants;
};

struct DisturbanceEvent {
    enum class Kind { cell_blocked, priority_region };
    Kind kind = Kind::cell_blocked;
    Coord cell;
    int t_from = 0;
    int t_to = 0;
    double bonus = 0.0;  // priority_region only
};

void validate_event(const DisturbanceEvent& event, const TaskSpec& spec);

class CoverageTensor {
public:
    CoverageTensor(int width, int height, int time_slots);
    // Time axis sized horizon+1 so indices 0..horizon are addressable.
    static CoverageTensor for_task(const TaskSpec& spec);

    int width() const { return width_; }
    int height() const { return height_; }
    int time_slots() const { return time_slots_; }
    std::size_t index(int x, int y, int t) const {
        return (static_cast<std::size_t>(x) * height_ + y) * time_slots_ + t;
    }
    double at(int x, int y, int t) const { return counts_[index(x, y, t)]; }
    void add_point(int x, int y, int t, double amount = 1.0);
    void add_route(const Route& route);
    void remove_route(const Route& route);
    void add(const CoverageTensor& other);
    const std::vector<double>& counts() const { return counts_; }

private:
    int width_;
    int height_;
    int time_slots_;
    std::vector<double> counts_;
};

struct ValidationResult {
    bool ok = true;
    std::vector<std::string> violations;  // at most one entry per category
};

// Categories reported: out_of_bounds, timestep_not_unit, speed_exceeded,
// origin_mismatch, destination_mismatch, arrival_exceeded.
ValidationResult validate_route(const Route& route, const Participant& participant,
                                const TaskSpec& spec);

}  // namespace senseforge
