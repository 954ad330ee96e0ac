#include "senseforge/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "senseforge/detail/coverage_stats.hpp"
#include "senseforge/metrics.hpp"
#include "senseforge/rng.hpp"

namespace senseforge::harness {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::string join_keys(const std::vector<std::string>& keys) {
    std::string out;
    for (const auto& k : keys) {
        if (!out.empty()) out += ", ";
        out += k;
    }
    return out;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trimmed(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool parse_double(const std::string& field, double& out) {
    const std::string t = trimmed(field);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && std::isfinite(out);
}

bool parse_int(const std::string& field, int& out) {
    double v = 0.0;
    if (!parse_double(field, v)) return false;
    if (v != std::floor(v) || v < -2e9 || v > 2e9) return false;
    out = static_cast<int>(v);
    return true;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct ArchetypeDef {
    const char* name;
    int dominant;  // -1 marks the uniform profile
    const char* description;
    std::vector<std::string> age_prior;
    std::vector<std::string> econ_prior;  // empty matches any status
};

const std::vector<ArchetypeDef>& archetype_defs() {
    static const std::vector<ArchetypeDef> defs = {
        {"eco_enthusiast", 0, "Prefers green spaces and quiet neighborhoods",
         {"middle_aged", "senior"},
         {"middle", "high"}},
        {"city_dweller", 4, "Favors dense residential and commercial areas",
         {"young"},
         {"middle", "high"}},
        {"industrial_worker", 1, "Frequently operates near industrial zones",
         {"middle_aged"},
         {"poor", "low"}},
        {"community_helper", 3, "Prefers regions near hospitals, schools, and community facilities",
         {"middle_aged", "senior"},
         {"middle"}},
        {"explorer", -1, "Exhibits balanced preferences across different regions",
         {"young"},
         {}},
    };
    return defs;
}

const std::vector<std::string>& hobby_pool() {
    static const std::vector<std::string> pool = {
        "running",  "cycling", "photography", "gardening",    "cooking",       "reading",
        "hiking",   "gaming",  "painting",    "volunteering", "bird watching", "chess"};
    return pool;
}

std::string age_band(int age) {
    if (age < 35) return "young";
    if (age < 60) return "middle_aged";
    return "senior";
}

std::string padded_id(const char* prefix, int value, int min_width) {
    std::ostringstream out;
    out << prefix;
    out.width(min_width);
    out.fill('0');
    out << value;
    return out.str();
}

void check_config(const InstanceConfig& config) {
    const bool bad = config.width < 1 || config.height < 1 || config.n_participants < 0 ||
                     config.interval_minutes < 1 || config.min_speed < 1 ||
                     config.max_speed < config.min_speed || config.min_cost <= 0.0 ||
                     config.max_cost < config.min_cost;
    if (bad)
        throw SenseError("degenerate_config",
                         "config " + config.name + " has out-of-range fields");
    if (config.horizon_minutes < config.interval_minutes)
        throw SenseError("degenerate_config",
                         "config " + config.name +
                             ": horizon shorter than one interval leaves no feasible window");
}

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"tdrive_small", "tdrive_medium",
                                                   "tdrive_large", "grab_small",
                                                   "grab_medium",  "grab_large"};
    return names;
}

std::optional<InstanceConfig> find_preset(const std::string& name) {
    static const std::vector<InstanceConfig> presets = {
        {"tdrive_small", 8, 8, 20, 40.0, 120, 15, true},
        {"tdrive_medium", 16, 16, 40, 60.0, 240, 15, true},
        {"tdrive_large", 32, 32, 60, 100.0, 360, 15, true},
        {"grab_small", 8, 4, 15, 40.0, 40, 5, false},
        {"grab_medium", 16, 8, 30, 60.0, 80, 5, false},
        {"grab_large", 32, 16, 45, 100.0, 160, 5, false},
    };
    for (const auto& p : presets)
        if (p.name == name) return p;
    return std::nullopt;
}

ProfileSample sample_profile(std::uint64_t seed) {
    Rng rng(seed);
    ProfileSample out;

    const double g = rng.uniform_real();
    out.profile.gender = g < 0.48 ? "male" : g < 0.96 ? "female" : "non-binary";
    out.profile.age = static_cast<int>(rng.uniform_int(18, 75));
    out.profile.age_group = age_band(out.profile.age);

    const double e = rng.uniform_real();
    if (e < 0.10)
        out.profile.economic_status = "poor";
    else if (e < 0.35)
        out.profile.economic_status = "low";
    else if (e < 0.75)
        out.profile.economic_status = "middle";
    else if (e < 0.90)
        out.profile.economic_status = "high";
    else
        out.profile.economic_status = "wealthy";

    const int n_hobbies = static_cast<int>(rng.uniform_int(1, 3));
    std::vector<std::string> pool = hobby_pool();
    rng.shuffle(pool);
    out.profile.hobbies.assign(pool.begin(), pool.begin() + n_hobbies);

    // Archetype odds grow with demographic-prior compatibility.
    const auto& defs = archetype_defs();
    std::vector<double> weights(defs.size());
    double total = 0.0;
    for (std::size_t i = 0; i < defs.size(); ++i) {
        const auto& d = defs[i];
        double w = 1.0;
        if (std::find(d.age_prior.begin(), d.age_prior.end(), out.profile.age_group) !=
            d.age_prior.end())
            w += 1.0;
        if (d.econ_prior.empty() ||
            std::find(d.econ_prior.begin(), d.econ_prior.end(), out.profile.economic_status) !=
                d.econ_prior.end())
            w += 1.0;
        weights[i] = w;
        total += w;
    }
    double r = rng.uniform_real() * total;
    std::size_t pick = defs.size() - 1;
    for (std::size_t i = 0; i < defs.size(); ++i) {
        if (r < weights[i]) {
            pick = i;
            break;
        }
        r -= weights[i];
    }
    const auto& chosen = defs[pick];
    out.profile.archetype = chosen.name;
    out.profile.description = chosen.description;

    std::array<double, kNumLandUse> base{};
    if (chosen.dominant < 0) {
        base.fill(1.0 / kNumLandUse);
    } else {
        base.fill(0.1);
        base[static_cast<std::size_t>(chosen.dominant)] = 0.5;
    }
    const auto noise = rng.dirichlet(kNumLandUse, 1.0);
    for (int i = 0; i < kNumLandUse; ++i)
        out.preference[static_cast<std::size_t>(i)] =
            (base[static_cast<std::size_t>(i)] + 0.1 * noise[static_cast<std::size_t>(i)]) / 1.1;
    return out;
}

Instance generate_instance(const InstanceConfig& config, std::uint64_t seed) {
    check_config(config);
    const int horizon = config.horizon_minutes / config.interval_minutes;

    Rng grid_rng(derive_seed(seed, 1));
    std::vector<CellAttributes> cells(static_cast<std::size_t>(config.width) * config.height);
    for (auto& cell : cells) {
        const auto shares = grid_rng.dirichlet(kNumLandUse, 1.0);
        std::copy(shares.begin(), shares.end(), cell.landuse.begin());
        cell.crime_count = config.with_crime ? static_cast<int>(grid_rng.uniform_int(0, 50)) : 0;
    }
    auto grid = std::make_shared<GridMap>(config.width, config.height, std::move(cells));

    Instance instance;
    instance.spec = make_task_spec(grid, horizon, config.interval_minutes, config.budget);

    Rng rng(derive_seed(seed, 2));
    instance.participants.reserve(static_cast<std::size_t>(config.n_participants));
    for (int i = 0; i < config.n_participants; ++i) {
        const ProfileSample ps = sample_profile(derive_seed(seed, 1000 + static_cast<std::uint64_t>(i)));
        const int speed = static_cast<int>(rng.uniform_int(config.min_speed, config.max_speed));
        const double cost = rng.uniform_real(config.min_cost, config.max_cost);
        const int depart = static_cast<int>(rng.uniform_int(0, horizon - 1));
        const int window = static_cast<int>(rng.uniform_int(1, horizon - depart));
        const Coord origin{static_cast<int>(rng.uniform_int(0, config.width - 1)),
                           static_cast<int>(rng.uniform_int(0, config.height - 1))};
        Coord destination = origin;  // fallback keeps the tuple feasible
        for (int attempt = 0; attempt < 200; ++attempt) {
            const Coord cand{static_cast<int>(rng.uniform_int(0, config.width - 1)),
                             static_cast<int>(rng.uniform_int(0, config.height - 1))};
            if (manhattan(origin, cand) <= speed * window) {
                destination = cand;
                break;
            }
        }
        instance.participants.emplace_back(padded_id("p", i + 1, 3), origin, destination, depart,
                                           depart + window, speed, cost, ps.preference, 0,
                                           ps.profile);
    }
    return instance;
}

GridMap load_attributes(const std::string& path, int width, int height) {
    std::ifstream in(path);
    if (!in) throw SenseError("io_error", "cannot open " + path);
    if (width < 1 || height < 1)
        throw SenseError("bad_grid", "grid dimensions must be positive");

    static const std::string kHeader =
        "x,y,lu_vegetation,lu_industrial,lu_institutional,lu_medical,lu_residential,"
        "lu_commercial,crime_count";
    std::string line;
    if (!std::getline(in, line))
        throw SenseError("bad_grid", path + ":1: empty file, expected header " + kHeader);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader)
        throw SenseError("bad_grid", path + ":1: header must be exactly " + kHeader);

    std::vector<CellAttributes> cells(static_cast<std::size_t>(width) * height);
    std::vector<bool> seen(cells.size(), false);

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trimmed(line).empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no) + ": ";
        const auto fields = split_fields(line);
        if (fields.size() != 9)
            throw SenseError("bad_grid", where + "expected 9 fields, got " +
                                             std::to_string(fields.size()));
        int x = 0;
        int y = 0;
        if (!parse_int(fields[0], x) || !parse_int(fields[1], y))
            throw SenseError("bad_grid", where + "x and y must be integers");
        if (x < 0 || x >= width || y < 0 || y >= height)
            throw SenseError("bad_grid", where + "cell (" + std::to_string(x) + ", " +
                                             std::to_string(y) + ") is outside the grid");
        const std::size_t idx = static_cast<std::size_t>(x) * height + y;
        if (seen[idx])
            throw SenseError("duplicate_cell", where + "cell (" + std::to_string(x) + ", " +
                                                   std::to_string(y) + ") appears twice");
        seen[idx] = true;

        CellAttributes cell;
        double sum = 0.0;
        for (int k = 0; k < kNumLandUse; ++k) {
            double v = 0.0;
            if (!parse_double(fields[static_cast<std::size_t>(2 + k)], v) || v < 0.0)
                throw SenseError("bad_grid",
                                 where + "land-use shares must be non-negative numbers");
            cell.landuse[static_cast<std::size_t>(k)] = v;
            sum += v;
        }
        if (std::abs(sum - 1.0) > 0.05)
            throw SenseError("bad_grid", where + "land-use shares sum to " +
                                             std::to_string(sum) + ", outside 1 +- 0.05");
        if (std::abs(sum - 1.0) > 1e-9) {
            std::cerr << "warning: " << where << "land-use shares sum to " << sum
                      << ", renormalized\n";
            for (auto& v : cell.landuse) v /= sum;
        }
        int crime = 0;
        if (!parse_int(fields[8], crime) || crime < 0)
            throw SenseError("bad_grid", where + "crime_count must be a non-negative integer");
        cell.crime_count = crime < 10 ? 0 : crime;  // sparse counts treated as unreliable
        cells[idx] = cell;
    }
    return GridMap(width, height, std::move(cells));
}

TrajectoryLoad load_trajectories(const std::string& path, const GridMap& grid, int horizon,
                                 int interval_minutes, int speed_cap) {
    std::ifstream in(path);
    if (!in) throw SenseError("io_error", "cannot open " + path);
    if (horizon < 1 || interval_minutes < 1 || speed_cap < 1)
        throw SenseError("bad_trajectory", "horizon, interval and speed cap must be positive");

    static const std::string kHeader = "traj_id,x,y,timestamp";
    std::string line;
    if (!std::getline(in, line))
        throw SenseError("bad_trajectory", path + ":1: empty file, expected header " + kHeader);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader)
        throw SenseError("bad_trajectory", path + ":1: header must be exactly " + kHeader);

    struct Span {
        double t_first = 0.0;
        double t_last = 0.0;
        Coord first;
        Coord last;
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, Span> spans;

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trimmed(line).empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no) + ": ";
        const auto fields = split_fields(line);
        if (fields.size() != 4)
            throw SenseError("bad_trajectory", where + "expected 4 fields, got " +
                                                   std::to_string(fields.size()));
        const std::string id = trimmed(fields[0]);
        if (id.empty()) throw SenseError("bad_trajectory", where + "traj_id is empty");
        double x = 0.0;
        double y = 0.0;
        if (!parse_double(fields[1], x) || !parse_double(fields[2], y))
            throw SenseError("bad_trajectory", where + "x and y must be numbers");
        double ts = 0.0;
        if (!parse_double(fields[3], ts))
            throw SenseError("bad_trajectory", where + "unparsable timestamp '" +
                                                   trimmed(fields[3]) + "'");
        const Coord cell{
            std::clamp(static_cast<int>(std::floor(x)), 0, grid.width() - 1),
            std::clamp(static_cast<int>(std::floor(y)), 0, grid.height() - 1)};
        auto [it, inserted] = spans.try_emplace(id, Span{ts, ts, cell, cell});
        if (inserted) {
            order.push_back(id);
            continue;
        }
        auto& span = it->second;
        if (ts < span.t_first) {
            span.t_first = ts;
            span.first = cell;
        }
        if (ts >= span.t_last) {
            span.t_last = ts;
            span.last = cell;
        }
    }

    TrajectoryLoad out;
    std::array<double, kNumLandUse> uniform{};
    uniform.fill(1.0 / kNumLandUse);
    ParticipantProfile profile;
    profile.archetype = "explorer";
    profile.description = "Exhibits balanced preferences across different regions";

    for (const auto& id : order) {
        const Span& span = spans.at(id);
        const int depart =
            static_cast<int>(std::floor(span.t_first / interval_minutes));
        int arrive = static_cast<int>(std::ceil(span.t_last / interval_minutes));
        if (arrive == depart) arrive = depart + 1;  // grant one step to move
        const int window = arrive - depart;
        const int dist = manhattan(span.first, span.last);
        if (depart < 0 || arrive > horizon || dist > speed_cap * window) {
            ++out.dropped;
            continue;
        }
        const int speed = std::clamp((dist + window - 1) / window, 1, speed_cap);
        const double cost = 1.0 + static_cast<double>(fnv1a(id) % 401) / 100.0;
        out.participants.emplace_back(id, span.first, span.last, depart, arrive, speed, cost,
                                      uniform, 0, profile);
    }
    return out;
}

const std::vector<std::string>& method_keys() {
    static const std::vector<std::string> keys = [] {
        auto v = baselines::planner_keys();
        v.push_back("mapus");
        return v;
    }();
    return keys;
}

bool is_method(const std::string& key) {
    const auto& keys = method_keys();
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

baselines::PlanResult run_method(const std::string& key, const Instance& instance,
                                 std::uint64_t seed, const policy::PolicySet* policies) {
    if (key == "mapus") {
        const policy::PolicySet pol = policies ? *policies : policy::heuristic_policies();
        return pipeline::run_pipeline(instance, pol).plan;
    }
    if (!baselines::is_planner(key))
        throw SenseError("unknown_method",
                         "unknown method '" + key + "'; registered: " + join_keys(method_keys()));
    return baselines::run_planner(key, instance, seed);
}

namespace {

void fill_aggregates(ExperimentReport& report) {
    struct Acc {
        int n = 0;
        int failures = 0;
        std::vector<double> coverage;
        std::vector<double> pss;
        double runtime = 0.0;
    };
    std::vector<std::pair<std::pair<std::string, std::string>, Acc>> groups;
    auto slot = [&](const std::string& config, const std::string& method) -> Acc& {
        for (auto& g : groups)
            if (g.first.first == config && g.first.second == method) return g.second;
        groups.push_back({{config, method}, {}});
        return groups.back().second;
    };
    for (const auto& row : report.rows) {
        Acc& acc = slot(row.config, row.method);
        ++acc.n;
        acc.runtime += row.runtime_ms;
        if (row.failed) {
            ++acc.failures;
            continue;
        }
        acc.coverage.push_back(row.coverage);
        acc.pss.push_back(row.pss);
    }
    auto mean_of = [](const std::vector<double>& v) {
        if (v.empty()) return kNan;
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    auto var_of = [&](const std::vector<double>& v) {
        if (v.empty()) return kNan;
        const double m = mean_of(v);
        double s = 0.0;
        for (const double x : v) s += (x - m) * (x - m);
        return s / static_cast<double>(v.size());
    };
    for (const auto& [key, acc] : groups) {
        Aggregate agg;
        agg.config = key.first;
        agg.method = key.second;
        agg.n = acc.n;
        agg.failures = acc.failures;
        agg.mean_coverage = mean_of(acc.coverage);
        agg.var_coverage = var_of(acc.coverage);
        agg.mean_pss = mean_of(acc.pss);
        agg.var_pss = var_of(acc.pss);
        agg.mean_runtime_ms = acc.n > 0 ? acc.runtime / acc.n : kNan;
        report.aggregates.push_back(agg);
    }
}

}  // namespace

ExperimentReport run_comparison(const std::vector<InstanceConfig>& configs,
                                const std::vector<std::string>& methods, int n_instances,
                                std::uint64_t base_seed, int jobs,
                                const policy::PolicySet* pipeline_policies) {
    for (const auto& m : methods)
        if (!is_method(m))
            throw SenseError("unknown_method", "unknown method '" + m +
                                                   "'; registered: " + join_keys(method_keys()));
    ExperimentReport report;
    if (configs.empty() || methods.empty() || n_instances <= 0) return report;

    std::vector<std::vector<Instance>> instances(configs.size());
    std::vector<std::vector<std::uint64_t>> seeds(configs.size());
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        instances[ci].reserve(static_cast<std::size_t>(n_instances));
        for (int i = 0; i < n_instances; ++i) {
            const std::uint64_t s =
                derive_seed(base_seed, ci * 1000 + static_cast<std::uint64_t>(i));
            seeds[ci].push_back(s);
            instances[ci].push_back(generate_instance(configs[ci], s));
        }
    }

    const std::size_t n_cells =
        configs.size() * static_cast<std::size_t>(n_instances) * methods.size();
    report.rows.resize(n_cells);

    auto run_cell = [&](std::size_t k) {
        const std::size_t mi = k % methods.size();
        const std::size_t ii = (k / methods.size()) % static_cast<std::size_t>(n_instances);
        const std::size_t ci = k / methods.size() / static_cast<std::size_t>(n_instances);
        ComparisonRow& row = report.rows[k];
        row.config = configs[ci].name;
        row.method = methods[mi];
        row.seed = seeds[ci][ii];
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const auto plan = run_method(methods[mi], instances[ci][ii],
                                         derive_seed(row.seed, 500 + mi), pipeline_policies);
            row.runtime_ms = ms_since(t0);
            if (plan.report) {
                row.coverage = plan.report->phi;
                row.pss = plan.mean_pss;
            } else {
                row.failed = true;
                row.coverage = kNan;
                row.pss = kNan;
            }
        } catch (const std::exception&) {
            row.runtime_ms = ms_since(t0);
            row.failed = true;
            row.coverage = kNan;
            row.pss = kNan;
        }
    };

    const int n_jobs = std::max(1, std::min<int>(jobs, static_cast<int>(n_cells)));
    if (n_jobs == 1) {
        for (std::size_t k = 0; k < n_cells; ++k) run_cell(k);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t k = next.fetch_add(1);
                if (k >= n_cells) return;
                run_cell(k);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_jobs));
        for (int j = 0; j < n_jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    fill_aggregates(report);
    return report;
}

namespace {

std::vector<const Participant*> accepted_sorted(const Instance& instance) {
    std::vector<const Participant*> out;
    for (const auto& p : instance.participants)
        if (pipeline::accept_task(p, instance.spec)) out.push_back(&p);
    std::sort(out.begin(), out.end(),
              [](const Participant* a, const Participant* b) { return a->id() < b->id(); });
    return out;
}

struct StagedRun {
    baselines::PlanResult plan;
    double stage_ms = 0.0;
};

// Selection + negotiation on top of pre-generated routes; mirrors the full
// pipeline so variants differ only in the knobs passed here.
StagedRun staged_run(const Instance& instance, const std::vector<const Participant*>& accepted,
                     const std::map<std::string, Route>& routes, const TaskSpec& spec,
                     const policy::PolicySet& policies, int max_pairs) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<const Participant*> candidates;
    for (const Participant* p : accepted)
        if (routes.count(p->id())) candidates.push_back(p);
    const auto selection =
        pipeline::select_participants(candidates, routes, {}, spec, policies);

    pipeline::NegotiationState state;
    std::vector<const Participant*> selected_ptrs;
    for (const auto& id : selection.selected) {
        state.routes[id] = routes.at(id);
        for (const Participant* p : candidates)
            if (p->id() == id) {
                selected_ptrs.push_back(p);
                break;
            }
    }
    state = pipeline::negotiate(std::move(state), selected_ptrs, spec, *spec.grid, policies,
                                max_pairs);
    StagedRun out;
    out.plan = baselines::finish_plan(selection.selected, state.routes, instance);
    out.stage_ms = ms_since(t0);
    return out;
}

}  // namespace

ExperimentReport run_ablation(const InstanceConfig& config, int n_instances,
                              std::uint64_t base_seed) {
    ExperimentReport report;
    const auto policies = policy::heuristic_policies();
    for (int i = 0; i < n_instances; ++i) {
        const std::uint64_t seed = derive_seed(base_seed, static_cast<std::uint64_t>(i));
        const Instance instance = generate_instance(config, seed);
        const auto accepted = accepted_sorted(instance);

        auto t0 = std::chrono::steady_clock::now();
        std::map<std::string, Route> refined_routes;
        for (const Participant* p : accepted)
            refined_routes[p->id()] =
                pipeline::generate_route(*p, instance.spec, *instance.spec.grid, policies);
        const double refined_ms = ms_since(t0);

        t0 = std::chrono::steady_clock::now();
        const auto greedy_routes = baselines::tvpg_routes(instance);
        const double greedy_ms = ms_since(t0);

        struct Variant {
            const char* name;
            const std::map<std::string, Route>* routes;
            double route_ms;
            bool coverage_only;
            int max_pairs;
        };
        const Variant variants[] = {
            {"full", &refined_routes, refined_ms, false, -1},
            {"wo_prg", &greedy_routes, greedy_ms, false, -1},
            {"wo_fps", &refined_routes, refined_ms, true, -1},
            {"wo_nrr", &refined_routes, refined_ms, false, 0},
        };
        for (const auto& v : variants) {
            TaskSpec spec = instance.spec;
            if (v.coverage_only) {
                spec.beta = 1.0;      // pure coverage gain
                spec.tie_epsilon = 0.0;  // exact ties only
            }
            ComparisonRow row;
            row.config = config.name;
            row.method = v.name;
            row.seed = seed;
            try {
                const auto run =
                    staged_run(instance, accepted, *v.routes, spec, policies, v.max_pairs);
                row.runtime_ms = v.route_ms + run.stage_ms;
                if (run.plan.report) {
                    row.coverage = run.plan.report->phi;
                    row.pss = run.plan.mean_pss;
                } else {
                    row.failed = true;
                    row.coverage = kNan;
                    row.pss = kNan;
                }
            } catch (const std::exception&) {
                row.failed = true;
                row.coverage = kNan;
                row.pss = kNan;
            }
            report.rows.push_back(std::move(row));
        }
    }
    fill_aggregates(report);
    return report;
}

FairnessReport run_fairness(std::uint64_t seed, int n_workers, int n_tasks, int k_per_task) {
    if (n_workers < 1 || n_tasks < 0 || k_per_task < 1)
        throw SenseError("degenerate_config", "fairness study sizes must be positive");
    if (k_per_task > n_workers)
        throw SenseError("degenerate_config", "k_per_task exceeds the worker pool");

    const int width = 16;
    const int height = 16;
    const int horizon = 16;

    // The map is striped into horizontal districts, one dominant land use each,
    // so a short route has a clear semantic identity while a full crossing
    // mixes every category. That split is what makes selection strategies
    // differ: coverage loves the crossings, satisfaction lives in the stripes.
    const auto district_of = [&](int y) { return y * kNumLandUse / height; };
    const auto district_rows = [&](int d) {
        const int lo = (d * height + kNumLandUse - 1) / kNumLandUse;
        const int hi = ((d + 1) * height + kNumLandUse - 1) / kNumLandUse - 1;
        return std::pair<int, int>{lo, hi};
    };

    Rng grid_rng(derive_seed(seed, 1));
    std::vector<CellAttributes> cells(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            auto& cell = cells[static_cast<std::size_t>(y) * width + x];
            const auto noise = grid_rng.dirichlet(kNumLandUse, 1.0);
            for (int c = 0; c < kNumLandUse; ++c)
                cell.landuse[static_cast<std::size_t>(c)] =
                    0.25 * noise[static_cast<std::size_t>(c)] +
                    (c == district_of(y) ? 0.75 : 0.0);
            cell.crime_count = static_cast<int>(grid_rng.uniform_int(0, 50));
        }
    auto grid = std::make_shared<GridMap>(width, height, std::move(cells));
    TaskSpec spec = make_task_spec(grid, horizon, 15, static_cast<double>(k_per_task));

    struct Worker {
        std::string id;
        int speed;
        ProfileSample ps;
        bool crosser;
        int window;
        int home;
    };
    Rng world_rng(derive_seed(seed, 2));
    const int id_width = std::max<int>(2, static_cast<int>(std::to_string(n_workers).size()));
    std::vector<Worker> workers;
    workers.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) {
        Worker worker{padded_id("w", w + 1, id_width), 1,
                      sample_profile(derive_seed(seed, 100 + static_cast<std::uint64_t>(w))),
                      w % 3 == 0, 0, 0};
        // Sharpened tastes keep the cosine term decisive for both groups.
        auto& pref = worker.ps.preference;
        const int fav = static_cast<int>(std::max_element(pref.begin(), pref.end()) - pref.begin());
        for (int c = 0; c < kNumLandUse; ++c)
            pref[static_cast<std::size_t>(c)] =
                0.25 * pref[static_cast<std::size_t>(c)] + (c == fav ? 0.75 : 0.0);
        worker.home = fav;
        worker.window = worker.crosser
                            ? horizon
                            : static_cast<int>(world_rng.uniform_int(4, std::min(6, horizon)));
        workers.push_back(std::move(worker));
    }

    const std::vector<std::string> strategies = {"ur", "ls", "cg", "fps"};
    std::vector<std::vector<long>> counts(strategies.size(),
                                          std::vector<long>(static_cast<std::size_t>(n_workers), 0));
    std::vector<double> coverage_sum(strategies.size(), 0.0);
    std::vector<double> pss_sum(strategies.size(), 0.0);

    Rng ur_rng(derive_seed(seed, 3));
    const auto policies = policy::heuristic_policies();
    const Route no_route;

    for (int task = 0; task < n_tasks; ++task) {
        Rng task_rng(derive_seed(seed, 10000 + static_cast<std::uint64_t>(task)));
        std::vector<Participant> participants;
        participants.reserve(workers.size());
        for (const auto& w : workers) {
            int depart;
            Coord origin;
            Coord destination;
            if (w.crosser) {
                // Commuters cross the whole map top to bottom on a tight
                // window: lots of fresh cells, no slack to chase preferences.
                depart = 0;
                const int x0 = static_cast<int>(task_rng.uniform_int(0, width - 1));
                const int x1 = std::clamp(
                    x0 + static_cast<int>(task_rng.uniform_int(0, 2)) - 1, 0, width - 1);
                origin = {x0, 0};
                destination = {x1, height - 1};
            } else {
                // Locals run short errands inside the district that matches
                // their taste, so their routes score high on satisfaction but
                // add little coverage.
                depart = static_cast<int>(task_rng.uniform_int(0, horizon - w.window));
                const auto [row_lo, row_hi] = district_rows(w.home);
                origin = {static_cast<int>(task_rng.uniform_int(0, width - 1)),
                          static_cast<int>(task_rng.uniform_int(row_lo, row_hi))};
                destination = origin;
                for (int attempt = 0; attempt < 200; ++attempt) {
                    const Coord cand{static_cast<int>(task_rng.uniform_int(0, width - 1)),
                                     static_cast<int>(task_rng.uniform_int(row_lo, row_hi))};
                    if (manhattan(origin, cand) <= w.speed * w.window) {
                        destination = cand;
                        break;
                    }
                }
            }
            participants.emplace_back(w.id, origin, destination, depart, depart + w.window,
                                      w.speed, 1.0, w.ps.preference, 0, w.ps.profile);
        }

        std::map<std::string, Route> routes;
        std::vector<const Participant*> ptrs;
        for (const auto& p : participants) {
            routes[p.id()] = pipeline::generate_route(p, spec, *grid, policies);
            ptrs.push_back(&p);
        }

        for (std::size_t si = 0; si < strategies.size(); ++si) {
            std::vector<int> picked;
            if (strategies[si] == "ur") {
                std::vector<int> order(static_cast<std::size_t>(n_workers));
                std::iota(order.begin(), order.end(), 0);
                ur_rng.shuffle(order);
                picked.assign(order.begin(), order.begin() + k_per_task);
            } else if (strategies[si] == "ls") {
                std::vector<int> order(static_cast<std::size_t>(n_workers));
                std::iota(order.begin(), order.end(), 0);
                std::sort(order.begin(), order.end(), [&](int a, int b) {
                    const long ca = counts[si][static_cast<std::size_t>(a)];
                    const long cb = counts[si][static_cast<std::size_t>(b)];
                    if (ca != cb) return ca < cb;
                    return workers[static_cast<std::size_t>(a)].id <
                           workers[static_cast<std::size_t>(b)].id;
                });
                picked.assign(order.begin(), order.begin() + k_per_task);
            } else if (strategies[si] == "cg") {
                // Pure marginal-coverage greedy; ties go to the lowest id.
                detail::CoverageStats stats = detail::CoverageStats::for_task(spec);
                std::vector<bool> taken(static_cast<std::size_t>(n_workers), false);
                for (int pick = 0; pick < k_per_task; ++pick) {
                    int best = -1;
                    double best_phi = -std::numeric_limits<double>::infinity();
                    for (int w = 0; w < n_workers; ++w) {
                        if (taken[static_cast<std::size_t>(w)]) continue;
                        const auto parts =
                            stats.preview_swap(no_route, routes.at(workers[static_cast<std::size_t>(w)].id));
                        const double phi = detail::phi_from(parts, spec.alpha, spec.log_base);
                        if (phi > best_phi) {
                            best_phi = phi;
                            best = w;
                        }
                    }
                    taken[static_cast<std::size_t>(best)] = true;
                    stats.add_route(routes.at(workers[static_cast<std::size_t>(best)].id));
                    picked.push_back(best);
                }
            } else {
                std::map<std::string, int> history;
                for (int w = 0; w < n_workers; ++w)
                    history[workers[static_cast<std::size_t>(w)].id] =
                        static_cast<int>(counts[si][static_cast<std::size_t>(w)]);
                const auto selection =
                    pipeline::select_participants(ptrs, routes, history, spec, policies);
                for (const auto& id : selection.selected)
                    for (int w = 0; w < n_workers; ++w)
                        if (workers[static_cast<std::size_t>(w)].id == id) {
                            picked.push_back(w);
                            break;
                        }
            }

            detail::CoverageStats stats = detail::CoverageStats::for_task(spec);
            double pss = 0.0;
            for (const int w : picked) {
                counts[si][static_cast<std::size_t>(w)] += 1;
                const auto& route = routes.at(workers[static_cast<std::size_t>(w)].id);
                stats.add_route(route);
                pss += metrics::path_satisfaction(route, participants[static_cast<std::size_t>(w)],
                                                  *grid, spec.mu);
            }
            coverage_sum[si] += stats.phi(spec.alpha, spec.log_base);
            if (!picked.empty()) pss_sum[si] += pss / static_cast<double>(picked.size());
        }
    }

    FairnessReport report;
    for (std::size_t si = 0; si < strategies.size(); ++si) {
        for (int w = 0; w < n_workers; ++w)
            report.rows.push_back({strategies[si], workers[static_cast<std::size_t>(w)].id,
                                   static_cast<int>(counts[si][static_cast<std::size_t>(w)])});
        const auto fs = metrics::fairness_stats(counts[si]);
        FairnessStrategyStats stats;
        stats.strategy = strategies[si];
        stats.count_mean = fs.mean;
        stats.count_variance = fs.variance;
        stats.count_gini = fs.gini;
        stats.count_cdf = fs.cdf;
        stats.mean_coverage = n_tasks > 0 ? coverage_sum[si] / n_tasks : 0.0;
        stats.mean_pss = n_tasks > 0 ? pss_sum[si] / n_tasks : 0.0;
        report.stats.push_back(std::move(stats));
    }
    return report;
}

NegotiationEffectReport run_negotiation_effect(const InstanceConfig& config, int n_instances,
                                               std::uint64_t base_seed) {
    NegotiationEffectReport report;
    if (n_instances <= 0) return report;
    const auto policies = policy::heuristic_policies();
    auto add = [](SnapshotMeans& m, const pipeline::Snapshot& s) {
        m.overlap_pct += s.overlap_pct;
        m.coverage += s.coverage;
        m.entropy += s.entropy;
        m.count += static_cast<double>(s.count);
        m.mean_pss += s.mean_pss;
    };
    for (int i = 0; i < n_instances; ++i) {
        const Instance instance =
            generate_instance(config, derive_seed(base_seed, static_cast<std::uint64_t>(i)));
        const auto result = pipeline::run_pipeline(instance, policies);
        report.rows.push_back({i, "before", result.before});
        report.rows.push_back({i, "after", result.after});
        add(report.mean_before, result.before);
        add(report.mean_after, result.after);
    }
    auto scale = [&](SnapshotMeans& m) {
        m.overlap_pct /= n_instances;
        m.coverage /= n_instances;
        m.entropy /= n_instances;
        m.count /= n_instances;
        m.mean_pss /= n_instances;
    };
    scale(report.mean_before);
    scale(report.mean_after);
    return report;
}

}  // namespace senseforge::harness
