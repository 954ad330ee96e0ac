#include "senseforge/json_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "senseforge/detail/coverage_stats.hpp"

namespace senseforge::io {

using nlohmann::json;

namespace {

json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SenseError("io_error", "cannot open " + path);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw SenseError("bad_json", path + ": malformed JSON");
    return doc;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw SenseError("io_error", "cannot open " + path + " for writing");
    out << content;
    if (!out) throw SenseError("io_error", "short write to " + path);
}

const json& require(const json& doc, const char* key, const std::string& what) {
    const auto it = doc.find(key);
    if (it == doc.end())
        throw SenseError("bad_format", what + ": missing field '" + key + "'");
    return *it;
}

void check_envelope(const json& doc, const char* kind, const std::string& what) {
    if (!doc.is_object()) throw SenseError("bad_format", what + ": expected an object");
    if (require(doc, "format", what) != kFormatTag)
        throw SenseError("bad_format", what + ": format must be '" + kFormatTag + "'");
    if (require(doc, "kind", what) != kind)
        throw SenseError("bad_format", what + ": kind must be '" + std::string(kind) + "'");
}

json coord_to_json(Coord c) { return json::array({c.x, c.y}); }

Coord coord_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        throw SenseError("bad_format", what + ": coordinates must be [x, y] integers");
    return {j[0].get<int>(), j[1].get<int>()};
}

json route_to_json(const Route& route) {
    json points = json::array();
    for (const auto& p : route.points) points.push_back(json::array({p.x, p.y, p.t}));
    return json{{"points", std::move(points)}};
}

Route route_from_json(const json& j, const std::string& what) {
    Route route;
    const auto& points = require(j, "points", what);
    if (!points.is_array())
        throw SenseError("bad_format", what + ": 'points' must be an array");
    for (const auto& p : points) {
        if (!p.is_array() || p.size() != 3)
            throw SenseError("bad_format", what + ": route points must be [x, y, t]");
        route.points.push_back({p[0].get<int>(), p[1].get<int>(), p[2].get<int>()});
    }
    return route;
}

std::array<double, kNumLandUse> array6_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != kNumLandUse)
        throw SenseError("bad_format", what + ": expected " + std::to_string(kNumLandUse) +
                                           " numbers");
    std::array<double, kNumLandUse> out{};
    for (int i = 0; i < kNumLandUse; ++i) out[static_cast<std::size_t>(i)] = j[i].get<double>();
    return out;
}

json grid_to_json(const GridMap& grid) {
    json cells = json::array();
    for (const auto& cell : grid.cells()) {
        json landuse = json::array();
        for (const double v : cell.landuse) landuse.push_back(v);
        cells.push_back(json{{"landuse", std::move(landuse)}, {"crime", cell.crime_count}});
    }
    return json{{"width", grid.width()}, {"height", grid.height()}, {"cells", std::move(cells)}};
}

std::shared_ptr<GridMap> grid_from_json(const json& j, const std::string& what) {
    const int width = require(j, "width", what).get<int>();
    const int height = require(j, "height", what).get<int>();
    const auto& cells_json = require(j, "cells", what);
    if (!cells_json.is_array() ||
        cells_json.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw SenseError("bad_format", what + ": 'cells' must hold width*height entries");
    std::vector<CellAttributes> cells;
    cells.reserve(cells_json.size());
    for (const auto& c : cells_json) {
        CellAttributes cell;
        cell.landuse = array6_from_json(require(c, "landuse", what), what);
        cell.crime_count = require(c, "crime", what).get<int>();
        cells.push_back(cell);
    }
    return std::make_shared<GridMap>(width, height, std::move(cells));
}

const char* log_base_name(LogBase base) {
    return base == LogBase::natural ? "natural" : "base10";
}

LogBase log_base_from(const std::string& name, const std::string& what) {
    if (name == "natural") return LogBase::natural;
    if (name == "base10") return LogBase::base10;
    throw SenseError("bad_format", what + ": log_base must be 'natural' or 'base10'");
}

json spec_to_json(const TaskSpec& spec) {
    return json{{"grid", grid_to_json(*spec.grid)},
                {"horizon", spec.horizon},
                {"interval_minutes", spec.interval_minutes},
                {"budget", spec.budget},
                {"alpha", spec.alpha},
                {"beta", spec.beta},
                {"eta", spec.eta},
                {"lambda_", spec.lambda_},
                {"mu", spec.mu},
                {"overlap_threshold", spec.overlap_threshold},
                {"tie_epsilon", spec.tie_epsilon},
                {"max_negotiation_rounds", spec.max_negotiation_rounds},
                {"max_pair_attempts", spec.max_pair_attempts},
                {"max_refine_iters", spec.max_refine_iters},
                {"log_base", log_base_name(spec.log_base)}};
}

TaskSpec spec_from_json(const json& j, const std::string& what) {
    TaskSpec spec;
    spec.grid = grid_from_json(require(j, "grid", what), what);
    spec.horizon = require(j, "horizon", what).get<int>();
    spec.interval_minutes = require(j, "interval_minutes", what).get<int>();
    spec.budget = require(j, "budget", what).get<double>();
    spec.alpha = require(j, "alpha", what).get<double>();
    spec.beta = require(j, "beta", what).get<double>();
    spec.eta = require(j, "eta", what).get<double>();
    spec.lambda_ = require(j, "lambda_", what).get<double>();
    spec.mu = require(j, "mu", what).get<double>();
    spec.overlap_threshold = require(j, "overlap_threshold", what).get<double>();
    spec.tie_epsilon = require(j, "tie_epsilon", what).get<double>();
    spec.max_negotiation_rounds = require(j, "max_negotiation_rounds", what).get<int>();
    spec.max_pair_attempts = require(j, "max_pair_attempts", what).get<int>();
    spec.max_refine_iters = require(j, "max_refine_iters", what).get<int>();
    spec.log_base = log_base_from(require(j, "log_base", what).get<std::string>(), what);
    spec.validate();
    return spec;
}

json participant_to_json(const Participant& p) {
    json hobbies = json::array();
    for (const auto& h : p.profile().hobbies) hobbies.push_back(h);
    json preference = json::array();
    for (const double v : p.preference()) preference.push_back(v);
    return json{{"id", p.id()},
                {"origin", coord_to_json(p.origin())},
                {"destination", coord_to_json(p.destination())},
                {"depart", p.depart()},
                {"arrive", p.arrive()},
                {"speed", p.speed()},
                {"cost", p.cost()},
                {"preference", std::move(preference)},
                {"history_count", p.history_count()},
                {"profile",
                 json{{"gender", p.profile().gender},
                      {"age", p.profile().age},
                      {"age_group", p.profile().age_group},
                      {"economic_status", p.profile().economic_status},
                      {"hobbies", std::move(hobbies)},
                      {"archetype", p.profile().archetype},
                      {"description", p.profile().description}}}};
}

Participant participant_from_json(const json& j, const std::string& what) {
    const auto& pj = require(j, "profile", what);
    ParticipantProfile profile;
    profile.gender = require(pj, "gender", what).get<std::string>();
    profile.age = require(pj, "age", what).get<int>();
    profile.age_group = require(pj, "age_group", what).get<std::string>();
    profile.economic_status = require(pj, "economic_status", what).get<std::string>();
    for (const auto& h : require(pj, "hobbies", what))
        profile.hobbies.push_back(h.get<std::string>());
    profile.archetype = require(pj, "archetype", what).get<std::string>();
    profile.description = require(pj, "description", what).get<std::string>();
    return Participant(require(j, "id", what).get<std::string>(),
                       coord_from_json(require(j, "origin", what), what),
                       coord_from_json(require(j, "destination", what), what),
                       require(j, "depart", what).get<int>(),
                       require(j, "arrive", what).get<int>(),
                       require(j, "speed", what).get<int>(),
                       require(j, "cost", what).get<double>(),
                       array6_from_json(require(j, "preference", what), what),
                       require(j, "history_count", what).get<int>(), std::move(profile));
}

}  // namespace

json instance_to_json(const Instance& instance) {
    json participants = json::array();
    for (const auto& p : instance.participants) participants.push_back(participant_to_json(p));
    return json{{"format", kFormatTag},
                {"kind", "instance"},
                {"task", spec_to_json(instance.spec)},
                {"participants", std::move(participants)}};
}

Instance instance_from_json(const json& doc) {
    const std::string what = "instance";
    check_envelope(doc, "instance", what);
    Instance instance;
    instance.spec = spec_from_json(require(doc, "task", what), what);
    for (const auto& p : require(doc, "participants", what))
        instance.participants.push_back(participant_from_json(p, what));
    return instance;
}

void save_instance(const Instance& instance, const std::string& path) {
    write_file(path, instance_to_json(instance).dump(2) + "\n");
}

Instance load_instance(const std::string& path) {
    try {
        return instance_from_json(parse_file(path));
    } catch (const SenseError& e) {
        if (std::string(e.code()) == "bad_format")
            throw SenseError("bad_format", path + ": " + e.what());
        throw;
    }
}

json plan_to_json(const PlanDoc& doc) {
    json routes = json::object();
    for (const auto& [id, route] : doc.plan.routes) routes[id] = route_to_json(route);
    json selected = json::array();
    for (const auto& id : doc.plan.selected) selected.push_back(id);
    json out{{"format", kFormatTag},
             {"kind", "plan"},
             {"method", doc.method},
             {"seed", doc.seed},
             {"instance", instance_to_json(doc.instance)},
             {"selected", std::move(selected)},
             {"routes", std::move(routes)},
             {"mean_pss", doc.plan.mean_pss}};
    if (doc.plan.report) {
        out["coverage"] = json{{"count", doc.plan.report->q},
                               {"entropy", doc.plan.report->entropy},
                               {"phi", doc.plan.report->phi}};
    } else {
        out["coverage"] = nullptr;
    }
    if (!doc.decisions.empty()) {
        json decisions = json::array();
        for (const auto& d : doc.decisions)
            decisions.push_back(json{{"id", d.id}, {"decision", d.decision}});
        out["decisions"] = std::move(decisions);
    }
    return out;
}

PlanDoc plan_from_json(const json& j) {
    const std::string what = "plan";
    check_envelope(j, "plan", what);
    PlanDoc doc;
    doc.method = require(j, "method", what).get<std::string>();
    doc.seed = require(j, "seed", what).get<std::uint64_t>();
    doc.instance = instance_from_json(require(j, "instance", what));
    for (const auto& id : require(j, "selected", what))
        doc.plan.selected.push_back(id.get<std::string>());
    for (const auto& [id, route] : require(j, "routes", what).items())
        doc.plan.routes[id] = route_from_json(route, what);
    doc.plan.mean_pss = require(j, "mean_pss", what).get<double>();
    const auto& coverage = require(j, "coverage", what);
    if (!coverage.is_null()) {
        metrics::CoverageReport report;
        report.q = require(coverage, "count", what).get<double>();
        report.entropy = require(coverage, "entropy", what).get<double>();
        report.phi = require(coverage, "phi", what).get<double>();
        // The per-cell marginal is derivable, so it is not serialized.
        detail::CoverageStats stats = detail::CoverageStats::for_task(doc.instance.spec);
        for (const auto& [id, route] : doc.plan.routes) stats.add_route(route);
        const auto tensor = stats.to_tensor();
        report.per_cell_counts.assign(
            static_cast<std::size_t>(tensor.width()) * tensor.height(), 0.0);
        for (int x = 0; x < tensor.width(); ++x)
            for (int y = 0; y < tensor.height(); ++y) {
                double sum = 0.0;
                for (int t = 0; t < tensor.time_slots(); ++t) sum += tensor.at(x, y, t);
                report.per_cell_counts[static_cast<std::size_t>(x) * tensor.height() + y] = sum;
            }
        doc.plan.report = std::move(report);
    }
    if (j.contains("decisions")) {
        for (const auto& d : j["decisions"])
            doc.decisions.push_back({require(d, "id", what).get<std::string>(),
                                     require(d, "decision", what).get<std::string>()});
    }
    return doc;
}

void save_plan(const PlanDoc& doc, const std::string& path) {
    write_file(path, plan_to_json(doc).dump(2) + "\n");
}

PlanDoc load_plan(const std::string& path) {
    try {
        return plan_from_json(parse_file(path));
    } catch (const SenseError& e) {
        if (std::string(e.code()) == "bad_format")
            throw SenseError("bad_format", path + ": " + e.what());
        throw;
    }
}

void save_events(const std::vector<DisturbanceEvent>& events, const std::string& path) {
    json rows = json::array();
    for (const auto& e : events) {
        rows.push_back(json{
            {"kind", e.kind == DisturbanceEvent::Kind::cell_blocked ? "cell_blocked"
                                                                    : "priority_region"},
            {"cell", coord_to_json(e.cell)},
            {"t_from", e.t_from},
            {"t_to", e.t_to},
            {"bonus", e.bonus}});
    }
    const json doc{{"format", kFormatTag}, {"kind", "events"}, {"events", std::move(rows)}};
    write_file(path, doc.dump(2) + "\n");
}

std::vector<DisturbanceEvent> load_events(const std::string& path, const TaskSpec& spec) {
    const json doc = parse_file(path);
    const std::string what = path;
    check_envelope(doc, "events", what);
    std::vector<DisturbanceEvent> events;
    for (const auto& e : require(doc, "events", what)) {
        DisturbanceEvent event;
        const std::string kind = require(e, "kind", what).get<std::string>();
        if (kind == "cell_blocked")
            event.kind = DisturbanceEvent::Kind::cell_blocked;
        else if (kind == "priority_region")
            event.kind = DisturbanceEvent::Kind::priority_region;
        else
            throw SenseError("bad_format",
                             what + ": kind must be 'cell_blocked' or 'priority_region'");
        event.cell = coord_from_json(require(e, "cell", what), what);
        event.t_from = require(e, "t_from", what).get<int>();
        event.t_to = require(e, "t_to", what).get<int>();
        event.bonus = e.contains("bonus") ? e["bonus"].get<double>() : 0.0;
        validate_event(event, spec);
        events.push_back(event);
    }
    return events;
}

void save_transcript(const std::vector<pipeline::TranscriptEntry>& transcript,
                     const std::string& path) {
    std::string out;
    for (const auto& e : transcript) {
        const json row{{"u", e.u},
                       {"v", e.v},
                       {"round", e.round},
                       {"proposed_u", route_to_json(e.proposed_u)},
                       {"proposed_v", route_to_json(e.proposed_v)},
                       {"u_accept", e.u_accept},
                       {"v_accept", e.v_accept},
                       {"committed", e.committed},
                       {"feedback_u", e.feedback_u},
                       {"feedback_v", e.feedback_v},
                       {"incentive_u", e.incentive_u},
                       {"incentive_v", e.incentive_v},
                       {"note", e.note}};
        out += row.dump() + "\n";
    }
    write_file(path, out);
}

std::vector<pipeline::TranscriptEntry> load_transcript(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SenseError("io_error", "cannot open " + path);
    std::vector<pipeline::TranscriptEntry> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string what = path + ":" + std::to_string(line_no);
        const json row = json::parse(line, nullptr, false);
        if (row.is_discarded()) throw SenseError("bad_json", what + ": malformed JSON");
        pipeline::TranscriptEntry e;
        e.u = require(row, "u", what).get<std::string>();
        e.v = require(row, "v", what).get<std::string>();
        e.round = require(row, "round", what).get<int>();
        e.proposed_u = route_from_json(require(row, "proposed_u", what), what);
        e.proposed_v = route_from_json(require(row, "proposed_v", what), what);
        e.u_accept = require(row, "u_accept", what).get<bool>();
        e.v_accept = require(row, "v_accept", what).get<bool>();
        e.committed = require(row, "committed", what).get<bool>();
        e.feedback_u = require(row, "feedback_u", what).get<std::string>();
        e.feedback_v = require(row, "feedback_v", what).get<std::string>();
        e.incentive_u = require(row, "incentive_u", what).get<std::string>();
        e.incentive_v = require(row, "incentive_v", what).get<std::string>();
        e.note = require(row, "note", what).get<std::string>();
        out.push_back(std::move(e));
    }
    return out;
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void write_comparison_csv(const harness::ExperimentReport& report, const std::string& path) {
    std::string out = "config,method,seed,coverage,pss,runtime_ms\n";
    for (const auto& row : report.rows) {
        out += row.config + "," + row.method + "," + std::to_string(row.seed) + "," +
               format_double(row.coverage) + "," + format_double(row.pss) + "," +
               format_double(row.runtime_ms) + "\n";
    }
    write_file(path, out);
}

void write_fairness_csv(const harness::FairnessReport& report, const std::string& path) {
    std::string out = "strategy,worker_id,count\n";
    for (const auto& row : report.rows)
        out += row.strategy + "," + row.worker_id + "," + std::to_string(row.count) + "\n";
    write_file(path, out);
}

void write_negotiation_csv(const harness::NegotiationEffectReport& report,
                           const std::string& path) {
    std::string out = "instance,phase,overlap_pct,coverage,entropy,count,pss\n";
    for (const auto& row : report.rows) {
        out += std::to_string(row.instance_index) + "," + row.phase + "," +
               format_double(row.snapshot.overlap_pct) + "," +
               format_double(row.snapshot.coverage) + "," +
               format_double(row.snapshot.entropy) + "," + std::to_string(row.snapshot.count) +
               "," + format_double(row.snapshot.mean_pss) + "\n";
    }
    write_file(path, out);
}

}  // namespace senseforge::io
