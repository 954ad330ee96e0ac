#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "senseforge/harness.hpp"
#include "senseforge/json_io.hpp"
#include "senseforge/pipeline.hpp"
#include "senseforge/policy.hpp"

namespace py = pybind11;

namespace {

using namespace senseforge;

harness::InstanceConfig preset_config(const std::string& name) {
    const auto preset = harness::find_preset(name);
    if (!preset) {
        std::string known;
        for (const auto& p : harness::preset_names()) {
            if (!known.empty()) known += ", ";
            known += p;
        }
        throw SenseError("degenerate_config", "unknown preset '" + name + "'; presets: " + known);
    }
    return *preset;
}

py::dict snapshot_dict(const pipeline::Snapshot& s) {
    py::dict out;
    out["overlap_pct"] = s.overlap_pct;
    out["coverage"] = s.coverage;
    out["entropy"] = s.entropy;
    out["count"] = s.count;
    out["mean_pss"] = s.mean_pss;
    return out;
}

py::dict plan_dict(const baselines::PlanResult& plan) {
    py::dict out;
    out["selected"] = plan.selected;
    py::dict routes;
    for (const auto& [id, route] : plan.routes) {
        py::list points;
        for (const auto& p : route.points) points.append(py::make_tuple(p.x, p.y, p.t));
        routes[py::str(id)] = std::move(points);
    }
    out["routes"] = std::move(routes);
    if (plan.report) {
        out["coverage"] = plan.report->phi;
        out["entropy"] = plan.report->entropy;
        out["count"] = plan.report->q;
    } else {
        out["coverage"] = py::none();
        out["entropy"] = py::none();
        out["count"] = 0.0;
    }
    out["mean_pss"] = plan.mean_pss;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Planning engine for participatory urban sensing";

    py::register_exception<SenseError>(m, "SenseError");

    py::class_<Instance>(m, "Instance")
        .def_property_readonly("n_participants",
                               [](const Instance& i) { return i.participants.size(); })
        .def_property_readonly("width", [](const Instance& i) { return i.spec.grid->width(); })
        .def_property_readonly("height", [](const Instance& i) { return i.spec.grid->height(); })
        .def_property_readonly("horizon", [](const Instance& i) { return i.spec.horizon; })
        .def_property_readonly("budget", [](const Instance& i) { return i.spec.budget; })
        .def("participant_ids", [](const Instance& i) {
            std::vector<std::string> ids;
            ids.reserve(i.participants.size());
            for (const auto& p : i.participants) ids.push_back(p.id());
            return ids;
        });

    m.def("preset_names", [] { return harness::preset_names(); });
    m.def("method_keys", [] { return harness::method_keys(); });

    m.def(
        "generate_instance",
        [](const std::string& preset, std::uint64_t seed) {
            return harness::generate_instance(preset_config(preset), seed);
        },
        py::arg("preset"), py::arg("seed") = 1);

    m.def(
        "plan",
        [](const Instance& instance, const std::string& method, std::uint64_t seed) {
            return plan_dict(harness::run_method(method, instance, seed));
        },
        py::arg("instance"), py::arg("method"), py::arg("seed") = 1);

    m.def(
        "run_pipeline",
        [](const Instance& instance) {
            const auto result =
                pipeline::run_pipeline(instance, policy::heuristic_policies());
            py::dict out = plan_dict(result.plan);
            out["before"] = snapshot_dict(result.before);
            out["after"] = snapshot_dict(result.after);
            out["transcript_entries"] = result.negotiation.transcript.size();
            return out;
        },
        py::arg("instance"));

    m.def("save_instance",
          [](const Instance& instance, const std::string& path) {
              io::save_instance(instance, path);
          },
          py::arg("instance"), py::arg("path"));
    m.def("load_instance", [](const std::string& path) { return io::load_instance(path); },
          py::arg("path"));
}
