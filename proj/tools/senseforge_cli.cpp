#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "senseforge/harness.hpp"
#include "senseforge/json_io.hpp"
#include "senseforge/pipeline.hpp"
#include "senseforge/policy.hpp"

namespace {

using senseforge::SenseError;
namespace harness = senseforge::harness;
namespace io = senseforge::io;
namespace pipeline = senseforge::pipeline;
namespace policy = senseforge::policy;

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ", ";
        out += s;
    }
    return out;
}

// A --config value is either a preset name or a path to a JSON config file.
harness::InstanceConfig resolve_config(const std::string& name_or_path) {
    if (const auto preset = harness::find_preset(name_or_path)) return *preset;
    std::ifstream in(name_or_path);
    if (!in)
        throw SenseError("io_error", "no preset or config file named '" + name_or_path +
                                         "'; presets: " + join(harness::preset_names()));
    const auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw SenseError("bad_json", name_or_path + ": malformed JSON config");
    harness::InstanceConfig config;
    config.name = doc.value("name", std::string("custom"));
    for (const char* key : {"width", "height", "n_participants", "budget", "horizon_minutes",
                            "interval_minutes"})
        if (!doc.contains(key))
            throw SenseError("bad_format",
                             name_or_path + ": missing field '" + std::string(key) + "'");
    config.width = doc["width"].get<int>();
    config.height = doc["height"].get<int>();
    config.n_participants = doc["n_participants"].get<int>();
    config.budget = doc["budget"].get<double>();
    config.horizon_minutes = doc["horizon_minutes"].get<int>();
    config.interval_minutes = doc["interval_minutes"].get<int>();
    config.with_crime = doc.value("with_crime", true);
    config.min_speed = doc.value("min_speed", 1);
    config.max_speed = doc.value("max_speed", 3);
    config.min_cost = doc.value("min_cost", 1.0);
    config.max_cost = doc.value("max_cost", 5.0);
    return config;
}

policy::PolicySet make_policies(const std::string& backend) {
    if (backend == "remote")
        return policy::remote_policies(policy::RemoteConfig::from_env());
    return policy::heuristic_policies();
}

std::vector<const senseforge::Participant*> selected_pointers(const io::PlanDoc& doc) {
    std::vector<const senseforge::Participant*> out;
    for (const auto& id : doc.plan.selected) {
        const senseforge::Participant* found = nullptr;
        for (const auto& p : doc.instance.participants)
            if (p.id() == id) {
                found = &p;
                break;
            }
        if (!found)
            throw SenseError("bad_format",
                             "plan selects '" + id + "' which is not in the instance");
        out.push_back(found);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Participatory sensing planner and benchmark harness"};
    app.require_subcommand(1);

    // generate
    auto* generate = app.add_subcommand("generate", "Generate a task instance");
    std::string gen_config;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    generate->add_option("--config", gen_config, "Preset name or config JSON path")->required();
    generate->add_option("--seed", gen_seed, "Generator seed");
    generate->add_option("--out", gen_out, "Output instance JSON path")->required();

    // plan
    auto* plan = app.add_subcommand("plan", "Plan routes and selection for an instance");
    std::string plan_instance;
    std::string plan_method;
    std::string plan_policy = "heuristic";
    std::uint64_t plan_seed = 1;
    std::string plan_out;
    plan->add_option("--instance", plan_instance, "Instance JSON path")->required();
    plan->add_option("--method", plan_method, "Planning method key")->required();
    plan->add_option("--policy", plan_policy, "Decision backend")
        ->check(CLI::IsMember({"heuristic", "remote"}));
    plan->add_option("--seed", plan_seed, "Method seed");
    plan->add_option("--out", plan_out, "Output plan JSON path")->required();

    // negotiate
    auto* negotiate = app.add_subcommand("negotiate", "Refine a plan's routes by negotiation");
    std::string neg_plan;
    std::string neg_policy = "heuristic";
    std::string neg_out;
    std::string neg_transcript;
    negotiate->add_option("--plan", neg_plan, "Input plan JSON path")->required();
    negotiate->add_option("--policy", neg_policy, "Decision backend")
        ->check(CLI::IsMember({"heuristic", "remote"}));
    negotiate->add_option("--out", neg_out, "Output plan JSON path")->required();
    negotiate->add_option("--transcript", neg_transcript, "Transcript JSONL path")->required();

    // benchmark
    auto* benchmark = app.add_subcommand("benchmark", "Compare methods across instances");
    std::vector<std::string> bench_configs;
    std::vector<std::string> bench_methods;
    int bench_runs = 20;
    std::uint64_t bench_seed = 1;
    int bench_jobs = 1;
    std::string bench_policy = "heuristic";
    std::string bench_out;
    benchmark->add_option("--configs", bench_configs, "Preset names or config JSON paths")
        ->required()
        ->delimiter(',');
    benchmark->add_option("--methods", bench_methods, "Method keys")->required()->delimiter(',');
    benchmark->add_option("--runs", bench_runs, "Instances per config")
        ->check(CLI::PositiveNumber);
    benchmark->add_option("--seed", bench_seed, "Base seed");
    benchmark->add_option("--jobs", bench_jobs, "Parallel worker threads")
        ->check(CLI::PositiveNumber);
    benchmark->add_option("--policy", bench_policy, "Decision backend for mapus")
        ->check(CLI::IsMember({"heuristic", "remote"}));
    benchmark->add_option("--out", bench_out, "Output CSV path")->required();

    // fairness
    auto* fairness = app.add_subcommand("fairness", "Run the selection-fairness study");
    int fair_workers = 30;
    int fair_tasks = 60;
    int fair_k = 20;
    std::uint64_t fair_seed = 1;
    std::string fair_out;
    fairness->add_option("--workers", fair_workers, "Worker pool size");
    fairness->add_option("--tasks", fair_tasks, "Sequential task count");
    fairness->add_option("--k", fair_k, "Selections per task");
    fairness->add_option("--seed", fair_seed, "Study seed");
    fairness->add_option("--out", fair_out, "Output CSV path")->required();

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Run the stage-ablation study");
    std::string abl_config;
    int abl_runs = 20;
    std::uint64_t abl_seed = 1;
    std::string abl_out;
    ablate->add_option("--config", abl_config, "Preset name or config JSON path")->required();
    ablate->add_option("--runs", abl_runs, "Instance count")->check(CLI::PositiveNumber);
    ablate->add_option("--seed", abl_seed, "Base seed");
    ablate->add_option("--out", abl_out, "Output CSV path")->required();

    // disturb
    auto* disturb = app.add_subcommand("disturb", "Replay disturbance events against a plan");
    std::string dist_plan;
    std::string dist_events;
    std::string dist_out;
    disturb->add_option("--plan", dist_plan, "Input plan JSON path")->required();
    disturb->add_option("--events", dist_events, "Events JSON path")->required();
    disturb->add_option("--out", dist_out, "Output plan JSON path")->required();

    try {
        app.parse(argc, argv);

        if (generate->parsed()) {
            const auto config = resolve_config(gen_config);
            io::save_instance(harness::generate_instance(config, gen_seed), gen_out);
        } else if (plan->parsed()) {
            if (!harness::is_method(plan_method))
                throw SenseError("unknown_method",
                                 "unknown method '" + plan_method +
                                     "'; registered: " + join(harness::method_keys()));
            const auto instance = io::load_instance(plan_instance);
            io::PlanDoc doc;
            doc.method = plan_method;
            doc.seed = plan_seed;
            if (plan_method == "mapus") {
                const auto policies = make_policies(plan_policy);
                doc.plan = harness::run_method(plan_method, instance, plan_seed, &policies);
            } else {
                doc.plan = harness::run_method(plan_method, instance, plan_seed);
            }
            doc.instance = std::move(instance);
            io::save_plan(doc, plan_out);
        } else if (negotiate->parsed()) {
            auto doc = io::load_plan(neg_plan);
            const auto policies = make_policies(neg_policy);
            const auto participants = selected_pointers(doc);
            pipeline::NegotiationState state;
            state.routes = doc.plan.routes;
            state = pipeline::negotiate(std::move(state), participants, doc.instance.spec,
                                        *doc.instance.spec.grid, policies);
            io::save_transcript(state.transcript, neg_transcript);
            doc.plan = senseforge::baselines::finish_plan(doc.plan.selected,
                                                          std::move(state.routes), doc.instance);
            io::save_plan(doc, neg_out);
        } else if (benchmark->parsed()) {
            std::vector<harness::InstanceConfig> configs;
            configs.reserve(bench_configs.size());
            for (const auto& c : bench_configs) configs.push_back(resolve_config(c));
            const policy::PolicySet* policies_ptr = nullptr;
            policy::PolicySet policies;
            if (bench_policy == "remote") {
                policies = make_policies(bench_policy);
                policies_ptr = &policies;
            }
            const auto report = harness::run_comparison(configs, bench_methods, bench_runs,
                                                        bench_seed, bench_jobs, policies_ptr);
            io::write_comparison_csv(report, bench_out);
        } else if (fairness->parsed()) {
            const auto report =
                harness::run_fairness(fair_seed, fair_workers, fair_tasks, fair_k);
            io::write_fairness_csv(report, fair_out);
        } else if (ablate->parsed()) {
            const auto config = resolve_config(abl_config);
            const auto report = harness::run_ablation(config, abl_runs, abl_seed);
            io::write_comparison_csv(report, abl_out);
        } else if (disturb->parsed()) {
            auto doc = io::load_plan(dist_plan);
            const auto events = io::load_events(dist_events, doc.instance.spec);
            const auto participants = selected_pointers(doc);
            const auto outcome =
                pipeline::apply_disturbance(doc.plan.routes, events, participants,
                                            doc.instance.spec, *doc.instance.spec.grid);
            doc.plan = senseforge::baselines::finish_plan(doc.plan.selected, outcome.routes,
                                                          doc.instance);
            doc.decisions = outcome.decisions;
            io::save_plan(doc, dist_out);
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const SenseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == "unknown_method" ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
