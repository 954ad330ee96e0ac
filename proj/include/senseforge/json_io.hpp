#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "senseforge/domain.hpp"
#include "senseforge/harness.hpp"
#include "senseforge/pipeline.hpp"

namespace senseforge::io {

// Stamped into every structured artifact; loaders reject anything else.
inline constexpr char kFormatTag[] = "sense-forge/v1";

nlohmann::json instance_to_json(const Instance& instance);
Instance instance_from_json(const nlohmann::json& doc);
void save_instance(const Instance& instance, const std::string& path);
Instance load_instance(const std::string& path);

// A plan file is self-contained: it embeds the instance it was computed on.
struct PlanDoc {
    std::string method;
    std::uint64_t seed = 0;
    Instance instance;
    baselines::PlanResult plan;
    std::vector<pipeline::Decision> decisions;  // disturbance replay only
};

nlohmann::json plan_to_json(const PlanDoc& doc);
PlanDoc plan_from_json(const nlohmann::json& doc);
void save_plan(const PlanDoc& doc, const std::string& path);
PlanDoc load_plan(const std::string& path);

void save_events(const std::vector<DisturbanceEvent>& events, const std::string& path);
std::vector<DisturbanceEvent> load_events(const std::string& path, const TaskSpec& spec);

// One JSON object per line.
void save_transcript(const std::vector<pipeline::TranscriptEntry>& transcript,
                     const std::string& path);
std::vector<pipeline::TranscriptEntry> load_transcript(const std::string& path);

void write_comparison_csv(const harness::ExperimentReport& report, const std::string& path);
void write_fairness_csv(const harness::FairnessReport& report, const std::string& path);
void write_negotiation_csv(const harness::NegotiationEffectReport& report,
                           const std::string& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace senseforge::io
