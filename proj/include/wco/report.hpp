#pragma once

#include "wco/classify.hpp"
#include "wco/config.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace wco {

using Json = nlohmann::json;

Json estimate_json(const LimitEstimate& e);
Json verdict_json(const Verdict& v);
Json classification_json(const ClassificationReport& r);

/// The full report: schema marker, config echo, quantities, verdicts,
/// optional oracle confirmations, seed and wall time. Emission through
/// nlohmann is key-sorted and therefore byte-deterministic; wall_time_ms is
/// the only run-dependent field.
Json report_json(const InstanceConfig& cfg, const ClassificationReport& r,
                 const std::optional<Json>& oracle, const Policy& policy, double wall_ms);

std::string report_text(const ClassificationReport& r, const std::optional<Json>& oracle);

}  // namespace wco
