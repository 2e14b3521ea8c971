#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "windgbm/forecaster.hpp"

namespace windgbm {

nlohmann::json to_json(const SpeedFilterState& state);
SpeedFilterState filter_state_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PowerCurveModel& model);
PowerCurveModel curve_from_json(const nlohmann::json& j);

/// Full pipeline snapshot for resuming a forecast run.
nlohmann::json to_json(const PipelineState& state);
PipelineState pipeline_from_json(const nlohmann::json& j);

void save_snapshot(const std::filesystem::path& path, const PipelineState& state);
PipelineState load_snapshot(const std::filesystem::path& path);

}  // namespace windgbm
