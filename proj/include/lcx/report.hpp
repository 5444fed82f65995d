#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcx/graph_convexity.hpp"
#include "lcx/stats.hpp"
#include "lcx/synth.hpp"

namespace lcx {

nlohmann::ordered_json to_json(const LayerConvexityReport& report);
LayerConvexityReport report_from_json(const nlohmann::json& doc);

/// One row per class, header included. Several reports share one header.
std::string reports_csv(std::span<const LayerConvexityReport> reports);
/// Overall and per-class means, one table row per (metric, layer).
std::string reports_markdown(std::span<const LayerConvexityReport> reports);

nlohmann::ordered_json to_json(const BaselineResult& result);
/// k_occurrence counts are summarized (min, max, mean) unless `full` is set.
nlohmann::ordered_json to_json(const HubnessReport& report, bool full = false);
nlohmann::ordered_json to_json(const CorrelationResult& result);
nlohmann::ordered_json to_json(std::span<const SweepRow> rows);
std::string sweep_csv(std::span<const SweepRow> rows);

/// Writes `text` atomically enough for our purposes: to a temporary file,
/// then renamed over `path`.
void write_text(const std::filesystem::path& path, const std::string& text);
/// JSON with 2-space indent and a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);
std::string read_text(const std::filesystem::path& path);

/// Shortest text that reads back as the same double.
std::string format_number(double v);

}  // namespace lcx
