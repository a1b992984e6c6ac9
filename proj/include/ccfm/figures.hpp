#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ccfm/samplers.hpp"

namespace ccfm {

enum class FigureKind { trajectory_2d, violation_curve };

/// (t_k, per_step_violation[k-1]) for k = 1..N.
std::vector<std::pair<double, double>> violation_curve_data(const SampleRecord& record);

/// Standalone SVG. trajectory_2d draws each record's states as a solid
/// polyline and, when proposals were recorded, a dashed segment from each
/// proposal to its corrected state. violation_curve draws per-step violation
/// against time. Empty input or non-2-D states throw ConfigError.
std::string render_figure(const std::vector<SampleRecord>& records, FigureKind kind,
                          const std::string& title = {});

void emit_figure(const std::vector<SampleRecord>& records, FigureKind kind,
                 const std::filesystem::path& path, const std::string& title = {});

}  // namespace ccfm
