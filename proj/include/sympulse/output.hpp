#pragma once

#include "sympulse/conserve.hpp"
#include "sympulse/experiments.hpp"
#include "sympulse/tableau.hpp"

#include <string>
#include <vector>

namespace sympulse {

/// 17 significant digits, shortest exponent form ("%.17g").
std::string format_double(double value);

/// Each header line is emitted as "# <line>".
std::string trajectory_csv(const TrajectoryRecord& record, const std::vector<std::string>& header);
std::string convergence_csv(const std::vector<ConvergenceRow>& rows, const std::vector<std::string>& header);
std::string level_grid_csv(const LevelGrid& grid, const std::vector<std::string>& header);
std::string tableau_csv(const ButcherTableau& tableau, const std::vector<std::string>& header);
std::string tableau_json(const ButcherTableau& tableau);

/// Writes `content` to a temporary sibling of `path`, then renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace sympulse
