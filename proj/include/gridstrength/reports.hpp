#pragma once

#include <string>

#include "gridstrength/simulator.hpp"
#include "gridstrength/strength.hpp"

namespace gs {

// All writers below are deterministic: fixed float formatting, stable
// ordering, no wall-clock content.

std::string format_double(double x);  // shortest-ish %.12g

std::string powerflow_csv(const SystemCase& c, const PowerFlowSolution& pf);
std::string powerflow_table(const SystemCase& c, const PowerFlowSolution& pf);

std::string indicator_csv(const IndicatorTable& table);
std::string indicator_table_text(const IndicatorTable& table);

// Full S, S', S'' plus per-bus indicator blocks as structured JSON.
std::string matrices_json(const SystemCase& c, const StrengthResult& r,
                          const IndicatorTable& table);

std::string trajectory_csv(const SystemCase& c, const Trajectory& traj);

std::string validation_json(const SystemCase& c, const ValidationReport& rep);
std::string validation_table(const ValidationReport& rep);

}  // namespace gs
