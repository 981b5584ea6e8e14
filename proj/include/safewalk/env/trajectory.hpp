#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "safewalk/env/walker.hpp"

namespace safewalk::env {

/// One line of a trajectory dump (JSON Lines).
struct TrajectoryRecord {
  std::uint64_t t = 0;
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double roll = 0.0;
  double pitch = 0.0;
  Action action{};
  double reward = 0.0;
  double f_s = 0.0;
  std::string task;
  bool fall = false;
  bool out_of_workspace = false;
  bool near_boundary = false;

  bool operator==(const TrajectoryRecord&) const = default;
};

std::string to_json_line(const TrajectoryRecord& record);
/// Throws ContractViolation on malformed input.
TrajectoryRecord parse_json_line(const std::string& line);

void write_trajectory(std::ostream& out, const TrajectoryRecord& record);

}  // namespace safewalk::env
