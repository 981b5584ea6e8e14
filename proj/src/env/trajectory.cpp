#include "safewalk/env/trajectory.hpp"

#include <ostream>

#include "json.hpp"
#include "safewalk/error.hpp"

namespace safewalk::env {

std::string to_json_line(const TrajectoryRecord& r) {
  nlohmann::json j;
  j["t"] = r.t;
  j["x"] = r.x;
  j["y"] = r.y;
  j["yaw"] = r.yaw;
  j["roll"] = r.roll;
  j["pitch"] = r.pitch;
  j["action"] = r.action;
  j["reward"] = r.reward;
  j["f_s"] = r.f_s;
  j["task"] = r.task;
  j["events"] = {{"fall", r.fall},
                 {"out_of_workspace", r.out_of_workspace},
                 {"near_boundary", r.near_boundary}};
  return j.dump();
}

TrajectoryRecord parse_json_line(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    TrajectoryRecord r;
    r.t = j.at("t").get<std::uint64_t>();
    r.x = j.at("x").get<double>();
    r.y = j.at("y").get<double>();
    r.yaw = j.at("yaw").get<double>();
    r.roll = j.at("roll").get<double>();
    r.pitch = j.at("pitch").get<double>();
    r.action = j.at("action").get<Action>();
    r.reward = j.at("reward").get<double>();
    r.f_s = j.at("f_s").get<double>();
    r.task = j.at("task").get<std::string>();
    const auto& ev = j.at("events");
    r.fall = ev.at("fall").get<bool>();
    r.out_of_workspace = ev.at("out_of_workspace").get<bool>();
    r.near_boundary = ev.at("near_boundary").get<bool>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("malformed trajectory record: ") + e.what());
  }
}

void write_trajectory(std::ostream& out, const TrajectoryRecord& record) {
  out << to_json_line(record) << '\n';
}

}  // namespace safewalk::env
