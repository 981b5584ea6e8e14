#pragma once

// Teleoperation server. One simulation thread owns the walker; a separate
// network thread accepts websocket clients. Client commands reach the
// simulation through one ordered queue and every state frame is broadcast to
// all connected clients.
//
// client -> server: {"type":"set_task","name":...} | {"type":"pause"} |
//                   {"type":"resume"} | {"type":"reset"}
// server -> client: {"type":"state","t","x","y","yaw","roll","pitch","f_s",
//                    "reward","task","fall_count","workspace":{"w","h"}} |
//                   {"type":"error","message"}

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "safewalk/env/trajectory.hpp"
#include "safewalk/tasks/controller.hpp"

namespace safewalk::harness {

struct TeleopOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 0;  // 0 picks a free port
  /// Multiplier on the 50 Hz wall pace; <= 0 runs unthrottled.
  double pace = 1.0;
  /// Called on the simulation thread after every step.
  std::function<void(const env::TrajectoryRecord&)> on_step;
};

/// Builds the JSON state frame for one step.
std::string state_frame(const env::TrajectoryRecord& record, std::size_t fall_count,
                        const env::Workspace& workspace);
std::string error_frame(const std::string& message);

class TeleopServer {
 public:
  TeleopServer(tasks::ComposedController controller, TeleopOptions options);
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  /// Binds and starts both threads. Throws std::runtime_error if the port is taken.
  void start();
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

  unsigned short port() const;
  std::size_t client_count() const;
  std::uint64_t steps() const;
  bool paused() const;

 struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace safewalk::harness
