#pragma once

// Planar walker: a phase oscillator that converts filtered commands into
// thrust, yaw rate and torso tilt. Falls are tilt-limit crossings.

#include <array>
#include <cstdint>
#include <deque>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace safewalk::env {

inline constexpr double kDt = 0.02;
inline constexpr std::size_t kActionDim = 4;
inline constexpr std::size_t kHistoryLength = 6;
inline constexpr std::size_t kFrameDim = 4 + kActionDim;
inline constexpr std::size_t kObsDim = kHistoryLength * kFrameDim;
inline constexpr double kPitchLimit = std::numbers::pi / 12.0;
inline constexpr double kRollLimit = std::numbers::pi / 6.0;
inline constexpr double kResetCost = 12.0;
inline constexpr double kBoundaryMargin = 0.3;
inline constexpr double kFilterCutoffHz = 5.0;
inline constexpr double kResetTiltJitter = 0.02;

using Action = std::array<double, kActionDim>;

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

struct WalkerState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double vx = 0.0;  // velocity over the last step, m/s
  double vy = 0.0;
  double roll = 0.0;
  double pitch = 0.0;
  double prev_roll = 0.0;
  double prev_pitch = 0.0;
  double phase = 0.0;  // gait phase in [0, 2pi)
  Action filtered{};
  Action prev_action{};       // a_{t-1}: the last raw command applied
  Action prev_prev_action{};  // a_{t-2}
  bool snagged = false;
  std::uint64_t step_index = 0;

  Pose pose() const { return {x, y, yaw}; }
  bool operator==(const WalkerState&) const = default;
};

struct Terrain {
  std::string name;
  double slip_gain = 1.0;
  double tilt_noise = 0.0;  // rad / sqrt(s)
  double snag_probability = 0.0;

  static Terrain flat();
  static Terrain mattress();
  static Terrain doormat();
  /// Throws ContractViolation for unknown names.
  static Terrain by_name(const std::string& name);
};

struct Workspace {
  double half_width = 2.5;   // along x
  double half_height = 1.0;  // along y

  static Workspace large() { return {2.5, 1.0}; }   // 5.0 x 2.0
  static Workspace medium() { return {1.0, 0.7}; }  // 2.0 x 1.4
  static Workspace small() { return {0.6, 0.4}; }   // 1.2 x 0.8
  /// Parses "WxH" in full metres, e.g. "5.0x2.0".
  static Workspace parse(const std::string& text);
  std::string name() const;
  bool operator==(const Workspace&) const = default;
};

/// Constants of the dynamics law. Defaults are the project's calibrated values.
struct Dynamics {
  double stride_speed = 0.5;      // m/s per unit filtered stride command
  double base_frequency = 2.5;    // Hz at full frequency trim
  double turn_rate = 1.5;         // rad/s per unit filtered turn command
  double tilt_decay = 0.95;       // per step
  double speed_tilt_gain = 1.2;   // pitch drive per m/s of thrust
  double turn_tilt_gain = 0.6;    // roll drive per rad/s of turning
  double jerk_tilt_gain = 0.3;    // drive per unit command change
  double balance_gain = 0.5;      // pitch damping from the balance command
  double snag_slip = 0.1;         // slip multiplier while snagged
  double snag_release = 0.8;      // command change that frees a snag
  bool noise = true;
};

struct StepEvents {
  bool fall = false;
  bool out_of_workspace = false;
  bool near_boundary_outbound = false;
  bool snag_started = false;
  bool snag_ended = false;
};

enum class BoundaryStatus { inside, near_and_outbound, outside };

enum class ResetMode { episode_start, after_fall, after_escape };

struct StepResult {
  WalkerState state;
  Pose before;
  Pose after;
  double safety = 0.0;
  StepEvents events;
};

struct ResetResult {
  WalkerState state;
  double time_cost = 0.0;
};

/// First-order low-pass filter coefficient c = exp(-2 pi fc dt).
double filter_coefficient(double cutoff_hz = kFilterCutoffHz, double dt = kDt);
Action butterworth(const Action& prev_filtered, const Action& raw);

/// min(pitch limit - |pitch|, roll limit - |roll|); negative means fallen.
double safety_margin(const WalkerState& state);

BoundaryStatus boundary_check(const WalkerState& state, const Workspace& workspace);

/// Advances the walker one control step. Throws ContractViolation if any action
/// component lies outside [-1, 1].
StepResult step(const WalkerState& state, const Action& action, const Terrain& terrain,
                const Workspace& workspace, const Dynamics& dynamics, std::mt19937_64& rng);

ResetResult reset(const WalkerState& current, std::mt19937_64& rng, ResetMode mode);

/// One observation frame: [roll, pitch, sin z, cos z, a_{t-1}].
std::array<double, kFrameDim> observation_frame(const WalkerState& state);

/// Rolling window of the last kHistoryLength frames, oldest first.
class ObservationHistory {
 public:
  /// Fills every slot with the frame of the given state.
  void reset(const WalkerState& state);
  void push(const WalkerState& state);
  std::vector<double> observe() const;
  const std::deque<std::array<double, kFrameDim>>& frames() const { return frames_; }

 private:
  std::deque<std::array<double, kFrameDim>> frames_;
};

std::vector<double> observe(const std::deque<std::array<double, kFrameDim>>& history);

double wrap_angle(double angle);  // to (-pi, pi]

}  // namespace safewalk::env
