#include "safewalk/env/walker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "safewalk/error.hpp"

namespace safewalk::env {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double norm_of_change(const Action& a, const Action& b) {
  double sq = 0.0;
  for (std::size_t j = 0; j < kActionDim; ++j) sq += (a[j] - b[j]) * (a[j] - b[j]);
  return std::sqrt(sq);
}

}  // namespace

Terrain Terrain::flat() { return {"flat", 1.0, 0.01, 0.0}; }
Terrain Terrain::mattress() { return {"mattress", 0.6, 0.03, 0.0}; }
Terrain Terrain::doormat() { return {"doormat", 1.0, 0.02, 0.02}; }

Terrain Terrain::by_name(const std::string& name) {
  if (name == "flat") return flat();
  if (name == "mattress") return mattress();
  if (name == "doormat") return doormat();
  throw ContractViolation("unknown terrain '" + name + "' (expected flat, mattress or doormat)");
}

Workspace Workspace::parse(const std::string& text) {
  const auto sep = text.find('x');
  if (sep == std::string::npos) throw ContractViolation("workspace must look like 5.0x2.0");
  try {
    std::size_t used_w = 0;
    std::size_t used_h = 0;
    const std::string w_text = text.substr(0, sep);
    const std::string h_text = text.substr(sep + 1);
    const double width = std::stod(w_text, &used_w);
    const double height = std::stod(h_text, &used_h);
    if (used_w != w_text.size() || used_h != h_text.size() || !(width > 0.0) || !(height > 0.0)) {
      throw ContractViolation("workspace dimensions must be positive numbers: " + text);
    }
    return {width / 2.0, height / 2.0};
  } catch (const std::logic_error&) {
    throw ContractViolation("workspace must look like 5.0x2.0, got '" + text + "'");
  }
}

std::string Workspace::name() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1fx%.1f", 2.0 * half_width, 2.0 * half_height);
  return buf;
}

double wrap_angle(double angle) {
  double a = std::remainder(angle, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

double filter_coefficient(double cutoff_hz, double dt) {
  return std::exp(-kTwoPi * cutoff_hz * dt);
}

Action butterworth(const Action& prev_filtered, const Action& raw) {
  static const double c = filter_coefficient();
  Action out{};
  for (std::size_t j = 0; j < kActionDim; ++j) out[j] = c * prev_filtered[j] + (1.0 - c) * raw[j];
  return out;
}

double safety_margin(const WalkerState& state) {
  return std::min(kPitchLimit - std::abs(state.pitch), kRollLimit - std::abs(state.roll));
}

BoundaryStatus boundary_check(const WalkerState& state, const Workspace& workspace) {
  const double hw = workspace.half_width;
  const double hh = workspace.half_height;
  if (std::abs(state.x) > hw || std::abs(state.y) > hh) return BoundaryStatus::outside;

  // Distances to the east, west, north and south walls with their outward normals.
  const double distances[4] = {hw - state.x, hw + state.x, hh - state.y, hh + state.y};
  const double outward_speed[4] = {state.vx, -state.vx, state.vy, -state.vy};
  std::size_t nearest = 0;
  for (std::size_t k = 1; k < 4; ++k) {
    if (distances[k] < distances[nearest]) nearest = k;
  }
  if (distances[nearest] < kBoundaryMargin && outward_speed[nearest] > 0.0) {
    return BoundaryStatus::near_and_outbound;
  }
  return BoundaryStatus::inside;
}

StepResult step(const WalkerState& state, const Action& action, const Terrain& terrain,
                const Workspace& workspace, const Dynamics& dyn, std::mt19937_64& rng) {
  for (double a : action) {
    if (!(a >= -1.0 && a <= 1.0)) throw ContractViolation("action components must lie in [-1, 1]");
  }

  StepResult result;
  result.before = state.pose();
  WalkerState next = state;

  next.filtered = butterworth(state.filtered, action);
  const Action& f = next.filtered;
  const double jerk = norm_of_change(action, state.prev_action);

  next.phase = std::fmod(state.phase + kTwoPi * dyn.base_frequency * (0.5 + 0.5 * f[3]) * kDt, kTwoPi);
  if (next.phase < 0.0) next.phase += kTwoPi;
  const double gait = std::sin(next.phase);

  // Doormat crevices: a snag suppresses thrust until the leg is shaken free.
  if (terrain.snag_probability > 0.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double draw = unit(rng);
    if (state.snagged) {
      if (jerk > dyn.snag_release) {
        next.snagged = false;
        result.events.snag_ended = true;
      }
    } else if (draw < terrain.snag_probability) {
      next.snagged = true;
      result.events.snag_started = true;
    }
  }
  const double slip = terrain.slip_gain * (next.snagged ? dyn.snag_slip : 1.0);

  const double thrust = dyn.stride_speed * f[0] * gait;
  const double speed = thrust * slip;
  next.vx = speed * std::cos(state.yaw);
  next.vy = speed * std::sin(state.yaw);
  next.x = state.x + next.vx * kDt;
  next.y = state.y + next.vy * kDt;
  const double yaw_rate = dyn.turn_rate * f[2] * std::abs(gait);
  next.yaw = wrap_angle(state.yaw + yaw_rate * kDt);

  double eta_pitch = 0.0;
  double eta_roll = 0.0;
  if (dyn.noise && terrain.tilt_noise > 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    eta_pitch = normal(rng);
    eta_roll = normal(rng);
  }
  const double noise_scale = terrain.tilt_noise * std::sqrt(kDt);
  next.prev_pitch = state.pitch;
  next.prev_roll = state.roll;
  next.pitch = dyn.tilt_decay * state.pitch +
               (dyn.speed_tilt_gain * std::abs(thrust) + dyn.jerk_tilt_gain * jerk -
                dyn.balance_gain * f[1] * state.pitch) * kDt +
               noise_scale * eta_pitch;
  next.roll = dyn.tilt_decay * state.roll +
              (dyn.turn_tilt_gain * std::abs(yaw_rate) + dyn.jerk_tilt_gain * jerk) * kDt +
              noise_scale * eta_roll;

  next.prev_prev_action = state.prev_action;
  next.prev_action = action;
  ++next.step_index;

  result.safety = safety_margin(next);
  if (result.safety < 0.0) {
    result.events.fall = true;
  } else {
    switch (boundary_check(next, workspace)) {
      case BoundaryStatus::outside:
        result.events.out_of_workspace = true;
        break;
      case BoundaryStatus::near_and_outbound:
        result.events.near_boundary_outbound = true;
        break;
      case BoundaryStatus::inside:
        break;
    }
  }
  result.after = next.pose();
  result.state = next;
  return result;
}

ResetResult reset(const WalkerState& current, std::mt19937_64& rng, ResetMode mode) {
  ResetResult result;
  WalkerState& s = result.state;
  if (mode == ResetMode::episode_start) {
    s.x = current.x;
    s.y = current.y;
    s.yaw = current.yaw;
  } else {
    std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
    s.yaw = heading(rng);
    result.time_cost = kResetCost;
  }
  std::uniform_real_distribution<double> jitter(-kResetTiltJitter, kResetTiltJitter);
  s.roll = jitter(rng);
  s.pitch = jitter(rng);
  s.prev_roll = s.roll;
  s.prev_pitch = s.pitch;
  return result;
}

std::array<double, kFrameDim> observation_frame(const WalkerState& state) {
  std::array<double, kFrameDim> frame{};
  frame[0] = state.roll;
  frame[1] = state.pitch;
  frame[2] = std::sin(state.phase);
  frame[3] = std::cos(state.phase);
  for (std::size_t j = 0; j < kActionDim; ++j) frame[4 + j] = state.prev_action[j];
  return frame;
}

void ObservationHistory::reset(const WalkerState& state) {
  frames_.assign(kHistoryLength, observation_frame(state));
}

void ObservationHistory::push(const WalkerState& state) {
  if (frames_.empty()) {
    reset(state);
    return;
  }
  frames_.pop_front();
  frames_.push_back(observation_frame(state));
}

std::vector<double> ObservationHistory::observe() const { return env::observe(frames_); }

std::vector<double> observe(const std::deque<std::array<double, kFrameDim>>& history) {
  require(!history.empty(), "observation history is empty");
  std::vector<double> obs;
  obs.reserve(kObsDim);
  // Younger episodes are padded with their earliest frame.
  for (std::size_t k = history.size(); k < kHistoryLength; ++k) {
    obs.insert(obs.end(), history.front().begin(), history.front().end());
  }
  const std::size_t skip = history.size() > kHistoryLength ? history.size() - kHistoryLength : 0;
  for (std::size_t k = skip; k < history.size(); ++k) {
    obs.insert(obs.end(), history[k].begin(), history[k].end());
  }
  return obs;
}

}  // namespace safewalk::env
