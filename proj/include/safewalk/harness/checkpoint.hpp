#pragma once

// Checkpoint file layout (all integers and doubles little-endian):
//
//   bytes 0..7   magic "SAFEWALK"
//   u32          format version
//   u64          payload length in bytes
//   payload
//   u32          CRC-32 of the payload
//
// Payload fields in order: config echo (INI text), run seed, session counters,
// task count, then per task its name and learner state, then the rng cursors
// (environment stream and one replay sampler per task) in their standard text
// form. Strings are a u64 length followed by bytes. A network is its layer
// sizes (u64 count, u64 each) followed by its flat parameter vector (u64
// count, f64 each) in the same order as Mlp::params().

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "safewalk/harness/config.hpp"
#include "safewalk/sac/learner.hpp"
#include "safewalk/tasks/session.hpp"

namespace safewalk::harness {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  tasks::SessionCounters counters;
  std::vector<std::string> task_names;
  std::vector<sac::LearnerState> learners;
  std::string env_rng;
  std::vector<std::string> sampler_rngs;

  /// Policies in task-set order.
  std::vector<approx::GaussianPolicyHead> policies() const;
  bool operator==(const Checkpoint&) const;
};

Checkpoint make_checkpoint(const ExperimentConfig& config, const tasks::TrainingSession& session);
/// Checkpoint of freshly initialised learners (what a zero-budget run produces).
Checkpoint untrained_checkpoint(const ExperimentConfig& config, std::uint64_t seed);

void save_checkpoint(const Checkpoint& checkpoint, std::ostream& out);
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
/// Throws CheckpointError on bad magic, unsupported version, truncation or a CRC mismatch.
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace safewalk::harness
