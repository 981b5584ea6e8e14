#include "safewalk/harness/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace safewalk::harness {

namespace {

constexpr char kMagic[8] = {'S', 'A', 'F', 'E', 'W', 'A', 'L', 'K'};
// Guards against absurd lengths in corrupted files before allocating.
constexpr std::uint64_t kMaxLength = std::uint64_t{1} << 34;

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) bytes_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void doubles(std::span<const double> v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * k);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> doubles() {
    const std::uint64_t n = u64();
    need(n * 8);
    std::vector<double> v(n);
    for (double& x : v) x = f64();
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw CheckpointError("checkpoint payload is truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void write_net(Writer& w, const approx::Mlp& net) {
  w.u64(net.layer_sizes().size());
  for (std::size_t s : net.layer_sizes()) w.u64(s);
  w.doubles(net.params());
}

approx::Mlp read_net(Reader& r) {
  const std::uint64_t layers = r.u64();
  if (layers < 2 || layers > 64) throw CheckpointError("checkpoint network has an invalid layer count");
  std::vector<std::size_t> sizes(layers);
  for (auto& s : sizes) {
    s = r.u64();
    if (s == 0 || s > (1u << 20)) throw CheckpointError("checkpoint network has an invalid layer size");
  }
  approx::Mlp net(sizes);
  const auto params = r.doubles();
  if (params.size() != net.num_params()) throw CheckpointError("checkpoint network parameter count mismatch");
  std::copy(params.begin(), params.end(), net.params().begin());
  return net;
}

void write_adam(Writer& w, const approx::AdamState& s) {
  w.doubles(s.first_moment);
  w.doubles(s.second_moment);
  w.u64(s.step_count);
  w.f64(s.learning_rate);
  w.f64(s.beta1);
  w.f64(s.beta2);
  w.f64(s.epsilon);
}

approx::AdamState read_adam(Reader& r) {
  approx::AdamState s;
  s.first_moment = r.doubles();
  s.second_moment = r.doubles();
  s.step_count = r.u64();
  s.learning_rate = r.f64();
  s.beta1 = r.f64();
  s.beta2 = r.f64();
  s.epsilon = r.f64();
  return s;
}

template <class Engine>
std::string engine_text(const Engine& e) {
  std::ostringstream os;
  os << e;
  return os.str();
}

template <class Engine>
Engine engine_from(const std::string& text) {
  Engine e;
  std::istringstream is(text);
  is >> e;
  if (!is) throw CheckpointError("checkpoint rng state is malformed");
  return e;
}

void write_learner(Writer& w, const sac::LearnerState& s) {
  w.u64(s.actor.action_dim());
  write_net(w, s.actor.trunk());
  write_net(w, s.q1);
  write_net(w, s.q2);
  write_net(w, s.q1_target);
  write_net(w, s.q2_target);
  write_net(w, s.s_critic);
  write_net(w, s.s_target);
  w.f64(s.lambda);
  w.f64(s.log_alpha);
  write_adam(w, s.actor_opt);
  write_adam(w, s.q1_opt);
  write_adam(w, s.q2_opt);
  write_adam(w, s.s_opt);
  w.str(engine_text(s.rng));
}

sac::LearnerState read_learner(Reader& r) {
  sac::LearnerState s;
  const std::uint64_t action_dim = r.u64();
  approx::Mlp trunk = read_net(r);
  if (action_dim == 0 || trunk.output_size() != 2 * action_dim) {
    throw CheckpointError("checkpoint actor does not match its action dimension");
  }
  s.actor = approx::GaussianPolicyHead(std::move(trunk), action_dim);
  s.q1 = read_net(r);
  s.q2 = read_net(r);
  s.q1_target = read_net(r);
  s.q2_target = read_net(r);
  s.s_critic = read_net(r);
  s.s_target = read_net(r);
  s.lambda = r.f64();
  s.log_alpha = r.f64();
  s.actor_opt = read_adam(r);
  s.q1_opt = read_adam(r);
  s.q2_opt = read_adam(r);
  s.s_opt = read_adam(r);
  s.rng = engine_from<std::mt19937_64>(r.str());
  return s;
}

std::uint32_t crc_of(const std::string& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto* data = reinterpret_cast<const Bytef*>(bytes.data());
  std::size_t left = bytes.size();
  while (left > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<approx::GaussianPolicyHead> Checkpoint::policies() const {
  std::vector<approx::GaussianPolicyHead> out;
  for (const auto& l : learners) out.push_back(l.actor);
  return out;
}

bool Checkpoint::operator==(const Checkpoint& o) const {
  return to_ini(config) == to_ini(o.config) && seed == o.seed && counters.steps == o.counters.steps &&
         counters.episodes == o.counters.episodes && counters.falls == o.counters.falls &&
         counters.out_of_workspace == o.counters.out_of_workspace && counters.sim_time == o.counters.sim_time &&
         task_names == o.task_names && learners == o.learners && env_rng == o.env_rng &&
         sampler_rngs == o.sampler_rngs;
}

Checkpoint make_checkpoint(const ExperimentConfig& config, const tasks::TrainingSession& session) {
  Checkpoint c;
  c.config = config;
  c.seed = session.config().seed;
  c.counters = session.counters();
  for (const auto& t : session.config().tasks.tasks()) c.task_names.push_back(t.name);
  for (const auto& l : session.learners()) c.learners.push_back(l.state());
  c.env_rng = engine_text(session.env_rng());
  for (const auto& b : session.buffers()) c.sampler_rngs.push_back(engine_text(b.sampler()));
  return c;
}

Checkpoint untrained_checkpoint(const ExperimentConfig& config, std::uint64_t seed) {
  tasks::SessionConfig s = config.session_for(seed);
  s.steps_per_task = 0;
  tasks::TrainingSession session(s);
  return make_checkpoint(config, session);
}

void save_checkpoint(const Checkpoint& c, std::ostream& out) {
  Writer w;
  w.str(to_ini(c.config));
  w.u64(c.seed);
  w.u64(c.counters.episodes);
  w.u64(c.counters.steps);
  w.u64(c.counters.falls);
  w.u64(c.counters.out_of_workspace);
  w.f64(c.counters.sim_time);
  w.u64(c.learners.size());
  for (std::size_t k = 0; k < c.learners.size(); ++k) {
    w.str(c.task_names.at(k));
    write_learner(w, c.learners[k]);
  }
  w.str(c.env_rng);
  w.u64(c.sampler_rngs.size());
  for (const auto& s : c.sampler_rngs) w.str(s);

  Writer head;
  head.u32(kCheckpointVersion);
  head.u64(w.bytes().size());
  Writer tail;
  tail.u32(crc_of(w.bytes()));
  out.write(kMagic, sizeof kMagic);
  out << head.bytes() << w.bytes() << tail.bytes();
  if (!out) throw CheckpointError("failed to write checkpoint");
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open '" + path + "' for writing");
  save_checkpoint(checkpoint, out);
}

Checkpoint load_checkpoint(std::istream& in) {
  char magic[8] = {};
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw CheckpointError("not a safewalk checkpoint (bad magic)");
  }
  std::string head(12, '\0');
  if (!in.read(head.data(), head.size())) throw CheckpointError("checkpoint header is truncated");
  Reader hr(head);
  const std::uint32_t version = hr.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t length = hr.u64();
  if (length > kMaxLength) throw CheckpointError("checkpoint payload length is implausible");
  std::string payload(length, '\0');
  if (!in.read(payload.data(), static_cast<std::streamsize>(length))) {
    throw CheckpointError("checkpoint payload is truncated");
  }
  std::string tail(4, '\0');
  if (!in.read(tail.data(), 4)) throw CheckpointError("checkpoint checksum is missing");
  if (Reader(tail).u32() != crc_of(payload)) throw CheckpointError("checkpoint checksum mismatch (file is corrupted)");

  Reader r(payload);
  Checkpoint c;
  try {
    std::istringstream ini(r.str());
    c.config = parse_config(ini);
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config echo is invalid: ") + e.what());
  }
  c.seed = r.u64();
  c.counters.episodes = r.u64();
  c.counters.steps = r.u64();
  c.counters.falls = r.u64();
  c.counters.out_of_workspace = r.u64();
  c.counters.sim_time = r.f64();
  const std::uint64_t n = r.u64();
  if (n != c.config.session.tasks.size()) throw CheckpointError("checkpoint task count does not match its config");
  for (std::uint64_t k = 0; k < n; ++k) {
    c.task_names.push_back(r.str());
    if (c.task_names.back() != c.config.session.tasks[k].name) {
      throw CheckpointError("checkpoint task '" + c.task_names.back() + "' does not match its config");
    }
    c.learners.push_back(read_learner(r));
    const auto& actor = c.learners.back().actor;
    if (actor.obs_dim() != env::kObsDim || actor.action_dim() != env::kActionDim) {
      throw CheckpointError("checkpoint actor dimensions do not match the walker");
    }
  }
  c.env_rng = r.str();
  const std::uint64_t samplers = r.u64();
  if (samplers != n) throw CheckpointError("checkpoint sampler count does not match its task count");
  for (std::uint64_t k = 0; k < samplers; ++k) c.sampler_rngs.push_back(r.str());
  if (!r.done()) throw CheckpointError("checkpoint payload has trailing bytes");
  return c;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in);
}

}  // namespace safewalk::harness
