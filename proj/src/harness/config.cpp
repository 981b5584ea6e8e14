#include "safewalk/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "safewalk/error.hpp"

namespace safewalk::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    if (t == "nan" || t == "-nan" || t == "NaN") return std::nan("");
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<std::uint64_t> parse_list(const std::string& key, const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_count(key, item));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list");
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ",";
    out += std::to_string(v[k]);
  }
  return out;
}

struct Entry {
  std::string help;
  std::function<void(ExperimentConfig&, const std::string& key, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Wraps domain parsing errors so the diagnostic always names the key.
template <class F>
auto guarded(F f) {
  return [f](ExperimentConfig& c, const std::string& key, const std::string& v) {
    try {
      f(c, key, v);
    } catch (const ContractViolation& e) {
      throw ConfigError(key + ": " + e.what());
    }
  };
}

#define SW_DOUBLE(field, help)                                                                  \
  Entry {                                                                                       \
    help, [](ExperimentConfig& c, const std::string& k, const std::string& v) {                 \
      c.field = parse_double(k, v);                                                             \
    },                                                                                          \
        [](const ExperimentConfig& c) { return format_double(c.field); }                        \
  }
#define SW_COUNT(field, help)                                                                   \
  Entry {                                                                                       \
    help, [](ExperimentConfig& c, const std::string& k, const std::string& v) {                 \
      c.field = parse_count(k, v);                                                              \
    },                                                                                          \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }                       \
  }
#define SW_BOOL(field, help)                                                                    \
  Entry {                                                                                       \
    help, [](ExperimentConfig& c, const std::string& k, const std::string& v) {                 \
      c.field = parse_bool(k, v);                                                               \
    },                                                                                          \
        [](const ExperimentConfig& c) { return std::string(c.field ? "true" : "false"); }       \
  }

const std::vector<std::pair<std::string, Entry>>& table() {
  static const std::vector<std::pair<std::string, Entry>> entries = {
      {"experiment.terrain",
       {"flat, mattress or doormat",
        guarded([](ExperimentConfig& c, const std::string&, const std::string& v) {
          c.session.terrain = env::Terrain::by_name(trim(v));
        }),
        [](const ExperimentConfig& c) { return c.session.terrain.name; }}},
      {"experiment.workspace",
       {"workspace size in metres, e.g. 5.0x2.0",
        guarded([](ExperimentConfig& c, const std::string&, const std::string& v) {
          c.session.workspace = env::Workspace::parse(trim(v));
        }),
        [](const ExperimentConfig& c) { return c.session.workspace.name(); }}},
      {"experiment.tasks",
       {"two-task or four-task",
        guarded([](ExperimentConfig& c, const std::string&, const std::string& v) {
          c.session.tasks = tasks::TaskSet::by_name(trim(v));
        }),
        [](const ExperimentConfig& c) { return c.session.tasks.name(); }}},
      {"experiment.scheduler",
       {"center, round_robin or single_task",
        guarded([](ExperimentConfig& c, const std::string&, const std::string& v) {
          c.session.scheduler = tasks::parse_scheduler(trim(v));
        }),
        [](const ExperimentConfig& c) { return tasks::to_string(c.session.scheduler); }}},
      {"experiment.safety",
       {"lagrangian, none or fixed_weight:<w>",
        guarded([](ExperimentConfig& c, const std::string&, const std::string& v) {
          c.session.safety = tasks::SafetyMode::parse(trim(v));
        }),
        [](const ExperimentConfig& c) { return c.session.safety.label(); }}},
      {"experiment.seeds",
       {"comma-separated run seeds",
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seeds = parse_list(k, v); },
        [](const ExperimentConfig& c) { return join(c.seeds); }}},
      {"experiment.steps_per_task", SW_COUNT(session.steps_per_task, "environment steps per task")},
      {"experiment.quick", SW_BOOL(quick, "divide steps_per_task by four")},
      {"experiment.horizon", SW_COUNT(session.horizon, "episode horizon in steps")},
      {"experiment.reward_scale", SW_DOUBLE(session.reward_scale, "multiplier on the task reward")},
      {"sac.hidden",
       {"hidden layer widths, comma-separated",
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          const auto widths = parse_list(k, v);
          c.session.sac.hidden.assign(widths.begin(), widths.end());
        },
        [](const ExperimentConfig& c) { return join(c.session.sac.hidden); }}},
      {"sac.learning_rate", SW_DOUBLE(session.sac.learning_rate, "Adam learning rate")},
      {"sac.gamma", SW_DOUBLE(session.sac.gamma, "discount")},
      {"sac.tau", SW_DOUBLE(session.sac.tau, "target blending rate")},
      {"sac.batch_size", SW_COUNT(session.sac.batch_size, "minibatch size")},
      {"sac.warmup", SW_COUNT(session.sac.warmup, "transitions before training starts")},
      {"sac.replay_capacity", SW_COUNT(session.sac.replay_capacity, "replay buffer capacity")},
      {"sac.gradient_steps", SW_COUNT(session.sac.gradient_steps, "gradient rounds per env step")},
      {"sac.lambda_init", SW_DOUBLE(session.sac.lambda_init, "initial Lagrange multiplier")},
      {"sac.lambda_lr", SW_DOUBLE(session.sac.lambda_lr, "multiplier learning rate")},
      {"sac.lambda_signal",
       {"stored_margin or safety_critic",
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          const std::string t = trim(v);
          if (t == "stored_margin") {
            c.session.sac.lambda_signal = sac::LambdaSignal::stored_margin;
          } else if (t == "safety_critic") {
            c.session.sac.lambda_signal = sac::LambdaSignal::safety_critic;
          } else {
            throw ConfigError(k + ": expected stored_margin or safety_critic, got '" + v + "'");
          }
        },
        [](const ExperimentConfig& c) {
          return std::string(c.session.sac.lambda_signal == sac::LambdaSignal::stored_margin
                                 ? "stored_margin"
                                 : "safety_critic");
        }}},
      {"sac.alpha_init", SW_DOUBLE(session.sac.alpha_init, "initial entropy temperature")},
      {"sac.alpha_lr", SW_DOUBLE(session.sac.alpha_lr, "temperature learning rate")},
      {"sac.target_entropy", SW_DOUBLE(session.sac.target_entropy, "nan means minus the action dimension")},
      {"env.noise", SW_BOOL(session.dynamics.noise, "tilt noise on or off")},
      {"env.stride_speed", SW_DOUBLE(session.dynamics.stride_speed, "m/s per unit stride command")},
      {"env.base_frequency", SW_DOUBLE(session.dynamics.base_frequency, "gait frequency in Hz")},
      {"env.turn_rate", SW_DOUBLE(session.dynamics.turn_rate, "rad/s per unit turn command")},
      {"env.tilt_decay", SW_DOUBLE(session.dynamics.tilt_decay, "per-step tilt decay")},
      {"env.speed_tilt_gain", SW_DOUBLE(session.dynamics.speed_tilt_gain, "pitch drive per m/s")},
      {"env.turn_tilt_gain", SW_DOUBLE(session.dynamics.turn_tilt_gain, "roll drive per rad/s")},
      {"env.jerk_tilt_gain", SW_DOUBLE(session.dynamics.jerk_tilt_gain, "tilt drive per unit command change")},
      {"env.balance_gain", SW_DOUBLE(session.dynamics.balance_gain, "pitch damping from the balance command")},
      {"env.snag_slip", SW_DOUBLE(session.dynamics.snag_slip, "slip multiplier while snagged")},
      {"env.snag_release", SW_DOUBLE(session.dynamics.snag_release, "command change that frees a snag")},
  };
  return entries;
}

#undef SW_DOUBLE
#undef SW_COUNT
#undef SW_BOOL

const Entry& lookup(const std::string& key) {
  for (const auto& [name, entry] : table()) {
    if (name == key) return entry;
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

}  // namespace

tasks::SessionConfig ExperimentConfig::session_for(std::uint64_t seed) const {
  tasks::SessionConfig s = session;
  s.seed = seed;
  s.steps_per_task = effective_steps_per_task();
  return s;
}

std::size_t ExperimentConfig::effective_steps_per_task() const {
  return quick ? session.steps_per_task / 4 : session.steps_per_task;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("experiment.seeds: at least one seed is required");
  const auto& s = session;
  auto check = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(std::string(key) + ": " + what);
  };
  check(s.horizon > 0, "experiment.horizon", "must be positive");
  check(s.reward_scale > 0.0 && std::isfinite(s.reward_scale), "experiment.reward_scale", "must be positive");
  check(!s.sac.hidden.empty(), "sac.hidden", "needs at least one layer");
  for (std::size_t h : s.sac.hidden) check(h > 0, "sac.hidden", "widths must be positive");
  check(s.sac.learning_rate > 0.0, "sac.learning_rate", "must be positive");
  check(s.sac.gamma >= 0.0 && s.sac.gamma <= 1.0, "sac.gamma", "must lie in [0, 1]");
  check(s.sac.tau >= 0.0 && s.sac.tau <= 1.0, "sac.tau", "must lie in [0, 1]");
  check(s.sac.batch_size > 0, "sac.batch_size", "must be positive");
  check(s.sac.gradient_steps > 0, "sac.gradient_steps", "must be positive");
  check(s.sac.replay_capacity >= s.sac.batch_size, "sac.replay_capacity", "must hold one batch");
  check(s.sac.lambda_init >= 0.0, "sac.lambda_init", "must be non-negative");
  check(s.sac.lambda_lr >= 0.0, "sac.lambda_lr", "must be non-negative");
  check(s.sac.alpha_init > 0.0, "sac.alpha_init", "must be positive");
  check(s.sac.alpha_lr >= 0.0, "sac.alpha_lr", "must be non-negative");
  check(s.dynamics.tilt_decay >= 0.0 && s.dynamics.tilt_decay <= 1.0, "env.tilt_decay", "must lie in [0, 1]");
  check(s.dynamics.stride_speed >= 0.0, "env.stride_speed", "must be non-negative");
  check(s.dynamics.base_frequency > 0.0, "env.base_frequency", "must be positive");
  try {
    s.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& [name, entry] : table()) out.push_back({name, entry.help});
    return out;
  }();
  return keys;
}

void set_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  lookup(key).set(config, key, value);
}

std::string get_value(const ExperimentConfig& config, const std::string& key) {
  return lookup(key).get(config);
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' must look like section.key=value");
  }
  set_value(config, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' must live inside a [section]");
    }
    for (const auto& [key, value] : body) set_value(config, section + "." + key, value.data());
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

std::string to_ini(const ExperimentConfig& config) {
  std::ostringstream os;
  std::string section;
  for (const auto& [name, entry] : table()) {
    const std::string sec = name.substr(0, name.find('.'));
    if (sec != section) {
      if (!section.empty()) os << "\n";
      os << "[" << sec << "]\n";
      section = sec;
    }
    os << "; " << entry.help << "\n" << name.substr(name.find('.') + 1) << " = " << entry.get(config) << "\n";
  }
  return os.str();
}

}  // namespace safewalk::harness
