#include "safewalk/harness/ablation.hpp"

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>

#include "safewalk/error.hpp"

namespace safewalk::harness {

namespace fs = std::filesystem;

namespace {

const char* const kMetrics[] = {"falls", "out_of_workspace", "final_return", "sim_time", "steps"};

double metric_of(const JobResult& r, const std::string& metric) {
  if (metric == "falls") return static_cast<double>(r.counters.falls);
  if (metric == "out_of_workspace") return static_cast<double>(r.counters.out_of_workspace);
  if (metric == "final_return") return final_return(r.records);
  if (metric == "sim_time") return r.counters.sim_time;
  if (metric == "steps") return static_cast<double>(r.counters.steps);
  throw ContractViolation("unknown metric '" + metric + "'");
}

std::string run_file(const AblationJob& job) {
  std::string name = job.label + "_seed" + std::to_string(job.session.seed) + ".csv";
  for (char& c : name) {
    if (c == ':' || c == '/' || c == ' ') c = '_';
  }
  return name;
}

AblationJob make_job(const std::string& label, const tasks::SessionConfig& session) {
  return {label, session.workspace.name(), tasks::to_string(session.scheduler), session.safety.label(), session};
}

}  // namespace

std::vector<double> AblationResult::values(const std::string& label, const std::string& metric) const {
  std::vector<double> out;
  for (const auto& r : runs) {
    if (r.job.label == label) out.push_back(metric_of(r, metric));
  }
  return out;
}

double final_return(const std::vector<tasks::RunRecord>& records, double fraction) {
  std::size_t total = 0;
  for (const auto& r : records) total += r.steps;
  const double start = (1.0 - fraction) * static_cast<double>(total);
  double sum = 0.0;
  std::size_t count = 0;
  std::size_t done = 0;
  for (const auto& r : records) {
    done += r.steps;
    if (static_cast<double>(done) > start) {
      sum += r.episode_return;
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

std::vector<JobResult> run_jobs(const std::vector<AblationJob>& jobs, const std::string& out_dir) {
  if (!out_dir.empty()) fs::create_directories(fs::path(out_dir) / "runs");
  std::vector<JobResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const long n = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long k = 0; k < n; ++k) {
    try {
      tasks::TrainingSession session(jobs[k].session, jobs[k].label);
      session.run();
      results[k] = {jobs[k], session.counters(), session.records()};
      if (!out_dir.empty()) {
        std::ofstream out(fs::path(out_dir) / "runs" / run_file(jobs[k]));
        write_curves(out, results[k].records);
      }
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::vector<SummaryRow> summarize(const std::string& ablation, const std::vector<JobResult>& runs) {
  std::vector<std::string> labels;
  for (const auto& r : runs) {
    if (std::find(labels.begin(), labels.end(), r.job.label) == labels.end()) labels.push_back(r.job.label);
  }
  std::vector<SummaryRow> rows;
  for (const auto& label : labels) {
    const JobResult* first = nullptr;
    for (const auto& r : runs) {
      if (r.job.label == label) {
        first = &r;
        break;
      }
    }
    for (const char* metric : kMetrics) {
      std::vector<double> v;
      for (const auto& r : runs) {
        if (r.job.label == label) v.push_back(metric_of(r, metric));
      }
      SummaryRow row = aggregate(v);
      row.ablation = ablation;
      row.workspace = first->job.workspace;
      row.scheduler = first->job.scheduler;
      row.safety = first->job.safety;
      row.metric = metric;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_outputs(const std::string& out_dir, const AblationResult& result) {
  fs::create_directories(out_dir);
  std::ofstream curves(fs::path(out_dir) / "curves.csv");
  curves << kCurvesHeader << '\n';
  for (const auto& r : result.runs) write_curves(curves, r.records, false);
  std::ofstream summary(fs::path(out_dir) / "summary.csv");
  write_summary(summary, result.summary);
  if (!curves || !summary) throw std::runtime_error("failed to write ablation outputs to " + out_dir);
}

std::string oob_label(const env::Workspace& workspace, tasks::SchedulerMode scheduler) {
  return workspace.name() + "/" + tasks::to_string(scheduler);
}

std::vector<tasks::SafetyMode> safety_modes() {
  return {tasks::SafetyMode::lagrangian(), tasks::SafetyMode::fixed(0.0), tasks::SafetyMode::fixed(1.0),
          tasks::SafetyMode::fixed(100.0)};
}

AblationResult run_ablation_oob(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  std::vector<AblationJob> jobs;
  for (const auto& ws : {env::Workspace::large(), env::Workspace::medium(), env::Workspace::small()}) {
    for (auto scheduler : {tasks::SchedulerMode::center, tasks::SchedulerMode::single_task}) {
      for (std::uint64_t seed : config.seeds) {
        tasks::SessionConfig s = config.session_for(seed);
        s.terrain = env::Terrain::flat();
        s.tasks = tasks::TaskSet::two_task();
        s.workspace = ws;
        s.scheduler = scheduler;
        jobs.push_back(make_job(oob_label(ws, scheduler), s));
      }
    }
  }
  AblationResult result;
  result.runs = run_jobs(jobs, out_dir);
  result.summary = summarize("oob", result.runs);
  if (!out_dir.empty()) write_outputs(out_dir, result);
  return result;
}

AblationResult run_ablation_safety(const ExperimentConfig& config, const std::string& out_dir) {
  config.validate();
  std::vector<AblationJob> jobs;
  for (const auto& mode : safety_modes()) {
    for (std::uint64_t seed : config.seeds) {
      tasks::SessionConfig s = config.session_for(seed);
      s.terrain = env::Terrain::flat();
      s.safety = mode;
      jobs.push_back(make_job(mode.label(), s));
    }
  }
  AblationResult result;
  result.runs = run_jobs(jobs, out_dir);
  result.summary = summarize("safety", result.runs);
  if (!out_dir.empty()) write_outputs(out_dir, result);
  return result;
}

}  // namespace safewalk::harness
