#pragma once

// CSV schemas. Column sets and order are part of the file contract.

#include <iosfwd>
#include <string>
#include <vector>

#include "safewalk/tasks/session.hpp"

namespace safewalk::harness {

/// curves.csv: one row per episode.
inline constexpr const char* kCurvesHeader =
    "run,seed,episode,task,steps,episode_return,falls,out_of_workspace,sim_time,lambda,alpha";

/// summary.csv: one row per (setting, metric), aggregated over seeds.
inline constexpr const char* kSummaryHeader =
    "ablation,workspace,scheduler,safety,metric,mean,min,max,seeds";

struct SummaryRow {
  std::string ablation;
  std::string workspace;
  std::string scheduler;
  std::string safety;
  std::string metric;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t seeds = 0;

  bool operator==(const SummaryRow&) const = default;
};

/// Shortest text that parses back to the same double.
std::string format_number(double v);

std::string curves_row(const tasks::RunRecord& r);
void write_curves(std::ostream& out, const std::vector<tasks::RunRecord>& records, bool header = true);
/// Throws std::runtime_error on a header or field mismatch.
std::vector<tasks::RunRecord> read_curves(std::istream& in);

std::string summary_row(const SummaryRow& r);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary(std::istream& in);

/// mean / min / max of values (all zero for an empty list).
SummaryRow aggregate(std::vector<double> values);

}  // namespace safewalk::harness
