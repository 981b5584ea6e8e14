#include "safewalk/harness/csv.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace safewalk::harness {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw std::runtime_error("bad number '" + s + "'");
  return v;
}

std::uint64_t to_count(const std::string& s) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw std::runtime_error("bad integer '" + s + "'");
  return v;
}

void expect_header(std::istream& in, const char* header) {
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw std::runtime_error("unexpected CSV header '" + line + "'");
  }
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string curves_row(const tasks::RunRecord& r) {
  std::ostringstream os;
  os << r.run << ',' << r.seed << ',' << r.episode << ',' << r.task << ',' << r.steps << ','
     << format_number(r.episode_return) << ',' << r.falls << ',' << r.out_of_workspace << ','
     << format_number(r.sim_time) << ',' << format_number(r.lambda) << ',' << format_number(r.alpha);
  return os.str();
}

void write_curves(std::ostream& out, const std::vector<tasks::RunRecord>& records, bool header) {
  if (header) out << kCurvesHeader << '\n';
  for (const auto& r : records) out << curves_row(r) << '\n';
}

std::vector<tasks::RunRecord> read_curves(std::istream& in) {
  expect_header(in, kCurvesHeader);
  std::vector<tasks::RunRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 11) throw std::runtime_error("curves row has " + std::to_string(f.size()) + " fields");
    tasks::RunRecord r;
    r.run = f[0];
    r.seed = to_count(f[1]);
    r.episode = to_count(f[2]);
    r.task = f[3];
    r.steps = to_count(f[4]);
    r.episode_return = to_double(f[5]);
    r.falls = to_count(f[6]);
    r.out_of_workspace = to_count(f[7]);
    r.sim_time = to_double(f[8]);
    r.lambda = to_double(f[9]);
    r.alpha = to_double(f[10]);
    out.push_back(r);
  }
  return out;
}

std::string summary_row(const SummaryRow& r) {
  std::ostringstream os;
  os << r.ablation << ',' << r.workspace << ',' << r.scheduler << ',' << r.safety << ',' << r.metric << ','
     << format_number(r.mean) << ',' << format_number(r.min) << ',' << format_number(r.max) << ',' << r.seeds;
  return os.str();
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) out << summary_row(r) << '\n';
}

std::vector<SummaryRow> read_summary(std::istream& in) {
  expect_header(in, kSummaryHeader);
  std::vector<SummaryRow> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 9) throw std::runtime_error("summary row has " + std::to_string(f.size()) + " fields");
    out.push_back({f[0], f[1], f[2], f[3], f[4], to_double(f[5]), to_double(f[6]), to_double(f[7]), to_count(f[8])});
  }
  return out;
}

SummaryRow aggregate(std::vector<double> values) {
  SummaryRow r;
  r.seeds = values.size();
  if (values.empty()) return r;
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  r.min = *std::min_element(values.begin(), values.end());
  r.max = *std::max_element(values.begin(), values.end());
  return r;
}

}  // namespace safewalk::harness
