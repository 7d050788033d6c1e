#include "gbridge/core/path_io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gbridge {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

struct CsvWriter {
  std::ostream& os;

  void operator()(const PiecewiseConstantPath& p) const {
    os << "time,state\n";
    os << format_double(0.0) << ',' << p.states().front() << '\n';
    for (std::size_t k = 0; k < p.jump_count(); ++k)
      os << format_double(p.jump_times()[k]) << ',' << p.states()[k + 1] << '\n';
    os << format_double(p.horizon()) << ',' << p.terminal_state() << '\n';
  }

  void operator()(const GridPath& p) const {
    os << "time";
    for (Eigen::Index j = 0; j < p.values().front().size(); ++j) os << ",x" << j;
    os << '\n';
    for (std::size_t i = 0; i < p.times().size(); ++i) {
      os << format_double(p.times()[i]);
      for (Eigen::Index j = 0; j < p.values()[i].size(); ++j)
        os << ',' << format_double(p.values()[i][j]);
      os << '\n';
    }
  }
};

}  // namespace

void write_path_csv(std::ostream& os, const Path& path) { std::visit(CsvWriter{os}, path); }

std::string path_csv(const Path& path) {
  std::ostringstream os;
  write_path_csv(os, path);
  return os.str();
}

nlohmann::json path_envelope(const WeightedPath& wp) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return format_double(v);
  };
  nlohmann::json j;
  j["log_psi"] = num(wp.log_psi);
  j["log_constant"] = num(wp.log_constant);
  j["sup_V"] = num(wp.sup_V);
  j["endpoint_hit"] = wp.endpoint_hit;
  j["valid"] = wp.valid;
  if (!wp.valid) j["invalid_reason"] = wp.invalid_reason;
  j["seed"] = wp.seed;
  j["replicate"] = wp.replicate;
  return j;
}

PiecewiseConstantPath read_jump_path_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("time,state", 0) != 0)
    throw std::invalid_argument("jump path CSV: missing 'time,state' header");
  std::vector<double> times;
  std::vector<std::int64_t> states;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("jump path CSV: malformed row");
    times.push_back(std::stod(line.substr(0, comma)));
    states.push_back(std::stoll(line.substr(comma + 1)));
  }
  if (times.size() < 2) throw std::invalid_argument("jump path CSV: need start and end rows");
  const double T = times.back();
  std::vector<double> jumps(times.begin() + 1, times.end() - 1);
  std::vector<std::int64_t> st(states.begin(), states.end() - 1);
  return PiecewiseConstantPath(T, std::move(jumps), std::move(st));
}

}  // namespace gbridge
