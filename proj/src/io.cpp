#include "branchou/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "branchou/errors.hpp"

namespace branchou::io {

using nlohmann::ordered_json;

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_snapshot(const Trajectory& trajectory, std::ostream& out) {
  const int d = trajectory.snapshots.empty() ? 1 : trajectory.snapshots.front().dim();
  out << "run_id,generation,t,particle_index";
  for (int k = 0; k < d; ++k) out << ",coord_" << k;
  out << '\n';

  std::vector<const Generation*> order;
  for (const Generation& g : trajectory.snapshots) {
    if (g.dim() != d) throw ArgumentError("all snapshots of a trajectory must share one dimension");
    order.push_back(&g);
  }
  std::stable_sort(order.begin(), order.end(), [](const Generation* a, const Generation* b) {
    return a->m != b->m ? a->m < b->m : a->t < b->t;
  });

  std::string row;
  for (const Generation* g : order) {
    const std::string prefix = trajectory.run_id + ',' + std::to_string(g->m) + ',' + format_double(g->t) + ',';
    for (Eigen::Index i = 0; i < g->size(); ++i) {
      row = prefix;
      row += std::to_string(i + 1);
      for (int k = 0; k < d; ++k) {
        row += ',';
        row += format_double(g->positions(k, i));
      }
      row += '\n';
      out << row;
    }
  }
}

void write_snapshot(const Trajectory& trajectory, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_snapshot(trajectory, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

template <typename T>
bool parse_number(std::string_view s, T& value) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

Trajectory read_snapshot(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(source, line_no, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  const std::vector<std::string_view> fixed{"run_id", "generation", "t", "particle_index"};
  if (header.size() < 5 || !std::equal(fixed.begin(), fixed.end(), header.begin())) {
    throw ParseError(source, line_no, "unexpected header");
  }
  const int d = static_cast<int>(header.size() - 4);
  for (int k = 0; k < d; ++k) {
    if (header[static_cast<std::size_t>(4 + k)] != "coord_" + std::to_string(k)) {
      throw ParseError(source, line_no, "unexpected header column");
    }
  }

  Trajectory traj;
  std::vector<double> coords;  // current snapshot, particle-major
  int cur_m = -1;
  double cur_t = 0.0;
  auto flush = [&] {
    if (cur_m < 0) return;
    Generation g;
    g.m = cur_m;
    g.t = cur_t;
    g.positions = Eigen::Map<const Eigen::MatrixXd>(coords.data(), d, static_cast<Eigen::Index>(coords.size()) / d);
    traj.snapshots.push_back(std::move(g));
    coords.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw ParseError(source, line_no, "wrong number of columns");
    int m = 0;
    double t = 0.0;
    std::uint64_t index = 0;
    if (!parse_number(cells[1], m) || m < 0) throw ParseError(source, line_no, "bad generation");
    if (!parse_number(cells[2], t)) throw ParseError(source, line_no, "bad time");
    if (!parse_number(cells[3], index) || index == 0) throw ParseError(source, line_no, "bad particle_index");
    if (traj.snapshots.empty() && cur_m < 0) traj.run_id = std::string(cells[0]);
    else if (cells[0] != traj.run_id) throw ParseError(source, line_no, "run_id changes within the file");
    if (m != cur_m || t != cur_t) {
      flush();
      cur_m = m;
      cur_t = t;
    }
    if (index != coords.size() / static_cast<std::size_t>(d) + 1) {
      throw ParseError(source, line_no, "particle_index out of order");
    }
    for (int k = 0; k < d; ++k) {
      double x = 0.0;
      if (!parse_number(cells[static_cast<std::size_t>(4 + k)], x)) throw ParseError(source, line_no, "bad coordinate");
      coords.push_back(x);
    }
  }
  flush();
  for (const Generation& g : traj.snapshots) {
    if (static_cast<std::uint64_t>(g.size()) != population(g.m)) {
      throw ParseError(source, line_no, "snapshot at t=" + format_double(g.t) + " has the wrong particle count");
    }
  }
  return traj;
}

Trajectory read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_snapshot(in, path.string());
}

namespace {

ordered_json number(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

}  // namespace

std::string report_json(const ExperimentReport& report) {
  ordered_json j;
  j["experiment"] = report.experiment;
  ordered_json params = ordered_json::object();
  for (const auto& [key, value] : report.params) params[key] = number(value);
  j["params"] = params;
  j["replicates"] = report.replicates;
  ordered_json stats = ordered_json::array();
  for (const Statistic& s : report.statistics) {
    ordered_json e;
    e["name"] = s.name;
    e["observed"] = number(s.observed);
    e["theoretical"] = number(s.theoretical);
    e["se"] = number(s.se);
    e["z"] = number(s.z);
    e["pass"] = s.pass;
    stats.push_back(std::move(e));
  }
  j["statistics"] = stats;
  j["runtime_seconds"] = number(report.runtime_seconds);
  return j.dump(2) + '\n';
}

void write_report(const ExperimentReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << report_json(report);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(source + ": top level must be an object");

  RunConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "dim") cfg.params.dim = value.get<int>();
      else if (key == "b") cfg.params.b = value.get<double>();
      else if (key == "gamma") cfg.params.gamma = value.get<double>();
      else if (key == "horizon_m") cfg.params.horizon_m = value.get<int>();
      else if (key == "seed") cfg.params.seed = value.get<std::uint64_t>();
      else if (key == "start") {
        const auto v = value.get<std::vector<double>>();
        cfg.params.start = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      } else if (key == "bounded") {
        if (value.is_null()) continue;
        BoundedDrift f;
        for (const auto& [bk, bv] : value.items()) {
          if (bk == "lower") f.lower = bv.get<double>();
          else if (bk == "upper") f.upper = bv.get<double>();
          else if (bk == "function_id") f.function_id = bv.get<std::string>();
          else if (bk == "center") f.center = bv.get<double>();
          else if (bk == "amplitude") f.amplitude = bv.get<double>();
          else throw ConfigError(source + ": unknown key bounded." + bk);
        }
        cfg.params.bounded = f;
      } else if (key == "mode") {
        const auto mode = value.get<std::string>();
        if (mode == "exact") cfg.stepper.mode = StepperConfig::Mode::ExactGeneration;
        else if (mode == "euler") cfg.stepper.mode = StepperConfig::Mode::Euler;
        else throw ConfigError(source + ": mode must be \"exact\" or \"euler\"");
      } else if (key == "h") {
        cfg.stepper.h = value.get<double>();
      } else {
        throw ConfigError(source + ": unknown key " + key);
      }
    }
  } catch (const ordered_json::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  cfg.params.validate();
  cfg.stepper.validate();
  return cfg;
}

RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string config_json(const RunConfig& config) {
  const ModelParams& p = config.params;
  ordered_json j;
  j["dim"] = p.dim;
  j["b"] = p.b;
  j["gamma"] = p.gamma;
  j["horizon_m"] = p.horizon_m;
  j["seed"] = p.seed;
  j["start"] = std::vector<double>(p.start.data(), p.start.data() + p.start.size());
  if (p.bounded) {
    const BoundedDrift& f = *p.bounded;
    j["bounded"] = {{"lower", f.lower}, {"upper", f.upper}, {"function_id", f.function_id},
                    {"center", f.center}, {"amplitude", f.amplitude}};
  }
  j["mode"] = config.stepper.mode == StepperConfig::Mode::Euler ? "euler" : "exact";
  j["h"] = config.stepper.h;
  return j.dump(2) + '\n';
}

}  // namespace branchou::io
