#include "babc/output.hpp"

#include "babc/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace babc {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

void header(std::ostream& out, const std::string& prefix, int dim, const std::string& suffix = "") {
  out << prefix;
  for (int d = 0; d < dim; ++d) out << (prefix.empty() && d == 0 ? "" : ",") << "theta" << d + 1;
  out << suffix << '\n';
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

json hyper_json(const GpHyper& h) {
  return {{"noise_var", num(h.noise_var)}, {"signal_var", num(h.signal_var)}, {"lengthscales", vec(h.lengthscales)}};
}

json interval_json(const std::vector<Interval>& iv) {
  json a = json::array();
  for (const auto& i : iv) a.push_back({{"mean", num(i.mean)}, {"lower", num(i.lower)}, {"upper", num(i.upper)}});
  return a;
}

}  // namespace

void write_samples_csv(const std::string& path, const PointSet& samples) {
  auto out = open_out(path);
  header(out, "", static_cast<int>(samples.rows()));
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    for (Eigen::Index d = 0; d < samples.rows(); ++d) out << (d ? "," : "") << samples(d, j);
    out << '\n';
  }
}

PointSet read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  const auto dim = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') + 1);
  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Eigen::Index k = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(path + ": bad number '" + cell + "'");
      }
      ++k;
    }
    if (k != dim) throw ConfigError(path + ": ragged row " + std::to_string(rows + 2));
    ++rows;
  }
  PointSet out(dim, rows);
  for (Eigen::Index j = 0; j < rows; ++j) {
    for (Eigen::Index d = 0; d < dim; ++d) out(d, j) = values[static_cast<std::size_t>(j * dim + d)];
  }
  return out;
}

std::string uq_to_json_text(const std::vector<UqCheckpoint>& checkpoints) {
  json a = json::array();
  for (const auto& c : checkpoints) {
    a.push_back({{"iteration", c.iteration},
                 {"backend", c.backend},
                 {"median_ess", num(c.median_ess)},
                 {"expectation", interval_json(c.moments.expectation)},
                 {"variance", interval_json(c.moments.variance)},
                 {"warnings", c.warnings}});
  }
  return a.dump(2);
}

void write_run(const RunRecord& r, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path root(dir);
  const int p = r.data.dim();

  json m;
  m["simulator"] = r.simulator;
  m["epsilon"] = num(r.epsilon);
  m["initial_size"] = r.initial_size;
  m["dataset_size"] = r.data.size();
  m["config"] = json::parse(config_to_json_text(r.config));
  m["initial_hyper"] = hyper_json(r.initial_hyper);
  m["final_hyper"] = hyper_json(r.final_hyper);
  m["initial_tv"] = num(r.initial_tv);
  m["final_tv"] = num(r.final_tv);
  m["posterior_acceptance"] = num(r.posterior_acceptance);
  m["warnings"] = r.warnings;
  m["aborted"] = r.aborted;
  if (r.aborted) m["abort_reason"] = r.abort_reason;
  json hyper = json::array();
  for (const auto& it : r.iterations) {
    hyper.push_back({{"iteration", it.iteration}, {"map_improved", it.map_improved}, {"clipped", it.clipped},
                     {"hyper", hyper_json(it.hyper)}});
  }
  m["iterations"] = hyper;
  open_out(root / "manifest.json") << m.dump(2) << '\n';

  {
    auto out = open_out(root / "dataset.csv");
    header(out, "", p, ",delta");
    for (int j = 0; j < r.data.size(); ++j) {
      for (int d = 0; d < p; ++d) out << (d ? "," : "") << r.data.points(d, j);
      out << ',' << r.data.values[j] << '\n';
    }
  }
  {
    auto out = open_out(root / "tv_trace.csv");
    out << "iteration,tv\n";
    for (const auto& it : r.iterations) {
      if (std::isfinite(it.tv)) out << it.iteration << ',' << it.tv << '\n';
    }
  }
  {
    auto out = open_out(root / "batch_log.csv");
    header(out, "iteration,", p, ",acq_value");
    for (const auto& it : r.iterations) {
      for (Eigen::Index j = 0; j < it.batch.cols(); ++j) {
        out << it.iteration;
        for (int d = 0; d < p; ++d) out << ',' << it.batch(d, j);
        out << ',' << (j < it.acq_values.size() ? it.acq_values[j] : std::numeric_limits<double>::quiet_NaN())
            << '\n';
      }
    }
  }
  if (r.posterior_samples.cols() > 0) write_samples_csv((root / "posterior_samples.csv").string(), r.posterior_samples);
  if (!r.uq.empty()) open_out(root / "uq_summary.json") << uq_to_json_text(r.uq) << '\n';
  {
    auto out = open_out(root / "timing.csv");
    out << "iteration,seconds\n";
    for (const auto& it : r.iterations) out << it.iteration << ',' << it.seconds << '\n';
    out << "total," << r.seconds << '\n';
  }
}

void write_repeat(const RepeatSummary& s, const std::string& dir, bool write_runs) {
  fs::create_directories(dir);
  const fs::path root(dir);
  {
    auto out = open_out(root / "tv_summary.csv");
    out << "iteration,median,q05,q95\n";
    out << 0 << ',' << s.initial_median << ",,\n";
    for (std::size_t k = 0; k < s.iterations.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      out << s.iterations[k] << ',' << s.median[i] << ',' << s.q05[i] << ',' << s.q95[i] << '\n';
    }
  }
  {
    auto out = open_out(root / "final_tv.csv");
    out << "run,initial_tv,final_tv\n";
    for (Eigen::Index k = 0; k < s.final_tvs.size(); ++k) {
      out << k << ',' << (k < s.initial_tvs.size() ? s.initial_tvs[k] : std::numeric_limits<double>::quiet_NaN())
          << ',' << s.final_tvs[k] << '\n';
    }
  }
  json m = {{"runs", s.runs.size()},
            {"aborted", s.aborted},
            {"initial_median_tv", num(s.initial_median)},
            {"final_median_tv", num(s.final_median)}};
  open_out(root / "summary.json") << m.dump(2) << '\n';
  if (write_runs) {
    for (std::size_t k = 0; k < s.runs.size(); ++k) write_run(s.runs[k], (root / ("run" + std::to_string(k))).string());
  }
}

void write_truth(const GroundTruth& t, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path root(dir);
  if (t.on_grid) {
    auto out = open_out(root / "truth_grid.csv");
    header(out, "", t.dim, ",probability");
    for (Eigen::Index j = 0; j < t.grid.points.cols(); ++j) {
      for (int d = 0; d < t.dim; ++d) out << (d ? "," : "") << t.grid.points(d, j);
      out << ',' << t.grid.values[j] << '\n';
    }
  } else {
    write_samples_csv((root / "truth_samples.csv").string(), t.samples);
  }
  json m = {{"dim", t.dim}, {"on_grid", t.on_grid}, {"acceptance_rate", num(t.acceptance_rate)}, {"warnings", t.warnings}};
  open_out(root / "truth.json") << m.dump(2) << '\n';
}

}  // namespace babc
