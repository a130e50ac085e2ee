#include "babc/simulators.hpp"

#include "babc/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace babc {

namespace {

constexpr double kToyNoiseSd = 0.5;
constexpr double kToyEpsilon = 1.0;
constexpr double kToyHalfWidth = 16.0;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

ToyKind parse_toy_kind(const std::string& name) {
  const std::string n = lower(name);
  if (n == "gaussian") return ToyKind::Gaussian;
  if (n == "bimodal") return ToyKind::Bimodal;
  if (n == "banana") return ToyKind::Banana;
  if (n == "multimodal") return ToyKind::Multimodal;
  throw ConfigError("unknown toy kind '" + name + "'");
}

std::string to_string(ToyKind kind) {
  switch (kind) {
    case ToyKind::Gaussian: return "gaussian";
    case ToyKind::Bimodal: return "bimodal";
    case ToyKind::Banana: return "banana";
    case ToyKind::Multimodal: return "multimodal";
  }
  return "?";
}

double toy2d_mean(ToyKind kind, const Vector& theta) {
  if (theta.size() != 2) throw DomainError("toy2d_mean: theta must be 2-dimensional");
  const double x = theta[0];
  const double y = theta[1];
  switch (kind) {
    case ToyKind::Gaussian: {
      // S^{-1} for S = [[4, 2], [2, 4]] is [[1, -0.5], [-0.5, 1]] / 3.
      return 0.5 * (x * x - x * y + y * y) / 3.0;
    }
    case ToyKind::Bimodal: {
      const double d1 = (x + 6.0) * (x + 6.0) + (y - 4.0) * (y - 4.0);
      const double d2 = (x - 6.0) * (x - 6.0) + (y + 4.0) * (y + 4.0);
      return std::min(d1, d2) / 8.0;
    }
    case ToyKind::Banana: {
      const double u = x / 4.0;
      const double v = y + 0.2 * x * x - 4.0;
      return 0.5 * (u * u + v * v);
    }
    case ToyKind::Multimodal: {
      const double q = std::numbers::pi / 4.0;
      return (x * x + y * y) / 50.0 + 1.5 * (1.0 - std::cos(q * x) * std::cos(q * y));
    }
  }
  return 0.0;
}

double toy2d_discrepancy(ToyKind kind, const Vector& theta, Rng& rng, double noise_sd) {
  if (theta.size() != 2 || (theta.array().abs() > kToyHalfWidth).any() || !theta.allFinite()) {
    throw DomainError("toy2d_discrepancy: theta outside [-16, 16]^2");
  }
  const double f = toy2d_mean(kind, theta);
  if (noise_sd == 0.0) return f;
  std::normal_distribution<double> noise(0.0, noise_sd);
  return f + noise(rng);
}

Simulator make_toy2d(ToyKind kind) {
  Simulator s;
  s.name = to_string(kind);
  s.bounds = Box(Vector::Constant(2, -kToyHalfWidth), Vector::Constant(2, kToyHalfWidth));
  s.epsilon = kToyEpsilon;
  s.noise_sd = kToyNoiseSd;
  switch (kind) {
    case ToyKind::Gaussian: s.theta_true = Vector::Zero(2); break;
    case ToyKind::Bimodal: s.theta_true = (Vector(2) << -6.0, 4.0).finished(); break;
    case ToyKind::Banana: s.theta_true = (Vector(2) << 0.0, 4.0).finished(); break;
    case ToyKind::Multimodal: s.theta_true = Vector::Zero(2); break;
  }
  s.mean_fn = [kind](const Vector& t) { return toy2d_mean(kind, t); };
  s.discrepancy = [kind](const Vector& t, Rng& rng) { return toy2d_discrepancy(kind, t, rng, kToyNoiseSd); };
  return s;
}

Simulator make_demo1d() {
  Simulator s;
  s.name = "demo1d";
  s.bounds = Box(Vector::Constant(1, 0.0), Vector::Constant(1, 4.0));
  s.epsilon = 0.5;
  s.noise_sd = 0.3;
  s.theta_true = Vector::Constant(1, 1.7);
  s.mean_fn = [](const Vector& t) { return 3.0 * (t[0] - 1.7) * (t[0] - 1.7); };
  s.discrepancy = [f = s.mean_fn, box = s.bounds](const Vector& t, Rng& rng) {
    if (!box.contains(t)) throw DomainError("demo1d: theta outside [0, 4]");
    std::normal_distribution<double> noise(0.0, 0.3);
    return f(t) + noise(rng);
  };
  return s;
}

// ---------------------------------------------------------------------------

void GkParams::validate() const {
  if (!(b > 0.0)) throw DomainError("GkParams: b must be > 0");
  if (!(k > -0.5)) throw DomainError("GkParams: k must be > -0.5");
  if (!std::isfinite(a) || !std::isfinite(g) || !std::isfinite(c)) throw DomainError("GkParams: non-finite value");
}

GkParams GkParams::from_vector(const Vector& theta) {
  if (theta.size() != 4) throw DomainError("GkParams: expected (a, b, g, k)");
  GkParams p;
  p.a = theta[0];
  p.b = theta[1];
  p.g = theta[2];
  p.k = theta[3];
  return p;
}

double gk_quantile(double z, const GkParams& p) {
  return p.a + p.b * (1.0 + p.c * std::tanh(0.5 * p.g * z)) * std::pow(1.0 + z * z, p.k) * z;
}

Vector gk_sample(const GkParams& params, int n, Rng& rng) {
  params.validate();
  if (n < 1) throw DomainError("gk_sample: n must be >= 1");
  // z ~ N(0, 1) directly; equal in distribution to Phi^{-1}(u) with u uniform.
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out(n);
  for (int i = 0; i < n; ++i) out[i] = gk_quantile(normal(rng), params);
  return out;
}

Vector octiles(Vector data) {
  const Eigen::Index n = data.size();
  if (n < 8) throw DomainError("octiles: need at least 8 values");
  Vector out(7);
  double* first = data.data();
  double* last = first + n;
  // Ascending probabilities let each nth_element work on the remaining upper part.
  double* lo_bound = first;
  for (int i = 1; i <= 7; ++i) {
    const double pos = (static_cast<double>(i) / 8.0) * static_cast<double>(n - 1);
    const auto k = static_cast<Eigen::Index>(std::floor(pos));
    const double frac = pos - static_cast<double>(k);
    std::nth_element(lo_bound, first + k, last);
    const double vk = first[k];
    double vk1 = vk;
    if (frac > 0.0 && k + 1 < n) vk1 = *std::min_element(first + k + 1, last);
    out[i - 1] = vk + frac * (vk1 - vk);
    lo_bound = first + k;
  }
  return out;
}

Vector gk_summaries(const Vector& data) {
  if (data.size() < 8) throw DomainError("gk_summaries: need at least 8 values");
  const Vector l = octiles(data);
  const double sb = l[5] - l[1];
  if (!(sb > 0.0)) throw DomainError("gk_summaries: degenerate data (zero octile spread)");
  Vector s(4);
  s[0] = l[3];
  s[1] = sb;
  s[2] = (l[5] + l[1] - 2.0 * l[3]) / sb;
  s[3] = (l[6] - l[4] + l[2] - l[0]) / sb;
  return s;
}

void MahalanobisSpec::validate() const {
  if (weight.rows() != observed.size() || weight.cols() != observed.size()) {
    throw DomainError("MahalanobisSpec: weight matrix dimension mismatch");
  }
  if (!weight.isApprox(weight.transpose(), 1e-10)) throw DomainError("MahalanobisSpec: weight not symmetric");
  Eigen::LLT<Matrix> llt(weight);
  if (llt.info() != Eigen::Success) throw DomainError("MahalanobisSpec: weight not positive definite");
}

double mahalanobis_discrepancy(const MahalanobisSpec& spec, const Vector& summaries) {
  if (summaries.size() != spec.observed.size()) throw DomainError("mahalanobis_discrepancy: dimension mismatch");
  const Vector d = spec.observed - summaries;
  return std::sqrt(std::max(0.0, d.dot(spec.weight * d)));
}

Matrix estimate_weight_matrix(const std::function<Vector(Rng&)>& model, int replications, Rng& rng) {
  const Vector first = model(rng);
  const Eigen::Index d = first.size();
  if (replications < d + 2) throw DomainError("estimate_weight_matrix: need at least d + 2 replications");
  Matrix draws(d, replications);
  draws.col(0) = first;
  for (int r = 1; r < replications; ++r) draws.col(r) = model(rng);
  const Vector mean = draws.rowwise().mean();
  const Matrix centred = draws.colwise() - mean;
  Matrix cov = centred * centred.transpose() / static_cast<double>(replications - 1);
  cov = 0.5 * (cov + cov.transpose());
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov.diagonal().array() += 1e-8 * cov.trace() / static_cast<double>(d);
    llt.compute(cov);
    if (llt.info() != Eigen::Success) throw NumericalError("estimate_weight_matrix: singular summary covariance");
  }
  Matrix w = llt.solve(Matrix::Identity(d, d));
  return 0.5 * (w + w.transpose());
}

GaussianityDiagnostic gaussianity_diagnostic(const std::function<double(Rng&)>& draw, int replications, Rng& rng) {
  if (replications < 30) throw DomainError("gaussianity_diagnostic: need at least 30 replications");
  Vector x(replications);
  for (int r = 0; r < replications; ++r) x[r] = draw(rng);
  GaussianityDiagnostic out;
  out.mean = x.mean();
  const Eigen::ArrayXd c = x.array() - out.mean;
  const double m2 = (c * c).mean();
  out.sd = std::sqrt(m2);
  out.histogram.assign(20, 0);
  if (!(m2 > 0.0)) {
    out.degenerate = true;
    out.histogram[0] = replications;
    return out;
  }
  out.skewness = (c * c * c).mean() / std::pow(m2, 1.5);
  out.excess_kurtosis = (c * c * c * c).mean() / (m2 * m2) - 3.0;
  const double lo = x.minCoeff();
  const double width = (x.maxCoeff() - lo) / 20.0;
  for (int r = 0; r < replications; ++r) {
    const int bin = std::min(19, static_cast<int>((x[r] - lo) / width));
    ++out.histogram[bin];
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Box gk_box() {
  return Box((Vector(4) << 2.0, 0.0, 1.0, 0.0).finished(), (Vector(4) << 4.0, 3.0, 4.0, 2.0).finished());
}

Vector gk_theta_true() { return (Vector(4) << 3.0, 1.0, 2.0, 0.5).finished(); }

// The prior box touches b = 0, where the data collapse to a point; simulate just inside it.
GkParams gk_params_in_box(const Vector& theta) {
  GkParams p = GkParams::from_vector(theta);
  p.b = std::max(p.b, 1e-6);
  return p;
}

GkProblem build_gk_problem(const GkSetup& setup) {
  GkProblem prob;
  prob.setup = setup;
  prob.bounds = gk_box();
  prob.theta_true = gk_theta_true();
  const GkParams truth = GkParams::from_vector(prob.theta_true);

  Rng obs_rng(setup.observed_seed);
  prob.spec.observed = gk_summaries(gk_sample(truth, setup.observed_size, obs_rng));

  Rng w_rng = substream(setup.setup_seed, "gk-weight");
  prob.spec.weight = estimate_weight_matrix(
      [&](Rng& r) { return gk_summaries(gk_sample(truth, setup.observed_size, r)); }, setup.weight_replications,
      w_rng);

  Rng pilot_rng = substream(setup.setup_seed, "gk-pilot");
  std::vector<double> deltas(setup.pilot_draws);
  for (int i = 0; i < setup.pilot_draws; ++i) {
    const Vector th = prob.bounds.sample(pilot_rng);
    deltas[i] = mahalanobis_discrepancy(
        prob.spec, gk_summaries(gk_sample(gk_params_in_box(th), setup.observed_size, pilot_rng)));
  }
  std::sort(deltas.begin(), deltas.end());
  const double pos = setup.epsilon_quantile * static_cast<double>(deltas.size() - 1);
  const auto k = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(k);
  prob.epsilon = deltas[k] + frac * (deltas[std::min(k + 1, deltas.size() - 1)] - deltas[k]);
  return prob;
}

}  // namespace

const GkProblem& gk_problem(const GkSetup& setup) {
  static std::mutex mu;
  static std::map<std::tuple<int, std::uint64_t, std::uint64_t, int, int, double>, GkProblem> cache;
  const auto key = std::make_tuple(setup.observed_size, setup.observed_seed, setup.setup_seed,
                                   setup.weight_replications, setup.pilot_draws, setup.epsilon_quantile);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, build_gk_problem(setup)).first;
  return it->second;
}

Simulator make_gk(const GkSetup& setup) {
  const GkProblem& prob = gk_problem(setup);
  Simulator s;
  s.name = "gk";
  s.bounds = prob.bounds;
  s.theta_true = prob.theta_true;
  s.epsilon = prob.epsilon;
  const MahalanobisSpec spec = prob.spec;
  const int n = setup.observed_size;
  const Box box = prob.bounds;
  s.discrepancy = [spec, n, box](const Vector& theta, Rng& rng) {
    if (!box.contains(theta, 1e-12)) throw DomainError("gk: theta outside the prior box");
    return mahalanobis_discrepancy(spec, gk_summaries(gk_sample(gk_params_in_box(theta), n, rng)));
  };
  return s;
}

Simulator make_simulator(const std::string& name) {
  const std::string n = lower(name);
  if (n == "demo1d") return make_demo1d();
  if (n == "gk" || n == "g-and-k") return make_gk();
  return make_toy2d(parse_toy_kind(n));
}

std::vector<std::string> simulator_names() { return {"gaussian", "bimodal", "banana", "multimodal", "demo1d", "gk"}; }

}  // namespace babc
