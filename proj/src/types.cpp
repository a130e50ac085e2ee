#include "babc/types.hpp"

#include "babc/error.hpp"

#include <cmath>
#include <limits>

namespace babc {

Box::Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw DomainError("Box: bounds must be nonempty and of equal length");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i])) throw DomainError("Box: lower bound must be below upper bound");
  }
}

double Box::volume() const { return width().prod(); }

bool Box::contains(const Vector& x, double slack) const {
  if (x.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] - slack && x[i] <= upper[i] + slack)) return false;
  }
  return true;
}

Vector Box::clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

Vector Box::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector x(lower.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = lower[i] + unif(rng) * (upper[i] - lower[i]);
  return x;
}

PointSet Box::sample(Rng& rng, int n) const {
  PointSet out(lower.size(), n);
  for (int j = 0; j < n; ++j) out.col(j) = sample(rng);
  return out;
}

double UniformPrior::density(const Vector& x) const {
  return box.contains(x) ? 1.0 / box.volume() : 0.0;
}

double UniformPrior::log_density(const Vector& x) const {
  return box.contains(x) ? -std::log(box.volume()) : -std::numeric_limits<double>::infinity();
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  std::uint64_t state = seed ^ fnv1a(name);
  state ^= splitmix64(state) + index * 0xd1342543de82ef95ULL;
  std::uint32_t words[8];
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t v = splitmix64(state);
    words[2 * i] = static_cast<std::uint32_t>(v);
    words[2 * i + 1] = static_cast<std::uint32_t>(v >> 32);
  }
  std::seed_seq seq(std::begin(words), std::end(words));
  return Rng(seq);
}

std::uint64_t draw_seed(Rng& rng) { return rng(); }

}  // namespace babc
