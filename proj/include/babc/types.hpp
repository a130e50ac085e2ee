#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string_view>

namespace babc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Point sets are stored column-wise: a p x n matrix holds n points of dimension p.
using PointSet = Eigen::MatrixXd;

using Rng = std::mt19937_64;

/// Axis-aligned parameter box.
struct Box {
  Vector lower;
  Vector upper;

  Box() = default;
  Box(Vector lo, Vector hi);

  [[nodiscard]] int dim() const { return static_cast<int>(lower.size()); }
  [[nodiscard]] Vector width() const { return upper - lower; }
  [[nodiscard]] double volume() const;
  [[nodiscard]] bool contains(const Vector& x, double slack = 0.0) const;
  [[nodiscard]] Vector clamp(const Vector& x) const;
  [[nodiscard]] Vector sample(Rng& rng) const;
  [[nodiscard]] PointSet sample(Rng& rng, int n) const;
};

/// Uniform prior on a box; every benchmark here uses one.
struct UniformPrior {
  Box box;

  [[nodiscard]] double density(const Vector& x) const;
  [[nodiscard]] double log_density(const Vector& x) const;
};

/// Deterministic child stream derived from a root seed, a name and an index.
/// Streams with different (name, index) pairs are independent for practical purposes,
/// so adding consumers to one stream never perturbs another.
Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

/// Draws a fresh 64-bit seed from an existing generator.
std::uint64_t draw_seed(Rng& rng);

}  // namespace babc
