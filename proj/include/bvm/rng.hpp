#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace bvm {

/// One splitmix64 step; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Structured substream seed: root seed plus a path of stream indices
/// (experiment tag, grid point, replication, ...). Distinct paths give
/// statistically independent generators.
std::uint64_t derive_seed(std::uint64_t root,
                          std::initializer_list<std::uint64_t> path) noexcept;

/// xoshiro256** generator with the variate generators the library needs.
/// All transforms are implemented here (not via <random> distributions) so
/// that streams are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double exponential() noexcept;
  double normal() noexcept;
  /// Gamma(shape, 1). Shape < 1 uses Gamma(shape + 1) * U^(1/shape).
  double gamma(double shape) noexcept;
  double beta(double a, double b) noexcept;
  std::int64_t binomial(std::int64_t trials, double p) noexcept;

 private:
  std::uint64_t s_[4];
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Walker alias table for O(1) categorical draws.
class AliasTable {
 public:
  explicit AliasTable(std::span<const double> weights);

  std::size_t draw(Rng& rng) const noexcept;
  std::size_t size() const noexcept { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

/// Multinomial(trials, probs) by sequential conditional binomials.
std::vector<std::int64_t> multinomial(std::int64_t trials,
                                      std::span<const double> probs, Rng& rng);

/// Binomial(trials, p) quantile at u in (0, 1), by a walk from the mode.
std::int64_t binomial_quantile(std::int64_t trials, double p, double u);

/// Multinomial by inverting each conditional binomial with one uniform per
/// cell (the last cell takes the remainder). Draws are monotone in the
/// uniforms, so one stream couples samples of different sizes.
std::vector<std::int64_t> multinomial_inversion(std::int64_t trials,
                                                std::span<const double> probs, Rng& rng);

}  // namespace bvm
