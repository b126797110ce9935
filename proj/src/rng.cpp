#include "bvm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bvm/errors.hpp"

namespace bvm {
namespace {

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

inline std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t root,
                          std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t state = root ^ 0x243F6A8885A308D3ULL;
  std::uint64_t h = splitmix64(state);
  for (std::uint64_t p : path) {
    state = h ^ (p * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
    h = splitmix64(state);
  }
  return h;
}

Rng::Rng(std::uint64_t seed) noexcept {
  std::uint64_t state = seed;
  for (auto& word : s_) word = splitmix64(state);
}

std::uint64_t Rng::next_u64() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * kTwoPow53Inv;
}

double Rng::exponential() noexcept { return -std::log(uniform()); }

double Rng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * f;
  has_spare_ = true;
  return u * f;
}

double Rng::gamma(double shape) noexcept {
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform(), 1.0 / shape);
  }
  // Marsaglia & Tsang squeeze method.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::beta(double a, double b) noexcept {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

std::int64_t Rng::binomial(std::int64_t trials, double p) noexcept {
  // Knuth's order-statistic splitting until the mean is small, then inversion.
  std::int64_t offset = 0;
  for (;;) {
    if (trials <= 0 || p <= 0.0) return offset;
    if (p >= 1.0) return offset + trials;
    if (p > 0.5) return offset + trials - binomial(trials, 1.0 - p);
    if (static_cast<double>(trials) * p < 20.0) {
      const double s = p / (1.0 - p);
      const double a = static_cast<double>(trials + 1) * s;
      const double r0 = std::exp(static_cast<double>(trials) * std::log1p(-p));
      for (;;) {
        double u = uniform();
        double r = r0;
        std::int64_t x = 0;
        while (u > r && x <= trials) {
          u -= r;
          ++x;
          r *= a / static_cast<double>(x) - s;
        }
        if (x <= trials) return offset + x;
      }
    }
    const std::int64_t a = 1 + trials / 2;
    const std::int64_t b = trials + 1 - a;
    const double x = beta(static_cast<double>(a), static_cast<double>(b));
    if (x >= p) {
      trials = a - 1;
      p = p / x;
    } else {
      offset += a;
      trials = b - 1;
      p = (p - x) / (1.0 - x);
    }
  }
}

AliasTable::AliasTable(std::span<const double> weights)
    : prob_(weights.size()), alias_(weights.size()) {
  const std::size_t n = weights.size();
  if (n == 0) throw ParameterError("alias table needs at least one weight");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw ParameterError("alias table weights must have positive sum");
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] < 0.0) throw ParameterError("alias table weights must be non-negative");
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::size_t i : large) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
  for (std::size_t i : small) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
}

std::size_t AliasTable::draw(Rng& rng) const noexcept {
  const std::size_t n = prob_.size();
  const std::size_t column = static_cast<std::size_t>(rng.next_u64() % n);
  return rng.uniform() < prob_[column] ? column : alias_[column];
}

std::vector<std::int64_t> multinomial(std::int64_t trials,
                                      std::span<const double> probs, Rng& rng) {
  if (trials < 0) throw ParameterError("multinomial: negative number of trials");
  std::vector<std::int64_t> counts(probs.size(), 0);
  if (probs.empty()) return counts;
  double remaining_mass = 0.0;
  for (double p : probs) remaining_mass += p;
  std::int64_t remaining = trials;
  for (std::size_t i = 0; i + 1 < probs.size() && remaining > 0; ++i) {
    double p = remaining_mass > 0.0 ? probs[i] / remaining_mass : 1.0;
    p = std::clamp(p, 0.0, 1.0);
    counts[i] = rng.binomial(remaining, p);
    remaining -= counts[i];
    remaining_mass -= probs[i];
  }
  counts.back() += remaining;
  return counts;
}

std::int64_t binomial_quantile(std::int64_t trials, double p, double u) {
  if (trials < 0) throw ParameterError("binomial_quantile: negative number of trials");
  if (!(u > 0.0 && u < 1.0)) throw ParameterError("binomial_quantile: u must lie in (0, 1)");
  if (trials == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  const double n = static_cast<double>(trials);
  const double odds = p / (1.0 - p);
  const auto mode = std::min<std::int64_t>(
      trials, static_cast<std::int64_t>(std::floor((n + 1.0) * p)));
  // Weights relative to the mode; terms below 1e-18 of it are dropped.
  constexpr double kNegligible = 1e-18;
  std::vector<double> below;  // w(mode - 1), w(mode - 2), ...
  double below_sum = 0.0;
  for (std::int64_t x = mode; x > 0; --x) {
    const double prev = below.empty() ? 1.0 : below.back();
    const double next = prev * static_cast<double>(x) / (static_cast<double>(trials - x + 1) * odds);
    if (next < kNegligible) break;
    below.push_back(next);
    below_sum += next;
  }
  std::vector<double> above;  // w(mode + 1), w(mode + 2), ...
  double above_sum = 0.0;
  for (std::int64_t x = mode + 1; x <= trials; ++x) {
    const double prev = above.empty() ? 1.0 : above.back();
    const double next = prev * static_cast<double>(trials - x + 1) / static_cast<double>(x) * odds;
    if (next < kNegligible) break;
    above.push_back(next);
    above_sum += next;
  }
  const double total = below_sum + 1.0 + above_sum;
  const double target = u * total;
  // Cumulative weight through the mode.
  double c = below_sum + 1.0;
  if (target <= c) {
    std::int64_t x = mode;
    double w = 1.0;
    for (std::size_t i = 0; i < below.size(); ++i) {
      if (c - w < target) return x;
      c -= w;
      w = below[i];
      --x;
    }
    return x;
  }
  for (std::size_t i = 0; i < above.size(); ++i) {
    c += above[i];
    if (c >= target) return mode + 1 + static_cast<std::int64_t>(i);
  }
  return mode + static_cast<std::int64_t>(above.size());
}

std::vector<std::int64_t> multinomial_inversion(std::int64_t trials,
                                                std::span<const double> probs, Rng& rng) {
  if (trials < 0) throw ParameterError("multinomial: negative number of trials");
  std::vector<std::int64_t> counts(probs.size(), 0);
  if (probs.empty()) return counts;
  double remaining_mass = 0.0;
  for (double p : probs) remaining_mass += p;
  std::int64_t remaining = trials;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    const double u = rng.uniform();
    double p = remaining_mass > 0.0 ? probs[i] / remaining_mass : 1.0;
    p = std::clamp(p, 0.0, 1.0);
    counts[i] = binomial_quantile(remaining, p, u);
    remaining -= counts[i];
    remaining_mass -= probs[i];
  }
  counts.back() += remaining;
  return counts;
}

}  // namespace bvm
