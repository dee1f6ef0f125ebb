#include "equifl/rng.hpp"

#include <cmath>
#include <sstream>

#include "equifl/errors.hpp"

namespace equifl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t a, std::uint64_t b) {
  // FNV-1a over the tag, then splitmix rounds to decorrelate the qualifiers.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t s = splitmix64(master ^ h);
  s = splitmix64(s ^ a);
  return splitmix64(s ^ b);
}

double DetRng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double DetRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

std::uint64_t DetRng::below(std::uint64_t n) {
  if (n == 0) throw InputError("DetRng::below: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double DetRng::normal() {
  double u1;
  do {
    u1 = uniform01();
  } while (u1 <= 0.0);
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double DetRng::gamma(double shape) {
  if (!(shape > 0.0)) throw InputError("gamma shape must be positive");
  if (shape < 1.0) {
    double u;
    do {
      u = uniform01();
    } while (u <= 0.0);
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::vector<double> DetRng::dirichlet(const std::vector<double>& alphas) {
  if (alphas.empty()) throw InputError("dirichlet needs at least one concentration");
  std::vector<double> draws(alphas.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    draws[i] = gamma(alphas[i]);
    total += draws[i];
  }
  if (total <= 0.0) {
    // All gammas underflowed; fall back to the uniform simplex point.
    const double p = 1.0 / static_cast<double>(alphas.size());
    for (double& d : draws) d = p;
    return draws;
  }
  for (double& d : draws) d /= total;
  return draws;
}

std::string DetRng::save_state() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void DetRng::restore_state(const std::string& text) {
  std::istringstream in(text);
  in >> engine_;
  if (!in) throw InputError("DetRng::restore_state: malformed state text");
}

}  // namespace equifl
