#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace equifl {

// Derives an independent stream seed from a master seed, a short tag and up
// to two integer qualifiers. Stable across platforms and compilers.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0);

// mt19937_64 with hand-rolled variate generation. std:: distributions are
// implementation-defined, which would make seeded outputs differ between
// standard libraries; every draw here is pinned down to the bit.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01();
  double uniform(double lo, double hi);

  // Unbiased integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Standard normal (Box-Muller, cosine branch).
  double normal();

  // Gamma(shape, 1) via Marsaglia-Tsang, with the boost trick for shape < 1.
  double gamma(double shape);

  std::vector<double> dirichlet(const std::vector<double>& alphas);

  // In-place Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // Engine state round-trips through text (checkpoint-friendly).
  std::string save_state() const;
  void restore_state(const std::string& text);

  bool operator==(const DetRng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace equifl
