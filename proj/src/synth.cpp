#include "equifl/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "equifl/errors.hpp"
#include "equifl/rng.hpp"

namespace equifl::synth {

namespace {

constexpr std::array<const char*, 4> kWorkclass = {"Private", "SelfEmployed",
                                                   "Government", "Other"};
constexpr std::array<const char*, 6> kOccupation = {"Executive", "Professional",
                                                    "Craft",     "Sales",
                                                    "Clerical",  "Service"};

// Category mixes per sex; occupation is the main proxy channel.
constexpr std::array<double, 4> kWorkclassMale = {0.72, 0.12, 0.12, 0.04};
constexpr std::array<double, 4> kWorkclassFemale = {0.70, 0.06, 0.17, 0.07};
constexpr std::array<double, 6> kOccupationMale = {0.20, 0.14, 0.24, 0.12, 0.07, 0.23};
constexpr std::array<double, 6> kOccupationFemale = {0.08, 0.13, 0.03, 0.12, 0.30, 0.34};

// Log-odds contributions of the categorical values.
constexpr std::array<double, 4> kWorkclassShift = {0.0, 0.3, 0.1, -0.4};
constexpr std::array<double, 6> kOccupationShift = {1.0, 0.8, 0.15, 0.3, -0.15, -0.7};

template <std::size_t N>
std::size_t pick(equifl::DetRng& rng, const std::array<double, N>& probs) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return N - 1;
}

double clamp_round(double v, double lo, double hi) {
  return std::clamp(std::round(v), lo, hi);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::string income_csv(std::size_t rows, std::uint64_t seed) {
  if (rows == 0) throw InputError("income_csv: rows must be positive");
  DetRng rng(seed);
  std::ostringstream out;
  out << "age,education_num,hours_per_week,workclass,occupation,sex,income\n";
  for (std::size_t i = 0; i < rows; ++i) {
    const bool male = rng.uniform01() < 0.67;
    const double age = clamp_round(38.6 + 13.2 * rng.normal(), 17, 80);
    const double edu = clamp_round(10.1 + 2.6 * rng.normal(), 1, 16);
    const double hours = clamp_round(40.4 + 12.3 * rng.normal(), 1, 99);
    const std::size_t wc = pick(rng, male ? kWorkclassMale : kWorkclassFemale);
    const std::size_t occ = pick(rng, male ? kOccupationMale : kOccupationFemale);
    const double z = -2.1 + 0.45 * (age - 38.6) / 13.2 + 0.85 * (edu - 10.1) / 2.6 +
                     0.55 * (hours - 40.4) / 12.3 + kWorkclassShift[wc] +
                     kOccupationShift[occ] + (male ? 0.95 : 0.0);
    const bool positive = rng.uniform01() < sigmoid(z);
    out << static_cast<int>(age) << ',' << static_cast<int>(edu) << ','
        << static_cast<int>(hours) << ',' << kWorkclass[wc] << ',' << kOccupation[occ]
        << ',' << (male ? "Male" : "Female") << ',' << (positive ? ">50K" : "<=50K")
        << '\n';
  }
  return out.str();
}

void write_income_csv(const std::string& path, std::size_t rows, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << income_csv(rows, seed);
}

data::DatasetSchema income_schema() {
  data::DatasetSchema schema;
  schema.features = {{"age", data::FeatureKind::kNumeric},
                     {"education_num", data::FeatureKind::kNumeric},
                     {"hours_per_week", data::FeatureKind::kNumeric},
                     {"workclass", data::FeatureKind::kCategorical},
                     {"occupation", data::FeatureKind::kCategorical}};
  schema.sensitive_column = "sex";
  schema.sensitive_values = {"Male", "Female"};
  schema.label_column = "income";
  schema.positive_label = ">50K";
  schema.include_sensitive_feature = false;
  return schema;
}

}  // namespace equifl::synth
