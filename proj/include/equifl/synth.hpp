#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "equifl/data.hpp"

namespace equifl::synth {

// Deterministic census-style income table for experiments and tests: three
// numeric columns (age, education_num, hours_per_week), two categorical
// proxies (workclass, occupation), a binary sensitive column (sex) and a
// binary income label. Occupation mix and outcome rates are sex-dependent, so
// the label carries a group disparity that is partly recoverable from the
// proxies even when the sensitive column itself is excluded from features.
std::string income_csv(std::size_t rows, std::uint64_t seed);

void write_income_csv(const std::string& path, std::size_t rows, std::uint64_t seed);

// Schema matching income_csv's header (sensitive column excluded from the
// prediction features).
data::DatasetSchema income_schema();

}  // namespace equifl::synth
