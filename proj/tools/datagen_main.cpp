#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "equifl/errors.hpp"
#include "equifl/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic census-income CSV"};
  std::size_t rows = 16000;
  std::uint64_t seed = 7;
  std::string out_path = "income.csv";
  app.add_option("--rows", rows, "number of rows");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--out", out_path, "output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    equifl::synth::write_income_csv(out_path, rows, seed);
    std::cout << "wrote " << rows << " rows to " << out_path << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
