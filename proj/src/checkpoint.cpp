#include "equifl/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "equifl/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "parameter checkpoints assume a little-endian host");

namespace equifl::checkpoint {

void save_params(const nn::ModelParams& params, const std::string& base_path,
                 const nlohmann::json& extra) {
  const std::filesystem::path base(base_path);
  nlohmann::json manifest;
  manifest["format"] = "f64le";
  manifest["layout"] = "per layer: weights row-major, then bias";
  manifest["bin"] = base.filename().string() + ".bin";
  nlohmann::json layers = nlohmann::json::array();
  for (const nn::LayerParams& layer : params.layers) {
    layers.push_back({{"out", layer.weights.rows()}, {"in", layer.weights.cols()}});
  }
  manifest["layers"] = layers;
  if (!extra.is_null()) manifest["provenance"] = extra;

  std::ofstream json_out(base_path + ".json", std::ios::binary);
  if (!json_out) throw IoError("cannot write '" + base_path + ".json'");
  json_out << manifest.dump(2) << '\n';

  std::ofstream bin_out(base_path + ".bin", std::ios::binary);
  if (!bin_out) throw IoError("cannot write '" + base_path + ".bin'");
  std::vector<double> buffer;
  for (const nn::LayerParams& layer : params.layers) {
    buffer.clear();
    buffer.reserve(static_cast<std::size_t>(layer.weights.size() + layer.bias.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        buffer.push_back(layer.weights(r, c));
      }
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) buffer.push_back(layer.bias[i]);
    bin_out.write(reinterpret_cast<const char*>(buffer.data()),
                  static_cast<std::streamsize>(buffer.size() * sizeof(double)));
  }
  if (!bin_out) throw IoError("short write to '" + base_path + ".bin'");
}

nn::ModelParams load_params(const std::string& base_path) {
  std::ifstream json_in(base_path + ".json");
  if (!json_in) throw IoError("cannot open '" + base_path + ".json'");
  nlohmann::json manifest;
  json_in >> manifest;
  if (manifest.value("format", "") != "f64le") {
    throw IoError("unsupported checkpoint format in '" + base_path + ".json'");
  }

  const std::filesystem::path bin_path =
      std::filesystem::path(base_path).parent_path() /
      manifest.at("bin").get<std::string>();
  std::ifstream bin_in(bin_path, std::ios::binary);
  if (!bin_in) throw IoError("cannot open '" + bin_path.string() + "'");

  nn::ModelParams params;
  for (const nlohmann::json& layer : manifest.at("layers")) {
    const Eigen::Index out = layer.at("out").get<Eigen::Index>();
    const Eigen::Index in = layer.at("in").get<Eigen::Index>();
    nn::LayerParams lp;
    lp.weights.resize(out, in);
    lp.bias.resize(out);
    std::vector<double> buffer(static_cast<std::size_t>(out * in + out));
    bin_in.read(reinterpret_cast<char*>(buffer.data()),
                static_cast<std::streamsize>(buffer.size() * sizeof(double)));
    if (!bin_in) throw IoError("checkpoint binary '" + bin_path.string() + "' is truncated");
    std::size_t at = 0;
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) lp.weights(r, c) = buffer[at++];
    }
    for (Eigen::Index i = 0; i < out; ++i) lp.bias[i] = buffer[at++];
    params.layers.push_back(std::move(lp));
  }
  return params;
}

}  // namespace equifl::checkpoint
