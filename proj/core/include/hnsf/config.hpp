// Run configuration: one JSON document covering model sizes, source
// constants, loss resolutions, optimizer settings and the seed. Defaults
// reproduce the reference constants (alpha 0.1, sigma 0.003, 8 harmonics,
// 31 taps, the three standard loss resolutions).

#ifndef HNSF_CONFIG_HPP_
#define HNSF_CONFIG_HPP_

#include <cstdint>
#include <string>

#include "hnsf/model.hpp"

namespace hnsf {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::uint64_t seed = 42;

  static RunConfig defaults() { return RunConfig{}; }
};

// Parses a JSON document; absent keys keep their defaults, unknown keys are
// rejected so typos surface.
RunConfig run_config_from_json(const std::string& text);
RunConfig run_config_from_file(const std::string& path);

// Full materialization of every field, single line.
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace hnsf

#endif  // HNSF_CONFIG_HPP_
