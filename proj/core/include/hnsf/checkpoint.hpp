// Checkpoint container: 8-byte magic "NSFCKPT1", a little-endian u64 with
// the manifest length, a JSON manifest (parameter names, shapes, byte
// offsets into the payload), then the raw little-endian float64 payload.
// Optimizer state lives in the same container under the "optim.adam."
// name prefix.

#ifndef HNSF_CHECKPOINT_HPP_
#define HNSF_CHECKPOINT_HPP_

#include <string>

#include "hnsf/nn.hpp"
#include "hnsf/optim.hpp"

namespace hnsf {

inline constexpr char kCheckpointMagic[8] = {'N', 'S', 'F', 'C',
                                             'K', 'P', 'T', '1'};

// meta_json is embedded verbatim in the manifest under "meta"; pass "{}"
// when there is nothing to record.
void save_checkpoint(const std::string& path, const nn::ParameterStore& params,
                     const nn::Adam* optim, const std::string& meta_json);

// Loads values into an already-constructed store; every registered
// parameter must be present with a matching shape. Returns the meta JSON.
std::string load_checkpoint(const std::string& path, nn::ParameterStore& params,
                            nn::Adam* optim);

// Reads only the embedded meta JSON.
std::string read_checkpoint_meta(const std::string& path);

}  // namespace hnsf

#endif  // HNSF_CHECKPOINT_HPP_
