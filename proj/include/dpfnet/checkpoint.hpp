#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dpfnet/model.hpp"
#include "dpfnet/optim.hpp"

namespace dpfnet {

// Binary named-tensor container:
//   magic "DPFN" | version u32 | entry count u32 | per entry:
//   name length u32, UTF-8 name, rank u32, extents u64 each, f32 LE values.
// All integers little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_named_tensors(const std::string& path, const std::vector<std::pair<std::string, const Tensor*>>& entries);
std::map<std::string, Tensor> load_named_tensors(const std::string& path);

// model + optimizer state + progress counters in one container;
// architecture fields ride along so checkpoints are self-describing
void save_checkpoint(const std::string& path, DpfnetParams& model, const AdamState& opt, int epochs_completed);

struct Checkpoint {
    DpfnetParams model;
    AdamState opt;
    int epochs_completed = 0;
};

// Rebuilds the model from the stored architecture. Throws DataError on
// magic/version problems, truncation, or missing/mismatched parameters.
Checkpoint load_checkpoint(const std::string& path);

// Loads parameters into an existing architecture, verifying that every
// expected parameter is present with the right shape.
void load_checkpoint_into(const std::string& path, DpfnetParams& model, AdamState* opt, int* epochs_completed);

}  // namespace dpfnet
