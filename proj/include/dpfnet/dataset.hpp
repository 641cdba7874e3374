#pragma once

#include <string>
#include <vector>

#include "dpfnet/tensor.hpp"

namespace dpfnet {

// a low-light image and its ground-truth sibling, matched by filename
// under <root>/low and <root>/gt
struct DatasetPair {
    std::string name;
    std::string low_path;
    std::string gt_path;
};

struct LoadedPair {
    std::string name;
    Tensor low;  // [3,H,W]
    Tensor gt;
};

// Lists matched pairs in lexicographic byte order. Unmatched files produce
// warnings on stderr; missing directories or zero matches are errors.
std::vector<DatasetPair> discover_pairs(const std::string& root);

// Decodes pairs, skipping (with a named warning) any that fail to decode or
// whose dimensions disagree. All pairs unusable is an error.
std::vector<LoadedPair> load_pairs(const std::vector<DatasetPair>& pairs);

// copies the [3,crop,crop] window at (top,left)
Tensor crop_image(const Tensor& img, std::int64_t top, std::int64_t left, std::int64_t crop);

// stacks equally-sized [3,H,W] images into [N,3,H,W]
Tensor stack_batch(const std::vector<Tensor>& images);

}  // namespace dpfnet
