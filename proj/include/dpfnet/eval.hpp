#pragma once

#include <string>
#include <vector>

#include "dpfnet/dataset.hpp"
#include "dpfnet/metrics.hpp"
#include "dpfnet/model.hpp"

namespace dpfnet {

// full-resolution inference on one [3,H,W] image, output clamped to [0,1]
Tensor enhance_image(const DpfnetParams& model, const Tensor& image);

// Per-pair PSNR/SSIM at full resolution plus dataset means; images smaller
// than the SSIM window are skipped with a warning. Writes the report CSV
// (`name,psnr_db,ssim` rows plus a trailing MEAN row) when report_path is
// non-empty.
EvalReport evaluate_dataset(const DpfnetParams& model, const std::vector<LoadedPair>& pairs,
                            const std::string& report_path = "");

void write_report_csv(const EvalReport& report, const std::string& path);

}  // namespace dpfnet
