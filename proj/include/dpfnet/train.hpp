#pragma once

#include <string>
#include <vector>

#include "dpfnet/config.hpp"
#include "dpfnet/dataset.hpp"
#include "dpfnet/loss.hpp"
#include "dpfnet/model.hpp"

namespace dpfnet {

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double loss_total = 0.0;
    double loss_ssim = 0.0;
    double loss_fourier = 0.0;
    double loss_perceptual = 0.0;
    double train_psnr = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> log;
    std::string final_checkpoint;
    std::string metrics_csv;
    DpfnetParams model;
};

// Frozen extractor for the perceptual loss: seeded from the config, or
// loaded from cfg.extractor_weights (checkpoint-format file with
// feat.stageN.w / feat.stageN.b entries).
FeatureExtractor load_extractor(const Config& cfg);

// Runs the training protocol on an already-decoded dataset: shuffled
// random-crop batches per epoch, total-loss backward, Adam with step decay,
// per-epoch CSV row, periodic checkpoints. Deterministic for a fixed seed.
TrainResult train(const Config& cfg, const std::vector<LoadedPair>& data, const std::string& resume_path = "");

// convenience: discover + decode from cfg.data_root, then train
TrainResult train(const Config& cfg, const std::string& resume_path = "");

}  // namespace dpfnet
