#pragma once

#include <cstdint>
#include <string>

#include "dpfnet/loss.hpp"
#include "dpfnet/model.hpp"

namespace dpfnet {

// Flat key=value configuration ('#' comments). Unknown keys are rejected;
// every key has a default. Training defaults follow the full training
// protocol; configs/smoke.cfg carries the desk-scale profile.
struct Config {
    std::uint64_t seed = 42;

    // architecture
    int pfm_width = 16;
    int mdcm_width = 32;
    int mdcm_dilation = 2;
    int afm_width = 16;
    double leaky_slope = 0.2;
    std::string afm_activation = "relu";  // relu | leaky_relu
    std::string ablation = "full";        // full | mdcm_pfm | mdcm_only

    // loss committee
    double lambda_fourier = 1.0;
    double lambda_perceptual = 0.2;
    std::string extractor_weights;  // optional checkpoint-format weights file

    // training protocol
    double lr0 = 1e-4;
    int epochs = 200;
    int lr_decay_every = 50;
    double lr_decay_factor = 0.5;
    int batch_size = 4;
    int crop = 256;
    int checkpoint_every = 25;

    // paths
    std::string data_root;
    std::string out_dir = "runs/default";

    ModelConfig model_config() const {
        ModelConfig m;
        m.pfm_width = pfm_width;
        m.mdcm_width = mdcm_width;
        m.mdcm_dilation = mdcm_dilation;
        m.afm_width = afm_width;
        m.leaky_slope = static_cast<float>(leaky_slope);
        m.afm_leaky = afm_activation == "leaky_relu";
        m.ablation = ablation_from_name(ablation);
        return m;
    }

    LossWeights loss_weights() const { return LossWeights{lambda_fourier, lambda_perceptual}; }
};

Config parse_config_text(const std::string& text);
Config load_config(const std::string& path);

}  // namespace dpfnet
