#include "dpfnet/train.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "dpfnet/checkpoint.hpp"
#include "dpfnet/errors.hpp"
#include "dpfnet/loss.hpp"
#include "dpfnet/metrics.hpp"
#include "dpfnet/optim.hpp"

namespace fs = std::filesystem;

namespace dpfnet {

namespace {

void write_metrics_csv(const std::string& path, const std::vector<EpochStats>& log) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc);
        if (!os) throw DataError("train: cannot write " + tmp);
        os << "epoch,lr,loss_total,loss_ssim,loss_fourier,loss_perceptual,train_psnr\n";
        os.precision(9);
        for (const auto& e : log)
            os << e.epoch << ',' << e.lr << ',' << e.loss_total << ',' << e.loss_ssim << ',' << e.loss_fourier << ','
               << e.loss_perceptual << ',' << e.train_psnr << '\n';
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw DataError("train: cannot rename " + tmp + ": " + ec.message());
}

}  // namespace

FeatureExtractor load_extractor(const Config& cfg) {
    if (cfg.extractor_weights.empty()) return FeatureExtractor::seeded(cfg.seed);
    auto entries = load_named_tensors(cfg.extractor_weights);
    FeatureExtractor fx = FeatureExtractor::seeded(cfg.seed);
    for (std::size_t i = 0; i < fx.stages.size(); ++i) {
        const std::string base = "feat.stage" + std::to_string(i);
        auto wit = entries.find(base + ".w");
        auto bit = entries.find(base + ".b");
        if (wit == entries.end() || bit == entries.end())
            throw DataError("extractor weights: missing entry " + base + " in " + cfg.extractor_weights);
        if (wit->second.shape != fx.stages[i].w.shape || bit->second.shape != fx.stages[i].b.shape)
            throw DataError("extractor weights: shape mismatch for " + base + " in " + cfg.extractor_weights);
        fx.stages[i].w = std::move(wit->second);
        fx.stages[i].b = std::move(bit->second);
    }
    return fx;
}

TrainResult train(const Config& cfg, const std::vector<LoadedPair>& data, const std::string& resume_path) {
    if (data.empty()) throw DataError("train: empty dataset");
    const std::int64_t crop = cfg.crop;
    for (const auto& p : data)
        if (p.low.shape[1] < crop || p.low.shape[2] < crop)
            throw DataError("train: pair '" + p.name + "' " + shape_str(p.low.shape) + " is smaller than crop " +
                            std::to_string(cfg.crop));

    fs::create_directories(cfg.out_dir);
    const std::string csv_path = (fs::path(cfg.out_dir) / "metrics.csv").string();
    const std::string final_ckpt = (fs::path(cfg.out_dir) / "checkpoint_final.dpfn").string();

    DpfnetParams model = init_model<float>(cfg.model_config(), cfg.seed);
    AdamState opt;
    int start_epoch = 0;
    if (!resume_path.empty()) {
        load_checkpoint_into(resume_path, model, &opt, &start_epoch);
        std::cout << "resumed from " << resume_path << " at epoch " << start_epoch << "\n";
    }

    const FeatureExtractor fx = load_extractor(cfg);
    const std::uint64_t fx_checksum = fx.checksum();
    const LossWeights lw = cfg.loss_weights();

    std::vector<std::pair<std::string, Tensor*>> trainable;
    visit_params(model, [&](const std::string& name, Tensor& t) { trainable.emplace_back(name, &t); });

    TrainResult result;
    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at_epoch(epoch, cfg.lr0, cfg.lr_decay_every, cfg.lr_decay_factor);
        Rng rng(Rng::mix(cfg.seed, 0x65706f63ULL + static_cast<std::uint64_t>(epoch)));

        std::vector<std::size_t> order(data.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        int steps = 0;

        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t bend = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
            std::vector<Tensor> xs, ys;
            for (std::size_t k = b; k < bend; ++k) {
                const LoadedPair& p = data[order[k]];
                const std::int64_t top = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(p.low.shape[1] - crop + 1)));
                const std::int64_t left = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(p.low.shape[2] - crop + 1)));
                xs.push_back(crop_image(p.low, top, left, crop));
                ys.push_back(crop_image(p.gt, top, left, crop));
            }
            Tensor x = stack_batch(xs);
            Tensor y = stack_batch(ys);

            GradTape tape;
            watch_params(model, tape);
            Tensor out = dpfnet_forward(x, model);
            LossBreakdown<float> lb;
            Tensor loss = total_loss(out, y, lw, fx, &lb);
            if (!std::isfinite(static_cast<double>(lb.total)))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
            GradMap<float> grads = tape.backward(loss);
            adam_step(trainable, grads, opt, lr);

            stats.loss_total += lb.total;
            stats.loss_ssim += lb.ssim;
            stats.loss_fourier += lb.fourier;
            stats.loss_perceptual += lb.perceptual;
            stats.train_psnr += psnr(clamp01(out), y);
            ++steps;
        }

        stats.loss_total /= steps;
        stats.loss_ssim /= steps;
        stats.loss_fourier /= steps;
        stats.loss_perceptual /= steps;
        stats.train_psnr /= steps;
        result.log.push_back(stats);
        write_metrics_csv(csv_path, result.log);

        const bool last = epoch + 1 == cfg.epochs;
        if (last || (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0)) {
            char name[64];
            std::snprintf(name, sizeof(name), "checkpoint_epoch%04d.dpfn", epoch + 1);
            save_checkpoint((fs::path(cfg.out_dir) / name).string(), model, opt, epoch + 1);
            if (last) save_checkpoint(final_ckpt, model, opt, epoch + 1);
        }
    }

    if (fx.checksum() != fx_checksum)
        throw std::logic_error("train: frozen feature extractor was mutated during training");

    result.final_checkpoint = final_ckpt;
    result.metrics_csv = csv_path;
    result.model = std::move(model);
    return result;
}

TrainResult train(const Config& cfg, const std::string& resume_path) {
    if (cfg.data_root.empty()) throw DataError("train: data_root not set");
    return train(cfg, load_pairs(discover_pairs(cfg.data_root)), resume_path);
}

}  // namespace dpfnet
