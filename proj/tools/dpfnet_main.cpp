#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "dpfnet/checkpoint.hpp"
#include "dpfnet/config.hpp"
#include "dpfnet/errors.hpp"
#include "dpfnet/eval.hpp"
#include "dpfnet/image_io.hpp"
#include "dpfnet/train.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_train(const std::string& config_path, const std::string& resume) {
    dpfnet::Config cfg = dpfnet::load_config(config_path);
    dpfnet::TrainResult r = dpfnet::train(cfg, resume);
    const auto& last = r.log.back();
    std::cout << "finished " << r.log.size() << " epoch(s); final loss " << last.loss_total << ", train PSNR "
              << last.train_psnr << " dB\n";
    std::cout << "checkpoint: " << r.final_checkpoint << "\n";
    std::cout << "metrics:    " << r.metrics_csv << "\n";
    return 0;
}

int cmd_infer(const std::string& ckpt_path, const std::string& input, const std::string& output) {
    dpfnet::Checkpoint ck = dpfnet::load_checkpoint(ckpt_path);

    std::vector<fs::path> files;
    if (fs::is_directory(input)) {
        for (const auto& e : fs::directory_iterator(input))
            if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw dpfnet::DataError("infer: no .png files in " + input);
    } else if (fs::is_regular_file(input)) {
        files.push_back(input);
    } else {
        throw dpfnet::DataError("infer: input path does not exist: " + input);
    }

    fs::create_directories(output);
    for (const auto& f : files) {
        dpfnet::Tensor img = dpfnet::load_image(f.string());
        dpfnet::Tensor out = dpfnet::enhance_image(ck.model, img);
        const std::string dst = (fs::path(output) / f.filename()).string();
        dpfnet::save_image(out, dst);
        std::cout << f.filename().string() << " -> " << dst << "\n";
    }
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& dataset_root, const std::string& report_path) {
    dpfnet::Checkpoint ck = dpfnet::load_checkpoint(ckpt_path);
    auto pairs = dpfnet::load_pairs(dpfnet::discover_pairs(dataset_root));
    dpfnet::EvalReport report = dpfnet::evaluate_dataset(ck.model, pairs, report_path);
    report.checkpoint = ckpt_path;
    report.dataset = dataset_root;

    std::printf("%-28s %10s %8s\n", "image", "psnr_db", "ssim");
    for (const auto& r : report.rows) std::printf("%-28s %10.4f %8.4f\n", r.name.c_str(), r.psnr_db, r.ssim);
    std::printf("%-28s %10.4f %8.4f  (%zu image(s), %d skipped)\n", "MEAN", report.mean_psnr_db, report.mean_ssim,
                report.rows.size(), report.skipped);
    if (!report_path.empty()) std::cout << "report: " << report_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DPFNet low-light image enhancement: train, infer, eval"};
    app.require_subcommand(1);

    std::string config_path, resume;
    auto* train_cmd = app.add_subcommand("train", "train a model from a config file");
    train_cmd->add_option("--config", config_path, "config file (key = value)")->required();
    train_cmd->add_option("--resume", resume, "checkpoint to resume from");

    std::string ckpt, input, output;
    auto* infer_cmd = app.add_subcommand("infer", "enhance a PNG file or directory of PNGs");
    infer_cmd->add_option("--checkpoint", ckpt, "trained checkpoint")->required();
    infer_cmd->add_option("--input", input, "input .png file or directory")->required();
    infer_cmd->add_option("--output", output, "output directory")->required();

    std::string eval_ckpt, dataset_root, report_path;
    auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM report over a low/gt dataset");
    eval_cmd->add_option("--checkpoint", eval_ckpt, "trained checkpoint")->required();
    eval_cmd->add_option("--dataset", dataset_root, "dataset root containing low/ and gt/")->required();
    eval_cmd->add_option("--report", report_path, "report CSV path");

    try {
        app.parse(argc, argv);
        if (train_cmd->parsed()) return cmd_train(config_path, resume);
        if (infer_cmd->parsed()) return cmd_infer(ckpt, input, output);
        if (eval_cmd->parsed()) return cmd_eval(eval_ckpt, dataset_root, report_path);
        return 1;
    } catch (const CLI::ParseError& e) {
        // CLI11 prints the cause; pin usage errors to exit code 1
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const dpfnet::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const dpfnet::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
