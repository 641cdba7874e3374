#include "dpfnet/eval.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "dpfnet/errors.hpp"

namespace fs = std::filesystem;

namespace dpfnet {

Tensor enhance_image(const DpfnetParams& model, const Tensor& image) {
    require_rank(image, 3, "enhance_image");
    Tensor batch(Shape{1, image.shape[0], image.shape[1], image.shape[2]});
    batch.data = image.data;
    Tensor out = clamp01(dpfnet_forward(batch, model));
    Tensor result(Shape{image.shape[0], image.shape[1], image.shape[2]});
    result.data = std::move(out.data);
    return result;
}

EvalReport evaluate_dataset(const DpfnetParams& model, const std::vector<LoadedPair>& pairs,
                            const std::string& report_path) {
    const SsimOptions ssim_opt;
    EvalReport report;
    for (const auto& p : pairs) {
        if (p.gt.shape[1] < ssim_opt.window || p.gt.shape[2] < ssim_opt.window) {
            std::cerr << "warning: eval: '" << p.name << "' " << shape_str(p.gt.shape)
                      << " is smaller than the SSIM window, row skipped\n";
            ++report.skipped;
            continue;
        }
        Tensor enhanced = enhance_image(model, p.low);
        Tensor gt_batch(Shape{1, 3, p.gt.shape[1], p.gt.shape[2]});
        gt_batch.data = p.gt.data;
        Tensor en_batch(Shape{1, 3, p.gt.shape[1], p.gt.shape[2]});
        en_batch.data = enhanced.data;

        EvalRow row;
        row.name = p.name;
        row.psnr_db = psnr(enhanced, clamp01(p.gt));
        row.ssim = ssim_metric(en_batch, gt_batch, ssim_opt);
        report.rows.push_back(std::move(row));
    }
    report.finalize();
    if (!report_path.empty()) write_report_csv(report, report_path);
    return report;
}

void write_report_csv(const EvalReport& report, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc);
        if (!os) throw DataError("eval: cannot write " + tmp);
        os.precision(9);
        os << "name,psnr_db,ssim\n";
        for (const auto& r : report.rows) os << r.name << ',' << r.psnr_db << ',' << r.ssim << '\n';
        os << "MEAN," << report.mean_psnr_db << ',' << report.mean_ssim << '\n';
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw DataError("eval: cannot rename " + tmp + ": " + ec.message());
}

}  // namespace dpfnet
