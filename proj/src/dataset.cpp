#include "dpfnet/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>

#include "dpfnet/errors.hpp"
#include "dpfnet/image_io.hpp"

namespace fs = std::filesystem;

namespace dpfnet {

std::vector<DatasetPair> discover_pairs(const std::string& root) {
    const fs::path low_dir = fs::path(root) / "low";
    const fs::path gt_dir = fs::path(root) / "gt";
    if (!fs::is_directory(low_dir) || !fs::is_directory(gt_dir))
        throw DataError("dataset: expected '" + root + "' to contain low/ and gt/ directories");

    auto list_pngs = [](const fs::path& dir) {
        std::vector<std::string> names;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".png") names.push_back(e.path().filename().string());
        std::sort(names.begin(), names.end());  // lexicographic byte order
        return names;
    };

    const auto low_names = list_pngs(low_dir);
    const auto gt_names = list_pngs(gt_dir);

    std::vector<DatasetPair> pairs;
    std::size_t i = 0, j = 0;
    while (i < low_names.size() && j < gt_names.size()) {
        if (low_names[i] == gt_names[j]) {
            pairs.push_back(DatasetPair{low_names[i], (low_dir / low_names[i]).string(), (gt_dir / gt_names[j]).string()});
            ++i;
            ++j;
        } else if (low_names[i] < gt_names[j]) {
            std::cerr << "warning: dataset: low/" << low_names[i] << " has no gt/ sibling, skipped\n";
            ++i;
        } else {
            std::cerr << "warning: dataset: gt/" << gt_names[j] << " has no low/ sibling, skipped\n";
            ++j;
        }
    }
    for (; i < low_names.size(); ++i) std::cerr << "warning: dataset: low/" << low_names[i] << " has no gt/ sibling, skipped\n";
    for (; j < gt_names.size(); ++j) std::cerr << "warning: dataset: gt/" << gt_names[j] << " has no low/ sibling, skipped\n";

    if (pairs.empty()) throw DataError("dataset: no matched low/gt pairs under " + root);
    return pairs;
}

std::vector<LoadedPair> load_pairs(const std::vector<DatasetPair>& pairs) {
    std::vector<LoadedPair> out;
    for (const auto& p : pairs) {
        try {
            LoadedPair lp;
            lp.name = p.name;
            lp.low = load_image(p.low_path);
            lp.gt = load_image(p.gt_path);
            if (lp.low.shape != lp.gt.shape) {
                std::cerr << "warning: dataset: pair '" << p.name << "' has mismatched dimensions "
                          << shape_str(lp.low.shape) << " vs " << shape_str(lp.gt.shape) << ", excluded\n";
                continue;
            }
            out.push_back(std::move(lp));
        } catch (const DataError& e) {
            std::cerr << "warning: dataset: pair '" << p.name << "' unreadable (" << e.what() << "), skipped\n";
        }
    }
    if (out.empty()) throw DataError("dataset: no readable pairs");
    return out;
}

Tensor crop_image(const Tensor& img, std::int64_t top, std::int64_t left, std::int64_t crop) {
    require_rank(img, 3, "crop_image");
    const std::int64_t C = img.shape[0], H = img.shape[1], W = img.shape[2];
    if (top < 0 || left < 0 || top + crop > H || left + crop > W)
        throw std::invalid_argument("crop_image: window out of bounds");
    Tensor out(Shape{C, crop, crop});
    for (std::int64_t c = 0; c < C; ++c)
        for (std::int64_t y = 0; y < crop; ++y)
            std::copy_n(img.data.data() + (c * H + top + y) * W + left, crop,
                        out.data.data() + (c * crop + y) * crop);
    return out;
}

Tensor stack_batch(const std::vector<Tensor>& images) {
    if (images.empty()) throw std::invalid_argument("stack_batch: empty batch");
    const Shape& s = images.front().shape;
    Tensor out(Shape{static_cast<std::int64_t>(images.size()), s[0], s[1], s[2]});
    std::int64_t off = 0;
    for (const auto& img : images) {
        if (img.shape != s) throw std::invalid_argument("stack_batch: ragged image shapes");
        std::copy(img.data.begin(), img.data.end(), out.data.begin() + off);
        off += img.numel();
    }
    return out;
}

}  // namespace dpfnet
