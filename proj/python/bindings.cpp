#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dpfnet/checkpoint.hpp"
#include "dpfnet/config.hpp"
#include "dpfnet/eval.hpp"
#include "dpfnet/fft.hpp"
#include "dpfnet/image_io.hpp"
#include "dpfnet/metrics.hpp"
#include "dpfnet/train.hpp"

namespace py = pybind11;

namespace {

using Arr = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ArrF = py::array_t<float, py::array::c_style | py::array::forcecast>;

dpfnet::TensorT<double> plane_from(const Arr& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
    dpfnet::TensorT<double> t(dpfnet::Shape{1, 1, a.shape(0), a.shape(1)});
    std::copy_n(a.data(), t.numel(), t.data.data());
    return t;
}

Arr plane_to(const dpfnet::TensorT<double>& t) {
    Arr out({t.shape[2], t.shape[3]});
    std::copy_n(t.data.data(), t.numel(), out.mutable_data());
    return out;
}

dpfnet::Tensor image_from(const ArrF& a) {
    if (a.ndim() != 3 || a.shape(0) != 3) throw std::invalid_argument("expected a [3,H,W] array");
    dpfnet::Tensor t(dpfnet::Shape{a.shape(0), a.shape(1), a.shape(2)});
    std::copy_n(a.data(), t.numel(), t.data.data());
    return t;
}

ArrF image_to(const dpfnet::Tensor& t) {
    ArrF out({t.shape[0], t.shape[1], t.shape[2]});
    std::copy_n(t.data.data(), t.numel(), out.mutable_data());
    return out;
}

dpfnet::Tensor batched(const ArrF& a) {
    dpfnet::Tensor img = image_from(a);
    dpfnet::Tensor b(dpfnet::Shape{1, img.shape[0], img.shape[1], img.shape[2]});
    b.data = std::move(img.data);
    return b;
}

}  // namespace

PYBIND11_MODULE(_dpfnet, m) {
    m.doc() = "DPFNet low-light image enhancement core";

    m.def(
        "fft2",
        [](const Arr& x) {
            auto z = dpfnet::fft2(plane_from(x));
            return py::make_tuple(plane_to(z.re), plane_to(z.im));
        },
        py::arg("plane"), "Unnormalized forward 2-d DFT of a real [H,W] plane; returns (re, im).");

    m.def(
        "ifft2",
        [](const Arr& re, const Arr& im) {
            dpfnet::ComplexTensorT<double> z{plane_from(re), plane_from(im)};
            auto w = dpfnet::ifft2(z);
            return py::make_tuple(plane_to(w.re), plane_to(w.im));
        },
        py::arg("re"), py::arg("im"), "Inverse 2-d DFT with 1/(MN) normalization; returns (re, im).");

    m.def(
        "psnr", [](const ArrF& x, const ArrF& y) { return dpfnet::psnr(image_from(x), image_from(y)); }, py::arg("x"),
        py::arg("y"), "PSNR in dB between two [3,H,W] images in [0,1] (99 dB cap at zero MSE).");

    m.def(
        "ssim", [](const ArrF& x, const ArrF& y) { return dpfnet::ssim_metric(batched(x), batched(y)); }, py::arg("x"),
        py::arg("y"), "Mean SSIM between two [3,H,W] images (11x11 Gaussian window, sigma 1.5).");

    m.def(
        "load_image", [](const std::string& path) { return image_to(dpfnet::load_image(path)); }, py::arg("path"),
        "Decode an 8-bit PNG to a float32 [3,H,W] array in [0,1].");

    m.def(
        "save_image", [](const ArrF& img, const std::string& path) { dpfnet::save_image(image_from(img), path); },
        py::arg("image"), py::arg("path"), "Write a [3,H,W] array in [0,1] as an 8-bit RGB PNG.");

    m.def(
        "enhance",
        [](const ArrF& img, const std::string& checkpoint) {
            dpfnet::Checkpoint ck = dpfnet::load_checkpoint(checkpoint);
            return image_to(dpfnet::enhance_image(ck.model, image_from(img)));
        },
        py::arg("image"), py::arg("checkpoint"), "Run full-resolution enhancement of a [3,H,W] image.");

    m.def(
        "train",
        [](const std::string& config_path, const std::string& resume) {
            dpfnet::TrainResult r = dpfnet::train(dpfnet::load_config(config_path), resume);
            return r.final_checkpoint;
        },
        py::arg("config"), py::arg("resume") = std::string(),
        "Train from a config file; returns the final checkpoint path.");

    m.def(
        "evaluate",
        [](const std::string& checkpoint, const std::string& dataset_root, const std::string& report) {
            dpfnet::Checkpoint ck = dpfnet::load_checkpoint(checkpoint);
            auto pairs = dpfnet::load_pairs(dpfnet::discover_pairs(dataset_root));
            dpfnet::EvalReport rep = dpfnet::evaluate_dataset(ck.model, pairs, report);
            py::list rows;
            for (const auto& r : rep.rows) rows.append(py::make_tuple(r.name, r.psnr_db, r.ssim));
            py::dict out;
            out["rows"] = rows;
            out["mean_psnr_db"] = rep.mean_psnr_db;
            out["mean_ssim"] = rep.mean_ssim;
            return out;
        },
        py::arg("checkpoint"), py::arg("dataset_root"), py::arg("report") = std::string(),
        "Evaluate a checkpoint over a low/gt dataset; returns rows and means.");
}
