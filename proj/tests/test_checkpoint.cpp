#include <doctest.h>

#include <fstream>

#include "dpfnet/checkpoint.hpp"
#include "dpfnet/errors.hpp"
#include "support/fixtures.hpp"

using namespace dpfnet;
using dpfnet::testing::random_tensor;
using dpfnet::testing::TempDir;

TEST_CASE("checkpoint: save/load/forward is bitwise identical") {
    TempDir tmp("ckpt");
    ModelConfig cfg;
    cfg.pfm_width = 4;
    cfg.mdcm_width = 4;
    cfg.afm_width = 4;
    auto model = init_model<float>(cfg, 101);

    Rng rng(102);
    Tensor x = random_tensor<float>(Shape{1, 3, 16, 16}, rng, 0.0, 1.0);
    Tensor before = dpfnet_forward(x, model);

    AdamState opt;
    opt.t = 7;
    visit_params(model, [&](const std::string& name, Tensor& t) {
        opt.m.emplace(name, random_tensor<float>(t.shape, rng));
        opt.v.emplace(name, random_tensor<float>(t.shape, rng, 0.0, 1.0));
    });

    const std::string path = tmp.file("model.dpfn");
    save_checkpoint(path, model, opt, 3);

    Checkpoint ck = load_checkpoint(path);
    CHECK(ck.epochs_completed == 3);
    CHECK(ck.opt.t == 7);
    CHECK(ck.model.cfg.pfm_width == 4);
    CHECK(ck.model.cfg.ablation == Ablation::full);

    Tensor after = dpfnet_forward(x, ck.model);
    CHECK(before.data == after.data);

    visit_params(model, [&](const std::string& name, Tensor& t) {
        CHECK(ck.opt.m.at(name).data == opt.m.at(name).data);
        CHECK(ck.opt.v.at(name).data == opt.v.at(name).data);
        Tensor* loaded = nullptr;
        visit_params(ck.model, [&](const std::string& n2, Tensor& t2) {
            if (n2 == name) loaded = &t2;
        });
        REQUIRE(loaded != nullptr);
        CHECK(loaded->data == t.data);
    });
}

TEST_CASE("checkpoint: corrupted magic is rejected as a version error") {
    TempDir tmp("ckpt_magic");
    ModelConfig cfg;
    cfg.pfm_width = 2;
    cfg.mdcm_width = 2;
    cfg.afm_width = 2;
    auto model = init_model<float>(cfg, 5);
    AdamState opt;
    const std::string path = tmp.file("model.dpfn");
    save_checkpoint(path, model, opt, 0);

    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("magic"), DataError);
}

TEST_CASE("checkpoint: truncated file is rejected") {
    TempDir tmp("ckpt_trunc");
    ModelConfig cfg;
    cfg.pfm_width = 2;
    cfg.mdcm_width = 2;
    cfg.afm_width = 2;
    auto model = init_model<float>(cfg, 6);
    AdamState opt;
    const std::string path = tmp.file("model.dpfn");
    save_checkpoint(path, model, opt, 0);

    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    bytes.resize(bytes.size() / 2);
    std::ofstream(path, std::ios::binary | std::ios::trunc)
        .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));

    CHECK_THROWS_AS(load_checkpoint(path), DataError);
}

TEST_CASE("checkpoint: ablation mismatch names the missing parameter group") {
    TempDir tmp("ckpt_abl");
    ModelConfig slim;
    slim.pfm_width = 2;
    slim.mdcm_width = 2;
    slim.afm_width = 2;
    slim.ablation = Ablation::mdcm_only;
    auto small = init_model<float>(slim, 7);
    AdamState opt;
    const std::string path = tmp.file("mdcm_only.dpfn");
    save_checkpoint(path, small, opt, 0);

    ModelConfig full = slim;
    full.ablation = Ablation::full;
    auto target = init_model<float>(full, 8);
    CHECK_THROWS_WITH_AS(load_checkpoint_into(path, target, nullptr, nullptr), doctest::Contains("model.pfm"),
                         DataError);
}

TEST_CASE("named tensor container: duplicate names and unknown versions rejected") {
    TempDir tmp("ntc");
    Tensor a(Shape{2}, 1.0f);
    const std::string dup = tmp.file("dup.dpfn");
    save_named_tensors(dup, {{"x", &a}, {"x", &a}});
    CHECK_THROWS_AS(load_named_tensors(dup), DataError);

    const std::string path = tmp.file("ok.dpfn");
    save_named_tensors(path, {{"x", &a}, {"y", &a}});
    auto loaded = load_named_tensors(path);
    CHECK(loaded.size() == 2);
    CHECK(loaded.at("x").data == a.data);
}
