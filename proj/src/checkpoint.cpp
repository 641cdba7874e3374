#include "dpfnet/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "dpfnet/errors.hpp"

namespace dpfnet {

namespace {

constexpr char kMagic[4] = {'D', 'P', 'F', 'N'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw DataError("checkpoint: truncated file " + path);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& is, const std::string& path) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw DataError("checkpoint: truncated file " + path);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

Tensor take(std::map<std::string, Tensor>& entries, const std::string& name, const std::string& path) {
    auto it = entries.find(name);
    if (it == entries.end()) throw DataError("checkpoint: " + path + " is missing entry '" + name + "'");
    Tensor t = std::move(it->second);
    entries.erase(it);
    return t;
}

}  // namespace

void save_named_tensors(const std::string& path, const std::vector<std::pair<std::string, const Tensor*>>& entries) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("checkpoint: cannot write " + tmp);
        os.write(kMagic, 4);
        put_u32(os, kCheckpointVersion);
        put_u32(os, static_cast<std::uint32_t>(entries.size()));
        for (const auto& [name, t] : entries) {
            put_u32(os, static_cast<std::uint32_t>(name.size()));
            os.write(name.data(), static_cast<std::streamsize>(name.size()));
            put_u32(os, static_cast<std::uint32_t>(t->shape.size()));
            for (auto e : t->shape) put_u64(os, static_cast<std::uint64_t>(e));
            static_assert(sizeof(float) == 4);
            os.write(reinterpret_cast<const char*>(t->data.data()),
                     static_cast<std::streamsize>(t->data.size() * sizeof(float)));
        }
        if (!os) throw DataError("checkpoint: short write to " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw DataError("checkpoint: cannot rename " + tmp + " to " + path + ": " + ec.message());
}

std::map<std::string, Tensor> load_named_tensors(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot open " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("checkpoint: bad magic in " + path + " (not a DPFN checkpoint)");
    const std::uint32_t version = get_u32(is, path);
    if (version != kCheckpointVersion)
        throw DataError("checkpoint: unsupported format version " + std::to_string(version) + " in " + path);
    const std::uint32_t count = get_u32(is, path);

    std::map<std::string, Tensor> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = get_u32(is, path);
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) throw DataError("checkpoint: truncated file " + path);
        const std::uint32_t rank = get_u32(is, path);
        if (rank > 8) throw DataError("checkpoint: implausible rank in " + path);
        Shape shape(rank);
        for (auto& e : shape) e = static_cast<std::int64_t>(get_u64(is, path));
        Tensor t(shape);
        if (!is.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(float))))
            throw DataError("checkpoint: truncated file " + path);
        if (!out.emplace(std::move(name), std::move(t)).second)
            throw DataError("checkpoint: duplicate entry name in " + path);
    }
    return out;
}

void save_checkpoint(const std::string& path, DpfnetParams& model, const AdamState& opt, int epochs_completed) {
    std::vector<std::pair<std::string, const Tensor*>> entries;

    const ModelConfig& c = model.cfg;
    Tensor arch(Shape{7});
    arch.data = {static_cast<float>(c.pfm_width),  static_cast<float>(c.mdcm_width),
                 static_cast<float>(c.mdcm_dilation), static_cast<float>(c.afm_width),
                 static_cast<float>(static_cast<int>(c.ablation)), static_cast<float>(c.afm_leaky ? 1 : 0),
                 c.leaky_slope};
    Tensor progress(Shape{2});
    progress.data = {static_cast<float>(epochs_completed), static_cast<float>(opt.t)};
    entries.emplace_back("meta.arch", &arch);
    entries.emplace_back("meta.progress", &progress);

    visit_params(model, [&](const std::string& name, Tensor& t) { entries.emplace_back("model." + name, &t); });
    for (const auto& [name, t] : opt.m) entries.emplace_back("adam.m." + name, &t);
    for (const auto& [name, t] : opt.v) entries.emplace_back("adam.v." + name, &t);

    save_named_tensors(path, entries);
}

void load_checkpoint_into(const std::string& path, DpfnetParams& model, AdamState* opt, int* epochs_completed) {
    auto entries = load_named_tensors(path);

    Tensor progress = take(entries, "meta.progress", path);
    if (progress.numel() != 2) throw DataError("checkpoint: malformed meta.progress in " + path);

    std::string error;
    visit_params(model, [&](const std::string& name, Tensor& t) {
        if (!error.empty()) return;
        auto it = entries.find("model." + name);
        if (it == entries.end()) {
            error = "checkpoint: " + path + " is missing parameter 'model." + name +
                    "' required by the configured architecture";
            return;
        }
        if (it->second.shape != t.shape) {
            error = "checkpoint: parameter 'model." + name + "' in " + path + " has shape " +
                    shape_str(it->second.shape) + ", expected " + shape_str(t.shape);
            return;
        }
        t.data = std::move(it->second.data);
    });
    if (!error.empty()) throw DataError(error);

    if (opt) {
        opt->m.clear();
        opt->v.clear();
        opt->t = static_cast<std::int64_t>(progress.data[1]);
        for (auto& [name, t] : entries) {
            if (name.rfind("adam.m.", 0) == 0) opt->m.emplace(name.substr(7), std::move(t));
            else if (name.rfind("adam.v.", 0) == 0) opt->v.emplace(name.substr(7), std::move(t));
        }
    }
    if (epochs_completed) *epochs_completed = static_cast<int>(progress.data[0]);
}

Checkpoint load_checkpoint(const std::string& path) {
    auto entries = load_named_tensors(path);
    Tensor arch = take(entries, "meta.arch", path);
    if (arch.numel() != 7) throw DataError("checkpoint: malformed meta.arch in " + path);

    ModelConfig cfg;
    cfg.pfm_width = static_cast<int>(arch.data[0]);
    cfg.mdcm_width = static_cast<int>(arch.data[1]);
    cfg.mdcm_dilation = static_cast<int>(arch.data[2]);
    cfg.afm_width = static_cast<int>(arch.data[3]);
    cfg.ablation = static_cast<Ablation>(static_cast<int>(arch.data[4]));
    cfg.afm_leaky = arch.data[5] != 0.0f;
    cfg.leaky_slope = arch.data[6];

    Checkpoint ck;
    ck.model = init_model<float>(cfg, 0);
    load_checkpoint_into(path, ck.model, &ck.opt, &ck.epochs_completed);
    return ck;
}

}  // namespace dpfnet
