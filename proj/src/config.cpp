#include "dpfnet/config.hpp"

#include <fstream>
#include <sstream>

#include "dpfnet/errors.hpp"

namespace dpfnet {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    std::istringstream is(v);
    T out;
    is >> out;
    if (is.fail() || !is.eof()) throw DataError("config: bad value '" + v + "' for key '" + key + "'");
    return out;
}

}  // namespace

Config parse_config_text(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("config: line " + std::to_string(lineno) + " is not 'key = value': " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, val);
        else if (key == "pfm_width") cfg.pfm_width = parse_number<int>(key, val);
        else if (key == "mdcm_width") cfg.mdcm_width = parse_number<int>(key, val);
        else if (key == "mdcm_dilation") cfg.mdcm_dilation = parse_number<int>(key, val);
        else if (key == "afm_width") cfg.afm_width = parse_number<int>(key, val);
        else if (key == "leaky_slope") cfg.leaky_slope = parse_number<double>(key, val);
        else if (key == "afm_activation") cfg.afm_activation = val;
        else if (key == "ablation") cfg.ablation = val;
        else if (key == "lambda_fourier") cfg.lambda_fourier = parse_number<double>(key, val);
        else if (key == "lambda_perceptual") cfg.lambda_perceptual = parse_number<double>(key, val);
        else if (key == "extractor_weights") cfg.extractor_weights = val;
        else if (key == "lr0") cfg.lr0 = parse_number<double>(key, val);
        else if (key == "epochs") cfg.epochs = parse_number<int>(key, val);
        else if (key == "lr_decay_every") cfg.lr_decay_every = parse_number<int>(key, val);
        else if (key == "lr_decay_factor") cfg.lr_decay_factor = parse_number<double>(key, val);
        else if (key == "batch_size") cfg.batch_size = parse_number<int>(key, val);
        else if (key == "crop") cfg.crop = parse_number<int>(key, val);
        else if (key == "checkpoint_every") cfg.checkpoint_every = parse_number<int>(key, val);
        else if (key == "data_root") cfg.data_root = val;
        else if (key == "out_dir") cfg.out_dir = val;
        else throw DataError("config: unknown key '" + key + "' (line " + std::to_string(lineno) + ")");
    }

    if (cfg.pfm_width < 1 || cfg.mdcm_width < 1 || cfg.afm_width < 1) throw DataError("config: widths must be >= 1");
    if (cfg.mdcm_dilation < 1) throw DataError("config: mdcm_dilation must be >= 1");
    if (cfg.batch_size < 1 || cfg.epochs < 1 || cfg.crop < 1) throw DataError("config: bad training parameters");
    if (!(cfg.leaky_slope > 0.0 && cfg.leaky_slope < 1.0)) throw DataError("config: leaky_slope must be in (0,1)");
    if (cfg.lambda_fourier < 0.0 || cfg.lambda_perceptual < 0.0) throw DataError("config: loss weights must be >= 0");
    if (cfg.afm_activation != "relu" && cfg.afm_activation != "leaky_relu")
        throw DataError("config: afm_activation must be relu or leaky_relu");
    ablation_from_name(cfg.ablation);  // validates
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace dpfnet
