#include "gradix/network.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace gradix {

Architecture Architecture::uniform(std::size_t inputs, std::size_t hidden_layers, std::size_t width) {
    Architecture arch;
    arch.widths.push_back(inputs);
    for (std::size_t i = 0; i < hidden_layers; ++i) arch.widths.push_back(width);
    arch.widths.push_back(1);
    return arch;
}

void Architecture::validate() const {
    if (widths.size() < 3) throw UsageError("architecture needs at least one hidden layer");
    for (auto w : widths) {
        if (w == 0) throw UsageError("architecture widths must be positive");
    }
    if (widths.back() != 1) throw UsageError("architecture output width must be 1");
}

std::size_t param_count(const Architecture& arch) {
    std::size_t total = 0;
    for (std::size_t k = 0; k + 1 < arch.widths.size(); ++k) {
        total += (arch.widths[k] + 1) * arch.widths[k + 1];
    }
    return total;
}

MlpParams zeros(const Architecture& arch) {
    MlpParams p;
    p.arch = arch;
    for (std::size_t k = 0; k + 1 < arch.widths.size(); ++k) {
        BasicLayer<double> layer;
        layer.cols = arch.widths[k];
        layer.rows = arch.widths[k + 1];
        layer.weights.assign(layer.rows * layer.cols, 0.0);
        layer.bias.assign(layer.rows, 0.0);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

MlpParams init(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    MlpParams p = zeros(arch);
    std::mt19937_64 rng(seed);
    for (auto& layer : p.layers) {
        const double bound = std::sqrt(6.0 / static_cast<double>(layer.rows + layer.cols));
        for (auto& w : layer.weights) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            w = (2.0 * u - 1.0) * bound;
        }
    }
    return p;
}

std::vector<double> flatten(const MlpParams& params) {
    std::vector<double> out;
    out.reserve(param_count(params.arch));
    for (const auto& layer : params.layers) {
        out.insert(out.end(), layer.weights.begin(), layer.weights.end());
        out.insert(out.end(), layer.bias.begin(), layer.bias.end());
    }
    return out;
}

MlpParams unflatten(const Architecture& arch, std::span<const double> values) {
    if (values.size() != param_count(arch)) {
        throw UsageError("unflatten: expected " + std::to_string(param_count(arch)) +
                         " values, got " + std::to_string(values.size()));
    }
    MlpParams p = zeros(arch);
    std::size_t i = 0;
    for (auto& layer : p.layers) {
        for (auto& w : layer.weights) w = values[i++];
        for (auto& b : layer.bias) b = values[i++];
    }
    return p;
}

BasicMlp<ad::Var> on_tape(ad::Tape& tape, const MlpParams& params) {
    BasicMlp<ad::Var> out;
    out.arch = params.arch;
    for (const auto& layer : params.layers) {
        BasicLayer<ad::Var> l;
        l.rows = layer.rows;
        l.cols = layer.cols;
        for (double w : layer.weights) l.weights.push_back(tape.lift(w));
        for (double b : layer.bias) l.bias.push_back(tape.lift(b));
        out.layers.push_back(std::move(l));
    }
    return out;
}

std::vector<ad::Var> flatten(const BasicMlp<ad::Var>& params) {
    std::vector<ad::Var> out;
    for (const auto& layer : params.layers) {
        out.insert(out.end(), layer.weights.begin(), layer.weights.end());
        out.insert(out.end(), layer.bias.begin(), layer.bias.end());
    }
    return out;
}

std::string params_to_json(const MlpParams& params) {
    nlohmann::json j;
    j["widths"] = params.arch.widths;
    j["activation"] = "tanh";
    j["params"] = flatten(params);
    return j.dump();
}

MlpParams params_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("params snapshot: ") + e.what());
    }
    if (!j.contains("widths") || !j.contains("params")) {
        throw UsageError("params snapshot: missing 'widths' or 'params'");
    }
    if (j.value("activation", std::string("tanh")) != "tanh") {
        throw UsageError("params snapshot: only tanh activation is supported");
    }
    Architecture arch;
    arch.widths = j.at("widths").get<std::vector<std::size_t>>();
    arch.validate();
    const auto values = j.at("params").get<std::vector<double>>();
    return unflatten(arch, values);
}

void save_params(const std::filesystem::path& path, const MlpParams& params) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write " + path.string());
    out << params_to_json(params) << '\n';
}

MlpParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return params_from_json(ss.str());
}

}  // namespace gradix
