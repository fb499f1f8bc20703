#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gradix/autodiff.hpp"
#include "gradix/error.hpp"

namespace gradix {

enum class Activation { tanh };

/// Layer widths [d_1, ..., d_K] of a fully connected network. d_1 is the
/// input dimension, d_K = 1 the scalar intensity output.
struct Architecture {
    std::vector<std::size_t> widths;
    Activation activation = Activation::tanh;

    /// Convenience: `hidden_layers` layers of `width` neurons.
    static Architecture uniform(std::size_t inputs, std::size_t hidden_layers, std::size_t width);

    std::size_t input_dim() const { return widths.front(); }
    std::size_t hidden_layers() const { return widths.size() - 2; }
    /// Throws UsageError unless K >= 3, all widths positive and d_K == 1.
    void validate() const;

    bool operator==(const Architecture&) const = default;
};

/// One affine map: rows x cols row-major weights plus a bias per row.
template <class T>
struct BasicLayer {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> weights;
    std::vector<T> bias;

    const T& w(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }
};

template <class T>
struct BasicMlp {
    Architecture arch;
    std::vector<BasicLayer<T>> layers;
};

using MlpParams = BasicMlp<double>;

std::size_t param_count(const Architecture& arch);

/// Xavier-uniform weights, zero biases; deterministic in `seed`.
MlpParams init(const Architecture& arch, std::uint64_t seed);
MlpParams zeros(const Architecture& arch);

/// Layer-major; within a layer the row-major weights come first, then biases.
std::vector<double> flatten(const MlpParams& params);
MlpParams unflatten(const Architecture& arch, std::span<const double> values);

/// Records every parameter as a tape leaf, in flatten() order.
BasicMlp<ad::Var> on_tape(ad::Tape& tape, const MlpParams& params);
std::vector<ad::Var> flatten(const BasicMlp<ad::Var>& params);

/// C_K o sigma o C_{K-1} o ... o sigma o C_1 applied to `input`. P is the
/// parameter scalar (double or Var), X the activation scalar (double, Var or
/// Dual).
template <class P, class X>
X forward(const BasicMlp<P>& net, std::span<const X> input) {
    using std::tanh;
    using ad::tanh;
    if (input.size() != net.arch.input_dim()) {
        throw UsageError("forward: expected " + std::to_string(net.arch.input_dim()) +
                         " inputs, got " + std::to_string(input.size()));
    }
    std::vector<X> z(input.begin(), input.end());
    std::vector<X> next;
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const auto& layer = net.layers[k];
        const bool last = k + 1 == net.layers.size();
        next.clear();
        next.reserve(layer.rows);
        for (std::size_t r = 0; r < layer.rows; ++r) {
            X acc = layer.w(r, 0) * z[0];
            for (std::size_t c = 1; c < layer.cols; ++c) acc = acc + layer.w(r, c) * z[c];
            acc = acc + layer.bias[r];
            next.push_back(last ? acc : tanh(acc));
        }
        z.swap(next);
    }
    return z.front();
}

inline double forward(const MlpParams& net, std::span<const double> input) {
    return forward<double, double>(net, input);
}

/// `.params.json` snapshot: {"widths": [...], "activation": "tanh", "params": [...]}.
void save_params(const std::filesystem::path& path, const MlpParams& params);
MlpParams load_params(const std::filesystem::path& path);
std::string params_to_json(const MlpParams& params);
MlpParams params_from_json(const std::string& text);

}  // namespace gradix
