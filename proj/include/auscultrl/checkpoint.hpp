#pragma once

// Text checkpoint: layer shapes, flat row-major weights, Adam moments and a
// free-form metadata block (training config, seed).

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "errors.hpp"
#include "qnet.hpp"

namespace auscultrl {

struct Checkpoint {
    QNetwork params;
    AdamState adam;
    nlohmann::json metadata = nlohmann::json::object();
};

namespace detail {

inline nlohmann::json layers_to_json(const QNetwork& n) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& l : n.layers) {
        std::vector<double> w(static_cast<std::size_t>(l.weights.size()));
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
                w[static_cast<std::size_t>(r * l.weights.cols() + c)] = l.weights(r, c);
        std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
        arr.push_back({{"in", l.in()}, {"out", l.out()}, {"weights", w}, {"bias", b}});
    }
    return arr;
}

inline QNetwork layers_from_json(const nlohmann::json& arr, const char* what) {
    if (!arr.is_array() || arr.empty()) throw StructureError(std::string("checkpoint: ") + what + " must be a non-empty layer array");
    QNetwork n;
    for (std::size_t k = 0; k < arr.size(); ++k) {
        const auto& j = arr[k];
        const int in = j.at("in").get<int>();
        const int out = j.at("out").get<int>();
        if (in <= 0 || out <= 0) throw StructureError("checkpoint: non-positive layer size");
        auto w = j.at("weights").get<std::vector<double>>();
        auto b = j.at("bias").get<std::vector<double>>();
        const std::string tag = std::string(what) + " layer " + std::to_string(k + 1);
        if (w.size() != static_cast<std::size_t>(in) * static_cast<std::size_t>(out))
            throw StructureError("checkpoint: " + tag + " declares " + std::to_string(out) + "x" + std::to_string(in) +
                                 " but holds " + std::to_string(w.size()) + " weights");
        if (b.size() != static_cast<std::size_t>(out))
            throw StructureError("checkpoint: " + tag + " bias length " + std::to_string(b.size()) + " != " + std::to_string(out));
        if (k > 0 && n.layers.back().out() != in)
            throw StructureError("checkpoint: " + tag + " input " + std::to_string(in) + " does not match previous output " +
                                 std::to_string(n.layers.back().out()));
        DenseLayer l{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c) l.weights(r, c) = w[static_cast<std::size_t>(r) * in + c];
        for (int r = 0; r < out; ++r) l.bias[r] = b[static_cast<std::size_t>(r)];
        n.layers.push_back(std::move(l));
    }
    if (!n.all_finite()) throw RangeError(std::string("checkpoint: non-finite value in ") + what);
    return n;
}

} // namespace detail

inline nlohmann::json checkpoint_to_json(const QNetwork& params, const AdamState& adam, const nlohmann::json& metadata) {
    nlohmann::json j;
    j["format"] = "auscultrl-qnet";
    j["version"] = 1;
    j["layer_sizes"] = params.sizes();
    j["layers"] = detail::layers_to_json(params);
    j["adam"] = {{"t", adam.t},
                 {"lr", adam.config.lr},
                 {"beta1", adam.config.beta1},
                 {"beta2", adam.config.beta2},
                 {"eps", adam.config.eps},
                 {"m", detail::layers_to_json(adam.m)},
                 {"v", detail::layers_to_json(adam.v)}};
    j["metadata"] = metadata;
    return j;
}

// `expected_sizes`, when given, must match the stored topology exactly.
inline Checkpoint checkpoint_from_json(const nlohmann::json& j, const std::optional<std::vector<int>>& expected_sizes = {}) {
    Checkpoint ck;
    try {
        if (!j.is_object() || j.value("format", "") != "auscultrl-qnet") throw FormatError("checkpoint: not an auscultrl-qnet document");
        ck.params = detail::layers_from_json(j.at("layers"), "params");
        const auto declared = j.at("layer_sizes").get<std::vector<int>>();
        if (declared != ck.params.sizes()) throw StructureError("checkpoint: layer_sizes header disagrees with stored layers");
        const auto& a = j.at("adam");
        ck.adam.t = a.at("t").get<std::int64_t>();
        ck.adam.config = {a.at("lr").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
                          a.at("eps").get<double>()};
        ck.adam.m = detail::layers_from_json(a.at("m"), "adam.m");
        ck.adam.v = detail::layers_from_json(a.at("v"), "adam.v");
        if (ck.adam.m.sizes() != declared || ck.adam.v.sizes() != declared)
            throw StructureError("checkpoint: Adam moment shapes differ from parameter shapes");
        ck.metadata = j.value("metadata", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
    if (expected_sizes && *expected_sizes != ck.params.sizes()) {
        std::string got, want;
        for (int s : ck.params.sizes()) got += std::to_string(s) + " ";
        for (int s : *expected_sizes) want += std::to_string(s) + " ";
        throw StructureError("checkpoint: layer sizes [" + got + "] do not match expected [" + want + "]");
    }
    return ck;
}

inline void save_checkpoint(const QNetwork& params, const AdamState& adam, const nlohmann::json& metadata,
                            const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("checkpoint: cannot write " + path.string());
    out << checkpoint_to_json(params, adam, metadata).dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path,
                                  const std::optional<std::vector<int>>& expected_sizes = {}) {
    std::ifstream in(path);
    if (!in) throw FormatError("checkpoint: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("checkpoint: corrupt file: ") + e.what());
    }
    return checkpoint_from_json(j, expected_sizes);
}

} // namespace auscultrl
