#pragma once

// Versioned JSON checkpoint:
//
//   {"version": 1,
//    "heads": {"A": [...], "B": [...], "C": [...],
//              "A_target": [...], "B_target": [...], "C_target": [...]}}
//
// where each head is a list of layers
//   {"in": n, "out": m, "activation": "tanh", "weights": [row-major], "bias": [...]}.
// Doubles are written in shortest round-trip form, so save/load is bit exact.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "merge_rl/errors.hpp"
#include "merge_rl/neuralnet.hpp"
#include "merge_rl/qfunction.hpp"

namespace merge_rl {

inline constexpr int kCheckpointVersion = 1;

using json = nlohmann::json;

inline json head_to_json(const nn::NetParams& p) {
    json layers = json::array();
    for (const auto& l : p.layers) {
        layers.push_back({{"in", l.spec.input_dim},
                          {"out", l.spec.output_dim},
                          {"activation", std::string(nn::to_string(l.spec.activation))},
                          {"weights", l.weights},
                          {"bias", l.bias}});
    }
    return layers;
}

inline nn::NetParams head_from_json(const json& j, const std::string& name) {
    using Kind = CheckpointError::Kind;
    if (!j.is_array() || j.empty()) throw CheckpointError(Kind::Corrupt, "head '" + name + "' is not a layer list");
    nn::NetParams p;
    try {
        for (const auto& lj : j) {
            nn::Layer l;
            l.spec.input_dim = lj.at("in").get<std::size_t>();
            l.spec.output_dim = lj.at("out").get<std::size_t>();
            l.spec.activation = nn::activation_from_string(lj.at("activation").get<std::string>());
            l.weights = lj.at("weights").get<std::vector<double>>();
            l.bias = lj.at("bias").get<std::vector<double>>();
            if (l.weights.size() != l.spec.input_dim * l.spec.output_dim || l.bias.size() != l.spec.output_dim)
                throw CheckpointError(Kind::Shape, "head '" + name + "': weight/bias lengths do not match in/out");
            p.layers.push_back(std::move(l));
        }
        nn::validate_specs(nn::specs_of(p));
    } catch (const CheckpointError&) {
        throw;
    } catch (const ConfigError& e) {
        throw CheckpointError(Kind::Shape, "head '" + name + "': " + e.what());
    } catch (const json::exception& e) {
        throw CheckpointError(Kind::Corrupt, "head '" + name + "': " + e.what());
    }
    if (!p.all_finite()) throw CheckpointError(Kind::Corrupt, "head '" + name + "' contains non-finite values");
    return p;
}

/// Named heads in one versioned document.
using HeadMap = std::map<std::string, nn::NetParams>;

inline json heads_to_document(const HeadMap& heads) {
    json doc;
    doc["version"] = kCheckpointVersion;
    json hs = json::object();
    for (const auto& [name, p] : heads) hs[name] = head_to_json(p);
    doc["heads"] = hs;
    return doc;
}

inline HeadMap heads_from_document(const json& doc) {
    using Kind = CheckpointError::Kind;
    if (!doc.is_object() || !doc.contains("version"))
        throw CheckpointError(Kind::Corrupt, "checkpoint has no version tag");
    if (!doc["version"].is_number_integer() || doc["version"].get<int>() != kCheckpointVersion)
        throw CheckpointError(Kind::Version, "unsupported checkpoint version " + doc["version"].dump() + " (expected " +
                                                 std::to_string(kCheckpointVersion) + ")");
    if (!doc.contains("heads") || !doc["heads"].is_object())
        throw CheckpointError(Kind::Corrupt, "checkpoint has no heads object");
    HeadMap out;
    for (const auto& [name, hj] : doc["heads"].items()) out[name] = head_from_json(hj, name);
    return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError(CheckpointError::Kind::Io, "cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw CheckpointError(CheckpointError::Kind::Io, "failed writing " + path.string());
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError(CheckpointError::Kind::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw CheckpointError(CheckpointError::Kind::Corrupt, path.string() + ": " + e.what());
    }
}

/// Single network stored under the head name "net".
inline void save(const nn::NetParams& p, const std::filesystem::path& path) {
    write_text_file(path, heads_to_document({{"net", p}}).dump() + "\n");
}

inline nn::NetParams load(const std::filesystem::path& path) {
    auto heads = heads_from_document(read_json_file(path));
    auto it = heads.find("net");
    if (it == heads.end()) throw CheckpointError(CheckpointError::Kind::Corrupt, "checkpoint has no 'net' head");
    return it->second;
}

inline std::string checkpoint_text(const QTargetPair& pair) {
    return heads_to_document({{"A", pair.prediction.head_a},
                              {"B", pair.prediction.head_b},
                              {"C", pair.prediction.head_c},
                              {"A_target", pair.target.head_a},
                              {"B_target", pair.target.head_b},
                              {"C_target", pair.target.head_c}})
               .dump() +
           "\n";
}

inline void save_checkpoint(const QTargetPair& pair, const std::filesystem::path& path) {
    write_text_file(path, checkpoint_text(pair));
}

/// Restores both networks. Action bounds and curvature floor come from `cfg`;
/// layer shapes must match each other across the three heads.
inline QTargetPair load_checkpoint(const std::filesystem::path& path, const QNetConfig& cfg = {}) {
    using Kind = CheckpointError::Kind;
    auto heads = heads_from_document(read_json_file(path));
    auto take = [&](const char* name) {
        auto it = heads.find(name);
        if (it == heads.end()) throw CheckpointError(Kind::Corrupt, std::string("checkpoint is missing head ") + name);
        return it->second;
    };
    QTargetPair pair;
    auto fill = [&](QNet& q, const char* a, const char* b, const char* c) {
        q.head_a = take(a);
        q.head_b = take(b);
        q.head_c = take(c);
        q.a_min = cfg.a_min;
        q.a_max = cfg.a_max;
        q.curvature_floor = cfg.curvature_floor;
        for (const auto* h : {&q.head_a, &q.head_b, &q.head_c})
            if (h->output_dim() != 1 || h->input_dim() != q.head_a.input_dim())
                throw CheckpointError(Kind::Shape, "coefficient heads must map the same state size to one value");
    };
    fill(pair.prediction, "A", "B", "C");
    fill(pair.target, "A_target", "B_target", "C_target");
    if (!nn::same_shape(pair.prediction.head_a, pair.target.head_a))
        throw CheckpointError(Kind::Shape, "prediction and target architectures differ");
    return pair;
}

}  // namespace merge_rl
