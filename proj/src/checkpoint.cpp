#include "supt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "supt/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written in host order and assume little-endian");

namespace supt {

Checkpoint Checkpoint::from_params(const GinConfig& cfg, const ParamGroup& params,
                                   const std::string& pretrain_tag, std::uint64_t seed) {
    Checkpoint ckpt;
    ckpt.config = cfg;
    ckpt.pretrain_tag = pretrain_tag;
    ckpt.seed = seed;
    for (const auto& e : params.entries()) ckpt.tensors.emplace_back(e.name, e.tensor);
    return ckpt;
}

ParamGroup Checkpoint::to_params(Role role) const {
    ParamGroup params;
    for (const auto& [name, tensor] : tensors) params.add(name, tensor, role);
    return params;
}

const Tensor2& Checkpoint::tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors) {
        if (n == name) return t;
    }
    throw DataError("checkpoint has no tensor named \"" + name + "\"");
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);

    nlohmann::json manifest;
    manifest["format_version"] = ckpt.format_version;
    manifest["config"] = {
        {"num_layers", ckpt.config.num_layers},   {"hidden_dim", ckpt.config.hidden_dim},
        {"input_dim", ckpt.config.input_dim},     {"epsilon", ckpt.config.epsilon},
        {"mlp_per_layer", ckpt.config.mlp_per_layer},
    };
    auto tensors = nlohmann::json::array();
    for (const auto& [name, t] : ckpt.tensors) {
        tensors.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
    }
    manifest["tensors"] = std::move(tensors);
    manifest["pretrain"] = ckpt.pretrain_tag;
    manifest["seed"] = ckpt.seed;
    if (!ckpt.provenance.empty()) manifest["provenance"] = ckpt.provenance;
    out << manifest.dump() << "\n";

    for (const auto& [name, t] : ckpt.tensors) {
        out.write(reinterpret_cast<const char*>(t.data().data()),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!out) throw DataError("write failure on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("checkpoint is empty: " + path);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
    }

    Checkpoint ckpt;
    try {
        ckpt.format_version = manifest.at("format_version").get<int>();
        if (ckpt.format_version != Checkpoint::kFormatVersion) {
            throw DataError("checkpoint format version " + std::to_string(ckpt.format_version) +
                            " is not supported (expected " +
                            std::to_string(Checkpoint::kFormatVersion) + ")");
        }
        const auto& cfg = manifest.at("config");
        ckpt.config.num_layers = cfg.at("num_layers").get<int>();
        ckpt.config.hidden_dim = cfg.at("hidden_dim").get<int>();
        ckpt.config.input_dim = cfg.at("input_dim").get<int>();
        ckpt.config.epsilon = cfg.at("epsilon").get<double>();
        ckpt.config.mlp_per_layer = cfg.at("mlp_per_layer").get<bool>();
        ckpt.pretrain_tag = manifest.at("pretrain").get<std::string>();
        ckpt.seed = manifest.at("seed").get<std::uint64_t>();
        if (manifest.contains("provenance")) {
            ckpt.provenance =
                manifest.at("provenance").get<std::map<std::string, std::string>>();
        }

        for (const auto& entry : manifest.at("tensors")) {
            const auto name = entry.at("name").get<std::string>();
            const int rows = entry.at("rows").get<int>();
            const int cols = entry.at("cols").get<int>();
            Tensor2 t(rows, cols);
            in.read(reinterpret_cast<char*>(t.data().data()),
                    static_cast<std::streamsize>(t.size() * sizeof(double)));
            if (in.gcount() != static_cast<std::streamsize>(t.size() * sizeof(double))) {
                throw DataError("checkpoint truncated while reading tensor \"" + name + "\"");
            }
            ckpt.tensors.emplace_back(name, std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint manifest schema violation: ") + e.what());
    }
    return ckpt;
}

}  // namespace supt
