#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "supt/backbone.hpp"
#include "supt/param.hpp"

namespace supt {

// Self-describing backbone container: one JSON manifest line (version, config,
// tensor names and shapes, pretrain tag, seed) followed by the tensor payloads
// as little-endian IEEE-754 doubles in manifest order. Round trips bitwise.
struct Checkpoint {
    static constexpr int kFormatVersion = 1;

    int format_version = kFormatVersion;
    GinConfig config;
    std::vector<std::pair<std::string, Tensor2>> tensors;
    std::string pretrain_tag;
    std::uint64_t seed = 0;
    // Free-form reproducibility header (run configuration, tool version).
    std::map<std::string, std::string> provenance;

    static Checkpoint from_params(const GinConfig& cfg, const ParamGroup& params,
                                  const std::string& pretrain_tag, std::uint64_t seed);
    ParamGroup to_params(Role role) const;
    const Tensor2& tensor(const std::string& name) const;

    bool operator==(const Checkpoint& o) const = default;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace supt
