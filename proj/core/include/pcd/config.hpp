#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pcd/harness.hpp"

namespace pcd {

// Canonical JSON document (sorted keys, compact) describing a run config.
std::string config_to_json(const PcdRunConfig& cfg, int indent = -1);

// Parses a JSON config. Missing keys keep their defaults; unknown keys and
// ill-typed values are errors naming the offending key.
PcdRunConfig config_from_json(const std::string& text);
PcdRunConfig config_from_json(const std::string& text, const PcdRunConfig& defaults);

PcdRunConfig load_config(const std::filesystem::path& path);

// FNV-1a 64 of the canonical document. Execution details that cannot change
// results (thread count) are excluded.
std::uint64_t config_hash(const PcdRunConfig& cfg);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace pcd
