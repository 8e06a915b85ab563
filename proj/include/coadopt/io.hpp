#pragma once

// File formats: JSON model configs, per-node state CSV, content digests.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "coadopt/model.hpp"

namespace coadopt {

using json = nlohmann::json;

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::string hex_digest(std::uint64_t h);

/// Serializes with inline matrices. Doubles are written shortest-round-trip,
/// so parse_config(config_to_json(c)) == c.
json config_to_json(const ModelConfig& cfg);

/// `physical` / `social` may be an inline matrix, a path to an edge-list CSV
/// (relative paths resolve against base_dir), or {"edges": path, "normalize": bool}.
/// `normalize_edges` row-normalizes every edge-list graph on load.
ModelConfig parse_config(const json& doc, const std::filesystem::path& base_dir = {},
                         bool normalize_edges = false);
ModelConfig load_config(const std::filesystem::path& path, bool normalize_edges = false);
void save_config(const ModelConfig& cfg, const std::filesystem::path& path);

/// Digest of the canonical serialization; independent of file layout.
std::string config_digest(const ModelConfig& cfg);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// CSV with header `node,s,a1,a2,d1,d2,x1,x2`.
std::string state_to_csv(const SystemState& st);
SystemState parse_state_csv(std::string_view text);
SystemState load_state_csv(const std::filesystem::path& path);

json state_to_json(const SystemState& st);

}  // namespace coadopt
