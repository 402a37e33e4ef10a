#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "nntree/network.hpp"

namespace nntree {

/// Current weight-file version written by save_network.
inline constexpr int kWeightsVersion = 1;

nlohmann::ordered_json activation_to_json(const PwlActivation& act);
/// `field` prefixes diagnostics, e.g. "layers[2].activation".
PwlActivation activation_from_json(const nlohmann::ordered_json& j, const std::string& field);

nlohmann::ordered_json network_to_json(const NetworkSpec& net);
/// Throws SchemaError for malformed content and DimensionError when the
/// layer shapes do not chain.
NetworkSpec network_from_json(const nlohmann::ordered_json& doc);

std::string dump_network(const NetworkSpec& net);
NetworkSpec parse_network(const std::string& text);

void save_network(const NetworkSpec& net, const std::filesystem::path& path);
NetworkSpec load_network(const std::filesystem::path& path);

/// Writes `text` to `path`, throwing std::runtime_error on I/O failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace nntree
