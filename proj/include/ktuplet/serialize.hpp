#pragma once

#include <string>

#include <json.hpp>

#include "ktuplet/mlp.hpp"

namespace ktuplet {

nlohmann::json net_to_json(const FeedForwardNet& net);
FeedForwardNet net_from_json(const nlohmann::json& j);

std::string read_file(const std::string& path);

// Writes to a temp file in the target directory, then renames into place,
// so a failed run never leaves a partial artifact behind.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace ktuplet
