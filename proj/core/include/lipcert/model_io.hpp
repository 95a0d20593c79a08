#pragma once

#include <filesystem>
#include <string>

#include "lipcert/model.hpp"

namespace lipcert {

inline constexpr const char* kModelFormat = "lipcert-v1";

/// Parses a lipcert-v1 JSON document. Throws Error{ParseError} on malformed
/// input; structural checks are left to validate_network().
NetworkSpec network_from_json(const std::string& text);
std::string network_to_json(const NetworkSpec& spec);

NetworkSpec load_network(const std::filesystem::path& path);
void save_network(const NetworkSpec& spec, const std::filesystem::path& path);

}  // namespace lipcert
