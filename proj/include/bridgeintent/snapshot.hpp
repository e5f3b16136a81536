#pragma once

// Saved filter banks: the scenario, arrival grid, clock and every cell's
// state, written with round-trip precision so a restored bank continues
// bit-for-bit.

#include "bridgeintent/intent.hpp"

#include <json.hpp>

#include <filesystem>

namespace bridgeintent::io {

nlohmann::json snapshot_to_json(const intent::FilterBank& bank);
intent::FilterBank snapshot_from_json(const nlohmann::json& doc, const std::string& source = "snapshot");

void save_snapshot(const std::filesystem::path& path, const intent::FilterBank& bank);
intent::FilterBank load_snapshot(const std::filesystem::path& path);

}  // namespace bridgeintent::io
