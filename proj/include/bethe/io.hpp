#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bethe/population.hpp"

namespace bethe {

// %.17g rendering: round-trips doubles exactly and is byte-stable, which the
// determinism contract on CSV payloads relies on
std::string fmt_g(double v);

// FNV-1a digest used to stamp configs and check inputs
std::string digest(const std::string& text);

void write_csv_row(std::ostream& os, const std::vector<std::string>& cells);

nlohmann::json dist_to_json(const PotentialDistribution& dist);
PotentialDistribution dist_from_json(const nlohmann::json& j);

// Pool snapshot: "BTPOOL01" magic, version, distribution spec, K, zeta,
// seed, sweep counter, then the entries as little-endian f64 (re, im) pairs.
// A JSON sidecar (<path>.meta.json) mirrors the header.
void save_pool(const GreenPool& pool, const std::filesystem::path& path);
GreenPool load_pool(const std::filesystem::path& path);

}  // namespace bethe
