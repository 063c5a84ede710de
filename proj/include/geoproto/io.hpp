#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "geoproto/random.hpp"

namespace geoproto {

std::string version_string();

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);
/// FNV-1a of a file's bytes, as 16 hex digits.
std::string file_hash(const std::string& path);

/// Writes to a sibling temporary file, then renames it over `path`.
/// Creates missing parent directories.
void atomic_write(const std::string& path, std::string_view content);

/// Leading comment lines for CSV outputs; readers skip them.
std::string csv_preamble(Seed seed, const std::string& config_hash);

struct ManifestEntry {
  std::string command;
  Seed seed = 0;
  std::string config_hash;
  std::string input_hash;  // empty when the command reads no input table
  std::vector<std::string> outputs;
};

/// Merges the entry into <dir>/run-manifest.json, keyed by command.
void update_run_manifest(const std::string& dir, const ManifestEntry& entry);

}  // namespace geoproto
