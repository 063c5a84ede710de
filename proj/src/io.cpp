#include "geoproto/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "geoproto/error.hpp"
#include "json.hpp"

#ifndef GEOPROTO_VERSION
#define GEOPROTO_VERSION "0.0.0"
#endif

namespace geoproto {

namespace fs = std::filesystem;

std::string version_string() { return GEOPROTO_VERSION; }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

void atomic_write(const std::string& path, std::string_view content) {
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw ComputationError("cannot create directory '" + target.parent_path().string() +
                                   "': " + ec.message());
  }
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ComputationError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw ComputationError("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw ComputationError("cannot rename onto '" + path + "': " + ec.message());
  }
}

std::string csv_preamble(Seed seed, const std::string& config_hash) {
  return "# geoproto " + version_string() + "\n# seed=" + std::to_string(seed) +
         " config_hash=" + config_hash + "\n";
}

void update_run_manifest(const std::string& dir, const ManifestEntry& entry) {
  using nlohmann::json;
  const fs::path path = fs::path(dir) / "run-manifest.json";
  json manifest = json::object();
  if (fs::exists(path)) {
    std::ifstream in(path);
    try {
      manifest = json::parse(in);
    } catch (const json::parse_error&) {
      manifest = json::object();  // unreadable manifests are replaced
    }
    if (!manifest.is_object()) manifest = json::object();
  }
  manifest["geoproto_version"] = version_string();
  manifest["compiler"] = __VERSION__;
  json run{{"seed", entry.seed},
           {"config_hash", entry.config_hash},
           {"outputs", entry.outputs}};
  if (!entry.input_hash.empty()) run["input_hash"] = entry.input_hash;
  manifest["runs"][entry.command] = run;
  atomic_write(path.string(), manifest.dump(2) + "\n");
}

}  // namespace geoproto
