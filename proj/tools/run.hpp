#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wecfarm/wecfarm.h"

namespace wfcli {

namespace fs = std::filesystem;
using nlohmann::json;

// Failure carrying the process exit code: 1 for bad input, 2 for runtime.
struct Failure {
  int code;
  std::string kind;
  std::string message;
};

[[noreturn]] void fail_input(const std::string& kind, const std::string& msg);
[[noreturn]] void fail_runtime(const std::string& kind, const std::string& msg);
// Throws a Failure for any non-OK status with wf_last_error() attached.
void check(wf_status s);

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out_dir;
  std::string name;  // run directory name; derived from the config hash when empty

  unsigned thread_count() const;
  fs::path out_root() const;
};

std::string hex64(std::uint64_t v);
std::uint64_t file_digest(const fs::path& p);
std::uint64_t text_digest(const std::string& s);

// One run directory with its manifest.
class Run {
 public:
  Run(std::string command, json config, const Globals& g, std::uint64_t seed);

  const fs::path& dir() const { return dir_; }
  std::uint64_t config_hash() const { return hash_; }
  std::uint64_t seed() const { return seed_; }

  void input(const fs::path& p);
  // Input directory: every regular file inside, sorted by name.
  void input_dir(const fs::path& p);
  fs::path write(const std::string& name, const std::string& content);
  void output(const fs::path& p);  // a file written by someone else
  void finish(const json& summary = json::object());

 private:
  std::string command_;
  json config_;
  std::uint64_t hash_;
  std::uint64_t seed_;
  fs::path dir_;
  std::string started_;
  json inputs_ = json::array();
  std::vector<fs::path> outputs_;
};

// Reads a JSON config file; relative paths inside are taken from its folder.
struct Config {
  json j;
  fs::path base;
  fs::path resolve(const std::string& p) const;
};
Config load_config(const std::string& path);
json read_json_file(const fs::path& p, const std::string& what);
std::string fmt(double v);  // round-trip decimal

}  // namespace wfcli
