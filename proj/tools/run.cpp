#include "run.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

namespace wfcli {

void fail_input(const std::string& kind, const std::string& msg) { throw Failure{1, kind, msg}; }
void fail_runtime(const std::string& kind, const std::string& msg) { throw Failure{2, kind, msg}; }

void check(wf_status s) {
  if (s == WF_OK) return;
  const std::string kind = wf_status_name(s);
  switch (s) {
    case WF_ERR_VALIDATION:
    case WF_ERR_GEOMETRY:
    case WF_ERR_DIMENSION:
    case WF_ERR_CONFIG:
    case WF_ERR_PARSE:
    case WF_ERR_IO:
      fail_input(kind, wf_last_error());
    default:
      fail_runtime(kind, wf_last_error());
  }
}

unsigned Globals::thread_count() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

fs::path Globals::out_root() const {
  if (!out_dir.empty()) return out_dir;
  if (const char* env = std::getenv("WECFARM_OUT"); env && *env) return env;
  return "runs";
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t text_digest(const std::string& s) { return wf_fnv1a64(s.data(), s.size()); }

std::uint64_t file_digest(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail_input("io", "cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return text_digest(buf.str());
}

namespace {

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string slug(std::string s) {
  for (char& c : s)
    if (c == ' ') c = '-';
  return s;
}

}  // namespace

Run::Run(std::string command, json config, const Globals& g, std::uint64_t seed)
    : command_(std::move(command)), config_(std::move(config)), seed_(seed) {
  const json keyed = {{"command", command_}, {"config", config_}, {"seed", seed_}};
  hash_ = text_digest(keyed.dump());
  const std::string name = g.name.empty() ? slug(command_) + "-" + hex64(hash_).substr(0, 12) : g.name;
  dir_ = g.out_root() / name;
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) fail_input("io", "cannot create run directory " + dir_.string() + ": " + ec.message());
  fs::remove(dir_ / "manifest.json", ec);
  started_ = now_utc();
}

void Run::input(const fs::path& p) {
  inputs_.push_back({{"path", p.string()}, {"fnv1a64", hex64(file_digest(p))}});
}

void Run::input_dir(const fs::path& p) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(p))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) input(f);
}

fs::path Run::write(const std::string& name, const std::string& content) {
  const fs::path p = dir_ / name;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
  if (!out) fail_input("io", "cannot write " + p.string());
  outputs_.push_back(p);
  return p;
}

void Run::output(const fs::path& p) { outputs_.push_back(p); }

void Run::finish(const json& summary) {
  json m;
  m["schema"] = "wecfarm.manifest.v1";
  m["command"] = command_;
  m["artifact_version"] = wf_version();
  m["config_hash"] = hex64(hash_);
  m["seed"] = seed_;
  m["config"] = config_;
  m["started"] = started_;
  m["finished"] = now_utc();
  m["inputs"] = inputs_;
  json outs = json::array();
  std::vector<fs::path> sorted = outputs_;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& p : sorted)
    outs.push_back({{"path", fs::relative(p, dir_).string()}, {"fnv1a64", hex64(file_digest(p))}});
  m["outputs"] = std::move(outs);
  m["summary"] = summary;
  std::ofstream out(dir_ / "manifest.json");
  out << m.dump(2) << '\n';
  if (!out) fail_input("io", "cannot write manifest in " + dir_.string());
}

fs::path Config::resolve(const std::string& p) const {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

json read_json_file(const fs::path& p, const std::string& what) {
  std::ifstream in(p);
  if (!in) fail_input("io", "missing " + what + ": " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail_input("parse", p.string() + ": " + e.what());
  }
}

Config load_config(const std::string& path) {
  Config c;
  c.j = read_json_file(path, "config file");
  if (!c.j.is_object()) fail_input("config", path + ": expected a JSON object");
  c.base = fs::path(path).parent_path();
  return c;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace wfcli
