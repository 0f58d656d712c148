// Exercises libwecfarm through its C header only.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "wecfarm/wecfarm.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("wecfarm_capi_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json take(char* s) {
  REQUIRE(s != nullptr);
  json j = json::parse(s);
  wf_string_free(s);
  return j;
}

struct Env {
  fs::path dir = scratch("env");
  wf_site* site = nullptr;
  wf_provider* ref = nullptr;
  wf_evaluator* eval = nullptr;

  Env() {
    const std::string csv = (dir / "records.csv").string();
    REQUIRE(wf_synthetic_records("west_coast", 600, 5, csv.c_str()) == WF_OK);
    REQUIRE(wf_site_build(csv.c_str(), "wc", R"({"n_gq": 8, "years": 2})", &site) == WF_OK);
    REQUIRE(wf_provider_reference(&ref) == WF_OK);
    REQUIRE(wf_evaluator_create(ref, site, R"({"frequency": {"count": 60}})", &eval) == WF_OK);
  }
  ~Env() {
    wf_evaluator_free(eval);
    wf_provider_free(ref);
    wf_site_free(site);
  }
};

const char* kDesign = R"({"radius": 3, "slenderness": 1.5,
  "pto": {"stiffness": 1e4, "damping": 8e4},
  "layout": [[0, 0], [40, 25], [40, -25]]})";

}  // namespace

TEST_CASE("status names and last error") {
  CHECK(std::string(wf_status_name(WF_OK)) == "ok");
  CHECK(std::string(wf_status_name(WF_ERR_NUMERICAL)) == "numerical");
  wf_site* s = nullptr;
  CHECK(wf_site_load(nullptr, &s) == WF_ERR_VALIDATION);
  CHECK(std::string(wf_last_error()).find("null") != std::string::npos);
  CHECK(wf_site_load("/nonexistent/site.json", &s) == WF_ERR_IO);
  CHECK(s == nullptr);
  wf_site_free(nullptr);
  wf_provider_free(nullptr);
  wf_evaluator_free(nullptr);
  wf_string_free(nullptr);
}

TEST_CASE("fnv-1a test vectors") {
  CHECK(wf_fnv1a64("", 0) == 0xcbf29ce484222325ULL);
  CHECK(wf_fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
  CHECK(wf_fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);
}

TEST_CASE("site build, summary and round trip") {
  Env env;
  json a = [&] {
    char* out = nullptr;
    REQUIRE(wf_site_summary(env.site, &out) == WF_OK);
    return take(out);
  }();
  CHECK(a["site_id"] == "wc");
  CHECK(a["years"] == 2);
  double total = 0;
  for (const auto& row : a["probability"])
    for (const auto& v : row) total += v.get<double>();
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  const std::string path = (env.dir / "site.json").string();
  REQUIRE(wf_site_save(env.site, path.c_str()) == WF_OK);
  wf_site* back = nullptr;
  REQUIRE(wf_site_load(path.c_str(), &back) == WF_OK);
  char* out = nullptr;
  REQUIRE(wf_site_summary(back, &out) == WF_OK);
  CHECK(take(out) == a);
  wf_site_free(back);
}

TEST_CASE("site errors") {
  const fs::path dir = scratch("site_errors");
  const std::string csv = (dir / "bad.csv").string();
  std::ofstream(csv) << "1.0,8.0\n2.0,9.0\n";
  wf_site* s = nullptr;
  CHECK(wf_site_build(csv.c_str(), "x", nullptr, &s) == WF_ERR_PARSE);
  CHECK(std::string(wf_last_error()).find("hs_m,tp_s") != std::string::npos);

  std::ofstream(csv) << "hs_m,tp_s\n1,8\n";
  CHECK(wf_site_build(csv.c_str(), "x", R"({"n_gq": 1, "years": 0, "colour": 3})", &s) ==
        WF_ERR_CONFIG);
  const std::string msg = wf_last_error();
  CHECK(msg.find("3 problems") != std::string::npos);
  CHECK(msg.find("colour: unknown key") != std::string::npos);
}

TEST_CASE("reference coefficients") {
  wf_provider* p = nullptr;
  REQUIRE(wf_provider_reference(&p) == WF_OK);
  CHECK(std::string(wf_provider_name(p)) == "reference");
  char* out = nullptr;
  REQUIRE(wf_hydro_single(p, R"({"radius": 2, "slenderness": 1, "frequency": {"count": 10}})",
                          &out) == WF_OK);
  json s = take(out);
  CHECK(s["omega"].size() == 10);
  for (const auto& b : s["damping"]) CHECK(b.get<double>() >= 0.0);

  REQUIRE(wf_hydro_pair(p, R"({"radius": 2, "slenderness": 1, "separation": 30,
                              "heading": 0.5, "frequency": {"count": 10}})",
                        &out) == WF_OK);
  json q = take(out);
  for (const auto& m : q["damping"]) CHECK(m[0][1] == m[1][0]);
  CHECK(wf_hydro_single(p, R"({"radius": 2, "slenderness": 50})", &out) != WF_OK);

  REQUIRE(wf_model_ledger(nullptr, &out) == WF_OK);
  CHECK(std::string(out).find("wecfarm.model-ledger.v1") != std::string::npos);
  wf_string_free(out);
  wf_provider_free(p);
}

TEST_CASE("evaluate") {
  Env env;
  char* out = nullptr;
  REQUIRE(wf_evaluate(env.eval, kDesign, 1, &out) == WF_OK);
  json r = take(out);
  CHECK(r["feasible"] == true);
  CHECK(r["p_v"].get<double>() > 0.0);
  CHECK(r["device_power"].size() == 3);
  CHECK(r["q_factor"].is_number());
  CHECK(r["provider"] == "reference");

  // same design, mirrored in y
  json d = json::parse(kDesign);
  for (auto& p : d["layout"]) p[1] = -p[1].get<double>();
  REQUIRE(wf_evaluate(env.eval, d.dump().c_str(), 0, &out) == WF_OK);
  CHECK(std::fabs(take(out)["p_v"].get<double>() - r["p_v"].get<double>()) <=
        1e-12 * r["p_v"].get<double>());

  CHECK(wf_evaluate(env.eval, R"({"radius": 3})", 0, &out) == WF_ERR_CONFIG);
  const std::string msg = wf_last_error();
  CHECK(msg.find("slenderness: missing") != std::string::npos);
  CHECK(msg.find("layout: missing") != std::string::npos);
  CHECK(msg.find("pto: missing") != std::string::npos);

  CHECK(wf_evaluate(env.eval, R"({"radius": 3, "slenderness": 1,
      "pto": {"stiffness": [1, 2], "damping": [1, 2]}, "layout": [[0, 0]]})",
                    0, &out) == WF_ERR_CONFIG);
  CHECK(wf_evaluate(env.eval, "{not json", 0, &out) == WF_ERR_PARSE);
}

TEST_CASE("evaluator config problems are listed together") {
  Env env;
  wf_evaluator* e = nullptr;
  CHECK(wf_evaluator_create(env.ref, env.site,
                            R"({"frequency": {"count": 1}, "efficiency": {"pcc": 2}, "extra": 1})",
                            &e) == WF_ERR_CONFIG);
  const std::string msg = wf_last_error();
  CHECK(msg.find("frequency.") != std::string::npos);
  CHECK(msg.find("efficiency.") != std::string::npos);
  CHECK(msg.find("extra: unknown key") != std::string::npos);
  CHECK(e == nullptr);
}

TEST_CASE("optimize") {
  Env env;
  const char* study = R"({"study": "II", "devices": 3,
    "ga": {"population": 8, "generations": 3, "seed": 7}})";
  char* a = nullptr;
  char* b = nullptr;
  REQUIRE(wf_optimize(env.eval, study, 1, nullptr, nullptr, &a) == WF_OK);
  int calls = 0;
  auto cb = [](const char* text, void* user) {
    json g = json::parse(text);
    CHECK(g.contains("best_fitness"));
    ++*static_cast<int*>(user);
  };
  REQUIRE(wf_optimize(env.eval, study, 2, cb, &calls, &b) == WF_OK);
  CHECK(calls == 4);
  CHECK(std::string(a) == std::string(b));
  json r = take(a);
  wf_string_free(b);
  CHECK(r["history"].size() == 4);
  CHECK(r["best"]["layout"].size() == 3);
  CHECK(r["evaluations"] == 8 + 3 * 7);

  char* out = nullptr;
  CHECK(wf_optimize(env.eval, R"({"study": "III", "fixed_control": [0, 1e5]})", 1, nullptr,
                    nullptr, &out) == WF_ERR_CONFIG);
  CHECK(wf_optimize(env.eval, R"({"study": "IV", "ga": {"population": 3}})", 1, nullptr,
                    nullptr, &out) == WF_ERR_CONFIG);
  const std::string msg = wf_last_error();
  CHECK(msg.find("study:") != std::string::npos);
  CHECK(msg.find("population") != std::string::npos);
}

TEST_CASE("analyses") {
  Env env;
  char* out = nullptr;
  // the reference provider standing in for the surrogate
  REQUIRE(wf_benchmark(env.eval, env.eval, 12, 3, 9, 1, &out) == WF_OK);
  json b = take(out);
  CHECK(b["relative"]["p99"] == 0.0);
  CHECK(b["relative_error"].size() == 12);

  REQUIRE(wf_random_layouts(env.eval, kDesign, 10, 4, 1, &out) == WF_OK);
  json r = take(out);
  CHECK(r["layout_pv"].size() == 10);
  CHECK(r["percentile"].get<double>() >= 0.0);
  CHECK(r["percentile"].get<double>() <= 100.0);

  REQUIRE(wf_sensitivity(env.eval, kDesign, 1, 11, 20.0, 1, &out) == WF_OK);
  json s = take(out);
  CHECK(s["xs"].size() == 11);
  CHECK(s["pv"].size() == 11);
  CHECK(s["offset"].get<double>() >= 0.0);

  CHECK(wf_sensitivity(env.eval, kDesign, 0, 11, 20.0, 1, &out) == WF_ERR_VALIDATION);
}

TEST_CASE("surrogate train and validate, small plan") {
  const fs::path dir = scratch("models");
  const char* plan = R"({"maps": ["A", "B"], "initial_single": 60, "rounds": 1,
    "batch_single": 10, "batch_pair": 10, "pool": 100, "epochs_single": 40, "retrain_single": 10,
    "grid_single": 5, "frequency": {"count": 20}, "committee": {"members": 3}})";
  char* out = nullptr;
  const wf_status st = wf_surrogate_train(plan, dir.string().c_str(), 1, nullptr, nullptr, &out);
  INFO(std::string(wf_last_error()));
  REQUIRE(st == WF_OK);
  json t = take(out);
  CHECK(t["maps"].size() == 2);
  CHECK(fs::exists(dir / "A.committee.json"));
  CHECK(fs::exists(dir / "B.committee.json"));

  REQUIRE(wf_surrogate_validate(dir.string().c_str(), R"({"cheating": true, "grid_single": 5})",
                                1, &out) == WF_OK);
  json v = take(out);
  for (const auto& m : v["maps"]) {
    CHECK(m["max"] == 0.0);
    CHECK(m["passed"] == true);
  }

  wf_provider* p = nullptr;
  CHECK(wf_provider_surrogate(dir.string().c_str(), 0, &p) != WF_OK);  // maps missing
  CHECK(wf_surrogate_train(R"({"rounds": "five"})", dir.string().c_str(), 1, nullptr, nullptr,
                           &out) == WF_ERR_CONFIG);
}
