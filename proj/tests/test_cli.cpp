#include <doctest.h>

#include "carnot/cli.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = carnot::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("carnot_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "cfg.json";
  std::ofstream(p) << j.dump();
  return p;
}

json line_config() {
  return {{"schema_version", 1}, {"kind", "rate"}, {"n", 3}, {"seed", 4}, {"replicas", 300}, {"target", "line"},
          {"start", {{"x", {0, 0, 0}}, {"z", {0, 0, 0}}}},
          {"start_tilde", {{"x", {0, 0, 0}}, {"z", {1, 0, 0}}}},
          {"t_grid", {1, 2, 4, 8, 16}}};
}

}  // namespace

TEST_CASE("cli rate run writes its files and is reproducible") {
  const fs::path d = scratch("rate");
  json j = line_config();
  j["kind"] = "couple";
  const fs::path cfg = write_config(d, j);
  const Run a = cli({"couple", cfg.string(), "--out", (d / "a").string()});
  CHECK(a.code == 0);
  CHECK(a.out == "PASS couple\n");
  CHECK(fs::exists(d / "a" / "rate.csv"));
  CHECK(fs::exists(d / "a" / "traces.jsonl"));
  const json rep = json::parse(slurp(d / "a" / "report.json"));
  CHECK(rep["verdict"] == "PASS");
  CHECK(rep["config"]["seed"] == 4);

  CHECK(cli({"couple", cfg.string(), "-o", (d / "b").string(), "--threads", "2"}).code == 0);
  CHECK(slurp(d / "a" / "rate.csv") == slurp(d / "b" / "rate.csv"));
  CHECK(slurp(d / "a" / "traces.jsonl") == slurp(d / "b" / "traces.jsonl"));

  CHECK(cli({"couple", cfg.string(), "-o", (d / "c").string(), "--seed", "5"}).code == 0);
  CHECK(slurp(d / "a" / "traces.jsonl") != slurp(d / "c" / "traces.jsonl"));
  CHECK(json::parse(slurp(d / "c" / "report.json"))["config"]["seed"] == 5);

  const json first = json::parse(slurp(d / "a" / "traces.jsonl").substr(0, slurp(d / "a" / "traces.jsonl").find('\n')));
  CHECK(first.contains("tau"));
  CHECK(first["per_line"][0]["line"] == 1);
}

TEST_CASE("cli coincident start passes with zero survival") {
  const fs::path d = scratch("same");
  json j = line_config();
  j["target"] = "global";
  j["start_tilde"] = j["start"];
  const fs::path cfg = write_config(d, j);
  CHECK(cli({"rate", cfg.string(), "-o", (d / "o").string()}).code == 0);
  CHECK(slurp(d / "o" / "rate.csv").find("\n1,0,") != std::string::npos);
}

TEST_CASE("cli rejects bad input with exit code 2") {
  const fs::path d = scratch("bad");
  json j = line_config();
  j["unexpected"] = 1;
  const Run r = cli({"rate", write_config(d, j).string(), "-o", (d / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("unknown key 'unexpected'") != std::string::npos);
  CHECK(cli({"rate", (d / "missing.json").string()}).code == 2);
  std::ofstream(d / "broken.json") << "{ not json";
  CHECK(cli({"rate", (d / "broken.json").string()}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"rate", write_config(d, line_config()).string(), "--set", "n=1"}).code == 2);
  // kind and subcommand must agree
  CHECK(cli({"areas", write_config(d, line_config()).string()}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("cli override and simulate") {
  const fs::path d = scratch("sim");
  json j = line_config();
  j["kind"] = "simulate";
  j["simulate"] = {{"T", 0.5}, {"paths", 2}};
  const fs::path cfg = write_config(d, j);
  CHECK(cli({"simulate", cfg.string(), "-o", (d / "o").string(), "--set", "h=0.1"}).code == 0);
  const std::string csv = slurp(d / "o" / "paths" / "path_1.csv");
  CHECK(csv.rfind("t,x_1,x_2,x_3,z_1_2,z_1_3,z_2_3\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);  // header plus 6 grid points
}

TEST_CASE("cli verify-all aggregates") {
  const fs::path d = scratch("all");
  json e1 = line_config();
  e1["name"] = "line3";
  json e2 = line_config();
  e2.erase("kind");
  json cfg = {{"schema_version", 1}, {"experiments", {e1}}};
  const Run r = cli({"verify-all", write_config(d, cfg).string(), "-o", (d / "o").string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(d / "o" / "line3" / "rate.csv"));
  CHECK(json::parse(slurp(d / "o" / "report.json"))["verdict"] == "PASS");
  cfg["experiments"].push_back(e2);
  CHECK(cli({"verify-all", write_config(d, cfg).string(), "-o", (d / "p").string()}).code == 2);
}
