#include "carnot/cli.hpp"

#include "carnot/config.hpp"
#include "carnot/experiments.hpp"
#include "carnot/parallel.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace carnot {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Invocation {
  std::string subcommand;
  std::string config_path;
  std::string output_dir = "out";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  int threads = default_threads();
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + p.string() + "'");
}

json prepare(json j, const Invocation& inv) {
  for (const auto& o : inv.overrides) apply_override(j, o);
  if (inv.seed) j["seed"] = *inv.seed;
  return j;
}

struct Outcome {
  bool pass = true;
  json summary;
};

// Runs one experiment kind and writes its files into dir.
Outcome run_kind(const std::string& kind, const ExperimentConfig& cfg, const fs::path& dir, int threads) {
  fs::create_directories(dir);
  Outcome o;
  if (kind == "simulate") {
    fs::create_directories(dir / "paths");
    const std::size_t count = std::min(cfg.replicas, cfg.simulate.paths);
    std::vector<PathSample> paths(count);
    parallel_for(count, threads, [&](std::size_t i) {
      RngStream rng(cfg.seed, stream_id(5, i));
      paths[i] = simulate_path(cfg.start, cfg.simulate.T, cfg.h, rng);
    });
    json files = json::array();
    for (std::size_t i = 0; i < count; ++i) {
      std::ostringstream s;
      write_path_csv(s, paths[i]);
      const std::string name = "path_" + std::to_string(i) + ".csv";
      write_text(dir / "paths" / name, s.str());
      files.push_back("paths/" + name);
    }
    o.summary = {{"paths", files}, {"T", cfg.simulate.T}, {"h", cfg.h}};
  } else if (kind == "rate" || kind == "couple") {
    const RateReport r = rate_experiment(cfg, threads);
    std::ostringstream csv;
    write_rate_csv(csv, r.curve);
    write_text(dir / "rate.csv", csv.str());
    if (kind == "couple") {
      std::ostringstream tr;
      for (const auto& t : r.traces) tr << to_json(t).dump() << '\n';
      write_text(dir / "traces.jsonl", tr.str());
    }
    o.pass = r.curve.pass;
    o.summary = r.summary();
  } else if (kind == "tv") {
    const TvReport r = tv_bound_experiment(cfg, threads);
    o.pass = r.pass;
    o.summary = r.summary();
  } else if (kind == "areas") {
    const AreaReport r = area_lemma_experiment(cfg, threads);
    o.pass = r.pass;
    o.summary = r.summary();
  } else if (kind == "exit") {
    const ExitReport r = exit_time_experiment(cfg, threads);
    o.pass = r.pass;
    o.summary = r.summary();
  } else if (kind == "gradient") {
    const GradientReport r = gradient_experiment(cfg, threads);
    o.pass = r.pass;
    o.summary = r.summary();
  } else {
    throw ConfigError("unknown experiment kind '" + kind + "'");
  }
  json report = {{"kind", kind},
                 {"verdict", o.pass ? "PASS" : "FAIL"},
                 {"summary", o.summary},
                 {"config", config_to_json(cfg)}};
  write_text(dir / "report.json", report.dump(2) + "\n");
  return o;
}

int execute(const Invocation& inv, std::ostream& out) {
  const json raw = read_json_file(inv.config_path);
  const fs::path dir(inv.output_dir);

  if (inv.subcommand != "verify-all") {
    json j = prepare(raw, inv);
    const ExperimentConfig cfg = parse_config(j);
    if (!cfg.kind.empty() && cfg.kind != inv.subcommand)
      throw ConfigError("config kind '" + cfg.kind + "' does not match subcommand '" + inv.subcommand + "'");
    const Outcome o = run_kind(inv.subcommand, cfg, dir, inv.threads);
    out << (o.pass ? "PASS " : "FAIL ") << inv.subcommand << "\n";
    return o.pass ? 0 : 1;
  }

  // verify-all: {"schema_version": 1, "experiments": [ {... "kind": ...}, ... ]}
  if (!raw.is_object() || !raw.contains("experiments") || !raw["experiments"].is_array())
    throw ConfigError("verify-all config needs an 'experiments' array");
  for (auto it = raw.begin(); it != raw.end(); ++it)
    if (it.key() != "schema_version" && it.key() != "experiments" && it.key() != "name")
      throw ConfigError("verify-all config: unknown key '" + it.key() + "'");
  if (!raw.contains("schema_version") || raw["schema_version"] != 1)
    throw ConfigError("verify-all config: schema_version must be 1");

  struct Entry {
    std::string label;
    ExperimentConfig cfg;
  };
  std::vector<Entry> entries;
  std::size_t idx = 0;
  for (json e : raw["experiments"]) {
    if (!e.is_object()) throw ConfigError("verify-all: every experiment must be an object");
    if (!e.contains("schema_version")) e["schema_version"] = 1;
    ExperimentConfig cfg = parse_config(prepare(e, inv));
    if (cfg.kind.empty()) throw ConfigError("verify-all: experiment " + std::to_string(idx) + " has no kind");
    std::string label = cfg.name.empty() ? cfg.kind + "_" + std::to_string(idx) : cfg.name;
    entries.push_back({std::move(label), std::move(cfg)});
    ++idx;
  }

  json results = json::array();
  bool all = true;
  for (const auto& e : entries) {
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome o = run_kind(e.cfg.kind, e.cfg, dir / e.label, inv.threads);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && o.pass;
    out << (o.pass ? "PASS " : "FAIL ") << e.label << " (" << e.cfg.kind << ")\n";
    results.push_back({{"name", e.label}, {"kind", e.cfg.kind}, {"verdict", o.pass ? "PASS" : "FAIL"},
                       {"seconds", secs}});
  }
  write_text(dir / "report.json",
             json{{"verdict", all ? "PASS" : "FAIL"}, {"experiments", results}}.dump(2) + "\n");
  return all ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coupling simulator for free step-2 Carnot groups"};
  app.require_subcommand(1);
  Invocation inv;
  std::uint64_t seed = 0;
  const char* names[] = {"simulate", "couple", "rate", "tv", "areas", "exit", "gradient", "verify-all"};
  for (const char* name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("config", inv.config_path, "JSON config file")->required();
    sub->add_option("--out,-o", inv.output_dir, "output directory");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--threads", inv.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--set", inv.overrides, "override a config key: key=value (dotted keys for nested objects)");
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  for (const char* name : names)
    if (app.got_subcommand(name)) {
      inv.subcommand = name;
      if (app.get_subcommand(name)->count("--seed") > 0) inv.seed = seed;
    }

  try {
    return execute(inv, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
  } catch (const std::runtime_error& e) {
    // Numerical or block-budget diagnostics: the run did not verify.
    err << "run failed: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace carnot
