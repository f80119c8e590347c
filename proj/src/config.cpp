#include "carnot/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace carnot {

using nlohmann::json;

const char* to_string(Target t) {
  switch (t) {
    case Target::Fiber: return "fiber";
    case Target::Line: return "line";
    default: return "global";
  }
}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"simulate", "couple", "rate", "tv", "areas", "exit", "gradient"};
  return kinds;
}

CouplingOptions ExperimentConfig::coupling_options() const {
  CouplingOptions o;
  o.mode = mode;
  o.m = m;
  o.h = h;
  o.horizon = horizon;
  o.max_blocks = max_blocks;
  o.block_diagonalize = block_diagonalize;
  return o;
}

namespace {

// Reads keys of one JSON object and rejects anything left unread.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!has(key)) return;
    const json& v = raw(key);
    try {
      check_type<T>(v, key);
      out = v.get<T>();
    } catch (const json::exception& e) {
      fail(std::string("key '") + key + "': " + e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where_ + ": " + msg); }
  const std::string& where() const { return where_; }

 private:
  template <class T>
  void check_type(const json& v, const char* key) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(std::string("key '") + key + "' must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(std::string("key '") + key + "' must be an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
          fail(std::string("key '") + key + "' must be non-negative");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(std::string("key '") + key + "' must be a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(std::string("key '") + key + "' must be a string");
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) fail(std::string("key '") + key + "' must be an array of numbers");
      for (const auto& e : v)
        if (!e.is_number()) fail(std::string("key '") + key + "' must be an array of numbers");
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

GroupElement parse_point(const json& j, int n, const std::string& where) {
  ObjectReader r(j, where);
  std::vector<double> x(n, 0.0), z(SkewMatrix::pair_count(n), 0.0);
  r.get("x", x);
  r.get("z", z);
  r.finish();
  if (static_cast<int>(x.size()) != n) r.fail("x must have length n = " + std::to_string(n));
  if (z.size() != SkewMatrix::pair_count(n))
    r.fail("z must have length n(n-1)/2 = " + std::to_string(SkewMatrix::pair_count(n)));
  for (double v : x)
    if (!std::isfinite(v)) r.fail("x must be finite");
  for (double v : z)
    if (!std::isfinite(v)) r.fail("z must be finite");
  return GroupElement(Eigen::Map<const Vector>(x.data(), n), SkewMatrix(n, z));
}

HomogeneousElement parse_homog_point(const json& j, int n, int m, const std::string& where) {
  ObjectReader r(j, where);
  std::vector<double> x(n, 0.0), z(m, 0.0);
  r.get("x", x);
  r.get("z", z);
  r.finish();
  if (static_cast<int>(x.size()) != n) r.fail("x must have length n");
  if (static_cast<int>(z.size()) != m) r.fail("z must have length m (number of C matrices)");
  return {Eigen::Map<const Vector>(x.data(), n), Eigen::Map<const Vector>(z.data(), m)};
}

HomogeneousSetup parse_homogeneous(const json& j, int n) {
  ObjectReader r(j, "homogeneous");
  HomogeneousSetup s;
  if (!r.has("C")) r.fail("missing key 'C'");
  const json& cs = r.raw("C");
  if (!cs.is_array() || cs.empty()) r.fail("'C' must be a non-empty array of n x n matrices");
  for (const auto& cj : cs) {
    if (!cj.is_array() || static_cast<int>(cj.size()) != n) r.fail("each C must have n rows");
    Matrix c(n, n);
    for (int i = 0; i < n; ++i) {
      if (!cj[i].is_array() || static_cast<int>(cj[i].size()) != n) r.fail("each C row must have n entries");
      for (int k = 0; k < n; ++k) {
        if (!cj[i][k].is_number()) r.fail("C entries must be numbers");
        c(i, k) = cj[i][k].get<double>();
      }
    }
    s.c.push_back(c);
  }
  const int m = static_cast<int>(s.c.size());
  s.start = HomogeneousElement{Vector::Zero(n), Vector::Zero(m)};
  s.start_tilde = s.start;
  if (r.has("start")) s.start = parse_homog_point(r.raw("start"), n, m, "homogeneous.start");
  if (r.has("start_tilde")) s.start_tilde = parse_homog_point(r.raw("start_tilde"), n, m, "homogeneous.start_tilde");
  r.finish();
  try {
    HomogeneousGroupSpec spec(s.c);
  } catch (const std::exception& e) {
    r.fail(e.what());
  }
  return s;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

bool strictly_increasing_positive(const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) return false;
    if (i > 0 && !(v[i] > v[i - 1])) return false;
  }
  return true;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  ObjectReader r(j, "config");
  if (!r.has("schema_version")) r.fail("missing key 'schema_version'");
  r.get("schema_version", c.schema_version);
  require(c.schema_version == 1, "config: unsupported schema_version " + std::to_string(c.schema_version));
  r.get("name", c.name);
  r.get("kind", c.kind);
  if (!c.kind.empty()) {
    const auto& k = experiment_kinds();
    require(std::find(k.begin(), k.end(), c.kind) != k.end(), "config: unknown kind '" + c.kind + "'");
  }
  r.get("n", c.n);
  require(c.n >= 2 && c.n <= 64, "config: n must be in [2, 64]");
  r.get("m", c.m);
  require(c.m == 0 || c.m >= c.n + 1, "config: m must be 0 (meaning 2n) or >= n + 1");
  r.get("seed", c.seed);
  r.get("replicas", c.replicas);
  require(c.replicas >= 1, "config: replicas must be >= 1");
  r.get("h", c.h);
  require(c.h > 0.0 && std::isfinite(c.h), "config: h must be > 0");
  r.get("t_grid", c.t_grid);
  require(strictly_increasing_positive(c.t_grid), "config: t_grid must be positive and strictly increasing");

  c.start = GroupElement::identity(c.n);
  c.start_tilde = GroupElement::identity(c.n);
  if (r.has("start")) c.start = parse_point(r.raw("start"), c.n, "start");
  if (r.has("start_tilde")) c.start_tilde = parse_point(r.raw("start_tilde"), c.n, "start_tilde");
  if (r.has("homogeneous")) c.homogeneous = parse_homogeneous(r.raw("homogeneous"), c.n);

  std::string mode = to_string(c.mode);
  r.get("mode", mode);
  try {
    c.mode = parse_fidelity(mode);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  std::string target = to_string(c.target);
  r.get("target", target);
  if (target == "global")
    c.target = Target::Global;
  else if (target == "fiber")
    c.target = Target::Fiber;
  else if (target == "line")
    c.target = Target::Line;
  else
    r.fail("target must be global, fiber or line");
  r.get("block_diagonalize", c.block_diagonalize);
  if (r.has("horizon")) {
    const json& hz = r.raw("horizon");
    if (hz.is_null())
      c.horizon = std::numeric_limits<double>::infinity();
    else if (hz.is_number())
      c.horizon = hz.get<double>();
    else
      r.fail("horizon must be a number or null");
    require(c.horizon > 0.0, "config: horizon must be > 0");
  }
  r.get("max_blocks", c.max_blocks);
  require(c.max_blocks >= 1 && c.max_blocks <= 1000, "config: max_blocks must be in [1, 1000]");

  if (r.has("exit")) {
    ObjectReader e(r.raw("exit"), "exit");
    e.get("alpha", c.exit.alpha);
    e.get("gamma", c.exit.gamma);
    e.get("refinements", c.exit.refinements);
    e.finish();
    require(c.exit.alpha > 0.0 && c.exit.gamma > 0.0, "exit: alpha and gamma must be > 0");
    require(c.exit.refinements >= 1 && c.exit.refinements <= 10, "exit: refinements must be in [1, 10]");
  }
  if (r.has("gradient")) {
    ObjectReader g(r.raw("gradient"), "gradient");
    g.get("function", c.gradient.function);
    g.get("direction", c.gradient.direction);
    g.get("epsilon", c.gradient.epsilon);
    g.get("times", c.gradient.times);
    g.get("coupled_replicas", c.gradient.coupled_replicas);
    g.finish();
    require(c.gradient.direction == "horizontal" || c.gradient.direction == "vertical" ||
                c.gradient.direction == "both",
            "gradient: direction must be horizontal, vertical or both");
    require(c.gradient.epsilon > 0.0, "gradient: epsilon must be > 0");
    require(strictly_increasing_positive(c.gradient.times), "gradient: times must be positive and increasing");
  }
  if (r.has("areas")) {
    ObjectReader a(r.raw("areas"), "areas");
    a.get("truncations", c.areas.truncations);
    a.finish();
    require(!c.areas.truncations.empty() && strictly_increasing_positive(c.areas.truncations),
            "areas: truncations must be positive and increasing");
  }
  if (r.has("tv")) {
    ObjectReader t(r.raw("tv"), "tv");
    t.get("bins", c.tv.bins);
    t.get("permutations", c.tv.permutations);
    t.finish();
    require(c.tv.bins >= 2 && c.tv.bins <= 200, "tv: bins must be in [2, 200]");
    require(c.tv.permutations >= 1, "tv: permutations must be >= 1");
  }
  if (r.has("simulate")) {
    ObjectReader s(r.raw("simulate"), "simulate");
    s.get("T", c.simulate.T);
    s.get("paths", c.simulate.paths);
    s.finish();
    require(c.simulate.T > 0.0, "simulate: T must be > 0");
    require(c.h <= c.simulate.T, "simulate: h must not exceed T");
  }
  r.finish();
  return c;
}

nlohmann::json element_to_json(const GroupElement& g) {
  return {{"x", std::vector<double>(g.x.data(), g.x.data() + g.x.size())},
          {"z", std::vector<double>(g.z.upper().begin(), g.z.upper().end())}};
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  if (!c.name.empty()) j["name"] = c.name;
  if (!c.kind.empty()) j["kind"] = c.kind;
  j["n"] = c.n;
  j["m"] = c.m;
  j["seed"] = c.seed;
  j["replicas"] = c.replicas;
  j["h"] = c.h;
  j["t_grid"] = c.t_grid;
  j["start"] = element_to_json(c.start);
  j["start_tilde"] = element_to_json(c.start_tilde);
  if (c.homogeneous) {
    json cs = json::array();
    for (const auto& m : c.homogeneous->c) {
      json rows = json::array();
      for (int i = 0; i < m.rows(); ++i) {
        std::vector<double> row(m.cols());
        for (int k = 0; k < m.cols(); ++k) row[k] = m(i, k);
        rows.push_back(row);
      }
      cs.push_back(rows);
    }
    auto pt = [](const HomogeneousElement& e) {
      return json{{"x", std::vector<double>(e.x.data(), e.x.data() + e.x.size())},
                  {"z", std::vector<double>(e.z.data(), e.z.data() + e.z.size())}};
    };
    j["homogeneous"] = {{"C", cs}, {"start", pt(c.homogeneous->start)}, {"start_tilde", pt(c.homogeneous->start_tilde)}};
  }
  j["mode"] = to_string(c.mode);
  j["target"] = to_string(c.target);
  j["block_diagonalize"] = c.block_diagonalize;
  j["horizon"] = std::isinf(c.horizon) ? json(nullptr) : json(c.horizon);
  j["max_blocks"] = c.max_blocks;
  j["exit"] = {{"alpha", c.exit.alpha}, {"gamma", c.exit.gamma}, {"refinements", c.exit.refinements}};
  j["gradient"] = {{"function", c.gradient.function},
                   {"direction", c.gradient.direction},
                   {"epsilon", c.gradient.epsilon},
                   {"times", c.gradient.times},
                   {"coupled_replicas", c.gradient.coupled_replicas}};
  j["areas"] = {{"truncations", c.areas.truncations}};
  j["tv"] = {{"bins", c.tv.bins}, {"permutations", c.tv.permutations}};
  j["simulate"] = {{"T", c.simulate.T}, {"paths", c.simulate.paths}};
  return j;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &j;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw ConfigError("override key '" + key + "' is malformed");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    pos = dot + 1;
  }
}

}  // namespace carnot
