#include "mcp/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mcp/error.hpp"

namespace mcp {

namespace {

using ojson = nlohmann::ordered_json;

class Reader {
 public:
  Reader(std::string_view text, std::string_view origin) : text_(text), origin_(origin) {}

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    std::ostringstream os;
    os << origin_ << ':' << locate(path) << ": field '" << path << "': " << msg;
    throw Error(ErrorCode::ConfigError, os.str());
  }

  [[noreturn]] void fail_at_offset(std::size_t offset, const std::string& msg) const {
    std::ostringstream os;
    os << origin_ << ':' << line_of(offset) << ": " << msg;
    throw Error(ErrorCode::ConfigError, os.str());
  }

  void only_keys(const ojson& obj, const std::string& path, std::initializer_list<std::string_view> allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, _] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(join(path, key), "unknown field");
      }
    }
  }

  double number(const ojson& obj, const std::string& path, const std::string& key, double fallback) const {
    if (!obj.contains(key)) return fallback;
    const ojson& v = obj.at(key);
    if (!v.is_number()) fail(join(path, key), "expected a number");
    return v.get<double>();
  }

  std::size_t count(const ojson& obj, const std::string& path, const std::string& key, std::size_t fallback) const {
    if (!obj.contains(key)) return fallback;
    const ojson& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(join(path, key), "expected a non-negative integer");
    return v.get<std::size_t>();
  }

  bool boolean(const ojson& obj, const std::string& path, const std::string& key, bool fallback) const {
    if (!obj.contains(key)) return fallback;
    const ojson& v = obj.at(key);
    if (!v.is_boolean()) fail(join(path, key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const ojson& obj, const std::string& path, const std::string& key,
                     const std::string& fallback) const {
    if (!obj.contains(key)) return fallback;
    const ojson& v = obj.at(key);
    if (!v.is_string()) fail(join(path, key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const ojson& v, const std::string& path) const {
    if (!v.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(path, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  cd complex(const ojson& v, const std::string& path) const {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
      return {v[0].get<double>(), v[1].get<double>()};
    }
    fail(path, "expected a number or [re, im]");
  }

  /// Square matrix as nested rows or a flat row-major list.
  CMatrix square_matrix(const ojson& v, const std::string& path) const {
    if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array");
    std::vector<cd> flat;
    // Nested rows iff every element is an array as long as the outer one; a
    // flat list of [re, im] pairs never satisfies that for a valid size.
    const bool rows = std::all_of(v.begin(), v.end(), [&](const ojson& e) { return e.is_array() && e.size() == v.size(); });
    if (rows) {
      for (const auto& row : v) {
        for (const auto& e : row) flat.push_back(complex(e, path));
      }
    } else {
      for (const auto& e : v) flat.push_back(complex(e, path));
    }
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(flat.size()))));
    if (n * n != static_cast<Eigen::Index>(flat.size())) fail(path, "entry count is not a perfect square");
    CMatrix m(n, n);
    for (Eigen::Index k = 0; k < n * n; ++k) m(k / n, k % n) = flat[static_cast<std::size_t>(k)];
    return m;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::size_t line_of(std::size_t offset) const {
    offset = std::min(offset, text_.size());
    return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
  }

  // Line of the last path component's key, searching after its parents.
  std::size_t locate(const std::string& path) const {
    std::size_t pos = 0;
    std::size_t start = 0;
    bool found = false;
    while (start <= path.size()) {
      std::size_t dot = path.find('.', start);
      if (dot == std::string::npos) dot = path.size();
      std::string key = path.substr(start, dot - start);
      if (const auto br = key.find('['); br != std::string::npos) key = key.substr(0, br);
      const std::size_t hit = text_.find("\"" + key + "\"", pos);
      if (hit == std::string_view::npos) break;
      pos = hit;
      found = true;
      start = dot + 1;
    }
    return found ? line_of(pos) : 1;
  }

  std::string_view text_;
  std::string_view origin_;
};

std::vector<double> parse_grid(const Reader& r, const ojson& v) {
  std::vector<double> grid;
  if (v.is_array()) {
    grid = r.numbers(v, "snr_db");
  } else if (v.is_object()) {
    r.only_keys(v, "snr_db", {"start", "stop", "num"});
    if (!v.contains("start") || !v.contains("stop") || !v.contains("num")) {
      r.fail("snr_db", "linspace form needs start, stop and num");
    }
    const double a = r.number(v, "snr_db", "start", 0.0);
    const double b = r.number(v, "snr_db", "stop", 0.0);
    const std::size_t n = r.count(v, "snr_db", "num", 0);
    if (n == 1) grid.push_back(a);
    for (std::size_t i = 0; n > 1 && i < n; ++i) {
      grid.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
  } else {
    r.fail("snr_db", "expected a list of dB values or {start, stop, num}");
  }
  if (grid.empty()) r.fail("snr_db", "snr grid must not be empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) r.fail("snr_db", "snr grid must be strictly increasing");
  }
  for (const double g : grid) {
    if (!std::isfinite(g)) r.fail("snr_db", "snr values must be finite");
  }
  return grid;
}

StepRule parse_step_rule(const Reader& r, const std::string& path, const std::string& s) {
  if (s == "constant") return StepRule::Constant;
  if (s == "diminishing") return StepRule::Diminishing;
  r.fail(path, "expected 'constant' or 'diminishing'");
}

UpdateRule parse_update(const Reader& r, const std::string& path, const std::string& s) {
  if (s == "projected_gradient") return UpdateRule::ProjectedGradient;
  if (s == "as_printed") return UpdateRule::AsPrinted;
  r.fail(path, "expected 'projected_gradient' or 'as_printed'");
}

RVector to_rvector(const std::vector<double>& v) {
  return Eigen::Map<const RVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t ExperimentConfig::require_seed(bool needed) const {
  if (seed) return *seed;
  if (needed) throw Error(ErrorCode::ConfigError, "field 'seed': a seed is required for Monte Carlo runs");
  return integrator.seed;
}

void ExperimentConfig::override_seed(std::uint64_t s) {
  seed = s;
  integrator.seed = s;
  power.integrator.seed = s;
  precode.algorithm2.integrator.seed = s;
  precode.highsnr.seed = s;
}

bool ExperimentConfig::may_use_monte_carlo() const {
  return integrator.resolve(h.rows()) == Integrator::Kind::MonteCarlo;
}

ExperimentConfig parse_config(std::string_view text, std::string_view origin) {
  const Reader r(text, origin);
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    r.fail_at_offset(e.byte > 0 ? e.byte - 1 : 0, std::string("malformed JSON: ") + e.what());
  }
  r.only_keys(doc, "", {"schema", "scenario", "channel", "inputs", "normalize_energy", "snr_db", "integrator", "seed",
                        "power", "precode", "session", "table2", "check", "output"});

  ExperimentConfig cfg;
  cfg.config_hash = fnv1a(text);
  if (r.string(doc, "", "schema", "") != ExperimentConfig::kSchema) {
    r.fail("schema", "expected \"" + std::string(ExperimentConfig::kSchema) + "\"");
  }
  cfg.scenario = r.string(doc, "", "scenario", "unnamed");

  // channel
  if (!doc.contains("channel")) r.fail("channel", "missing");
  const ojson& ch = doc.at("channel");
  r.only_keys(ch, "channel", {"preset", "size", "h"});
  if (ch.contains("h")) {
    cfg.h = r.square_matrix(ch.at("h"), "channel.h");
  } else {
    const std::string preset = r.string(ch, "channel", "preset", "");
    const auto n = static_cast<Eigen::Index>(r.count(ch, "channel", "size", 2));
    if (n < 1) r.fail("channel.size", "must be at least 1");
    if (preset == "identity") {
      cfg.h = CMatrix::Identity(n, n);
    } else if (preset == "ones") {
      cfg.h = CMatrix::Ones(n, n);
    } else {
      r.fail("channel.preset", "expected 'identity' or 'ones' (or give channel.h)");
    }
  }
  for (Eigen::Index i = 0; i < cfg.h.size(); ++i) {
    if (!std::isfinite(cfg.h.data()[i].real()) || !std::isfinite(cfg.h.data()[i].imag())) {
      r.fail("channel.h", "entries must be finite");
    }
  }
  const Eigen::Index n = cfg.h.rows();

  // inputs
  const bool normalize = r.boolean(doc, "", "normalize_energy", false);
  if (!doc.contains("inputs")) r.fail("inputs", "missing");
  const ojson& in = doc.at("inputs");
  if (in.is_string()) {
    cfg.input_names.assign(static_cast<std::size_t>(n), in.get<std::string>());
  } else if (in.is_array()) {
    for (const auto& e : in) {
      if (!e.is_string()) r.fail("inputs", "expected constellation names");
      cfg.input_names.push_back(e.get<std::string>());
    }
  } else {
    r.fail("inputs", "expected a name or a list of names");
  }
  if (static_cast<Eigen::Index>(cfg.input_names.size()) != n) {
    r.fail("inputs", "need one constellation per user (" + std::to_string(n) + ")");
  }
  for (const auto& name : cfg.input_names) {
    try {
      cfg.inputs.push_back(Constellation::from_name(name, normalize));
    } catch (const Error& e) {
      r.fail("inputs", e.what());
    }
  }
  const bool gaussian = all_gaussian(cfg.inputs);
  if (!gaussian && std::any_of(cfg.inputs.begin(), cfg.inputs.end(), [](const Constellation& c) { return !c.is_finite(); })) {
    r.fail("inputs", "Gaussian and finite inputs cannot be mixed");
  }

  if (!doc.contains("snr_db")) r.fail("snr_db", "missing");
  cfg.snr_db = parse_grid(r, doc.at("snr_db"));

  // seed + integrator
  if (doc.contains("seed")) {
    const ojson& s = doc.at("seed");
    if (!s.is_number_unsigned()) r.fail("seed", "expected a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("integrator")) {
    const ojson& ig = doc.at("integrator");
    r.only_keys(ig, "integrator", {"kind", "nodes", "samples", "threads"});
    const std::string kind = r.string(ig, "integrator", "kind", "auto");
    if (kind == "auto") {
      cfg.integrator.kind = Integrator::Kind::Auto;
    } else if (kind == "gauss_hermite") {
      cfg.integrator.kind = Integrator::Kind::GaussHermite;
    } else if (kind == "monte_carlo") {
      cfg.integrator.kind = Integrator::Kind::MonteCarlo;
    } else {
      r.fail("integrator.kind", "expected 'auto', 'gauss_hermite' or 'monte_carlo'");
    }
    cfg.integrator.nodes = r.count(ig, "integrator", "nodes", cfg.integrator.nodes);
    cfg.integrator.samples = r.count(ig, "integrator", "samples", cfg.integrator.samples);
    cfg.integrator.threads = std::max<std::size_t>(1, r.count(ig, "integrator", "threads", 1));
  }
  if (cfg.integrator.kind == Integrator::Kind::MonteCarlo && !cfg.seed) {
    r.fail("seed", "a seed is required when integrator.kind is monte_carlo");
  }
  if (cfg.seed) cfg.integrator.seed = *cfg.seed;
  try {
    cfg.integrator.validate();
  } catch (const Error& e) {
    r.fail("integrator", e.what());
  }
  const bool mc = cfg.may_use_monte_carlo();

  // power
  cfg.caps = RVector::Ones(n);
  cfg.power.integrator = cfg.integrator;
  cfg.power.tol = mc ? 1e-4 : 1e-6;
  if (doc.contains("power")) {
    const ojson& pw = doc.at("power");
    r.only_keys(pw, "power", {"caps", "step", "step_rule", "update", "lambda", "max_iters", "tol", "backtracking",
                              "initial_powers"});
    if (pw.contains("caps")) {
      const auto caps = r.numbers(pw.at("caps"), "power.caps");
      if (static_cast<Eigen::Index>(caps.size()) != n) r.fail("power.caps", "need one cap per user");
      for (const double c : caps) {
        if (!(c >= 0.0) || !std::isfinite(c)) r.fail("power.caps", "caps must be finite and non-negative");
      }
      cfg.caps = to_rvector(caps);
    }
    cfg.power.step = r.number(pw, "power", "step", cfg.power.step);
    cfg.power.step_rule = parse_step_rule(r, "power.step_rule", r.string(pw, "power", "step_rule", "diminishing"));
    cfg.power.update = parse_update(r, "power.update", r.string(pw, "power", "update", "projected_gradient"));
    cfg.power.printed_lambda = r.number(pw, "power", "lambda", cfg.power.printed_lambda);
    cfg.power.max_iters = r.count(pw, "power", "max_iters", cfg.power.max_iters);
    cfg.power.tol = r.number(pw, "power", "tol", cfg.power.tol);
    cfg.power.backtracking = r.boolean(pw, "power", "backtracking", cfg.power.backtracking);
    if (pw.contains("initial_powers")) {
      const auto ip = r.numbers(pw.at("initial_powers"), "power.initial_powers");
      if (static_cast<Eigen::Index>(ip.size()) != n) r.fail("power.initial_powers", "need one power per user");
      cfg.power.initial_powers = to_rvector(ip);
    }
    try {
      cfg.power.validate();
    } catch (const Error& e) {
      r.fail("power", e.what());
    }
  }

  // precode
  PrecodeConfig& pc = cfg.precode;
  pc.algorithm2.integrator = cfg.integrator;
  pc.algorithm2.tol = mc ? 1e-4 : 1e-6;
  if (cfg.seed) pc.highsnr.seed = *cfg.seed;
  if (doc.contains("precode")) {
    const ojson& p = doc.at("precode");
    r.only_keys(p, "precode", {"mode", "trace_budget", "snr_db", "matrices", "restarts", "step", "max_iters", "tol",
                               "beta", "field", "threads", "algorithm2", "initial_powers"});
    const std::string mode = r.string(p, "precode", "mode", "compare");
    if (mode == "compare") {
      pc.mode = PrecodeMode::Compare;
    } else if (mode == "algorithm2") {
      pc.mode = PrecodeMode::Algorithm2;
    } else if (mode == "highsnr") {
      pc.mode = PrecodeMode::HighSnr;
    } else if (mode == "lowsnr") {
      pc.mode = PrecodeMode::LowSnr;
    } else {
      r.fail("precode.mode", "expected 'compare', 'algorithm2', 'highsnr' or 'lowsnr'");
    }
    pc.trace_budget = r.number(p, "precode", "trace_budget", pc.trace_budget);
    if (!(pc.trace_budget > 0.0)) r.fail("precode.trace_budget", "must be positive");
    pc.snr_db = r.number(p, "precode", "snr_db", pc.snr_db);
    if (p.contains("matrices")) {
      const ojson& ms = p.at("matrices");
      if (!ms.is_object()) r.fail("precode.matrices", "expected an object of name: matrix");
      for (const auto& [name, m] : ms.items()) {
        CMatrix mat = r.square_matrix(m, "precode.matrices." + name);
        if (mat.rows() != n) r.fail("precode.matrices." + name, "size must match the channel");
        pc.matrices.emplace_back(name, std::move(mat));
      }
    }
    HighSnrParams& hs = pc.highsnr;
    hs.restarts = r.count(p, "precode", "restarts", hs.restarts);
    hs.step = r.number(p, "precode", "step", hs.step);
    hs.max_iters = r.count(p, "precode", "max_iters", hs.max_iters);
    hs.tol = r.number(p, "precode", "tol", hs.tol);
    hs.beta = r.number(p, "precode", "beta", hs.beta);
    hs.threads = std::max<std::size_t>(1, r.count(p, "precode", "threads", 1));
    const std::string field = r.string(p, "precode", "field", "real");
    if (field == "real") {
      hs.field = PrecoderField::Real;
    } else if (field == "complex") {
      hs.field = PrecoderField::Complex;
    } else {
      r.fail("precode.field", "expected 'real' or 'complex'");
    }
    if (p.contains("algorithm2")) {
      const ojson& a = p.at("algorithm2");
      const std::string path = "precode.algorithm2";
      r.only_keys(a, path, {"step", "step_rule", "update", "lambda", "max_iters", "tol", "backtracking"});
      Algorithm2Params& a2 = pc.algorithm2;
      a2.step = r.number(a, path, "step", a2.step);
      a2.step_rule = parse_step_rule(r, path + ".step_rule", r.string(a, path, "step_rule", "diminishing"));
      a2.update = parse_update(r, path + ".update", r.string(a, path, "update", "projected_gradient"));
      a2.printed_lambda = r.number(a, path, "lambda", a2.printed_lambda);
      a2.max_iters = r.count(a, path, "max_iters", a2.max_iters);
      a2.tol = r.number(a, path, "tol", a2.tol);
      a2.backtracking = r.boolean(a, path, "backtracking", a2.backtracking);
    }
    if (p.contains("initial_powers")) {
      const auto ip = r.numbers(p.at("initial_powers"), "precode.initial_powers");
      if (static_cast<Eigen::Index>(ip.size()) != n) r.fail("precode.initial_powers", "need one power per user");
      pc.initial_powers = to_rvector(ip);
    }
    try {
      hs.trace_budget = pc.trace_budget;
      hs.snr = db_to_linear(pc.snr_db);
      hs.validate();
      pc.algorithm2.validate();
    } catch (const Error& e) {
      r.fail("precode", e.what());
    }
  }
  pc.highsnr.trace_budget = pc.trace_budget;
  pc.highsnr.snr = db_to_linear(pc.snr_db);

  // session
  if (doc.contains("session")) {
    const ojson& s = doc.at("session");
    r.only_keys(s, "session", {"direction", "bandwidth", "threshold", "per_message_cost", "latency", "resources"});
    const std::string dir = r.string(s, "session", "direction", "uplink");
    if (dir == "uplink") {
      cfg.session.direction = SessionDirection::Uplink;
    } else if (dir == "downlink") {
      cfg.session.direction = SessionDirection::Downlink;
    } else {
      r.fail("session.direction", "expected 'uplink' or 'downlink'");
    }
    BackhaulLink& l = cfg.session.link;
    l.bandwidth = r.number(s, "session", "bandwidth", l.bandwidth);
    l.threshold = r.number(s, "session", "threshold", l.threshold);
    l.per_message_cost = r.number(s, "session", "per_message_cost", l.per_message_cost);
    l.latency = r.number(s, "session", "latency", l.latency);
    try {
      l.validate();
    } catch (const Error& e) {
      r.fail("session", e.what());
    }
    if (s.contains("resources")) {
      const auto res = r.numbers(s.at("resources"), "session.resources");
      if (res.size() != 2) r.fail("session.resources", "expected [BS1, BS2]");
      cfg.session.resources_bs1 = res[0];
      cfg.session.resources_bs2 = res[1];
    }
  }

  if (doc.contains("table2")) {
    const ojson& t = doc.at("table2");
    r.only_keys(t, "table2", {"snr_db", "sizes", "sample_floor"});
    cfg.table2.snr_db = r.number(t, "table2", "snr_db", cfg.table2.snr_db);
    if (t.contains("sizes")) {
      cfg.table2.sizes.clear();
      for (const double s : r.numbers(t.at("sizes"), "table2.sizes")) {
        if (s < 1 || s != std::floor(s)) r.fail("table2.sizes", "sizes must be positive integers");
        cfg.table2.sizes.push_back(static_cast<int>(s));
      }
    }
    cfg.table2.sample_floor = r.count(t, "table2", "sample_floor", cfg.table2.sample_floor);
  }

  if (doc.contains("check")) {
    const ojson& c = doc.at("check");
    r.only_keys(c, "check", {"channels", "gradient_factor"});
    cfg.check.channels = r.count(c, "check", "channels", cfg.check.channels);
    cfg.check.gradient_factor = r.number(c, "check", "gradient_factor", cfg.check.gradient_factor);
  }

  if (doc.contains("output")) {
    const ojson& o = doc.at("output");
    r.only_keys(o, "output", {"dir"});
    cfg.out_dir = r.string(o, "output", "dir", cfg.out_dir);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, path.string() + ": cannot open config");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace mcp
