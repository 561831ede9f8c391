#include "nhp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace nhp {

namespace {

int line_of(const YAML::Node& node) {
  const auto mark = node.Mark();
  return mark.is_null() ? 0 : mark.line + 1;
}

[[noreturn]] void fail(const YAML::Node& node, const std::string& what) {
  throw ConfigError(what, line_of(node));
}

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const char* where) {
  if (!node.IsMap()) fail(node, std::string(where) + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(kv.first, std::string("unknown key '") + key + "' in " + where);
  }
}

YAML::Node require(const YAML::Node& node, const char* key) {
  YAML::Node v = node[key];
  if (!v) fail(node, std::string("missing key '") + key + "'");
  return v;
}

template <class T>
T as(const YAML::Node& node, const char* what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(node, std::string("bad value for ") + what);
  }
}

Seed seed_of(const YAML::Node& node) {
  const auto text = as<std::string>(node, "seed");
  if (text.size() == 64) {
    try {
      return seed_from_hex(text);
    } catch (const Error& e) {
      fail(node, e.what());
    }
  }
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used, 0);
    if (used == text.size()) return seed_from_u64(v);
  } catch (const std::exception&) {
  }
  fail(node, "seed must be an integer or 64 hex digits");
}

YAML::Node flow(YAML::Node n) {
  n.SetStyle(YAML::EmitterStyle::Flow);
  return n;
}

// ---- vectors and tables

StateVector state_of(const YAML::Node& node, const Modulus& q, std::size_t n, const char* what) {
  if (!node.IsSequence() || node.size() != n) {
    fail(node, std::string(what) + " must be a list of " + std::to_string(n) + " integers");
  }
  std::vector<std::int64_t> vals;
  for (const auto& v : node) vals.push_back(as<std::int64_t>(v, what));
  return make_state(vals, q);
}

YAML::Node state_node(const StateVector& v) {
  YAML::Node n(YAML::NodeType::Sequence);
  for (auto c : v.coords()) n.push_back(c);
  return flow(n);
}

std::vector<StateVector> states_of(const YAML::Node& node, const Modulus& q, std::size_t n,
                                   std::size_t count, const char* what) {
  if (!node.IsSequence() || node.size() != count) {
    fail(node, std::string(what) + " must hold " + std::to_string(count) + " vectors");
  }
  std::vector<StateVector> out;
  for (const auto& v : node) out.push_back(state_of(v, q, n, what));
  return out;
}

std::vector<std::vector<StateVector>> table_of(const YAML::Node& node, const Modulus& q,
                                               std::size_t n, std::size_t m, std::size_t cols,
                                               const char* what) {
  if (!node.IsSequence() || node.size() != m) {
    fail(node, std::string(what) + " must have " + std::to_string(m) + " rows");
  }
  std::vector<std::vector<StateVector>> out;
  for (const auto& row : node) out.push_back(states_of(row, q, n, cols, what));
  return out;
}

YAML::Node table_node(const std::vector<std::vector<StateVector>>& t) {
  YAML::Node n(YAML::NodeType::Sequence);
  for (const auto& row : t) {
    YAML::Node r(YAML::NodeType::Sequence);
    for (const auto& v : row) r.push_back(state_node(v));
    n.push_back(r);
  }
  return n;
}

std::vector<std::vector<Residue>> scalars_of(const YAML::Node& node, const Modulus& q,
                                             std::size_t m, std::size_t cols, const char* what) {
  if (!node.IsSequence() || node.size() != m) {
    fail(node, std::string(what) + " must have " + std::to_string(m) + " rows");
  }
  std::vector<std::vector<Residue>> out;
  for (const auto& row : node) {
    if (!row.IsSequence() || row.size() != cols) {
      fail(row, std::string(what) + " rows must have " + std::to_string(cols) + " entries");
    }
    std::vector<Residue> r;
    for (const auto& v : row) r.push_back(q.reduce(as<std::int64_t>(v, what)));
    out.push_back(std::move(r));
  }
  return out;
}

YAML::Node scalars_node(const std::vector<std::vector<Residue>>& t) {
  YAML::Node n(YAML::NodeType::Sequence);
  for (const auto& row : t) {
    YAML::Node r(YAML::NodeType::Sequence);
    for (auto v : row) r.push_back(v);
    n.push_back(flow(r));
  }
  return n;
}

using RealTable = std::vector<std::vector<std::vector<double>>>;

RealTable reals_of(const YAML::Node& node, std::size_t m, std::size_t T, std::size_t n,
                   const char* what) {
  if (!node.IsSequence() || node.size() != m) {
    fail(node, std::string(what) + " must have " + std::to_string(m) + " rows");
  }
  RealTable out;
  for (const auto& row : node) {
    if (!row.IsSequence() || row.size() != T) fail(row, std::string(what) + ": wrong step count");
    std::vector<std::vector<double>> r;
    for (const auto& vec : row) {
      if (!vec.IsSequence() || vec.size() != n) fail(vec, std::string(what) + ": wrong width");
      std::vector<double> v;
      for (const auto& x : vec) v.push_back(as<double>(x, what));
      r.push_back(std::move(v));
    }
    out.push_back(std::move(r));
  }
  return out;
}

YAML::Node reals_node(const RealTable& t) {
  YAML::Node n(YAML::NodeType::Sequence);
  for (const auto& row : t) {
    YAML::Node r(YAML::NodeType::Sequence);
    for (const auto& vec : row) {
      YAML::Node v(YAML::NodeType::Sequence);
      for (double x : vec) v.push_back(x);
      r.push_back(flow(v));
    }
    n.push_back(r);
  }
  return n;
}

NoiseSpec noise_of(const YAML::Node& node) {
  check_keys(node, {"enabled", "sigma", "B"}, "noise");
  NoiseSpec s;
  if (node["enabled"]) s.enabled = as<bool>(node["enabled"], "noise.enabled");
  if (node["sigma"]) s.sigma = as<double>(node["sigma"], "noise.sigma");
  if (node["B"]) s.bound = as<std::int64_t>(node["B"], "noise.B");
  try {
    s.validate();
  } catch (const Error& e) {
    fail(node, e.what());
  }
  return s;
}

YAML::Node noise_node(const NoiseSpec& s) {
  YAML::Node n;
  n["enabled"] = s.enabled;
  n["sigma"] = s.sigma;
  n["B"] = s.bound;
  return n;
}

// ---- families

ObservableFamily family_of(const YAML::Node& node, const PathDims& d, const Seed& seed);

PostProcessor post_of(const YAML::Node& node) {
  check_keys(node, {"kind", "param"}, "post-processor");
  const auto kind = as<std::string>(require(node, "kind"), "h.kind");
  const auto param = node["param"] ? as<std::uint32_t>(node["param"], "h.param") : 0U;
  if (kind == "identity") return PostProcessor::identity();
  if (kind == "truncate_bits") return PostProcessor::truncate_bits(param);
  if (kind == "keep_first") return PostProcessor::keep_first(param);
  if (kind == "constant") return PostProcessor::constant();
  fail(node["kind"], "unknown post-processor kind '" + kind + "'");
}

const char* post_name(PostProcessor::Kind k) {
  switch (k) {
    case PostProcessor::Kind::identity: return "identity";
    case PostProcessor::Kind::truncate_bits: return "truncate_bits";
    case PostProcessor::Kind::keep_first: return "keep_first";
    case PostProcessor::Kind::constant: return "constant";
  }
  return "identity";
}

ObservableFamily family_body(const YAML::Node& node, const PathDims& d, const Seed& seed) {
  const auto kind_text = as<std::string>(require(node, "kind"), "family.kind");
  FamilyKind kind;
  try {
    kind = family_kind_from_name(kind_text);
  } catch (const Error&) {
    fail(node["kind"], "unknown family kind '" + kind_text + "'");
  }
  const std::uint32_t default_ell =
      kind == FamilyKind::quantized_real ? 16U : min_entry_width(d.q);
  const std::uint32_t ell = node["ell"] ? as<std::uint32_t>(node["ell"], "family.ell") : default_ell;
  const Seed coeff_seed = node["coeff_seed"] ? seed_of(node["coeff_seed"]) : derive_seed(seed, "family");
  const YAML::Node coeffs = node["coefficients"];
  auto m_of = [&]() -> std::size_t {
    if (coeffs) {
      const auto first = coeffs.begin()->second;
      if (!first.IsSequence()) fail(coeffs, "coefficients must be lists");
      return first.size();
    }
    return as<std::size_t>(require(node, "m"), "family.m");
  };

  switch (kind) {
    case FamilyKind::linear_projected: {
      check_keys(node, {"kind", "m", "ell", "coeff_seed", "coefficients"}, "family");
      if (!coeffs) return make_linear_projected(d, m_of(), ell, coeff_seed);
      check_keys(coeffs, {"a"}, "coefficients");
      return ObservableFamily(d, ell,
                              LinearProjected{table_of(require(coeffs, "a"), d.q, d.n, m_of(), d.T + 1, "a")});
    }
    case FamilyKind::transition_energy: {
      check_keys(node, {"kind", "m", "ell", "coeff_seed", "coefficients"}, "family");
      if (!coeffs) return make_transition_energy(d, m_of(), ell, coeff_seed);
      check_keys(coeffs, {"u", "v", "w"}, "coefficients");
      const auto m = m_of();
      TransitionEnergy te{table_of(require(coeffs, "u"), d.q, d.n, m, d.T, "u"),
                          table_of(require(coeffs, "v"), d.q, d.n, m, d.T, "v"),
                          table_of(require(coeffs, "w"), d.q, d.n, m, d.T, "w")};
      return ObservableFamily(d, ell, std::move(te));
    }
    case FamilyKind::quantized_real: {
      check_keys(node, {"kind", "m", "ell", "coeff_seed", "coefficients", "tau", "observation_noise"},
                 "family");
      const NoiseSpec obs = node["observation_noise"] ? noise_of(node["observation_noise"]) : NoiseSpec{};
      if (!coeffs) {
        const double tau = node["tau"] ? as<double>(node["tau"], "family.tau") : 1.0;
        return make_quantized_real(d, m_of(), ell, tau, obs, coeff_seed);
      }
      check_keys(coeffs, {"state_w", "micro_w", "noise_w", "tau"}, "coefficients");
      const auto m = m_of();
      QuantizedReal qr;
      qr.state_w = reals_of(require(coeffs, "state_w"), m, d.T, d.n, "state_w");
      qr.micro_w = reals_of(require(coeffs, "micro_w"), m, d.T, d.n, "micro_w");
      qr.noise_w = reals_of(require(coeffs, "noise_w"), m, d.T, d.n, "noise_w");
      const auto tau = require(coeffs, "tau");
      if (!tau.IsSequence() || tau.size() != m) fail(tau, "tau must hold one value per entry");
      for (const auto& t : tau) qr.tau.push_back(as<double>(t, "tau"));
      qr.observation_noise = obs;
      return ObservableFamily(d, ell, std::move(qr));
    }
    case FamilyKind::nonlinear_local: {
      check_keys(node, {"kind", "m", "ell", "coeff_seed", "coefficients"}, "family");
      if (!coeffs) return make_nonlinear_local(d, m_of(), ell, coeff_seed);
      check_keys(coeffs, {"chi", "a", "b", "c", "d"}, "coefficients");
      const auto m = m_of();
      NonlinearLocal nl;
      nl.chi = scalars_of(require(coeffs, "chi"), d.q, m, d.T, "chi");
      nl.a = table_of(require(coeffs, "a"), d.q, d.n, m, d.T, "a");
      nl.b = table_of(require(coeffs, "b"), d.q, d.n, m, d.T, "b");
      nl.c = scalars_of(require(coeffs, "c"), d.q, m, d.T, "c");
      nl.d = table_of(require(coeffs, "d"), d.q, d.n, m, d.T, "d");
      return ObservableFamily(d, ell, std::move(nl));
    }
    case FamilyKind::telescoping:
      check_keys(node, {"kind", "ell"}, "family");
      return make_telescoping(d, ell);
    case FamilyKind::composite: {
      check_keys(node, {"kind", "parts"}, "family");
      const auto parts = require(node, "parts");
      if (!parts.IsSequence() || parts.size() == 0) fail(parts, "parts must be a non-empty list");
      std::vector<ObservableFamily> fams;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        fams.push_back(family_of(parts[i], d, derive_seed(seed, "part/" + std::to_string(i))));
      }
      return make_composite(std::move(fams));
    }
    case FamilyKind::post_processed: {
      check_keys(node, {"kind", "inner", "h"}, "family");
      const auto inner = family_of(require(node, "inner"), d, derive_seed(seed, "inner"));
      return compose_postprocess(post_of(require(node, "h")), inner);
    }
  }
  fail(node, "unsupported family kind");
}

ObservableFamily family_of(const YAML::Node& node, const PathDims& d, const Seed& seed) {
  if (!node.IsMap()) fail(node, "family must be a mapping");
  try {
    return family_body(node, d, seed);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(node, e.what());
  }
}

YAML::Node family_node(const ObservableFamily& f) {
  YAML::Node n;
  n["kind"] = family_kind_name(f.kind());
  std::visit(
      [&](const auto& body) {
        using B = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<B, LinearProjected>) {
          n["ell"] = f.ell();
          n["coefficients"]["a"] = table_node(body.a);
        } else if constexpr (std::is_same_v<B, TransitionEnergy>) {
          n["ell"] = f.ell();
          n["coefficients"]["u"] = table_node(body.u);
          n["coefficients"]["v"] = table_node(body.v);
          n["coefficients"]["w"] = table_node(body.w);
        } else if constexpr (std::is_same_v<B, QuantizedReal>) {
          n["ell"] = f.ell();
          n["observation_noise"] = noise_node(body.observation_noise);
          n["coefficients"]["state_w"] = reals_node(body.state_w);
          n["coefficients"]["micro_w"] = reals_node(body.micro_w);
          n["coefficients"]["noise_w"] = reals_node(body.noise_w);
          YAML::Node tau(YAML::NodeType::Sequence);
          for (double t : body.tau) tau.push_back(t);
          n["coefficients"]["tau"] = flow(tau);
        } else if constexpr (std::is_same_v<B, NonlinearLocal>) {
          n["ell"] = f.ell();
          n["coefficients"]["chi"] = scalars_node(body.chi);
          n["coefficients"]["a"] = table_node(body.a);
          n["coefficients"]["b"] = table_node(body.b);
          n["coefficients"]["c"] = scalars_node(body.c);
          n["coefficients"]["d"] = table_node(body.d);
        } else if constexpr (std::is_same_v<B, Telescoping>) {
          n["ell"] = f.ell();
        } else if constexpr (std::is_same_v<B, Composite>) {
          for (const auto& part : body.parts) n["parts"].push_back(family_node(part));
        } else if constexpr (std::is_same_v<B, PostProcessed>) {
          n["inner"] = family_node(*body.inner);
          n["h"]["kind"] = post_name(body.h.kind);
          n["h"]["param"] = body.h.param;
        }
      },
      f.body());
  return n;
}

// ---- parameter sets

ParameterSet params_of(const YAML::Node& node, const std::optional<Seed>& default_seed) {
  check_keys(node,
             {"version", "q", "n", "T", "macro_alphabet", "micro_alphabet", "noise", "boundary", "seed",
              "encoding_version", "family"},
             "parameters");
  if (node["version"] && as<int>(node["version"], "version") != kConfigVersion) {
    fail(node["version"], "unsupported config version");
  }
  const auto qv = as<std::uint64_t>(require(node, "q"), "q");
  std::optional<Modulus> q;
  try {
    q.emplace(qv);
  } catch (const Error& e) {
    fail(node["q"], e.what());
  }
  const auto n = as<std::size_t>(require(node, "n"), "n");
  const auto T = as<std::size_t>(require(node, "T"), "T");
  if (n == 0) fail(node["n"], "n must be >= 1");
  ParameterSet p(*q, n, T);

  auto alphabet = [&](const char* key) {
    const auto a = require(node, key);
    if (!a.IsSequence() || a.size() == 0) fail(a, std::string(key) + " must be a non-empty list");
    std::vector<StateVector> out;
    for (const auto& v : a) out.push_back(state_of(v, *q, n, key));
    return out;
  };
  p.macro_alphabet = alphabet("macro_alphabet");
  p.micro_alphabet = alphabet("micro_alphabet");
  if (node["noise"]) p.noise = noise_of(node["noise"]);
  if (node["boundary"]) {
    const auto b = node["boundary"];
    check_keys(b, {"start", "end"}, "boundary");
    Boundary bd{state_of(require(b, "start"), *q, n, "boundary.start"), std::nullopt};
    if (b["end"]) bd.end = state_of(b["end"], *q, n, "boundary.end");
    p.boundary = std::move(bd);
  }
  if (node["encoding_version"]) {
    p.encoding_version = static_cast<std::uint8_t>(as<unsigned>(node["encoding_version"], "encoding_version"));
  }
  if (node["seed"]) {
    p.seed = seed_of(node["seed"]);
  } else if (default_seed) {
    p.seed = *default_seed;
  }
  if (node["family"]) p.family = family_of(node["family"], p.dims(), p.seed);
  try {
    p.validate();
  } catch (const Error& e) {
    fail(node, e.what());
  }
  return p;
}

YAML::Node params_node(const ParameterSet& p) {
  YAML::Node n;
  n["version"] = kConfigVersion;
  n["q"] = p.modulus.value();
  n["n"] = p.n;
  n["T"] = p.T;
  for (const auto& v : p.macro_alphabet) n["macro_alphabet"].push_back(state_node(v));
  for (const auto& v : p.micro_alphabet) n["micro_alphabet"].push_back(state_node(v));
  n["noise"] = noise_node(p.noise);
  if (p.boundary) {
    n["boundary"]["start"] = state_node(p.boundary->start);
    if (p.boundary->end) n["boundary"]["end"] = state_node(*p.boundary->end);
  }
  n["seed"] = seed_to_hex(p.seed);
  n["encoding_version"] = static_cast<unsigned>(p.encoding_version);
  if (p.family) n["family"] = family_node(*p.family);
  return n;
}

std::string emit(const YAML::Node& node) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << node;
  return std::string(out.c_str()) + "\n";
}

YAML::Node load(std::string_view text) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
}

}  // namespace

Seed derive_seed(const Seed& root, std::string_view label) {
  const std::string msg(label);
  return blake2b_256(std::span(reinterpret_cast<const std::uint8_t*>(msg.data()), msg.size()), root);
}

ParameterSet parse_params(std::string_view text, const std::optional<Seed>& default_seed) {
  return params_of(load(text), default_seed);
}

std::string dump_params(const ParameterSet& p) { return emit(params_node(p)); }

ObservableFamily parse_family(std::string_view text, const PathDims& dims, const Seed& seed) {
  return family_of(load(text), dims, seed);
}

std::string dump_family(const ObservableFamily& f) { return emit(family_node(f)); }

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

ParameterSet load_params(const std::filesystem::path& path) {
  return parse_params(read_text_file(path));
}

void save_params(const ParameterSet& p, const std::filesystem::path& path) {
  write_text_file(path, dump_params(p));
}

GridConfig parse_grid(std::string_view text) {
  const auto root = load(text);
  check_keys(root, {"version", "seed", "output_dir", "workers", "trials", "solvers", "cap", "cells"},
             "grid");
  GridConfig g;
  g.version = as<int>(require(root, "version"), "version");
  if (g.version != kConfigVersion) fail(root["version"], "unsupported grid version");
  g.seed = seed_of(require(root, "seed"));
  if (root["output_dir"]) g.output_dir = as<std::string>(root["output_dir"], "output_dir");
  if (root["workers"]) g.workers = std::max(1U, as<unsigned>(root["workers"], "workers"));
  if (root["trials"]) g.trials = as<std::size_t>(root["trials"], "trials");
  if (root["cap"]) g.cap = BigCount(as<std::uint64_t>(root["cap"], "cap"));
  if (root["solvers"]) {
    const auto s = root["solvers"];
    if (!s.IsSequence()) fail(s, "solvers must be a list");
    for (const auto& v : s) g.solvers.push_back(as<std::string>(v, "solver"));
  }
  const auto cells = require(root, "cells");
  if (!cells.IsSequence()) fail(cells, "cells must be a list");
  std::set<std::string> labels;
  for (const auto& c : cells) {
    check_keys(c, {"label", "params"}, "cell");
    const auto label = as<std::string>(require(c, "label"), "label");
    if (!labels.insert(label).second) fail(c["label"], "duplicate cell label '" + label + "'");
    g.cells.push_back(GridCell{label, params_of(require(c, "params"), derive_seed(g.seed, "cell/" + label))});
  }
  return g;
}

GridConfig load_grid(const std::filesystem::path& path) { return parse_grid(read_text_file(path)); }

std::string dump_constraint_instance(const ParameterSet& p, const PublicObservable& y) {
  const auto& f = p.require_family();
  if (y.fingerprint != f.fingerprint()) throw InvalidParameters("Y was not produced by P's family");
  YAML::Node n;
  n["format"] = "nhp-constraint-instance";
  n["version"] = kConfigVersion;
  n["params"] = params_node(p);
  n["observable"]["m"] = y.m();
  n["observable"]["ell"] = y.ell;
  n["observable"]["fingerprint"] = seed_to_hex(y.fingerprint);
  YAML::Node entries(YAML::NodeType::Sequence);
  for (auto e : y.entries) entries.push_back(e);
  n["observable"]["entries"] = flow(entries);
  return emit(n);
}

std::pair<ParameterSet, PublicObservable> parse_constraint_instance(std::string_view text) {
  const auto root = load(text);
  check_keys(root, {"format", "version", "params", "observable"}, "constraint instance");
  if (as<std::string>(require(root, "format"), "format") != "nhp-constraint-instance") {
    fail(root["format"], "not a constraint instance");
  }
  if (as<int>(require(root, "version"), "version") != kConfigVersion) {
    fail(root["version"], "unsupported constraint-instance version");
  }
  ParameterSet p = params_of(require(root, "params"), std::nullopt);
  const auto obs = require(root, "observable");
  check_keys(obs, {"m", "ell", "fingerprint", "entries"}, "observable");
  PublicObservable y;
  y.ell = as<std::uint32_t>(require(obs, "ell"), "ell");
  y.fingerprint = seed_of(require(obs, "fingerprint"));
  const auto entries = require(obs, "entries");
  if (!entries.IsSequence()) fail(entries, "entries must be a list");
  for (const auto& e : entries) y.entries.push_back(as<std::uint64_t>(e, "entry"));
  if (y.entries.size() != as<std::size_t>(require(obs, "m"), "m")) fail(obs, "m does not match entries");
  if (!p.family) fail(root["params"], "constraint instance needs a family");
  if (y.fingerprint != p.family->fingerprint() || y.ell != p.family->ell() || y.m() != p.family->m()) {
    throw ParseError("observable does not belong to the instance's family");
  }
  return {std::move(p), std::move(y)};
}

}  // namespace nhp
