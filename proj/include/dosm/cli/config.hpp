#pragma once

// Run configuration for the dosm command-line tool.
//
// A config is one JSON document. Component indices inside it are 1-based.
//
//   {
//     "model":     { "type": "poisson", "n": 10, "lambda": 1.0 },
//     "structure": { "preset": "bridge" },
//     "requests":  { "ranks": "all", "moments": [1, 2], "d": 0.0005, "variance": true },
//     "sweep":     { "parameter": "pi", "grid": { "from": 0, "to": 0.25, "count": 50, "open": true } },
//     "validate":  { "samples": 1000000 }
//   }
//
// Model types:
//   poisson     "lambda" (iid, with "n") or "lambdas"
//   negbin      "size" and "prob" (iid, with "n") or "probs"
//   geometric   "pi" (iid, with "n") or "pis"
//   finite      "pmf" (iid, with "n") or "pmfs"
//   independent "marginals": [{"law": "poisson", "lambda": 2}, ...]
//   multinomial "trials", "probs"
//   explicit    "points": [[x1..xn], ...], "probs": [...]
//   mvg         "n" with "shocks": [{"set": [1, 2], "theta": 0.9}, ...]
//               or "levels": [theta_1, theta_2, ...] (exchangeable)
// iid shortcuts are declared exchangeable; "exchangeable": true/false overrides
// the declaration for the other independent and explicit types.
//
// Structures: "preset" in {bridge, series, parallel, k_out_of_n_good,
// k_out_of_n_failed} (with "n", "k" where needed), or "n" with "path_sets"
// and/or "cut_sets". An optional "samaniego" vector is carried along.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dosm/coherent.hpp"
#include "dosm/error.hpp"
#include "dosm/joint_model.hpp"
#include "dosm/marginal.hpp"
#include "dosm/mvg.hpp"
#include "dosm/orderstat.hpp"

namespace dosm::cli {

using Json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A JSON value together with its location, for field-level diagnostics.
class Field {
 public:
  Field(const Json& value, std::string path) : value_(&value), path_(std::move(path)) {}

  const Json& json() const { return *value_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(path_ + ": " + message); }

  bool has(const std::string& key) const { return value_->is_object() && value_->contains(key); }

  Field at(const std::string& key) const {
    if (!value_->is_object()) fail("expected an object");
    if (!value_->contains(key)) fail("missing field \"" + key + "\"");
    return Field((*value_)[key], path_ + "." + key);
  }
  std::optional<Field> find(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return at(key);
  }
  Field at(std::size_t i) const { return Field((*value_)[i], path_ + "[" + std::to_string(i) + "]"); }

  std::size_t size() const {
    if (!value_->is_array()) fail("expected an array");
    return value_->size();
  }
  bool is_array() const { return value_->is_array(); }

  double number() const {
    if (!value_->is_number()) fail("expected a number");
    return value_->get<double>();
  }
  long long integer() const {
    if (!value_->is_number_integer()) fail("expected an integer");
    return value_->get<long long>();
  }
  std::string string() const {
    if (!value_->is_string()) fail("expected a string");
    return value_->get<std::string>();
  }
  bool boolean() const {
    if (!value_->is_boolean()) fail("expected true or false");
    return value_->get<bool>();
  }
  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
    return out;
  }
  std::vector<long long> integers() const {
    std::vector<long long> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).integer());
    return out;
  }

  /// 1-based component list -> Subset.
  Subset subset(int n) const {
    std::uint32_t bits = 0;
    for (std::size_t i = 0; i < size(); ++i) {
      const long long c = at(i).integer();
      if (c < 1 || c > n) at(i).fail("component index must lie in 1.." + std::to_string(n));
      bits |= std::uint32_t{1} << (c - 1);
    }
    if (bits == 0) fail("component set must be non-empty");
    return Subset(bits);
  }

 private:
  const Json* value_;
  std::string path_;
};

/// Parses JSON text, reporting syntax errors with line and column.
inline Json parse_json(const std::string& text, const std::string& source = "config") {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    if (auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str(), path);
}

namespace detail {

// Runs a library constructor, re-labelling its argument errors with the field.
template <class F>
auto guarded(const Field& f, F&& make) {
  try {
    return make();
  } catch (const ArgumentError& e) {
    f.fail(e.what());
  }
}

inline int read_n(const Field& f) {
  const long long n = f.at("n").integer();
  if (n < 1) f.at("n").fail("n must be positive");
  if (n > 32) throw CapacityError(f.path() + ".n: at most 32 components are supported");
  return static_cast<int>(n);
}

inline MarginalDist read_marginal(const Field& f) {
  const std::string law = f.at("law").string();
  return guarded(f, [&] {
    if (law == "poisson") return MarginalDist::poisson(f.at("lambda").number());
    if (law == "negbin") return MarginalDist::negative_binomial(f.at("size").number(), f.at("prob").number());
    if (law == "geometric") return MarginalDist::geometric(f.at("pi").number());
    if (law == "finite") return MarginalDist::finite(f.at("pmf").numbers());
    f.at("law").fail("unknown law \"" + law + "\" (poisson, negbin, geometric, finite)");
  });
}

// iid (scalar + n) or per-component vector forms of one parameter.
template <class Make>
std::pair<std::vector<MarginalDist>, bool> read_family(const Field& f, const std::string& scalar,
                                                       const std::string& vector, Make&& make) {
  std::vector<MarginalDist> out;
  if (f.has(vector)) {
    const Field v = f.at(vector);
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(guarded(v.at(i), [&] { return make(v.at(i)); }));
    if (out.empty()) v.fail("needs at least one component");
    return {out, false};
  }
  const int n = read_n(f);
  const Field s = f.at(scalar);
  const auto d = guarded(s, [&] { return make(s); });
  return {std::vector<MarginalDist>(n, d), true};
}

}  // namespace detail

inline MvgParams read_mvg(const Field& f) {
  const int n = detail::read_n(f);
  if (f.has("levels")) {
    const Field lv = f.at("levels");
    return detail::guarded(lv, [&] { return MvgParams::exchangeable(n, lv.numbers()); });
  }
  const Field shocks = f.at("shocks");
  std::vector<ShockParam> list;
  for (std::size_t i = 0; i < shocks.size(); ++i) {
    const Field s = shocks.at(i);
    list.push_back({s.at("set").subset(n), s.at("theta").number()});
  }
  return detail::guarded(f, [&] { return MvgParams::general(n, std::move(list)); });
}

inline JointModel read_model(const Field& f) {
  const std::string type = f.at("type").string();
  auto declared = [&](bool fallback) { return f.has("exchangeable") ? f.at("exchangeable").boolean() : fallback; };
  auto independent = [&](std::pair<std::vector<MarginalDist>, bool> fam) {
    return JointModel::independent(std::move(fam.first), declared(fam.second));
  };
  if (type == "poisson") {
    return independent(detail::read_family(f, "lambda", "lambdas", [](const Field& v) { return MarginalDist::poisson(v.number()); }));
  }
  if (type == "negbin") {
    const double size = f.at("size").number();
    return independent(detail::read_family(f, "prob", "probs", [size](const Field& v) {
      return MarginalDist::negative_binomial(size, v.number());
    }));
  }
  if (type == "geometric") {
    return independent(detail::read_family(f, "pi", "pis", [](const Field& v) { return MarginalDist::geometric(v.number()); }));
  }
  if (type == "finite") {
    return independent(detail::read_family(f, "pmf", "pmfs", [](const Field& v) { return MarginalDist::finite(v.numbers()); }));
  }
  if (type == "independent") {
    const Field ms = f.at("marginals");
    std::vector<MarginalDist> out;
    for (std::size_t i = 0; i < ms.size(); ++i) out.push_back(detail::read_marginal(ms.at(i)));
    if (out.empty()) ms.fail("needs at least one marginal");
    return JointModel::independent(std::move(out), declared(false));
  }
  if (type == "multinomial") {
    const long long trials = f.at("trials").integer();
    const auto probs = f.at("probs").numbers();
    return JointModel::explicit_pmf(detail::guarded(f, [&] { return multinomial_pmf(static_cast<int>(trials), probs); }),
                                    declared(false));
  }
  if (type == "explicit") {
    const Field pts = f.at("points");
    const Field probs = f.at("probs");
    if (pts.size() != probs.size()) probs.fail("needs one probability per point");
    if (pts.size() == 0) pts.fail("needs at least one point");
    const int n = static_cast<int>(pts.at(0).size());
    if (n < 1) pts.at(0).fail("points need at least one coordinate");
    if (n > 32) throw CapacityError(pts.path() + ": at most 32 coordinates are supported");
    ExplicitFinitePmf::Builder b(n);
    std::vector<int> x(n);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const Field pt = pts.at(k);
      const auto coords = pt.integers();
      if (static_cast<int>(coords.size()) != n) pt.fail("expected " + std::to_string(n) + " coordinates");
      for (int i = 0; i < n; ++i) x[i] = static_cast<int>(coords[i]);
      detail::guarded(pt, [&] { return b.add(x, probs.at(k).number()), 0; });
    }
    return JointModel::explicit_pmf(detail::guarded(f, [&] { return std::move(b).build(); }), declared(false));
  }
  if (type == "mvg") return JointModel::mvg(read_mvg(f));
  f.at("type").fail("unknown model type \"" + type +
                    "\" (poisson, negbin, geometric, finite, independent, multinomial, explicit, mvg)");
}

struct StructureConfig {
  SystemStructure structure;
  std::optional<std::vector<double>> samaniego;
};

inline StructureConfig read_structure(const Field& f) {
  auto make = [&]() -> SystemStructure {
    if (f.has("preset")) {
      const std::string preset = f.at("preset").string();
      if (preset == "bridge") return SystemStructure::bridge();
      const int n = detail::read_n(f);
      if (preset == "series") return SystemStructure::series(n);
      if (preset == "parallel") return SystemStructure::parallel(n);
      if (preset == "k_out_of_n_good" || preset == "k_out_of_n_failed") {
        const long long k = f.at("k").integer();
        if (k < 1 || k > n) f.at("k").fail("k must lie in 1..n");
        return preset == "k_out_of_n_good" ? SystemStructure::k_out_of_n_good(static_cast<int>(k), n)
                                           : SystemStructure::k_out_of_n_failed(static_cast<int>(k), n);
      }
      f.at("preset").fail("unknown preset \"" + preset + "\" (bridge, series, parallel, k_out_of_n_good, k_out_of_n_failed)");
    }
    const int n = detail::read_n(f);
    auto sets = [&](const char* key) {
      const Field list = f.at(key);
      std::vector<Subset> out;
      for (std::size_t i = 0; i < list.size(); ++i) out.push_back(list.at(i).subset(n));
      return out;
    };
    std::optional<std::vector<Subset>> cuts;
    if (f.has("cut_sets")) cuts = sets("cut_sets");
    if (f.has("path_sets")) return SystemStructure::from_path_sets(n, sets("path_sets"), std::move(cuts));
    if (cuts) return SystemStructure::from_cut_sets(n, std::move(*cuts));
    f.fail("needs \"preset\", \"path_sets\" or \"cut_sets\"");
  };
  StructureConfig structure_cfg{detail::guarded(f, make), std::nullopt};
  if (f.has("samaniego")) {
    const Field s = f.at("samaniego");
    auto v = s.numbers();
    if (static_cast<int>(v.size()) != structure_cfg.structure.n()) s.fail("length must equal n");
    detail::guarded(s, [&] { return signature_from_samaniego(v); });
    structure_cfg.samaniego = std::move(v);
  }
  return structure_cfg;
}

struct Requests {
  std::vector<int> ranks;  // empty for system runs
  std::vector<int> moments{1};
  double d = 0.0005;
  bool variance = true;
  NegBinPlanRule negbin_rule = NegBinPlanRule::certified;
};

inline Requests read_requests(const std::optional<Field>& f, int n) {
  Requests r;
  if (!f) {
    for (int k = 1; k <= n; ++k) r.ranks.push_back(k);
    return r;
  }
  if (auto ranks = f->find("ranks")) {
    if (ranks->json().is_string()) {
      if (ranks->string() != "all") ranks->fail("expected \"all\" or a list of ranks");
      for (int k = 1; k <= n; ++k) r.ranks.push_back(k);
    } else {
      for (std::size_t i = 0; i < ranks->size(); ++i) {
        const long long k = ranks->at(i).integer();
        if (k < 1 || k > n) ranks->at(i).fail("rank must lie in 1.." + std::to_string(n));
        r.ranks.push_back(static_cast<int>(k));
      }
    }
  } else {
    for (int k = 1; k <= n; ++k) r.ranks.push_back(k);
  }
  if (auto m = f->find("moments")) {
    r.moments.clear();
    for (std::size_t i = 0; i < m->size(); ++i) {
      const long long p = m->at(i).integer();
      if (p < 1 || p > 12) m->at(i).fail("moment order must lie in 1..12");
      r.moments.push_back(static_cast<int>(p));
    }
    if (r.moments.empty()) m->fail("needs at least one moment order");
  }
  if (auto d = f->find("d")) {
    r.d = d->number();
    if (!(r.d > 0.0)) d->fail("error bound d must be positive");
  }
  if (auto v = f->find("variance")) r.variance = v->boolean();
  if (auto rule = f->find("negbin_rule")) {
    const auto s = rule->string();
    if (s == "certified") {
      r.negbin_rule = NegBinPlanRule::certified;
    } else if (s == "tabulated") {
      r.negbin_rule = NegBinPlanRule::tabulated;
    } else {
      rule->fail("expected \"certified\" or \"tabulated\"");
    }
  }
  return r;
}

}  // namespace dosm::cli
