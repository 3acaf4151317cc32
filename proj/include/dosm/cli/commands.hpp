#pragma once

// The five dosm subcommands. Each takes a parsed config document and returns a
// Table; run_command() adds error handling and the exit-code contract:
//   0 success, 1 validation check failed, 2 config error,
//   3 capacity error, 4 numeric or convergence error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "dosm/cli/config.hpp"
#include "dosm/cli/table.hpp"
#include "dosm/coherent.hpp"
#include "dosm/error.hpp"
#include "dosm/joint_model.hpp"
#include "dosm/mvg.hpp"
#include "dosm/oracle.hpp"
#include "dosm/orderstat.hpp"

namespace dosm::cli {

enum ExitCode : int { kOk = 0, kValidationFailed = 1, kConfigError = 2, kCapacityError = 3, kNumericError = 4 };

inline constexpr std::uint64_t kDefaultSeed = 20240607;
inline constexpr std::size_t kDefaultSamples = 200000;

struct RunOptions {
  RenderOptions render;
  std::optional<std::uint64_t> seed;
  std::optional<double> d;
};

/// What a moment is taken of: the r-th order statistic or a system lifetime.
using Target = std::variant<RankStatistic, SystemStructure>;

/// Raw moments E Y^1..E Y^P of one target.
struct Evaluation {
  std::vector<double> raw;
  std::vector<std::optional<long long>> M0;
  std::string method;  // closed-form, exact or truncated

  double variance() const { return raw.at(1) - raw[0] * raw[0]; }
};

/// MVG parameters for models that have them: MVG models and independent
/// geometric marginals (singleton shocks with theta_i = 1 - pi_i).
inline std::optional<MvgParams> closed_form_params(const JointModel& model) {
  if (const auto* p = model.as_mvg()) return *p;
  auto geo = dosm::detail::uniform_laws<Geometric>(model);
  if (!geo || model.n() > 32) return std::nullopt;
  const int n = model.n();
  const double pi = geo->front().pi;
  const bool iid = std::all_of(geo->begin(), geo->end(), [pi](const Geometric& g) { return g.pi == pi; });
  if (iid && model.exchangeable()) return MvgParams::exchangeable(n, {1.0 - pi});
  std::vector<ShockParam> shocks;
  for (int i = 0; i < n; ++i) shocks.push_back({Subset(std::uint32_t{1} << i), 1.0 - (*geo)[i].pi});
  return MvgParams::general(n, std::move(shocks));
}

inline Evaluation evaluate(const JointModel& model, const Target& target, int P, double d,
                           NegBinPlanRule rule = NegBinPlanRule::certified) {
  Evaluation ev;
  const auto* rank = std::get_if<RankStatistic>(&target);
  const auto* system = std::get_if<SystemStructure>(&target);
  if (system) dosm::detail::require(system->n() == model.n(), "structure size n=" + std::to_string(system->n()) +
                                                            " does not match model dimension " + std::to_string(model.n()));
  if (auto params = closed_form_params(model)) {
    std::vector<double> fact;
    for (int p = 1; p <= P; ++p) {
      fact.push_back(rank ? mvg_orderstat_factorial_moment(*params, rank->r, p) : system_moment_mvg(*params, *system, p));
    }
    ev.raw = factorial_to_raw(fact);
    ev.M0.assign(P, std::nullopt);
    ev.method = "closed-form";
    return ev;
  }
  for (int p = 1; p <= P; ++p) {
    const MomentResult res = rank ? orderstat_moment(model, MomentRequest{rank->r, model.n(), p, d}, rule)
                                  : system_moment(model, *system, p, d);
    if (!std::isfinite(res.value)) throw NumericError("moment of order " + std::to_string(p) + " is not finite");
    ev.raw.push_back(res.value);
    ev.M0.push_back(res.M0_used);
    ev.method = res.exact ? "exact" : "truncated";
  }
  return ev;
}

namespace detail {

inline const Json& section(const Json& doc, const char* key) {
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  if (!doc.contains(key)) throw ConfigError(std::string("config: missing section \"") + key + "\"");
  return doc[key];
}

inline std::optional<Field> optional_section(const Json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) return std::nullopt;
  return Field(doc[key], key);
}

inline int highest_order(const Requests& req) {
  const int top = *std::max_element(req.moments.begin(), req.moments.end());
  return std::max(top, req.variance ? 2 : 1);
}

inline Requests requests_for(const Json& doc, int n, const RunOptions& opt) {
  Requests req = read_requests(optional_section(doc, "requests"), n);
  if (opt.d) {
    if (!(*opt.d > 0.0)) throw ConfigError("--d: error bound must be positive");
    req.d = *opt.d;
  }
  return req;
}

// Value columns for one evaluation: m<p> with M0_<p> when truncated, then var.
inline void add_value_columns(Table& t, const Requests& req, bool with_m0) {
  for (int p : req.moments) {
    t.columns.push_back("m" + std::to_string(p));
    if (with_m0) t.columns.push_back("M0_" + std::to_string(p));
  }
  if (req.variance) t.columns.push_back("var");
}

inline void add_value_cells(std::vector<Cell>& row, const Requests& req, bool with_m0, const Evaluation& ev) {
  for (int p : req.moments) {
    row.emplace_back(ev.raw[p - 1]);
    if (with_m0) row.emplace_back(ev.M0[p - 1] ? Cell(*ev.M0[p - 1]) : Cell{});
  }
  if (req.variance) row.emplace_back(ev.variance());
}

inline void add_common_meta(Table& t, const std::string& command, const Json& doc, const JointModel& model,
                            const Requests& req) {
  t.add_meta("command", command);
  t.add_meta("model", section(doc, "model").value("type", "?"));
  t.add_meta("n", std::to_string(model.n()));
  t.add_meta("exchangeable", model.exchangeable() ? "true" : "false");
  std::ostringstream d;
  d << req.d;
  t.add_meta("d", d.str());
}

}  // namespace detail

/// One row per requested rank r.
inline Table cmd_orderstat(const Json& doc, const RunOptions& opt = {}) {
  const JointModel model = read_model(Field(detail::section(doc, "model"), "model"));
  const Requests req = detail::requests_for(doc, model.n(), opt);
  const int P = detail::highest_order(req);
  std::vector<Evaluation> evals;
  for (int r : req.ranks) evals.push_back(evaluate(model, RankStatistic{r}, P, req.d, req.negbin_rule));
  const bool with_m0 = !evals.empty() && evals.front().method == "truncated";
  Table t;
  detail::add_common_meta(t, "orderstat", doc, model, req);
  if (!evals.empty()) t.add_meta("method", evals.front().method);
  t.columns = {"r"};
  detail::add_value_columns(t, req, with_m0);
  for (std::size_t k = 0; k < evals.size(); ++k) {
    std::vector<Cell> row{static_cast<long long>(req.ranks[k])};
    detail::add_value_cells(row, req, with_m0, evals[k]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// System lifetime moments: one row.
inline Table cmd_system(const Json& doc, const RunOptions& opt = {}) {
  const JointModel model = read_model(Field(detail::section(doc, "model"), "model"));
  const StructureConfig structure_cfg = read_structure(Field(detail::section(doc, "structure"), "structure"));
  Requests req = detail::requests_for(doc, model.n(), opt);
  if (!doc.contains("requests") || !doc["requests"].contains("moments")) req.moments = {1, 2};
  const Evaluation ev = evaluate(model, structure_cfg.structure, detail::highest_order(req), req.d);
  const bool with_m0 = ev.method == "truncated";
  Table t;
  detail::add_common_meta(t, "system", doc, model, req);
  t.add_meta("method", ev.method);
  detail::add_value_columns(t, req, with_m0);
  std::vector<Cell> row;
  detail::add_value_cells(row, req, with_m0, ev);
  t.rows.push_back(std::move(row));
  return t;
}

/// Subset coefficients and size-aggregated signatures.
inline Table cmd_signature(const Json& doc, const RunOptions& = {}) {
  const StructureConfig structure_cfg = read_structure(Field(detail::section(doc, "structure"), "structure"));
  const SignatureSet sig = signature_set(structure_cfg.structure, structure_cfg.samaniego);
  Table t;
  t.add_meta("command", "signature");
  t.add_meta("n", std::to_string(structure_cfg.structure.n()));
  t.columns = {"kind", "key", "value"};
  for (const auto& [k, c] : sig.alpha_subsets) t.rows.push_back({std::string("alpha_subset"), k.label(), c});
  for (const auto& [k, c] : sig.beta_subsets) t.rows.push_back({std::string("beta_subset"), k.label(), c});
  for (std::size_t i = 0; i < sig.alpha.size(); ++i) {
    t.rows.push_back({std::string("minimal"), static_cast<long long>(i + 1), sig.alpha[i]});
  }
  for (std::size_t i = 0; i < sig.beta.size(); ++i) {
    t.rows.push_back({std::string("maximal"), static_cast<long long>(i + 1), sig.beta[i]});
  }
  if (sig.samaniego) {
    const auto converted = signature_from_samaniego(*sig.samaniego);
    const auto integral = integral_signature(converted);
    for (std::size_t i = 0; i < converted.size(); ++i) {
      const Cell v = integral ? Cell((*integral)[i]) : Cell(converted[i]);
      t.rows.push_back({std::string("samaniego_minimal"), static_cast<long long>(i + 1), v});
    }
  }
  return t;
}

/// Grid points of a sweep section: explicit "values" or a "grid" with
/// from/to/count; an open grid excludes both end points.
inline std::vector<double> sweep_grid(const Field& sweep) {
  if (auto values = sweep.find("values")) return values->numbers();
  const Field g = sweep.at("grid");
  const double from = g.at("from").number();
  const double to = g.at("to").number();
  const long long count = g.at("count").integer();
  if (count < 0) g.at("count").fail("count must be non-negative");
  if (!std::isfinite(from) || !std::isfinite(to)) g.fail("grid bounds must be finite");
  const bool open = g.has("open") && g.at("open").boolean();
  std::vector<double> out;
  for (long long k = 0; k < count; ++k) {
    double t;
    if (open) {
      t = static_cast<double>(k + 1) / static_cast<double>(count + 1);
    } else {
      t = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    }
    out.push_back(from + (to - from) * t);
  }
  return out;
}

/// Plot-ready series over one scalar model parameter. Points that fail are
/// reported in the error column and the run continues.
inline Table cmd_sweep(const Json& doc, const RunOptions& opt = {}) {
  const Field sweep(detail::section(doc, "sweep"), "sweep");
  const std::string parameter = sweep.at("parameter").string();
  static const std::vector<std::string> scalars{"pi", "lambda", "prob", "size"};
  if (std::find(scalars.begin(), scalars.end(), parameter) == scalars.end()) {
    sweep.at("parameter").fail("unknown sweep parameter \"" + parameter + "\" (pi, lambda, prob, size)");
  }
  const auto grid = sweep_grid(sweep);
  const Json& base = detail::section(doc, "model");
  const bool has_structure = doc.contains("structure");
  std::optional<StructureConfig> structure_cfg;
  if (has_structure) structure_cfg = read_structure(Field(doc["structure"], "structure"));
  int rank = 1;
  if (auto r = sweep.find("rank")) rank = static_cast<int>(r->integer());

  Requests req;
  req.moments = {1, 2};
  if (auto f = detail::optional_section(doc, "requests")) {
    req = read_requests(f, 1);
    if (!f->has("moments")) req.moments = {1, 2};
  }
  if (opt.d) req.d = *opt.d;
  const int P = detail::highest_order(req);

  struct Point {
    double x;
    std::optional<Evaluation> ev;
    std::string error;
  };
  std::vector<Point> points;
  for (double x : grid) {
    Point pt{x, std::nullopt, ""};
    try {
      Json m = base;
      m[parameter] = x;
      const std::string plural = parameter == "pi" ? "pis" : parameter == "lambda" ? "lambdas" : parameter + "s";
      if (m.contains(plural)) {
        if (!m.contains("n")) m["n"] = m[plural].size();
        m.erase(plural);
      }
      const JointModel model = read_model(Field(m, "model"));
      const Target target = structure_cfg ? Target(structure_cfg->structure) : Target(RankStatistic{rank});
      pt.ev = evaluate(model, target, P, req.d, req.negbin_rule);
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
    points.push_back(std::move(pt));
  }
  const bool with_m0 = std::any_of(points.begin(), points.end(), [](const Point& p) { return p.ev && p.ev->method == "truncated"; });
  Table t;
  t.add_meta("command", "sweep");
  t.add_meta("model", base.value("type", "?"));
  t.add_meta("target", structure_cfg ? "system" : "r=" + std::to_string(rank));
  t.add_meta("parameter", parameter);
  t.add_meta("points", std::to_string(points.size()));
  t.columns = {parameter};
  detail::add_value_columns(t, req, with_m0);
  t.columns.push_back("error");
  for (const auto& pt : points) {
    std::vector<Cell> row{pt.x};
    if (pt.ev) {
      detail::add_value_cells(row, req, with_m0, *pt.ev);
    } else {
      row.resize(t.columns.size() - 1);
    }
    row.emplace_back(pt.error.empty() ? Cell{} : Cell(pt.error));
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Cross-checks of the analytic pipeline: exhaustive enumeration (finite
/// supports) and Monte Carlo 3-sigma bands, per target and moment order.
inline Table cmd_validate(const Json& doc, const RunOptions& opt = {}) {
  const JointModel model = read_model(Field(detail::section(doc, "model"), "model"));
  std::optional<StructureConfig> structure_cfg;
  if (doc.contains("structure")) structure_cfg = read_structure(Field(doc["structure"], "structure"));
  Requests req = detail::requests_for(doc, model.n(), opt);
  std::size_t samples = kDefaultSamples;
  std::uint64_t seed = kDefaultSeed;
  bool run_mc = true, run_enum = true;
  if (auto v = detail::optional_section(doc, "validate")) {
    if (auto s = v->find("samples")) {
      const long long k = s->integer();
      if (k < 1000) s->fail("at least 1000 samples are required");
      samples = static_cast<std::size_t>(k);
    }
    if (auto s = v->find("seed")) seed = static_cast<std::uint64_t>(s->integer());
    if (auto s = v->find("monte_carlo")) run_mc = s->boolean();
    if (auto s = v->find("enumerate")) run_enum = s->boolean();
  }
  if (opt.seed) seed = *opt.seed;
  const int P = *std::max_element(req.moments.begin(), req.moments.end());

  std::vector<std::pair<std::string, Target>> targets;
  if (structure_cfg) {
    targets.emplace_back("system", structure_cfg->structure);
  } else {
    for (int r : req.ranks) targets.emplace_back("r=" + std::to_string(r), RankStatistic{r});
  }
  Table t;
  detail::add_common_meta(t, "validate", doc, model, req);
  t.add_meta("rng", kRngName);
  t.add_meta("seed", std::to_string(seed));
  t.add_meta("samples", std::to_string(samples));
  t.columns = {"check", "target", "p", "analytic", "reference", "std_error", "tolerance", "status"};
  std::size_t failed = 0;
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    const auto& [label, target] = targets[ti];
    const Evaluation ev = evaluate(model, target, P, req.d, req.negbin_rule);
    const Statistic stat = std::visit([](const auto& x) { return Statistic(x); }, target);
    const double slack = ev.method == "truncated" ? req.d : 0.0;
    for (int p : req.moments) {
      const double a = ev.raw[p - 1];
      if (run_enum && model.finite_support()) {
        try {
          const double ref = enumerate_moment(model, stat, p);
          const double tol = 1e-9 * std::max(1.0, std::abs(ref));
          const bool ok = std::abs(a - ref) <= tol;
          failed += !ok;
          t.rows.push_back({std::string("exhaustive"), label, static_cast<long long>(p), a, ref, Cell{}, tol,
                            std::string(ok ? "pass" : "FAIL")});
        } catch (const CapacityError&) {
          t.rows.push_back({std::string("exhaustive"), label, static_cast<long long>(p), a, Cell{}, Cell{}, Cell{},
                            std::string("skipped")});
        }
      }
      if (run_mc) {
        const auto mc = mc_moment(model, stat, p, samples, seed + ti * 1000003ULL + static_cast<std::uint64_t>(p));
        const double tol = 3.0 * mc.std_error + slack;
        const bool ok = std::abs(a - mc.mean) <= tol;
        failed += !ok;
        t.rows.push_back({std::string("monte_carlo"), label, static_cast<long long>(p), a, mc.mean, mc.std_error, tol,
                          std::string(ok ? "pass" : "FAIL")});
      }
    }
  }
  t.add_meta("failed", std::to_string(failed));
  return t;
}

inline Table dispatch(const std::string& command, const Json& doc, const RunOptions& opt) {
  if (command == "orderstat") return cmd_orderstat(doc, opt);
  if (command == "system") return cmd_system(doc, opt);
  if (command == "signature") return cmd_signature(doc, opt);
  if (command == "sweep") return cmd_sweep(doc, opt);
  if (command == "validate") return cmd_validate(doc, opt);
  throw ConfigError("unknown command \"" + command + "\"");
}

/// Runs one command, writing data to `out` and diagnostics to `err`.
inline int run_command(const std::string& command, const std::string& config_path, const RunOptions& opt,
                       std::ostream& out, std::ostream& err) {
  try {
    const Json doc = load_json_file(config_path);
    const Table t = dispatch(command, doc, opt);
    out << render(t, opt.render);
    if (command == "validate" && t.meta_value("failed") != "0") {
      err << "dosm: validation failed: " << *t.meta_value("failed") << " check(s)\n";
      return kValidationFailed;
    }
    return kOk;
  } catch (const ConfigError& e) {
    err << "dosm: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ArgumentError& e) {
    err << "dosm: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const UnsupportedModelError& e) {
    err << "dosm: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Json::exception& e) {
    err << "dosm: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const CapacityError& e) {
    err << "dosm: capacity error: " << e.what() << '\n';
    return kCapacityError;
  } catch (const NumericError& e) {
    err << "dosm: numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    err << "dosm: error: " << e.what() << '\n';
    return kNumericError;
  }
}

}  // namespace dosm::cli
