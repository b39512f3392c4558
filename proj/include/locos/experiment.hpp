#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "locos/analysis.hpp"
#include "locos/error.hpp"
#include "locos/filtration.hpp"
#include "locos/gundy.hpp"
#include "locos/local_space.hpp"
#include "locos/nonbinary.hpp"
#include "locos/orthosystem.hpp"
#include "locos/projector_bounds.hpp"
#include "locos/tensor2d.hpp"

namespace locos {

inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::ordered_json;

// Flat "key = value" configuration, one key per line, '#' starts a comment.
class Config {
 public:
  static const std::set<std::string>& known_keys() {
    static const std::set<std::string> k = {
        "op",     "space",  "local", "local2", "filtration", "depth",    "chain",          "p",
        "lambda", "trials", "eps",   "m",      "levels",     "policy",   "target",         "set",
        "family", "mode",   "atoms", "seed",   "quad.tol",   "quad.max_depth", "remez.c1", "psi"};
    return k;
  }

  static Config parse(const std::string& txt) {
    Config c;
    std::istringstream is(txt);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      auto t = text::trim(line);
      if (auto h = t.find('#'); h != std::string_view::npos) t = text::trim(t.substr(0, h));
      if (t.empty()) continue;
      auto eq = t.find('=');
      auto at = "line " + std::to_string(lineno) + ": ";
      if (eq == std::string_view::npos) throw Error(at + "expected 'key = value'");
      std::string key(text::trim(t.substr(0, eq)));
      std::string val(text::trim(t.substr(eq + 1)));
      if (key.empty()) throw Error(at + "missing key");
      if (!known_keys().count(key)) throw Error(at + "unknown key '" + key + "'");
      if (val.empty()) throw Error(at + "field '" + key + "' has no value");
      if (c.kv_.count(key)) throw Error(at + "field '" + key + "' given twice");
      c.kv_[key] = val;
      c.line_[key] = lineno;
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      return parse(ss.str());
    } catch (const Error& e) {
      throw Error(path + ": " + e.what());
    }
  }

  bool has(const std::string& k) const { return kv_.count(k) > 0; }
  void set(const std::string& k, const std::string& v) {
    if (!known_keys().count(k)) throw Error("unknown key '" + k + "'");
    kv_[k] = v;
  }
  const std::map<std::string, std::string>& values() const { return kv_; }

  std::string str(const std::string& k, const std::string& def) const {
    auto it = kv_.find(k);
    return it == kv_.end() ? def : it->second;
  }

  double num(const std::string& k, double def) const {
    if (!has(k)) return def;
    return field(k, [&] {
      auto v = kv_.at(k);
      if (v == "inf") return std::numeric_limits<double>::infinity();
      return text::to_double(v);
    });
  }

  long long integer(const std::string& k, long long def) const {
    if (!has(k)) return def;
    return field(k, [&] { return text::to_int(kv_.at(k)); });
  }

  std::vector<double> list(const std::string& k, std::vector<double> def) const {
    if (!has(k)) return def;
    return field(k, [&] {
      std::vector<double> out;
      for (auto f : text::split(kv_.at(k), ',')) out.push_back(text::to_double(f));
      return out;
    });
  }

  // wraps a failure with the field name and its line
  template <class Fn>
  auto field(const std::string& k, Fn&& fn) const -> decltype(fn()) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(where(k) + e.what());
    }
  }

  std::string where(const std::string& k) const {
    auto it = line_.find(k);
    return "field '" + k + "'" + (it == line_.end() ? std::string() : " (line " + std::to_string(it->second) + ")") +
           ": ";
  }

  // sorted key=value lines
  std::string canonical() const {
    std::string s;
    for (const auto& [k, v] : kv_) s += k + "=" + v + "\n";
    return s;
  }

  std::string hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical()) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  std::map<std::string, std::string> kv_;
  std::map<std::string, int> line_;
};

struct RunOptions {
  int jobs = 1;
  bool timing = false;
};

struct RunOutput {
  Json report;
  std::vector<std::pair<std::string, std::string>> csv;  // file name, contents
};

namespace detail {

inline QuadOptions quad_options(const Config& c) {
  QuadOptions q;
  q.tol = c.num("quad.tol", q.tol);
  q.max_depth = static_cast<int>(c.integer("quad.max_depth", q.max_depth));
  if (!(q.tol > 0.0)) throw Error(c.where("quad.tol") + "must be positive");
  if (q.max_depth < 1) throw Error(c.where("quad.max_depth") + "must be positive");
  return q;
}

inline std::shared_ptr<BinaryFiltration> make_filtration(const Config& c, const ProbabilitySpace& space,
                                                         std::uint64_t seed) {
  auto src = c.str("filtration", "random");
  int depth = static_cast<int>(c.integer("depth", 6));
  if (depth < 0) throw Error(c.where("depth") + "must be non-negative");
  return c.field("filtration", [&] {
    if (src.rfind("file:", 0) == 0) {
      std::ifstream in(src.substr(5));
      if (!in) throw Error("cannot read filtration file '" + src.substr(5) + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      return std::make_shared<BinaryFiltration>(BinaryFiltration::from_text(ss.str()));
    }
    if (src == "random") {
      Rng rng(derive_seed(seed, 0xF117));
      return std::make_shared<BinaryFiltration>(gen::random(space, depth, rng));
    }
    if (src == "dyadic") return std::make_shared<BinaryFiltration>(gen::dyadic(space, depth));
    if (src == "chain") return std::make_shared<BinaryFiltration>(gen::chain(space, depth));
    throw Error("unknown filtration source '" + src + "' (random | dyadic | chain | file:PATH)");
  });
}

struct Built {
  std::shared_ptr<BinaryFiltration> F;
  std::shared_ptr<OrthoSystem> sys;
};

inline Built build_system(const Config& c, std::uint64_t seed, const std::string& default_space = "interval:0,1") {
  auto space = c.field("space", [&] { return ProbabilitySpace::parse(c.str("space", default_space)); });
  auto S = c.field("local", [&] { return LocalSpace::parse(c.str("local", "polynomial:1")); });
  auto policy = c.field("chain", [&] { return ChainPolicy::parse(c.str("chain", "standard")); });
  Built b;
  b.F = make_filtration(c, space, seed);
  b.sys = std::make_shared<OrthoSystem>(OrthoSystem::build(b.F, S, policy, quad_options(c)));
  return b;
}

inline double exponent_p(const Config& c, double def, bool open) {
  double p = c.num("p", def);
  bool ok = open ? (p > 1.0 && std::isfinite(p)) : (p >= 1.0);
  if (!ok) throw Error(c.where("p") + (open ? "must lie in (1, inf)" : "must lie in [1, inf]"));
  return p;
}

inline int positive(const Config& c, const std::string& k, int def) {
  auto v = c.integer(k, def);
  if (v < 1) throw Error(c.where(k) + "must be positive");
  return static_cast<int>(v);
}

inline Json vec(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

inline Json constant_witness(const ConstantReport& r) {
  Json w;
  w["trial"] = r.trial;
  w["f"] = r.witness_f;
  if (!r.witness_signs.empty()) w["signs"] = r.witness_signs;
  if (!r.witness_set.empty()) w["set"] = r.witness_set;
  return w;
}

inline Json system_summary(const OrthoSystem& sys) {
  Json j;
  j["space"] = sys.layout().space().descriptor();
  j["local"] = sys.layout().local().descriptor();
  j["chain"] = sys.policy().to_string();
  j["depth"] = sys.depth();
  j["size"] = sys.size();
  return j;
}

// --- operations ---

inline RunOutput op_build(const Config& c, std::uint64_t seed, const RunOptions&) {
  auto b = build_system(c, seed);
  const auto& sys = *b.sys;
  RunOutput out;
  Json res;
  res["gram_deviation"] = sys.gram_deviation();
  res["support_deviation"] = sys.support_deviation();
  double sr = 0.0, lr = 0.0, outside = 0.0;
  for (const auto& pb : psi_bounds_report(sys)) {
    sr = std::max(sr, pb.small_ratio);
    lr = std::max(lr, pb.large_ratio);
    outside = std::max(outside, pb.outside);
  }
  res["max_small_ratio"] = sr;
  res["max_large_ratio"] = lr;
  res["max_outside"] = outside;
  res["filtration"] = b.F->to_text();
  out.report["system"] = system_summary(sys);
  out.report["constant"] = std::max(sr, lr);
  out.report["witness"] = Json::object();
  out.report["results"] = res;
  out.csv.push_back({"psi.csv", sys.psi_csv()});
  return out;
}

inline RunOutput op_remez(const Config& c, std::uint64_t seed, const RunOptions&) {
  auto space = c.field("space", [&] { return ProbabilitySpace::parse(c.str("space", "interval:0,1")); });
  auto S = c.field("local", [&] { return LocalSpace::parse(c.str("local", "polynomial:1")); });
  if (!S.certificate() && !c.has("remez.c1"))
    throw Error("field 'remez.c1': required for a local space without a known certificate");
  auto cert = S.certificate().value_or(RemezCertificate{});
  double c1 = c.num("remez.c1", cert.c1);
  if (!(c1 > 0.0 && c1 <= 1.0)) throw Error(c.where("remez.c1") + "must lie in (0, 1]");
  int atoms = positive(c, "atoms", 50);
  int trials = positive(c, "trials", 20);
  auto q = quad_options(c);
  Rng rng(derive_seed(seed, 0xA70));
  auto F = gen::random(space, atoms, rng);
  double worst = 1.0;
  std::string witness;
  AtomId wid = 0;
  Json log = Json::array();
  std::string csv = "atom_id,measure,worst_fraction,witness\n";
  for (const auto& a : F.atoms()) {
    auto r = remez_empirical(S, space, a.support, c1, trials, derive_seed(seed, a.id), q);
    csv += std::to_string(a.id) + "," + format_double(a.measure) + "," + format_double(r.worst_fraction) + "," +
           r.witness + "\n";
    if (r.worst_fraction < worst) {
      worst = r.worst_fraction;
      witness = r.witness;
      wid = a.id;
    }
  }
  RunOutput out;
  Json res;
  res["c1"] = c1;
  res["c2"] = cert.c2;
  res["atoms_checked"] = F.atoms().size();
  res["passes"] = worst >= cert.c2;
  if (S.family() == Family::polynomial && !space.is_discrete()) {
    int n = S.poly_degree();
    double att = chebyshev_attained_constant(space, space.omega(), n);
    res["chebyshev_attained"] = att;
    res["certificate_over_attained"] = att / c1;
  }
  out.report["constant"] = worst;
  out.report["witness"] = {{"atom", wid}, {"candidate", witness}, {"support", Cut::subset(F.atom(wid).support).to_string()}};
  out.report["results"] = res;
  out.csv.push_back({"remez_atoms.csv", csv});
  return out;
}

inline RunOutput op_uncond(const Config& c, std::uint64_t seed, const RunOptions& ro) {
  double p = exponent_p(c, 3.0, true);
  auto b = build_system(c, seed);
  UncondOptions o;
  o.trials = positive(c, "trials", 10);
  o.seed = seed;
  o.mode = c.field("mode", [&] { return parse_sign_mode(c.str("mode", "auto")); });
  o.jobs = ro.jobs;
  auto r = unconditionality_constant(*b.sys, p, o);
  RunOutput out;
  out.report["system"] = system_summary(*b.sys);
  out.report["constant"] = r.constant;
  out.report["witness"] = constant_witness(r);
  out.report["results"] = {{"p", p}, {"steps", b.sys->steps().size()}, {"trials", r.trials}};
  return out;
}

inline RunOutput op_weaktype(const Config& c, std::uint64_t seed, const RunOptions& ro) {
  auto b = build_system(c, seed);
  WeakOptions o;
  o.trials = positive(c, "trials", 10);
  o.seed = seed;
  o.jobs = ro.jobs;
  auto r = weak_type_sweep(*b.sys, o);
  RunOutput out;
  out.report["system"] = system_summary(*b.sys);
  out.report["constant"] = r.constant;
  out.report["witness"] = constant_witness(r);
  out.report["results"] = {{"lambda_grid", "64 geometric points over [1e-3, 1e3]*||f||_1"},
                           {"steps", b.sys->steps().size()}, {"trials", r.trials}};
  return out;
}

// Lambda spec: all | level:N | chain | random:K | explicit list of indices
inline std::vector<std::size_t> lambda_set(const Config& c, const OrthoSystem& sys, std::uint64_t seed) {
  auto spec = c.str("set", "all");
  return c.field("set", [&]() -> std::vector<std::size_t> {
    std::vector<std::size_t> out;
    if (spec == "all") {
      for (std::size_t m = 0; m < sys.size(); ++m) out.push_back(m);
    } else if (spec.rfind("level:", 0) == 0) {
      auto n = text::to_int(spec.substr(6));
      require(n >= 0 && n <= sys.depth(), "level out of range");
      auto [b, e] = sys.level_range(static_cast<int>(n));
      for (auto m = b; m < e; ++m) out.push_back(m);
    } else if (spec == "chain") {
      // one psi per level along the path of small atoms
      for (int n = 1; n <= sys.depth(); ++n) {
        auto [b, e] = sys.level_range(n);
        if (e > b) out.push_back(b);
      }
    } else if (spec.rfind("random:", 0) == 0) {
      auto k = text::to_int(spec.substr(7));
      require(k >= 1 && static_cast<std::size_t>(k) <= sys.size(), "random set size out of range");
      std::vector<std::size_t> all(sys.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      Rng rng(derive_seed(seed, 0xDE40));
      for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) std::swap(all[i], all[i + rng.index(all.size() - i)]);
      out.assign(all.begin(), all.begin() + k);
      std::sort(out.begin(), out.end());
    } else {
      for (auto f : text::split(spec, ',')) {
        auto v = text::to_int(f);
        require(v >= 0, "negative index");
        out.push_back(static_cast<std::size_t>(v));
      }
    }
    require(!out.empty(), "empty index set");
    return out;
  });
}

inline RunOutput op_democracy(const Config& c, std::uint64_t seed, const RunOptions&) {
  double p = exponent_p(c, 3.0, false);
  auto b = build_system(c, seed);
  auto L = lambda_set(c, *b.sys, seed);
  double r = democracy_ratio(*b.sys, p, L);
  RunOutput out;
  out.report["system"] = system_summary(*b.sys);
  out.report["constant"] = r;
  out.report["witness"] = {{"set", L}};
  out.report["results"] = {{"p", p}, {"size", L.size()}};
  return out;
}

inline RunOutput op_gundy(const Config& c, std::uint64_t seed, const RunOptions& ro) {
  // default: eight weighted points, every point eventually its own atom
  auto b = build_system(c, seed, "points:0@1,1@2,2@1,3@3,4@1,5@2,6@1,7@4");
  auto& sys = *b.sys;
  int trials = positive(c, "trials", 10);
  auto lambdas = c.list("lambda", {1.0});
  for (double l : lambdas)
    if (!(l > 0.0)) throw Error(c.where("lambda") + "values must be positive");
  auto c3r = measure_c3(sys, 100, derive_seed(seed, 0xC3));
  double c3 = std::max(1.1 * c3r.max_ratio, 1.0);
  struct Row {
    double lambda;
    GundyReport rep;
    double residual, defect;
    bool adapted;
  };
  std::vector<std::pair<double, std::size_t>> jobs;
  for (double l : lambdas)
    for (int t = 0; t < trials; ++t) jobs.push_back({l, static_cast<std::size_t>(t)});
  auto rows = parallel_map(jobs.size(), ro.jobs, [&](std::size_t i) {
    Rng rng(derive_seed(seed, jobs[i].second));
    auto f = random_unit_function(sys, 1.0, rng);
    auto P = decompose(sys, f, jobs[i].first, c3);
    return Row{jobs[i].first, verify_parts(sys, P), P.residual, P.difference_defect, true};
  });
  double residual = 0.0, defect = 0.0, C = 0.0;
  Json per_lambda = Json::array();
  std::string csv = "lambda,trial,norm_a,prob_da,norm_db_sum,norm_c_1,norm_c_inf_over_lambda,residual\n";
  for (double l : lambdas) {
    double m[5] = {0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].lambda != l) continue;
      const auto& r = rows[i].rep;
      double v[5] = {r.norm_a, r.prob_da, r.norm_db_sum, r.norm_c_1, r.norm_c_inf_over_lambda};
      for (int k = 0; k < 5; ++k) m[k] = std::max(m[k], v[k]);
      residual = std::max(residual, rows[i].residual);
      defect = std::max(defect, rows[i].defect);
      csv += format_double(l) + "," + std::to_string(jobs[i].second);
      for (double x : v) csv += "," + format_double(x);
      csv += "," + format_double(rows[i].residual) + "\n";
    }
    double Cl = *std::max_element(m, m + 5);
    C = std::max(C, Cl);
    per_lambda.push_back({{"lambda", l},
                          {"norm_a", m[0]},
                          {"prob_da", m[1]},
                          {"norm_db_sum", m[2]},
                          {"norm_c_1", m[3]},
                          {"norm_c_inf_over_lambda", m[4]},
                          {"C", Cl}});
  }
  if (residual > 1e-10) throw InvariantViolation("a + b + c differs from f by " + format_double(residual));
  RunOutput out;
  out.report["system"] = system_summary(sys);
  out.report["constant"] = C;
  out.report["witness"] = Json::object();
  out.report["results"] = {{"c3", c3}, {"residual", residual}, {"difference_defect", defect}, {"by_lambda", per_lambda}};
  out.csv.push_back({"gundy_trials.csv", csv});
  return out;
}

inline RunOutput op_greedy(const Config& c, std::uint64_t seed, const RunOptions& ro) {
  double p = exponent_p(c, 3.0, false);
  if (std::isinf(p)) throw Error(c.where("p") + "must be finite");
  auto b = build_system(c, seed, "interval:0,1");
  auto& sys = *b.sys;
  int trials = positive(c, "trials", 10);
  long long mk = c.integer("m", -1);
  if (mk > static_cast<long long>(sys.size())) throw Error(c.where("m") + "exceeds the system size");
  std::vector<std::size_t> ms;
  if (mk < 0)
    for (std::size_t m = 1; m <= sys.size(); ++m) ms.push_back(m);
  else
    ms.push_back(static_cast<std::size_t>(mk));
  struct Row {
    double ratio = 0.0;
    std::size_t m = 0;
    bool exhaustive = true;
    std::string kind;
  };
  auto rows = parallel_map(static_cast<std::size_t>(trials), ro.jobs, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    auto f = random_unit_function(sys, p, rng);
    Row best;
    for (auto m : ms) {
      auto g = greedy_vs_best(sys, f, m, p);
      if (g.ratio > best.ratio || best.kind.empty()) best = {g.ratio, m, g.exhaustive, g.best_kind};
    }
    return best;
  });
  double C = 0.0;
  std::size_t wt = 0;
  bool exh = true;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    exh = exh && rows[t].exhaustive;
    if (rows[t].ratio > C) {
      C = rows[t].ratio;
      wt = t;
    }
  }
  RunOutput out;
  out.report["system"] = system_summary(sys);
  out.report["constant"] = C;
  out.report["witness"] = {{"trial", wt}, {"m", rows[wt].m}};
  out.report["results"] = {{"p", p}, {"exhaustive", exh}, {"best_kind", rows[wt].kind}, {"trials", trials}};
  return out;
}

inline RunOutput op_density(const Config& c, std::uint64_t, const RunOptions&) {
  auto space = c.field("space", [&] { return ProbabilitySpace::parse(c.str("space", "interval:0,1")); });
  auto S = c.field("local", [&] { return LocalSpace::parse(c.str("local", "indicator")); });
  double p = exponent_p(c, 2.0, false);
  if (std::isinf(p)) throw Error(c.where("p") + "must be finite");
  auto policy = c.field("policy", [&] { return parse_refinement(c.str("policy", "dyadic")); });
  int levels = static_cast<int>(c.integer("levels", 8));
  auto A = c.field("target", [&] {
    auto t = c.str("target", space.is_discrete() ? "pts:0" : "set:0,0.3333333333333333");
    auto cut = Cut::parse(t);
    require(cut.kind == Cut::Kind::set, "target must be a set: or pts: cut");
    return cut.part;
  });
  auto seq = density_experiment(space, S, A, policy, levels, p, quad_options(c));
  RunOutput out;
  Json rows = Json::array();
  std::string csv = "level,splits,error\n";
  for (const auto& d : seq) {
    rows.push_back({{"level", d.level}, {"splits", d.splits}, {"error", d.error}});
    csv += std::to_string(d.level) + "," + std::to_string(d.splits) + "," + format_double(d.error) + "\n";
  }
  out.report["constant"] = seq.back().error;
  out.report["witness"] = Json::object();
  out.report["results"] = {{"p", p}, {"sequence", rows}};
  out.csv.push_back({"density.csv", csv});
  return out;
}

inline RunOutput op_counterexample(const Config& c, std::uint64_t, const RunOptions&) {
  auto eps = c.list("eps", {1e-1, 1e-2, 1e-3, 1e-4});
  std::vector<double> lx, ly;
  Json rows = Json::array();
  for (double e : eps) {
    if (!(e > 0.0 && e < 0.5)) throw Error(c.where("eps") + "values must lie in (0, 1/2)");
    auto ex = counterexample_three(e);
    double bin = counterexample_binary(e);
    rows.push_back({{"eps", e}, {"three_set", ex.constant}, {"binary", bin}});
    lx.push_back(std::log(e));
    ly.push_back(std::log(ex.constant));
  }
  double slope = eps.size() >= 2 ? fit_slope(lx, ly) : 0.0;
  RunOutput out;
  out.report["constant"] = slope;
  out.report["witness"] = Json::object();
  out.report["results"] = {{"slope", slope}, {"rows", rows}};
  return out;
}

inline RunOutput op_condition_run(const Config& c, std::uint64_t seed, const RunOptions& ro) {
  double p = exponent_p(c, 4.0, false);
  auto fam = c.str("family", "two_scale");
  auto eps = c.list("eps", {1e-1, 1e-2, 1e-3, 1e-4});
  Json rows = Json::array();
  double worst = 0.0;
  for (double e : eps) {
    auto nb = c.field("family", [&] {
      if (fam == "two_scale") return two_scale_system(e);
      if (fam == "comparable") return comparable_system(e);
      throw Error("unknown family '" + fam + "' (two_scale | comparable)");
    });
    auto psi = nb.preset(1, c.str("psi", "two_scale"));
    double op = op_condition(nb, {psi}, p);
    double opd = op_condition(nb, {psi}, conjugate_exponent(p));
    double prod = norm_product_check(nb, psi, p);
    Json row = {{"eps", e}, {"op", op}, {"op_dual", opd}, {"norm_product", prod}};
    if (std::isfinite(p) && p > 1.0) {
      UncondOptions o;
      o.trials = static_cast<int>(c.integer("trials", 4));
      o.seed = seed;
      o.jobs = ro.jobs;
      row["uncond"] = nonbinary_uncond_sweep(nb, {psi}, p, o).constant;
    }
    auto pw = sufficient_pointwise_check(nb, psi);
    row["pointwise_max"] = *std::max_element(pw.begin(), pw.end());
    rows.push_back(row);
    worst = std::max(worst, prod);
  }
  RunOutput out;
  out.report["constant"] = worst;
  out.report["witness"] = Json::object();
  out.report["results"] = {{"p", p}, {"family", fam}, {"rows", rows}};
  return out;
}

inline RunOutput op_tensor(const Config& c, std::uint64_t seed, const RunOptions&) {
  auto S1 = c.field("local", [&] { return LocalSpace::parse(c.str("local", "indicator")); });
  auto S2 = c.field("local2", [&] { return LocalSpace::parse(c.str("local2", c.str("local", "indicator"))); });
  int depth = static_cast<int>(c.integer("depth", 3));
  if (depth < 0) throw Error(c.where("depth") + "must be non-negative");
  Rng rng(derive_seed(seed, 0x2D));
  auto F = gen::random_2d(depth, rng);
  TensorSystem2D T(F, S1, S2);
  auto pr = T.profile_ratios();
  double prmax = pr.empty() ? 0.0 : *std::max_element(pr.begin(), pr.end());
  int n = std::max(S1.poly_degree(), 0) + std::max(S2.poly_degree(), 0);
  double c1 = std::pow(16.0, -n);
  double frac = 1.0;
  for (std::size_t id = 0; id < F.atoms().size(); ++id)
    frac = std::min(frac, remez_rectangle(S1, S2, F.atom(id), c1, 20, derive_seed(seed, id)));
  RunOutput out;
  out.report["constant"] = prmax;
  out.report["witness"] = Json::object();
  out.report["results"] = {{"size", T.size()},
                           {"gram_deviation", T.gram_deviation()},
                           {"parent_orthogonality", T.parent_orthogonality()},
                           {"profile_max", prmax},
                           {"remez_c1", c1},
                           {"remez_worst_fraction", frac}};
  return out;
}

}  // namespace detail

inline const std::vector<std::string>& operation_names() {
  static const std::vector<std::string> ops = {"build",   "remez",   "uncond",         "weaktype",     "democracy",
                                               "gundy",   "greedy",  "density",        "counterexample",
                                               "op-condition", "tensor"};
  return ops;
}

// runs one operation; the report carries the effective config, its hash and the seed
inline RunOutput run_experiment(const std::string& op, Config cfg, std::uint64_t seed, const RunOptions& ro = {}) {
  if (cfg.has("op") && cfg.str("op", "") != op)
    throw Error(cfg.where("op") + "config is for '" + cfg.str("op", "") + "', not '" + op + "'");
  cfg.set("op", op);
  cfg.set("seed", std::to_string(seed));
  auto t0 = std::chrono::steady_clock::now();
  RunOutput body;
  if (op == "build") body = detail::op_build(cfg, seed, ro);
  else if (op == "remez") body = detail::op_remez(cfg, seed, ro);
  else if (op == "uncond") body = detail::op_uncond(cfg, seed, ro);
  else if (op == "weaktype") body = detail::op_weaktype(cfg, seed, ro);
  else if (op == "democracy") body = detail::op_democracy(cfg, seed, ro);
  else if (op == "gundy") body = detail::op_gundy(cfg, seed, ro);
  else if (op == "greedy") body = detail::op_greedy(cfg, seed, ro);
  else if (op == "density") body = detail::op_density(cfg, seed, ro);
  else if (op == "counterexample") body = detail::op_counterexample(cfg, seed, ro);
  else if (op == "op-condition") body = detail::op_condition_run(cfg, seed, ro);
  else if (op == "tensor") body = detail::op_tensor(cfg, seed, ro);
  else throw Error("unknown operation '" + op + "'");
  auto t1 = std::chrono::steady_clock::now();

  RunOutput out;
  out.csv = std::move(body.csv);
  auto& r = out.report;
  r["tool_version"] = kToolVersion;
  r["op"] = op;
  r["config"] = Json(cfg.values());
  r["config_hash"] = cfg.hash();
  r["seed"] = seed;
  for (auto& [k, v] : body.report.items()) r[k] = v;
  if (ro.timing) r["wall_clock_seconds"] = std::chrono::duration<double>(t1 - t0).count();
  return out;
}

// checks the fields every report must carry; returns a list of problems
inline std::vector<std::string> validate_report(const Json& r) {
  std::vector<std::string> bad;
  auto need = [&](const char* k, auto pred, const char* what) {
    if (!r.contains(k)) bad.push_back(std::string("missing '") + k + "'");
    else if (!pred(r[k])) bad.push_back(std::string("'") + k + "' is not " + what);
  };
  need("tool_version", [](const Json& v) { return v.is_string(); }, "a string");
  need("op", [](const Json& v) { return v.is_string(); }, "a string");
  need("config", [](const Json& v) { return v.is_object(); }, "an object");
  need("config_hash", [](const Json& v) { return v.is_string() && v.get<std::string>().size() == 16; }, "a 16-digit hex string");
  need("seed", [](const Json& v) { return v.is_number_unsigned(); }, "an unsigned integer");
  need("constant", [](const Json& v) { return v.is_number(); }, "a number");
  need("witness", [](const Json& v) { return v.is_object(); }, "an object");
  need("results", [](const Json& v) { return v.is_object(); }, "an object");
  if (r.contains("config") && r["config"].is_object())
    for (auto& [k, v] : r["config"].items())
      if (!v.is_string()) bad.push_back("config value '" + k + "' is not a string");
  return bad;
}

// max-merge of reports from the same configuration shape
inline Json merge_reports(const std::vector<Json>& reports) {
  require(!reports.empty(), "nothing to merge");
  for (const auto& r : reports) {
    auto bad = validate_report(r);
    require(bad.empty(), "report fails the schema: " + (bad.empty() ? std::string() : bad.front()));
    require(r["op"] == reports.front()["op"], "reports come from different operations");
    Json a = r["config"], b = reports.front()["config"];
    a.erase("seed");
    b.erase("seed");
    require(a == b, "reports come from different configurations");
  }
  Json out;
  out["tool_version"] = kToolVersion;
  out["op"] = reports.front()["op"];
  Json cfg = reports.front()["config"];
  cfg.erase("seed");
  out["config"] = cfg;
  Config c;
  for (auto& [k, v] : cfg.items()) c.set(k, v.get<std::string>());
  out["config_hash"] = c.hash();
  out["seed"] = reports.front()["seed"];
  std::size_t best = 0;
  Json seeds = Json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    seeds.push_back(reports[i]["seed"]);
    if (reports[i]["constant"].get<double>() > reports[best]["constant"].get<double>()) best = i;
  }
  out["constant"] = reports[best]["constant"];
  out["witness"] = reports[best]["witness"];
  out["results"] = {{"merged", reports.size()}, {"seeds", seeds}, {"max_from_seed", reports[best]["seed"]}};
  return out;
}

}  // namespace locos
