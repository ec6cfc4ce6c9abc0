#include <deproj/io/config.hpp>

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace deproj {

QutConfig RunConfig::qut_config() const {
  QutConfig q = QutConfig::defaults_for(scenario.n);
  if (alpha1) q.alpha1 = *alpha1;
  if (alpha2) q.alpha2 = *alpha2;
  q.m0 = m0;
  q.tail_fit = tail_fit;
  q.seed = scenario.seed;
  q.threads = scenario.threads;
  return q;
}

void RunConfig::validate() const {
  scenario.validate();
  solver.validate();
  qut_config().validate();
  DEPROJ_REQUIRE(!lambda1 || *lambda1 >= 0, ValidationError, "lambda1 must be >= 0");
  DEPROJ_REQUIRE(!lambda2 || *lambda2 >= 0, ValidationError, "lambda2 must be >= 0");
  DEPROJ_REQUIRE(bootstrap.draws >= 50, ValidationError, "bootstrap needs at least 50 draws");
  DEPROJ_REQUIRE(bootstrap.lower_level > 0 && bootstrap.lower_level < bootstrap.upper_level &&
                     bootstrap.upper_level < 1,
                 ValidationError, "bootstrap levels must satisfy 0 < lower < upper < 1");
}

namespace {

std::string where(const std::string& source, const YAML::Mark& mark) {
  if (mark.is_null()) return source + ": ";
  return source + ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1) +
         ": ";
}

const char* tail_name(TailFit t) {
  switch (t) {
    case TailFit::kEmpirical: return "empirical";
    case TailFit::kGumbel: return "gumbel";
    case TailFit::kAuto: break;
  }
  return "auto";
}

const char* mode_name(SectorMode m) {
  return m == SectorMode::kSymmetric ? "symmetric" : "left_right";
}

// Reads the keys of one mapping and rejects the ones nobody asked for.
class Section {
 public:
  Section(const YAML::Node& node, std::string name, const std::string& source)
      : node_(node), name_(std::move(name)), source_(source) {
    if (node_ && !node_.IsNull() && !node_.IsMap())
      throw ValidationError(where(source_, node_.Mark()) + "'" + name_ + "' must be a mapping");
  }

  YAML::Node child(const char* key) {
    seen_.insert(key);
    if (!node_ || !node_.IsMap()) return YAML::Node(YAML::NodeType::Undefined);
    const YAML::Node& map = node_;  // const lookup does not insert the key
    return map[key];
  }

  template <typename T>
  void get(const char* key, T& out) {
    const YAML::Node v = child(key);
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ValidationError(where(source_, v.Mark()) + "bad value for '" + name_ + "." + key + "'");
    }
  }

  // "auto" or null selects the default
  void get_auto(const char* key, std::optional<double>& out) {
    const YAML::Node v = child(key);
    if (!v) return;
    if (v.IsNull() || (v.IsScalar() && v.Scalar() == "auto")) {
      out.reset();
      return;
    }
    double x = 0;
    get(key, x);
    out = x;
  }

  template <typename F>
  void check(const char* key, F&& valid, const std::string& message) {
    const YAML::Node v = child(key);
    if (v && !valid())
      throw ValidationError(where(source_, v.Mark()) + name_ + "." + key + ": " + message);
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key))
        throw ValidationError(where(source_, kv.first.Mark()) + "unknown key '" + key +
                              "' in '" + name_ + "'");
    }
  }

 private:
  YAML::Node node_;
  std::string name_;
  const std::string& source_;
  std::set<std::string> seen_;
};

void read_model(Section& s, ScenarioConfig& sc, const std::string& source) {
  long long n = sc.n;
  s.get("n", n);
  sc.n = Index(n);
  s.check("n", [&] { return sc.n >= 8; }, "image side must be >= 8");
  Section psf(s.child("psf"), "model.psf", source);
  psf.get("r0", sc.psf_r0);
  psf.get("alpha", sc.psf_alpha);
  psf.get("tol", sc.psf_tol);
  psf.check("r0", [&] { return sc.psf_r0 > 0; }, "must be positive");
  psf.check("alpha", [&] { return sc.psf_alpha > 1; }, "must exceed 1");
  psf.check("tol", [&] { return sc.psf_tol > 0 && sc.psf_tol < 1; }, "must lie in (0, 1)");
  psf.finish();
  s.get("background", sc.background);
  s.check("background", [&] { return sc.background >= 0; }, "must be non-negative");
  s.get("sensitivity", sc.sensitivity);
  s.check("sensitivity", [&] { return sc.sensitivity > 0 && sc.sensitivity <= 1; },
          "must lie in (0, 1]");
  std::string mode = mode_name(sc.mode);
  s.get("sector_mode", mode);
  s.check("sector_mode", [&] { return mode == "left_right" || mode == "symmetric"; },
          "expected left_right or symmetric");
  sc.mode = mode == "symmetric" ? SectorMode::kSymmetric : SectorMode::kLeftRight;
}

void read_dictionary(Section& s, DictionaryConfig& d) {
  s.get("wavelet_vanishing_moments", d.vanishing_moments);
  s.check("wavelet_vanishing_moments",
          [&] { return d.vanishing_moments >= 1 && d.vanishing_moments <= 4; }, "must lie in 1..4");
  long long depth = d.depth;
  s.get("wavelet_depth", depth);
  d.depth = Index(depth);
  s.check("wavelet_depth", [&] { return d.depth >= -1; }, "must be -1 (full) or >= 0");
  s.get("king_rho_min", d.rho_min);
  s.check("king_rho_min", [&] { return d.rho_min > 0; }, "must be positive");
  s.get("king_beta_min", d.beta_min);
  s.get("king_beta_max", d.beta_max);
  s.check("king_beta_max", [&] { return d.beta_min > 0 && d.beta_max >= d.beta_min; },
          "need 0 < king_beta_min <= king_beta_max");
}

void read_solver(Section& s, FitOptions& o) {
  s.get("max_iters", o.max_iters);
  s.check("max_iters", [&] { return o.max_iters > 0; }, "must be positive");
  s.get("objective_rel_tol", o.objective_rel_tol);
  s.check("objective_rel_tol", [&] { return o.objective_rel_tol > 0; }, "must be positive");
  s.get("kkt_rel_tol", o.kkt_rel_tol);
  s.check("kkt_rel_tol", [&] { return o.kkt_rel_tol > 0; }, "must be positive");
  s.get("kkt_abs_tol", o.kkt_abs_tol);
  s.check("kkt_abs_tol", [&] { return o.kkt_abs_tol > 0; }, "must be positive");
  s.get("shrink", o.shrink);
  s.check("shrink", [&] { return o.shrink > 0 && o.shrink < 1; }, "must lie in (0, 1)");
  s.get("initial_step", o.initial_step);
  s.get("restart", o.restart);
  s.get("polish", o.polish);
  s.get("polish_after", o.polish_after);
  s.get("mu_floor", o.mu_floor);
  s.check("mu_floor", [&] { return o.mu_floor > 0; }, "must be positive");
}

void read_qut(Section& s, RunConfig& c) {
  s.get_auto("alpha1", c.alpha1);
  s.check("alpha1", [&] { return !c.alpha1 || (*c.alpha1 > 0 && *c.alpha1 < 1); },
          "must lie in (0, 1)");
  s.get_auto("alpha2", c.alpha2);
  s.check("alpha2", [&] { return !c.alpha2 || (*c.alpha2 > 0 && *c.alpha2 < 1); },
          "must lie in (0, 1)");
  s.get("m0", c.m0);
  s.check("m0", [&] { return c.m0 >= 20; }, "needs at least 20 draws");
  std::string tail = tail_name(c.tail_fit);
  s.get("tail_fit", tail);
  s.check("tail_fit", [&] { return tail == "auto" || tail == "empirical" || tail == "gumbel"; },
          "expected auto, empirical or gumbel");
  c.tail_fit = tail == "empirical" ? TailFit::kEmpirical
               : tail == "gumbel"  ? TailFit::kGumbel
                                   : TailFit::kAuto;
  s.get_auto("lambda1", c.lambda1);
  s.check("lambda1", [&] { return !c.lambda1 || *c.lambda1 >= 0; }, "must be >= 0");
  s.get_auto("lambda2", c.lambda2);
  s.check("lambda2", [&] { return !c.lambda2 || *c.lambda2 >= 0; }, "must be >= 0");
}

void read_scenario(Section& s, ScenarioConfig& sc) {
  s.get("profile", sc.profile);
  s.check("profile",
          [&] {
            return sc.profile == "cosmoBlocks" || sc.profile == "cosmo1" ||
                   sc.profile == "cosmo2" || sc.profile == "custom";
          },
          "expected cosmoBlocks, cosmo1, cosmo2 or custom");
  s.get("custom_profile", sc.custom_profile);
  s.get("peak", sc.peak);
  s.get("with_sources", sc.with_sources);
  s.get("source_count", sc.source_count);
  s.get("amplitude_min", sc.amplitude_min);
  s.check("amplitude_min", [&] { return sc.amplitude_min >= 0; }, "must be non-negative");
  s.get("amplitude_max", sc.amplitude_max);
  s.check("amplitude_max", [&] { return sc.amplitude_max >= sc.amplitude_min; },
          "must be >= amplitude_min");
  s.get("exposure", sc.exposure);
  s.check("exposure", [&] { return sc.exposure >= 0; }, "must be non-negative");
  s.get("replicates", sc.replicates);
  s.check("replicates", [&] { return sc.replicates >= 1; }, "must be >= 1");
}

void read_bootstrap(Section& s, BootstrapOptions& b) {
  s.get("draws", b.draws);
  s.check("draws", [&] { return b.draws >= 50; }, "needs at least 50 draws");
  s.get("lower_level", b.lower_level);
  s.get("upper_level", b.upper_level);
  s.check("upper_level",
          [&] { return b.lower_level > 0 && b.lower_level < b.upper_level && b.upper_level < 1; },
          "need 0 < lower_level < upper_level < 1");
  s.get("floor", b.floor);
  s.check("floor", [&] { return b.floor > 0; }, "must be positive");
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ValidationError(where(source, e.mark) + e.msg);
  }
  RunConfig cfg;
  if (!root || root.IsNull()) return cfg;
  Section top(root, "config", source);

  std::uint64_t seed = cfg.scenario.seed;
  top.get("seed", seed);
  cfg.scenario.seed = seed;
  cfg.bootstrap.seed = seed;
  int threads = cfg.scenario.threads;
  top.get("threads", threads);
  top.check("threads", [&] { return threads >= 0; }, "must be >= 0");
  cfg.scenario.threads = threads;
  cfg.bootstrap.threads = threads;

  Section model(top.child("model"), "model", source);
  read_model(model, cfg.scenario, source);
  model.finish();
  Section dict(top.child("dictionary"), "dictionary", source);
  read_dictionary(dict, cfg.scenario.dictionary);
  dict.finish();
  Section solver(top.child("solver"), "solver", source);
  read_solver(solver, cfg.solver);
  solver.finish();
  Section qut(top.child("qut"), "qut", source);
  read_qut(qut, cfg);
  qut.finish();
  Section scenario(top.child("scenario"), "scenario", source);
  read_scenario(scenario, cfg.scenario);
  scenario.finish();
  Section boot(top.child("bootstrap"), "bootstrap", source);
  read_bootstrap(boot, cfg.bootstrap);
  boot.finish();
  top.finish();

  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

std::string dump_run_config(const RunConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  const auto& sc = c.scenario;
  auto auto_or = [&](const std::optional<double>& v) {
    if (v) out << *v; else out << "auto";
  };
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << sc.seed;
  out << YAML::Key << "threads" << YAML::Value << sc.threads;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n" << YAML::Value << static_cast<long long>(sc.n);
  out << YAML::Key << "psf" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "r0" << YAML::Value << sc.psf_r0;
  out << YAML::Key << "alpha" << YAML::Value << sc.psf_alpha;
  out << YAML::Key << "tol" << YAML::Value << sc.psf_tol;
  out << YAML::EndMap;
  out << YAML::Key << "background" << YAML::Value << sc.background;
  out << YAML::Key << "sensitivity" << YAML::Value << sc.sensitivity;
  out << YAML::Key << "sector_mode" << YAML::Value << mode_name(sc.mode);
  out << YAML::EndMap;

  const auto& d = sc.dictionary;
  out << YAML::Key << "dictionary" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "wavelet_vanishing_moments" << YAML::Value << d.vanishing_moments;
  out << YAML::Key << "wavelet_depth" << YAML::Value << static_cast<long long>(d.depth);
  out << YAML::Key << "king_rho_min" << YAML::Value << d.rho_min;
  out << YAML::Key << "king_beta_min" << YAML::Value << d.beta_min;
  out << YAML::Key << "king_beta_max" << YAML::Value << d.beta_max;
  out << YAML::EndMap;

  const auto& o = c.solver;
  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "max_iters" << YAML::Value << o.max_iters;
  out << YAML::Key << "objective_rel_tol" << YAML::Value << o.objective_rel_tol;
  out << YAML::Key << "kkt_rel_tol" << YAML::Value << o.kkt_rel_tol;
  out << YAML::Key << "kkt_abs_tol" << YAML::Value << o.kkt_abs_tol;
  out << YAML::Key << "shrink" << YAML::Value << o.shrink;
  out << YAML::Key << "initial_step" << YAML::Value << o.initial_step;
  out << YAML::Key << "restart" << YAML::Value << o.restart;
  out << YAML::Key << "polish" << YAML::Value << o.polish;
  out << YAML::Key << "polish_after" << YAML::Value << o.polish_after;
  out << YAML::Key << "mu_floor" << YAML::Value << o.mu_floor;
  out << YAML::EndMap;

  out << YAML::Key << "qut" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "alpha1" << YAML::Value;
  auto_or(c.alpha1);
  out << YAML::Key << "alpha2" << YAML::Value;
  auto_or(c.alpha2);
  out << YAML::Key << "m0" << YAML::Value << c.m0;
  out << YAML::Key << "tail_fit" << YAML::Value << tail_name(c.tail_fit);
  out << YAML::Key << "lambda1" << YAML::Value;
  auto_or(c.lambda1);
  out << YAML::Key << "lambda2" << YAML::Value;
  auto_or(c.lambda2);
  out << YAML::EndMap;

  out << YAML::Key << "scenario" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "profile" << YAML::Value << sc.profile;
  out << YAML::Key << "custom_profile" << YAML::Value << YAML::Flow << sc.custom_profile;
  out << YAML::Key << "peak" << YAML::Value << sc.peak;
  out << YAML::Key << "with_sources" << YAML::Value << sc.with_sources;
  out << YAML::Key << "source_count" << YAML::Value << sc.source_count;
  out << YAML::Key << "amplitude_min" << YAML::Value << sc.amplitude_min;
  out << YAML::Key << "amplitude_max" << YAML::Value << sc.amplitude_max;
  out << YAML::Key << "exposure" << YAML::Value << sc.exposure;
  out << YAML::Key << "replicates" << YAML::Value << sc.replicates;
  out << YAML::EndMap;

  const auto& b = c.bootstrap;
  out << YAML::Key << "bootstrap" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "draws" << YAML::Value << b.draws;
  out << YAML::Key << "lower_level" << YAML::Value << b.lower_level;
  out << YAML::Key << "upper_level" << YAML::Value << b.upper_level;
  out << YAML::Key << "floor" << YAML::Value << b.floor;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace deproj
