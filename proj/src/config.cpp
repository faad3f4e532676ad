#include "carnot/config.hpp"

#include "carnot/errors.hpp"

#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace carnot {

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::ValidationError, path + ": " + what);
}

/// A table being read: tracks the keys consumed so leftovers can be reported.
class Section {
 public:
  Section(const toml::table* t, std::string path) : t_(t), path_(std::move(path)) {}

  bool present() const { return t_ != nullptr; }
  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const toml::node* node(const std::string& key) {
    seen_.insert(key);
    return t_ ? t_->get(key) : nullptr;
  }

  std::optional<double> number(const std::string& key) {
    const auto* n = node(key);
    if (!n) return std::nullopt;
    if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer())) return *v;
    invalid(key_path(key), "expected a number");
  }

  double number(const std::string& key, double fallback) { return number(key).value_or(fallback); }

  std::optional<std::int64_t> integer(const std::string& key) {
    const auto* n = node(key);
    if (!n) return std::nullopt;
    if (n->is_integer()) return *n->value<std::int64_t>();
    // 1e6 style counts are accepted when they are whole numbers.
    if (n->is_floating_point()) {
      const double d = *n->value<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
    }
    invalid(key_path(key), "expected an integer");
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const auto v = integer(key);
    if (!v) return fallback;
    if (*v < 0) invalid(key_path(key), "must be nonnegative");
    return static_cast<std::size_t>(*v);
  }

  int small_int(const std::string& key, int fallback) {
    const auto v = integer(key);
    if (!v) return fallback;
    if (*v < -1000000000 || *v > 1000000000) invalid(key_path(key), "out of range");
    return static_cast<int>(*v);
  }

  bool boolean(const std::string& key, bool fallback) {
    const auto* n = node(key);
    if (!n) return fallback;
    if (!n->is_boolean()) invalid(key_path(key), "expected true or false");
    return *n->value<bool>();
  }

  std::optional<std::string> string(const std::string& key) {
    const auto* n = node(key);
    if (!n) return std::nullopt;
    if (!n->is_string()) invalid(key_path(key), "expected a string");
    return *n->value<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const auto* n = node(key);
    if (!n) return fallback;
    return to_numbers(*n, key_path(key));
  }

  std::vector<int> integers(const std::string& key, std::vector<int> fallback) {
    const auto* n = node(key);
    if (!n) return fallback;
    const auto* arr = n->as_array();
    if (!arr) invalid(key_path(key), "expected an array of integers");
    std::vector<int> out;
    for (const auto& e : *arr) {
      if (!e.is_integer()) invalid(key_path(key), "expected an array of integers");
      out.push_back(static_cast<int>(*e.value<std::int64_t>()));
    }
    return out;
  }

  Section sub(const std::string& key) {
    const auto* n = node(key);
    if (n && !n->is_table()) invalid(key_path(key), "expected a table");
    return Section(n ? n->as_table() : nullptr, key_path(key));
  }

  /// Unknown keys are errors, so typos never fall back to defaults silently.
  void finish() const {
    if (!t_) return;
    for (const auto& [k, v] : *t_) {
      const std::string key(k.str());
      if (!seen_.count(key)) invalid(key_path(key), "unknown key");
    }
  }

 private:
  static std::vector<double> to_numbers(const toml::node& n, const std::string& path) {
    const auto* arr = n.as_array();
    if (!arr) invalid(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *arr) {
      if (!(e.is_integer() || e.is_floating_point())) invalid(path, "expected an array of numbers");
      out.push_back(*e.value<double>());
    }
    return out;
  }

  const toml::table* t_;
  std::string path_;
  std::set<std::string> seen_;
};

/// Runs a library factory, reporting its errors as validation errors at `path`.
template <class F>
auto guarded(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ValidationError) throw;
    invalid(path, e.what());
  }
}

Step2Group parse_group(Section s) {
  const std::string kind = s.string("kind").value_or("heisenberg");
  Step2Group g = Step2Group::heisenberg();
  if (kind == "heisenberg") {
  } else if (kind == "generalized_heisenberg") {
    const auto L = s.numbers("L", {});
    if (L.empty()) invalid(s.key_path("L"), "generalized_heisenberg needs a nonempty L array");
    g = guarded(s.key_path("L"), [&] { return Step2Group::generalized_heisenberg({L}); });
  } else if (kind == "step2") {
    const auto n = s.integer("n");
    const auto m = s.integer("m");
    if (!n || !m) invalid(s.key_path("kind"), "step2 needs n and m");
    const auto* node = s.node("lambdas");
    if (!node || !node->is_array()) invalid(s.key_path("lambdas"), "step2 needs an array of m matrices");
    std::vector<Mat> lambdas;
    for (const auto& mat : *node->as_array()) {
      const auto* rows = mat.as_array();
      if (!rows || static_cast<std::int64_t>(rows->size()) != *n) invalid(s.key_path("lambdas"), "each matrix needs n rows");
      Mat M(*n, *n);
      for (std::int64_t i = 0; i < *n; ++i) {
        const auto* row = (*rows)[static_cast<std::size_t>(i)].as_array();
        if (!row || static_cast<std::int64_t>(row->size()) != *n) invalid(s.key_path("lambdas"), "each row needs n entries");
        for (std::int64_t j = 0; j < *n; ++j) {
          const auto v = (*row)[static_cast<std::size_t>(j)].value<double>();
          if (!v) invalid(s.key_path("lambdas"), "entries must be numbers");
          M(i, j) = *v;
        }
      }
      lambdas.push_back(M);
    }
    g = guarded(s.key_path("lambdas"), [&] { return Step2Group::make(static_cast<int>(*n), static_cast<int>(*m), lambdas); });
  } else {
    invalid(s.key_path("kind"), "unknown group kind '" + kind + "'");
  }
  s.finish();
  return g;
}

NormSpec parse_norm(Section s) {
  const std::string family = s.string("family").value_or("type2");
  NormSpec out = NormSpec::type_two_smooth(16.0);
  if (family == "type2" || family == "type2_augmented") {
    const double a = s.number("a", 16.0);
    if (!(a > 0.0)) invalid(s.key_path("a"), "must be positive");
    out = family == "type2" ? NormSpec::type_two_smooth(a) : NormSpec::type_two_augmented(a);
  } else if (family == "kaplan_gh") {
    out = NormSpec::kaplan_gh();
  } else if (family == "perspective" || family == "geometric_mean") {
    Section base = s.sub("base");
    Section other = s.sub("other");
    if (!base.present() || !other.present()) invalid(s.key_path("family"), family + " needs [base] and [other] tables");
    const NormSpec b = parse_norm(base);
    const NormSpec o = parse_norm(other);
    const double alpha = s.number("alpha", 0.5);
    if (family == "geometric_mean") {
      out = guarded(s.key_path("alpha"), [&] { return NormSpec::geometric_mean(b, o, alpha); });
    } else {
      const std::string zeta = s.string("zeta").value_or("linear");
      Zeta z;
      if (zeta == "one") {
        z = Zeta::constant_one();
      } else if (zeta == "root") {
        z = Zeta::root(alpha);
      } else if (zeta == "linear") {
        z = Zeta::linear(alpha);
      } else {
        invalid(s.key_path("zeta"), "unknown zeta '" + zeta + "' (one, root, linear)");
      }
      out = guarded(s.key_path("zeta"), [&] { return NormSpec::perspective(b, o, z); });
    }
  } else {
    invalid(s.key_path("family"), "unknown norm family '" + family + "'");
  }
  s.finish();
  return out;
}

TamingSpec parse_taming(Section s) {
  const std::string kind = s.string("kind").value_or("none");
  TamingSpec t;
  const std::string at = s.key_path("kind");
  if (kind == "none") {
    t = TamingSpec::none();
  } else if (kind == "additive_power") {
    const double sigma = s.number("sigma", 1.0);
    const double beta = s.number("beta", 1.0);
    t = guarded(at, [&] { return TamingSpec::additive_power(sigma, beta); });
  } else if (kind == "additive_log") {
    const double beta = s.number("beta", 1.0);
    t = guarded(at, [&] { return TamingSpec::additive_log(beta); });
  } else if (kind == "mult_power") {
    const double sigma = s.number("sigma", 1.0);
    t = guarded(at, [&] { return TamingSpec::mult_power(sigma); });
  } else if (kind == "mult2") {
    const double L = s.number("L", 0.5);
    const double alpha = s.number("alpha", 0.5);
    t = guarded(at, [&] { return TamingSpec::mult2(L, alpha); });
  } else {
    invalid(at, "unknown taming kind '" + kind + "'");
  }
  s.finish();
  return t;
}

OuterFunction parse_outer(Section s) {
  const std::string family = s.string("family").value_or("power");
  const std::string at = s.key_path("family");
  OuterFunction V = OuterFunction::power(2.0);
  if (family == "power") {
    const double p = s.number("p", 2.0);
    V = guarded(s.key_path("p"), [&] { return OuterFunction::power(p); });
  } else if (family == "exp_power") {
    const double kappa = s.number("kappa", 1.0);
    const double q = s.number("q", 1.0);
    V = guarded(at, [&] { return OuterFunction::exp_power(kappa, q); });
  } else {
    invalid(at, "unknown outer family '" + family + "' (power, exp_power)");
  }
  s.finish();
  return V;
}

std::string group_kind_tag(GroupKind k) {
  switch (k) {
    case GroupKind::Heisenberg: return "heisenberg";
    case GroupKind::GeneralizedHeisenberg: return "generalized_heisenberg";
    case GroupKind::Step2: return "step2";
  }
  return "step2";
}

std::string norm_family_tag(NormKind k) {
  switch (k) {
    case NormKind::TypeTwoSmooth: return "type2";
    case NormKind::TypeTwoAugmented: return "type2_augmented";
    case NormKind::KaplanGeneralizedHeisenberg: return "kaplan_gh";
    case NormKind::PerspectiveComposite: return "perspective";
    case NormKind::GeometricMean: return "geometric_mean";
  }
  return "type2";
}

std::string taming_kind_tag(TamingKind k) {
  switch (k) {
    case TamingKind::None: return "none";
    case TamingKind::AdditivePower: return "additive_power";
    case TamingKind::AdditiveLog: return "additive_log";
    case TamingKind::MultiplicativePower: return "mult_power";
    case TamingKind::MultiplicativeII: return "mult2";
  }
  return "none";
}

nlohmann::json group_json(const Step2Group& g) {
  nlohmann::json j{{"kind", group_kind_tag(g.kind())}};
  if (g.gh_params()) {
    j["L"] = g.gh_params()->L;
  } else if (g.kind() == GroupKind::Step2) {
    j["n"] = g.n();
    j["m"] = g.m();
    nlohmann::json mats = nlohmann::json::array();
    for (const auto& M : g.lambdas()) {
      nlohmann::json rows = nlohmann::json::array();
      for (long i = 0; i < M.rows(); ++i) {
        std::vector<double> r(static_cast<std::size_t>(M.cols()));
        for (long c = 0; c < M.cols(); ++c) r[static_cast<std::size_t>(c)] = M(i, c);
        rows.push_back(r);
      }
      mats.push_back(rows);
    }
    j["lambdas"] = mats;
  }
  return j;
}

nlohmann::json norm_json(const NormSpec& s) {
  nlohmann::json j{{"family", norm_family_tag(s.kind())}};
  switch (s.kind()) {
    case NormKind::TypeTwoSmooth:
    case NormKind::TypeTwoAugmented:
      j["a"] = s.a();
      break;
    case NormKind::KaplanGeneralizedHeisenberg:
      break;
    case NormKind::PerspectiveComposite:
      j["zeta"] = s.zeta().kind == Zeta::Kind::Constant ? "one" : s.zeta().kind == Zeta::Kind::Root ? "root" : "linear";
      j["alpha"] = s.zeta().alpha;
      j["base"] = norm_json(s.base());
      j["other"] = norm_json(s.other());
      break;
    case NormKind::GeometricMean:
      j["alpha"] = s.alpha();
      j["base"] = norm_json(s.base());
      j["other"] = norm_json(s.other());
      break;
  }
  return j;
}

nlohmann::json taming_json(const TamingSpec& t) {
  nlohmann::json j{{"kind", taming_kind_tag(t.kind)}};
  switch (t.kind) {
    case TamingKind::None: break;
    case TamingKind::AdditivePower: j["sigma"] = t.sigma; j["beta"] = t.beta; break;
    case TamingKind::AdditiveLog: j["beta"] = t.beta; break;
    case TamingKind::MultiplicativePower: j["sigma"] = t.sigma; break;
    case TamingKind::MultiplicativeII: j["L"] = t.L; j["alpha"] = t.alpha; break;
  }
  return j;
}

nlohmann::json outer_json(const OuterFunction& V) {
  if (V.family() == OuterFamily::ExpPower) return {{"family", "exp_power"}, {"kappa", V.kappa()}, {"q", V.q()}};
  if (V.family() == OuterFamily::Custom) return {{"family", "custom"}, {"name", V.describe()}};
  return {{"family", "power"}, {"p", V.p()}};
}

std::vector<double> to_vector(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

RunConfig parse_config(const std::string& text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "line " << e.source().begin.line << ", column " << e.source().begin.column << ": " << e.description();
    throw Error(ErrorKind::ParseError, os.str());
  }

  Section top(&root, "");
  RunConfig cfg;
  if (const auto seed = top.integer("seed")) {
    if (*seed < 0) invalid("seed", "must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(*seed);
  }
  cfg.threads = top.small_int("threads", 0);
  if (cfg.threads < 0) invalid("threads", "must be nonnegative (0 = automatic)");
  cfg.out = top.string("out").value_or("out");

  const Step2Group g = parse_group(top.sub("group"));
  const NormSpec norm = parse_norm(top.sub("norm"));
  const TamingSpec taming = parse_taming(top.sub("taming"));
  const OuterFunction outer = parse_outer(top.sub("outer"));
  cfg.model = EnergyModel{g, norm, taming, outer};
  try {
    cfg.model.validate();
  } catch (const Error& e) {
    if (norm.kind() == NormKind::KaplanGeneralizedHeisenberg) {
      invalid("norm.family", "kaplan_gh requires group.kind = \"generalized_heisenberg\" (group.kind is \"" +
                                 group_kind_tag(g.kind()) + "\")");
    }
    invalid("norm.family / group.kind", e.what());
  }

  {
    Section s = top.sub("scan");
    cfg.scan.radii = s.numbers("radii", cfg.scan.radii);
    cfg.scan.samples = s.count("samples", cfg.scan.samples);
    if (cfg.scan.samples == 0) invalid("scan.samples", "must be positive");
    s.finish();
  }
  {
    Section s = top.sub("certify");
    cfg.certify.theorem = s.string("theorem").value_or(cfg.certify.theorem);
    guarded("certify.theorem", [&] { return parse_theorem(cfg.certify.theorem); });
    cfg.certify.geometry_budget = s.count("geometry_budget", cfg.certify.geometry_budget);
    s.finish();
  }
  {
    Section s = top.sub("chain");
    auto& c = cfg.chain;
    c.steps = s.count("steps", c.steps);
    c.burn_in = s.count("burn_in", c.burn_in);
    c.step = s.number("step", c.step);
    c.thin = s.count("thin", c.thin);
    c.auto_tune = s.boolean("auto_tune", c.auto_tune);
    c.target_acceptance = s.number("target_acceptance", c.target_acceptance);
    c.bins = s.small_int("bins", c.bins);
    Section start = s.sub("start");
    if (start.present()) {
      const auto x = start.numbers("x", {});
      const auto z = start.numbers("z", {});
      if (static_cast<int>(x.size()) != g.n()) invalid("chain.start.x", "needs n entries");
      if (static_cast<int>(z.size()) != g.m()) invalid("chain.start.z", "needs m entries");
      c.start = GroupPoint(Eigen::Map<const Vec>(x.data(), g.n()), Eigen::Map<const Vec>(z.data(), g.m()));
      start.finish();
    }
    guarded("chain", [&] {
      cfg.chain_config().validate();
      return 0;
    });
    if (c.bins < 2) invalid("chain.bins", "must be at least 2");
    s.finish();
  }
  {
    Section s = top.sub("spectrum");
    auto& sp = cfg.spectrum;
    sp.width = s.number("width", sp.width);
    sp.half_widths = s.numbers("half_widths", {});
    sp.grid = s.integers("grid", std::vector<int>(static_cast<std::size_t>(g.dim()), 32));
    sp.k = s.small_int("k", sp.k);
    sp.tol = s.number("tol", sp.tol);
    sp.clamp = s.number("clamp", sp.clamp);
    sp.max_iter = s.small_int("max_iter", sp.max_iter);
    sp.memory_budget_mb = s.number("memory_budget_mb", sp.memory_budget_mb);
    if (static_cast<int>(sp.grid.size()) != g.dim()) invalid("spectrum.grid", "needs one size per coordinate");
    if (!sp.half_widths.empty() && static_cast<int>(sp.half_widths.size()) != g.dim()) {
      invalid("spectrum.half_widths", "needs one half-width per coordinate");
    }
    if (!(sp.width > 0.0)) invalid("spectrum.width", "must be positive");
    s.finish();
  }
  {
    Section s = top.sub("perturb");
    auto& p = cfg.perturb;
    p.q = s.number("q", p.q);
    p.alpha = s.number("alpha", p.alpha);
    p.epsilon = s.number("epsilon");
    p.c = s.number("c", p.c);
    p.C = s.number("C");
    p.D = s.number("D");
    p.samples = s.count("samples", p.samples);
    Section base = s.sub("base");
    if (base.present()) p.base = parse_norm(base);
    if (s.present() && !p.epsilon && !p.base) {
      invalid("perturb.epsilon", "give epsilon or a [perturb.base] norm to measure it against");
    }
    if (p.base) {
      guarded("perturb.base", [&] {
        p.base->check_group(g);
        return 0;
      });
    }
    s.finish();
  }
  {
    Section s = top.sub("check");
    cfg.check.samples = s.count("samples", cfg.check.samples);
    cfg.check.cells = s.string("cells").value_or(cfg.check.cells);
    if (cfg.check.cells != "config" && cfg.check.cells != "standard") {
      invalid("check.cells", "expected \"config\" or \"standard\"");
    }
    s.finish();
  }
  top.finish();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::ParseError, "cannot read config file " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return parse_config(os.str());
}

bool command_is_stochastic(const std::string& command) { return command != "describe-group"; }

void require_seed(const RunConfig& cfg, const std::string& command) {
  if (command_is_stochastic(command) && !cfg.seed) {
    invalid("seed", "command '" + command + "' draws random numbers and needs a seed (in the file or --seed)");
  }
}

SpectrumConfig RunConfig::spectrum_config() const {
  SpectrumConfig sc = SpectrumConfig::weighted(model, spectrum.width, spectrum.grid.empty() ? 8 : spectrum.grid[0]);
  if (!spectrum.half_widths.empty()) sc.half_widths = spectrum.half_widths;
  sc.grid = spectrum.grid;
  sc.k = spectrum.k;
  sc.tol = spectrum.tol;
  sc.clamp = spectrum.clamp;
  sc.max_iter = spectrum.max_iter;
  sc.memory_budget_mb = spectrum.memory_budget_mb;
  sc.seed = seed.value_or(0);
  return sc;
}

ChainConfig RunConfig::chain_config() const {
  ChainConfig c;
  c.step = chain.step;
  c.steps = chain.steps;
  c.burn_in = chain.burn_in;
  c.seed = seed.value_or(0);
  c.start = chain.start;
  c.auto_tune = chain.auto_tune;
  c.target_acceptance = chain.target_acceptance;
  c.thin = chain.thin;
  return c;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  j["threads"] = threads;
  j["out"] = out;
  j["group"] = group_json(model.group);
  j["norm"] = norm_json(model.norm);
  j["taming"] = taming_json(model.taming);
  j["outer"] = outer_json(model.outer);
  j["scan"] = {{"radii", scan.radii}, {"samples", scan.samples}};
  j["certify"] = {{"theorem", certify.theorem}, {"geometry_budget", certify.geometry_budget}};
  nlohmann::json ch = {{"steps", chain.steps},
                       {"burn_in", chain.burn_in},
                       {"step", chain.step},
                       {"thin", chain.thin},
                       {"auto_tune", chain.auto_tune},
                       {"target_acceptance", chain.target_acceptance},
                       {"bins", chain.bins}};
  if (chain.start) ch["start"] = {{"x", to_vector(chain.start->x)}, {"z", to_vector(chain.start->z)}};
  j["chain"] = ch;
  const SpectrumConfig sc = spectrum_config();
  j["spectrum"] = {{"width", spectrum.width},         {"half_widths", sc.half_widths}, {"grid", sc.grid},
                   {"k", sc.k},                       {"tol", sc.tol},                 {"clamp", sc.clamp},
                   {"max_iter", sc.max_iter},         {"memory_budget_mb", sc.memory_budget_mb}};
  nlohmann::json pj = {{"q", perturb.q}, {"alpha", perturb.alpha}, {"c", perturb.c}, {"samples", perturb.samples}};
  if (perturb.epsilon) pj["epsilon"] = *perturb.epsilon;
  if (perturb.C) pj["C"] = *perturb.C;
  if (perturb.D) pj["D"] = *perturb.D;
  if (perturb.base) pj["base"] = norm_json(*perturb.base);
  j["perturb"] = pj;
  j["check"] = {{"samples", check.samples}, {"cells", check.cells}};
  return j;
}

}  // namespace carnot
