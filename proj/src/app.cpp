#include "carnot/app.hpp"

#include "carnot/errors.hpp"
#include "carnot/kernels.hpp"
#include "carnot/oracle.hpp"
#include "carnot/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef CARNOT_BUILD_ID
#define CARNOT_BUILD_ID "unknown"
#endif

namespace carnot {

namespace {

constexpr std::uint64_t kCheckNormStream = 0x43484b4eULL;

std::vector<double> to_vector(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json point_json(const GroupPoint& p) { return {{"x", to_vector(p.x)}, {"z", to_vector(p.z)}}; }

nlohmann::json describe_group(const Step2Group& g) {
  nlohmann::json j = {{"n", g.n()},
                      {"m", g.m()},
                      {"dimension", g.dim()},
                      {"homogeneous_dimension", g.homogeneous_dimension()},
                      {"is_heisenberg", g.is_heisenberg()}};
  switch (g.kind()) {
    case GroupKind::Heisenberg: j["kind"] = "heisenberg"; break;
    case GroupKind::GeneralizedHeisenberg: j["kind"] = "generalized_heisenberg"; break;
    case GroupKind::Step2: j["kind"] = "step2"; break;
  }
  if (g.gh_params()) j["L"] = g.gh_params()->L;
  nlohmann::json mats = nlohmann::json::array();
  for (const auto& M : g.lambdas()) {
    nlohmann::json rows = nlohmann::json::array();
    for (long i = 0; i < M.rows(); ++i) rows.push_back(to_vector(M.row(i).transpose()));
    mats.push_back(rows);
  }
  j["lambdas"] = mats;
  j["law"] = "(x, z) o (x', z') = (x + x', z_j + z'_j + 1/2 <L^(j) x, x'>)";
  return j;
}

CommandOutput check_norm(const RunConfig& cfg) {
  const Step2Group& g = cfg.model.group;
  const NormSpec& norm = cfg.model.norm;
  const std::uint64_t seed = *cfg.seed;
  const std::size_t count = cfg.check.samples;
  const auto pts = sample_level_set(g, norm, count, 1.0, seed, kCheckNormStream);

  double kaplan_max = 0.0;
  double homog_max = 0.0;
  double unit_max = 0.0;
  for (const auto& p : pts) {
    if (p.x.norm() < 1e-6) continue;
    kaplan_max = std::max(kaplan_max, std::abs(kaplan_residual(g, norm, p)));
    const double N = norm_value(g, norm, p);
    unit_max = std::max(unit_max, std::abs(N - 1.0));
    for (double lam : {0.5, 2.5}) {
      homog_max = std::max(homog_max, std::abs(norm_value(g, norm, g.dilate(p, lam)) - lam * N));
    }
  }
  CommandOutput out;
  out.result = {{"norm", norm.describe()},
                {"samples", pts.size()},
                {"max_level_set_error", unit_max},
                {"max_homogeneity_error", homog_max},
                {"max_kaplan_residual", kaplan_max},
                {"is_kaplan", kaplan_max <= 1e-8},
                {"gradient_sup", gradient_sup(g, norm, count, seed)},
                {"min_x_dot_grad", min_radial_derivative(g, norm, count, seed)}};
  if (norm.kind() == NormKind::TypeTwoSmooth) {
    const auto lc = lemma_constants(g, norm, count, seed);
    out.result["lemma_constants"] = {{"A_est", lc.A_est},
                                     {"C_est", lc.C_est},
                                     {"B_est", lc.B_est},
                                     {"max_radial_identity_error", lc.max_radial_identity_error}};
    out.side_files.emplace_back("check-norm_lemma.csv", lc.to_csv());
  }
  std::ostringstream os;
  os << "kaplan residual " << kaplan_max << ", sup |grad N| " << out.result["gradient_sup"].get<double>();
  out.summary = os.str();
  return out;
}

CommandOutput check_derivatives(const RunConfig& cfg) {
  std::vector<V2Cell> cells;
  if (cfg.check.cells == "standard") {
    cells = standard_v2_cells();
  } else {
    cells.push_back(V2Cell{"config", cfg.model});
  }
  const auto rep = run_v2_check(cells, cfg.check.samples, *cfg.seed, false);
  CommandOutput out;
  nlohmann::json cj = nlohmann::json::array();
  for (const auto& c : rep.cells) {
    cj.push_back({{"cell", c.cell},
                  {"points", c.points},
                  {"max_rel_error", c.max_rel_error},
                  {"halving_factors", c.halving_factors}});
  }
  out.result = {{"cells", cj},
                {"max_rel_error", rep.max_rel_error},
                {"min_halving", rep.min_halving},
                {"max_halving", rep.max_halving},
                {"pass", rep.max_rel_error <= 1e-3 && rep.min_halving >= 3.5 && rep.max_halving <= 4.5}};
  out.side_files.emplace_back("check-derivatives.csv", rep.to_csv());
  std::ostringstream os;
  os << cells.size() << " cells, max rel error " << rep.max_rel_error << ", halving [" << rep.min_halving << ", "
     << rep.max_halving << "]";
  out.summary = os.str();
  return out;
}

CommandOutput certify_command(const RunConfig& cfg) {
  CertifyOptions opt;
  opt.radii = cfg.scan.radii;
  opt.samples = cfg.scan.samples;
  opt.geometry_budget = cfg.certify.geometry_budget;
  opt.seed = *cfg.seed;
  const auto rep = certify(cfg.model, parse_theorem(cfg.certify.theorem), opt);
  CommandOutput out;
  out.result = to_json(rep);
  out.side_files.emplace_back("certify_scan.csv", rep.scans.to_csv());
  out.summary = std::string(to_string(rep.theorem)) + ": hypotheses " + (rep.hypotheses_hold ? "hold" : "do not hold");
  return out;
}

CommandOutput scan_command(const RunConfig& cfg) {
  const auto t = divergence_scan(cfg.model, cfg.scan.radii, cfg.scan.samples, *cfg.seed);
  CommandOutput out;
  out.result = to_json(t);
  out.result["verdict"] = t.diverges ? "diverging" : "not diverging";
  out.side_files.emplace_back("scan-v2.csv", t.to_csv());
  out.summary = out.result["verdict"].get<std::string>();
  return out;
}

CommandOutput sample_command(const RunConfig& cfg) {
  const auto chain = langevin_chain(cfg.model, cfg.chain_config());
  CommandOutput out;
  out.result = {{"acceptance", chain.acceptance},
                {"step", chain.step},
                {"tube_rejections", chain.tube_rejections},
                {"kept_points", chain.points.size()}};
  if (chain.norm_trace.size() >= 16) out.result["iat"] = integrated_autocorrelation(chain.norm_trace);
  if (cfg.model.norm.kind() == NormKind::TypeTwoSmooth) {
    out.result["norm_marginal"] = to_json(norm_marginal_test(cfg.model, chain.norm_trace, cfg.chain.bins));
  } else {
    out.result["norm_marginal"] = nullptr;
  }
  const auto tests = default_test_functions(cfg.model);
  out.result["poincare"] = to_json(empirical_poincare(cfg.model.group, chain.points, tests));
  out.result["logsobolev"] = to_json(empirical_logsobolev(cfg.model.group, chain.points, tests));

  const Step2Group& g = cfg.model.group;
  std::ostringstream csv;
  csv.precision(17);
  csv << "index,N";
  for (int i = 0; i < g.n(); ++i) csv << ",x" << i + 1;
  for (int k = 0; k < g.m(); ++k) csv << ",z" << k + 1;
  csv << "\n";
  for (std::size_t i = 0; i < chain.points.size(); ++i) {
    const auto& p = chain.points[i];
    csv << i * cfg.chain.thin << "," << norm_value(g, cfg.model.norm, p);
    for (int a = 0; a < g.n(); ++a) csv << "," << p.x(a);
    for (int k = 0; k < g.m(); ++k) csv << "," << p.z(k);
    csv << "\n";
  }
  out.side_files.emplace_back("sample_trajectory.csv", csv.str());
  std::ostringstream os;
  os << "acceptance " << chain.acceptance << ", step " << chain.step;
  out.summary = os.str();
  return out;
}

CommandOutput spectrum_command(const RunConfig& cfg, const CommandOptions& options) {
  const SpectrumConfig sc = cfg.spectrum_config();
  const GridOperator op = assemble_hamiltonian(cfg.model, sc);
  if (options.dump_matrix) dump_triplets(op.H, *options.dump_matrix);
  SpectrumResult res = bottom_spectrum(op.H, op.potential.minCoeff(), sc.k, sc.tol, sc.max_iter, sc.seed);
  res.ground_state_rq = rayleigh_quotient(op.H, ground_state_vector(cfg.model, op));
  res.dims = op.dims;
  res.half_widths = op.half_widths;
  res.nnz = static_cast<std::size_t>(op.H.nonZeros());
  res.clamp_events = op.clamp_events;
  res.max_negative = op.max_negative;
  CommandOutput out;
  out.result = to_json(res);
  std::ostringstream os;
  os << "lambda_1 " << res.eigenvalues.front() << ", gap " << res.eigenvalues[1] - res.eigenvalues[0];
  out.summary = os.str();
  return out;
}

CommandOutput perturb_command(const RunConfig& cfg) {
  const auto& p = cfg.perturb;
  if (!p.epsilon && !p.base) {
    throw Error(ErrorKind::ValidationError, "perturb.epsilon: give epsilon or a [perturb.base] norm to measure it against");
  }
  const double A_c = doubling_constant(cfg.model.outer, p.c);
  CommandOutput out;
  double eps = 0.0;
  if (p.epsilon) {
    eps = *p.epsilon;
    out.result["epsilon_source"] = "config";
  } else {
    eps = perturbation_gap(cfg.model.group, cfg.model.norm, *p.base, p.samples, *cfg.seed);
    out.result["epsilon_source"] = "measured";
  }
  if (p.base) {
    out.result["equivalence_constant"] =
        equivalence_constant(cfg.model.group, *p.base, cfg.model.norm, p.samples, *cfg.seed);
  }
  const auto cert = perturbation_certificate(p.q, p.alpha, eps, A_c, p.C, p.D);
  out.result["certificate"] = to_json(cert);
  out.summary = std::string("certificate ") + (cert.verdict ? "holds" : "fails");
  return out;
}

}  // namespace

std::string build_id() { return CARNOT_BUILD_ID; }

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"describe-group", "check-norm", "check-derivatives", "certify",
                                                 "scan-v2",        "sample",     "spectrum",          "perturb"};
  return names;
}

bool is_command(const std::string& name) {
  const auto& n = command_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

CommandOutput run_command(const std::string& command, const RunConfig& cfg, const CommandOptions& options) {
  require_seed(cfg, command);
  if (command == "describe-group") {
    CommandOutput out;
    out.result = describe_group(cfg.model.group);
    out.summary = "n = " + std::to_string(cfg.model.group.n()) + ", m = " + std::to_string(cfg.model.group.m());
    return out;
  }
  if (command == "check-norm") return check_norm(cfg);
  if (command == "check-derivatives") return check_derivatives(cfg);
  if (command == "certify") return certify_command(cfg);
  if (command == "scan-v2") return scan_command(cfg);
  if (command == "sample") return sample_command(cfg);
  if (command == "spectrum") return spectrum_command(cfg, options);
  if (command == "perturb") return perturb_command(cfg);
  throw Error(ErrorKind::UnknownFamily, "unknown command '" + command + "'");
}

nlohmann::json make_report(const std::string& command, const RunConfig& cfg, const nlohmann::json& result) {
  return {{"schema_version", kSchemaVersion},
          {"command", command},
          {"build_id", build_id()},
          {"config", cfg.to_json()},
          {"result", result}};
}

std::string write_outputs(const std::string& dir, const std::string& command, const nlohmann::json& report,
                          const CommandOutput& output) {
  std::filesystem::create_directories(dir);
  const auto write = [&](const std::string& name, const std::string& text) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorKind::EvaluationFailure, "cannot write " + path);
    os << text;
    return path;
  };
  const std::string path = write(command + ".json", report.dump(2) + "\n");
  for (const auto& [name, text] : output.side_files) write(name, text);
  return path;
}

nlohmann::json to_json(const HypothesisVerdict& v) {
  return {{"name", v.name}, {"status", std::string(to_string(v.status))}, {"margin", v.margin}, {"detail", v.detail}};
}

nlohmann::json to_json(const ScanTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"R", r.R},
                    {"min_v2", r.min_v2},
                    {"argmin", point_json(r.argmin)},
                    {"dominance", r.dominance},
                    {"excluded_fraction", r.excluded_fraction},
                    {"samples", r.samples}});
  }
  return {{"rows", rows}, {"diverges", t.diverges}, {"bounded", t.bounded}, {"a_emp", t.a_emp}, {"trend_note", t.trend_note}};
}

nlohmann::json to_json(const CertifyReport& r) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : r.verdicts) verdicts.push_back(to_json(v));
  nlohmann::json constants = nlohmann::json::object();
  const auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) constants[key] = *v;
  };
  put("A_est", r.constants.A_est);
  put("C_est", r.constants.C_est);
  put("kaplan_residual_max", r.constants.kaplan_residual_max);
  put("min_x_dot_grad", r.constants.min_x_dot_grad);
  return {{"theorem", std::string(to_string(r.theorem))},
          {"hypotheses_hold", r.hypotheses_hold},
          {"verdicts", verdicts},
          {"constants", constants},
          {"scans", to_json(r.scans)}};
}

nlohmann::json to_json(const SpectrumResult& r) {
  return {{"eigenvalues", r.eigenvalues},
          {"residuals", r.residuals},
          {"gap", r.eigenvalues.size() >= 2 ? r.eigenvalues[1] - r.eigenvalues[0] : 0.0},
          {"shift", r.shift},
          {"iterations", r.iterations},
          {"ground_state_rq", r.ground_state_rq},
          {"dims", r.dims},
          {"half_widths", r.half_widths},
          {"nnz", r.nnz},
          {"clamp_events", r.clamp_events},
          {"max_negative", r.max_negative}};
}

nlohmann::json to_json(const InequalityTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"name", r.name},
                    {"numerator", r.numerator},
                    {"energy", r.energy},
                    {"ratio", r.skipped ? nlohmann::json(nullptr) : nlohmann::json(r.ratio)},
                    {"skipped", r.skipped}});
  }
  return {{"rows", rows}, {"worst", t.worst}};
}

nlohmann::json to_json(const ChiSquareResult& r) {
  std::vector<double> edges = r.edges;
  nlohmann::json e = nlohmann::json::array();
  for (double v : edges) e.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf"));
  return {{"edges", e},
          {"counts", r.counts},
          {"expected", r.expected},
          {"statistic", r.statistic},
          {"p_value", r.p_value},
          {"samples", r.samples},
          {"thin", r.thin},
          {"iat", r.iat}};
}

nlohmann::json to_json(const PerturbationCertificate& c) {
  nlohmann::json j = {{"q", c.q},
                      {"alpha_q", c.alpha_q},
                      {"epsilon", c.epsilon},
                      {"A_c", c.A_c},
                      {"coefficient", c.coefficient},
                      {"verdict", c.verdict}};
  if (c.bound_C) j["bound_C"] = *c.bound_C;
  if (c.bound_D) j["bound_D"] = *c.bound_D;
  return j;
}

}  // namespace carnot
