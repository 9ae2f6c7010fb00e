#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "benchmarks.hpp"
#include "json.hpp"

namespace iat::cli {

using nlohmann::json;

namespace {

Error parse_error(const std::string& what) { return Error("cli", ErrorCode::ParseError, what); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double parse_number(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw parse_error("not a finite number: '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    throw parse_error("not a number: '" + s + "'");
  } catch (const std::out_of_range&) {
    throw parse_error("number out of range: '" + s + "'");
  }
}

const std::string& require(const std::map<std::string, std::string>& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end() || it->second.empty()) throw parse_error("missing --" + key);
  return it->second;
}

std::optional<std::string> optional_path(const std::map<std::string, std::string>& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

void write_json(const std::string& path, const json& j) {
  io::write_atomically(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

json point_json(std::span<const double> x) { return json(std::vector<double>(x.begin(), x.end())); }

void write_point_values(const std::string& path, const std::vector<Point>& pts, const std::vector<double>& u) {
  io::write_atomically(path, [&](std::ostream& out) {
    const std::size_t n = pts.empty() ? 0 : pts.front().size();
    for (std::size_t a = 0; a < n; ++a) out << 'x' << (a + 1) << ',';
    out << "u\n";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (double v : pts[i]) out << io::format_double(v) << ',';
      out << io::format_double(u[i]) << '\n';
    }
  });
}

Region study_region(const RunConfig& c, const GridSpec& grid) {
  if (auto p = optional_path(c.inputs, "region")) {
    Region r = io::load_region(*p);
    detail::require_same_grid(r.grid(), grid, "cli");
    return r;
  }
  return Region::full(grid);
}

// Grid cells of `set` grouped into face-connected components.
std::vector<std::vector<std::size_t>> components(const Region& set) {
  const GridSpec& g = set.grid();
  const auto mask = set.mask();
  std::vector<int> seen(g.size(), 0);
  std::vector<std::vector<std::size_t>> out;
  for (auto start : set.cells()) {
    if (seen[start]) continue;
    std::vector<std::size_t> comp;
    std::deque<std::size_t> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
      const std::size_t c = queue.front();
      queue.pop_front();
      comp.push_back(c);
      for (std::size_t a = 0; a < g.dim(); ++a) {
        const std::size_t k = g.coordinate(c, a);
        if (k > 0 && mask[c - g.stride(a)] && !seen[c - g.stride(a)]) {
          seen[c - g.stride(a)] = 1;
          queue.push_back(c - g.stride(a));
        }
        if (k + 1 < g.shape()[a] && mask[c + g.stride(a)] && !seen[c + g.stride(a)]) {
          seen[c + g.stride(a)] = 1;
          queue.push_back(c + g.stride(a));
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

// How the median-mass hot spot of psi treats the high-density cells of phi
// (phi >= max/2): the share it covers and its hit rate on the high-density
// components that do not contain psi's peak.
json hot_spot_diagnostics(const ScalarField& psi, const ScalarField& phi, const Region& study) {
  LevelIndex index(psi, study);
  const auto q = index.quantile(0.5);
  const Region hot = index.prefix_region(q.count);
  double max_phi = -std::numeric_limits<double>::infinity();
  for (auto c : study.cells()) max_phi = std::max(max_phi, phi[c]);
  std::vector<std::size_t> high_cells;
  for (auto c : study.cells()) {
    if (phi[c] >= 0.5 * max_phi) high_cells.push_back(c);
  }
  const Region high(study.grid(), high_cells);
  std::size_t covered = 0;
  for (auto c : high.cells()) covered += hot.contains(c) ? 1 : 0;
  const std::size_t peak = index.order().front();
  double off_mass = 0.0;
  double off_hit = 0.0;
  std::size_t off_components = 0;
  for (const auto& comp : components(high)) {
    if (std::binary_search(comp.begin(), comp.end(), peak)) continue;
    ++off_components;
    for (auto c : comp) {
      off_mass += phi[c];
      if (hot.contains(c)) off_hit += phi[c];
    }
  }
  json j;
  j["s"] = 0.5;
  j["measure"] = region_measure(hot);
  j["hit_rate"] = hit_rate(phi, hot, study);
  j["pai"] = pai(phi, hot, study);
  j["high_density_cells"] = high.count();
  j["high_density_covered"] = covered;
  j["high_density_coverage"] = high.count() ? static_cast<double>(covered) / static_cast<double>(high.count()) : 0.0;
  j["off_peak_components"] = off_components;
  j["off_peak_hit_rate"] = off_mass > 0.0 ? json(off_hit / off_mass) : json(nullptr);
  return j;
}

int cmd_pai_report(const RunConfig& c) {
  const ScalarField psi = io::load_field(require(c.inputs, "density"));
  const ScalarField phi = io::load_field(require(c.inputs, "observed"));
  detail::require_same_grid(psi.grid(), phi.grid(), "cli");
  const Region study = study_region(c, psi.grid());
  const PenaltySpec spec = parse_penalty(c.penalty);
  PaiQuadrature mode = PaiQuadrature::quadrature_P;
  if (c.mode == "riemann") {
    mode = PaiQuadrature::riemann_P_N;
  } else if (!c.mode.empty() && c.mode != "quadrature") {
    throw parse_error("--mode must be quadrature or riemann");
  }
  const PaiReport rep = average_pai(psi, phi, study, c.levels, spec, mode);
  json j;
  j["command"] = "pai-report";
  j["penalty"] = describe(spec);
  j["levels"] = c.levels;
  j["mode"] = mode == PaiQuadrature::riemann_P_N ? "riemann" : "quadrature";
  j["value"] = rep.value();
  j["P"] = rep.P;
  j["P_N"] = rep.P_N;
  j["P_2N"] = rep.P_2N;
  j["P_4N"] = rep.P_4N;
  j["bound"] = rep.bound;
  j["divergence_suspected"] = rep.divergence_suspected;
  j["profile"] = {{"s", rep.s}, {"p", rep.p_of_s}};
  j["hot_spot"] = hot_spot_diagnostics(psi, phi, study);
  write_json(require(c.outputs, "out"), j);
  return kExitOk;
}

int cmd_kernel_dump(const RunConfig& c) {
  const ScalarField psi = io::load_field(require(c.inputs, "density"));
  const Region study = study_region(c, psi.grid());
  const PenaltySpec spec = parse_penalty(c.penalty);
  std::optional<ScalarField> phi;
  if (auto p = optional_path(c.inputs, "observed")) phi = io::load_field(*p);
  LayeredKernelOptions opt;
  opt.cap = c.cap;
  opt.observed = phi ? &*phi : nullptr;
  const auto lk = layered_kernel(psi, study, spec, c.panels.value_or(1000), opt);
  const std::string out = require(c.outputs, "out");
  io::save_field(out, lk.values);
  json side;
  side["cap"] = c.cap;
  side["penalty"] = describe(spec);
  side["singular_cells"] = lk.singular_cells;
  write_json(out + ".singular.json", side);
  return kExitOk;
}

WeightSpec parse_weight(const std::string& text, std::size_t dim, double study_measure) {
  const auto parts = split(text, ':');
  if (parts.empty()) throw parse_error("empty --weight");
  if (parts[0] == "unit" && parts.size() == 1) return weight::Constant{1.0};
  if (parts[0] == "ball" && parts.size() == 1) return weight::Ball{static_cast<int>(dim)};
  if (parts[0] == "constant" && parts.size() == 2) return weight::Constant{parse_number(parts[1])};
  if (parts[0] == "power" && parts.size() == 2) {
    const double q = parse_number(parts[1]);
    if (!(q > 0.0)) throw Error("cli", ErrorCode::DomainError, "power weight needs q > 0");
    return weight::KernelDerived{q};
  }
  if (parts[0] == "penalty" && parts.size() >= 2) {
    return weight::Penalty{parse_penalty(text.substr(8)), study_measure};
  }
  throw parse_error("unknown --weight '" + text + "'");
}

AnyFamily parse_family(const std::string& text, const WeightSpec& w, std::size_t dim) {
  const auto parts = split(text, ':');
  if (text == "balls") return BallFamily{};
  if (parts.size() == 2 && parts[0] == "superlevel") {
    const ScalarField psi = io::load_field(parts[1]);
    return SuperlevelFamily(psi, Region::full(psi.grid()));
  }
  if (parts.size() >= 2 && parts[0] == "kernel") {
    const auto* kd = std::get_if<weight::KernelDerived>(&w);
    const double q = kd ? kd->q : 1.0;
    if (parts[1] == "laplace" && parts.size() == 2) return KernelFamily(KernelSpec::laplace(static_cast<int>(dim)), q);
    if (parts[1] == "exp" && parts.size() == 3) return KernelFamily(KernelSpec::exponential(parse_number(parts[2])), q);
    if (parts[1] == "constant" && parts.size() == 3) return KernelFamily(KernelSpec::constant(parse_number(parts[2])), q);
  }
  throw parse_error("unknown --family '" + text + "'");
}

double grid_diameter(const GridSpec& g) {
  double d2 = 0.0;
  for (std::size_t a = 0; a < g.dim(); ++a) {
    const double w = g.upper(a) - g.origin()[a];
    d2 += w * w;
  }
  return std::sqrt(d2);
}

int cmd_iat_eval(const RunConfig& c) {
  const ScalarField f = io::load_field(require(c.inputs, "field"));
  const GridSpec& g = f.grid();
  const WeightSpec w = parse_weight(c.weight, g.dim(), region_measure(Region::full(g)));
  const AnyFamily family = parse_family(c.family, w, g.dim());
  const ParameterDomain dom = std::visit([](const auto& fam) { return fam.domain(); }, family);
  const double hi = std::isfinite(dom.hi) ? std::min(dom.hi, c.s_max.value_or(dom.hi)) : c.s_max.value_or(grid_diameter(g));
  const SGrid sgrid = SGrid::midpoint(dom.lo, hi, c.panels.value_or(400));
  const std::string out = require(c.outputs, "out");
  const bool centre_free = std::holds_alternative<SuperlevelFamily>(family);
  if (auto p = optional_path(c.inputs, "points")) {
    const auto pts = io::load_points(*p, g.dim());
    std::vector<double> u(pts.size());
    detail::parallel_for(pts.size(), c.threads, [&](std::size_t i) { u[i] = transform(f, family, w, pts[i], sgrid).value; });
    write_point_values(out, pts, u);
    return kExitOk;
  }
  if (centre_free) {
    const double v = transform(f, family, w, g.center(0), sgrid).value;
    io::save_field(out, ScalarField(g, v));
    return kExitOk;
  }
  const ScalarField u = std::visit([&](const auto& fam) { return transform_field(f, fam, w, sgrid, c.threads); }, family);
  io::save_field(out, u);
  return kExitOk;
}

Point box_centre(const GridSpec& g) {
  Point p(g.dim());
  for (std::size_t a = 0; a < g.dim(); ++a) p[a] = 0.5 * (g.origin()[a] + g.upper(a));
  return p;
}

int cmd_poisson_solve(const RunConfig& c) {
  const ScalarField f = io::load_field(require(c.inputs, "forcing"));
  const GridSpec& g = f.grid();
  const Point centre = c.center ? parse_point(*c.center) : box_centre(g);
  const double r0 = c.support_radius.value_or(0.5 * grid_diameter(g));
  const PoissonSolver solver(PoissonProblem(f, centre, r0));
  const auto pts = io::load_points(require(c.inputs, "points"), g.dim());
  const std::size_t panels = c.panels.value_or(4096);
  std::function<double(const Point&)> solve;
  if (c.mode.empty() || c.mode == "free") {
    solve = [&](const Point& x) { return solver.free_space(x, panels); };
  } else if (c.mode.rfind("truncated:", 0) == 0) {
    const double r = parse_number(c.mode.substr(10));
    solve = [&solver, r, panels](const Point& x) { return solver.truncated(x, r, panels); };
  } else if (c.mode == "halfspace-cut") {
    solve = [&](const Point& x) { return solver.half_space_cut(x, panels); };
  } else if (c.mode == "halfspace-ext") {
    solve = [&](const Point& x) { return solver.half_space_extension(x, panels); };
  } else {
    throw parse_error("unknown --mode '" + c.mode + "'");
  }
  std::vector<double> u(pts.size());
  detail::parallel_for(pts.size(), c.threads, [&](std::size_t i) { u[i] = solve(pts[i]); });
  write_point_values(require(c.outputs, "out"), pts, u);
  return kExitOk;
}

struct VerifyPoint {
  Point x;
  double u = 0.0;
  double fd = 0.0;
  double f = 0.0;
  double diag = 0.0;  // Σ_a |second difference along a|
  json extra = json::object();
  double mv_err = 0.0;
};

int cmd_verify(const RunConfig& c) {
  const std::string problem = c.problem;
  std::vector<VerifyPoint> pts;
  double tol = 0.0;
  std::size_t resolution = 0;
  std::size_t panels = 0;

  auto second_differences = [](auto&& u, const Point& x, double h) {
    double s = 0.0;
    Point p = x;
    const double c0 = u(std::span<const double>(p));
    for (std::size_t a = 0; a < x.size(); ++a) {
      p[a] = x[a] + h;
      const double up = u(std::span<const double>(p));
      p[a] = x[a] - h;
      const double dn = u(std::span<const double>(p));
      p[a] = x[a];
      s += std::abs(up - 2.0 * c0 + dn) / (h * h);
    }
    return s;
  };

  if (problem == "gaussian3d") {
    tol = c.tolerance.value_or(0.03);
    resolution = c.resolution.value_or(64);
    panels = c.panels.value_or(4096);
    const ScalarField f = bench::gaussian3d(resolution);
    const PoissonSolver solver(PoissonProblem(f, Point{0.0, 0.0, 0.0}, bench::kGaussianSupport));
    const double h = f.grid().spacing()[0];
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j)
        for (int k = -1; k <= 1; ++k) pts.push_back({Point{double(i), double(j), double(k)}});
    auto u = [&](std::span<const double> y) { return solver.free_space(y, panels); };
    detail::parallel_for(pts.size(), c.threads, [&](std::size_t i) {
      auto& p = pts[i];
      p.u = u(p.x);
      p.fd = laplacian_fd(u, p.x, h);
      p.f = bench::gaussian_forcing(p.x);
      p.diag = second_differences(u, p.x, h);
      const double exact = bench::gaussian_solution(p.x);
      p.extra["u_exact"] = exact;
      p.extra["u_rel_err"] = std::abs(p.u - exact) / exact;
    });
  } else if (problem == "quadratic" || problem == "harmonic") {
    tol = c.tolerance.value_or(problem == "quadratic" ? 1e-9 : 0.005);
    resolution = c.resolution.value_or(32);
    panels = c.panels.value_or(1024);
    const ScalarField u = problem == "quadratic" ? bench::quadratic_solution(3, resolution) : bench::harmonic_solution(resolution);
    const ScalarField f = problem == "quadratic" ? bench::quadratic_forcing(3, resolution) : ScalarField(u.grid(), 0.0);
    const double h = u.grid().spacing()[0];
    const std::vector<Point> centres{{0.0, 0.0, 0.0}, {0.5, 0.0, 0.0}, {0.0, -0.5, 0.25}, {-0.25, 0.25, 0.5}, {0.3, -0.2, -0.4}};
    for (const auto& x : centres) pts.push_back({x});
    detail::parallel_for(pts.size(), c.threads, [&](std::size_t i) {
      auto& p = pts[i];
      p.u = interpolate(u, p.x);
      p.fd = laplacian_fd(u, p.x, h);
      p.f = interpolate(f, p.x);
      p.diag = second_differences([&](std::span<const double> y) { return interpolate(u, y); }, p.x, h);
      json mv = json::array();
      for (double r : {0.5, 1.0}) {
        const auto m = mean_value_identity(u, f, p.x, r, panels, 10000, c.seed + i);
        mv.push_back({{"R", r}, {"lhs", m.lhs}, {"rhs", m.rhs}, {"sphere", m.sphere}, {"forcing", m.forcing},
                      {"rel_err", m.rel_err}, {"samples", m.samples}});
        p.mv_err = std::max(p.mv_err, m.rel_err);
      }
      p.extra["mean_value"] = mv;
    });
  } else {
    throw parse_error("unknown --problem '" + problem + "'");
  }

  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, std::abs(p.f));
  if (scale == 0.0) {
    for (const auto& p : pts) scale = std::max(scale, p.diag);
  }
  json arr = json::array();
  double worst = 0.0;
  for (const auto& p : pts) {
    const double resid = scale > 0.0 ? std::abs(-p.fd - p.f) / scale : std::abs(-p.fd - p.f);
    const double err = std::max({resid, p.mv_err, p.extra.contains("u_rel_err") ? p.extra["u_rel_err"].get<double>() : 0.0});
    worst = std::max(worst, err);
    json e = {{"x", point_json(p.x)}, {"u", p.u}, {"fd_laplacian", p.fd}, {"f", p.f}, {"rel_err", err}};
    for (auto it = p.extra.begin(); it != p.extra.end(); ++it) e[it.key()] = it.value();
    arr.push_back(e);
  }
  const bool passed = worst <= tol;
  json j;
  j["command"] = "verify";
  j["problem"] = problem;
  j["resolution"] = resolution;
  j["panels"] = panels;
  j["seed"] = c.seed;
  j["tolerance"] = tol;
  j["max_rel_err"] = worst;
  j["passed"] = passed;
  j["points"] = arr;
  write_json(require(c.outputs, "report"), j);
  return passed ? kExitOk : kExitVerifyFailed;
}

int cmd_generate(const RunConfig& c) {
  const std::size_t res = c.resolution.value_or(c.name == "gaussian3d" ? 64 : (c.name == "quadratic" ? 32 : 1000));
  const auto b = bench::generate(c.name, res, c.dim);
  io::save_field(require(c.outputs, "out"), b.primary);
  if (auto p = optional_path(c.outputs, "companion")) {
    if (!b.companion) throw parse_error("benchmark '" + c.name + "' has no companion field");
    io::save_field(*p, *b.companion);
  }
  return kExitOk;
}

}  // namespace

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyRegion:
    case ErrorCode::DegenerateDensity:
    case ErrorCode::DegeneratePenalty:
    case ErrorCode::FamilyNotNested:
    case ErrorCode::EmptyFamily:
    case ErrorCode::SingularPoint:
      return kExitNumeric;
    default:
      return kExitUsage;
  }
}

PenaltySpec parse_penalty(const std::string& text) {
  if (text == "unit") return penalty::Unit{};
  if (text == "hitrate") return penalty::HitRatePower{};
  if (text == "perimeter") return penalty::PerimeterRatio{};
  if (text.rfind("area:", 0) == 0) return penalty::AreaPower{parse_number(text.substr(5))};
  throw parse_error("unknown penalty '" + text + "'");
}

Point parse_point(const std::string& text) {
  Point p;
  for (const auto& t : split(text, ',')) p.push_back(parse_number(t));
  if (p.empty()) throw parse_error("empty point");
  return p;
}

namespace {
void report_error(std::ostream& err, const std::string& code, const std::string& message) {
  json j;
  j["error"] = {{"code", code}, {"message", message}};
  err << j.dump() << '\n';
}
}  // namespace

int run(const RunConfig& config, std::ostream& err) {
  try {
    if (config.threads < 1) throw Error("cli", ErrorCode::DomainError, "--threads must be >= 1");
    if (config.tolerance && !(*config.tolerance > 0.0)) {
      throw Error("cli", ErrorCode::DomainError, "--tolerance must be positive");
    }
    if (config.command == "pai-report") return cmd_pai_report(config);
    if (config.command == "kernel-dump") return cmd_kernel_dump(config);
    if (config.command == "iat-eval") return cmd_iat_eval(config);
    if (config.command == "poisson-solve") return cmd_poisson_solve(config);
    if (config.command == "verify") return cmd_verify(config);
    if (config.command == "generate") return cmd_generate(config);
    throw parse_error("unknown command '" + config.command + "'");
  } catch (const Error& e) {
    report_error(err, e.qualified_code(), e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    report_error(err, "cli.Internal", e.what());
    return kExitUsage;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Integral average transforms, hot-spot indices and ball-average Poisson solves"};
  app.require_subcommand(1);
  RunConfig c;
  app.add_option("--seed", c.seed, "Seed for stochastic quadrature")->capture_default_str();
  app.add_option("--threads", c.threads, "Worker threads")->capture_default_str();
  app.add_option("--tolerance", c.tolerance, "Override the verification tolerance");

  auto input = [&](CLI::App* sub, const std::string& role, const std::string& help, bool required) {
    auto* opt = sub->add_option("--" + role, c.inputs[role], help);
    if (required) opt->required();
  };
  auto output = [&](CLI::App* sub, const std::string& role, const std::string& help, bool required) {
    auto* opt = sub->add_option("--" + role, c.outputs[role], help);
    if (required) opt->required();
  };

  auto* pai_cmd = app.add_subcommand("pai-report", "Averaged PAI of a prediction against observations");
  input(pai_cmd, "density", "Predicted density field", true);
  input(pai_cmd, "observed", "Observed density field", true);
  input(pai_cmd, "region", "Study region mask (default: whole grid)", false);
  pai_cmd->add_option("--penalty", c.penalty, "unit | area:<alpha> | hitrate | perimeter");
  pai_cmd->add_option("--levels", c.levels, "Number of levels N");
  pai_cmd->add_option("--mode", c.mode, "quadrature | riemann");
  output(pai_cmd, "out", "Report JSON", true);

  auto* kern_cmd = app.add_subcommand("kernel-dump", "Layered kernel of a density");
  input(kern_cmd, "density", "Density field", true);
  input(kern_cmd, "region", "Study region mask", false);
  input(kern_cmd, "observed", "Observed density (hit-rate penalty only)", false);
  kern_cmd->add_option("--penalty", c.penalty, "unit | area:<alpha> | hitrate | perimeter");
  kern_cmd->add_option("--panels", c.panels, "s-panels per unit level");
  kern_cmd->add_option("--cap", c.cap, "Cap for divergent kernel values");
  output(kern_cmd, "out", "Kernel field (sidecar <out>.singular.json)", true);

  auto* iat_cmd = app.add_subcommand("iat-eval", "Integral average transform of a field");
  input(iat_cmd, "field", "Input field f", true);
  input(iat_cmd, "points", "Evaluation points (default: every cell centre)", false);
  iat_cmd->add_option("--family", c.family, "balls | superlevel:<psi.csv> | kernel:laplace | kernel:exp:<scale> | kernel:constant:<c>");
  iat_cmd->add_option("--weight", c.weight, "unit | ball | constant:<c> | power:<q> | penalty:<spec>");
  iat_cmd->add_option("--s-max", c.s_max, "Upper end of the s-grid");
  iat_cmd->add_option("--panels", c.panels, "s-grid panels");
  output(iat_cmd, "out", "Output field or point table", true);

  auto* poi_cmd = app.add_subcommand("poisson-solve", "Poisson solution from ball averages");
  input(poi_cmd, "forcing", "Forcing field f", true);
  input(poi_cmd, "points", "Evaluation points", true);
  poi_cmd->add_option("--mode", c.mode, "free | truncated:<R> | halfspace-cut | halfspace-ext");
  poi_cmd->add_option("--center", c.center, "Support centre, comma-separated");
  poi_cmd->add_option("--support", c.support_radius, "Support radius R0");
  poi_cmd->add_option("--panels", c.panels, "s-panels");
  output(poi_cmd, "out", "Point table x1..xn,u", true);

  auto* ver_cmd = app.add_subcommand("verify", "Residual checks on closed-form problems");
  ver_cmd->add_option("--problem", c.problem, "gaussian3d | quadratic | harmonic")->required();
  ver_cmd->add_option("--resolution", c.resolution, "Cells per axis");
  ver_cmd->add_option("--panels", c.panels, "s-panels");
  output(ver_cmd, "report", "Residual report JSON", true);

  auto* gen_cmd = app.add_subcommand("generate", "Write a benchmark field");
  gen_cmd->add_option("--name", c.name, "example1:<p> | gaussian3d | quadratic | two_bump")->required();
  gen_cmd->add_option("--resolution", c.resolution, "Cells per axis");
  gen_cmd->add_option("--dim", c.dim, "Dimension (quadratic)");
  output(gen_cmd, "out", "Primary field", true);
  output(gen_cmd, "companion", "Companion field (exact solution or sharp prediction)", false);

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "cli.ParseError", e.what());
    return kExitUsage;
  }
  for (auto* sub : app.get_subcommands()) c.command = sub->get_name();
  return run(c, err);
}

}  // namespace iat::cli
