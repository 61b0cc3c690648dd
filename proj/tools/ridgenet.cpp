// ridgenet: command-line front end.
//   represent    least-L1 weight of a univariate target, decomposition report
//   discretize   finite ReLU network from a weight, error report
//   radon        sampled Radon transform of a 2-d or 3-d target
//   reconstruct  chart-weight reconstruction at probe points
// Exit codes: 0 success, 1 usage or input error, 2 mathematical refusal.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "ridgenet/discretize.hpp"
#include "ridgenet/error.hpp"
#include "ridgenet/expr.hpp"
#include "ridgenet/funclib.hpp"
#include "ridgenet/multidim.hpp"
#include "ridgenet/univariate.hpp"

using namespace ridgenet;

namespace {

struct RunConfig {
  std::string builtin;
  std::string expr;
  std::string csv;
  int dim = 0;  // 0: take it from the source
  std::size_t m = 1024;
  std::string scheme = "quadrature";
  std::uint64_t seed = 1;
  std::optional<double> tol;
  std::string out;
  std::string report;
  std::string plot;
  std::string grid;
  bool force = false;
  std::string method = "relu";
  std::optional<double> B;
  std::optional<double> h;
  std::string rule;
  int order = 0;
  std::size_t samples = 1024;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Source {
  std::optional<Scalar1D> scalar;
  std::optional<FieldND> field;
  std::string name;
  int dim = 1;
};

Source load_source(const RunConfig& cfg) {
  const int given = !cfg.builtin.empty() + !cfg.expr.empty() + !cfg.csv.empty();
  if (given != 1) throw InputError("exactly one of --builtin, --expr, --csv is required");
  if (cfg.dim != 0 && (cfg.dim < 1 || cfg.dim > 3)) throw InputError("--dim must be 1, 2 or 3");
  Source s;
  if (!cfg.builtin.empty()) {
    auto v = builtin(cfg.builtin);
    if (auto* f = std::get_if<Scalar1D>(&v)) {
      s.scalar = *f;
      s.dim = 1;
    } else {
      s.field = std::get<FieldND>(v);
      s.dim = s.field->dim;
    }
    s.name = cfg.builtin;
    if (cfg.dim != 0 && cfg.dim != s.dim) throw InputError("--dim does not match builtin '" + cfg.builtin + "'");
  } else if (!cfg.expr.empty()) {
    s.dim = cfg.dim == 0 ? 1 : cfg.dim;
    auto ast = std::make_shared<const expr::Ast>(expr::parse(cfg.expr, s.dim));
    s.name = expr::print(*ast);
    if (s.dim == 1) {
      s.scalar = scalar_from_expr(ast, s.name);
    } else {
      s.field = field_from_expr(ast, s.name);
      if (s.field->smoothness < s.dim + 1) {
        if (!cfg.force)
          throw RefusalError("expression uses abs or sqrt, so d+1 = " + std::to_string(s.dim + 1) +
                             " derivatives are not guaranteed (use --force to assert smoothness)");
        s.field->smoothness = expr::kSmooth;
      }
    }
  } else {
    if (cfg.dim > 1) throw InputError("--csv targets are univariate");
    std::ifstream in(cfg.csv);
    if (!in) throw InputError("cannot open " + cfg.csv);
    s.scalar = scalar_from_csv(in, cfg.csv);
    s.name = cfg.csv;
  }
  return s;
}

// Weights whose forward image is exactly one of the four special terms.
std::optional<CircleWeight> defining_weight(const std::string& builtin_name) {
  constexpr double pi = std::numbers::pi;
  if (builtin_name == "xatan") return raw_weight([](double p) { return std::abs(std::cos(p)); }, {pi / 2, 3 * pi / 2});
  if (builtin_name == "atan") return raw_weight([](double p) { return s_phi(p); }, {pi / 2, 3 * pi / 2});
  if (builtin_name == "linear") return raw_weight([](double p) { return 2 / pi * std::cos(p); });
  if (builtin_name == "const") return raw_weight([](double p) { return 2 / pi * std::sin(p); });
  return std::nullopt;
}

// Coefficients of the special terms read off the behaviour at +-R:
// f' -> alpha +- gamma pi/2 and f - x f' -> beta +- eta pi/2.
DecompCoeffs asymptotic_coeffs(const Scalar1D& f, double R = 1e4) {
  const double dp = f.d1(R), dm = f.d1(-R);
  const double gp = f(R) - R * dp, gm = f(-R) + R * dm;
  DecompCoeffs c;
  c.alpha = 0.5 * (dp + dm);
  c.gamma = (dp - dm) / std::numbers::pi;
  c.beta = 0.5 * (gp + gm);
  c.eta = (gp - gm) / std::numbers::pi;
  return c;
}

std::string coeff_text(const DecompCoeffs& c) {
  return "alpha=" + fmt(c.alpha) + " beta=" + fmt(c.beta) + " gamma=" + fmt(c.gamma) + " eta=" + fmt(c.eta);
}

void emit_report(const RunConfig& cfg, const std::string& text) {
  std::cout << text;
  if (!cfg.report.empty()) {
    std::ofstream r(cfg.report, std::ios::binary);
    if (!r) throw InputError("cannot write " + cfg.report);
    r << text;
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw InputError("cannot write " + path);
  return o;
}

DirectionRule parse_rule(const std::string& spec, int dim) {
  if (spec.empty()) return default_rule(dim);
  std::vector<std::size_t> n;
  std::string kind = spec;
  const auto colon = spec.find(':');
  if (colon != std::string::npos) {
    kind = spec.substr(0, colon);
    std::stringstream rest(spec.substr(colon + 1));
    std::string tok;
    while (std::getline(rest, tok, ':')) {
      try {
        std::size_t used = 0;
        const long v = std::stol(tok, &used);
        if (used != tok.size() || v < 1) throw InputError("");
        n.push_back(static_cast<std::size_t>(v));
      } catch (const std::exception&) {
        throw InputError("bad --rule " + spec);
      }
    }
  }
  DirectionRule r;
  if (kind == "circle" && n.size() == 1) {
    r = circle_rule(n[0]);
  } else if (kind == "product" && n.size() == 2) {
    r = product_sphere_rule(n[0], n[1]);
  } else if (kind == "lebedev" && n.size() == 1) {
    r = lebedev_rule(n[0]);
  } else {
    throw InputError("--rule must be circle:N, product:NT:NP or lebedev:N");
  }
  if (r.dim != dim) throw InputError("--rule dimension does not match the target");
  return r;
}

ChartOptions chart_options(const RunConfig& cfg, int dim) {
  ChartOptions o;
  o.dirs = parse_rule(cfg.rule, dim);
  o.B = cfg.B;
  o.h = cfg.h;
  if (cfg.tol) o.radon.abs_tol = o.radon.rel_tol = *cfg.tol;
  return o;
}

Kernel parse_method(const std::string& m) {
  if (m == "relu") return Kernel::relu;
  if (m == "heaviside") return Kernel::heaviside;
  throw InputError("--method must be relu or heaviside");
}

int cmd_represent(const RunConfig& cfg) {
  const Source src = load_source(cfg);
  if (!src.scalar) throw InputError("represent needs a univariate target (--dim 1)");
  const Scalar1D& f = *src.scalar;
  CircleWeight c;
  try {
    c = least_l1_weight(f, cfg.force);
  } catch (const RefusalError& e) {
    std::cerr << "ridgenet: refused: " << e.what() << "\n";
    DecompCoeffs hint;
    std::string source;
    if (auto w = defining_weight(cfg.builtin)) {
      hint = decompose(*w);
      source = "decompose of the defining weight";
    } else {
      hint = asymptotic_coeffs(f);
      source = "asymptotic estimate";
    }
    std::cerr << "hint (" << source << "): " << coeff_text(hint)
              << "; f - (alpha x + beta + gamma (x atan x + 1) + eta atan x) is the W(R) part\n";
    std::ostringstream r;
    r << "command=represent\nfunction=" << src.name << "\nstatus=refused\nreason=not_in_W\n";
    r << "hint_source=" << source << "\nhint_alpha=" << fmt(hint.alpha) << "\nhint_beta=" << fmt(hint.beta)
      << "\nhint_gamma=" << fmt(hint.gamma) << "\nhint_eta=" << fmt(hint.eta) << "\n";
    emit_report(cfg, r.str());
    return 2;
  }
  const DecompositionReport rep = decomposition_report(c, cfg.tol.value_or(1e-7));
  if (!cfg.out.empty()) {
    auto o = open_out(cfg.out);
    write_weight_csv(o, c, cfg.samples);
  }
  const WMembership w = check_w_membership(f);
  std::ostringstream r;
  r << "# represent " << src.name << ": least-L1 weight c(phi) = f''(-tan phi) / (2 |cos phi|^3)\n";
  r << "command=represent\nfunction=" << src.name << "\nstatus=ok\n";
  r << "w_verdict=" << to_string(w.verdict) << "\n";
  write_report(r, rep);
  r << "w_integral=" << fmt(w.integral) << "\n";
  if (!cfg.out.empty()) r << "weight_csv=" << cfg.out << "\n";
  emit_report(cfg, r.str());
  return 0;
}

std::function<double(std::span<const double>)> target_of(const Source& s) {
  if (s.scalar) {
    const Scalar1D f = *s.scalar;
    return [f](std::span<const double> x) { return f(x[0]); };
  }
  const FieldND f = *s.field;
  return [f](std::span<const double> x) { return f.value(x); };
}

GridSpec default_grid(const Source& s) {
  if (s.dim == 1) return {};
  const double r = 1.25 * s.field->support_radius;
  return {-r, r, s.dim == 2 ? std::size_t{41} : std::size_t{13}};
}

void write_plot(const std::string& path, const Source& s, const ShallowNet& net, const std::vector<std::vector<double>>& pts) {
  auto o = open_out(path);
  const auto f = target_of(s);
  const auto v = eval_net(net, pts);
  for (int k = 0; k < s.dim; ++k) o << (s.dim == 1 ? "x" : "x" + std::to_string(k + 1)) << ",";
  o << "f,net\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (double x : pts[i]) o << fmt(x) << ",";
    o << fmt(f(pts[i])) << "," << fmt(v[i]) << "\n";
  }
}

int cmd_discretize(const RunConfig& cfg) {
  const Source src = load_source(cfg);
  if (cfg.m == 0) throw InputError("-m must be positive");
  if (cfg.scheme != "quadrature" && cfg.scheme != "montecarlo")
    throw InputError("--scheme must be quadrature or montecarlo");
  if (cfg.method != "relu") throw InputError("discretize builds ReLU networks only (--method relu)");
  ShallowNet net;
  const bool mc = cfg.scheme == "montecarlo";
  if (src.scalar) {
    const CircleWeight w = least_l1_weight(*src.scalar, cfg.force);
    net = mc ? monte_carlo_net(w, cfg.m, cfg.seed) : quadrature_net(w, cfg.m);
  } else {
    const ChartWeight w = relu_chart_weight(*src.field, chart_options(cfg, src.dim));
    net = mc ? monte_carlo_net(w, cfg.m, cfg.seed) : quadrature_net(w, cfg.m);
  }
  const GridSpec g = cfg.grid.empty() ? default_grid(src) : parse_grid(cfg.grid);
  const auto pts = grid_points(g, src.dim);
  const NetReport rep = error_report(net, target_of(src), pts);
  if (!cfg.out.empty()) {
    auto o = open_out(cfg.out);
    write_net(o, net);
  }
  if (!cfg.plot.empty()) write_plot(cfg.plot, src, net, pts);
  std::ostringstream r;
  r << "# discretize " << src.name << ": " << rep.node_count << " nodes, sup error " << fmt(rep.sup_error)
    << " on [" << fmt(g.lo) << ", " << fmt(g.hi) << "]^" << src.dim << "\n";
  r << "command=discretize\nfunction=" << src.name << "\ndim=" << src.dim << "\nscheme=" << cfg.scheme << "\n";
  r << "m=" << cfg.m << "\n";
  if (mc) r << "seed=" << cfg.seed << "\n";
  r << "grid=" << fmt(g.lo) << ":" << fmt(g.hi) << ":" << g.n << "\n";
  r << "m_too_small=" << (cfg.m < 4 ? "true" : "false") << "\n";
  write_net_report(r, rep);
  if (!cfg.out.empty()) r << "net_file=" << cfg.out << "\n";
  emit_report(cfg, r.str());
  return 0;
}

int cmd_radon(const RunConfig& cfg) {
  const Source src = load_source(cfg);
  if (!src.field) throw InputError("radon needs a 2-d or 3-d target");
  const FieldND& f = *src.field;
  const double rho = f.support_radius;
  const double h = cfg.h.value_or(src.dim == 2 ? rho / 256.0 : rho / 128.0);
  const double B = cfg.B.value_or(src.dim == 2 ? 2.0 * rho : rho + 8.0 * h);
  RadonOptions o;
  if (cfg.tol) o.abs_tol = o.rel_tol = *cfg.tol;
  // A plain export may be coarser than the chart-weight pipeline needs.
  const bool coarse = h > rho / 32.0;
  o.allow_coarse = coarse && cfg.order == 0;
  const RadonGrid g = radon_transform(f, parse_rule(cfg.rule, src.dim), B, h, cfg.order, o);
  if (!cfg.out.empty()) {
    auto out = open_out(cfg.out);
    write_radon_grid(out, g);
  }
  std::ostringstream r;
  r << "# radon " << src.name << ": " << g.dirs.size() << " directions x " << g.n_offsets << " offsets\n";
  r << "command=radon\nfunction=" << src.name << "\ndim=" << src.dim << "\n";
  r << "directions=" << g.dirs.size() << "\nrule=" << g.dirs.name << "\nB=" << fmt(g.B) << "\nh=" << fmt(g.h)
    << "\nn_offsets=" << g.n_offsets << "\nmax_order=" << cfg.order << "\n";
  if (coarse) r << "warning=grid coarser than support_radius/32; not suitable for chart weights\n";
  if (!cfg.out.empty()) r << "radon_file=" << cfg.out << "\n";
  emit_report(cfg, r.str());
  return 0;
}

int cmd_reconstruct(const RunConfig& cfg) {
  const Source src = load_source(cfg);
  if (!src.field) throw InputError("reconstruct needs a 2-d or 3-d target");
  const FieldND& f = *src.field;
  const Kernel kernel = parse_method(cfg.method);
  const ChartOptions opt = chart_options(cfg, src.dim);
  const ChartWeight w = kernel == Kernel::relu ? relu_chart_weight(f, opt) : heaviside_weight(f, opt);
  const auto pts = cfg.grid.empty() ? probe_points(src.dim) : grid_points(parse_grid(cfg.grid), src.dim);
  std::vector<double> rec(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) rec[i] = reconstruct(w, pts[i]);
  std::ostringstream table;
  for (int k = 0; k < src.dim; ++k) table << "x" << k + 1 << ",";
  table << "f,reconstruction,rel_error\n";
  double worst_rel = 0.0, worst_abs = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double fx = f.value(pts[i]);
    const double err = std::abs(rec[i] - fx);
    const double rel = fx != 0.0 ? err / std::abs(fx) : err;
    worst_rel = std::max(worst_rel, rel);
    worst_abs = std::max(worst_abs, err);
    for (double x : pts[i]) table << fmt(x) << ",";
    table << fmt(fx) << "," << fmt(rec[i]) << "," << fmt(rel) << "\n";
  }
  if (!cfg.out.empty()) {
    auto o = open_out(cfg.out);
    o << table.str();
  }
  std::ostringstream r;
  r << "# reconstruct " << src.name << " (" << cfg.method << " kernel) at " << pts.size() << " points\n";
  if (cfg.out.empty()) r << table.str();
  r << "command=reconstruct\nfunction=" << src.name << "\ndim=" << src.dim << "\nmethod=" << cfg.method << "\n";
  r << "points=" << pts.size() << "\nrule=" << w.dirs.name << "\nB=" << fmt(w.B) << "\nh=" << fmt(w.h) << "\n";
  r << "max_rel_error=" << fmt(worst_rel) << "\nmax_abs_error=" << fmt(worst_abs) << "\n";
  r << "chart_l1_norm=" << fmt(chart_l1_norm(w)) << "\n";
  if (!cfg.out.empty()) r << "table_file=" << cfg.out << "\n";
  emit_report(cfg, r.str());
  return 0;
}

void add_source(CLI::App* c, RunConfig& cfg) {
  c->add_option("--builtin", cfg.builtin, "builtin target name");
  c->add_option("--expr", cfg.expr, "target expression over x1..xd");
  c->add_option("--dim", cfg.dim, "dimension of --expr (1, 2 or 3)");
  c->add_option("--tol", cfg.tol, "tolerance (moments for represent, quadrature otherwise)");
  c->add_option("--out", cfg.out, "output file");
  c->add_option("--report", cfg.report, "also write the key=value report here");
  c->add_flag("--force", cfg.force, "skip refusals (W-membership, smoothness)");
}

void add_chart(CLI::App* c, RunConfig& cfg) {
  c->add_option("--B", cfg.B, "offset half-range");
  c->add_option("--h", cfg.h, "offset step");
  c->add_option("--rule", cfg.rule, "direction rule: circle:N, product:NT:NP, lebedev:N");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ridgenet: integral representations and shallow ReLU networks"};
  app.set_help_flag("--help", "print this help");
  app.require_subcommand(1);
  RunConfig cfg;

  auto* rep = app.add_subcommand("represent", "least-L1 weight and decomposition report (d = 1)");
  add_source(rep, cfg);
  rep->add_option("--csv", cfg.csv, "target samples: CSV with header x,f[,f1[,f2]]");
  rep->add_option("--samples", cfg.samples, "number of phi samples in the weight CSV")->check(CLI::PositiveNumber);

  auto* dis = app.add_subcommand("discretize", "finite network and error report");
  add_source(dis, cfg);
  add_chart(dis, cfg);
  dis->add_option("--csv", cfg.csv, "target samples: CSV with header x,f[,f1[,f2]]");
  dis->add_option("-m,--m", cfg.m, "node count");
  dis->add_option("--scheme", cfg.scheme, "quadrature or montecarlo");
  dis->add_option("--seed", cfg.seed, "Monte Carlo seed");
  dis->add_option("--grid", cfg.grid, "probe grid lo:hi:n per axis");
  dis->add_option("--plot", cfg.plot, "CSV of x, f, net on the probe grid");
  dis->add_option("--method", cfg.method, "kernel (relu)");

  auto* rad = app.add_subcommand("radon", "sampled Radon transform (d = 2, 3)");
  add_source(rad, cfg);
  add_chart(rad, cfg);
  rad->add_option("--order", cfg.order, "highest offset derivative to store");

  auto* rec = app.add_subcommand("reconstruct", "chart-weight reconstruction at probe points (d = 2, 3)");
  add_source(rec, cfg);
  add_chart(rec, cfg);
  rec->add_option("--method", cfg.method, "relu or heaviside");
  rec->add_option("--grid", cfg.grid, "probe grid lo:hi:n per axis instead of the 27 probe points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*rep) return cmd_represent(cfg);
    if (*dis) return cmd_discretize(cfg);
    if (*rad) return cmd_radon(cfg);
    if (*rec) return cmd_reconstruct(cfg);
  } catch (const ParseError& e) {
    std::cerr << "ridgenet: parse error: " << e.what() << "\n";
    return 1;
  } catch (const InputError& e) {
    std::cerr << "ridgenet: " << e.what() << "\n";
    return 1;
  } catch (const RefusalError& e) {
    std::cerr << "ridgenet: refused: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "ridgenet: refused: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "ridgenet: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
