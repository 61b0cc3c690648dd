#include "ridgenet/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "ridgenet/error.hpp"
#include "ridgenet/parallel.hpp"
#include "ridgenet/quadrature.hpp"

namespace ridgenet {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// A piece of the parameter domain in some chart variable t. `density(t)` is
// the outer-weight density per unit t for the (unnormalized) unit
// `node(t)` = (a, b).
struct Segment {
  double t0 = 0.0, t1 = 0.0;
  std::function<double(double)> density;
  std::function<void(double, std::span<double>)> node;
  std::vector<double> exceptional;  // t-locations that nodes must avoid
  int group = 0;
};

std::vector<double> interior(double lo, double hi, const std::vector<double>& at) {
  std::vector<double> in;
  for (double t : at)
    if (t > lo && t < hi) in.push_back(t);
  return quad::pieces(lo, hi, in);
}

// Splits [lo, hi] at `cuts` and appends one segment per piece.
void add_pieces(std::vector<Segment>& out, double lo, double hi, const std::vector<double>& cuts,
                const std::function<double(double)>& density, const std::function<void(double, std::span<double>)>& node,
                int group) {
  const auto p = interior(lo, hi, cuts);
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    Segment s;
    s.t0 = p[k];
    s.t1 = p[k + 1];
    s.density = density;
    s.node = node;
    s.exceptional = cuts;
    s.group = group;
    out.push_back(std::move(s));
  }
}

std::vector<Segment> circle_segments(const CircleWeight& w, bool& has_struct, bool& has_extra) {
  std::vector<Segment> segs;
  has_struct = false;
  has_extra = w.has_extra();
  if (w.has_structured()) {
    const auto support = w.z_support();
    // z = 0 is always a panel boundary so the layout is symmetric for every m
    auto kinks = w.z_kinks();
    kinks.push_back(0.0);
    auto d2 = [&w](double z, double sign) {
      double v = 0.0;
      if (w.sym) v += w.sym->d2(z);
      if (w.anti) v += sign * w.anti->d2(z);
      return v;
    };
    for (int half = 0; half < 2; ++half) {
      const double sign = half == 0 ? 1.0 : -1.0;
      // half A: node (1, -z); half B: node (-1, z); both with |(a,b)| = sqrt(1+z^2)
      auto node_z = [sign](double z, std::span<double> ab) {
        ab[0] = sign;
        ab[1] = -sign * z;
      };
      if (support) {
        if (*support <= 0.0) continue;
        auto dens = [d2, sign](double z) { return 0.5 * d2(z, sign); };
        add_pieces(segs, -*support, *support, kinks, dens, node_z, half);
      } else {
        std::vector<double> th;
        for (double z : kinks) th.push_back(std::atan(z));
        auto dens = [d2, sign](double t) {
          const double c = std::cos(t);
          const double v = d2(std::tan(t), sign);
          return v == 0.0 ? 0.0 : 0.5 * v / (c * c * c);
        };
        auto node_t = [sign](double t, std::span<double> ab) {
          ab[0] = sign * std::cos(t);
          ab[1] = -sign * std::sin(t);
        };
        add_pieces(segs, -kPi / 2, kPi / 2, th, dens, node_t, half);
      }
      has_struct = true;
    }
  }
  if (has_extra) {
    std::vector<double> cuts = {kPi / 2, 3 * kPi / 2};
    for (double p : w.raw_kinks) {
      double q = std::fmod(p, 2 * kPi);
      if (q < 0.0) q += 2 * kPi;
      cuts.push_back(q);
    }
    auto dens = [&w](double phi) { return w.extra(phi); };
    auto node = [](double phi, std::span<double> ab) {
      ab[0] = std::cos(phi);
      ab[1] = std::sin(phi);
    };
    add_pieces(segs, 0.0, 2 * kPi, cuts, dens, node, 2);
  }
  return segs;
}

std::vector<Segment> chart_segments(const ChartWeight& w) {
  std::vector<Segment> segs;
  const int d = w.dim;
  for (std::size_t i = 0; i < w.dirs.size(); ++i) {
    const auto alpha = w.dirs.node(i);
    const double W = w.dirs.weights[i];
    std::vector<double> a(alpha.begin(), alpha.end());
    auto node_beta = [a, d](double beta, std::span<double> ab) {
      for (int k = 0; k < d; ++k) ab[k] = a[k];
      ab[d] = beta;
    };
    const int group = static_cast<int>(i);
    if (w.sampled()) {
      auto dens = [&w, i, W](double beta) { return W * w(i, beta); };
      add_pieces(segs, -w.B, w.B, {}, dens, node_beta, group);
      if (!w.far.empty() && !w.far[i].empty()) {
        for (double side : {1.0, -1.0}) {
          // beta = side * B / s, s in (0, 1]
          const double B = w.B;
          auto dt = [&w, i, W, B, side](double s) { return W * w(i, side * B / s) * B / (s * s); };
          auto nt = [a, d, B, side](double s, std::span<double> ab) {
            for (int k = 0; k < d; ++k) ab[k] = a[k] * s;
            ab[d] = side * B;
          };
          Segment sg;
          sg.t0 = 0.0;
          sg.t1 = 1.0;
          sg.density = [dt](double s) { return s > 0.0 ? dt(s) / s : 0.0; };  // node scaled by s
          sg.node = nt;
          sg.group = -1;
          segs.push_back(std::move(sg));
        }
      }
    } else {
      auto dens = [&w, i, W](double beta) { return W * w.analytic(i, beta); };
      const std::vector<double> kinks = i < w.kinks.size() ? w.kinks[i] : std::vector<double>{};
      if (w.support) {
        add_pieces(segs, -*w.support, *w.support, kinks, dens, node_beta, group);
      } else {
        std::vector<double> th;
        for (double z : kinks) th.push_back(std::atan(z));
        auto dt = [dens](double t) {
          const double c = std::cos(t);
          const double v = dens(std::tan(t));
          return v == 0.0 ? 0.0 : v / (c * c * c);
        };
        auto nt = [a, d](double t, std::span<double> ab) {
          for (int k = 0; k < d; ++k) ab[k] = a[k] * std::cos(t);
          ab[d] = std::sin(t);
        };
        add_pieces(segs, -kPi / 2, kPi / 2, th, dt, nt, group);
      }
    }
  }
  return segs;
}

// Node counts per segment: `total` points per group shared by length.
std::vector<std::size_t> allocate(const std::vector<Segment>& segs, int group, std::size_t total) {
  std::vector<std::size_t> idx;
  double len = 0.0;
  for (std::size_t k = 0; k < segs.size(); ++k)
    if (segs[k].group == group) {
      idx.push_back(k);
      len += segs[k].t1 - segs[k].t0;
    }
  std::vector<std::size_t> n(segs.size(), 0);
  if (idx.empty() || total == 0) return n;
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t k : idx) {
    const double share = total * (segs[k].t1 - segs[k].t0) / len;
    n[k] = static_cast<std::size_t>(std::floor(share));
    used += n[k];
    rem.emplace_back(share - static_cast<double>(n[k]), k);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t r = 0; used < total; ++r, ++used) n[rem[r % rem.size()].second] += 1;
  return n;
}

// Composite Gauss-Legendre with n points on one segment: panels of 4 points,
// the first (n mod 4) panels take a fifth point.
void atomize(const Segment& s, std::size_t n, int dim, ShallowNet& net) {
  if (n == 0) return;
  const std::size_t panels = std::max<std::size_t>(1, n / 4);
  const std::size_t extra = n >= 4 ? n % 4 : 0;
  const double width = (s.t1 - s.t0) / static_cast<double>(panels);
  std::vector<double> ab(dim + 1);
  for (std::size_t p = 0; p < panels; ++p) {
    const std::size_t q = n < 4 ? n : 4 + (p < extra ? 1 : 0);
    const quad::Rule gl = quad::gauss_legendre(q);
    const double lo = s.t0 + width * static_cast<double>(p);
    for (std::size_t j = 0; j < q; ++j) {
      double t = lo + 0.5 * width * (gl.nodes[j] + 1.0);
      for (double e : s.exceptional)
        if (std::abs(t - e) < 1e-12) t += (t < lo + 0.5 * width ? 0.5 : -0.5) * 0.5 * width;
      const double c = 0.5 * width * gl.weights[j] * s.density(t);
      s.node(t, ab);
      net.nodes.push_back(normalized_node(std::span<const double>(ab.data(), dim), ab[dim], c));
    }
  }
}

// |density| per unit t after normalizing the node onto the unit sphere.
double mass(const Segment& s, double t, std::vector<double>& ab) {
  s.node(t, ab);
  double r = 0.0;
  for (double v : ab) r += v * v;
  return std::abs(s.density(t)) * std::sqrt(r);
}

std::uint64_t next_bits(std::mt19937_64& rng) { return rng(); }
double uniform01(std::mt19937_64& rng) { return static_cast<double>(next_bits(rng) >> 11) * 0x1.0p-53; }

// Rejection sampling against a piecewise-constant envelope over all segments.
ShallowNet sample_segments(const std::vector<Segment>& segs, int dim, double norm, std::size_t m, std::uint64_t seed) {
  ShallowNet net;
  net.dim = dim;
  if (m == 0 || segs.empty() || !(norm > 0.0)) return net;
  std::vector<double> ab(dim + 1);
  const std::size_t per = std::clamp<std::size_t>(2048 / segs.size(), 8, 256);
  struct Cell {
    std::size_t seg;
    double lo, hi, height;
  };
  std::vector<Cell> cells;
  std::vector<double> cum;
  double total = 0.0;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const Segment& s = segs[k];
    const double w = (s.t1 - s.t0) / static_cast<double>(per);
    for (std::size_t p = 0; p < per; ++p) {
      const double lo = s.t0 + w * static_cast<double>(p), hi = lo + w;
      double mx = 0.0;
      for (int q = 0; q <= 8; ++q) {
        const double v = mass(s, lo + w * q / 8.0, ab);
        if (std::isfinite(v)) mx = std::max(mx, v);
      }
      if (mx == 0.0) continue;
      cells.push_back({k, lo, hi, 1.25 * mx});
      total += 1.25 * mx * w;
      cum.push_back(total);
    }
  }
  if (cells.empty()) return net;
  std::mt19937_64 rng(seed);
  const double c_abs = norm / static_cast<double>(m);
  const std::size_t max_attempts = 1000 * m + 1000;
  std::size_t attempts = 0, violations = 0;
  while (net.nodes.size() < m) {
    if (++attempts > max_attempts) throw RefusalError("rejection sampler failed: acceptance rate too low");
    const double u = uniform01(rng) * total;
    const std::size_t ci = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin()), cells.size() - 1);
    const Cell& c = cells[ci];
    const double t = c.lo + (c.hi - c.lo) * uniform01(rng);
    const double a = mass(segs[c.seg], t, ab);
    if (a > c.height) ++violations;
    if (uniform01(rng) * c.height >= a) continue;
    const double v = segs[c.seg].density(t);
    NetNode n = normalized_node(std::span<const double>(ab.data(), dim), ab[dim], 1.0);
    n.c = v > 0 ? c_abs : -c_abs;
    net.nodes.push_back(std::move(n));
  }
  if (violations > 0)
    net.warnings.push_back("sampling envelope exceeded " + std::to_string(violations) + " times");
  return net;
}

double segments_l1(const std::vector<Segment>& segs, int dim) {
  quad::Options o;
  o.abs_tol = 1e-12;
  o.rel_tol = 1e-10;
  double total = 0.0;
  std::vector<double> ab(dim + 1);
  for (const Segment& s : segs) {
    auto g = [&s, &ab](double t) { return mass(s, t, ab); };
    total += quad::integrate(g, s.t0, s.t1, o).value;
  }
  return total;
}

}  // namespace

NetNode normalized_node(std::span<const double> a, double b, double c) {
  double r = b * b;
  for (double v : a) r += v * v;
  r = std::sqrt(r);
  if (!(r > 0.0)) throw DomainError("node direction (a, b) must be nonzero");
  NetNode n;
  n.a.resize(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) n.a[k] = a[k] / r;
  n.b = b / r;
  n.c = c * r;
  return n;
}

double eval_net(const ShallowNet& net, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(net.dim)) throw InputError("point dimension does not match the network");
  double s = 0.0;
  for (const NetNode& n : net.nodes) {
    double t = n.b;
    for (int k = 0; k < net.dim; ++k) t += n.a[k] * x[k];
    if (t > 0.0) s += n.c * t;
  }
  return s;
}

std::vector<double> eval_net(const ShallowNet& net, const std::vector<std::vector<double>>& xs) {
  std::vector<double> out(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) { out[i] = eval_net(net, xs[i]); });
  return out;
}

ShallowNet quadrature_net(const CircleWeight& w, std::size_t m) {
  ShallowNet net;
  net.dim = 1;
  if (m < 4) net.warnings.push_back("m too small (m < 4)");
  bool has_struct = false, has_extra = false;
  const auto segs = circle_segments(w, has_struct, has_extra);
  std::size_t m_struct = has_struct ? (has_extra ? m / 2 : m) : 0;
  const std::size_t m_extra = has_extra ? m - m_struct : 0;
  const std::size_t nz = m_struct / 2;  // each z-point gives one node per half
  std::vector<std::size_t> counts(segs.size(), 0);
  for (int g = 0; g < 2; ++g) {
    const auto c = allocate(segs, g, nz);
    for (std::size_t k = 0; k < segs.size(); ++k) counts[k] += c[k];
  }
  const auto ce = allocate(segs, 2, m_extra);
  for (std::size_t k = 0; k < segs.size(); ++k) counts[k] += ce[k];
  for (std::size_t k = 0; k < segs.size(); ++k) atomize(segs[k], counts[k], 1, net);
  return net;
}

ShallowNet quadrature_net(const ChartWeight& w, std::size_t m) {
  ShallowNet net;
  net.dim = w.dim;
  const std::size_t nd = w.dirs.size();
  const std::size_t per = std::max<std::size_t>(4, static_cast<std::size_t>(std::llround(double(m) / double(nd))));
  if (m < 4) net.warnings.push_back("m too small (m < 4)");
  if (per * nd > m + nd) net.warnings.push_back("node count raised to " + std::to_string(per) + " per direction");
  const auto segs = chart_segments(w);
  std::vector<std::size_t> counts(segs.size(), 0);
  for (std::size_t i = 0; i < nd; ++i) {
    const auto c = allocate(segs, static_cast<int>(i), per);
    for (std::size_t k = 0; k < segs.size(); ++k) counts[k] += c[k];
  }
  for (std::size_t k = 0; k < segs.size(); ++k)
    if (segs[k].group == -1) counts[k] = 8;
  for (std::size_t k = 0; k < segs.size(); ++k) atomize(segs[k], counts[k], w.dim, net);
  return net;
}

ShallowNet monte_carlo_net(const CircleWeight& w, std::size_t m, std::uint64_t seed) {
  bool has_struct = false, has_extra = false;
  const auto segs = circle_segments(w, has_struct, has_extra);
  ShallowNet net = sample_segments(segs, 1, segments_l1(segs, 1), m, seed);
  if (m < 4) net.warnings.push_back("m too small (m < 4)");
  return net;
}

ShallowNet monte_carlo_net(const ChartWeight& w, std::size_t m, std::uint64_t seed) {
  const auto segs = chart_segments(w);
  ShallowNet net = sample_segments(segs, w.dim, segments_l1(segs, w.dim), m, seed);
  net.dim = w.dim;
  if (m < 4) net.warnings.push_back("m too small (m < 4)");
  return net;
}

GridSpec parse_grid(const std::string& spec) {
  GridSpec g;
  const auto a = spec.find(':');
  const auto b = a == std::string::npos ? a : spec.find(':', a + 1);
  if (b == std::string::npos) throw InputError("grid must look like lo:hi:n");
  try {
    std::size_t used = 0;
    g.lo = std::stod(spec.substr(0, a), &used);
    if (used != a) throw InputError("");
    g.hi = std::stod(spec.substr(a + 1, b - a - 1), &used);
    if (used != b - a - 1) throw InputError("");
    const std::string ns = spec.substr(b + 1);
    const long n = std::stol(ns, &used);
    if (used != ns.size() || n < 1) throw InputError("");
    g.n = static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw InputError("grid must look like lo:hi:n with lo <= hi and n >= 1");
  }
  if (!(g.lo <= g.hi)) throw InputError("grid must look like lo:hi:n with lo <= hi and n >= 1");
  return g;
}

std::vector<std::vector<double>> grid_points(const GridSpec& g, int dim) {
  if (dim < 1) throw InputError("dimension must be positive");
  std::vector<double> axis(g.n);
  for (std::size_t i = 0; i < g.n; ++i)
    axis[i] = g.n == 1 ? g.lo : g.lo + (g.hi - g.lo) * static_cast<double>(i) / static_cast<double>(g.n - 1);
  std::vector<std::vector<double>> pts;
  std::size_t total = 1;
  for (int k = 0; k < dim; ++k) total *= g.n;
  pts.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::vector<double> p(dim);
    std::size_t r = idx;
    for (int k = dim - 1; k >= 0; --k) {
      p[k] = axis[r % g.n];
      r /= g.n;
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

NetReport error_report(const ShallowNet& net, const std::function<double(std::span<const double>)>& f,
                       const std::vector<std::vector<double>>& points) {
  NetReport r;
  r.node_count = net.nodes.size();
  r.warnings = net.warnings;
  for (const NetNode& n : net.nodes) r.l1_outer += std::abs(n.c);
  const auto v = eval_net(net, points);
  std::vector<double> e(points.size());
  parallel_for(points.size(), [&](std::size_t i) { e[i] = std::abs(v[i] - f(points[i])); });
  double ss = 0.0;
  for (double x : e) {
    r.sup_error = std::max(r.sup_error, x);
    ss += x * x;
  }
  r.l2_error = points.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(points.size()));
  return r;
}

void write_net_report(std::ostream& out, const NetReport& r) {
  out << "node_count=" << r.node_count << "\n";
  out << "sup_error=" << fmt(r.sup_error) << "\n";
  out << "l2_error=" << fmt(r.l2_error) << "\n";
  out << "l1_outer=" << fmt(r.l1_outer) << "\n";
  for (const auto& w : r.warnings) out << "warning=" << w << "\n";
}

void write_net(std::ostream& out, const ShallowNet& net) {
  out << "# ridgenet shallow net\n";
  out << "dim=" << net.dim << "\n";
  out << "activation=" << net.activation << "\n";
  out << "convention=sum_j c_j relu(a_j.x + b_j); |a_j|^2 + b_j^2 = 1; c_j includes quadrature weights\n";
  out << "nodes=" << net.nodes.size() << "\n";
  for (const NetNode& n : net.nodes) {
    for (double v : n.a) out << fmt(v) << " ";
    out << fmt(n.b) << " " << fmt(n.c) << "\n";
  }
}

ShallowNet read_net(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ridgenet shallow net", 0) != 0)
    throw InputError("not a ridgenet network file");
  ShallowNet net;
  std::size_t count = 0;
  bool have_dim = false, have_nodes = false;
  while (!have_nodes && std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("malformed header line: " + line);
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    try {
      if (key == "dim") {
        net.dim = std::stoi(val);
        have_dim = true;
      } else if (key == "activation") {
        net.activation = val;
      } else if (key == "nodes") {
        count = std::stoul(val);
        have_nodes = true;
      }
    } catch (const std::exception&) {
      throw InputError("malformed header value: " + line);
    }
  }
  if (!have_dim || !have_nodes || net.dim < 1) throw InputError("network header needs dim and nodes");
  if (net.activation != "relu") throw InputError("unsupported activation " + net.activation);
  net.nodes.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    if (!std::getline(in, line)) throw InputError("network file truncated");
    std::istringstream is(line);
    std::vector<double> v;
    std::string tok;
    while (is >> tok) {
      char* end = nullptr;
      const double x = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') throw InputError("malformed number in node " + std::to_string(j));
      v.push_back(x);
    }
    if (v.size() != static_cast<std::size_t>(net.dim) + 2) throw InputError("node " + std::to_string(j) + " has wrong width");
    NetNode n;
    n.a.assign(v.begin(), v.begin() + net.dim);
    n.b = v[net.dim];
    n.c = v[net.dim + 1];
    double r = n.b * n.b;
    for (double a : n.a) r += a * a;
    if (std::abs(r - 1.0) > 1e-12) throw InputError("node " + std::to_string(j) + " is not normalized");
    net.nodes.push_back(std::move(n));
  }
  return net;
}

}  // namespace ridgenet
