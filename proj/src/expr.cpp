#include "ridgenet/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <numbers>

namespace ridgenet::expr {

namespace {

class Parser {
 public:
  Parser(std::string_view text, int dim) : s_(text), dim_(dim) { ast_.dim = dim; }

  Ast run() {
    if (dim_ < 1 || dim_ > 9) throw ParseError("dimension must be in 1..9", 0);
    expression();
    skip();
    if (pos_ != s_.size()) throw ParseError("unexpected character", pos_);
    return std::move(ast_);
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  int dim_;
  Ast ast_;

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  bool accept(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }
  void expect(char c) {
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  int push(Node n) {
    ast_.nodes.push_back(n);
    return ast_.root();
  }
  int binary(Op op, int a, int b) {
    Node n;
    n.op = op;
    n.lhs = a;
    n.rhs = b;
    return push(n);
  }
  int unary_node(Op op, int a) { return binary(op, a, -1); }

  int expression() {
    int lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = binary(Op::Add, lhs, term());
      } else if (accept('-')) {
        lhs = binary(Op::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  int term() {
    int lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = binary(Op::Mul, lhs, unary());
      } else if (peek('/')) {
        const std::size_t at = pos_;
        ++pos_;
        const int rhs = unary();
        if (constant_zero(rhs)) throw ParseError("division by a constant zero", at);
        lhs = binary(Op::Div, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  int unary() {
    if (accept('-')) return unary_node(Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  int power() {
    const int base = primary();
    if (!accept('^')) return base;
    skip();
    const int e = exponent();
    if (peek('^')) throw ParseError("chained '^' is ambiguous; use parentheses", pos_);
    Node n;
    n.op = Op::Pow;
    n.lhs = base;
    n.index = e;
    return push(n);
  }

  int exponent() {
    const bool paren = accept('(');
    int sign = 1;
    if (accept('-')) {
      sign = -1;
    } else {
      accept('+');
    }
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ == start) throw ParseError("exponent must be an integer", start);
    if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E'))
      throw ParseError("exponent must be an integer", start);
    if (pos_ - start > 4) throw ParseError("exponent too large", start);
    const int v = std::atoi(std::string(s_.substr(start, pos_ - start)).c_str());
    if (paren) expect(')');
    return sign * v;
  }

  double number() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    if (pos_ == start || (pos_ == start + 1 && s_[start] == '.'))
      throw ParseError("expected a number", start);
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      const std::size_t digits = p;
      while (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) ++p;
      if (p == digits) throw ParseError("malformed exponent", pos_);
      pos_ = p;
    }
    return std::strtod(std::string(s_.substr(start, pos_ - start)).c_str(), nullptr);
  }

  int primary() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      const int e = expression();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      Node n;
      n.op = Op::Const;
      n.value = number();
      return push(n);
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) throw ParseError("unexpected character", pos_);
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    const std::string id(s_.substr(start, pos_ - start));
    if (id == "pi") {
      Node n;
      n.op = Op::Pi;
      return push(n);
    }
    if (id.size() == 2 && id[0] == 'x' && id[1] >= '1' && id[1] <= '9') {
      const int k = id[1] - '1';
      if (k >= dim_) throw ParseError("variable " + id + " exceeds dimension " + std::to_string(dim_), start);
      Node n;
      n.op = Op::Var;
      n.index = k;
      return push(n);
    }
    if (id == "bump") return bump(start);
    static const std::pair<const char*, Op> funcs[] = {{"exp", Op::Exp},   {"sin", Op::Sin},
                                                       {"cos", Op::Cos},   {"atan", Op::Atan},
                                                       {"sqrt", Op::Sqrt}, {"abs", Op::Abs}};
    for (const auto& [name, op] : funcs) {
      if (id != name) continue;
      if (!peek('(')) throw ParseError("expected '(' after " + id, pos_);
      ++pos_;
      const int arg = expression();
      if (peek(',')) throw ParseError(id + " takes one argument", pos_);
      expect(')');
      return unary_node(op, arg);
    }
    throw ParseError("unknown identifier '" + id + "'", start);
  }

  int bump(std::size_t at) {
    expect('(');
    skip();
    if (peek(')')) throw ParseError("bump takes one argument", pos_);
    const std::size_t arg = pos_;
    if (pos_ >= s_.size() || !(std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
      throw ParseError("bump radius must be a positive number literal", arg);
    const double r = number();
    if (peek(',')) throw ParseError("bump takes one argument", pos_);
    expect(')');
    if (!(r > 0.0) || !std::isfinite(r)) throw ParseError("bump radius must be positive", at);
    Node n;
    n.op = Op::Bump;
    n.value = r;
    return push(n);
  }

  bool constant_zero(int i) const {
    // A subtree is constant if it references no variables or bumps.
    bool has_var = false;
    std::vector<int> stack{i};
    while (!stack.empty()) {
      const Node& n = ast_.nodes[stack.back()];
      stack.pop_back();
      if (n.op == Op::Var || n.op == Op::Bump) has_var = true;
      if (n.lhs >= 0) stack.push_back(n.lhs);
      if (n.rhs >= 0) stack.push_back(n.rhs);
    }
    if (has_var) return false;
    Ast sub;
    sub.dim = ast_.dim;
    sub.nodes.assign(ast_.nodes.begin(), ast_.nodes.begin() + i + 1);
    const std::vector<double> x(static_cast<std::size_t>(ast_.dim), 0.0);
    try {
      return eval<double>(sub, x) == 0.0;
    } catch (const DomainError&) {
      return false;
    }
  }
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_node(const Ast& a, int i, std::string& out) {
  const Node& n = a.nodes[i];
  auto sub = [&](int k) { print_node(a, k, out); };
  auto bin = [&](const char* op) {
    out += '(';
    sub(n.lhs);
    out += op;
    sub(n.rhs);
    out += ')';
  };
  auto fn = [&](const char* name) {
    out += name;
    out += '(';
    sub(n.lhs);
    out += ')';
  };
  switch (n.op) {
    case Op::Const: out += fmt(n.value); break;
    case Op::Pi: out += "pi"; break;
    case Op::Var: out += "x" + std::to_string(n.index + 1); break;
    case Op::Neg:
      out += "(-";
      sub(n.lhs);
      out += ')';
      break;
    case Op::Exp: fn("exp"); break;
    case Op::Sin: fn("sin"); break;
    case Op::Cos: fn("cos"); break;
    case Op::Atan: fn("atan"); break;
    case Op::Sqrt: fn("sqrt"); break;
    case Op::Abs: fn("abs"); break;
    case Op::Add: bin("+"); break;
    case Op::Sub: bin("-"); break;
    case Op::Mul: bin("*"); break;
    case Op::Div: bin("/"); break;
    case Op::Pow:
      out += '(';
      sub(n.lhs);
      out += n.index < 0 ? "^(" + std::to_string(n.index) + "))" : "^" + std::to_string(n.index) + ")";
      break;
    case Op::Bump: out += "bump(" + fmt(n.value) + ")"; break;
  }
}

template <class T>
T ipow(T b, int e) {
  T r = 1;
  unsigned u = static_cast<unsigned>(e < 0 ? -e : e);
  while (u) {
    if (u & 1u) r *= b;
    u >>= 1u;
    if (u) b *= b;
  }
  return e < 0 ? T(1) / r : r;
}

}  // namespace

Ast parse(std::string_view text, int dim) { return Parser(text, dim).run(); }

std::string print(const Ast& ast) {
  std::string out;
  if (!ast.nodes.empty()) print_node(ast, ast.root(), out);
  return out;
}

int depth(const Ast& ast) {
  std::vector<int> d(ast.nodes.size(), 0);
  for (std::size_t i = 0; i < ast.nodes.size(); ++i) {
    const Node& n = ast.nodes[i];
    if (n.lhs >= 0) d[i] = std::max(d[i], d[n.lhs] + 1);
    if (n.rhs >= 0) d[i] = std::max(d[i], d[n.rhs] + 1);
  }
  return ast.nodes.empty() ? 0 : d.back();
}

std::optional<double> support_radius(const Ast& ast) {
  std::vector<std::optional<double>> s(ast.nodes.size());
  for (std::size_t i = 0; i < ast.nodes.size(); ++i) {
    const Node& n = ast.nodes[i];
    switch (n.op) {
      case Op::Const:
        if (n.value == 0.0) s[i] = 0.0;
        break;
      case Op::Bump: s[i] = n.value; break;
      // odd functions vanishing at 0 keep the operand's support
      case Op::Neg:
      case Op::Sin:
      case Op::Atan:
      case Op::Sqrt:
      case Op::Abs: s[i] = s[n.lhs]; break;
      case Op::Pow:
        if (n.index > 0) s[i] = s[n.lhs];
        break;
      case Op::Add:
      case Op::Sub:
        if (s[n.lhs] && s[n.rhs]) s[i] = std::max(*s[n.lhs], *s[n.rhs]);
        break;
      case Op::Mul:
        if (s[n.lhs] && s[n.rhs]) {
          s[i] = std::min(*s[n.lhs], *s[n.rhs]);
        } else if (s[n.lhs]) {
          s[i] = s[n.lhs];
        } else if (s[n.rhs]) {
          s[i] = s[n.rhs];
        }
        break;
      case Op::Div: s[i] = s[n.lhs]; break;
      default: break;
    }
  }
  if (ast.nodes.empty()) return std::nullopt;
  return s.back();
}

int smoothness(const Ast& ast) {
  for (const Node& n : ast.nodes)
    if (n.op == Op::Abs || n.op == Op::Sqrt) return 0;
  return kSmooth;
}

template <class T>
T eval(const Ast& ast, std::span<const T> x) {
  std::vector<T> v(ast.nodes.size());
  for (std::size_t i = 0; i < ast.nodes.size(); ++i) {
    const Node& n = ast.nodes[i];
    const T a = n.lhs >= 0 ? v[n.lhs] : T(0);
    const T b = n.rhs >= 0 ? v[n.rhs] : T(0);
    T r = 0;
    switch (n.op) {
      case Op::Const: r = static_cast<T>(n.value); break;
      case Op::Pi: r = std::numbers::pi_v<T>; break;
      case Op::Var: r = x[n.index]; break;
      case Op::Neg: r = -a; break;
      case Op::Exp: r = std::exp(a); break;
      case Op::Sin: r = std::sin(a); break;
      case Op::Cos: r = std::cos(a); break;
      case Op::Atan: r = std::atan(a); break;
      case Op::Sqrt:
        if (a < 0) throw DomainError("sqrt of a negative quantity");
        r = std::sqrt(a);
        break;
      case Op::Abs: r = std::abs(a); break;
      case Op::Add: r = a + b; break;
      case Op::Sub: r = a - b; break;
      case Op::Mul: r = a * b; break;
      case Op::Div:
        if (b == 0) throw DomainError("division by zero");
        r = a / b;
        break;
      case Op::Pow:
        if (n.index < 0 && a == 0) throw DomainError("negative power of zero");
        r = ipow(a, n.index);
        break;
      case Op::Bump: {
        T q = 0;
        for (int k = 0; k < ast.dim; ++k) q += x[k] * x[k];
        const T rr = static_cast<T>(n.value) * static_cast<T>(n.value);
        const T u = 1 - q / rr;
        r = u > 0 ? std::exp(-1 / u) : T(0);
        break;
      }
    }
    v[i] = r;
  }
  return v.empty() ? T(0) : v.back();
}

template double eval<double>(const Ast&, std::span<const double>);
template long double eval<long double>(const Ast&, std::span<const long double>);

Jet JetEvaluator::operator()(std::span<const double> x0, std::span<const double> v, int order) {
  return eval_jet(*ast_, x0, v, order, scratch_);
}

Jet eval_jet(const Ast& ast, std::span<const double> x0, std::span<const double> v, int order,
             std::vector<Jet>& j) {
  if (j.size() < ast.nodes.size()) j.resize(ast.nodes.size());
  for (std::size_t i = 0; i < ast.nodes.size(); ++i) {
    const Node& n = ast.nodes[i];
    switch (n.op) {
      case Op::Const: j[i] = Jet::constant(n.value, order); break;
      case Op::Pi: j[i] = Jet::constant(std::numbers::pi, order); break;
      case Op::Var: j[i] = Jet::variable(x0[n.index], v[n.index], order); break;
      case Op::Neg: j[i] = -j[n.lhs]; break;
      case Op::Exp: j[i] = exp(j[n.lhs]); break;
      case Op::Sin: j[i] = sin(j[n.lhs]); break;
      case Op::Cos: j[i] = cos(j[n.lhs]); break;
      case Op::Atan: j[i] = atan(j[n.lhs]); break;
      case Op::Sqrt: j[i] = sqrt(j[n.lhs]); break;
      case Op::Abs: j[i] = abs(j[n.lhs]); break;
      case Op::Add: j[i] = j[n.lhs] + j[n.rhs]; break;
      case Op::Sub: j[i] = j[n.lhs] - j[n.rhs]; break;
      case Op::Mul: j[i] = j[n.lhs] * j[n.rhs]; break;
      case Op::Div: j[i] = j[n.lhs] / j[n.rhs]; break;
      case Op::Pow: j[i] = pow(j[n.lhs], n.index); break;
      case Op::Bump: {
        // q(t) = |x0 + t v|^2 is an exact quadratic in t
        double xx = 0.0, xv = 0.0, vv = 0.0;
        for (int k = 0; k < ast.dim; ++k) {
          xx += x0[k] * x0[k];
          xv += x0[k] * v[k];
          vv += v[k] * v[k];
        }
        const double rr = n.value * n.value;
        Jet u(order);
        u[0] = 1.0 - xx / rr;
        if (u[0] <= 0.0) {
          j[i] = Jet(order);
          break;
        }
        if (order >= 1) u[1] = -2.0 * xv / rr;
        if (order >= 2) u[2] = -vv / rr;
        j[i] = exp(-(Jet::constant(1.0, order) / u));
        break;
      }
    }
  }
  return ast.nodes.empty() ? Jet(order) : j.back();
}

Jet eval_jet(const Ast& ast, std::span<const double> x0, std::span<const double> v, int order) {
  if (order < 0 || order > kMaxJetOrder) throw InputError("jet order out of range");
  if (x0.size() != static_cast<std::size_t>(ast.dim) || v.size() != static_cast<std::size_t>(ast.dim))
    throw InputError("point and direction must have the expression's dimension");
  JetEvaluator e(ast);
  return e(x0, v, order);
}

}  // namespace ridgenet::expr
