#include "mlab/symlang.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace mlab {

namespace {

constexpr double kDivGuard = 1e-14;
constexpr double kSignZero = 1e-14;

const std::set<std::string>& unary_functions() {
  static const std::set<std::string> f = {"sin", "cos", "exp", "abs", "sqrt", "sign", "sq"};
  return f;
}

bool is_binary_function(const std::string& s) { return s == "min" || s == "max"; }

bool indexed(const std::string& s, const std::string& stem) {
  if (s.size() <= stem.size() || s.compare(0, stem.size(), stem) != 0) return false;
  if (s[stem.size()] == '0') return false;
  for (std::size_t i = stem.size(); i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

bool known_variable(const std::string& s) {
  return s == "t" || s == "tau" || s == "h" || indexed(s, "x") || indexed(s, "y") || indexed(s, "xi") ||
         indexed(s, "eta");
}

ExprPtr make(ExprNode::Kind k, std::size_t off, std::vector<ExprPtr> args = {}) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->offset = off;
  n->args = std::move(args);
  return n;
}

class Parser {
public:
  explicit Parser(const std::string& s) : s_(s) {}

  ExprPtr parse() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("empty expression", pos_);
    auto e = expr();
    skip();
    if (pos_ < s_.size()) throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
    return e;
  }

private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= s_.size()) throw ParseError(std::string("expected '") + c + "' before end of input", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  ExprPtr expr() {
    auto lhs = term();
    for (;;) {
      skip();
      const std::size_t at = pos_;
      if (accept('+')) lhs = make(ExprNode::Kind::add, at, {lhs, term()});
      else if (accept('-')) lhs = make(ExprNode::Kind::sub, at, {lhs, term()});
      else return lhs;
    }
  }
  ExprPtr term() {
    auto lhs = unary();
    for (;;) {
      skip();
      const std::size_t at = pos_;
      if (accept('*')) lhs = make(ExprNode::Kind::mul, at, {lhs, unary()});
      else if (accept('/')) lhs = make(ExprNode::Kind::div, at, {lhs, unary()});
      else return lhs;
    }
  }
  ExprPtr unary() {
    skip();
    const std::size_t at = pos_;
    if (accept('-')) return make(ExprNode::Kind::negate, at, {unary()});
    if (accept('+')) return unary();
    return power();
  }
  ExprPtr power() {
    auto base = primary();
    skip();
    const std::size_t at = pos_;
    if (accept('^')) return make(ExprNode::Kind::pow, at, {base, unary()});
    return base;
  }
  ExprPtr primary() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    const std::size_t at = pos_;
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string id;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        id += s_[pos_++];
      skip();
      if (pos_ < s_.size() && s_[pos_] == '(') {
        const bool unary_fn = unary_functions().count(id) > 0;
        if (!unary_fn && !is_binary_function(id)) throw ParseError("unknown function '" + id + "'", at);
        ++pos_;
        std::vector<ExprPtr> args{expr()};
        while (accept(',')) args.push_back(expr());
        expect(')');
        const std::size_t want = unary_fn ? 1 : 2;
        if (args.size() != want)
          throw ParseError("function '" + id + "' takes " + std::to_string(want) + " argument(s)", at);
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprNode::Kind::call;
        n->name = id;
        n->offset = at;
        n->args = std::move(args);
        return n;
      }
      if (id == "i") return make(ExprNode::Kind::imag_unit, at);
      if (id == "pi") {
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprNode::Kind::number;
        n->value = std::numbers::pi;
        n->offset = at;
        return n;
      }
      if (!known_variable(id)) throw ParseError("unknown identifier '" + id + "'", at);
      auto n = std::make_shared<ExprNode>();
      n->kind = ExprNode::Kind::variable;
      n->name = id;
      n->offset = at;
      return n;
    }
    throw ParseError(std::string("unexpected '") + c + "'", at);
  }
  ExprPtr number() {
    const std::size_t at = pos_;
    std::size_t end = pos_;
    while (end < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[end])) || s_[end] == '.')) ++end;
    if (end < s_.size() && (s_[end] == 'e' || s_[end] == 'E')) {
      std::size_t e = end + 1;
      if (e < s_.size() && (s_[e] == '+' || s_[e] == '-')) ++e;
      if (e < s_.size() && std::isdigit(static_cast<unsigned char>(s_[e]))) {
        while (e < s_.size() && std::isdigit(static_cast<unsigned char>(s_[e]))) ++e;
        end = e;
      }
    }
    double v = 0.0;
    auto r = std::from_chars(s_.data() + at, s_.data() + end, v);
    if (r.ec != std::errc() || r.ptr != s_.data() + end) throw ParseError("malformed number", at);
    pos_ = end;
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::number;
    n->value = v;
    n->offset = at;
    return n;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

void collect(const ExprNode& n, std::set<std::string>& out) {
  if (n.kind == ExprNode::Kind::variable && n.name != "h") out.insert(n.name);
  for (const auto& a : n.args) collect(*a, out);
}

std::string fmt_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string print_node(const ExprNode& n) {
  using K = ExprNode::Kind;
  auto bin = [&](const char* op) {
    return "(" + print_node(*n.args[0]) + " " + op + " " + print_node(*n.args[1]) + ")";
  };
  switch (n.kind) {
    case K::number: return fmt_number(n.value);
    case K::variable: return n.name;
    case K::imag_unit: return "i";
    case K::negate: return "(-" + print_node(*n.args[0]) + ")";
    case K::add: return bin("+");
    case K::sub: return bin("-");
    case K::mul: return bin("*");
    case K::div: return bin("/");
    case K::pow: return bin("^");
    case K::call: {
      std::string s = n.name + "(";
      for (std::size_t k = 0; k < n.args.size(); ++k) s += (k ? ", " : "") + print_node(*n.args[k]);
      return s + ")";
    }
  }
  return "";
}

// Integer powers by repeated multiplication so that polynomial symbols are exact.
cd power(cd b, cd e) {
  if (e.imag() == 0.0 && e.real() == std::round(e.real()) && std::abs(e.real()) <= 64) {
    int k = static_cast<int>(e.real());
    cd r = 1.0;
    const cd base = k < 0 ? 1.0 / b : b;
    for (int j = 0; j < std::abs(k); ++j) r *= base;
    return r;
  }
  return std::pow(b, e);
}

double real_arg(cd z, const std::string& fn) {
  if (std::abs(z.imag()) > 1e-12 * std::max(1.0, std::abs(z.real())))
    throw Error("symlang: " + fn + " needs a real argument");
  return z.real();
}

cd apply_unary(const std::string& f, cd z) {
  if (f == "sin") return std::sin(z);
  if (f == "cos") return std::cos(z);
  if (f == "exp") return std::exp(z);
  if (f == "abs") return std::abs(z);
  if (f == "sqrt") return std::sqrt(z);
  if (f == "sq") return z * z;
  if (f == "sign") {
    const double r = real_arg(z, "sign");
    return r > kSignZero ? 1.0 : (r < -kSignZero ? -1.0 : 0.0);
  }
  throw Error("symlang: unknown function " + f);
}

cd apply_binary(const std::string& f, cd a, cd b) {
  const double x = real_arg(a, f), y = real_arg(b, f);
  return f == "min" ? std::min(x, y) : std::max(x, y);
}

cd divide(cd a, cd b) {
  if (std::abs(b) < kDivGuard) throw Error("symlang: division guard tripped (|denominator| < 1e-14)");
  return a / b;
}

cd eval_rec(const ExprNode& n, const std::map<std::string, cd>& vars) {
  using K = ExprNode::Kind;
  switch (n.kind) {
    case K::number: return n.value;
    case K::imag_unit: return cd(0.0, 1.0);
    case K::variable: {
      auto it = vars.find(n.name);
      if (it == vars.end()) throw Error("symlang: unresolved variable '" + n.name + "'");
      return it->second;
    }
    case K::negate: return -eval_rec(*n.args[0], vars);
    case K::add: return eval_rec(*n.args[0], vars) + eval_rec(*n.args[1], vars);
    case K::sub: return eval_rec(*n.args[0], vars) - eval_rec(*n.args[1], vars);
    case K::mul: return eval_rec(*n.args[0], vars) * eval_rec(*n.args[1], vars);
    case K::div: return divide(eval_rec(*n.args[0], vars), eval_rec(*n.args[1], vars));
    case K::pow: return power(eval_rec(*n.args[0], vars), eval_rec(*n.args[1], vars));
    case K::call:
      if (n.args.size() == 1) return apply_unary(n.name, eval_rec(*n.args[0], vars));
      return apply_binary(n.name, eval_rec(*n.args[0], vars), eval_rec(*n.args[1], vars));
  }
  return 0.0;
}

// Field-valued evaluation; each subtree yields a field over the axes it uses.
SymbolField eval_field(const ExprNode& n, const GridPtr& g) {
  using K = ExprNode::Kind;
  switch (n.kind) {
    case K::number: return SymbolField::constant(g, n.value);
    case K::imag_unit: return SymbolField::constant(g, cd(0.0, 1.0));
    case K::variable: {
      if (n.name == "h") return SymbolField::constant(g, g->h());
      const int a = g->axis_index(n.name);
      if (a < 0) throw Error("symlang: unresolved variable '" + n.name + "' (not an axis of the grid)");
      return SymbolField::sample(g, 1u << a, [a](const std::vector<double>& z) { return cd(z[a]); });
    }
    case K::negate: return eval_field(*n.args[0], g).map([](cd z) { return -z; });
    case K::add: return eval_field(*n.args[0], g) + eval_field(*n.args[1], g);
    case K::sub: return eval_field(*n.args[0], g) - eval_field(*n.args[1], g);
    case K::mul: return eval_field(*n.args[0], g) * eval_field(*n.args[1], g);
    case K::div: return combine(eval_field(*n.args[0], g), eval_field(*n.args[1], g), divide);
    case K::pow: return combine(eval_field(*n.args[0], g), eval_field(*n.args[1], g), power);
    case K::call: {
      if (n.args.size() == 1) {
        const std::string f = n.name;
        return eval_field(*n.args[0], g).map([&f](cd z) { return apply_unary(f, z); });
      }
      const std::string f = n.name;
      return combine(eval_field(*n.args[0], g), eval_field(*n.args[1], g),
                     [&f](cd a, cd b) { return apply_binary(f, a, b); });
    }
  }
  return SymbolField::constant(g, 0.0);
}

}  // namespace

bool ExprNode::same_tree(const ExprNode& o) const {
  if (kind != o.kind || args.size() != o.args.size()) return false;
  if (kind == Kind::number && value != o.value) return false;
  if ((kind == Kind::variable || kind == Kind::call) && name != o.name) return false;
  for (std::size_t k = 0; k < args.size(); ++k)
    if (!args[k]->same_tree(*o.args[k])) return false;
  return true;
}

std::set<std::string> SymbolExpr::variables() const {
  std::set<std::string> out;
  if (root_) collect(*root_, out);
  return out;
}

std::string SymbolExpr::print() const { return root_ ? print_node(*root_) : ""; }

SymbolExpr parse_expr(const std::string& text) { return SymbolExpr(Parser(text).parse(), text); }

SymbolField eval_on_grid(const SymbolExpr& e, const GridPtr& grid) {
  for (const auto& v : e.variables())
    if (grid->axis_index(v) < 0) throw Error("symlang: unresolved variable '" + v + "' (not an axis of the grid)");
  return eval_field(e.root(), grid);
}

cd eval_point(const SymbolExpr& e, const std::map<std::string, cd>& vars) { return eval_rec(e.root(), vars); }

}  // namespace mlab
