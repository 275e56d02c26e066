#include "matineq/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace matineq::dsl {

namespace {

const std::set<std::string> kKeywords = {"gm", "lam", "sig", "sqrt", "inv", "t", "loewner"};
const std::string kSharp = "\xE2\x99\xAF";  // U+266F
constexpr int kMaxDepth = 200;

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::shared_ptr<Expr> node(Kind k, std::size_t pos, std::vector<ExprPtr> args = {}) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->position = pos;
  e->args = std::move(args);
  return e;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(const std::vector<Token>& toks) : toks_(toks) {
    if (toks_.empty() || toks_.back().kind != TokenKind::End) throw SyntaxError("token stream lacks an end marker", 0);
  }

  Statement statement() {
    Statement s;
    s.lhs = expr();
    const Token& op = peek();
    if (!(op.kind == TokenKind::Operator && op.text == ">=")) fail("expected '>=' or '>=loewner'");
    advance();
    if (peek().kind == TokenKind::Keyword && peek().text == "loewner") {
      advance();
      s.relation = Relation::LoewnerGeq;
    }
    s.rhs = expr();
    if (peek().kind != TokenKind::End) fail("expected end of statement");
    return s;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& advance() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }
  bool at(TokenKind k, const char* text) const { return peek().kind == k && peek().text == text; }

  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = peek();
    const std::string found = t.kind == TokenKind::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(what + ", found " + found, t.position);
  }

  void expect(TokenKind k, const char* text) {
    if (!at(k, text)) fail(std::string("expected '") + text + "'");
    advance();
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p_(p) {
      if (++p_.depth_ > kMaxDepth) throw SyntaxError("expression nested too deeply", p_.peek().position);
    }
    ~DepthGuard() { --p_.depth_; }
    Parser& p_;
  };

  ExprPtr expr() {
    DepthGuard g(*this);
    ExprPtr lhs = term();
    while (at(TokenKind::Operator, "+") || at(TokenKind::Operator, "-")) {
      const Token op = advance();
      lhs = node(op.text == "+" ? Kind::Add : Kind::Sub, op.position, {lhs, term()});
    }
    return lhs;
  }

  ExprPtr term() {
    ExprPtr lhs = unary();
    for (;;) {
      if (at(TokenKind::Operator, "*")) {
        const Token op = advance();
        lhs = node(Kind::Mul, op.position, {lhs, unary()});
      } else if (at(TokenKind::Operator, kSharp.c_str())) {
        const Token op = advance();
        lhs = node(Kind::Gm, op.position, {lhs, unary()});
      } else {
        return lhs;
      }
    }
  }

  ExprPtr unary() {
    DepthGuard g(*this);
    if (at(TokenKind::Operator, "-")) {
      const Token op = advance();
      if (peek().kind == TokenKind::Number) return postfix(number(true, op.position));
      return node(Kind::Neg, op.position, {unary()});
    }
    return postfix(primary());
  }

  ExprPtr postfix(ExprPtr base) {
    for (;;) {
      if (at(TokenKind::Operator, "^")) {
        const Token op = advance();
        base = node(Kind::Power, op.position, {base, exponent()});
      } else if (at(TokenKind::Operator, "'")) {
        const Token op = advance();
        base = node(Kind::Adjoint, op.position, {base});
      } else {
        return base;
      }
    }
  }

  ExprPtr exponent() {
    if (at(TokenKind::Operator, "-")) {
      const Token op = advance();
      if (peek().kind != TokenKind::Number) fail("expected a number after '-' in an exponent");
      return number(true, op.position);
    }
    if (peek().kind == TokenKind::Number) return number(false, peek().position);
    if (at(TokenKind::Keyword, "t")) return node(Kind::ParamT, advance().position);
    if (at(TokenKind::Paren, "(")) {
      advance();
      ExprPtr e = expr();
      expect(TokenKind::Paren, ")");
      return e;
    }
    fail("expected an exponent (number, t or parenthesized expression)");
  }

  ExprPtr number(bool negate, std::size_t pos) {
    const Token& tok = advance();
    double v = 0.0;
    const char* first = tok.text.data();
    const char* last = first + tok.text.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw SyntaxError("number out of range '" + tok.text + "'", tok.position);
    auto e = node(Kind::ScalarLit, pos);
    e->value = negate ? -v : v;
    return e;
  }

  ExprPtr primary() {
    DepthGuard g(*this);
    const Token& tok = peek();
    switch (tok.kind) {
      case TokenKind::Number:
        return number(false, tok.position);
      case TokenKind::Identifier: {
        auto e = node(Kind::MatVar, tok.position);
        e->name = tok.text;
        advance();
        return e;
      }
      case TokenKind::Keyword: {
        if (tok.text == "t") return node(Kind::ParamT, advance().position);
        if (tok.text == "loewner") fail("'loewner' may only follow '>='");
        return call();
      }
      case TokenKind::Paren:
        if (tok.text == "(") {
          advance();
          ExprPtr e = expr();
          expect(TokenKind::Paren, ")");
          return e;
        }
        break;
      default:
        break;
    }
    fail("expected an expression");
  }

  ExprPtr call() {
    const Token fn = advance();
    static const std::map<std::string, Kind> kinds = {
        {"gm", Kind::Gm}, {"lam", Kind::Lam}, {"sig", Kind::Sig}, {"sqrt", Kind::Sqrt}, {"inv", Kind::Inv}};
    const Kind k = kinds.at(fn.text);
    const std::size_t arity = k == Kind::Gm ? 2 : 1;
    expect(TokenKind::Paren, "(");
    std::vector<ExprPtr> args{expr()};
    while (peek().kind == TokenKind::Comma) {
      advance();
      args.push_back(expr());
    }
    if (args.size() != arity)
      throw SyntaxError(fn.text + " takes " + std::to_string(arity) + " argument" + (arity == 1 ? "" : "s") +
                            ", got " + std::to_string(args.size()),
                        fn.position);
    expect(TokenKind::Paren, ")");
    return node(k, fn.position, std::move(args));
  }

  const std::vector<Token>& toks_;
  std::size_t i_ = 0;
  int depth_ = 0;
};

// ---------------------------------------------------------------------------
// Type checking

const char* sort_name(Type t) {
  switch (t) {
    case Type::Scalar: return "scalar";
    case Type::Matrix: return "matrix";
    case Type::Vector: return "vector";
    default: return "unknown";
  }
}

ExprPtr resolve(const ExprPtr& e) {
  auto out = std::make_shared<Expr>(*e);
  for (auto& a : out->args) a = resolve(a);
  auto arg = [&](std::size_t i) { return out->args[i]->type; };
  auto bad = [&](const std::string& what) -> void { throw TypeError(what, e->position); };
  auto want = [&](std::size_t i, Type t, const char* ctx) {
    if (arg(i) != t)
      bad(std::string(ctx) + " expects a " + sort_name(t) + " argument, got a " + sort_name(arg(i)));
  };

  switch (e->kind) {
    case Kind::MatVar: out->type = Type::Matrix; break;
    case Kind::ScalarLit:
    case Kind::ParamT: out->type = Type::Scalar; break;
    case Kind::Add:
    case Kind::Sub:
      if (arg(0) != arg(1))
        bad(std::string("cannot ") + (e->kind == Kind::Add ? "add" : "subtract") + " a " + sort_name(arg(0)) +
            " and a " + sort_name(arg(1)));
      out->type = arg(0);
      break;
    case Kind::Neg: out->type = arg(0); break;
    case Kind::Mul:
    case Kind::ScalarMul:
    case Kind::MatMul:
    case Kind::VecScale: {
      const Type a = arg(0), b = arg(1);
      if (a == Type::Scalar && b == Type::Scalar) {
        out->kind = Kind::Mul;
        out->type = Type::Scalar;
      } else if (a == Type::Matrix && b == Type::Matrix) {
        out->kind = Kind::MatMul;
        out->type = Type::Matrix;
      } else if ((a == Type::Scalar && b == Type::Matrix) || (a == Type::Matrix && b == Type::Scalar)) {
        out->kind = Kind::ScalarMul;
        out->type = Type::Matrix;
      } else if ((a == Type::Scalar && b == Type::Vector) || (a == Type::Vector && b == Type::Scalar)) {
        out->kind = Kind::VecScale;
        out->type = Type::Vector;
      } else {
        bad(std::string("cannot multiply a ") + sort_name(a) + " by a " + sort_name(b));
      }
      break;
    }
    case Kind::Adjoint: want(0, Type::Matrix, "adjoint"); out->type = Type::Matrix; break;
    case Kind::Power:
      want(0, Type::Matrix, "power");
      if (arg(1) != Type::Scalar) bad("exponent must be a scalar");
      out->type = Type::Matrix;
      break;
    case Kind::Gm:
      want(0, Type::Matrix, "gm");
      want(1, Type::Matrix, "gm");
      out->type = Type::Matrix;
      break;
    case Kind::Inv: want(0, Type::Matrix, "inv"); out->type = Type::Matrix; break;
    case Kind::Lam: want(0, Type::Matrix, "lam"); out->type = Type::Vector; break;
    case Kind::Sig: want(0, Type::Matrix, "sig"); out->type = Type::Vector; break;
    case Kind::Sqrt:
    case Kind::VecSqrt:
    case Kind::MatSqrt:
      if (arg(0) == Type::Vector) {
        out->kind = Kind::VecSqrt;
        out->type = Type::Vector;
      } else if (arg(0) == Type::Matrix) {
        out->kind = Kind::MatSqrt;
        out->type = Type::Matrix;
      } else {
        bad("sqrt expects a vector or matrix argument, got a scalar");
      }
      break;
  }
  return out;
}

void walk(const Expr& e, const std::function<void(const Expr&)>& f) {
  f(e);
  for (const auto& a : e.args) walk(*a, f);
}

// ---------------------------------------------------------------------------
// Printing

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

int precedence(const Expr& e) {
  switch (e.kind) {
    case Kind::Add:
    case Kind::Sub: return 1;
    case Kind::Mul:
    case Kind::ScalarMul:
    case Kind::MatMul:
    case Kind::VecScale: return 2;
    case Kind::Neg: return 3;
    case Kind::ScalarLit: return std::signbit(e.value) ? 3 : 5;
    case Kind::Adjoint:
    case Kind::Power: return 4;
    default: return 5;
  }
}

std::string wrap(const Expr& e, int level) {
  const std::string s = print(e);
  return precedence(e) < level ? "(" + s + ")" : s;
}

// ---------------------------------------------------------------------------
// Evaluation

bool is_hermitian(const Matrix& m) {
  if (m.rows() != m.cols() || m.size() == 0) return false;
  // Products such as S*inv(A)*S are Hermitian only up to rounding amplified
  // by the condition number of A.
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-8 * scale;
}

struct MatVal {
  Matrix m;
  std::shared_ptr<const Psd> psd;  // known PSD certificate, if any

  // PSD view of the value, or null when it is not Hermitian PSD.
  std::shared_ptr<const Psd> try_psd() const {
    if (psd) return psd;
    if (!is_hermitian(m)) return nullptr;
    try {
      return std::make_shared<const Psd>(Hermitian(m));
    } catch (const DomainError&) {
      return nullptr;
    }
  }
  std::shared_ptr<const Psd> require_psd(const char* who) const {
    auto p = try_psd();
    if (!p) throw DomainError(std::string("dsl: ") + who + " requires a positive semidefinite argument");
    return p;
  }
};

class Evaluator {
 public:
  Evaluator(const Bindings& b, double t, double tol) : bindings_(b), t_(t), tol_(tol) {}

  double scalar(const Expr& e) const {
    switch (e.kind) {
      case Kind::ScalarLit: return e.value;
      case Kind::ParamT: return t_;
      case Kind::Add: return scalar(*e.args[0]) + scalar(*e.args[1]);
      case Kind::Sub: return scalar(*e.args[0]) - scalar(*e.args[1]);
      case Kind::Mul: return scalar(*e.args[0]) * scalar(*e.args[1]);
      case Kind::Neg: return -scalar(*e.args[0]);
      default: throw TypeError("expected a scalar expression", e.position);
    }
  }

  MatVal matrix(const Expr& e) const {
    switch (e.kind) {
      case Kind::MatVar: {
        const auto it = bindings_.find(e.name);
        if (it == bindings_.end()) throw DomainError("unbound variable '" + e.name + "'");
        return {it->second, nullptr};
      }
      case Kind::Add:
      case Kind::Sub: {
        const MatVal a = matrix(*e.args[0]), b = matrix(*e.args[1]);
        same_shape(a.m, b.m, e.kind == Kind::Add ? "+" : "-");
        return {e.kind == Kind::Add ? Matrix(a.m + b.m) : Matrix(a.m - b.m), nullptr};
      }
      case Kind::Neg: return {-matrix(*e.args[0]).m, nullptr};
      case Kind::ScalarMul: {
        const bool scalar_first = e.args[0]->type == Type::Scalar;
        const double s = scalar(*e.args[scalar_first ? 0 : 1]);
        const Matrix m = matrix(*e.args[scalar_first ? 1 : 0]).m;
        return {scalar_first ? Matrix(s * m) : Matrix(m * s), nullptr};
      }
      case Kind::MatMul: {
        const MatVal a = matrix(*e.args[0]), b = matrix(*e.args[1]);
        if (a.m.cols() != b.m.rows()) throw DimensionMismatch("dsl: inner dimensions of '*' differ");
        return {a.m * b.m, nullptr};
      }
      case Kind::Adjoint: return {matrix(*e.args[0]).m.adjoint(), nullptr};
      case Kind::Power: {
        const MatVal base = matrix(*e.args[0]);
        auto p = std::make_shared<const Psd>(matrix_power(*base.require_psd("power"), scalar(*e.args[1])));
        return {p->matrix(), p};
      }
      case Kind::MatSqrt: {
        const MatVal base = matrix(*e.args[0]);
        auto p = std::make_shared<const Psd>(psd_sqrt(*base.require_psd("sqrt")));
        return {p->matrix(), p};
      }
      case Kind::Gm: {
        const MatVal a = matrix(*e.args[0]), b = matrix(*e.args[1]);
        const Pd pa(*a.require_psd("gm"));
        const Pd pb(*b.require_psd("gm"));
        if (pa.dim() != pb.dim()) throw DimensionMismatch("dsl: gm arguments differ in dimension");
        auto g = std::make_shared<const Psd>(geometric_mean(pa, pb));
        return {g->matrix(), g};
      }
      case Kind::Inv: {
        const MatVal a = matrix(*e.args[0]);
        if (a.m.rows() != a.m.cols()) throw DimensionMismatch("dsl: inv of a non-square matrix");
        return {inverse(a.m), nullptr};
      }
      default: throw TypeError("expected a matrix expression", e.position);
    }
  }

  RealVector vector(const Expr& e) const {
    switch (e.kind) {
      case Kind::Lam: return lam(*e.args[0]);
      case Kind::Sig: return singular_value_list(matrix(*e.args[0]).m);
      case Kind::VecSqrt: return spectral_sqrt(vector(*e.args[0]), tol_);
      case Kind::VecScale: {
        const bool scalar_first = e.args[0]->type == Type::Scalar;
        const double s = scalar(*e.args[scalar_first ? 0 : 1]);
        const RealVector v = vector(*e.args[scalar_first ? 1 : 0]);
        return scalar_first ? RealVector(s * v) : RealVector(v * s);
      }
      case Kind::Add:
      case Kind::Sub: {
        const RealVector a = sorted(vector(*e.args[0])), b = sorted(vector(*e.args[1]));
        if (a.size() != b.size()) throw DimensionMismatch("dsl: vector lengths differ");
        return e.kind == Kind::Add ? RealVector(a + b) : RealVector(a - b);
      }
      case Kind::Neg: return -vector(*e.args[0]);
      default: throw TypeError("expected a vector expression", e.position);
    }
  }

  static RealVector sorted(RealVector v) {
    std::sort(v.data(), v.data() + v.size(), std::greater<>());
    return v;
  }

 private:
  RealVector lam(const Expr& arg) const {
    Matrix m;
    if (arg.kind == Kind::MatMul) {
      // product of PSD factors: similar to the Hermitian X^{1/2} Y X^{1/2}
      const MatVal a = matrix(*arg.args[0]), b = matrix(*arg.args[1]);
      const auto pa = a.try_psd();
      const auto pb = pa ? b.try_psd() : nullptr;
      if (pa && pb) {
        if (pa->dim() != pb->dim()) throw DimensionMismatch("dsl: inner dimensions of '*' differ");
        return product_eigenvalues(*pa, *pb);
      }
      if (a.m.cols() != b.m.rows()) throw DimensionMismatch("dsl: inner dimensions of '*' differ");
      m = a.m * b.m;
    } else {
      m = matrix(arg).m;
    }
    if (m.rows() != m.cols()) throw DimensionMismatch("dsl: lam of a non-square matrix");
    if (is_hermitian(m)) return eigenvalues(Hermitian(m));

    Eigen::ComplexEigenSolver<Matrix> es(m, false);
    if (es.info() != Eigen::Success) throw NumericalFailure("dsl: eigenvalue iteration failed", 0.0);
    const auto& ev = es.eigenvalues();
    const double imag = ev.imag().cwiseAbs().maxCoeff();
    if (imag > tol_ * (1.0 + ev.cwiseAbs().maxCoeff()))
      throw NumericalFailure("dsl: lam argument has a non-real spectrum", imag);
    return sorted(ev.real());
  }

  static void same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw DimensionMismatch(std::string("dsl: operands of '") + op + "' differ in shape");
  }

  const Bindings& bindings_;
  double t_;
  double tol_;
};

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Token> tokenize(const std::string& src) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = src.size();
  while (i < n) {
    const char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(src[i + 1]))) {
      while (i < n && is_digit(src[i])) ++i;
      if (i < n && src[i] == '.') {
        ++i;
        while (i < n && is_digit(src[i])) ++i;
      }
      if (i < n && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < n && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < n && is_digit(src[j])) {
          i = j;
          while (i < n && is_digit(src[i])) ++i;
        }
      }
      out.push_back({TokenKind::Number, src.substr(start, i - start), start});
    } else if (is_letter(c)) {
      while (i < n && (is_letter(src[i]) || is_digit(src[i]))) ++i;
      std::string word = src.substr(start, i - start);
      const TokenKind k = kKeywords.count(word) ? TokenKind::Keyword : TokenKind::Identifier;
      out.push_back({k, std::move(word), start});
    } else if (c == '>') {
      if (i + 1 < n && src[i + 1] == '=') {
        out.push_back({TokenKind::Operator, ">=", start});
        i += 2;
      } else {
        throw LexError("'>' must be followed by '='", start);
      }
    } else if (c == '+' || c == '-' || c == '*' || c == '^' || c == '\'') {
      out.push_back({TokenKind::Operator, std::string(1, c), start});
      ++i;
    } else if (c == '(' || c == ')') {
      out.push_back({TokenKind::Paren, std::string(1, c), start});
      ++i;
    } else if (c == ',') {
      out.push_back({TokenKind::Comma, ",", start});
      ++i;
    } else if (src.compare(i, kSharp.size(), kSharp) == 0) {
      out.push_back({TokenKind::Operator, kSharp, start});
      i += kSharp.size();
    } else {
      const unsigned char u = static_cast<unsigned char>(c);
      std::string shown = u >= 0x20 && u < 0x7f ? std::string(1, c) : "\\x" + format_number(u);
      throw LexError("illegal character '" + shown + "'", start);
    }
  }
  out.push_back({TokenKind::End, "", n});
  return out;
}

Statement parse(const std::vector<Token>& tokens) { return Parser(tokens).statement(); }

Statement typecheck(const Statement& stmt) {
  Statement out = stmt;
  out.lhs = resolve(stmt.lhs);
  out.rhs = resolve(stmt.rhs);
  const Type l = out.lhs->type, r = out.rhs->type;
  if (stmt.relation == Relation::ForAllJGeq) {
    if (l != Type::Vector || r != Type::Vector)
      throw TypeError(std::string("'>=' compares spectral vectors, got a ") + sort_name(l) + " and a " + sort_name(r),
                      stmt.lhs->position);
  } else if (l != Type::Matrix || r != Type::Matrix) {
    throw TypeError(std::string("'>=loewner' compares matrices, got a ") + sort_name(l) + " and a " + sort_name(r),
                    stmt.lhs->position);
  }
  out.typed = true;
  return out;
}

Statement compile(const std::string& source) { return typecheck(parse(tokenize(source))); }

std::vector<std::string> Statement::variables() const {
  std::set<std::string> names;
  auto collect = [&](const Expr& e) {
    if (e.kind == Kind::MatVar) names.insert(e.name);
  };
  if (lhs) walk(*lhs, collect);
  if (rhs) walk(*rhs, collect);
  return {names.begin(), names.end()};
}

bool Statement::uses_t() const {
  bool found = false;
  auto probe = [&](const Expr& e) { found = found || e.kind == Kind::ParamT; };
  if (lhs) walk(*lhs, probe);
  if (rhs) walk(*rhs, probe);
  return found;
}

std::string print(const Expr& e) {
  switch (e.kind) {
    case Kind::MatVar: return e.name;
    case Kind::ScalarLit: return format_number(e.value);
    case Kind::ParamT: return "t";
    case Kind::Add: return wrap(*e.args[0], 1) + " + " + wrap(*e.args[1], 2);
    case Kind::Sub: return wrap(*e.args[0], 1) + " - " + wrap(*e.args[1], 2);
    case Kind::Neg: return "-" + wrap(*e.args[0], 3);
    case Kind::Mul:
    case Kind::ScalarMul:
    case Kind::MatMul:
    case Kind::VecScale: return wrap(*e.args[0], 2) + "*" + wrap(*e.args[1], 3);
    case Kind::Adjoint: return wrap(*e.args[0], 4) + "'";
    case Kind::Power: {
      const Expr& x = *e.args[1];
      const std::string ex = x.kind == Kind::ScalarLit || x.kind == Kind::ParamT ? print(x) : "(" + print(x) + ")";
      return wrap(*e.args[0], 5) + "^" + ex;
    }
    case Kind::Gm: return "gm(" + print(*e.args[0]) + ", " + print(*e.args[1]) + ")";
    case Kind::Inv: return "inv(" + print(*e.args[0]) + ")";
    case Kind::Lam: return "lam(" + print(*e.args[0]) + ")";
    case Kind::Sig: return "sig(" + print(*e.args[0]) + ")";
    case Kind::Sqrt:
    case Kind::VecSqrt:
    case Kind::MatSqrt: return "sqrt(" + print(*e.args[0]) + ")";
  }
  return "";
}

std::string print(const Statement& s) {
  return print(*s.lhs) + (s.relation == Relation::LoewnerGeq ? " >=loewner " : " >= ") + print(*s.rhs);
}

bool equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.type != b.type || a.name != b.name || a.args.size() != b.args.size()) return false;
  if (a.kind == Kind::ScalarLit && !(a.value == b.value && std::signbit(a.value) == std::signbit(b.value))) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!equal(*a.args[i], *b.args[i])) return false;
  return true;
}

bool equal(const Statement& a, const Statement& b) {
  return a.relation == b.relation && equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
}

InequalityResult evaluate(const Statement& stmt_in, const Bindings& bindings, double t, std::optional<double> tol) {
  const Statement stmt = stmt_in.typed ? stmt_in : typecheck(stmt_in);
  if (stmt.uses_t() && !(t >= 0.0 && t <= 1.0)) throw DomainError("dsl: t must lie in [0, 1]");

  double tolerance = 0.0;
  if (tol) {
    tolerance = *tol;
  } else {
    double s = 1.0;
    for (const auto& name : stmt.variables()) {
      const auto it = bindings.find(name);
      if (it == bindings.end()) throw DomainError("unbound variable '" + name + "'");
      const Matrix& m = it->second;
      s += is_hermitian(m) ? spectral_norm(Hermitian(m)) : spectral_norm(m);
    }
    tolerance = 1e-9 * s;
  }

  const Evaluator ev(bindings, t, tolerance);
  if (stmt.relation == Relation::ForAllJGeq) {
    const RealVector lhs = Evaluator::sorted(ev.vector(*stmt.lhs));
    const RealVector rhs = Evaluator::sorted(ev.vector(*stmt.rhs));
    if (lhs.size() != rhs.size()) throw DimensionMismatch("dsl: compared vectors differ in length");
    return make_result("dsl", to_std(lhs - rhs), tolerance);
  }
  const Matrix lhs = ev.matrix(*stmt.lhs).m;
  const Matrix rhs = ev.matrix(*stmt.rhs).m;
  if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols()) throw DimensionMismatch("dsl: compared matrices differ in shape");
  if (!is_hermitian(lhs) || !is_hermitian(rhs)) throw DomainError("dsl: '>=loewner' needs Hermitian sides");
  return make_result("dsl", {loewner_margin(Hermitian(lhs), Hermitian(rhs))}, tolerance);
}

const std::vector<CatalogueEntry>& builtin_catalogue() {
  static const std::vector<CatalogueEntry> entries = [] {
    const std::vector<std::pair<std::string, std::string>> sources = {
        {"eq1", "0.5*A + 0.5*B >=loewner gm(A,B)"},
        {"eq2", "A + S*inv(A)*S >=loewner 2*S"},
        {"eq3", "lam(A+B) >= 2*sqrt(lam(A*B))"},
        {"eq4", "lam(A+B) >= 2*lam(A^0.5*B^0.5)"},
        {"eq5", "lam(A+B) >= 2*sqrt(sig(A*B))"},
        {"eq7", "lam((1-t)*A + t*B) >= sig(A^(1-t) * B^t)"},
        {"eq8", "lam((1-t)*A + t*B) >= lam(A^(1-t) * B^t)"},
        {"conjecture", "lam((1-t)*A + t*B) >= sqrt(sig(A^(2*(1-t)) * B^(2*t)))"},
        {"weyl-gm", "lam(A+B) >= 2*lam(gm(A,B))"},
    };
    std::vector<CatalogueEntry> out;
    for (const auto& [key, src] : sources) out.push_back({key, src, compile(src), key == "conjecture"});
    return out;
  }();
  return entries;
}

const CatalogueEntry& catalogue_entry(const std::string& key) {
  for (const auto& e : builtin_catalogue())
    if (e.key == key) return e;
  throw DomainError("no catalogue entry named '" + key + "'");
}

InequalityResult evaluate_entry(const CatalogueEntry& entry, const Bindings& bindings, double t,
                                std::optional<double> tol) {
  InequalityResult r = evaluate(entry.statement, bindings, t, tol);
  r.id = entry.key;
  r.conjecture = entry.conjecture;
  return r;
}

std::vector<SourceStatement> parse_file(const std::string& contents) {
  std::vector<SourceStatement> out;
  std::istringstream in(contents);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::string text = line.substr(first, last - first + 1);
    try {
      out.push_back({lineno, text, compile(text)});
    } catch (const DslError& e) {
      const std::string msg = "line " + std::to_string(lineno) + ": " + e.message();
      const std::size_t pos = e.position() + first;
      if (dynamic_cast<const LexError*>(&e)) throw LexError(msg, pos);
      if (dynamic_cast<const TypeError*>(&e)) throw TypeError(msg, pos);
      throw SyntaxError(msg, pos);
    }
  }
  return out;
}

}  // namespace matineq::dsl
