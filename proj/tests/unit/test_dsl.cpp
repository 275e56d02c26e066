#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "matineq/dsl.hpp"
#include "matineq/generators.hpp"
#include "matineq/inequalities.hpp"
#include "support.hpp"

using namespace matineq;
using namespace matineq::dsl;

namespace {

Matrix diag(std::vector<double> d) { return Hermitian::diagonal(d).matrix(); }

Psd gen_psd(Index n, Index rank, double cond, std::uint64_t seed, Field field = Field::Complex) {
  GenSpec s;
  s.n = n;
  s.rank = rank;
  s.condition = cond;
  s.seed = seed;
  s.field = field;
  return random_psd_rank(s);
}

ExprPtr var(const std::string& n) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::MatVar;
  e->name = n;
  e->type = Type::Matrix;
  return e;
}

ExprPtr op(Kind k, std::vector<ExprPtr> args, Type type) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->args = std::move(args);
  e->type = type;
  return e;
}

ExprPtr lit(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::ScalarLit;
  e->value = v;
  e->type = Type::Scalar;
  return e;
}

InequalityResult native(const std::string& key, const Psd& a, const Psd& b, double t) {
  if (key == "eq1") return check_amgm_loewner(Pd(a), Pd(b));
  if (key == "eq2") return check_amgm_variant(Pd(a), Pd(b));
  if (key == "eq3") return check_bk1(a, b);
  if (key == "eq4") return check_bk2(a, b);
  if (key == "eq5") return check_bkd(a, b);
  if (key == "eq7") return check_ando(InequalityInstance(a, b, t));
  if (key == "eq8") return check_prop4(InequalityInstance(a, b, t));
  if (key == "conjecture") return check_conjecture(InequalityInstance(a, b, t));
  return check_weyl_gm(Pd(a), Pd(b));
}

Bindings bind(const CatalogueEntry& e, const Matrix& a, const Matrix& b) {
  return e.key == "eq2" ? Bindings{{"A", a}, {"S", b}} : Bindings{{"A", a}, {"B", b}};
}

}  // namespace

// ---- tokenizer -------------------------------------------------------------

TEST(Tokenize, SimpleCall) {
  const auto toks = tokenize("lam(A+B)");
  ASSERT_EQ(toks.size(), 7u);  // six tokens plus the end marker
  EXPECT_EQ(toks[0].kind, TokenKind::Keyword);
  EXPECT_EQ(toks[0].text, "lam");
  EXPECT_EQ(toks[1].kind, TokenKind::Paren);
  EXPECT_EQ(toks[2].kind, TokenKind::Identifier);
  EXPECT_EQ(toks[3].text, "+");
  EXPECT_EQ(toks[4].text, "B");
  EXPECT_EQ(toks[5].text, ")");
  EXPECT_EQ(toks[6].kind, TokenKind::End);
}

TEST(Tokenize, NestedCallEndsInTwoParens) {
  const auto toks = tokenize("2*sqrt(sig(A*B))");
  ASSERT_EQ(toks.size(), 12u);  // 2 * sqrt ( sig ( A * B ) ) + end
  EXPECT_EQ(toks[9].text, ")");
  EXPECT_EQ(toks[10].text, ")");
  for (std::size_t i = 1; i < toks.size(); ++i) EXPECT_GT(toks[i].position, toks[i - 1].position);
}

TEST(Tokenize, IllegalCharacterPosition) {
  try {
    tokenize("A $ B");
    FAIL() << "expected a lexical error";
  } catch (const LexError& e) {
    EXPECT_EQ(e.position(), 2u);
  }
}

TEST(Tokenize, NumbersAndKeywords) {
  const auto toks = tokenize("1.5e-3 .5 2e A2 t loewner >= A' \xE2\x99\xAF");
  EXPECT_EQ(toks[0].text, "1.5e-3");
  EXPECT_EQ(toks[1].text, ".5");
  EXPECT_EQ(toks[2].text, "2");
  EXPECT_EQ(toks[3].text, "e");  // maximal munch stops: no exponent digits
  EXPECT_EQ(toks[4].kind, TokenKind::Identifier);
  EXPECT_EQ(toks[5].kind, TokenKind::Keyword);
  EXPECT_EQ(toks[6].kind, TokenKind::Keyword);
  EXPECT_EQ(toks[7].text, ">=");
  EXPECT_EQ(toks[9].text, "'");
  EXPECT_EQ(toks[10].kind, TokenKind::Operator);
  EXPECT_THROW(tokenize("A > B"), LexError);
}

// ---- parser / typecheck ----------------------------------------------------

TEST(Parse, TheoremStatementStructure) {
  const Statement s = compile("lam(A+B) >= 2*sqrt(sig(A*B))");
  Statement want;
  want.relation = Relation::ForAllJGeq;
  want.lhs = op(Kind::Lam, {op(Kind::Add, {var("A"), var("B")}, Type::Matrix)}, Type::Vector);
  want.rhs = op(Kind::VecScale,
                {lit(2), op(Kind::VecSqrt, {op(Kind::Sig, {op(Kind::MatMul, {var("A"), var("B")}, Type::Matrix)},
                                               Type::Vector)},
                            Type::Vector)},
                Type::Vector);
  EXPECT_TRUE(equal(s, want));
}

TEST(Parse, LoewnerWeightedStatementTypechecks) {
  const Statement s = compile("(1-t)*A + t*B >=loewner gm(A,B)");
  EXPECT_EQ(s.relation, Relation::LoewnerGeq);
  EXPECT_TRUE(s.uses_t());
  // instance dependent: t = 0, A = I, B = 4I gives lambda_min(I - 2I) = -1
  const auto r = evaluate(s, {{"A", diag({1, 1})}, {"B", diag({4, 4})}}, 0.0);
  ASSERT_EQ(r.margins.size(), 1u);
  EXPECT_NEAR(r.margins[0], -1.0, 1e-14);
  EXPECT_FALSE(r.passed);
}

TEST(Parse, Errors) {
  EXPECT_THROW(compile("lam(A+"), SyntaxError);
  try {
    compile("gm(A) >= lam(A)");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.position(), 0u);
    EXPECT_NE(std::string(e.what()).find("2 arguments"), std::string::npos);
  }
  EXPECT_THROW(compile("lam(A, B) >= lam(A)"), SyntaxError);
  EXPECT_THROW(compile("lam(A)"), SyntaxError);
  EXPECT_THROW(compile("lam(A) >= lam(B) extra"), SyntaxError);
  EXPECT_THROW(compile("loewner >= A"), SyntaxError);
  EXPECT_THROW(compile(std::string(300, '(') + "A" + std::string(300, ')') + " >= A"), SyntaxError);
}

TEST(Typecheck, SortErrors) {
  EXPECT_THROW(compile("lam(A) >=loewner B"), TypeError);
  EXPECT_THROW(compile("A >= B"), TypeError);
  EXPECT_THROW(compile("lam(A) >= lam(B) + A"), TypeError);
  EXPECT_THROW(compile("lam(lam(A)) >= lam(B)"), TypeError);
  EXPECT_THROW(compile("lam(A^(B)) >= lam(B)"), TypeError);
  EXPECT_THROW(compile("lam(A) >= sqrt(2)*lam(A)"), TypeError);
  EXPECT_THROW(compile("lam(A*lam(B)) >= lam(B)"), TypeError);
  EXPECT_THROW(compile("2 >= 1"), TypeError);
  EXPECT_NO_THROW(compile("lam(A') >= lam(sqrt(A)) - 1*lam(inv(A))"));
}

TEST(Parse, SharpIsGm) {
  EXPECT_TRUE(equal(compile("lam(A \xE2\x99\xAF B) >= lam(A)"), compile("lam(gm(A, B)) >= lam(A)")));
}

TEST(Parse, NegativeAndAffineExponents) {
  const Statement s = compile("lam(A^-0.5 * B^(2*(1-t))) >= -1*lam(A)");
  EXPECT_TRUE(equal(s, compile(print(s))));
  EXPECT_NE(print(s).find("A^-0.5"), std::string::npos);
}

// ---- evaluation ------------------------------------------------------------

TEST(Evaluate, TheoremExamples) {
  const Statement s = catalogue_entry("eq5").statement;
  for (double m : evaluate(s, {{"A", diag({1, 1, 1})}, {"B", diag({1, 1, 1})}}).margins) EXPECT_NEAR(m, 0.0, 1e-15);
  const auto r = evaluate(s, {{"A", diag({4, 1})}, {"B", diag({1, 4})}});
  ASSERT_EQ(r.margins.size(), 2u);
  EXPECT_NEAR(r.margins[0], 1.0, 1e-14);
  EXPECT_NEAR(r.margins[1], 1.0, 1e-14);
}

TEST(Evaluate, ReversedAmgmLoewner) {
  const Bindings id{{"A", diag({1, 1})}, {"B", diag({1, 1})}};
  const auto rev = evaluate(compile("gm(A,B) >=loewner 0.5*A + 0.5*B"), id);
  EXPECT_EQ(rev.margins[0], 0.0);
  EXPECT_EQ(evaluate(catalogue_entry("eq1").statement, id).margins[0], 0.0);
}

TEST(Evaluate, Errors) {
  const Statement s = catalogue_entry("eq5").statement;
  EXPECT_THROW(evaluate(s, {{"A", diag({1, 1})}}), DomainError);
  EXPECT_THROW(evaluate(s, {{"A", diag({1, 1})}, {"B", diag({1, 1, 1})}}), DimensionMismatch);
  EXPECT_THROW(evaluate(catalogue_entry("eq7").statement, {{"A", diag({1})}, {"B", diag({1})}}, 1.5), DomainError);
  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;  // spectrum +-i
  EXPECT_THROW(evaluate(compile("lam(R) >= lam(R)"), {{"R", rot}}), NumericalFailure);
  EXPECT_THROW(evaluate(compile("lam(A) >= sqrt(lam(A))"), {{"A", diag({1, -1})}}), NumericalFailure);
  EXPECT_THROW(evaluate(compile("lam(A^0.5) >= lam(A)"), {{"A", diag({1, -1})}}), DomainError);
}

TEST(Evaluate, GeneralSpectrumFallback) {
  Matrix m(2, 2);
  m << 2, 1, 0, 3;  // triangular, real spectrum {3, 2}
  const auto r = evaluate(compile("lam(M) >= lam(M)"), {{"M", m}});
  EXPECT_EQ(r.margins.size(), 2u);
  const auto v = evaluate(compile("lam(M) >= 0*lam(M)"), {{"M", m}});
  EXPECT_NEAR(v.margins[0], 3.0, 1e-12);
  EXPECT_NEAR(v.margins[1], 2.0, 1e-12);
}

// ---- catalogue ---------------------------------------------------------------

TEST(Catalogue, KeysAndSources) {
  const auto& cat = builtin_catalogue();
  ASSERT_EQ(cat.size(), 9u);
  const std::vector<std::string> keys = {"eq1", "eq2", "eq3", "eq4", "eq5", "eq7", "eq8", "conjecture", "weyl-gm"};
  for (std::size_t i = 0; i < keys.size(); ++i) EXPECT_EQ(cat[i].key, keys[i]);
  EXPECT_EQ(catalogue_entry("eq5").source, "lam(A+B) >= 2*sqrt(sig(A*B))");
  EXPECT_TRUE(catalogue_entry("conjecture").conjecture);
  EXPECT_THROW(catalogue_entry("eq6"), DomainError);
}

TEST(Catalogue, RoundTrip) {
  for (const auto& e : builtin_catalogue()) {
    const std::string text = print(e.statement);
    EXPECT_TRUE(equal(compile(text), e.statement)) << e.key << ": " << text;
    EXPECT_EQ(print(compile(text)), text);
  }
}

TEST(Catalogue, Eq7AtZeroAndConjectureHalf) {
  const Psd a = gen_psd(4, 4, 10, 1), b = gen_psd(4, 4, 10, 2);
  for (double m : evaluate_entry(catalogue_entry("eq7"), {{"A", a.matrix()}, {"B", b.matrix()}}, 0.0).margins)
    EXPECT_NEAR(m, 0.0, 1e-12);
  const auto c = evaluate_entry(catalogue_entry("conjecture"), {{"A", a.matrix()}, {"B", b.matrix()}}, 0.5);
  const auto d = evaluate_entry(catalogue_entry("eq5"), {{"A", a.matrix()}, {"B", b.matrix()}}, 0.5);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(c.margins[j], 0.5 * d.margins[j], 1e-12);
}

TEST(Catalogue, AgreesWithNativeChecks) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const Index n = 1 + static_cast<Index>(seed % 7);
    const bool deficient = seed % 5 == 0;
    const Psd a = gen_psd(n, deficient ? n - 1 : n, 100, derive_seed(seed, 1), seed % 2 ? Field::Real : Field::Complex);
    const Psd b = gen_psd(n, n, 100, derive_seed(seed, 2));
    const double t = default_t_grid()[seed % 11];
    const double scale = 1.0 + spectral_norm(a) + spectral_norm(b);
    for (const auto& e : builtin_catalogue()) {
      if (deficient && (e.key == "eq1" || e.key == "eq2" || e.key == "weyl-gm")) continue;
      const auto want = native(e.key, a, b, t);
      const auto got = evaluate_entry(e, bind(e, a.matrix(), b.matrix()), t);
      ASSERT_EQ(got.margins.size(), want.margins.size()) << e.key;
      for (std::size_t j = 0; j < want.margins.size(); ++j)
        EXPECT_LE(std::abs(got.margins[j] - want.margins[j]), 1e-12 * scale) << e.key << " seed " << seed;
      EXPECT_EQ(got.passed, want.passed) << e.key;
    }
  }
}

// S*inv(A)*S picks up skew of order cond(A) * eps; the Loewner side check
// must accept it as the native check does.
TEST(Catalogue, AmgmVariantIllConditioned) {
  const auto& e = catalogue_entry("eq2");
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Index n = 2 + static_cast<Index>(seed % 7);
    const Psd a = gen_psd(n, n, 1e4, derive_seed(seed, 11));
    const Psd s = gen_psd(n, n, 1e4, derive_seed(seed, 12));
    const double scale = 1.0 + spectral_norm(a) + spectral_norm(s);
    const auto want = native("eq2", a, s, 0.5);
    InequalityResult got;
    ASSERT_NO_THROW(got = evaluate_entry(e, bind(e, a.matrix(), s.matrix()), 0.5)) << "seed " << seed;
    EXPECT_LE(std::abs(got.margins[0] - want.margins[0]), 1e-12 * scale) << "seed " << seed;
  }
}

// ---- totality ----------------------------------------------------------------

TEST(Fuzz, ParserIsTotal) {
  std::mt19937_64 rng(2024);
  const std::string alphabet = "AB t()+-*^',.0123456789>=eglamsiqrtvnow#$\xE2\x99\xAF";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<std::size_t> len(0, 1024);
  std::uniform_int_distribution<int> byte(0, 255);
  const auto& cat = builtin_catalogue();
  for (int i = 0; i < 2000; ++i) {
    std::string src;
    if (i % 3 == 0) {
      // mutate a valid statement
      src = cat[static_cast<std::size_t>(i) % cat.size()].source;
      for (int k = 0; k < 1 + i % 4; ++k) {
        std::size_t at = rng() % (src.size() + 1);
        if (rng() % 2 && !src.empty()) src.erase(std::min(at, src.size() - 1), 1);
        else src.insert(at, 1, alphabet[pick(rng)]);
      }
    } else if (i % 3 == 1) {
      const std::size_t l = len(rng);
      for (std::size_t k = 0; k < l; ++k) src.push_back(alphabet[pick(rng)]);
    } else {
      const std::size_t l = len(rng);
      for (std::size_t k = 0; k < l; ++k) src.push_back(static_cast<char>(byte(rng)));
    }
    try {
      compile(src);
    } catch (const DslError& e) {
      EXPECT_LE(e.position(), src.size());
    }
  }
}

TEST(ParseFile, CommentsAndLines) {
  const auto stmts = parse_file("# header\n\nlam(A+B) >= 2*sqrt(sig(A*B))  # theorem\n  0.5*A + 0.5*B >=loewner gm(A,B)\n");
  ASSERT_EQ(stmts.size(), 2u);
  EXPECT_EQ(stmts[0].line, 3u);
  EXPECT_EQ(stmts[1].line, 4u);
  try {
    parse_file("lam(A) >= lam(A)\n  lam(A $ B) >= lam(A)\n");
    FAIL();
  } catch (const LexError& e) {
    EXPECT_EQ(e.position(), 8u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}
