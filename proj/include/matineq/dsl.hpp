#pragma once

// A small language for spectral matrix inequalities:
//
//   lam(A+B) >= 2*sqrt(sig(A*B))
//   0.5*A + 0.5*B >=loewner gm(A,B)
//
// Identifiers name matrices, numbers and `t` are scalars, and lam/sig return
// descending spectral vectors. `>=` compares vectors index by index;
// `>=loewner` compares Hermitian matrices in the Loewner order.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "matineq/error.hpp"
#include "matineq/inequalities.hpp"
#include "matineq/linalg.hpp"

namespace matineq::dsl {

/// Lexical, syntax and type errors carry the byte offset of the offending token.
class DslError : public Error {
 public:
  DslError(const std::string& what, std::size_t position)
      : Error(what + " at column " + std::to_string(position + 1)), message_(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }
  /// The message without the position suffix.
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  std::size_t position_;
};

class LexError : public DslError {
 public:
  using DslError::DslError;
};
class SyntaxError : public DslError {
 public:
  using DslError::DslError;
};
class TypeError : public DslError {
 public:
  using DslError::DslError;
};

enum class TokenKind { Identifier, Number, Operator, Paren, Comma, Keyword, End };

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t position;  // byte offset into the source
};

/// Maximal-munch tokenizer. The trailing End token sits at source.size().
std::vector<Token> tokenize(const std::string& source);

enum class Kind {
  MatVar,
  ScalarLit,
  ParamT,
  Add,
  Sub,
  Neg,
  Mul,        // before typecheck; resolved to one of the three below
  ScalarMul,  // scalar * matrix (either operand order)
  MatMul,
  VecScale,   // scalar * vector (either operand order)
  Adjoint,
  Power,
  Gm,
  Inv,
  Lam,
  Sig,
  Sqrt,     // before typecheck; resolved to VecSqrt or MatSqrt
  VecSqrt,
  MatSqrt,
};

enum class Type { Unknown, Scalar, Matrix, Vector };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  Kind kind;
  std::size_t position = 0;
  std::string name;  // MatVar
  double value = 0;  // ScalarLit
  std::vector<ExprPtr> args;
  Type type = Type::Unknown;
};

enum class Relation { ForAllJGeq, LoewnerGeq };

struct Statement {
  ExprPtr lhs;
  Relation relation = Relation::ForAllJGeq;
  ExprPtr rhs;
  bool typed = false;

  /// Sorted names of the matrix variables.
  std::vector<std::string> variables() const;
  bool uses_t() const;
};

Statement parse(const std::vector<Token>& tokens);
/// Resolves overloaded nodes and assigns types; throws TypeError.
Statement typecheck(const Statement& stmt);
/// tokenize + parse + typecheck.
Statement compile(const std::string& source);

/// Canonical source text; compile(print(s)) is structurally equal to s.
std::string print(const Statement& stmt);
std::string print(const Expr& e);
/// Structural equality (ignores positions).
bool equal(const Expr& a, const Expr& b);
bool equal(const Statement& a, const Statement& b);

using Bindings = std::map<std::string, Matrix>;

/// Evaluates a statement. Margins are LHS_j - RHS_j of the descending vectors
/// (ForAllJGeq) or the single lambda_min(LHS - RHS) (LoewnerGeq). `tol`
/// defaults to 1e-9 (1 + sum of the spectral norms of the bound variables
/// the statement uses).
InequalityResult evaluate(const Statement& stmt, const Bindings& bindings, double t = 0.5,
                          std::optional<double> tol = {});

struct CatalogueEntry {
  std::string key;
  std::string source;
  Statement statement;
  bool conjecture = false;
};

/// eq1, eq2, eq3, eq4, eq5, eq7, eq8, conjecture, weyl-gm (in that order).
const std::vector<CatalogueEntry>& builtin_catalogue();
const CatalogueEntry& catalogue_entry(const std::string& key);

/// Evaluates a catalogue entry; sets id and the conjecture flag.
InequalityResult evaluate_entry(const CatalogueEntry& entry, const Bindings& bindings, double t = 0.5,
                                std::optional<double> tol = {});

/// Parses a DSL file: one statement per line, `#` starts a comment, blank
/// lines skipped. Errors carry the 1-based line in their message.
struct SourceStatement {
  std::size_t line;
  std::string text;
  Statement statement;
};
std::vector<SourceStatement> parse_file(const std::string& contents);

}  // namespace matineq::dsl
