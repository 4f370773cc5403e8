#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ata/error.hpp"

namespace ata {

// Exact rational number. Keeps expression evaluation free of float drift:
// 159/10 converts to exactly the double 15.9.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;  // always > 0, gcd(num, den) == 1

  Rational() = default;
  Rational(std::int64_t n) : num(n), den(1) {}  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t n, std::int64_t d);

  double to_double() const;

  bool operator==(const Rational&) const = default;
};

Rational operator+(const Rational& a, const Rational& b);
Rational operator-(const Rational& a, const Rational& b);
Rational operator*(const Rational& a, const Rational& b);
// Throws ExprError(DivideByZero) when b == 0.
Rational operator/(const Rational& a, const Rational& b);

enum class ExprKind { Number, BinaryOp, Group, NlSnippet };
enum class BinOp { Add, Sub, Mul, Div };
enum class BracketKind { Paren, Square, Curly };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// One node of a parsed calculator expression. Binary ops have exactly two
// children, groups exactly one; NL snippets carry their scripted value and
// never touch any model.
struct Expr {
  ExprKind kind = ExprKind::Number;
  Rational value;            // Number: literal value; NlSnippet: scripted value
  std::string literal;       // Number: source text; NlSnippet: snippet text
  BinOp op = BinOp::Add;     // BinaryOp only
  BracketKind bracket = BracketKind::Paren;  // Group only
  std::vector<ExprPtr> children;
};

char bracket_open(BracketKind kind);
char bracket_close(BracketKind kind);
char op_symbol(BinOp op);

// Scripted natural-language snippets and the values they resolve to.
// Lookup normalizes whitespace; no language model is ever invoked.
const std::vector<std::pair<std::string, Rational>>& scripted_snippets();
std::optional<Rational> lookup_snippet(std::string_view text);

// Recursive-descent parse of digits, + - * /, and the three bracket kinds.
// A curly group whose content starts with a letter (or '$') is resolved
// through the scripted snippet table. Throws ExprError with the byte
// position on syntax errors and for unknown snippets.
ExprPtr parse_expression(std::string_view text);

// Exact evaluation; throws ExprError(DivideByZero).
Rational eval_expression_exact(const Expr& expr);

// parse + evaluate + convert. The one-stop entry point.
double eval_expression(std::string_view text);

// Canonical text for a parsed expression (no spaces, brackets preserved).
std::string expr_to_text(const Expr& expr);

}  // namespace ata
