#include "ata/expr.hpp"

#include <cctype>
#include <numeric>

namespace ata {
namespace {

std::int64_t checked(__int128 v, const char* what) {
  if (v > INT64_MAX || v < INT64_MIN)
    throw ExprError(ExprError::Kind::Syntax,
                    std::string("arithmetic overflow in ") + what);
  return static_cast<std::int64_t>(v);
}

Rational make_rat(__int128 num, __int128 den) {
  if (den == 0) throw ExprError(ExprError::Kind::DivideByZero, "division by zero");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  __int128 a = num < 0 ? -num : num;
  __int128 b = den;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  Rational r;
  r.num = checked(num, "rational");
  r.den = checked(den, "rational");
  return r;
}

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d) {
  *this = make_rat(n, d);
}

double Rational::to_double() const {
  return static_cast<double>(num) / static_cast<double>(den);
}

Rational operator+(const Rational& a, const Rational& b) {
  return make_rat(static_cast<__int128>(a.num) * b.den +
                      static_cast<__int128>(b.num) * a.den,
                  static_cast<__int128>(a.den) * b.den);
}

Rational operator-(const Rational& a, const Rational& b) {
  return make_rat(static_cast<__int128>(a.num) * b.den -
                      static_cast<__int128>(b.num) * a.den,
                  static_cast<__int128>(a.den) * b.den);
}

Rational operator*(const Rational& a, const Rational& b) {
  return make_rat(static_cast<__int128>(a.num) * b.num,
                  static_cast<__int128>(a.den) * b.den);
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num == 0)
    throw ExprError(ExprError::Kind::DivideByZero, "division by zero");
  return make_rat(static_cast<__int128>(a.num) * b.den,
                  static_cast<__int128>(a.den) * b.num);
}

char bracket_open(BracketKind kind) {
  switch (kind) {
    case BracketKind::Paren: return '(';
    case BracketKind::Square: return '[';
    case BracketKind::Curly: return '{';
  }
  return '(';
}

char bracket_close(BracketKind kind) {
  switch (kind) {
    case BracketKind::Paren: return ')';
    case BracketKind::Square: return ']';
    case BracketKind::Curly: return '}';
  }
  return ')';
}

char op_symbol(BinOp op) {
  switch (op) {
    case BinOp::Add: return '+';
    case BinOp::Sub: return '-';
    case BinOp::Mul: return '*';
    case BinOp::Div: return '/';
  }
  return '+';
}

namespace {

std::string normalize_snippet(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

const std::vector<std::pair<std::string, Rational>>& scripted_snippets() {
  static const std::vector<std::pair<std::string, Rational>> table = {
      {"Average of 3, 7, and five?", Rational(5)},
      {"Multiply the sum of three, seven, and five by two. Then, subtract "
       "fifteen.",
       Rational(15)},
      {"If you subtract 3 from 43 and then divide by 5, what is the result?",
       Rational(8)},
      {"Thomas withdraws $10000 in 20 dollar bills from the bank account. He "
       "loses 100 bills while getting home. After that, he uses half of the "
       "remaining bills to pay for a bill. Thomas then triples his money. He "
       "then converts all his bills to 10 dollar bills. How many 5 dollar "
       "bills does he have?",
       Rational(1200)},
      {"Five added to twice the difference between twenty and the sum of "
       "seven and three.",
       Rational(25)},
      {"What is the product of four and six?", Rational(24)},
      {"Sum of ten, twenty, and thirty?", Rational(60)},
      {"Half of ninety?", Rational(45)},
      {"The difference between one hundred and thirty-seven?", Rational(63)},
      {"Three squared plus one?", Rational(10)},
      {"Double the sum of eight and five.", Rational(26)},
      {"A dozen eggs minus two?", Rational(10)},
      {"Quarter of two hundred?", Rational(50)},
      {"The smallest two-digit prime?", Rational(11)},
      {"Days in two weeks plus one?", Rational(15)},
  };
  return table;
}

std::optional<Rational> lookup_snippet(std::string_view text) {
  const std::string n = normalize_snippet(text);
  for (const auto& [snippet, value] : scripted_snippets()) {
    if (snippet == n) return value;
  }
  return std::nullopt;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ExprPtr parse() {
    ExprPtr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size())
      throw ExprError(ExprError::Kind::Syntax,
                      "unexpected character '" + std::string(1, text_[pos_]) +
                          "' at position " + std::to_string(pos_),
                      pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t'))
      pos_++;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  [[noreturn]] void fail(const std::string& msg, std::size_t pos) {
    throw ExprError(ExprError::Kind::Syntax,
                    msg + " at position " + std::to_string(pos), pos);
  }

  ExprPtr parse_expr() {
    ExprPtr left = parse_term();
    while (!at_end() && (peek() == '+' || peek() == '-')) {
      const char op = text_[pos_++];
      ExprPtr right = parse_term();
      auto node = std::make_shared<Expr>();
      node->kind = ExprKind::BinaryOp;
      node->op = op == '+' ? BinOp::Add : BinOp::Sub;
      node->children = {left, right};
      left = node;
    }
    return left;
  }

  ExprPtr parse_term() {
    ExprPtr left = parse_factor();
    while (!at_end() && (peek() == '*' || peek() == '/')) {
      const char op = text_[pos_++];
      ExprPtr right = parse_factor();
      auto node = std::make_shared<Expr>();
      node->kind = ExprKind::BinaryOp;
      node->op = op == '*' ? BinOp::Mul : BinOp::Div;
      node->children = {left, right};
      left = node;
    }
    return left;
  }

  ExprPtr parse_factor() {
    if (at_end()) fail("unexpected end of expression", text_.size());
    const char c = peek();
    if (c >= '0' && c <= '9') return parse_number();
    if (c == '(' || c == '[' || c == '{') return parse_group();
    fail(std::string("unexpected character '") + c + "'", pos_);
  }

  ExprPtr parse_number() {
    const std::size_t start = pos_;
    std::int64_t int_part = 0;
    while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
      int_part = checked(static_cast<__int128>(int_part) * 10 +
                             (text_[pos_] - '0'),
                         "number literal");
      pos_++;
    }
    std::int64_t den = 1;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      pos_++;
      if (pos_ >= text_.size() || text_[pos_] < '0' || text_[pos_] > '9')
        fail("digit expected after decimal point", pos_);
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
        int_part = checked(static_cast<__int128>(int_part) * 10 +
                               (text_[pos_] - '0'),
                           "number literal");
        den = checked(static_cast<__int128>(den) * 10, "number literal");
        pos_++;
      }
    }
    auto node = std::make_shared<Expr>();
    node->kind = ExprKind::Number;
    node->value = Rational(int_part, den);
    node->literal = std::string(text_.substr(start, pos_ - start));
    return node;
  }

  ExprPtr parse_group() {
    const std::size_t open_pos = pos_;
    const char open = text_[pos_++];
    const BracketKind bracket = open == '(' ? BracketKind::Paren
                                : open == '[' ? BracketKind::Square
                                              : BracketKind::Curly;
    const char close = bracket_close(bracket);

    // A curly group whose content starts with a letter is a scripted
    // natural-language snippet, not a sub-expression.
    if (bracket == BracketKind::Curly) {
      std::size_t look = pos_;
      while (look < text_.size() && (text_[look] == ' ' || text_[look] == '\t'))
        look++;
      if (look < text_.size() &&
          (std::isalpha(static_cast<unsigned char>(text_[look])) ||
           text_[look] == '$')) {
        const std::size_t content_start = pos_;
        while (pos_ < text_.size() && text_[pos_] != '}') pos_++;
        if (pos_ >= text_.size())
          fail("unterminated '{'", open_pos);
        const std::string_view content =
            text_.substr(content_start, pos_ - content_start);
        pos_++;  // consume '}'
        auto value = lookup_snippet(content);
        if (!value)
          throw ExprError(ExprError::Kind::UnknownSnippet,
                          "unknown natural-language snippet: '" +
                              normalize_snippet(content) + "'",
                          content_start);
        auto node = std::make_shared<Expr>();
        node->kind = ExprKind::NlSnippet;
        node->value = *value;
        node->literal = normalize_snippet(content);
        return node;
      }
    }

    ExprPtr inner = parse_expr();
    if (at_end()) fail("unbalanced bracket; missing closer", open_pos);
    if (peek() != close)
      fail(std::string("expected '") + close + "' to match bracket", pos_);
    pos_++;
    auto node = std::make_shared<Expr>();
    node->kind = ExprKind::Group;
    node->bracket = bracket;
    node->children = {inner};
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

ExprPtr parse_expression(std::string_view text) {
  if (normalize_snippet(text).empty())
    throw ExprError(ExprError::Kind::Syntax, "empty expression", 0);
  return Parser(text).parse();
}

Rational eval_expression_exact(const Expr& expr) {
  switch (expr.kind) {
    case ExprKind::Number:
    case ExprKind::NlSnippet:
      return expr.value;
    case ExprKind::Group:
      return eval_expression_exact(*expr.children[0]);
    case ExprKind::BinaryOp: {
      const Rational left = eval_expression_exact(*expr.children[0]);
      const Rational right = eval_expression_exact(*expr.children[1]);
      switch (expr.op) {
        case BinOp::Add: return left + right;
        case BinOp::Sub: return left - right;
        case BinOp::Mul: return left * right;
        case BinOp::Div: return left / right;
      }
    }
  }
  throw ExprError(ExprError::Kind::Syntax, "malformed expression node");
}

double eval_expression(std::string_view text) {
  return eval_expression_exact(*parse_expression(text)).to_double();
}

std::string expr_to_text(const Expr& expr) {
  switch (expr.kind) {
    case ExprKind::Number:
      return expr.literal;
    case ExprKind::NlSnippet:
      return "{" + expr.literal + "}";
    case ExprKind::Group:
      return std::string(1, bracket_open(expr.bracket)) +
             expr_to_text(*expr.children[0]) +
             std::string(1, bracket_close(expr.bracket));
    case ExprKind::BinaryOp:
      return expr_to_text(*expr.children[0]) +
             std::string(1, op_symbol(expr.op)) +
             expr_to_text(*expr.children[1]);
  }
  return "";
}

}  // namespace ata
