#include "dmk/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

namespace dmk {

ExpressionError::ExpressionError(const std::string& what, int column)
    : std::runtime_error(column > 0 ? "column " + std::to_string(column) + ": " + what : what), column_(column) {}

struct Expression::Node {
  enum class Kind { kNumber, kVariable, kNegate, kBinary, kCall };
  Kind kind = Kind::kNumber;
  double value = 0.0;
  std::string name;  // variable or function name
  char op = 0;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

const std::set<std::string> kFunctions = {"sin", "cos", "exp", "log", "sqrt", "abs"};
const std::set<std::string> kVariables = {"theta", "x", "y", "z"};

struct Token {
  enum class Kind { kNumber, kIdent, kOp, kLParen, kRParen, kComma, kEnd };
  Kind kind = Kind::kEnd;
  std::string text;
  double value = 0.0;
  int column = 0;
};

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    const int col = static_cast<int>(i) + 1;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && s[j] == '.') {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      if (j == i + 1 && c == '.') throw ExpressionError("malformed number", col);
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
          j = k;
        } else {
          throw ExpressionError("malformed exponent", static_cast<int>(j) + 1);
        }
      }
      Token t{Token::Kind::kNumber, s.substr(i, j - i), 0.0, col};
      try {
        t.value = std::stod(t.text);
      } catch (const std::out_of_range&) {
        throw ExpressionError("number out of range", col);
      }
      out.push_back(t);
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({Token::Kind::kIdent, s.substr(i, j - i), 0.0, col});
      i = j;
      continue;
    }
    switch (c) {
      case '+':
      case '-':
      case '*':
      case '/':
      case '^':
        out.push_back({Token::Kind::kOp, std::string(1, c), 0.0, col});
        break;
      case '(':
        out.push_back({Token::Kind::kLParen, "(", 0.0, col});
        break;
      case ')':
        out.push_back({Token::Kind::kRParen, ")", 0.0, col});
        break;
      case ',':
        out.push_back({Token::Kind::kComma, ",", 0.0, col});
        break;
      default:
        throw ExpressionError(std::string("unexpected character '") + c + "'", col);
    }
    ++i;
  }
  out.push_back({Token::Kind::kEnd, "", 0.0, static_cast<int>(s.size()) + 1});
  return out;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : tokens_(tokenize(text)) {}

  NodePtr parse() {
    NodePtr e = expr();
    if (peek().kind != Token::Kind::kEnd) fail_unexpected();
    return e;
  }

  std::set<std::string> variables;

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }
  bool at_op(char op) const { return peek().kind == Token::Kind::kOp && peek().text[0] == op; }

  [[noreturn]] void fail_unexpected() const {
    const Token& t = peek();
    if (t.kind == Token::Kind::kEnd) throw ExpressionError("unexpected end of expression", t.column);
    throw ExpressionError("unexpected '" + t.text + "'", t.column);
  }

  static NodePtr binary(char op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::kBinary;
    n->op = op;
    n->args = {std::move(a), std::move(b)};
    return n;
  }

  NodePtr expr() {
    NodePtr e = term();
    while (at_op('+') || at_op('-')) {
      const char op = next().text[0];
      e = binary(op, e, term());
    }
    return e;
  }

  NodePtr term() {
    NodePtr e = unary();
    while (at_op('*') || at_op('/')) {
      const char op = next().text[0];
      e = binary(op, e, unary());
    }
    return e;
  }

  NodePtr unary() {
    if (at_op('-')) {
      next();
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::kNegate;
      n->args = {unary()};
      return n;
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (at_op('^')) {
      next();
      return binary('^', base, unary());
    }
    return base;
  }

  NodePtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Token::Kind::kNumber: {
        next();
        auto n = std::make_shared<Node>();
        n->value = t.value;
        return n;
      }
      case Token::Kind::kLParen: {
        next();
        NodePtr e = expr();
        if (peek().kind != Token::Kind::kRParen) fail_unexpected();
        next();
        return e;
      }
      case Token::Kind::kIdent:
        return identifier();
      default:
        fail_unexpected();
    }
  }

  NodePtr identifier() {
    const Token t = next();
    if (peek().kind == Token::Kind::kLParen) {
      if (!kFunctions.count(t.text)) throw ExpressionError("unknown function '" + t.text + "'", t.column);
      next();
      std::vector<NodePtr> args;
      if (peek().kind != Token::Kind::kRParen) {
        args.push_back(expr());
        while (peek().kind == Token::Kind::kComma) {
          next();
          args.push_back(expr());
        }
      }
      if (peek().kind != Token::Kind::kRParen) fail_unexpected();
      next();
      if (args.size() != 1)
        throw ExpressionError("function '" + t.text + "' takes 1 argument, got " + std::to_string(args.size()),
                              t.column);
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::kCall;
      n->name = t.text;
      n->args = std::move(args);
      return n;
    }
    if (t.text == "pi") {
      auto n = std::make_shared<Node>();
      n->value = std::numbers::pi;
      return n;
    }
    if (kFunctions.count(t.text)) throw ExpressionError("function '" + t.text + "' needs an argument", t.column);
    if (!kVariables.count(t.text)) throw ExpressionError("unknown identifier '" + t.text + "'", t.column);
    variables.insert(t.text);
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::kVariable;
    n->name = t.text;
    return n;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

double eval(const Node& n, const Vec3& x, double theta) {
  switch (n.kind) {
    case Node::Kind::kNumber:
      return n.value;
    case Node::Kind::kVariable:
      if (n.name == "theta") return theta;
      if (n.name == "x") return x.x();
      if (n.name == "y") return x.y();
      return x.z();
    case Node::Kind::kNegate:
      return -eval(*n.args[0], x, theta);
    case Node::Kind::kBinary: {
      const double a = eval(*n.args[0], x, theta);
      const double b = eval(*n.args[1], x, theta);
      switch (n.op) {
        case '+':
          return a + b;
        case '-':
          return a - b;
        case '*':
          return a * b;
        case '/':
          return a / b;
        default:
          return std::pow(a, b);
      }
    }
    case Node::Kind::kCall: {
      const double a = eval(*n.args[0], x, theta);
      if (n.name == "sin") return std::sin(a);
      if (n.name == "cos") return std::cos(a);
      if (n.name == "exp") return std::exp(a);
      if (n.name == "log") return std::log(a);
      if (n.name == "sqrt") return std::sqrt(a);
      return std::abs(a);
    }
  }
  return 0.0;
}

std::string show(const Node& n) {
  switch (n.kind) {
    case Node::Kind::kNumber: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      return buf;
    }
    case Node::Kind::kVariable:
      return n.name;
    case Node::Kind::kNegate:
      return "(-" + show(*n.args[0]) + ")";
    case Node::Kind::kBinary:
      return "(" + show(*n.args[0]) + " " + n.op + " " + show(*n.args[1]) + ")";
    case Node::Kind::kCall:
      return n.name + "(" + show(*n.args[0]) + ")";
  }
  return "";
}

}  // namespace

double Expression::evaluate(const Vec3& x) const { return eval(*root_, x, std::atan2(x.y(), x.x())); }

ScalarField Expression::sample(const GridPtr& grid) const {
  const int n = grid->dimension();
  for (const auto& v : variables_) {
    if (n == 2 && v != "theta") throw ExpressionError("variable '" + v + "' is not defined on S^1; use theta", 0);
    if (n == 3 && v == "theta") throw ExpressionError("variable 'theta' is not defined on S^2; use x, y, z", 0);
  }
  std::vector<double> v(grid->size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = evaluate(grid->node(i));
    if (!std::isfinite(v[i])) throw ExpressionError("expression is not finite at grid node " + std::to_string(i), 0);
  }
  return ScalarField(grid, std::move(v));
}

std::string Expression::to_string() const { return show(*root_); }

Expression parse_expression(const std::string& text) {
  Parser parser(text);
  Expression e;
  e.root_ = parser.parse();
  e.variables_ = std::move(parser.variables);
  return e;
}

}  // namespace dmk
