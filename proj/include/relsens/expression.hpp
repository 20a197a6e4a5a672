#ifndef RELSENS_EXPRESSION_HPP
#define RELSENS_EXPRESSION_HPP

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "relsens/errors.hpp"

namespace relsens::expr {

// Grammar (documented in README):
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := ['-'] power
//   power  := atom ['^' factor]
//   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
// '^' binds tighter than unary minus, binaries are left-associative.

enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class UnaryFn { Neg, Sqrt, Exp, Ln, Sin, Cos };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  enum class Kind { Number, Variable, Unary, Binary };

  Kind kind;
  double number = 0.0;
  int var_index = -1;
  std::string var_name;
  UnaryFn ufn = UnaryFn::Neg;
  BinaryOp bop = BinaryOp::Add;
  NodePtr lhs;  // unary operand lives here
  NodePtr rhs;

  static NodePtr make_number(double v);
  static NodePtr make_variable(int index, std::string name);
  static NodePtr make_unary(UnaryFn fn, NodePtr operand);
  static NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs);
};

bool equal(const Node& a, const Node& b);
std::string to_string(const Node& root);

// Parses `text` against an ordered variable vocabulary plus deterministic
// parameters folded as constants. Throws SyntaxError (with byte offset) and
// UnknownIdentifierError.
NodePtr parse(const std::string& text, const std::vector<std::string>& variables,
              const std::map<std::string, double>& parameters = {});

// Lists the distinct variable indices referenced by the tree.
std::vector<int> free_variables(const Node& root);

// --- evaluation, templated so dual numbers propagate through the tree ---

inline double value_of(double x) { return x; }

template <class T>
T evaluate(const Node& n, const std::vector<T>& values) {
  switch (n.kind) {
    case Node::Kind::Number:
      return T(n.number);
    case Node::Kind::Variable:
      return values[static_cast<std::size_t>(n.var_index)];
    case Node::Kind::Unary: {
      T a = evaluate(*n.lhs, values);
      using std::cos;
      using std::exp;
      using std::log;
      using std::sin;
      using std::sqrt;
      switch (n.ufn) {
        case UnaryFn::Neg:
          return -a;
        case UnaryFn::Sqrt:
          if (value_of(a) < 0.0) throw DomainError("expression: sqrt of negative value");
          return sqrt(a);
        case UnaryFn::Exp:
          return exp(a);
        case UnaryFn::Ln:
          if (value_of(a) <= 0.0) throw DomainError("expression: ln of non-positive value");
          return log(a);
        case UnaryFn::Sin:
          return sin(a);
        case UnaryFn::Cos:
          return cos(a);
      }
      break;
    }
    case Node::Kind::Binary: {
      T a = evaluate(*n.lhs, values);
      T b = evaluate(*n.rhs, values);
      using std::pow;
      switch (n.bop) {
        case BinaryOp::Add:
          return a + b;
        case BinaryOp::Sub:
          return a - b;
        case BinaryOp::Mul:
          return a * b;
        case BinaryOp::Div:
          if (value_of(b) == 0.0) throw DomainError("expression: division by zero");
          return a / b;
        case BinaryOp::Pow: {
          T r = pow(a, b);
          if (std::isnan(value_of(r))) {
            throw DomainError("expression: invalid power (negative base with non-integer exponent)");
          }
          return r;
        }
      }
      break;
    }
  }
  throw DomainError("expression: malformed node");
}

}  // namespace relsens::expr

#endif  // RELSENS_EXPRESSION_HPP
