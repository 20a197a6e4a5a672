#include "relsens/expression.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <set>

namespace relsens::expr {

NodePtr Node::make_number(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Number;
  n->number = v;
  return n;
}

NodePtr Node::make_variable(int index, std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Variable;
  n->var_index = index;
  n->var_name = std::move(name);
  return n;
}

NodePtr Node::make_unary(UnaryFn fn, NodePtr operand) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Unary;
  n->ufn = fn;
  n->lhs = std::move(operand);
  return n;
}

NodePtr Node::make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Binary;
  n->bop = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

bool equal(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Node::Kind::Number:
      return a.number == b.number;
    case Node::Kind::Variable:
      return a.var_index == b.var_index && a.var_name == b.var_name;
    case Node::Kind::Unary:
      return a.ufn == b.ufn && equal(*a.lhs, *b.lhs);
    case Node::Kind::Binary:
      return a.bop == b.bop && equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
  }
  return false;
}

namespace {

// ---------------- tokenizer ----------------

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok type;
  double number = 0.0;
  std::string text;
  std::size_t offset = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    tok_.offset = pos_;
    if (pos_ >= s_.size()) {
      tok_.type = Tok::End;
      return;
    }
    const char c = s_[pos_];
    switch (c) {
      case '+': tok_.type = Tok::Plus; ++pos_; return;
      case '-': tok_.type = Tok::Minus; ++pos_; return;
      case '*': tok_.type = Tok::Star; ++pos_; return;
      case '/': tok_.type = Tok::Slash; ++pos_; return;
      case '^': tok_.type = Tok::Caret; ++pos_; return;
      case '(': tok_.type = Tok::LParen; ++pos_; return;
      case ')': tok_.type = Tok::RParen; ++pos_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      tok_.type = Tok::Ident;
      tok_.text = s_.substr(start, pos_ - start);
      return;
    }
    throw SyntaxError("expression: unexpected character '" + std::string(1, c) +
                          "' at offset " + std::to_string(pos_),
                      pos_);
  }

  void lex_number() {
    std::size_t start = pos_;
    bool digits = false;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      ++pos_;
      digits = true;
    }
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
        digits = true;
      }
    }
    if (!digits) {
      throw SyntaxError("expression: malformed number at offset " + std::to_string(start), start);
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      } else {
        pos_ = mark;  // 'e' belongs to a following identifier, not the number
      }
    }
    const std::string slice = s_.substr(start, pos_ - start);
    tok_.type = Tok::Number;
    tok_.number = std::strtod(slice.c_str(), nullptr);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  Token tok_;
};

// ---------------- recursive-descent parser ----------------

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& variables,
         const std::map<std::string, double>& parameters)
      : lex_(text), variables_(variables), parameters_(parameters) {}

  NodePtr run() {
    NodePtr e = parse_expr();
    const Token& t = lex_.peek();
    if (t.type != Tok::End) {
      throw SyntaxError("expression: unexpected trailing input at offset " +
                            std::to_string(t.offset),
                        t.offset);
    }
    return e;
  }

 private:
  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    while (lex_.peek().type == Tok::Plus || lex_.peek().type == Tok::Minus) {
      const Tok op = lex_.take().type;
      NodePtr rhs = parse_term();
      lhs = Node::make_binary(op == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub, std::move(lhs),
                              std::move(rhs));
    }
    return lhs;
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    while (lex_.peek().type == Tok::Star || lex_.peek().type == Tok::Slash) {
      const Tok op = lex_.take().type;
      NodePtr rhs = parse_factor();
      lhs = Node::make_binary(op == Tok::Star ? BinaryOp::Mul : BinaryOp::Div, std::move(lhs),
                              std::move(rhs));
    }
    return lhs;
  }

  NodePtr parse_factor() {
    if (lex_.peek().type == Tok::Minus) {
      lex_.take();
      return Node::make_unary(UnaryFn::Neg, parse_power());
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (lex_.peek().type == Tok::Caret) {
      lex_.take();
      NodePtr exponent = parse_factor();
      return Node::make_binary(BinaryOp::Pow, std::move(base), std::move(exponent));
    }
    return base;
  }

  NodePtr parse_atom() {
    const Token t = lex_.take();
    switch (t.type) {
      case Tok::Number:
        return Node::make_number(t.number);
      case Tok::LParen: {
        NodePtr e = parse_expr();
        expect_rparen(t.offset);
        return e;
      }
      case Tok::Ident:
        if (lex_.peek().type == Tok::LParen) {
          return parse_call(t);
        }
        return resolve(t);
      default:
        throw SyntaxError("expression: expected number, identifier or '(' at offset " +
                              std::to_string(t.offset),
                          t.offset);
    }
  }

  NodePtr parse_call(const Token& name) {
    static const std::map<std::string, UnaryFn> kFunctions = {{"sqrt", UnaryFn::Sqrt},
                                                              {"exp", UnaryFn::Exp},
                                                              {"ln", UnaryFn::Ln},
                                                              {"sin", UnaryFn::Sin},
                                                              {"cos", UnaryFn::Cos}};
    auto it = kFunctions.find(name.text);
    if (it == kFunctions.end()) {
      throw UnknownIdentifierError("expression: unknown function '" + name.text + "'", name.text);
    }
    lex_.take();  // '('
    NodePtr arg = parse_expr();
    expect_rparen(name.offset);
    return Node::make_unary(it->second, std::move(arg));
  }

  NodePtr resolve(const Token& t) {
    auto vit = std::find(variables_.begin(), variables_.end(), t.text);
    if (vit != variables_.end()) {
      return Node::make_variable(static_cast<int>(vit - variables_.begin()), t.text);
    }
    auto pit = parameters_.find(t.text);
    if (pit != parameters_.end()) {
      const double v = pit->second;
      if (v < 0.0) {
        return Node::make_unary(UnaryFn::Neg, Node::make_number(-v));
      }
      return Node::make_number(v);
    }
    throw UnknownIdentifierError("expression: unknown identifier '" + t.text + "'", t.text);
  }

  void expect_rparen(std::size_t open_offset) {
    const Token& t = lex_.peek();
    if (t.type != Tok::RParen) {
      throw SyntaxError("expression: missing ')' for group opened at offset " +
                            std::to_string(open_offset),
                        t.offset);
    }
    lex_.take();
  }

  Lexer lex_;
  const std::vector<std::string>& variables_;
  const std::map<std::string, double>& parameters_;
};

// ---------------- printer ----------------

std::string format_number(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

int precedence(const Node& n) {
  if (n.kind == Node::Kind::Binary) {
    switch (n.bop) {
      case BinaryOp::Add:
      case BinaryOp::Sub:
        return 1;
      case BinaryOp::Mul:
      case BinaryOp::Div:
        return 2;
      case BinaryOp::Pow:
        return 4;
    }
  }
  if (n.kind == Node::Kind::Unary && n.ufn == UnaryFn::Neg) return 3;
  return 5;  // atoms and function calls
}

void print(const Node& n, std::string& out) {
  switch (n.kind) {
    case Node::Kind::Number:
      out += format_number(n.number);
      return;
    case Node::Kind::Variable:
      out += n.var_name;
      return;
    case Node::Kind::Unary: {
      if (n.ufn != UnaryFn::Neg) {
        switch (n.ufn) {
          case UnaryFn::Sqrt: out += "sqrt("; break;
          case UnaryFn::Exp: out += "exp("; break;
          case UnaryFn::Ln: out += "ln("; break;
          case UnaryFn::Sin: out += "sin("; break;
          case UnaryFn::Cos: out += "cos("; break;
          case UnaryFn::Neg: break;
        }
        print(*n.lhs, out);
        out += ')';
        return;
      }
      out += '-';
      // Operand of unary minus must parse as a power.
      const bool parens = precedence(*n.lhs) < 4;
      if (parens) out += '(';
      print(*n.lhs, out);
      if (parens) out += ')';
      return;
    }
    case Node::Kind::Binary: {
      const int prec = precedence(n);
      if (n.bop == BinaryOp::Pow) {
        // Left side of '^' must be an atom, right side is a factor.
        const bool lp = precedence(*n.lhs) < 5;
        if (lp) out += '(';
        print(*n.lhs, out);
        if (lp) out += ')';
        out += '^';
        const bool rp = precedence(*n.rhs) < 3;
        if (rp) out += '(';
        print(*n.rhs, out);
        if (rp) out += ')';
        return;
      }
      const char* sym = nullptr;
      switch (n.bop) {
        case BinaryOp::Add: sym = " + "; break;
        case BinaryOp::Sub: sym = " - "; break;
        case BinaryOp::Mul: sym = "*"; break;
        case BinaryOp::Div: sym = "/"; break;
        case BinaryOp::Pow: break;
      }
      const bool lp = precedence(*n.lhs) < prec;
      if (lp) out += '(';
      print(*n.lhs, out);
      if (lp) out += ')';
      out += sym;
      // Left-associative: the right operand needs parens at equal precedence
      // so the reparse reproduces the tree shape exactly.
      const bool rp = precedence(*n.rhs) <= prec;
      if (rp) out += '(';
      print(*n.rhs, out);
      if (rp) out += ')';
      return;
    }
  }
}

}  // namespace

NodePtr parse(const std::string& text, const std::vector<std::string>& variables,
              const std::map<std::string, double>& parameters) {
  if (text.empty()) {
    throw SyntaxError("expression: empty input", 0);
  }
  Parser p(text, variables, parameters);
  return p.run();
}

std::string to_string(const Node& root) {
  std::string out;
  print(root, out);
  return out;
}

namespace {
void collect_vars(const Node& n, std::set<int>& seen) {
  if (n.kind == Node::Kind::Variable) seen.insert(n.var_index);
  if (n.lhs) collect_vars(*n.lhs, seen);
  if (n.rhs) collect_vars(*n.rhs, seen);
}
}  // namespace

std::vector<int> free_variables(const Node& root) {
  std::set<int> seen;
  collect_vars(root, seen);
  return std::vector<int>(seen.begin(), seen.end());
}

}  // namespace relsens::expr
