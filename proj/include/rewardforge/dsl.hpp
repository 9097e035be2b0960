#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rewardforge/obs.hpp"

namespace rewardforge::dsl {

struct ParseError : std::runtime_error {
  int line;
  int col;
  ParseError(int line_, int col_, const std::string& msg)
      : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                           std::to_string(col_) + ": " + msg),
        line(line_),
        col(col_) {}
};

struct ShapeError : std::runtime_error {
  std::string binding;
  ShapeError(const std::string& binding_, const std::string& msg)
      : std::runtime_error("shape error in '" + binding_ + "': " + msg),
        binding(binding_) {}
};

struct EvalFault : std::runtime_error {
  std::string binding;
  explicit EvalFault(const std::string& binding_, const std::string& msg)
      : std::runtime_error("evaluation fault in '" + binding_ + "': " + msg),
        binding(binding_) {}
};

enum class BinOp { Add, Sub, Mul, Div, Pow };
enum class CmpOp { Lt, Le, Gt, Ge, Eq };

enum class Fn {
  Exp, Log, Tanh, Abs, Sqrt, Asin, Acos,
  Clamp, Where, Norm, Mean, Sum, Min, Max,
  QVec, QW, QRot,
};

inline const std::unordered_map<std::string, std::pair<Fn, int>>& fn_table() {
  static const std::unordered_map<std::string, std::pair<Fn, int>> table = {
      {"exp", {Fn::Exp, 1}},   {"log", {Fn::Log, 1}},
      {"tanh", {Fn::Tanh, 1}}, {"abs", {Fn::Abs, 1}},
      {"sqrt", {Fn::Sqrt, 1}}, {"asin", {Fn::Asin, 1}},
      {"acos", {Fn::Acos, 1}}, {"clamp", {Fn::Clamp, 3}},
      {"where", {Fn::Where, 3}}, {"norm", {Fn::Norm, 1}},
      {"mean", {Fn::Mean, 1}}, {"sum", {Fn::Sum, 1}},
      {"min", {Fn::Min, 2}},   {"max", {Fn::Max, 2}},
      {"qvec", {Fn::QVec, 1}}, {"qw", {Fn::QW, 1}},
      {"qrot", {Fn::QRot, 2}},
  };
  return table;
}

inline std::string_view fn_name(Fn fn) {
  switch (fn) {
    case Fn::Exp: return "exp";
    case Fn::Log: return "log";
    case Fn::Tanh: return "tanh";
    case Fn::Abs: return "abs";
    case Fn::Sqrt: return "sqrt";
    case Fn::Asin: return "asin";
    case Fn::Acos: return "acos";
    case Fn::Clamp: return "clamp";
    case Fn::Where: return "where";
    case Fn::Norm: return "norm";
    case Fn::Mean: return "mean";
    case Fn::Sum: return "sum";
    case Fn::Min: return "min";
    case Fn::Max: return "max";
    case Fn::QVec: return "qvec";
    case Fn::QW: return "qw";
    case Fn::QRot: return "qrot";
  }
  return "?";
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Identifier resolution target, fixed at parse time.
struct IdentRef {
  bool is_binding = false;
  int index = -1;  // binding slot or roster index
};

struct Expr {
  enum class Kind { Literal, Ident, Neg, Bin, Cmp, Call };
  Kind kind = Kind::Literal;
  double literal = 0.0;
  std::string ident;
  IdentRef ref;
  BinOp bin = BinOp::Add;
  CmpOp cmp = CmpOp::Lt;
  Fn fn = Fn::Exp;
  std::vector<ExprPtr> args;
  int line = 0;
  int col = 0;
};

inline bool ast_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::Literal:
      return a.literal == b.literal;
    case Expr::Kind::Ident:
      return a.ident == b.ident && a.ref.is_binding == b.ref.is_binding &&
             a.ref.index == b.ref.index;
    case Expr::Kind::Neg:
      break;
    case Expr::Kind::Bin:
      if (a.bin != b.bin) return false;
      break;
    case Expr::Kind::Cmp:
      if (a.cmp != b.cmp) return false;
      break;
    case Expr::Kind::Call:
      if (a.fn != b.fn) return false;
      break;
  }
  if (a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!ast_equal(*a.args[i], *b.args[i])) return false;
  return true;
}

struct Binding {
  std::string name;
  ExprPtr expr;
  int line = 0;
};

enum class Provenance { Builtin, Llm, File };

struct RewardProgram {
  std::vector<Binding> bindings;
  std::string source;
  Provenance provenance = Provenance::File;
  int total_index = -1;
  std::vector<int> component_indices;  // non-underscore bindings except total

  bool equal_ast(const RewardProgram& o) const {
    if (bindings.size() != o.bindings.size()) return false;
    for (std::size_t i = 0; i < bindings.size(); ++i) {
      if (bindings[i].name != o.bindings[i].name) return false;
      if (!ast_equal(*bindings[i].expr, *o.bindings[i].expr)) return false;
    }
    return true;
  }
};

// ---------------------------------------------------------------------------
// Lexer

namespace detail {

struct Token {
  enum class Type { Ident, Number, Op, Newline, End };
  Type type = Type::End;
  std::string text;
  double number = 0.0;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    bool line_has_token = false;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        continue;
      }
      if (c == '\n') {
        if (line_has_token) out.push_back(make(Token::Type::Newline, "\n"));
        advance();
        ++line_;
        col_ = 1;
        line_has_token = false;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        advance();
        continue;
      }
      line_has_token = true;
      if (std::isdigit(static_cast<unsigned char>(c))) {
        out.push_back(number());
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        out.push_back(ident());
        continue;
      }
      out.push_back(op());
    }
    if (line_has_token) out.push_back(make(Token::Type::Newline, "\n"));
    out.push_back(make(Token::Type::End, ""));
    return out;
  }

 private:
  Token make(Token::Type type, std::string text) {
    Token t;
    t.type = type;
    t.text = std::move(text);
    t.line = line_;
    t.col = col_;
    return t;
  }

  void advance() {
    ++pos_;
    ++col_;
  }

  Token number() {
    const int start_col = col_;
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
      advance();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      advance();
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        advance();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_;
      int mark_col = col_;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
          advance();
      } else {
        pos_ = mark;  // bare 'e' belongs to a following identifier
        col_ = mark_col;
      }
    }
    Token t = make(Token::Type::Number, std::string(src_.substr(start, pos_ - start)));
    t.col = start_col;
    double value = 0.0;
    auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (res.ec != std::errc())
      throw ParseError(line_, start_col, "bad number literal '" + t.text + "'");
    t.number = value;
    return t;
  }

  Token ident() {
    const int start_col = col_;
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      advance();
    Token t = make(Token::Type::Ident, std::string(src_.substr(start, pos_ - start)));
    t.col = start_col;
    return t;
  }

  Token op() {
    const int start_col = col_;
    const char c = src_[pos_];
    advance();
    std::string text(1, c);
    if ((c == '<' || c == '>') && pos_ < src_.size() && src_[pos_] == '=') {
      text += '=';
      advance();
    }
    static const std::string allowed = "+-*/^()=,<>";
    if (allowed.find(c) == std::string::npos)
      throw ParseError(line_, start_col, std::string("unexpected character '") + c + "'");
    Token t = make(Token::Type::Op, text);
    t.col = start_col;
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Parser

namespace detail {

class Parser {
 public:
  Parser(std::string source, Provenance provenance)
      : source_(std::move(source)), provenance_(provenance) {
    tokens_ = Lexer(source_).run();
  }

  RewardProgram run() {
    RewardProgram program;
    program.source = source_;
    program.provenance = provenance_;
    while (peek().type != Token::Type::End) {
      if (peek().type == Token::Type::Newline) {
        next();
        continue;
      }
      parse_binding(program);
    }
    if (program.total_index < 0) {
      throw ParseError(last_line_, 1, "missing required binding 'total'");
    }
    for (int i = 0; i < static_cast<int>(program.bindings.size()); ++i) {
      const std::string& name = program.bindings[i].name;
      if (i != program.total_index && !name.empty() && name[0] != '_')
        program.component_indices.push_back(i);
    }
    return program;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t i = std::min(cursor_ + ahead, tokens_.size() - 1);
    return tokens_[i];
  }

  const Token& next() {
    const Token& t = tokens_[std::min(cursor_, tokens_.size() - 1)];
    if (cursor_ < tokens_.size() - 1) ++cursor_;
    last_line_ = t.line;
    return t;
  }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ParseError(t.line, t.col, msg);
  }

  bool is_op(const Token& t, std::string_view text) const {
    return t.type == Token::Type::Op && t.text == text;
  }

  void expect_op(std::string_view text) {
    const Token& t = next();
    if (!is_op(t, text))
      fail(t, "expected '" + std::string(text) + "', got '" + t.text + "'");
  }

  void parse_binding(RewardProgram& program) {
    const Token& name_tok = next();
    if (name_tok.type != Token::Type::Ident)
      fail(name_tok, "expected binding name, got '" + name_tok.text + "'");
    for (const Binding& b : program.bindings)
      if (b.name == name_tok.text)
        fail(name_tok, "duplicate binding '" + name_tok.text + "'");
    expect_op("=");
    ExprPtr expr = parse_expr(program);
    const Token& end = next();
    if (end.type != Token::Type::Newline && end.type != Token::Type::End)
      fail(end, "expected end of line, got '" + end.text + "'");

    Binding binding;
    binding.name = name_tok.text;
    binding.expr = std::move(expr);
    binding.line = name_tok.line;
    if (binding.name == "total") program.total_index = static_cast<int>(program.bindings.size());
    program.bindings.push_back(std::move(binding));
  }

  ExprPtr parse_expr(const RewardProgram& program) {
    ExprPtr lhs = parse_term(program);
    while (is_op(peek(), "+") || is_op(peek(), "-")) {
      const Token& op = next();
      ExprPtr rhs = parse_term(program);
      auto node = std::make_shared<Expr>();
      node->kind = Expr::Kind::Bin;
      node->bin = op.text == "+" ? BinOp::Add : BinOp::Sub;
      node->args = {std::move(lhs), std::move(rhs)};
      node->line = op.line;
      node->col = op.col;
      lhs = std::move(node);
    }
    return lhs;
  }

  ExprPtr parse_term(const RewardProgram& program) {
    ExprPtr lhs = parse_factor(program);
    while (is_op(peek(), "*") || is_op(peek(), "/")) {
      const Token& op = next();
      ExprPtr rhs = parse_factor(program);
      auto node = std::make_shared<Expr>();
      node->kind = Expr::Kind::Bin;
      node->bin = op.text == "*" ? BinOp::Mul : BinOp::Div;
      node->args = {std::move(lhs), std::move(rhs)};
      node->line = op.line;
      node->col = op.col;
      lhs = std::move(node);
    }
    return lhs;
  }

  ExprPtr parse_factor(const RewardProgram& program) {
    ExprPtr base = parse_base(program);
    if (is_op(peek(), "^")) {
      const Token& op = next();
      ExprPtr exponent = parse_factor(program);  // right associative
      auto node = std::make_shared<Expr>();
      node->kind = Expr::Kind::Bin;
      node->bin = BinOp::Pow;
      node->args = {std::move(base), std::move(exponent)};
      node->line = op.line;
      node->col = op.col;
      return node;
    }
    return base;
  }

  ExprPtr parse_base(const RewardProgram& program) {
    const Token& t = peek();
    if (t.type == Token::Type::Number) {
      next();
      auto node = std::make_shared<Expr>();
      node->kind = Expr::Kind::Literal;
      node->literal = t.number;
      node->line = t.line;
      node->col = t.col;
      return node;
    }
    if (is_op(t, "-")) {
      next();
      ExprPtr inner = parse_base(program);
      auto node = std::make_shared<Expr>();
      node->kind = Expr::Kind::Neg;
      node->args = {std::move(inner)};
      node->line = t.line;
      node->col = t.col;
      return node;
    }
    if (is_op(t, "(")) {
      next();
      ExprPtr inner = parse_expr(program);
      const Token& after = peek();
      std::optional<CmpOp> cmp;
      if (is_op(after, "<")) cmp = CmpOp::Lt;
      else if (is_op(after, "<=")) cmp = CmpOp::Le;
      else if (is_op(after, ">")) cmp = CmpOp::Gt;
      else if (is_op(after, ">=")) cmp = CmpOp::Ge;
      else if (is_op(after, "=")) cmp = CmpOp::Eq;
      if (cmp) {
        next();
        ExprPtr rhs = parse_expr(program);
        expect_op(")");
        auto node = std::make_shared<Expr>();
        node->kind = Expr::Kind::Cmp;
        node->cmp = *cmp;
        node->args = {std::move(inner), std::move(rhs)};
        node->line = after.line;
        node->col = after.col;
        return node;
      }
      expect_op(")");
      return inner;
    }
    if (t.type == Token::Type::Ident) {
      next();
      if (is_op(peek(), "(")) {
        auto it = fn_table().find(t.text);
        if (it == fn_table().end())
          fail(t, "unknown function " + t.text);
        next();  // '('
        std::vector<ExprPtr> args;
        args.push_back(parse_expr(program));
        while (is_op(peek(), ",")) {
          next();
          args.push_back(parse_expr(program));
        }
        expect_op(")");
        if (static_cast<int>(args.size()) != it->second.second)
          fail(t, "function " + t.text + " expects " +
                      std::to_string(it->second.second) + " arguments, got " +
                      std::to_string(args.size()));
        auto node = std::make_shared<Expr>();
        node->kind = Expr::Kind::Call;
        node->fn = it->second.first;
        node->args = std::move(args);
        node->line = t.line;
        node->col = t.col;
        return node;
      }
      auto node = std::make_shared<Expr>();
      node->kind = Expr::Kind::Ident;
      node->ident = t.text;
      node->line = t.line;
      node->col = t.col;
      // Later bindings shadow roster names from their line onward.
      node->ref.is_binding = false;
      node->ref.index = -1;
      for (int i = static_cast<int>(program.bindings.size()) - 1; i >= 0; --i) {
        if (program.bindings[i].name == t.text) {
          node->ref.is_binding = true;
          node->ref.index = i;
          break;
        }
      }
      if (!node->ref.is_binding) {
        const int roster_idx = obs_index_of(t.text);
        if (roster_idx < 0)
          fail(t, "unresolved identifier '" + t.text + "'");
        node->ref.index = roster_idx;
      }
      return node;
    }
    fail(t, "expected a value, got '" + (t.type == Token::Type::Newline
                                             ? std::string("end of line")
                                             : t.text) + "'");
  }

  std::string source_;
  Provenance provenance_;
  std::vector<Token> tokens_;
  std::size_t cursor_ = 0;
  int last_line_ = 1;
};

}  // namespace detail

inline RewardProgram parse(std::string source,
                           Provenance provenance = Provenance::File) {
  return detail::Parser(std::move(source), provenance).run();
}

// ---------------------------------------------------------------------------
// Printer: canonical source; parse(print(p)) reproduces the AST exactly.

namespace detail {

inline std::string format_literal(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Bin:
      switch (e.bin) {
        case BinOp::Add:
        case BinOp::Sub: return 1;
        case BinOp::Mul:
        case BinOp::Div: return 2;
        case BinOp::Pow: return 3;
      }
      return 1;
    case Expr::Kind::Neg: return 4;
    default: return 5;  // atoms: literal, ident, call, comparison
  }
}

inline void print_expr(const Expr& e, std::string& out);

inline void print_child(const Expr& child, int min_prec, std::string& out) {
  if (precedence(child) < min_prec) {
    out += '(';
    print_expr(child, out);
    out += ')';
  } else {
    print_expr(child, out);
  }
}

inline void print_expr(const Expr& e, std::string& out) {
  switch (e.kind) {
    case Expr::Kind::Literal:
      out += format_literal(e.literal);
      return;
    case Expr::Kind::Ident:
      out += e.ident;
      return;
    case Expr::Kind::Neg:
      out += '-';
      print_child(*e.args[0], 4, out);
      return;
    case Expr::Kind::Bin: {
      const char* sym = "";
      int prec = precedence(e);
      switch (e.bin) {
        case BinOp::Add: sym = " + "; break;
        case BinOp::Sub: sym = " - "; break;
        case BinOp::Mul: sym = " * "; break;
        case BinOp::Div: sym = " / "; break;
        case BinOp::Pow: sym = " ^ "; break;
      }
      if (e.bin == BinOp::Pow) {
        // right associative; left child must bind tighter than the operator
        print_child(*e.args[0], prec + 1, out);
        out += sym;
        print_child(*e.args[1], prec, out);
      } else {
        print_child(*e.args[0], prec, out);
        out += sym;
        // '-' and '/' are left associative; parenthesize same-precedence rhs
        print_child(*e.args[1], prec + 1, out);
      }
      return;
    }
    case Expr::Kind::Cmp: {
      const char* sym = "";
      switch (e.cmp) {
        case CmpOp::Lt: sym = " < "; break;
        case CmpOp::Le: sym = " <= "; break;
        case CmpOp::Gt: sym = " > "; break;
        case CmpOp::Ge: sym = " >= "; break;
        case CmpOp::Eq: sym = " = "; break;
      }
      out += '(';
      print_expr(*e.args[0], out);
      out += sym;
      print_expr(*e.args[1], out);
      out += ')';
      return;
    }
    case Expr::Kind::Call: {
      out += fn_name(e.fn);
      out += '(';
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += ", ";
        print_expr(*e.args[i], out);
      }
      out += ')';
      return;
    }
  }
}

}  // namespace detail

inline std::string print(const RewardProgram& program) {
  std::string out;
  for (const Binding& b : program.bindings) {
    out += b.name;
    out += " = ";
    detail::print_expr(*b.expr, out);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shape checking

struct ShapeTable {
  std::vector<std::pair<std::string, Shape>> bindings;

  const Shape* find(std::string_view name) const {
    for (const auto& [n, s] : bindings)
      if (n == name) return &s;
    return nullptr;
  }
};

namespace detail {

inline Shape broadcast(const Shape& a, const Shape& b, const std::string& binding,
                       const Expr& at) {
  if (a == b) return a;
  if (a.kind == Shape::Kind::Scalar) return b;
  if (b.kind == Shape::Kind::Scalar) return a;
  throw ShapeError(binding, "cannot combine " + a.str() + " with " + b.str() +
                                " at line " + std::to_string(at.line));
}

inline Shape infer_shape(const Expr& e, const std::vector<Shape>& binding_shapes,
                         const std::string& binding) {
  switch (e.kind) {
    case Expr::Kind::Literal:
      return Shape::scalar();
    case Expr::Kind::Ident:
      return e.ref.is_binding ? binding_shapes[e.ref.index]
                              : obs_roster()[e.ref.index].shape;
    case Expr::Kind::Neg:
      return infer_shape(*e.args[0], binding_shapes, binding);
    case Expr::Kind::Bin: {
      const Shape a = infer_shape(*e.args[0], binding_shapes, binding);
      const Shape b = infer_shape(*e.args[1], binding_shapes, binding);
      return broadcast(a, b, binding, e);
    }
    case Expr::Kind::Cmp: {
      const Shape a = infer_shape(*e.args[0], binding_shapes, binding);
      const Shape b = infer_shape(*e.args[1], binding_shapes, binding);
      return broadcast(a, b, binding, e);
    }
    case Expr::Kind::Call: {
      std::vector<Shape> arg_shapes;
      arg_shapes.reserve(e.args.size());
      for (const auto& a : e.args)
        arg_shapes.push_back(infer_shape(*a, binding_shapes, binding));
      switch (e.fn) {
        case Fn::Exp: case Fn::Log: case Fn::Tanh: case Fn::Abs:
        case Fn::Sqrt: case Fn::Asin: case Fn::Acos:
          return arg_shapes[0];
        case Fn::Clamp:
          if (arg_shapes[1].kind != Shape::Kind::Scalar ||
              arg_shapes[2].kind != Shape::Kind::Scalar)
            throw ShapeError(binding, "clamp bounds must be scalar");
          return arg_shapes[0];
        case Fn::Where: {
          const Shape ab = broadcast(arg_shapes[1], arg_shapes[2], binding, e);
          return broadcast(arg_shapes[0], ab, binding, e);
        }
        case Fn::Norm:
        case Fn::Mean:
        case Fn::Sum: {
          const Shape& s = arg_shapes[0];
          if (s.kind == Shape::Kind::Vec) return Shape::scalar();
          if (s.kind == Shape::Kind::Mat) return Shape::vec(s.rows);
          throw ShapeError(binding, std::string(fn_name(e.fn)) +
                                        " needs a vector or matrix argument");
        }
        case Fn::Min:
        case Fn::Max:
          return broadcast(arg_shapes[0], arg_shapes[1], binding, e);
        case Fn::QVec:
          if (!(arg_shapes[0] == Shape::vec(4)))
            throw ShapeError(binding, "qvec needs a vec4 quaternion");
          return Shape::vec(3);
        case Fn::QW:
          if (!(arg_shapes[0] == Shape::vec(4)))
            throw ShapeError(binding, "qw needs a vec4 quaternion");
          return Shape::scalar();
        case Fn::QRot:
          if (!(arg_shapes[0] == Shape::vec(4)) || !(arg_shapes[1] == Shape::vec(3)))
            throw ShapeError(binding, "qrot needs (vec4, vec3) arguments");
          return Shape::vec(3);
      }
      throw ShapeError(binding, "unhandled function");
    }
  }
  throw ShapeError(binding, "unhandled expression kind");
}

}  // namespace detail

// Assigns a shape to every binding; total and all components must be scalar.
inline ShapeTable check(const RewardProgram& program) {
  ShapeTable table;
  std::vector<Shape> shapes;
  shapes.reserve(program.bindings.size());
  for (const Binding& b : program.bindings) {
    const Shape s = detail::infer_shape(*b.expr, shapes, b.name);
    shapes.push_back(s);
    table.bindings.emplace_back(b.name, s);
  }
  const Shape& total = shapes[program.total_index];
  if (total.kind != Shape::Kind::Scalar)
    throw ShapeError("total", "total must be scalar, got " + total.str());
  for (int idx : program.component_indices) {
    if (shapes[idx].kind != Shape::Kind::Scalar)
      throw ShapeError(program.bindings[idx].name,
                       "reward components must be scalar, got " +
                           shapes[idx].str());
  }
  return table;
}

// ---------------------------------------------------------------------------
// Batched evaluation

struct Value {
  Shape shape;
  std::vector<double> data;  // env-major, shape.elems() per env
};

struct EvalResult {
  std::vector<double> total;  // one per env
  std::vector<std::pair<std::string, std::vector<double>>> components;
};

namespace detail {

inline Value eval_expr(const Expr& e, const ObsBatch& obs,
                       const std::vector<Value>& binding_values,
                       const std::string& binding);

inline Value broadcast_pair(const Expr& e, const ObsBatch& obs,
                            const std::vector<Value>& bv,
                            const std::string& binding, const Expr& lhs,
                            const Expr& rhs, double (*op)(double, double)) {
  Value a = eval_expr(lhs, obs, bv, binding);
  Value b = eval_expr(rhs, obs, bv, binding);
  const Shape out_shape = broadcast(a.shape, b.shape, binding, e);
  const std::size_t elems = out_shape.elems();
  const int envs = obs.num_envs();
  Value out{out_shape, std::vector<double>(elems * envs)};
  const bool a_scalar = a.shape.kind == Shape::Kind::Scalar &&
                        out_shape.kind != Shape::Kind::Scalar;
  const bool b_scalar = b.shape.kind == Shape::Kind::Scalar &&
                        out_shape.kind != Shape::Kind::Scalar;
  for (int env = 0; env < envs; ++env) {
    for (std::size_t k = 0; k < elems; ++k) {
      const double av = a_scalar ? a.data[env] : a.data[env * elems + k];
      const double bv2 = b_scalar ? b.data[env] : b.data[env * elems + k];
      out.data[env * elems + k] = op(av, bv2);
    }
  }
  return out;
}

inline Value map_unary(Value v, double (*op)(double)) {
  for (double& x : v.data) x = op(x);
  return v;
}

inline Value eval_expr(const Expr& e, const ObsBatch& obs,
                       const std::vector<Value>& binding_values,
                       const std::string& binding) {
  const int envs = obs.num_envs();
  switch (e.kind) {
    case Expr::Kind::Literal: {
      return {Shape::scalar(), std::vector<double>(envs, e.literal)};
    }
    case Expr::Kind::Ident: {
      if (e.ref.is_binding) return binding_values[e.ref.index];
      return {obs_roster()[e.ref.index].shape, obs.field(e.ref.index)};
    }
    case Expr::Kind::Neg: {
      Value v = eval_expr(*e.args[0], obs, binding_values, binding);
      for (double& x : v.data) x = -x;
      return v;
    }
    case Expr::Kind::Bin: {
      switch (e.bin) {
        case BinOp::Add:
          return broadcast_pair(e, obs, binding_values, binding, *e.args[0],
                                *e.args[1], +[](double a, double b) { return a + b; });
        case BinOp::Sub:
          return broadcast_pair(e, obs, binding_values, binding, *e.args[0],
                                *e.args[1], +[](double a, double b) { return a - b; });
        case BinOp::Mul:
          return broadcast_pair(e, obs, binding_values, binding, *e.args[0],
                                *e.args[1], +[](double a, double b) { return a * b; });
        case BinOp::Div:
          return broadcast_pair(e, obs, binding_values, binding, *e.args[0],
                                *e.args[1], +[](double a, double b) { return a / b; });
        case BinOp::Pow:
          return broadcast_pair(e, obs, binding_values, binding, *e.args[0],
                                *e.args[1],
                                +[](double a, double b) { return std::pow(a, b); });
      }
      break;
    }
    case Expr::Kind::Cmp: {
      double (*op)(double, double) = nullptr;
      switch (e.cmp) {
        case CmpOp::Lt: op = +[](double a, double b) { return a < b ? 1.0 : 0.0; }; break;
        case CmpOp::Le: op = +[](double a, double b) { return a <= b ? 1.0 : 0.0; }; break;
        case CmpOp::Gt: op = +[](double a, double b) { return a > b ? 1.0 : 0.0; }; break;
        case CmpOp::Ge: op = +[](double a, double b) { return a >= b ? 1.0 : 0.0; }; break;
        case CmpOp::Eq: op = +[](double a, double b) { return a == b ? 1.0 : 0.0; }; break;
      }
      return broadcast_pair(e, obs, binding_values, binding, *e.args[0], *e.args[1], op);
    }
    case Expr::Kind::Call: {
      switch (e.fn) {
        case Fn::Exp:
          return map_unary(eval_expr(*e.args[0], obs, binding_values, binding),
                           +[](double x) { return std::exp(x); });
        case Fn::Log:
          return map_unary(eval_expr(*e.args[0], obs, binding_values, binding),
                           +[](double x) { return std::log(x); });
        case Fn::Tanh:
          return map_unary(eval_expr(*e.args[0], obs, binding_values, binding),
                           +[](double x) { return std::tanh(x); });
        case Fn::Abs:
          return map_unary(eval_expr(*e.args[0], obs, binding_values, binding),
                           +[](double x) { return std::abs(x); });
        case Fn::Sqrt:
          return map_unary(eval_expr(*e.args[0], obs, binding_values, binding),
                           +[](double x) { return std::sqrt(x); });
        case Fn::Asin:
          return map_unary(eval_expr(*e.args[0], obs, binding_values, binding),
                           +[](double x) { return std::asin(x); });
        case Fn::Acos:
          return map_unary(eval_expr(*e.args[0], obs, binding_values, binding),
                           +[](double x) { return std::acos(x); });
        case Fn::Clamp: {
          Value v = eval_expr(*e.args[0], obs, binding_values, binding);
          Value lo = eval_expr(*e.args[1], obs, binding_values, binding);
          Value hi = eval_expr(*e.args[2], obs, binding_values, binding);
          const std::size_t elems = v.shape.elems();
          for (int env = 0; env < envs; ++env)
            for (std::size_t k = 0; k < elems; ++k) {
              double& x = v.data[env * elems + k];
              x = std::min(std::max(x, lo.data[env]), hi.data[env]);
            }
          return v;
        }
        case Fn::Where: {
          Value m = eval_expr(*e.args[0], obs, binding_values, binding);
          Value a = eval_expr(*e.args[1], obs, binding_values, binding);
          Value b = eval_expr(*e.args[2], obs, binding_values, binding);
          Shape out_shape = broadcast(a.shape, b.shape, binding, e);
          out_shape = broadcast(m.shape, out_shape, binding, e);
          const std::size_t elems = out_shape.elems();
          Value out{out_shape, std::vector<double>(elems * envs)};
          auto pick = [elems](const Value& v, int env, std::size_t k) {
            return v.shape.kind == Shape::Kind::Scalar && elems > 1
                       ? v.data[env]
                       : v.data[env * elems + k];
          };
          for (int env = 0; env < envs; ++env)
            for (std::size_t k = 0; k < elems; ++k)
              out.data[env * elems + k] = pick(m, env, k) != 0.0
                                              ? pick(a, env, k)
                                              : pick(b, env, k);
          return out;
        }
        case Fn::Norm:
        case Fn::Mean:
        case Fn::Sum: {
          Value v = eval_expr(*e.args[0], obs, binding_values, binding);
          if (v.shape.kind == Shape::Kind::Scalar)
            throw ShapeError(binding, std::string(fn_name(e.fn)) +
                                          " needs a vector or matrix argument");
          const int rows = v.shape.kind == Shape::Kind::Vec ? 1 : v.shape.rows;
          const int cols = v.shape.cols;
          const Shape out_shape = v.shape.kind == Shape::Kind::Vec
                                      ? Shape::scalar()
                                      : Shape::vec(rows);
          Value out{out_shape,
                    std::vector<double>(static_cast<std::size_t>(envs) * rows)};
          for (int env = 0; env < envs; ++env) {
            for (int r = 0; r < rows; ++r) {
              double acc = 0.0;
              const std::size_t base =
                  (static_cast<std::size_t>(env) * rows + r) * cols;
              for (int c = 0; c < cols; ++c) {
                const double x = v.data[base + c];
                acc += e.fn == Fn::Norm ? x * x : x;
              }
              if (e.fn == Fn::Norm) acc = std::sqrt(acc);
              if (e.fn == Fn::Mean) acc /= cols;
              out.data[static_cast<std::size_t>(env) * rows + r] = acc;
            }
          }
          return out;
        }
        case Fn::Min:
          return broadcast_pair(e, obs, binding_values, binding, *e.args[0],
                                *e.args[1],
                                +[](double a, double b) { return std::min(a, b); });
        case Fn::Max:
          return broadcast_pair(e, obs, binding_values, binding, *e.args[0],
                                *e.args[1],
                                +[](double a, double b) { return std::max(a, b); });
        case Fn::QVec: {
          Value q = eval_expr(*e.args[0], obs, binding_values, binding);
          Value out{Shape::vec(3), std::vector<double>(static_cast<std::size_t>(envs) * 3)};
          for (int env = 0; env < envs; ++env)
            for (int k = 0; k < 3; ++k)
              out.data[env * 3 + k] = q.data[env * 4 + k];
          return out;
        }
        case Fn::QW: {
          Value q = eval_expr(*e.args[0], obs, binding_values, binding);
          Value out{Shape::scalar(), std::vector<double>(envs)};
          for (int env = 0; env < envs; ++env) out.data[env] = q.data[env * 4 + 3];
          return out;
        }
        case Fn::QRot: {
          Value q = eval_expr(*e.args[0], obs, binding_values, binding);
          Value v = eval_expr(*e.args[1], obs, binding_values, binding);
          Value out{Shape::vec(3), std::vector<double>(static_cast<std::size_t>(envs) * 3)};
          for (int env = 0; env < envs; ++env) {
            const double qx = q.data[env * 4 + 0], qy = q.data[env * 4 + 1];
            const double qz = q.data[env * 4 + 2], qw = q.data[env * 4 + 3];
            const double vx = v.data[env * 3 + 0], vy = v.data[env * 3 + 1];
            const double vz = v.data[env * 3 + 2];
            const double tx = 2.0 * (qy * vz - qz * vy);
            const double ty = 2.0 * (qz * vx - qx * vz);
            const double tz = 2.0 * (qx * vy - qy * vx);
            out.data[env * 3 + 0] = vx + qw * tx + (qy * tz - qz * ty);
            out.data[env * 3 + 1] = vy + qw * ty + (qz * tx - qx * tz);
            out.data[env * 3 + 2] = vz + qw * tz + (qx * ty - qy * tx);
          }
          return out;
        }
      }
      break;
    }
  }
  throw std::logic_error("eval_expr: unhandled node");
}

}  // namespace detail

// Pure function of (program, obs). Non-finite binding output is a fault
// naming the binding; the candidate is then marked failed upstream.
inline EvalResult evaluate(const RewardProgram& program, const ObsBatch& obs) {
  std::vector<Value> values;
  values.reserve(program.bindings.size());
  for (const Binding& b : program.bindings) {
    Value v = detail::eval_expr(*b.expr, obs, values, b.name);
    for (double x : v.data) {
      if (!std::isfinite(x))
        throw EvalFault(b.name, "non-finite value");
    }
    values.push_back(std::move(v));
  }

  EvalResult result;
  result.total = values[program.total_index].data;
  for (int idx : program.component_indices)
    result.components.emplace_back(program.bindings[idx].name,
                                   values[idx].data);
  return result;
}

// ---------------------------------------------------------------------------

struct ExtractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Returns the body of the first triple-backtick fenced block. Any info
// string after the opening fence is accepted and dropped.
inline std::string extract_code_block(std::string_view llm_text) {
  const std::size_t open = llm_text.find("```");
  if (open == std::string_view::npos)
    throw ExtractError("no fenced code block in response");
  std::size_t body_start = llm_text.find('\n', open);
  if (body_start == std::string_view::npos)
    throw ExtractError("unterminated fenced code block");
  ++body_start;
  const std::size_t close = llm_text.find("```", body_start);
  const std::size_t body_end =
      close == std::string_view::npos ? llm_text.size() : close;
  return std::string(llm_text.substr(body_start, body_end - body_start));
}

}  // namespace rewardforge::dsl
