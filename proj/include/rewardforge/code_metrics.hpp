#pragma once

#include <cmath>
#include <set>
#include <string>

#include "rewardforge/dsl.hpp"

namespace rewardforge::dsl {

struct HalsteadCounts {
  int distinct_operators = 0;  // eta1
  int distinct_operands = 0;   // eta2
  int total_operators = 0;     // N1
  int total_operands = 0;      // N2
  double volume = 0.0;         // (N1+N2) * log2(eta1+eta2)
};

struct CodeMetrics {
  int vars_used = 0;  // distinct roster observations referenced
  int loc = 0;        // non-empty non-comment source lines
  HalsteadCounts halstead;
};

namespace detail {

struct MetricsWalk {
  std::set<std::string> operators;
  std::set<std::string> operands;
  std::set<std::string> roster_vars;
  int n1 = 0;
  int n2 = 0;

  void add_operator(const std::string& key) {
    operators.insert(key);
    ++n1;
  }
  void add_operand(const std::string& key) {
    operands.insert(key);
    ++n2;
  }

  void visit(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Literal:
        add_operand(format_literal(e.literal));
        return;
      case Expr::Kind::Ident:
        add_operand(e.ident);
        if (!e.ref.is_binding) roster_vars.insert(e.ident);
        return;
      case Expr::Kind::Neg:
        add_operator("neg");
        break;
      case Expr::Kind::Bin:
        switch (e.bin) {
          case BinOp::Add: add_operator("+"); break;
          case BinOp::Sub: add_operator("-"); break;
          case BinOp::Mul: add_operator("*"); break;
          case BinOp::Div: add_operator("/"); break;
          case BinOp::Pow: add_operator("^"); break;
        }
        break;
      case Expr::Kind::Cmp:
        switch (e.cmp) {
          case CmpOp::Lt: add_operator("<"); break;
          case CmpOp::Le: add_operator("<="); break;
          case CmpOp::Gt: add_operator(">"); break;
          case CmpOp::Ge: add_operator(">="); break;
          case CmpOp::Eq: add_operator("cmp="); break;
        }
        break;
      case Expr::Kind::Call:
        add_operator(std::string(fn_name(e.fn)));
        break;
    }
    for (const auto& arg : e.args) visit(*arg);
  }
};

inline int count_loc(const std::string& source) {
  int loc = 0;
  bool line_has_code = false;
  bool in_comment = false;
  for (char c : source) {
    if (c == '\n') {
      if (line_has_code) ++loc;
      line_has_code = false;
      in_comment = false;
      continue;
    }
    if (c == '#') in_comment = true;
    if (!in_comment && c != ' ' && c != '\t' && c != '\r') line_has_code = true;
  }
  if (line_has_code) ++loc;
  return loc;
}

}  // namespace detail

// Operator/operand classification: assignment, binary and unary operators,
// comparisons and function names are operators; identifiers (including the
// bound name) and literals are operands.
inline CodeMetrics analyze(const RewardProgram& program) {
  detail::MetricsWalk walk;
  for (const Binding& b : program.bindings) {
    walk.add_operator("=");
    walk.add_operand(b.name);
    walk.visit(*b.expr);
  }

  CodeMetrics metrics;
  metrics.vars_used = static_cast<int>(walk.roster_vars.size());
  metrics.loc = detail::count_loc(program.source);
  metrics.halstead.distinct_operators = static_cast<int>(walk.operators.size());
  metrics.halstead.distinct_operands = static_cast<int>(walk.operands.size());
  metrics.halstead.total_operators = walk.n1;
  metrics.halstead.total_operands = walk.n2;
  const double vocabulary = metrics.halstead.distinct_operators +
                            metrics.halstead.distinct_operands;
  metrics.halstead.volume =
      vocabulary > 0.0
          ? (walk.n1 + walk.n2) * std::log2(vocabulary)
          : 0.0;
  return metrics;
}

}  // namespace rewardforge::dsl
