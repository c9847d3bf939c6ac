#pragma once

// Pure text-level handling of theorem statements: decomposition into name,
// binders, and conclusion; line-by-line formatting; reassembly; and the
// negation rewriting used to model contraposition. No toolchain access here.

#include <string>
#include <string_view>
#include <vector>

#include "forge/lean_types.hpp"
#include "forge/statement_model.hpp"
#include "forge/util.hpp"

namespace forge {

namespace detail {

// Position just past the delimiter group opened at `open_pos`.
inline size_t find_matching(std::string_view s, size_t open_pos) {
  DelimScanner scan;
  size_t i = open_pos;
  while (i < s.size()) {
    i += scan.step(s, i);
    if (scan.depth == 0) return i;
    if (scan.depth < 0) break;
  }
  throw ParseError("unbalanced delimiters in: " + std::string(s.substr(open_pos, 60)));
}

// Byte offset of the first depth-0 colon that is a binder/conclusion
// separator (":" but not ":=").
inline size_t find_top_level_colon(std::string_view s) {
  DelimScanner scan;
  size_t i = 0;
  while (i < s.size()) {
    if (scan.depth == 0 && s[i] == ':' && (i + 1 >= s.size() || s[i + 1] != '=')) return i;
    i += scan.step(s, i);
  }
  return std::string_view::npos;
}

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

inline bool token_at(std::string_view s, size_t i, std::string_view tok) {
  return s.size() - i >= tok.size() && s.substr(i, tok.size()) == tok;
}

// Does `type_text` contain a top-level relation or logical operator? Used by
// the heuristic binder classification (the live toolchain would elaborate
// Prop-ness instead). The function arrow is deliberately absent: `ℝ → ℝ`
// is a variable's type, and implication-only hypotheses are conventionally
// h-named, which the caller checks first.
inline bool has_top_level_prop_operator(std::string_view type_text) {
  static const std::vector<std::string> ops = {
      "≠",  // ≠
      "≤",  // ≤
      "∈",  // ∈
      "⊆",  // ⊆
      "∀",  // ∀
      "∃",  // ∃
      "∧",  // ∧
      "∨",  // ∨
      "¬",  // ¬
      "↔",  // ↔
      "≥",  // ≥
  };
  DelimScanner scan;
  size_t i = 0;
  while (i < type_text.size()) {
    if (scan.depth == 0) {
      char c = type_text[i];
      if (c == '<' || c == '>') return true;
      if (c == '=' && !(i + 1 < type_text.size() && type_text[i + 1] == '>')) return true;
      for (const auto& op : ops) {
        if (token_at(type_text, i, op)) return true;
      }
    }
    i += scan.step(type_text, i);
  }
  return false;
}

inline bool is_prop_heuristic(std::string_view name, std::string_view type_text, BinderKind kind) {
  if (kind == BinderKind::instance) return false;
  if (!name.empty() && name[0] == 'h') return true;
  return has_top_level_prop_operator(type_text);
}

}  // namespace detail

// Decomposes a single theorem declaration into its four components. Binder
// groups with several names yield one Binder per name; classification into
// variables vs hypotheses uses the syntactic heuristic above.
inline ParsedTheorem parse_statement(std::string_view code) {
  std::string normalized = normalize_fl_code(code);
  std::string_view s = normalized;
  if (!str::ends_with(s, ":= by sorry")) throw ParseError("missing ':= by sorry' terminator");
  s = str::rstrip(s.substr(0, s.size() - 11));

  if (!str::starts_with(s, "theorem")) throw ParseError("statement must start with 'theorem'");
  size_t i = 7;
  if (i >= s.size() || !detail::is_space(s[i])) throw ParseError("missing space after 'theorem'");
  while (i < s.size() && detail::is_space(s[i])) ++i;

  size_t name_start = i;
  while (i < s.size() && !detail::is_space(s[i]) && s[i] != '(' && s[i] != '{' && s[i] != '[' &&
         s[i] != ':' && !detail::token_at(s, i, "⦃")) {
    ++i;
  }
  ParsedTheorem out;
  out.name = std::string(s.substr(name_start, i - name_start));
  if (out.name.empty()) throw ParseError("missing theorem name");

  for (;;) {
    while (i < s.size() && detail::is_space(s[i])) ++i;
    if (i >= s.size()) throw ParseError("missing conclusion colon in '" + out.name + "'");

    BinderKind kind;
    size_t open_len = 1;
    if (s[i] == '(') {
      kind = BinderKind::explicit_;
    } else if (s[i] == '{') {
      kind = BinderKind::implicit;
    } else if (s[i] == '[') {
      kind = BinderKind::instance;
    } else if (detail::token_at(s, i, "⦃")) {
      kind = BinderKind::strict_implicit;
      open_len = 3;
    } else if (s[i] == ':') {
      std::string conclusion(str::strip(s.substr(i + 1)));
      if (conclusion.empty()) throw ParseError("missing conclusion in '" + out.name + "'");
      out.conclusion = conclusion;
      return out;
    } else {
      throw ParseError("unexpected token before conclusion: '" +
                       std::string(s.substr(i, 20)) + "'");
    }

    size_t end = detail::find_matching(s, i);
    size_t close_len = (kind == BinderKind::strict_implicit) ? 3 : 1;
    std::string_view content = str::strip(s.substr(i + open_len, end - i - open_len - close_len));
    if (content.empty()) throw ParseError("empty binder group in '" + out.name + "'");
    i = end;

    size_t colon = detail::find_top_level_colon(content);
    std::vector<std::string> names;
    std::string type_text;
    if (colon == std::string_view::npos) {
      if (kind != BinderKind::instance) {
        throw ParseError("binder group missing ':' in '" + out.name + "': " +
                         std::string(content));
      }
      names.push_back("");  // anonymous instance binder
      type_text = std::string(content);
    } else {
      names = str::split_ws(content.substr(0, colon));
      type_text = std::string(str::strip(content.substr(colon + 1)));
      if (names.empty()) throw ParseError("binder group with empty name list in '" + out.name + "'");
      if (type_text.empty()) throw ParseError("binder group with empty type in '" + out.name + "'");
    }
    for (const auto& nm : names) {
      Binder b{nm, kind, type_text, detail::is_prop_heuristic(nm, type_text, kind)};
      if (b.is_prop) {
        out.hypotheses.push_back(std::move(b));
      } else {
        out.variables.push_back(std::move(b));
      }
    }
  }
}

inline std::string render_binder(const Binder& b) {
  switch (b.kind) {
    case BinderKind::explicit_:
      return "(" + b.name + " : " + b.type_text + ")";
    case BinderKind::implicit:
      return "{" + b.name + " : " + b.type_text + "}";
    case BinderKind::strict_implicit:
      return "⦃" + b.name + " : " + b.type_text + "⦄";
    case BinderKind::instance:
      if (b.name.empty()) return "[" + b.type_text + "]";
      return "[" + b.name + " : " + b.type_text + "]";
  }
  throw ParseError("unreachable binder kind");
}

// Line-by-line layout: name, one binder per line (variables then
// hypotheses), conclusion, terminator. parse_statement(format_multiline(p))
// reproduces p exactly.
inline std::string format_multiline(const ParsedTheorem& p) {
  std::string out = "theorem " + p.name;
  for (const auto& b : p.variables) out += "\n    " + render_binder(b);
  for (const auto& b : p.hypotheses) out += "\n    " + render_binder(b);
  out += "\n    : " + p.conclusion;
  out += "\n    := by sorry";
  return out;
}

inline std::string reassemble_single_line(const ParsedTheorem& p) {
  std::string out = "theorem " + p.name;
  for (const auto& b : p.variables) out += " " + render_binder(b);
  for (const auto& b : p.hypotheses) out += " " + render_binder(b);
  out += " : " + p.conclusion + " := by sorry";
  return out;
}

namespace detail {

inline bool has_top_level_connective(std::string_view s) {
  static const std::vector<std::string> conn = {"∧", "∨", "→",
                                                "↔", "∀", "∃"};
  DelimScanner scan;
  size_t i = 0;
  while (i < s.size()) {
    if (scan.depth == 0) {
      for (const auto& c : conn) {
        if (token_at(s, i, c)) return true;
      }
      if (s[i] == ',') return true;
    }
    i += scan.step(s, i);
  }
  return false;
}

struct RelationSplit {
  std::string lhs;
  std::string op;
  std::string rhs;
};

inline std::optional<RelationSplit> split_top_level_relation(std::string_view s) {
  static const std::vector<std::string> rels = {" = ",      " ≠ ",  // ≠
                                                " < ",      " ≤ ",  // ≤
                                                " > ",      " ≥ ",  // ≥
                                                " ∈ ", " ∉ "};  // ∈ ∉
  DelimScanner scan;
  size_t i = 0;
  while (i < s.size()) {
    if (scan.depth == 0) {
      for (const auto& r : rels) {
        if (token_at(s, i, r)) {
          return RelationSplit{std::string(str::strip(s.substr(0, i))),
                               std::string(str::strip(r)),
                               std::string(str::strip(s.substr(i + r.size())))};
        }
      }
    }
    i += scan.step(s, i);
  }
  return std::nullopt;
}

}  // namespace detail

// Negation with the usual normalization table (mirrors what push_neg
// produces for the simple relational forms the pipeline generates):
//   ¬P → P, a = b ↔ a ≠ b, a < b → b ≤ a, a ≤ b → b < a, a > b → a ≤ b,
//   a ≥ b → a < b, membership flips. Compound propositions fall back to a
//   wrapped ¬(...) without distribution; the compile filter downstream keeps
//   only reconstructions the toolchain accepts.
inline std::string negate_prop(std::string_view prop) {
  std::string p(str::strip(prop));
  if (str::starts_with(p, "¬")) {  // ¬
    std::string inner(str::lstrip(std::string_view(p).substr(2)));
    if (str::starts_with(inner, "(") && str::ends_with(inner, ")") &&
        detail::find_matching(inner, 0) == inner.size()) {
      inner = std::string(str::strip(std::string_view(inner).substr(1, inner.size() - 2)));
    }
    return inner;
  }
  if (!detail::has_top_level_connective(p)) {
    if (auto rel = detail::split_top_level_relation(p)) {
      if (rel->op == "=") return rel->lhs + " ≠ " + rel->rhs;
      if (rel->op == "≠") return rel->lhs + " = " + rel->rhs;
      if (rel->op == "<") return rel->rhs + " ≤ " + rel->lhs;
      if (rel->op == "≤") return rel->rhs + " < " + rel->lhs;
      if (rel->op == ">") return rel->lhs + " ≤ " + rel->rhs;
      if (rel->op == "≥") return rel->lhs + " < " + rel->rhs;
      if (rel->op == "∈") return rel->lhs + " ∉ " + rel->rhs;
      if (rel->op == "∉") return rel->lhs + " ∈ " + rel->rhs;
    }
    return "¬" + p;
  }
  return "¬(" + p + ")";
}

// Splits a goal-state hypothesis line "name : type" at its first top-level
// colon.
inline std::pair<std::string, std::string> split_hypothesis_line(std::string_view line) {
  size_t colon = detail::find_top_level_colon(line);
  if (colon == std::string_view::npos) {
    throw ParseError("hypothesis line without ':' separator: " + std::string(line));
  }
  std::string name(str::strip(line.substr(0, colon)));
  std::string type(str::strip(line.substr(colon + 1)));
  if (name.empty() || type.empty()) {
    throw ParseError("malformed hypothesis line: " + std::string(line));
  }
  return {name, type};
}

// Rebuilds a statement from a goal state: every hypothesis line becomes an
// explicit binder, anonymous `inst✝`-style instance lines become bracket
// binders with the name dropped, the goal becomes the conclusion.
inline std::string state_to_statement(const GoalState& state, const std::string& name) {
  if (str::strip(state.goal).empty()) throw ParseError("goal state with empty goal");
  std::string out = "theorem " + name;
  for (const auto& line : state.hypothesis_lines) {
    auto [hyp_name, hyp_type] = split_hypothesis_line(line);
    if (hyp_name == "inst" || str::starts_with(hyp_name, "inst✝")) {  // inst✝
      out += " [" + hyp_type + "]";
    } else {
      out += " (" + hyp_name + " : " + hyp_type + ")";
    }
  }
  out += " : " + std::string(str::strip(state.goal)) + " := by sorry";
  return normalize_fl_code(out);
}

}  // namespace forge
