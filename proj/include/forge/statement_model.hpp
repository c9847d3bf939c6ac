#pragma once

// Corpus record types shared by every pipeline stage. All records are
// immutable values; ids are content-addressed so identical inputs always
// produce identical manifests.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/lean_types.hpp"
#include "forge/sha256.hpp"
#include "forge/util.hpp"

namespace forge {

struct Concept {
  std::string id;
  std::string name;
  std::string topic;
  std::string domain;

  bool operator==(const Concept&) const = default;
};

inline std::string concept_id(const std::string& domain, const std::string& topic,
                              const std::string& name) {
  return "c-" + sha256_hex(domain + "\x1f" + topic + "\x1f" + name).substr(0, 16);
}

enum class NLStatus { pending, accepted, carryover, rejected };

inline std::string to_string(NLStatus s) {
  switch (s) {
    case NLStatus::pending: return "pending";
    case NLStatus::accepted: return "accepted";
    case NLStatus::carryover: return "carryover";
    case NLStatus::rejected: return "rejected";
  }
  return "pending";
}

inline NLStatus nl_status_from_string(const std::string& s) {
  if (s == "pending") return NLStatus::pending;
  if (s == "accepted") return NLStatus::accepted;
  if (s == "carryover") return NLStatus::carryover;
  if (s == "rejected") return NLStatus::rejected;
  throw ParseError("unknown status: " + s);
}

enum class Generator { student, teacher_revised };

inline std::string to_string(Generator g) {
  return g == Generator::student ? "student" : "teacher_revised";
}

inline Generator generator_from_string(const std::string& s) {
  if (s == "student") return Generator::student;
  if (s == "teacher_revised") return Generator::teacher_revised;
  throw ParseError("unknown generator: " + s);
}

enum class Origin { synthetic, proof_aug, contra_aug };

inline std::string to_string(Origin o) {
  switch (o) {
    case Origin::synthetic: return "synthetic";
    case Origin::proof_aug: return "proof_aug";
    case Origin::contra_aug: return "contra_aug";
  }
  return "synthetic";
}

inline Origin origin_from_string(const std::string& s) {
  if (s == "synthetic") return Origin::synthetic;
  if (s == "proof_aug") return Origin::proof_aug;
  if (s == "contra_aug") return Origin::contra_aug;
  throw ParseError("unknown origin: " + s);
}

enum class Rating { good, average, poor };

inline std::string to_string(Rating r) {
  switch (r) {
    case Rating::good: return "good";
    case Rating::average: return "average";
    case Rating::poor: return "poor";
  }
  return "poor";
}

inline std::optional<Rating> rating_from_answer(std::string_view s) {
  auto t = str::strip(s);
  if (t == "good") return Rating::good;
  if (t == "average") return Rating::average;
  if (t == "poor") return Rating::poor;
  return std::nullopt;
}

struct AlignmentRating {
  Rating value = Rating::poor;
};

// Pairs rated good or average enter the corpus; poor ones only keep their NL.
inline bool accept_rating(const AlignmentRating& r) {
  return r.value == Rating::good || r.value == Rating::average;
}

struct NLStatement {
  std::string id;
  std::string text;
  std::array<std::string, 2> concepts{};  // two distinct concept ids
  int round_created = 1;
  NLStatus status = NLStatus::pending;

  bool operator==(const NLStatement&) const = default;
};

struct FLStatement {
  std::string id;
  std::string nl_id;
  std::string code;  // theorem only, no import header
  Generator generator = Generator::student;
  std::optional<ParsedTheorem> parsed;
  std::optional<CompileReport> compile;

  bool operator==(const FLStatement&) const = default;
};

struct ParallelStatement {
  NLStatement nl;
  FLStatement fl;
  Origin origin = Origin::synthetic;
  std::optional<Rating> rating;  // present for synthetic pairs, good/average only
  int round = 1;

  bool operator==(const ParallelStatement&) const = default;
};

// Whitespace-insensitive canonical form of NL text used for ids and dedup.
inline std::string normalize_nl_text(std::string_view text) {
  auto words = str::split_ws(text);
  return str::join(words, " ");
}

inline std::string make_nl_id(std::string_view text, int round_created) {
  return "nl-" +
         sha256_hex(normalize_nl_text(text) + "\n" + std::to_string(round_created)).substr(0, 16);
}

inline std::string make_fl_id(const std::string& nl_id, const std::string& code,
                              Generator generator) {
  return "fl-" + sha256_hex(nl_id + "\n" + code + "\n" + to_string(generator)).substr(0, 16);
}

namespace detail {

struct DelimScanner {
  // Tracks nesting depth across ASCII and the mathlib-style multibyte
  // delimiters; i advances by whole UTF-8 sequences for those.
  int depth = 0;

  // Returns bytes consumed at s[i] (1 if plain char).
  size_t step(std::string_view s, size_t i) {
    char c = s[i];
    if (c == '(' || c == '[' || c == '{') {
      ++depth;
      return 1;
    }
    if (c == ')' || c == ']' || c == '}') {
      --depth;
      return 1;
    }
    auto match = [&](std::string_view tok) {
      return s.size() - i >= tok.size() && s.substr(i, tok.size()) == tok;
    };
    if (match("⦃") || match("⟨")) {  // ⦃ ⟨
      ++depth;
      return 3;
    }
    if (match("⦄") || match("⟩")) {  // ⦄ ⟩
      --depth;
      return 3;
    }
    return 1;
  }
};

// Byte offset of the first depth-0 occurrence of `needle`, or npos.
inline size_t find_top_level(std::string_view s, std::string_view needle) {
  DelimScanner scan;
  size_t i = 0;
  while (i < s.size()) {
    if (scan.depth == 0 && s.size() - i >= needle.size() && s.substr(i, needle.size()) == needle) {
      return i;
    }
    i += scan.step(s, i);
  }
  return std::string_view::npos;
}

}  // namespace detail

// Canonical form for formal statements: CRLF collapsed, per-line trailing
// whitespace removed, and everything after the first top-level `:=` replaced
// by the single `:= by sorry` terminator (appended when the model omitted
// it). Models sometimes emit full proofs; the corpus stores sorry'd
// statements only.
inline std::string normalize_fl_code(std::string_view raw) {
  std::string text = str::replace_all(std::string(raw), "\r\n", "\n");
  auto lines = str::split_lines(text);
  for (auto& line : lines) line = std::string(str::rstrip(line));
  while (!lines.empty() && lines.front().empty()) lines.erase(lines.begin());
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  text = str::join(lines, "\n");

  if (text.empty()) throw ParseError("empty formal statement");
  for (std::string_view decl : {"namespace", "variable", "section", "open ", "import"}) {
    if (str::starts_with(text, decl)) {
      throw ParseError("unsupported declaration context: statement must be a bare theorem, got '" +
                       std::string(decl) + "'");
    }
  }
  if (!str::starts_with(text, "theorem")) {
    throw ParseError("formal statement must start with 'theorem'");
  }

  size_t assign = detail::find_top_level(text, ":=");
  if (assign == std::string::npos) {
    return text + " := by sorry";
  }
  return text.substr(0, assign) + ":= by sorry";
}

inline void to_json(nlohmann::json& j, const NLStatement& s) {
  j = nlohmann::json{{"id", s.id},
                     {"text", s.text},
                     {"concepts", s.concepts},
                     {"round_created", s.round_created},
                     {"status", to_string(s.status)}};
}

inline void from_json(const nlohmann::json& j, NLStatement& s) {
  s.id = j.at("id").get<std::string>();
  s.text = j.at("text").get<std::string>();
  auto c = j.at("concepts").get<std::vector<std::string>>();
  if (c.size() != 2) throw ParseError("nl statement must reference exactly two concepts");
  s.concepts = {c[0], c[1]};
  s.round_created = j.at("round_created").get<int>();
  s.status = nl_status_from_string(j.at("status").get<std::string>());
}

inline void to_json(nlohmann::json& j, const FLStatement& s) {
  j = nlohmann::json{{"id", s.id},
                     {"nl_id", s.nl_id},
                     {"code", s.code},
                     {"generator", to_string(s.generator)}};
  if (s.parsed) j["parsed"] = *s.parsed;
  if (s.compile) j["compile"] = *s.compile;
}

inline void from_json(const nlohmann::json& j, FLStatement& s) {
  s.id = j.at("id").get<std::string>();
  s.nl_id = j.at("nl_id").get<std::string>();
  s.code = j.at("code").get<std::string>();
  s.generator = generator_from_string(j.at("generator").get<std::string>());
  if (j.contains("parsed")) s.parsed = j.at("parsed").get<ParsedTheorem>();
  if (j.contains("compile")) s.compile = j.at("compile").get<CompileReport>();
}

inline void to_json(nlohmann::json& j, const ParallelStatement& p) {
  j = nlohmann::json{{"nl", p.nl}, {"fl", p.fl}, {"origin", to_string(p.origin)},
                     {"round", p.round}};
  if (p.rating) j["rating"] = to_string(*p.rating);
}

inline void from_json(const nlohmann::json& j, ParallelStatement& p) {
  p.nl = j.at("nl").get<NLStatement>();
  p.fl = j.at("fl").get<FLStatement>();
  p.origin = origin_from_string(j.at("origin").get<std::string>());
  p.round = j.at("round").get<int>();
  if (j.contains("rating")) {
    auto r = rating_from_answer(j.at("rating").get<std::string>());
    if (!r) throw ParseError("unknown rating in record");
    p.rating = *r;
  } else {
    p.rating.reset();
  }
}

}  // namespace forge
