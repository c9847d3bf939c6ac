#pragma once

// Role-keyed prompt templates and rendering. Template text is frozen here;
// placeholders are `{snake_case}` tokens, and any other brace content (for
// example the literal `{The theorem's Lean4 formal statement}` the
// translation template shows the model) is inert text.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "forge/util.hpp"

namespace forge {

enum class Role {
  nl_gen,
  translator,
  fl_rev,
  fl_align,
  fl_to_nl,
  back_translate,
  nli_check,
  prover,
};

inline const std::vector<Role>& all_roles() {
  static const std::vector<Role> roles = {Role::nl_gen,   Role::translator,
                                          Role::fl_rev,   Role::fl_align,
                                          Role::fl_to_nl, Role::back_translate,
                                          Role::nli_check, Role::prover};
  return roles;
}

inline std::string to_string(Role r) {
  switch (r) {
    case Role::nl_gen: return "nl_gen";
    case Role::translator: return "translator";
    case Role::fl_rev: return "fl_rev";
    case Role::fl_align: return "fl_align";
    case Role::fl_to_nl: return "fl_to_nl";
    case Role::back_translate: return "back_translate";
    case Role::nli_check: return "nli_check";
    case Role::prover: return "prover";
  }
  return "nl_gen";
}

inline Role role_from_string(const std::string& s) {
  for (Role r : all_roles()) {
    if (to_string(r) == s) return r;
  }
  throw ConfigError("unknown role: " + s);
}

namespace prompts {

// The `\n` sequences below are literal backslash-n characters: the source
// templates embed them as text, and the models were trained to read them
// that way. Real line breaks are real line breaks.

inline constexpr const char* kNlGen =
    R"PT(You are an expert mathematics professor tasked with creating proof problems for undergraduate mathematics majors. Your assignment is to construct a proof problem that integrates {concept1} from {domain1} and {concept2} from {domain2}.

Requirements:
1. Create a concise theorem appropriate for undergraduate mathematics majors.
2. The theorem should be brief, not exceeding 50 words.
3. Incorporate both specified concepts into the theorem naturally.
4. State the theorem clearly and concisely.
5. Ensure the theorem is simple enough to be easily translated into Lean4.

Format exactly:
# Answer\nInsert your problem with "||" format, i.e. ||Theorem: Insert the theorem in natural language here.||)PT";

inline constexpr const char* kTranslator =
    R"PT(You are an expert in the Lean4 theorem prover. Your task is to translate theorems from natural language into formal Lean4 statements. Please follow these guidelines:

1. Carefully analyze the given theorem in natural language.
2. Translate it into a correct and precise Lean4 formal statement.
3. Use the following format for your response:
theorem tm_name : {The theorem's Lean4 formal statement} := by sorry
4. Focus solely on the translation. Do not attempt to prove the theorem or provide additional explanations.
5. Ensure that your translation accurately captures all the mathematical concepts and relationships expressed in the natural language version.
6. Use appropriate Lean4 syntax, including correct use of quantifiers, implications, and mathematical symbols.
7. If the theorem involves specific mathematical structures (e.g., groups, rings, topological spaces), use the corresponding Lean4 definitions and notations.

Remember, the goal is to create a syntactically correct and semantically accurate formalization in Lean4. Your translation should be faithful to the meaning of the original theorem while adhering to Lean4 conventions and best practices.

Now please begin by carefully reading the natural language statement provided, and then proceed with your translation into Lean4.
{informal_statement})PT";

// Alternate translation prompt used when the translator role is bound to a
// general-purpose teacher model for comparison runs.
inline constexpr const char* kTranslatorTeacher =
    R"PT(Please autoformalize the following problem in Lean 4 with a header. Use the following theorem names: tm_name. Respond strictly with the translation, without any additional explanation.\n\n{informal_statement})PT";

inline constexpr const char* kFlRev =
    R"PT(You are a math expert and an expert in Lean4. Your task is to modify the Lean4 code based on the given natural language description of a theorem, the corresponding Lean4 code, and the error message from the Lean compiler.

Requirements:
1. Correct the Lean4 code to make it compile successfully.
2. Lean4 code may lack or have additional declarations of certain content. You can add or remove them as much as possible to keep it consistent with the natural language description.
3. No need to import any packages, because Mathlib will be imported by default as import Mathlib.
4. Carefully read the content and provide your modified answer: **Lean4 code**\n{formal_statement}\n**Compiler error messages**\n{compiler_error_messages}\n**natural language statement**\n{informal_statement}

Format exactly:
# Analysis\nInsert your analysis here
# Answer\nInsert your revised Lean4 code with "||" format, i.e. ||theorem tm_name your revised Lean4 code here := by sorry||)PT";

inline constexpr const char* kFlAlign =
    R"PT(You are a math expert and an expert in Lean4. Your task is to check the alignment between the given natural language description of a theorem and the corresponding Lean4 code.

Requirements:
1. Determine whether the Lean4 code is missing declarations of certain entities.
2. Assess whether the Lean4 code accurately represents the theorem described in the natural language.
3. Carefully read the content and provide your answer: **Lean4 code**\n{formal_statement}\n**natural language statement**\n{informal_statement}

Format exactly:
# Analysis:\nInsert your analysis here
# Answer\nreply ||good||, ||average|| or ||poor||)PT";

inline constexpr const char* kFlToNl =
    R"PT(You are a math expert and an expert in Lean4. Your task is to translate theorems from Lean4 code into natural language.

Requirements:
1. Focus solely on the translation. Do not attempt to prove the theorem or provide additional explanations.
2. The theorem's natural language statement should be brief, not exceeding 50 words.
3. Carefully analyze the given theorem in Lean4 code {formal_statement} and provide your translation in natural language.

Format exactly:
# Answer\nInsert your translation with "||" format, i.e. ||Theorem: Insert the theorem in natural language here.||)PT";

inline constexpr const char* kBackTranslate =
    R"PT([UNUSED_TOKEN_146]user\nConvert the formal statement into natural language:\n```lean\n{formal_statement}\n```[UNUSED_TOKEN_145]\n[UNUSED_TOKEN_146]assistant\n)PT";

inline constexpr const char* kNliCheck =
    R"PT(You are an experienced mathematics expert and educator with extensive experience in mathematical problem analysis. I need you to analyze the fundamental nature of the following two mathematical problems.

# Focus on:
1. Core mathematical concepts and principles
2. Problem-solving approaches and methodologies
3. Ultimate objectives of the problems

# Ignore:
1. Variations in wording
2. Changes in contextual scenarios

# Present your answer using exactly this format:
# Analysis\nInsert your analysis here
# Conclusion\nreply ||same|| or ||different|| with "||" format

# Please approach this analysis with professional rigor.
Math Problem 1: {informal_statement}
Math Problem 2: {back_translation})PT";

inline constexpr const char* kProver =
    R"PT(Complete the following Lean 4 code:

```lean4
{formal_statement}
```
)PT";

}  // namespace prompts

inline const std::string& template_text(Role r) {
  static const std::map<Role, std::string> table = {
      {Role::nl_gen, prompts::kNlGen},
      {Role::translator, prompts::kTranslator},
      {Role::fl_rev, prompts::kFlRev},
      {Role::fl_align, prompts::kFlAlign},
      {Role::fl_to_nl, prompts::kFlToNl},
      {Role::back_translate, prompts::kBackTranslate},
      {Role::nli_check, prompts::kNliCheck},
      {Role::prover, prompts::kProver},
  };
  return table.at(r);
}

inline const std::string& teacher_translation_template() {
  static const std::string t = prompts::kTranslatorTeacher;
  return t;
}

namespace detail {

inline bool placeholder_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// Returns the placeholder name if s[pos] opens one, else empty.
inline std::string placeholder_at(std::string_view s, size_t pos) {
  if (s[pos] != '{') return {};
  size_t end = pos + 1;
  while (end < s.size() && placeholder_char(s[end])) ++end;
  if (end == pos + 1 || end >= s.size() || s[end] != '}') return {};
  return std::string(s.substr(pos + 1, end - pos - 1));
}

}  // namespace detail

inline std::vector<std::string> template_placeholders(std::string_view tmpl) {
  std::vector<std::string> out;
  for (size_t i = 0; i < tmpl.size(); ++i) {
    std::string name = detail::placeholder_at(tmpl, i);
    if (!name.empty()) {
      if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
      i += name.size() + 1;
    }
  }
  return out;
}

using Bindings = std::map<std::string, std::string>;

// Single left-to-right substitution pass; binding values are never rescanned,
// so formal code containing braces cannot be reinterpreted as a placeholder.
inline std::string render_template(std::string_view tmpl, const Bindings& bindings) {
  std::string out;
  out.reserve(tmpl.size());
  for (size_t i = 0; i < tmpl.size(); ++i) {
    std::string name = detail::placeholder_at(tmpl, i);
    if (name.empty()) {
      out.push_back(tmpl[i]);
      continue;
    }
    auto it = bindings.find(name);
    if (it == bindings.end()) throw ForgeError("missing binding '" + name + "' for template");
    out += it->second;
    i += name.size() + 1;
  }
  return out;
}

inline std::string render_prompt(Role role, const Bindings& bindings) {
  try {
    return render_template(template_text(role), bindings);
  } catch (const ForgeError& e) {
    throw ForgeError(std::string(e.what()) + " (role " + to_string(role) + ")");
  }
}

}  // namespace forge
