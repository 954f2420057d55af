#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rk/ast.hpp"
#include "rk/diag.hpp"

namespace rk {

// A `type let F :: K = T in ...` binding is desugared away by substitution;
// the declared kind is kept as a side obligation the driver checks.
struct TypeDeclObligation {
  std::string name;
  KindPtr kind;
  TypePtr type;
  Span span;
};

struct ParsedProgram {
  TermPtr term;
  std::vector<TypeDeclObligation> type_obligations;
};

enum class NameSort { TypeVar, TermVar };
using ScopeSeed = std::vector<std::pair<std::string, NameSort>>;

// Parses a whole `.rk` program (one expression, let-forms included, with an
// optional trailing `;;`). Throws Diag on lexical/syntax/unbound-name errors.
ParsedProgram parse_program(const std::string& text, const ScopeSeed& seed = {});

// Single entry for the REPL: a declaration, an expression, or a meta command.
struct ReplInput {
  enum class Tag { TypeLet, TypeLetRec, TermLet, TermLetRec, Expr, Command } tag;
  std::string name;           // declaration name
  KindPtr kind;               // declared kind (type declarations)
  TypePtr type;               // declared type (term decls) or RHS (type decls)
  TermPtr term;               // RHS (term declarations) or the expression
  std::string command;        // ":quit" | ":type" | ":kind"
  TypePtr command_type;       // argument of :kind
  TermPtr command_term;       // argument of :type
};
ReplInput parse_repl_input(const std::string& text, const ScopeSeed& seed);

// Parse helpers used by tests.
TypePtr parse_type_text(const std::string& text, const ScopeSeed& seed = {});
KindPtr parse_kind_text(const std::string& text, const ScopeSeed& seed = {});
FormulaPtr parse_formula_text(const std::string& text, const ScopeSeed& seed = {});
TermPtr parse_term_text(const std::string& text, const ScopeSeed& seed = {});

// Pretty-printing. Output reparses to an alpha-equivalent tree; generated
// binder names (containing '%') are renamed to printable identifiers.
std::string pretty(const TypePtr& t);
std::string pretty(const KindPtr& k);
std::string pretty(const FormulaPtr& f);
std::string pretty(const TermPtr& m);
std::string pretty(const BaseKind& b);

}  // namespace rk
