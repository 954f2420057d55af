#pragma once

#include <set>
#include <string>

#include "rk/ast.hpp"

namespace rk {

// Fresh names append "%N" to a base; '%' never lexes, so generated binders
// can't collide with source identifiers. The pretty-printer renames them back.
std::string fresh_name(const std::string& base);
std::string base_of(const std::string& name);

// Free variables (type and term variables share one namespace here; the
// parser keeps the sorts apart).
std::set<std::string> free_vars(const TypePtr& t);
std::set<std::string> free_vars(const KindPtr& k);
std::set<std::string> free_vars(const FormulaPtr& f);
std::set<std::string> free_vars(const TermPtr& m);

// Capture-avoiding substitution of a type for a type variable.
TypePtr subst_type(const TypePtr& target, const std::string& var, const TypePtr& repl);
KindPtr subst_type(const KindPtr& target, const std::string& var, const TypePtr& repl);
FormulaPtr subst_type(const FormulaPtr& target, const std::string& var, const TypePtr& repl);
ExtPtr subst_type(const ExtPtr& target, const std::string& var, const TypePtr& repl);
TermPtr subst_type(const TermPtr& target, const std::string& var, const TypePtr& repl);

// Capture-avoiding substitution of a term for a term variable.
TermPtr subst_term(const TermPtr& target, const std::string& var, const TermPtr& repl);

// Alpha-equivalence.
bool alpha_eq(const TypePtr& a, const TypePtr& b);
bool alpha_eq(const KindPtr& a, const KindPtr& b);
bool alpha_eq(const FormulaPtr& a, const FormulaPtr& b);
bool alpha_eq(const TermPtr& a, const TermPtr& b);
bool alpha_eq(const BaseKind& a, const BaseKind& b);

// A deterministic structural key, invariant under alpha-renaming. Used for
// caches.
std::string alpha_key(const TypePtr& t);
std::string alpha_key(const KindPtr& k);
std::string alpha_key(const FormulaPtr& f);

}  // namespace rk
