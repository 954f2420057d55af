#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace rk {

struct Span {
  uint32_t begin = 0;
  uint32_t end = 0;
};

// ---------------------------------------------------------------------------
// Kinds
// ---------------------------------------------------------------------------

struct Kind;
using KindPtr = std::shared_ptr<const Kind>;

enum class BaseTag { Rec, Col, Fun, Ref, Lab, Type, PolyFun };

// A basic kind classifier. `of` is set only for PolyFun.
struct BaseKind {
  BaseTag tag = BaseTag::Type;
  KindPtr of;
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct KBase {
  BaseKind base;
};

// { binder :: base | body }
struct KRefined {
  std::string binder;
  BaseKind base;
  FormulaPtr body;
};

// Pi binder:domain. image
struct KArrow {
  std::string binder;
  KindPtr domain;
  KindPtr image;
};

struct Kind {
  std::variant<KBase, KRefined, KArrow> v;
  Span span;
};

// ---------------------------------------------------------------------------
// Types (a type-level lambda calculus)
// ---------------------------------------------------------------------------

struct Type;
using TypePtr = std::shared_ptr<const Type>;

struct TVar { std::string name; };
struct TLam { std::string binder; KindPtr annot; TypePtr body; };
struct TApp { TypePtr fn; TypePtr arg; };
// fix fnvar : (Pi binder:dom. img). body   (img may mention binder)
struct TFix { std::string fnvar; KindPtr dom; KindPtr img; std::string binder; TypePtr body; };
struct TForall { std::string binder; KindPtr annot; TypePtr body; };
struct TLabel { std::string text; };
struct TRecNil {};
struct TRecCons { TypePtr label; TypePtr field; TypePtr rest; };
struct THdLbl { TypePtr rec; };
struct THdTyp { TypePtr rec; };
struct TTl { TypePtr rec; };
struct TCol { TypePtr elem; };
struct TColOf { TypePtr arg; };
struct TRef { TypePtr elem; };
struct TRefOf { TypePtr arg; };
struct TArrow { TypePtr dom; TypePtr img; };
struct TDom { TypePtr arg; };
struct TCodom { TypePtr arg; };
struct TKindCase { TypePtr scrut; BaseKind test; std::string binder; TypePtr then_t; TypePtr else_t; };
struct TPropIte { FormulaPtr cond; TypePtr then_t; TypePtr else_t; };
struct TConcat { TypePtr lhs; TypePtr rhs; };  // label concatenation, kind Lab
struct TBot {};
struct TTop {};
struct TBool {};
struct TUnit {};
struct TInt {};
struct TString {};

struct Type {
  std::variant<TVar, TLam, TApp, TFix, TForall, TLabel, TRecNil, TRecCons,
               THdLbl, THdTyp, TTl, TCol, TColOf, TRef, TRefOf, TArrow, TDom,
               TCodom, TKindCase, TPropIte, TConcat, TBot, TTop, TBool, TUnit,
               TInt, TString>
      v;
  Span span;
};

// ---------------------------------------------------------------------------
// Refinement formulas over extended types
// ---------------------------------------------------------------------------

struct Ext;
using ExtPtr = std::shared_ptr<const Ext>;

struct EType { TypePtr type; };
struct ELabSet { TypePtr rec; };
struct EConcat { ExtPtr lhs; ExtPtr rhs; };
struct EUnion { ExtPtr lhs; ExtPtr rhs; };

struct Ext {
  std::variant<EType, ELabSet, EConcat, EUnion> v;
  Span span;
};

struct FImplies { FormulaPtr lhs; FormulaPtr rhs; };
struct FAnd { FormulaPtr lhs; FormulaPtr rhs; };
struct FOr { FormulaPtr lhs; FormulaPtr rhs; };
struct FNot { FormulaPtr arg; };
struct FTruth { bool value; };
struct FEq { ExtPtr lhs; ExtPtr rhs; };
struct FEmpty { ExtPtr arg; };
struct FMember { ExtPtr lhs; ExtPtr rhs; };
struct FApart { ExtPtr lhs; ExtPtr rhs; };
struct FIsObj { ExtPtr arg; };  // every field of the record is a function type

struct Formula {
  std::variant<FImplies, FAnd, FOr, FNot, FTruth, FEq, FEmpty, FMember, FApart,
               FIsObj>
      v;
  Span span;
};

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct MVar { std::string name; };
struct MLam { std::string binder; TypePtr annot; TermPtr body; };
struct MApp { TermPtr fn; TermPtr arg; };
struct MTyLam { std::string binder; KindPtr annot; TermPtr body; };
struct MTyApp { TermPtr fn; TypePtr arg; };
struct MRecNil {};
// Label positions hold types of kind Lab (literals after parsing, possibly
// symbolic inside polymorphic functions).
struct MRecCons { TypePtr label; TermPtr head; TermPtr rest; };
struct MHdLbl { TermPtr rec; };
struct MHdVal { TermPtr rec; };
struct MTl { TermPtr rec; };
struct MUnit {};
struct MTrue {};
struct MFalse {};
struct MIf { TermPtr cond; TermPtr then_m; TermPtr else_m; };
struct MPropIte { FormulaPtr cond; TermPtr then_m; TermPtr else_m; };
struct MKindCase { TypePtr scrut; BaseKind test; std::string binder; TermPtr then_m; TermPtr else_m; };
struct MEmptyCol { TypePtr annot; };
struct MConsCol { TermPtr head; TermPtr tail; };
struct MColCase { TermPtr scrut; TermPtr empty_m; std::string head_var; std::string tail_var; TermPtr cons_m; };
struct MRef { TermPtr arg; };
struct MDeref { TermPtr arg; };
struct MAssign { TermPtr lhs; TermPtr rhs; };
struct MLoc { uint64_t id = 0; };
struct MFix { std::string fnvar; TypePtr annot; TermPtr body; };
struct MLabel { std::string text; };  // label literal as a runtime value
struct MInt { int64_t value = 0; };
struct MStr { std::string value; };
struct MPlus { TermPtr lhs; TermPtr rhs; };  // int addition / string concatenation
struct MSeq { TermPtr first; TermPtr second; };

struct Term {
  std::variant<MVar, MLam, MApp, MTyLam, MTyApp, MRecNil, MRecCons, MHdLbl,
               MHdVal, MTl, MUnit, MTrue, MFalse, MIf, MPropIte, MKindCase,
               MEmptyCol, MConsCol, MColCase, MRef, MDeref, MAssign, MLoc,
               MFix, MLabel, MInt, MStr, MPlus, MSeq>
      v;
  Span span;
};

// ---------------------------------------------------------------------------
// Contexts and stores
// ---------------------------------------------------------------------------

struct TyBind { std::string name; KindPtr kind; };
struct TmBind { std::string name; TypePtr type; };
struct Assume { FormulaPtr formula; };
using CtxEntry = std::variant<TyBind, TmBind, Assume>;

class Context {
 public:
  Context() = default;

  Context extended(CtxEntry e) const {
    Context out = *this;
    out.entries_.push_back(std::move(e));
    return out;
  }
  Context with_ty(std::string name, KindPtr k) const {
    return extended(TyBind{std::move(name), std::move(k)});
  }
  Context with_tm(std::string name, TypePtr t) const {
    return extended(TmBind{std::move(name), std::move(t)});
  }
  Context with_assume(FormulaPtr f) const {
    return extended(Assume{std::move(f)});
  }

  const KindPtr* lookup_ty(const std::string& name) const {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
      if (auto* b = std::get_if<TyBind>(&*it); b && b->name == name) return &b->kind;
    return nullptr;
  }
  const TypePtr* lookup_tm(const std::string& name) const {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
      if (auto* b = std::get_if<TmBind>(&*it); b && b->name == name) return &b->type;
    return nullptr;
  }

  const std::vector<CtxEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<CtxEntry> entries_;
};

struct StoreTyping {
  std::map<uint64_t, TypePtr> at;
};

struct Store {
  std::map<uint64_t, TermPtr> at;  // values only
};

// ---------------------------------------------------------------------------
// Node factories
// ---------------------------------------------------------------------------

template <class Node>
inline KindPtr mk_kind(Node n, Span sp = {}) {
  return std::make_shared<Kind>(Kind{std::move(n), sp});
}
template <class Node>
inline TypePtr mk_type(Node n, Span sp = {}) {
  return std::make_shared<Type>(Type{std::move(n), sp});
}
template <class Node>
inline FormulaPtr mk_formula(Node n, Span sp = {}) {
  return std::make_shared<Formula>(Formula{std::move(n), sp});
}
template <class Node>
inline ExtPtr mk_ext(Node n, Span sp = {}) {
  return std::make_shared<Ext>(Ext{std::move(n), sp});
}
template <class Node>
inline TermPtr mk_term(Node n, Span sp = {}) {
  return std::make_shared<Term>(Term{std::move(n), sp});
}

inline BaseKind base_kind(BaseTag t) { return BaseKind{t, nullptr}; }
inline BaseKind poly_fun(KindPtr of) { return BaseKind{BaseTag::PolyFun, std::move(of)}; }

inline KindPtr kbase(BaseTag t) { return mk_kind(KBase{base_kind(t)}); }
inline KindPtr kbase(BaseKind b) { return mk_kind(KBase{std::move(b)}); }
inline KindPtr krefined(std::string binder, BaseKind base, FormulaPtr body) {
  return mk_kind(KRefined{std::move(binder), std::move(base), std::move(body)});
}
inline KindPtr karrow(std::string binder, KindPtr dom, KindPtr img) {
  return mk_kind(KArrow{std::move(binder), std::move(dom), std::move(img)});
}

inline TypePtr tvar(std::string n) { return mk_type(TVar{std::move(n)}); }
inline TypePtr tlam(std::string b, KindPtr k, TypePtr body) {
  return mk_type(TLam{std::move(b), std::move(k), std::move(body)});
}
inline TypePtr tapp(TypePtr f, TypePtr a) { return mk_type(TApp{std::move(f), std::move(a)}); }
inline TypePtr tfix(std::string fn, KindPtr dom, KindPtr img, std::string b, TypePtr body) {
  return mk_type(TFix{std::move(fn), std::move(dom), std::move(img), std::move(b), std::move(body)});
}
inline TypePtr tforall(std::string b, KindPtr k, TypePtr body) {
  return mk_type(TForall{std::move(b), std::move(k), std::move(body)});
}
inline TypePtr tlabel(std::string text) { return mk_type(TLabel{std::move(text)}); }
inline TypePtr trecnil() { return mk_type(TRecNil{}); }
inline TypePtr treccons(TypePtr l, TypePtr f, TypePtr r) {
  return mk_type(TRecCons{std::move(l), std::move(f), std::move(r)});
}
inline TypePtr thdlbl(TypePtr r) { return mk_type(THdLbl{std::move(r)}); }
inline TypePtr thdtyp(TypePtr r) { return mk_type(THdTyp{std::move(r)}); }
inline TypePtr ttl(TypePtr r) { return mk_type(TTl{std::move(r)}); }
inline TypePtr tcol(TypePtr e) { return mk_type(TCol{std::move(e)}); }
inline TypePtr tcolof(TypePtr e) { return mk_type(TColOf{std::move(e)}); }
inline TypePtr tref(TypePtr e) { return mk_type(TRef{std::move(e)}); }
inline TypePtr trefof(TypePtr e) { return mk_type(TRefOf{std::move(e)}); }
inline TypePtr tarrow(TypePtr d, TypePtr i) { return mk_type(TArrow{std::move(d), std::move(i)}); }
inline TypePtr tdom(TypePtr f) { return mk_type(TDom{std::move(f)}); }
inline TypePtr tcodom(TypePtr f) { return mk_type(TCodom{std::move(f)}); }
inline TypePtr tkindcase(TypePtr s, BaseKind k, std::string b, TypePtr t1, TypePtr t2) {
  return mk_type(TKindCase{std::move(s), std::move(k), std::move(b), std::move(t1), std::move(t2)});
}
inline TypePtr tpropite(FormulaPtr c, TypePtr t1, TypePtr t2) {
  return mk_type(TPropIte{std::move(c), std::move(t1), std::move(t2)});
}
inline TypePtr tconcat(TypePtr a, TypePtr b) { return mk_type(TConcat{std::move(a), std::move(b)}); }
inline TypePtr tbot() { return mk_type(TBot{}); }
inline TypePtr ttop() { return mk_type(TTop{}); }
inline TypePtr tbool() { return mk_type(TBool{}); }
inline TypePtr tunit() { return mk_type(TUnit{}); }
inline TypePtr tint() { return mk_type(TInt{}); }
inline TypePtr tstring() { return mk_type(TString{}); }

inline ExtPtr etype(TypePtr t) { return mk_ext(EType{std::move(t)}); }
inline ExtPtr elabset(TypePtr t) { return mk_ext(ELabSet{std::move(t)}); }
inline ExtPtr econcat(ExtPtr a, ExtPtr b) { return mk_ext(EConcat{std::move(a), std::move(b)}); }
inline ExtPtr eunion(ExtPtr a, ExtPtr b) { return mk_ext(EUnion{std::move(a), std::move(b)}); }

inline FormulaPtr fimplies(FormulaPtr a, FormulaPtr b) { return mk_formula(FImplies{std::move(a), std::move(b)}); }
inline FormulaPtr fand(FormulaPtr a, FormulaPtr b) { return mk_formula(FAnd{std::move(a), std::move(b)}); }
inline FormulaPtr for_(FormulaPtr a, FormulaPtr b) { return mk_formula(FOr{std::move(a), std::move(b)}); }
inline FormulaPtr fnot(FormulaPtr a) { return mk_formula(FNot{std::move(a)}); }
inline FormulaPtr ftruth(bool v) { return mk_formula(FTruth{v}); }
inline FormulaPtr feq(ExtPtr a, ExtPtr b) { return mk_formula(FEq{std::move(a), std::move(b)}); }
inline FormulaPtr fempty(ExtPtr a) { return mk_formula(FEmpty{std::move(a)}); }
inline FormulaPtr fmember(ExtPtr a, ExtPtr b) { return mk_formula(FMember{std::move(a), std::move(b)}); }
inline FormulaPtr fapart(ExtPtr a, ExtPtr b) { return mk_formula(FApart{std::move(a), std::move(b)}); }
inline FormulaPtr fisobj(ExtPtr a) { return mk_formula(FIsObj{std::move(a)}); }

inline TermPtr mvar(std::string n) { return mk_term(MVar{std::move(n)}); }
inline TermPtr mlam(std::string b, TypePtr t, TermPtr body) {
  return mk_term(MLam{std::move(b), std::move(t), std::move(body)});
}
inline TermPtr mapp(TermPtr f, TermPtr a) { return mk_term(MApp{std::move(f), std::move(a)}); }
inline TermPtr mtylam(std::string b, KindPtr k, TermPtr body) {
  return mk_term(MTyLam{std::move(b), std::move(k), std::move(body)});
}
inline TermPtr mtyapp(TermPtr f, TypePtr a) { return mk_term(MTyApp{std::move(f), std::move(a)}); }
inline TermPtr mrecnil() { return mk_term(MRecNil{}); }
inline TermPtr mreccons(TypePtr l, TermPtr h, TermPtr r) {
  return mk_term(MRecCons{std::move(l), std::move(h), std::move(r)});
}
inline TermPtr mhdlbl(TermPtr r) { return mk_term(MHdLbl{std::move(r)}); }
inline TermPtr mhdval(TermPtr r) { return mk_term(MHdVal{std::move(r)}); }
inline TermPtr mtl(TermPtr r) { return mk_term(MTl{std::move(r)}); }
inline TermPtr munit() { return mk_term(MUnit{}); }
inline TermPtr mtrue() { return mk_term(MTrue{}); }
inline TermPtr mfalse() { return mk_term(MFalse{}); }
inline TermPtr mif(TermPtr c, TermPtr a, TermPtr b) {
  return mk_term(MIf{std::move(c), std::move(a), std::move(b)});
}
inline TermPtr mpropite(FormulaPtr c, TermPtr a, TermPtr b) {
  return mk_term(MPropIte{std::move(c), std::move(a), std::move(b)});
}
inline TermPtr mkindcase(TypePtr s, BaseKind k, std::string b, TermPtr m1, TermPtr m2) {
  return mk_term(MKindCase{std::move(s), std::move(k), std::move(b), std::move(m1), std::move(m2)});
}
inline TermPtr memptycol(TypePtr t) { return mk_term(MEmptyCol{std::move(t)}); }
inline TermPtr mconscol(TermPtr h, TermPtr t) { return mk_term(MConsCol{std::move(h), std::move(t)}); }
inline TermPtr mcolcase(TermPtr s, TermPtr e, std::string hv, std::string tv, TermPtr c) {
  return mk_term(MColCase{std::move(s), std::move(e), std::move(hv), std::move(tv), std::move(c)});
}
inline TermPtr mref(TermPtr a) { return mk_term(MRef{std::move(a)}); }
inline TermPtr mderef(TermPtr a) { return mk_term(MDeref{std::move(a)}); }
inline TermPtr massign(TermPtr l, TermPtr r) { return mk_term(MAssign{std::move(l), std::move(r)}); }
inline TermPtr mloc(uint64_t id) { return mk_term(MLoc{id}); }
inline TermPtr mfix(std::string fn, TypePtr t, TermPtr body) {
  return mk_term(MFix{std::move(fn), std::move(t), std::move(body)});
}
inline TermPtr mlabel(std::string text) { return mk_term(MLabel{std::move(text)}); }
inline TermPtr mint(int64_t v) { return mk_term(MInt{v}); }
inline TermPtr mstr(std::string v) { return mk_term(MStr{std::move(v)}); }
inline TermPtr mplus(TermPtr a, TermPtr b) { return mk_term(MPlus{std::move(a), std::move(b)}); }
inline TermPtr mseq(TermPtr a, TermPtr b) { return mk_term(MSeq{std::move(a), std::move(b)}); }

// visitation helper
template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

}  // namespace rk
