#include "rk/syntax_ops.hpp"

#include <atomic>
#include <map>
#include <sstream>

namespace rk {

static std::atomic<uint64_t> g_fresh_counter{0};

std::string fresh_name(const std::string& base) {
  return base_of(base) + "%" + std::to_string(++g_fresh_counter);
}

std::string base_of(const std::string& name) {
  auto pos = name.find('%');
  return pos == std::string::npos ? name : name.substr(0, pos);
}

// ---------------------------------------------------------------------------
// Free variables
// ---------------------------------------------------------------------------

namespace {

void fv_type(const TypePtr& t, std::set<std::string>& bound, std::set<std::string>& out);
void fv_kind(const KindPtr& k, std::set<std::string>& bound, std::set<std::string>& out);
void fv_formula(const FormulaPtr& f, std::set<std::string>& bound, std::set<std::string>& out);
void fv_ext(const ExtPtr& e, std::set<std::string>& bound, std::set<std::string>& out);
void fv_term(const TermPtr& m, std::set<std::string>& bound, std::set<std::string>& out);

struct ScopedBind {
  std::set<std::string>& bound;
  std::string name;
  bool added;
  ScopedBind(std::set<std::string>& b, const std::string& n) : bound(b), name(n) {
    added = bound.insert(n).second;
  }
  ~ScopedBind() {
    if (added) bound.erase(name);
  }
};

void fv_base(const BaseKind& b, std::set<std::string>& bound, std::set<std::string>& out) {
  if (b.of) fv_kind(b.of, bound, out);
}

void fv_kind(const KindPtr& k, std::set<std::string>& bound, std::set<std::string>& out) {
  std::visit(overloaded{
                 [&](const KBase& n) { fv_base(n.base, bound, out); },
                 [&](const KRefined& n) {
                   fv_base(n.base, bound, out);
                   ScopedBind s(bound, n.binder);
                   fv_formula(n.body, bound, out);
                 },
                 [&](const KArrow& n) {
                   fv_kind(n.domain, bound, out);
                   ScopedBind s(bound, n.binder);
                   fv_kind(n.image, bound, out);
                 },
             },
             k->v);
}

void fv_type(const TypePtr& t, std::set<std::string>& bound, std::set<std::string>& out) {
  std::visit(
      overloaded{
          [&](const TVar& n) {
            if (!bound.count(n.name)) out.insert(n.name);
          },
          [&](const TLam& n) {
            fv_kind(n.annot, bound, out);
            ScopedBind s(bound, n.binder);
            fv_type(n.body, bound, out);
          },
          [&](const TApp& n) {
            fv_type(n.fn, bound, out);
            fv_type(n.arg, bound, out);
          },
          [&](const TFix& n) {
            fv_kind(n.dom, bound, out);
            ScopedBind sb(bound, n.binder);
            fv_kind(n.img, bound, out);
            ScopedBind sf(bound, n.fnvar);
            fv_type(n.body, bound, out);
          },
          [&](const TForall& n) {
            fv_kind(n.annot, bound, out);
            ScopedBind s(bound, n.binder);
            fv_type(n.body, bound, out);
          },
          [&](const TLabel&) {},
          [&](const TRecNil&) {},
          [&](const TRecCons& n) {
            fv_type(n.label, bound, out);
            fv_type(n.field, bound, out);
            fv_type(n.rest, bound, out);
          },
          [&](const THdLbl& n) { fv_type(n.rec, bound, out); },
          [&](const THdTyp& n) { fv_type(n.rec, bound, out); },
          [&](const TTl& n) { fv_type(n.rec, bound, out); },
          [&](const TCol& n) { fv_type(n.elem, bound, out); },
          [&](const TColOf& n) { fv_type(n.arg, bound, out); },
          [&](const TRef& n) { fv_type(n.elem, bound, out); },
          [&](const TRefOf& n) { fv_type(n.arg, bound, out); },
          [&](const TArrow& n) {
            fv_type(n.dom, bound, out);
            fv_type(n.img, bound, out);
          },
          [&](const TDom& n) { fv_type(n.arg, bound, out); },
          [&](const TCodom& n) { fv_type(n.arg, bound, out); },
          [&](const TKindCase& n) {
            fv_type(n.scrut, bound, out);
            fv_base(n.test, bound, out);
            {
              ScopedBind s(bound, n.binder);
              fv_type(n.then_t, bound, out);
            }
            fv_type(n.else_t, bound, out);
          },
          [&](const TPropIte& n) {
            fv_formula(n.cond, bound, out);
            fv_type(n.then_t, bound, out);
            fv_type(n.else_t, bound, out);
          },
          [&](const TConcat& n) {
            fv_type(n.lhs, bound, out);
            fv_type(n.rhs, bound, out);
          },
          [&](const TBot&) {},
          [&](const TTop&) {},
          [&](const TBool&) {},
          [&](const TUnit&) {},
          [&](const TInt&) {},
          [&](const TString&) {},
      },
      t->v);
}

void fv_ext(const ExtPtr& e, std::set<std::string>& bound, std::set<std::string>& out) {
  std::visit(overloaded{
                 [&](const EType& n) { fv_type(n.type, bound, out); },
                 [&](const ELabSet& n) { fv_type(n.rec, bound, out); },
                 [&](const EConcat& n) {
                   fv_ext(n.lhs, bound, out);
                   fv_ext(n.rhs, bound, out);
                 },
                 [&](const EUnion& n) {
                   fv_ext(n.lhs, bound, out);
                   fv_ext(n.rhs, bound, out);
                 },
             },
             e->v);
}

void fv_formula(const FormulaPtr& f, std::set<std::string>& bound, std::set<std::string>& out) {
  std::visit(overloaded{
                 [&](const FImplies& n) {
                   fv_formula(n.lhs, bound, out);
                   fv_formula(n.rhs, bound, out);
                 },
                 [&](const FAnd& n) {
                   fv_formula(n.lhs, bound, out);
                   fv_formula(n.rhs, bound, out);
                 },
                 [&](const FOr& n) {
                   fv_formula(n.lhs, bound, out);
                   fv_formula(n.rhs, bound, out);
                 },
                 [&](const FNot& n) { fv_formula(n.arg, bound, out); },
                 [&](const FTruth&) {},
                 [&](const FEq& n) {
                   fv_ext(n.lhs, bound, out);
                   fv_ext(n.rhs, bound, out);
                 },
                 [&](const FEmpty& n) { fv_ext(n.arg, bound, out); },
                 [&](const FMember& n) {
                   fv_ext(n.lhs, bound, out);
                   fv_ext(n.rhs, bound, out);
                 },
                 [&](const FApart& n) {
                   fv_ext(n.lhs, bound, out);
                   fv_ext(n.rhs, bound, out);
                 },
                 [&](const FIsObj& n) { fv_ext(n.arg, bound, out); },
             },
             f->v);
}

void fv_term(const TermPtr& m, std::set<std::string>& bound, std::set<std::string>& out) {
  std::visit(
      overloaded{
          [&](const MVar& n) {
            if (!bound.count(n.name)) out.insert(n.name);
          },
          [&](const MLam& n) {
            fv_type(n.annot, bound, out);
            ScopedBind s(bound, n.binder);
            fv_term(n.body, bound, out);
          },
          [&](const MApp& n) {
            fv_term(n.fn, bound, out);
            fv_term(n.arg, bound, out);
          },
          [&](const MTyLam& n) {
            fv_kind(n.annot, bound, out);
            ScopedBind s(bound, n.binder);
            fv_term(n.body, bound, out);
          },
          [&](const MTyApp& n) {
            fv_term(n.fn, bound, out);
            fv_type(n.arg, bound, out);
          },
          [&](const MRecNil&) {},
          [&](const MRecCons& n) {
            fv_type(n.label, bound, out);
            fv_term(n.head, bound, out);
            fv_term(n.rest, bound, out);
          },
          [&](const MHdLbl& n) { fv_term(n.rec, bound, out); },
          [&](const MHdVal& n) { fv_term(n.rec, bound, out); },
          [&](const MTl& n) { fv_term(n.rec, bound, out); },
          [&](const MUnit&) {},
          [&](const MTrue&) {},
          [&](const MFalse&) {},
          [&](const MIf& n) {
            fv_term(n.cond, bound, out);
            fv_term(n.then_m, bound, out);
            fv_term(n.else_m, bound, out);
          },
          [&](const MPropIte& n) {
            fv_formula(n.cond, bound, out);
            fv_term(n.then_m, bound, out);
            fv_term(n.else_m, bound, out);
          },
          [&](const MKindCase& n) {
            fv_type(n.scrut, bound, out);
            fv_base(n.test, bound, out);
            {
              ScopedBind s(bound, n.binder);
              fv_term(n.then_m, bound, out);
            }
            fv_term(n.else_m, bound, out);
          },
          [&](const MEmptyCol& n) { fv_type(n.annot, bound, out); },
          [&](const MConsCol& n) {
            fv_term(n.head, bound, out);
            fv_term(n.tail, bound, out);
          },
          [&](const MColCase& n) {
            fv_term(n.scrut, bound, out);
            fv_term(n.empty_m, bound, out);
            ScopedBind sh(bound, n.head_var);
            ScopedBind st(bound, n.tail_var);
            fv_term(n.cons_m, bound, out);
          },
          [&](const MRef& n) { fv_term(n.arg, bound, out); },
          [&](const MDeref& n) { fv_term(n.arg, bound, out); },
          [&](const MAssign& n) {
            fv_term(n.lhs, bound, out);
            fv_term(n.rhs, bound, out);
          },
          [&](const MLoc&) {},
          [&](const MFix& n) {
            fv_type(n.annot, bound, out);
            ScopedBind s(bound, n.fnvar);
            fv_term(n.body, bound, out);
          },
          [&](const MLabel&) {},
          [&](const MInt&) {},
          [&](const MStr&) {},
          [&](const MPlus& n) {
            fv_term(n.lhs, bound, out);
            fv_term(n.rhs, bound, out);
          },
          [&](const MSeq& n) {
            fv_term(n.first, bound, out);
            fv_term(n.second, bound, out);
          },
      },
      m->v);
}

}  // namespace

std::set<std::string> free_vars(const TypePtr& t) {
  std::set<std::string> bound, out;
  fv_type(t, bound, out);
  return out;
}
std::set<std::string> free_vars(const KindPtr& k) {
  std::set<std::string> bound, out;
  fv_kind(k, bound, out);
  return out;
}
std::set<std::string> free_vars(const FormulaPtr& f) {
  std::set<std::string> bound, out;
  fv_formula(f, bound, out);
  return out;
}
std::set<std::string> free_vars(const TermPtr& m) {
  std::set<std::string> bound, out;
  fv_term(m, bound, out);
  return out;
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

namespace {

// One substitution in flight: either a type for a type variable or a term for
// a term variable.
struct Subst {
  std::string var;
  TypePtr type_repl;  // exactly one of these is set
  TermPtr term_repl;
  std::set<std::string> repl_fv;

  bool is_type() const { return type_repl != nullptr; }
};

TypePtr s_type(const TypePtr& t, const Subst& s);
KindPtr s_kind(const KindPtr& k, const Subst& s);
FormulaPtr s_formula(const FormulaPtr& f, const Subst& s);
ExtPtr s_ext(const ExtPtr& e, const Subst& s);
TermPtr s_term(const TermPtr& m, const Subst& s);

// Rename `binder` inside a scoped part when it would capture a free variable
// of the replacement. `renames` maps old→new for occurrences.
bool needs_rename(const std::string& binder, const Subst& s) {
  return s.repl_fv.count(binder) > 0;
}

TypePtr rename_in_type(const TypePtr& body, const std::string& from, const std::string& to) {
  Subst r{from, tvar(to), nullptr, {to}};
  return s_type(body, r);
}
TermPtr rename_ty_in_term(const TermPtr& body, const std::string& from, const std::string& to) {
  Subst r{from, tvar(to), nullptr, {to}};
  return s_term(body, r);
}
TermPtr rename_tm_in_term(const TermPtr& body, const std::string& from, const std::string& to) {
  Subst r{from, nullptr, mvar(to), {to}};
  return s_term(body, r);
}
KindPtr rename_in_kind(const KindPtr& k, const std::string& from, const std::string& to) {
  Subst r{from, tvar(to), nullptr, {to}};
  return s_kind(k, r);
}
FormulaPtr rename_in_formula(const FormulaPtr& f, const std::string& from, const std::string& to) {
  Subst r{from, tvar(to), nullptr, {to}};
  return s_formula(f, r);
}

BaseKind s_base(const BaseKind& b, const Subst& s) {
  if (!b.of) return b;
  return BaseKind{b.tag, s_kind(b.of, s)};
}

KindPtr s_kind(const KindPtr& k, const Subst& s) {
  return std::visit(
      overloaded{
          [&](const KBase& n) -> KindPtr { return mk_kind(KBase{s_base(n.base, s)}, k->span); },
          [&](const KRefined& n) -> KindPtr {
            BaseKind base = s_base(n.base, s);
            std::string binder = n.binder;
            FormulaPtr body = n.body;
            if (s.is_type() && binder == s.var)
              return mk_kind(KRefined{binder, base, body}, k->span);
            if (needs_rename(binder, s)) {
              std::string nb = fresh_name(binder);
              body = rename_in_formula(body, binder, nb);
              binder = nb;
            }
            return mk_kind(KRefined{binder, base, s_formula(body, s)}, k->span);
          },
          [&](const KArrow& n) -> KindPtr {
            KindPtr dom = s_kind(n.domain, s);
            std::string binder = n.binder;
            KindPtr image = n.image;
            if (s.is_type() && binder == s.var)
              return mk_kind(KArrow{binder, dom, image}, k->span);
            if (needs_rename(binder, s)) {
              std::string nb = fresh_name(binder);
              image = rename_in_kind(image, binder, nb);
              binder = nb;
            }
            return mk_kind(KArrow{binder, dom, s_kind(image, s)}, k->span);
          },
      },
      k->v);
}

TypePtr s_type(const TypePtr& t, const Subst& s) {
  return std::visit(
      overloaded{
          [&](const TVar& n) -> TypePtr {
            if (s.is_type() && n.name == s.var) return s.type_repl;
            return t;
          },
          [&](const TLam& n) -> TypePtr {
            KindPtr annot = s_kind(n.annot, s);
            std::string binder = n.binder;
            TypePtr body = n.body;
            if (s.is_type() && binder == s.var)
              return mk_type(TLam{binder, annot, body}, t->span);
            if (needs_rename(binder, s)) {
              std::string nb = fresh_name(binder);
              body = rename_in_type(body, binder, nb);
              binder = nb;
            }
            return mk_type(TLam{binder, annot, s_type(body, s)}, t->span);
          },
          [&](const TApp& n) -> TypePtr {
            return mk_type(TApp{s_type(n.fn, s), s_type(n.arg, s)}, t->span);
          },
          [&](const TFix& n) -> TypePtr {
            KindPtr dom = s_kind(n.dom, s);
            std::string binder = n.binder;
            std::string fnvar = n.fnvar;
            KindPtr img = n.img;
            TypePtr body = n.body;
            if (needs_rename(binder, s)) {
              std::string nb = fresh_name(binder);
              img = rename_in_kind(img, binder, nb);
              body = rename_in_type(body, binder, nb);
              binder = nb;
            }
            if (needs_rename(fnvar, s)) {
              std::string nf = fresh_name(fnvar);
              body = rename_in_type(body, fnvar, nf);
              fnvar = nf;
            }
            bool binder_shadows = s.is_type() && binder == s.var;
            bool fn_shadows = s.is_type() && fnvar == s.var;
            KindPtr img2 = binder_shadows ? img : s_kind(img, s);
            TypePtr body2 = (binder_shadows || fn_shadows) ? body : s_type(body, s);
            return mk_type(TFix{fnvar, dom, img2, binder, body2}, t->span);
          },
          [&](const TForall& n) -> TypePtr {
            KindPtr annot = s_kind(n.annot, s);
            std::string binder = n.binder;
            TypePtr body = n.body;
            if (s.is_type() && binder == s.var)
              return mk_type(TForall{binder, annot, body}, t->span);
            if (needs_rename(binder, s)) {
              std::string nb = fresh_name(binder);
              body = rename_in_type(body, binder, nb);
              binder = nb;
            }
            return mk_type(TForall{binder, annot, s_type(body, s)}, t->span);
          },
          [&](const TLabel&) -> TypePtr { return t; },
          [&](const TRecNil&) -> TypePtr { return t; },
          [&](const TRecCons& n) -> TypePtr {
            return mk_type(TRecCons{s_type(n.label, s), s_type(n.field, s), s_type(n.rest, s)}, t->span);
          },
          [&](const THdLbl& n) -> TypePtr { return mk_type(THdLbl{s_type(n.rec, s)}, t->span); },
          [&](const THdTyp& n) -> TypePtr { return mk_type(THdTyp{s_type(n.rec, s)}, t->span); },
          [&](const TTl& n) -> TypePtr { return mk_type(TTl{s_type(n.rec, s)}, t->span); },
          [&](const TCol& n) -> TypePtr { return mk_type(TCol{s_type(n.elem, s)}, t->span); },
          [&](const TColOf& n) -> TypePtr { return mk_type(TColOf{s_type(n.arg, s)}, t->span); },
          [&](const TRef& n) -> TypePtr { return mk_type(TRef{s_type(n.elem, s)}, t->span); },
          [&](const TRefOf& n) -> TypePtr { return mk_type(TRefOf{s_type(n.arg, s)}, t->span); },
          [&](const TArrow& n) -> TypePtr {
            return mk_type(TArrow{s_type(n.dom, s), s_type(n.img, s)}, t->span);
          },
          [&](const TDom& n) -> TypePtr { return mk_type(TDom{s_type(n.arg, s)}, t->span); },
          [&](const TCodom& n) -> TypePtr { return mk_type(TCodom{s_type(n.arg, s)}, t->span); },
          [&](const TKindCase& n) -> TypePtr {
            TypePtr scrut = s_type(n.scrut, s);
            BaseKind test = s_base(n.test, s);
            std::string binder = n.binder;
            TypePtr then_t = n.then_t;
            TypePtr else_t = s_type(n.else_t, s);
            if (s.is_type() && binder == s.var)
              return mk_type(TKindCase{scrut, test, binder, then_t, else_t}, t->span);
            if (needs_rename(binder, s)) {
              std::string nb = fresh_name(binder);
              then_t = rename_in_type(then_t, binder, nb);
              binder = nb;
            }
            return mk_type(TKindCase{scrut, test, binder, s_type(then_t, s), else_t}, t->span);
          },
          [&](const TPropIte& n) -> TypePtr {
            return mk_type(TPropIte{s_formula(n.cond, s), s_type(n.then_t, s), s_type(n.else_t, s)}, t->span);
          },
          [&](const TConcat& n) -> TypePtr {
            return mk_type(TConcat{s_type(n.lhs, s), s_type(n.rhs, s)}, t->span);
          },
          [&](const TBot&) -> TypePtr { return t; },
          [&](const TTop&) -> TypePtr { return t; },
          [&](const TBool&) -> TypePtr { return t; },
          [&](const TUnit&) -> TypePtr { return t; },
          [&](const TInt&) -> TypePtr { return t; },
          [&](const TString&) -> TypePtr { return t; },
      },
      t->v);
}

ExtPtr s_ext(const ExtPtr& e, const Subst& s) {
  return std::visit(
      overloaded{
          [&](const EType& n) -> ExtPtr { return mk_ext(EType{s_type(n.type, s)}, e->span); },
          [&](const ELabSet& n) -> ExtPtr { return mk_ext(ELabSet{s_type(n.rec, s)}, e->span); },
          [&](const EConcat& n) -> ExtPtr {
            return mk_ext(EConcat{s_ext(n.lhs, s), s_ext(n.rhs, s)}, e->span);
          },
          [&](const EUnion& n) -> ExtPtr {
            return mk_ext(EUnion{s_ext(n.lhs, s), s_ext(n.rhs, s)}, e->span);
          },
      },
      e->v);
}

FormulaPtr s_formula(const FormulaPtr& f, const Subst& s) {
  return std::visit(
      overloaded{
          [&](const FImplies& n) -> FormulaPtr {
            return mk_formula(FImplies{s_formula(n.lhs, s), s_formula(n.rhs, s)}, f->span);
          },
          [&](const FAnd& n) -> FormulaPtr {
            return mk_formula(FAnd{s_formula(n.lhs, s), s_formula(n.rhs, s)}, f->span);
          },
          [&](const FOr& n) -> FormulaPtr {
            return mk_formula(FOr{s_formula(n.lhs, s), s_formula(n.rhs, s)}, f->span);
          },
          [&](const FNot& n) -> FormulaPtr { return mk_formula(FNot{s_formula(n.arg, s)}, f->span); },
          [&](const FTruth&) -> FormulaPtr { return f; },
          [&](const FEq& n) -> FormulaPtr {
            return mk_formula(FEq{s_ext(n.lhs, s), s_ext(n.rhs, s)}, f->span);
          },
          [&](const FEmpty& n) -> FormulaPtr { return mk_formula(FEmpty{s_ext(n.arg, s)}, f->span); },
          [&](const FMember& n) -> FormulaPtr {
            return mk_formula(FMember{s_ext(n.lhs, s), s_ext(n.rhs, s)}, f->span);
          },
          [&](const FApart& n) -> FormulaPtr {
            return mk_formula(FApart{s_ext(n.lhs, s), s_ext(n.rhs, s)}, f->span);
          },
          [&](const FIsObj& n) -> FormulaPtr { return mk_formula(FIsObj{s_ext(n.arg, s)}, f->span); },
      },
      f->v);
}

TermPtr s_term(const TermPtr& m, const Subst& s) {
  return std::visit(
      overloaded{
          [&](const MVar& n) -> TermPtr {
            if (!s.is_type() && n.name == s.var) return s.term_repl;
            return m;
          },
          [&](const MLam& n) -> TermPtr {
            TypePtr annot = s_type(n.annot, s);
            std::string binder = n.binder;
            TermPtr body = n.body;
            if (!s.is_type() && binder == s.var)
              return mk_term(MLam{binder, annot, body}, m->span);
            if (needs_rename(binder, s)) {
              std::string nb = fresh_name(binder);
              body = rename_tm_in_term(body, binder, nb);
              binder = nb;
            }
            return mk_term(MLam{binder, annot, s_term(body, s)}, m->span);
          },
          [&](const MApp& n) -> TermPtr {
            return mk_term(MApp{s_term(n.fn, s), s_term(n.arg, s)}, m->span);
          },
          [&](const MTyLam& n) -> TermPtr {
            KindPtr annot = s_kind(n.annot, s);
            std::string binder = n.binder;
            TermPtr body = n.body;
            if (s.is_type() && binder == s.var)
              return mk_term(MTyLam{binder, annot, body}, m->span);
            if (needs_rename(binder, s)) {
              std::string nb = fresh_name(binder);
              body = rename_ty_in_term(body, binder, nb);
              binder = nb;
            }
            return mk_term(MTyLam{binder, annot, s_term(body, s)}, m->span);
          },
          [&](const MTyApp& n) -> TermPtr {
            return mk_term(MTyApp{s_term(n.fn, s), s_type(n.arg, s)}, m->span);
          },
          [&](const MRecNil&) -> TermPtr { return m; },
          [&](const MRecCons& n) -> TermPtr {
            return mk_term(MRecCons{s_type(n.label, s), s_term(n.head, s), s_term(n.rest, s)}, m->span);
          },
          [&](const MHdLbl& n) -> TermPtr { return mk_term(MHdLbl{s_term(n.rec, s)}, m->span); },
          [&](const MHdVal& n) -> TermPtr { return mk_term(MHdVal{s_term(n.rec, s)}, m->span); },
          [&](const MTl& n) -> TermPtr { return mk_term(MTl{s_term(n.rec, s)}, m->span); },
          [&](const MUnit&) -> TermPtr { return m; },
          [&](const MTrue&) -> TermPtr { return m; },
          [&](const MFalse&) -> TermPtr { return m; },
          [&](const MIf& n) -> TermPtr {
            return mk_term(MIf{s_term(n.cond, s), s_term(n.then_m, s), s_term(n.else_m, s)}, m->span);
          },
          [&](const MPropIte& n) -> TermPtr {
            return mk_term(MPropIte{s_formula(n.cond, s), s_term(n.then_m, s), s_term(n.else_m, s)}, m->span);
          },
          [&](const MKindCase& n) -> TermPtr {
            TypePtr scrut = s_type(n.scrut, s);
            BaseKind test = s_base(n.test, s);
            std::string binder = n.binder;
            TermPtr then_m = n.then_m;
            TermPtr else_m = s_term(n.else_m, s);
            if (s.is_type() && binder == s.var)
              return mk_term(MKindCase{scrut, test, binder, then_m, else_m}, m->span);
            if (needs_rename(binder, s)) {
              std::string nb = fresh_name(binder);
              then_m = rename_ty_in_term(then_m, binder, nb);
              binder = nb;
            }
            return mk_term(MKindCase{scrut, test, binder, s_term(then_m, s), else_m}, m->span);
          },
          [&](const MEmptyCol& n) -> TermPtr { return mk_term(MEmptyCol{s_type(n.annot, s)}, m->span); },
          [&](const MConsCol& n) -> TermPtr {
            return mk_term(MConsCol{s_term(n.head, s), s_term(n.tail, s)}, m->span);
          },
          [&](const MColCase& n) -> TermPtr {
            TermPtr scrut = s_term(n.scrut, s);
            TermPtr empty_m = s_term(n.empty_m, s);
            std::string hv = n.head_var, tv = n.tail_var;
            TermPtr cons_m = n.cons_m;
            if (!s.is_type() && (hv == s.var || tv == s.var))
              return mk_term(MColCase{scrut, empty_m, hv, tv, cons_m}, m->span);
            if (needs_rename(hv, s)) {
              std::string nh = fresh_name(hv);
              cons_m = rename_tm_in_term(cons_m, hv, nh);
              hv = nh;
            }
            if (needs_rename(tv, s)) {
              std::string nt = fresh_name(tv);
              cons_m = rename_tm_in_term(cons_m, tv, nt);
              tv = nt;
            }
            return mk_term(MColCase{scrut, empty_m, hv, tv, s_term(cons_m, s)}, m->span);
          },
          [&](const MRef& n) -> TermPtr { return mk_term(MRef{s_term(n.arg, s)}, m->span); },
          [&](const MDeref& n) -> TermPtr { return mk_term(MDeref{s_term(n.arg, s)}, m->span); },
          [&](const MAssign& n) -> TermPtr {
            return mk_term(MAssign{s_term(n.lhs, s), s_term(n.rhs, s)}, m->span);
          },
          [&](const MLoc&) -> TermPtr { return m; },
          [&](const MFix& n) -> TermPtr {
            TypePtr annot = s_type(n.annot, s);
            std::string fnvar = n.fnvar;
            TermPtr body = n.body;
            if (!s.is_type() && fnvar == s.var)
              return mk_term(MFix{fnvar, annot, body}, m->span);
            if (needs_rename(fnvar, s)) {
              std::string nf = fresh_name(fnvar);
              body = rename_tm_in_term(body, fnvar, nf);
              fnvar = nf;
            }
            return mk_term(MFix{fnvar, annot, s_term(body, s)}, m->span);
          },
          [&](const MLabel&) -> TermPtr { return m; },
          [&](const MInt&) -> TermPtr { return m; },
          [&](const MStr&) -> TermPtr { return m; },
          [&](const MPlus& n) -> TermPtr {
            return mk_term(MPlus{s_term(n.lhs, s), s_term(n.rhs, s)}, m->span);
          },
          [&](const MSeq& n) -> TermPtr {
            return mk_term(MSeq{s_term(n.first, s), s_term(n.second, s)}, m->span);
          },
      },
      m->v);
}

Subst make_type_subst(const std::string& var, const TypePtr& repl) {
  return Subst{var, repl, nullptr, free_vars(repl)};
}
Subst make_term_subst(const std::string& var, const TermPtr& repl) {
  return Subst{var, nullptr, repl, free_vars(repl)};
}

}  // namespace

TypePtr subst_type(const TypePtr& target, const std::string& var, const TypePtr& repl) {
  return s_type(target, make_type_subst(var, repl));
}
KindPtr subst_type(const KindPtr& target, const std::string& var, const TypePtr& repl) {
  return s_kind(target, make_type_subst(var, repl));
}
FormulaPtr subst_type(const FormulaPtr& target, const std::string& var, const TypePtr& repl) {
  return s_formula(target, make_type_subst(var, repl));
}
ExtPtr subst_type(const ExtPtr& target, const std::string& var, const TypePtr& repl) {
  return s_ext(target, make_type_subst(var, repl));
}
TermPtr subst_type(const TermPtr& target, const std::string& var, const TypePtr& repl) {
  return s_term(target, make_type_subst(var, repl));
}
TermPtr subst_term(const TermPtr& target, const std::string& var, const TermPtr& repl) {
  return s_term(target, make_term_subst(var, repl));
}

// ---------------------------------------------------------------------------
// Alpha-equivalence via canonical keys
// ---------------------------------------------------------------------------

namespace {

// Emits a canonical structural spelling with binders replaced by de Bruijn
// levels. Equality of keys is alpha-equivalence.
struct Keyer {
  std::ostringstream out;
  std::vector<std::string> scope;

  void push(const std::string& n) { scope.push_back(n); }
  void pop() { scope.pop_back(); }

  void var(const std::string& n) {
    for (size_t i = scope.size(); i-- > 0;) {
      if (scope[i] == n) {
        out << '#' << (scope.size() - 1 - i);
        return;
      }
    }
    out << '$' << n;
  }

  void base(const BaseKind& b) {
    switch (b.tag) {
      case BaseTag::Rec: out << 'R'; break;
      case BaseTag::Col: out << 'C'; break;
      case BaseTag::Fun: out << 'F'; break;
      case BaseTag::Ref: out << 'W'; break;
      case BaseTag::Lab: out << 'L'; break;
      case BaseTag::Type: out << 'T'; break;
      case BaseTag::PolyFun:
        out << "P(";
        kind(b.of);
        out << ')';
        break;
    }
  }

  void kind(const KindPtr& k) {
    std::visit(overloaded{
                   [&](const KBase& n) {
                     out << "b:";
                     base(n.base);
                   },
                   [&](const KRefined& n) {
                     out << "{";
                     base(n.base);
                     out << '|';
                     push(n.binder);
                     formula(n.body);
                     pop();
                     out << '}';
                   },
                   [&](const KArrow& n) {
                     out << "Pi(";
                     kind(n.domain);
                     out << '.';
                     push(n.binder);
                     kind(n.image);
                     pop();
                     out << ')';
                   },
               },
               k->v);
  }

  void type(const TypePtr& t) {
    std::visit(
        overloaded{
            [&](const TVar& n) { var(n.name); },
            [&](const TLam& n) {
              out << "lam(";
              kind(n.annot);
              out << '.';
              push(n.binder);
              type(n.body);
              pop();
              out << ')';
            },
            [&](const TApp& n) {
              out << "ap(";
              type(n.fn);
              out << ' ';
              type(n.arg);
              out << ')';
            },
            [&](const TFix& n) {
              out << "fix(";
              kind(n.dom);
              out << '.';
              push(n.binder);
              kind(n.img);
              out << '.';
              push(n.fnvar);
              type(n.body);
              pop();
              pop();
              out << ')';
            },
            [&](const TForall& n) {
              out << "all(";
              kind(n.annot);
              out << '.';
              push(n.binder);
              type(n.body);
              pop();
              out << ')';
            },
            [&](const TLabel& n) { out << '`' << n.text << '`'; },
            [&](const TRecNil&) { out << "rnil"; },
            [&](const TRecCons& n) {
              out << "rc(";
              type(n.label);
              out << ' ';
              type(n.field);
              out << ' ';
              type(n.rest);
              out << ')';
            },
            [&](const THdLbl& n) { out << "hl("; type(n.rec); out << ')'; },
            [&](const THdTyp& n) { out << "ht("; type(n.rec); out << ')'; },
            [&](const TTl& n) { out << "tl("; type(n.rec); out << ')'; },
            [&](const TCol& n) { out << "co("; type(n.elem); out << ')'; },
            [&](const TColOf& n) { out << "cf("; type(n.arg); out << ')'; },
            [&](const TRef& n) { out << "rf("; type(n.elem); out << ')'; },
            [&](const TRefOf& n) { out << "ro("; type(n.arg); out << ')'; },
            [&](const TArrow& n) {
              out << "ar(";
              type(n.dom);
              out << ' ';
              type(n.img);
              out << ')';
            },
            [&](const TDom& n) { out << "dm("; type(n.arg); out << ')'; },
            [&](const TCodom& n) { out << "cd("; type(n.arg); out << ')'; },
            [&](const TKindCase& n) {
              out << "kc(";
              type(n.scrut);
              out << ' ';
              base(n.test);
              out << '.';
              push(n.binder);
              type(n.then_t);
              pop();
              out << ' ';
              type(n.else_t);
              out << ')';
            },
            [&](const TPropIte& n) {
              out << "ite(";
              formula(n.cond);
              out << ' ';
              type(n.then_t);
              out << ' ';
              type(n.else_t);
              out << ')';
            },
            [&](const TConcat& n) {
              out << "cc(";
              type(n.lhs);
              out << ' ';
              type(n.rhs);
              out << ')';
            },
            [&](const TBot&) { out << "bot"; },
            [&](const TTop&) { out << "top"; },
            [&](const TBool&) { out << "bool"; },
            [&](const TUnit&) { out << "unit"; },
            [&](const TInt&) { out << "int"; },
            [&](const TString&) { out << "string"; },
        },
        t->v);
  }

  void ext(const ExtPtr& e) {
    std::visit(overloaded{
                   [&](const EType& n) { type(n.type); },
                   [&](const ELabSet& n) { out << "ls("; type(n.rec); out << ')'; },
                   [&](const EConcat& n) {
                     out << "xc(";
                     ext(n.lhs);
                     out << ' ';
                     ext(n.rhs);
                     out << ')';
                   },
                   [&](const EUnion& n) {
                     out << "xu(";
                     ext(n.lhs);
                     out << ' ';
                     ext(n.rhs);
                     out << ')';
                   },
               },
               e->v);
  }

  void formula(const FormulaPtr& f) {
    std::visit(overloaded{
                   [&](const FImplies& n) {
                     out << "im(";
                     formula(n.lhs);
                     out << ' ';
                     formula(n.rhs);
                     out << ')';
                   },
                   [&](const FAnd& n) {
                     out << "an(";
                     formula(n.lhs);
                     out << ' ';
                     formula(n.rhs);
                     out << ')';
                   },
                   [&](const FOr& n) {
                     out << "or(";
                     formula(n.lhs);
                     out << ' ';
                     formula(n.rhs);
                     out << ')';
                   },
                   [&](const FNot& n) { out << "nt("; formula(n.arg); out << ')'; },
                   [&](const FTruth& n) { out << (n.value ? "tt" : "ff"); },
                   [&](const FEq& n) {
                     out << "eq(";
                     ext(n.lhs);
                     out << ' ';
                     ext(n.rhs);
                     out << ')';
                   },
                   [&](const FEmpty& n) { out << "em("; ext(n.arg); out << ')'; },
                   [&](const FMember& n) {
                     out << "me(";
                     ext(n.lhs);
                     out << ' ';
                     ext(n.rhs);
                     out << ')';
                   },
                   [&](const FApart& n) {
                     out << "ap(";
                     ext(n.lhs);
                     out << ' ';
                     ext(n.rhs);
                     out << ')';
                   },
                   [&](const FIsObj& n) { out << "ob("; ext(n.arg); out << ')'; },
               },
               f->v);
  }

  void term(const TermPtr& m) {
    std::visit(
        overloaded{
            [&](const MVar& n) { var(n.name); },
            [&](const MLam& n) {
              out << "mlam(";
              type(n.annot);
              out << '.';
              push(n.binder);
              term(n.body);
              pop();
              out << ')';
            },
            [&](const MApp& n) {
              out << "map(";
              term(n.fn);
              out << ' ';
              term(n.arg);
              out << ')';
            },
            [&](const MTyLam& n) {
              out << "mtlam(";
              kind(n.annot);
              out << '.';
              push(n.binder);
              term(n.body);
              pop();
              out << ')';
            },
            [&](const MTyApp& n) {
              out << "mtap(";
              term(n.fn);
              out << ' ';
              type(n.arg);
              out << ')';
            },
            [&](const MRecNil&) { out << "mrnil"; },
            [&](const MRecCons& n) {
              out << "mrc(";
              type(n.label);
              out << ' ';
              term(n.head);
              out << ' ';
              term(n.rest);
              out << ')';
            },
            [&](const MHdLbl& n) { out << "mhl("; term(n.rec); out << ')'; },
            [&](const MHdVal& n) { out << "mhv("; term(n.rec); out << ')'; },
            [&](const MTl& n) { out << "mtl("; term(n.rec); out << ')'; },
            [&](const MUnit&) { out << "munit"; },
            [&](const MTrue&) { out << "mtrue"; },
            [&](const MFalse&) { out << "mfalse"; },
            [&](const MIf& n) {
              out << "mif(";
              term(n.cond);
              out << ' ';
              term(n.then_m);
              out << ' ';
              term(n.else_m);
              out << ')';
            },
            [&](const MPropIte& n) {
              out << "mite(";
              formula(n.cond);
              out << ' ';
              term(n.then_m);
              out << ' ';
              term(n.else_m);
              out << ')';
            },
            [&](const MKindCase& n) {
              out << "mkc(";
              type(n.scrut);
              out << ' ';
              base(n.test);
              out << '.';
              push(n.binder);
              term(n.then_m);
              pop();
              out << ' ';
              term(n.else_m);
              out << ')';
            },
            [&](const MEmptyCol& n) { out << "mec("; type(n.annot); out << ')'; },
            [&](const MConsCol& n) {
              out << "mcc(";
              term(n.head);
              out << ' ';
              term(n.tail);
              out << ')';
            },
            [&](const MColCase& n) {
              out << "mcs(";
              term(n.scrut);
              out << ' ';
              term(n.empty_m);
              out << '.';
              push(n.head_var);
              push(n.tail_var);
              term(n.cons_m);
              pop();
              pop();
              out << ')';
            },
            [&](const MRef& n) { out << "mrf("; term(n.arg); out << ')'; },
            [&](const MDeref& n) { out << "mdr("; term(n.arg); out << ')'; },
            [&](const MAssign& n) {
              out << "mas(";
              term(n.lhs);
              out << ' ';
              term(n.rhs);
              out << ')';
            },
            [&](const MLoc& n) { out << "loc" << n.id; },
            [&](const MFix& n) {
              out << "mfx(";
              type(n.annot);
              out << '.';
              push(n.fnvar);
              term(n.body);
              pop();
              out << ')';
            },
            [&](const MLabel& n) { out << "mlb`" << n.text << '`'; },
            [&](const MInt& n) { out << 'i' << n.value; },
            [&](const MStr& n) { out << 's' << n.value.size() << ':' << n.value; },
            [&](const MPlus& n) {
              out << "mpl(";
              term(n.lhs);
              out << ' ';
              term(n.rhs);
              out << ')';
            },
            [&](const MSeq& n) {
              out << "msq(";
              term(n.first);
              out << ' ';
              term(n.second);
              out << ')';
            },
        },
        m->v);
  }
};

}  // namespace

std::string alpha_key(const TypePtr& t) {
  Keyer k;
  k.type(t);
  return k.out.str();
}
std::string alpha_key(const KindPtr& k0) {
  Keyer k;
  k.kind(k0);
  return k.out.str();
}
std::string alpha_key(const FormulaPtr& f) {
  Keyer k;
  k.formula(f);
  return k.out.str();
}

bool alpha_eq(const TypePtr& a, const TypePtr& b) {
  if (a == b) return true;
  return alpha_key(a) == alpha_key(b);
}
bool alpha_eq(const KindPtr& a, const KindPtr& b) {
  if (a == b) return true;
  return alpha_key(a) == alpha_key(b);
}
bool alpha_eq(const FormulaPtr& a, const FormulaPtr& b) {
  if (a == b) return true;
  return alpha_key(a) == alpha_key(b);
}
bool alpha_eq(const TermPtr& a, const TermPtr& b) {
  if (a == b) return true;
  Keyer ka, kb;
  ka.term(a);
  kb.term(b);
  return ka.out.str() == kb.out.str();
}
bool alpha_eq(const BaseKind& a, const BaseKind& b) {
  if (a.tag != b.tag) return false;
  if (a.tag != BaseTag::PolyFun) return true;
  return alpha_eq(a.of, b.of);
}

}  // namespace rk
