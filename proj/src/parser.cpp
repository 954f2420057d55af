#include <algorithm>
#include <functional>
#include <map>

#include "rk/surface.hpp"
#include "rk/syntax_ops.hpp"

namespace rk {

namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class Tok {
  Ident,
  Label,   // `name
  IntLit,
  StrLit,
  Kw,      // keyword, text says which
  Punct,
  Eof,
};

struct Token {
  Tok kind = Tok::Eof;
  std::string text;
  Span span;
};

const char* kKeywords[] = {
    "type", "let", "letrec", "fun", "in", "end", "if", "then", "else", "case",
    "of", "ref", "All", "Pi", "Lab", "Rec", "Col", "Fun", "Ref", "Type",
    "kindcase", "as", "not", "and", "or", "empty", "inl", "labSet", "cup",
    "isObj", "headlb", "head", "tail", "dom", "codom", "colOf", "refOf", "col",
    "bot", "top", "true", "false", "int", "bool", "string", "unit",
};

bool is_keyword(const std::string& s) {
  for (auto* k : kKeywords)
    if (s == k) return true;
  return false;
}

// Longest-match first.
const char* kPuncts[] = {
    "[||", "||]", "[|", "|]", ";;", "::", ":=", "->", "=>", "==", "++", "||",
    "(",   ")",   "[",  "]",  "{",  "}",  ",",  ".",  ":",  ";",  "=",  "+",
    "|",   "#",   "!",  "@",
};

struct Lexer {
  const std::string& src;
  size_t pos = 0;
  std::vector<Token> out;

  explicit Lexer(const std::string& s) : src(s) {}

  [[noreturn]] void fail(size_t at, const std::string& msg) {
    throw Diag(Span{(uint32_t)at, (uint32_t)(at + 1)}, "lex", msg);
  }

  void skip_ws_and_comments() {
    while (pos < src.size()) {
      char c = src[pos];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
        continue;
      }
      if (c == '(' && pos + 1 < src.size() && src[pos + 1] == '*') {
        size_t start = pos;
        int depth = 1;
        pos += 2;
        while (pos < src.size() && depth > 0) {
          if (src[pos] == '(' && pos + 1 < src.size() && src[pos + 1] == '*') {
            depth++;
            pos += 2;
          } else if (src[pos] == '*' && pos + 1 < src.size() && src[pos + 1] == ')') {
            depth--;
            pos += 2;
          } else {
            ++pos;
          }
        }
        if (depth > 0) fail(start, "unterminated comment");
        continue;
      }
      break;
    }
  }

  static bool ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

  void run() {
    while (true) {
      skip_ws_and_comments();
      if (pos >= src.size()) break;
      size_t start = pos;
      char c = src[pos];
      if (c == '`') {
        ++pos;
        if (pos >= src.size() || !ident_start(src[pos])) fail(start, "expected identifier after '`'");
        size_t b = pos;
        while (pos < src.size() && ident_char(src[pos])) ++pos;
        out.push_back({Tok::Label, src.substr(b, pos - b), {(uint32_t)start, (uint32_t)pos}});
        continue;
      }
      if (ident_start(c)) {
        while (pos < src.size() && ident_char(src[pos])) ++pos;
        std::string text = src.substr(start, pos - start);
        out.push_back({is_keyword(text) ? Tok::Kw : Tok::Ident, text,
                       {(uint32_t)start, (uint32_t)pos}});
        continue;
      }
      if (c >= '0' && c <= '9') {
        while (pos < src.size() && src[pos] >= '0' && src[pos] <= '9') ++pos;
        out.push_back({Tok::IntLit, src.substr(start, pos - start), {(uint32_t)start, (uint32_t)pos}});
        continue;
      }
      if (c == '"') {
        ++pos;
        std::string text;
        while (pos < src.size() && src[pos] != '"') {
          if (src[pos] == '\\' && pos + 1 < src.size()) {
            char e = src[pos + 1];
            if (e == 'n') text += '\n';
            else if (e == 't') text += '\t';
            else if (e == '"') text += '"';
            else if (e == '\\') text += '\\';
            else fail(pos, "unknown escape");
            pos += 2;
          } else {
            text += src[pos++];
          }
        }
        if (pos >= src.size()) fail(start, "unterminated string literal");
        ++pos;
        out.push_back({Tok::StrLit, text, {(uint32_t)start, (uint32_t)pos}});
        continue;
      }
      bool matched = false;
      for (auto* p : kPuncts) {
        size_t n = std::string(p).size();
        if (src.compare(pos, n, p) == 0) {
          out.push_back({Tok::Punct, p, {(uint32_t)start, (uint32_t)(start + n)}});
          pos += n;
          matched = true;
          break;
        }
      }
      if (!matched) fail(pos, std::string("unexpected character '") + c + "'");
    }
    out.push_back({Tok::Eof, "", {(uint32_t)src.size(), (uint32_t)src.size()}});
  }
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct ParseFail {};  // internal backtracking signal

struct Parser {
  std::vector<Token> toks;
  size_t pos = 0;
  std::vector<std::pair<std::string, NameSort>> scope;
  std::vector<TypeDeclObligation> obligations;

  explicit Parser(const std::string& text, const ScopeSeed& seed) {
    Lexer lx(text);
    lx.run();
    toks = std::move(lx.out);
    for (auto& s : seed) scope.push_back(s);
  }

  const Token& peek(size_t k = 0) const {
    size_t i = pos + k;
    return i < toks.size() ? toks[i] : toks.back();
  }
  Token eat() { return toks[std::min(pos++, toks.size() - 1)]; }

  bool at_punct(const char* p, size_t k = 0) const {
    return peek(k).kind == Tok::Punct && peek(k).text == p;
  }
  bool at_kw(const char* w, size_t k = 0) const {
    return peek(k).kind == Tok::Kw && peek(k).text == w;
  }

  [[noreturn]] void error(const std::string& msg) {
    throw Diag(peek().span, "syntax", msg);
  }

  void expect_punct(const char* p) {
    if (!at_punct(p)) error(std::string("expected '") + p + "'");
    eat();
  }
  void expect_kw(const char* w) {
    if (!at_kw(w)) error(std::string("expected '") + w + "'");
    eat();
  }
  std::string expect_ident() {
    if (peek().kind != Tok::Ident) error("expected identifier");
    return eat().text;
  }

  std::optional<NameSort> lookup(const std::string& n) const {
    for (auto it = scope.rbegin(); it != scope.rend(); ++it)
      if (it->first == n) return it->second;
    return std::nullopt;
  }

  struct Bound {
    Parser& p;
    size_t n;
    Bound(Parser& p_, const std::string& name, NameSort s) : p(p_), n(1) {
      p.scope.emplace_back(name, s);
    }
    Bound(Parser& p_, std::initializer_list<std::pair<std::string, NameSort>> xs)
        : p(p_), n(xs.size()) {
      for (auto& x : xs) p.scope.push_back(x);
    }
    ~Bound() {
      for (size_t i = 0; i < n; ++i) p.scope.pop_back();
    }
  };

  // -------------------------------------------------------------------------
  // Kinds
  // -------------------------------------------------------------------------

  bool at_base_kind() const {
    return at_kw("Rec") || at_kw("Col") || at_kw("Fun") || at_kw("Ref") ||
           at_kw("Lab") || at_kw("Type") || at_kw("All");
  }

  BaseKind parse_base_kind() {
    Token t = eat();
    if (t.text == "Rec") return base_kind(BaseTag::Rec);
    if (t.text == "Col") return base_kind(BaseTag::Col);
    if (t.text == "Fun") return base_kind(BaseTag::Fun);
    if (t.text == "Ref") return base_kind(BaseTag::Ref);
    if (t.text == "Lab") return base_kind(BaseTag::Lab);
    if (t.text == "Type") return base_kind(BaseTag::Type);
    if (t.text == "All") {
      expect_punct("(");
      KindPtr k = parse_kind();
      expect_punct(")");
      return poly_fun(k);
    }
    throw Diag(t.span, "syntax", "expected a basic kind");
  }

  KindPtr parse_kind() {
    Span sp = peek().span;
    if (at_kw("Pi")) {
      eat();
      std::string b = expect_ident();
      expect_punct("::");
      KindPtr dom = parse_kind();
      expect_punct(".");
      Bound bb(*this, b, NameSort::TypeVar);
      KindPtr img = parse_kind();
      return mk_kind(KArrow{b, dom, img}, sp);
    }
    if (at_punct("{")) {
      eat();
      std::string b = expect_ident();
      expect_punct("::");
      BaseKind base = parse_base_kind();
      expect_punct("|");
      FormulaPtr body;
      {
        Bound bb(*this, b, NameSort::TypeVar);
        body = parse_formula();
      }
      expect_punct("}");
      return mk_kind(KRefined{b, base, body}, sp);
    }
    if (at_base_kind()) return mk_kind(KBase{parse_base_kind()}, sp);
    error("expected a kind");
  }

  // -------------------------------------------------------------------------
  // Formulas and extended types
  // -------------------------------------------------------------------------

  FormulaPtr parse_formula() {
    FormulaPtr lhs = parse_formula_or();
    if (at_punct("=>")) {
      Span sp = eat().span;
      FormulaPtr rhs = parse_formula();
      return mk_formula(FImplies{lhs, rhs}, sp);
    }
    return lhs;
  }

  FormulaPtr parse_formula_or() {
    FormulaPtr lhs = parse_formula_and();
    while (at_kw("or")) {
      Span sp = eat().span;
      FormulaPtr rhs = parse_formula_and();
      lhs = mk_formula(FOr{lhs, rhs}, sp);
    }
    return lhs;
  }

  FormulaPtr parse_formula_and() {
    FormulaPtr lhs = parse_formula_not();
    while (at_kw("and")) {
      Span sp = eat().span;
      FormulaPtr rhs = parse_formula_not();
      lhs = mk_formula(FAnd{lhs, rhs}, sp);
    }
    return lhs;
  }

  FormulaPtr parse_formula_not() {
    if (at_kw("not")) {
      Span sp = eat().span;
      return mk_formula(FNot{parse_formula_not()}, sp);
    }
    return parse_formula_atom();
  }

  FormulaPtr parse_formula_atom() {
    Span sp = peek().span;
    if (at_kw("true")) {
      eat();
      return mk_formula(FTruth{true}, sp);
    }
    if (at_kw("false")) {
      eat();
      return mk_formula(FTruth{false}, sp);
    }
    if (at_kw("empty")) {
      eat();
      expect_punct("(");
      ExtPtr a = parse_ext();
      expect_punct(")");
      return mk_formula(FEmpty{a}, sp);
    }
    if (at_kw("isObj")) {
      eat();
      expect_punct("(");
      ExtPtr a = parse_ext();
      expect_punct(")");
      return mk_formula(FIsObj{a}, sp);
    }
    if (at_punct("(")) {
      // Either a parenthesised formula or a parenthesised type inside an
      // atomic predicate; try the formula reading first.
      size_t save = pos;
      eat();
      try {
        FormulaPtr f = parse_formula();
        expect_punct(")");
        // must not continue as a predicate over a type we mis-read
        if (at_punct("==") || at_kw("inl") || at_punct("#") || at_punct("++") || at_kw("cup"))
          throw ParseFail{};
        return f;
      } catch (Diag&) {
        pos = save;
      } catch (ParseFail&) {
        pos = save;
      }
    }
    ExtPtr lhs = parse_ext();
    if (at_punct("==")) {
      eat();
      ExtPtr rhs = parse_ext();
      return mk_formula(FEq{lhs, rhs}, sp);
    }
    if (at_kw("inl")) {
      eat();
      ExtPtr rhs = parse_ext();
      return mk_formula(FMember{lhs, rhs}, sp);
    }
    if (at_punct("#")) {
      eat();
      ExtPtr rhs = parse_ext();
      return mk_formula(FApart{lhs, rhs}, sp);
    }
    error("expected a refinement predicate");
  }

  ExtPtr parse_ext() {
    ExtPtr lhs = parse_ext_concat();
    while (at_kw("cup")) {
      Span sp = eat().span;
      ExtPtr rhs = parse_ext_concat();
      lhs = mk_ext(EUnion{lhs, rhs}, sp);
    }
    return lhs;
  }

  ExtPtr parse_ext_concat() {
    ExtPtr lhs = parse_ext_atom();
    while (at_punct("++")) {
      Span sp = eat().span;
      ExtPtr rhs = parse_ext_atom();
      lhs = mk_ext(EConcat{lhs, rhs}, sp);
    }
    return lhs;
  }

  ExtPtr parse_ext_atom() {
    Span sp = peek().span;
    if (at_kw("labSet")) {
      eat();
      expect_punct("(");
      TypePtr t = parse_type();
      expect_punct(")");
      return mk_ext(ELabSet{t}, sp);
    }
    // a type at application precedence; arrows/concats need parentheses
    TypePtr t = parse_type_app();
    return mk_ext(EType{t}, sp);
  }

  // -------------------------------------------------------------------------
  // Types
  // -------------------------------------------------------------------------

  TypePtr parse_type() {
    Span sp = peek().span;
    if (at_kw("fun")) {
      eat();
      std::string b = expect_ident();
      expect_punct("::");
      KindPtr k = parse_kind();
      expect_punct("->");
      Bound bb(*this, b, NameSort::TypeVar);
      TypePtr body = parse_type();
      return mk_type(TLam{b, k, body}, sp);
    }
    if (at_kw("All")) {
      eat();
      std::string b = expect_ident();
      expect_punct("::");
      KindPtr k = parse_kind();
      expect_punct(".");
      Bound bb(*this, b, NameSort::TypeVar);
      TypePtr body = parse_type();
      return mk_type(TForall{b, k, body}, sp);
    }
    if (at_kw("if")) {
      eat();
      FormulaPtr cond = parse_formula();
      expect_kw("then");
      TypePtr t1 = parse_type();
      expect_kw("else");
      TypePtr t2 = parse_type();
      return mk_type(TPropIte{cond, t1, t2}, sp);
    }
    if (at_kw("kindcase")) {
      eat();
      TypePtr scrut = parse_type_app();
      expect_punct("::");
      BaseKind test = parse_base_kind();
      expect_kw("as");
      std::string b = expect_ident();
      expect_punct("=>");
      TypePtr t1;
      {
        Bound bb(*this, b, NameSort::TypeVar);
        t1 = parse_type();
      }
      expect_punct("||");
      TypePtr t2 = parse_type();
      return mk_type(TKindCase{scrut, test, b, t1, t2}, sp);
    }
    if (at_kw("let") || at_kw("letrec")) return parse_type_let();
    return parse_type_arrow();
  }

  TypePtr parse_type_let() {
    Span sp = peek().span;
    bool rec = at_kw("letrec");
    eat();
    std::string name = expect_ident();
    expect_punct("::");
    KindPtr k = parse_kind();
    expect_punct("=");
    TypePtr rhs;
    if (rec) {
      Bound bb(*this, name, NameSort::TypeVar);
      rhs = parse_type();
    } else {
      rhs = parse_type();
    }
    expect_kw("in");
    TypePtr body;
    {
      Bound bb(*this, name, NameSort::TypeVar);
      body = parse_type();
    }
    expect_kw("end");
    TypePtr bound = rec ? build_type_fix(name, k, rhs, sp) : rhs;
    if (!rec) obligations.push_back({name, k, rhs, sp});
    return subst_type(body, name, bound);
  }

  // Rewrites `letrec F :: Pi .. = fun .. -> body` into the structural
  // recursion construct. The recursion parameter is the first argument
  // position where every call of F stops copying the enclosing binders
  // verbatim.
  TypePtr build_type_fix(const std::string& f, const KindPtr& k, const TypePtr& rhs, Span sp) {
    std::vector<std::string> binders;
    std::vector<KindPtr> annots;
    TypePtr core = rhs;
    while (auto* l = std::get_if<TLam>(&core->v)) {
      binders.push_back(l->binder);
      annots.push_back(l->annot);
      core = l->body;
    }
    if (binders.empty())
      throw Diag(sp, "syntax", "letrec type body must be a type-level function");

    // find the common prefix length over all occurrences of F
    int prefix = -1;
    bool used = false;
    std::function<void(const TypePtr&)> scan = [&](const TypePtr& t) {
      // walk application spines
      if (auto* ap = std::get_if<TApp>(&t->v)) {
        std::vector<TypePtr> args;
        TypePtr head = t;
        while (auto* a2 = std::get_if<TApp>(&head->v)) {
          args.push_back(a2->arg);
          head = a2->fn;
        }
        std::reverse(args.begin(), args.end());
        if (auto* v = std::get_if<TVar>(&head->v); v && v->name == f) {
          used = true;
          size_t p = 0;
          while (p < args.size() && p < binders.size()) {
            auto* av = std::get_if<TVar>(&args[p]->v);
            if (!av || av->name != binders[p]) break;
            ++p;
          }
          if (prefix == -1) prefix = (int)p;
          else if (prefix != (int)p)
            throw Diag(sp, "syntax", "recursive calls of '" + f + "' disagree on fixed arguments");
          if (p >= args.size())
            throw Diag(sp, "syntax", "recursive call of '" + f + "' lacks a structural argument");
        }
        for (auto& a : args) scan(a);
        if (!std::holds_alternative<TVar>(head->v)) scan(head);
        (void)ap;
        return;
      }
      std::visit(overloaded{
                     [&](const TVar& v) {
                       if (v.name == f)
                         throw Diag(sp, "syntax",
                                    "recursive type '" + f + "' must always be applied");
                     },
                     [&](const TLam& n) { scan(n.body); },
                     [&](const TApp&) {},
                     [&](const TFix& n) { scan(n.body); },
                     [&](const TForall& n) { scan(n.body); },
                     [&](const TRecCons& n) {
                       scan(n.label);
                       scan(n.field);
                       scan(n.rest);
                     },
                     [&](const THdLbl& n) { scan(n.rec); },
                     [&](const THdTyp& n) { scan(n.rec); },
                     [&](const TTl& n) { scan(n.rec); },
                     [&](const TCol& n) { scan(n.elem); },
                     [&](const TColOf& n) { scan(n.arg); },
                     [&](const TRef& n) { scan(n.elem); },
                     [&](const TRefOf& n) { scan(n.arg); },
                     [&](const TArrow& n) {
                       scan(n.dom);
                       scan(n.img);
                     },
                     [&](const TDom& n) { scan(n.arg); },
                     [&](const TCodom& n) { scan(n.arg); },
                     [&](const TKindCase& n) {
                       scan(n.scrut);
                       scan(n.then_t);
                       scan(n.else_t);
                     },
                     [&](const TPropIte& n) {
                       scan(n.then_t);
                       scan(n.else_t);
                     },
                     [&](const TConcat& n) {
                       scan(n.lhs);
                       scan(n.rhs);
                     },
                     [&](const auto&) {},
                 },
                 t->v);
    };
    scan(core);

    if (!used) {
      // no recursion after all; plain binding
      obligations.push_back({f, k, rhs, sp});
      return rhs;
    }
    size_t p = (size_t)prefix;
    if (p >= binders.size())
      throw Diag(sp, "syntax", "recursive call of '" + f + "' must recurse on one argument");

    // strip p + 1 binders from the declared kind
    KindPtr kk = k;
    for (size_t i = 0; i < p; ++i) {
      auto* ka = std::get_if<KArrow>(&kk->v);
      if (!ka) throw Diag(sp, "syntax", "declared kind of '" + f + "' has too few Pi binders");
      kk = subst_type(ka->image, ka->binder, tvar(binders[i]));
    }
    auto* ka = std::get_if<KArrow>(&kk->v);
    if (!ka) throw Diag(sp, "syntax", "declared kind of '" + f + "' has too few Pi binders");
    KindPtr fix_dom = ka->domain;
    KindPtr fix_img = subst_type(ka->image, ka->binder, tvar(binders[p]));

    // rebuild inner lambda chain beyond binder p
    TypePtr body = core;
    for (size_t i = binders.size(); i-- > p + 1;)
      body = tlam(binders[i], annots[i], body);

    // replace `F b1 .. bp` spines with a fresh recursion variable
    std::string fv = p == 0 ? f : fresh_name(f);
    std::function<TypePtr(const TypePtr&)> rw = [&](const TypePtr& t) -> TypePtr {
      if (auto* v = std::get_if<TVar>(&t->v); v && v->name == f) {
        // only reachable with p == 0 handled below; applied spines rewritten there
        return tvar(fv);
      }
      if (auto* ap = std::get_if<TApp>(&t->v)) {
        // check for the F-prefix spine
        std::vector<TypePtr> args;
        TypePtr head = t;
        while (auto* a2 = std::get_if<TApp>(&head->v)) {
          args.push_back(a2->arg);
          head = a2->fn;
        }
        std::reverse(args.begin(), args.end());
        if (auto* v = std::get_if<TVar>(&head->v); v && v->name == f) {
          TypePtr res = tvar(fv);
          for (size_t i = p; i < args.size(); ++i) res = tapp(res, rw(args[i]));
          return res;
        }
        return mk_type(TApp{rw(ap->fn), rw(ap->arg)}, t->span);
      }
      return std::visit(
          overloaded{
              [&](const TLam& n) -> TypePtr { return mk_type(TLam{n.binder, n.annot, rw(n.body)}, t->span); },
              [&](const TFix& n) -> TypePtr {
                return mk_type(TFix{n.fnvar, n.dom, n.img, n.binder, rw(n.body)}, t->span);
              },
              [&](const TForall& n) -> TypePtr {
                return mk_type(TForall{n.binder, n.annot, rw(n.body)}, t->span);
              },
              [&](const TRecCons& n) -> TypePtr {
                return mk_type(TRecCons{rw(n.label), rw(n.field), rw(n.rest)}, t->span);
              },
              [&](const THdLbl& n) -> TypePtr { return mk_type(THdLbl{rw(n.rec)}, t->span); },
              [&](const THdTyp& n) -> TypePtr { return mk_type(THdTyp{rw(n.rec)}, t->span); },
              [&](const TTl& n) -> TypePtr { return mk_type(TTl{rw(n.rec)}, t->span); },
              [&](const TCol& n) -> TypePtr { return mk_type(TCol{rw(n.elem)}, t->span); },
              [&](const TColOf& n) -> TypePtr { return mk_type(TColOf{rw(n.arg)}, t->span); },
              [&](const TRef& n) -> TypePtr { return mk_type(TRef{rw(n.elem)}, t->span); },
              [&](const TRefOf& n) -> TypePtr { return mk_type(TRefOf{rw(n.arg)}, t->span); },
              [&](const TArrow& n) -> TypePtr { return mk_type(TArrow{rw(n.dom), rw(n.img)}, t->span); },
              [&](const TDom& n) -> TypePtr { return mk_type(TDom{rw(n.arg)}, t->span); },
              [&](const TCodom& n) -> TypePtr { return mk_type(TCodom{rw(n.arg)}, t->span); },
              [&](const TKindCase& n) -> TypePtr {
                return mk_type(TKindCase{rw(n.scrut), n.test, n.binder, rw(n.then_t), rw(n.else_t)}, t->span);
              },
              [&](const TPropIte& n) -> TypePtr {
                return mk_type(TPropIte{n.cond, rw(n.then_t), rw(n.else_t)}, t->span);
              },
              [&](const TConcat& n) -> TypePtr {
                return mk_type(TConcat{rw(n.lhs), rw(n.rhs)}, t->span);
              },
              [&](const auto&) -> TypePtr { return t; },
          },
          t->v);
    };
    TypePtr fix_body = rw(body);
    TypePtr fix = mk_type(TFix{fv, fix_dom, fix_img, binders[p], fix_body}, sp);
    for (size_t i = p; i-- > 0;) fix = tlam(binders[i], annots[i], fix);
    obligations.push_back({f, k, fix, sp});
    return fix;
  }

  TypePtr parse_type_arrow() {
    TypePtr lhs = parse_type_at();
    if (at_punct("->")) {
      Span sp = eat().span;
      TypePtr rhs = parse_type();  // right-assoc; prefix forms allowed
      return mk_type(TArrow{lhs, rhs}, sp);
    }
    return lhs;
  }

  // record extension: `[| l : T |] @ R` / chains
  TypePtr parse_type_at() {
    TypePtr lhs = parse_type_concat();
    if (at_punct("@")) {
      Span sp = eat().span;
      TypePtr rhs = parse_type_at();
      // reattach: lhs must be a record-type literal chain ending in [||]
      return reattach_rec_type(lhs, rhs, sp);
    }
    return lhs;
  }

  TypePtr reattach_rec_type(const TypePtr& lit, const TypePtr& tail, Span sp) {
    if (std::holds_alternative<TRecNil>(lit->v)) return tail;
    if (auto* c = std::get_if<TRecCons>(&lit->v))
      return mk_type(TRecCons{c->label, c->field, reattach_rec_type(c->rest, tail, sp)}, lit->span);
    throw Diag(sp, "syntax", "'@' expects a record type literal on the left");
  }

  TypePtr parse_type_concat() {
    TypePtr lhs = parse_type_app();
    while (at_punct("++")) {
      Span sp = eat().span;
      TypePtr rhs = parse_type_app();
      lhs = mk_type(TConcat{lhs, rhs}, sp);
    }
    return lhs;
  }

  TypePtr parse_type_app() {
    TypePtr lhs = parse_type_atom();
    while (true) {
      size_t save = pos;
      try {
        TypePtr arg = parse_type_atom();
        lhs = mk_type(TApp{lhs, arg}, lhs->span);
      } catch (Diag&) {
        pos = save;
        break;
      } catch (ParseFail&) {
        pos = save;
        break;
      }
    }
    return lhs;
  }

  TypePtr parse_type_atom() {
    Span sp = peek().span;
    if (peek().kind == Tok::Label) return mk_type(TLabel{eat().text}, sp);
    if (peek().kind == Tok::Ident) {
      auto srt = lookup(peek().text);
      if (!srt) throw Diag(sp, "unbound", "unbound name '" + peek().text + "'");
      if (*srt != NameSort::TypeVar) throw ParseFail{};
      return mk_type(TVar{eat().text}, sp);
    }
    if (at_kw("bool")) { eat(); return mk_type(TBool{}, sp); }
    if (at_kw("unit")) { eat(); return mk_type(TUnit{}, sp); }
    if (at_kw("int")) { eat(); return mk_type(TInt{}, sp); }
    if (at_kw("string")) { eat(); return mk_type(TString{}, sp); }
    if (at_kw("bot")) { eat(); return mk_type(TBot{}, sp); }
    if (at_kw("top")) { eat(); return mk_type(TTop{}, sp); }
    if (at_kw("col")) {
      eat();
      expect_punct("(");
      TypePtr t = parse_type();
      expect_punct(")");
      return mk_type(TCol{t}, sp);
    }
    if (at_kw("Ref")) {
      eat();
      TypePtr t = parse_type_atom();
      return mk_type(TRef{t}, sp);
    }
    if (at_kw("headlb") || at_kw("head") || at_kw("tail") || at_kw("dom") ||
        at_kw("codom") || at_kw("colOf") || at_kw("refOf")) {
      std::string fn = eat().text;
      expect_punct("(");
      TypePtr t = parse_type();
      expect_punct(")");
      if (fn == "headlb") return mk_type(THdLbl{t}, sp);
      if (fn == "head") return mk_type(THdTyp{t}, sp);
      if (fn == "tail") return mk_type(TTl{t}, sp);
      if (fn == "dom") return mk_type(TDom{t}, sp);
      if (fn == "codom") return mk_type(TCodom{t}, sp);
      if (fn == "colOf") return mk_type(TColOf{t}, sp);
      return mk_type(TRefOf{t}, sp);
    }
    if (at_punct("[||")) {
      eat();
      expect_punct("]");
      return mk_type(TRecNil{}, sp);
    }
    if (at_punct("[|")) {
      eat();
      TypePtr rec = parse_rec_type_fields();
      return rec;
    }
    if (at_punct("(")) {
      eat();
      TypePtr t = parse_type();
      expect_punct(")");
      return t;
    }
    throw ParseFail{};
  }

  TypePtr parse_rec_type_fields() {
    Span sp = peek().span;
    if (at_punct("|]")) {
      eat();
      return mk_type(TRecNil{}, sp);
    }
    std::vector<std::pair<TypePtr, TypePtr>> fields;
    while (true) {
      TypePtr label = parse_rec_label();
      expect_punct(":");
      TypePtr t = parse_type();
      fields.emplace_back(label, t);
      if (at_punct(",")) {
        eat();
        continue;
      }
      expect_punct("|]");
      break;
    }
    TypePtr rec = mk_type(TRecNil{}, sp);
    for (size_t i = fields.size(); i-- > 0;)
      rec = mk_type(TRecCons{fields[i].first, fields[i].second, rec}, sp);
    return rec;
  }

  TypePtr parse_rec_label() {
    Span sp = peek().span;
    if (peek().kind == Tok::Label) return mk_type(TLabel{eat().text}, sp);
    // computed label: parenthesised type or any type atom chain with ++
    return parse_type_concat();
  }

  // -------------------------------------------------------------------------
  // Terms
  // -------------------------------------------------------------------------

  TermPtr parse_term() { return parse_term_seq(); }

  TermPtr parse_term_seq() {
    TermPtr lhs = parse_term_prefixed();
    if (at_punct(";")) {
      Span sp = eat().span;
      TermPtr rhs = parse_term_seq();
      return mk_term(MSeq{lhs, rhs}, sp);
    }
    return lhs;
  }

  TermPtr parse_term_prefixed() {
    Span sp = peek().span;
    if (at_kw("fun")) {
      eat();
      std::string b = expect_ident();
      if (at_punct("::")) {
        eat();
        KindPtr k = parse_kind();
        expect_punct("->");
        Bound bb(*this, b, NameSort::TypeVar);
        TermPtr body = parse_term_prefixed();
        return mk_term(MTyLam{b, k, body}, sp);
      }
      expect_punct(":");
      TypePtr t = parse_type();
      expect_punct("->");
      Bound bb(*this, b, NameSort::TermVar);
      TermPtr body = parse_term_prefixed();
      return mk_term(MLam{b, t, body}, sp);
    }
    if (at_kw("if")) {
      eat();
      // formula condition => property test; otherwise boolean conditional
      size_t save = pos;
      std::optional<FormulaPtr> cond;
      try {
        FormulaPtr f = parse_formula();
        if (!at_kw("then")) throw ParseFail{};
        cond = f;
      } catch (Diag&) {
        pos = save;
      } catch (ParseFail&) {
        pos = save;
      }
      if (cond) {
        expect_kw("then");
        TermPtr a = parse_term_prefixed();
        expect_kw("else");
        TermPtr b = parse_term_prefixed();
        return mk_term(MPropIte{*cond, a, b}, sp);
      }
      TermPtr c = parse_term_prefixed();
      expect_kw("then");
      TermPtr a = parse_term_prefixed();
      expect_kw("else");
      TermPtr b = parse_term_prefixed();
      return mk_term(MIf{c, a, b}, sp);
    }
    if (at_kw("type")) {
      eat();
      if (!at_kw("let") && !at_kw("letrec")) error("expected 'let' or 'letrec' after 'type'");
      bool rec = at_kw("letrec");
      eat();
      std::string name = expect_ident();
      expect_punct("::");
      KindPtr k = parse_kind();
      expect_punct("=");
      TypePtr rhs;
      if (rec) {
        Bound bb(*this, name, NameSort::TypeVar);
        rhs = parse_type();
      } else {
        rhs = parse_type();
      }
      expect_kw("in");
      TermPtr body;
      {
        Bound bb(*this, name, NameSort::TypeVar);
        body = parse_term();
      }
      expect_kw("end");
      TypePtr bound = rec ? build_type_fix(name, k, rhs, sp) : rhs;
      if (!rec) obligations.push_back({name, k, rhs, sp});
      return subst_type(body, name, bound);
    }
    if (at_kw("let")) {
      eat();
      std::string name = expect_ident();
      expect_punct(":");
      TypePtr t = parse_type();
      expect_punct("=");
      TermPtr rhs = parse_term();
      expect_kw("in");
      TermPtr body;
      {
        Bound bb(*this, name, NameSort::TermVar);
        body = parse_term();
      }
      expect_kw("end");
      return mk_term(MApp{mk_term(MLam{name, t, body}, sp), rhs}, sp);
    }
    if (at_kw("letrec")) {
      eat();
      std::string name = expect_ident();
      expect_punct(":");
      TypePtr t = parse_type();
      expect_punct("=");
      TermPtr rhs;
      {
        Bound bb(*this, name, NameSort::TermVar);
        rhs = parse_term();
      }
      expect_kw("in");
      TermPtr body;
      {
        Bound bb(*this, name, NameSort::TermVar);
        body = parse_term();
      }
      expect_kw("end");
      TermPtr fix = mk_term(MFix{name, t, rhs}, sp);
      return subst_term(body, name, fix);
    }
    if (at_kw("case")) {
      eat();
      TermPtr scrut = parse_term();
      expect_kw("of");
      expect_punct("[||");
      expect_punct("]");
      expect_punct("=>");
      TermPtr e1 = parse_term_prefixed();
      expect_punct("||");
      std::string hv = expect_ident();
      expect_punct("::");
      std::string tv = expect_ident();
      expect_punct("=>");
      TermPtr e2;
      {
        Bound bb(*this, {{hv, NameSort::TermVar}, {tv, NameSort::TermVar}});
        e2 = parse_term_prefixed();
      }
      expect_kw("end");
      return mk_term(MColCase{scrut, e1, hv, tv, e2}, sp);
    }
    if (at_kw("kindcase")) {
      eat();
      TypePtr scrut = parse_type_app();
      expect_punct("::");
      BaseKind test = parse_base_kind();
      expect_kw("as");
      std::string b = expect_ident();
      expect_punct("=>");
      TermPtr m1;
      {
        Bound bb(*this, b, NameSort::TypeVar);
        m1 = parse_term_prefixed();
      }
      expect_punct("||");
      TermPtr m2 = parse_term_prefixed();
      return mk_term(MKindCase{scrut, test, b, m1, m2}, sp);
    }
    return parse_term_assign();
  }

  TermPtr parse_term_assign() {
    TermPtr lhs = parse_term_cons();
    if (at_punct(":=")) {
      Span sp = eat().span;
      TermPtr rhs = parse_term_cons();
      return mk_term(MAssign{lhs, rhs}, sp);
    }
    return lhs;
  }

  TermPtr parse_term_cons() {
    TermPtr lhs = parse_term_plus();
    if (at_punct("::")) {
      Span sp = eat().span;
      TermPtr rhs = parse_term_cons();
      return mk_term(MConsCol{lhs, rhs}, sp);
    }
    return lhs;
  }

  TermPtr parse_term_plus() {
    TermPtr lhs = parse_term_app();
    while (at_punct("+")) {
      Span sp = eat().span;
      TermPtr rhs = parse_term_app();
      lhs = mk_term(MPlus{lhs, rhs}, sp);
    }
    return lhs;
  }

  TermPtr parse_term_app() {
    TermPtr lhs = parse_term_atom();
    while (true) {
      size_t save = pos;
      try {
        TermPtr arg = parse_term_atom();
        lhs = mk_term(MApp{lhs, arg}, lhs->span);
        continue;
      } catch (Diag&) {
        pos = save;
      } catch (ParseFail&) {
        pos = save;
      }
      try {
        TypePtr targ = parse_type_atom();
        lhs = mk_term(MTyApp{lhs, targ}, lhs->span);
        continue;
      } catch (Diag& d) {
        if (d.rule == "unbound") throw;
        pos = save;
      } catch (ParseFail&) {
        pos = save;
      }
      break;
    }
    return lhs;
  }

  TermPtr parse_term_atom() {
    Span sp = peek().span;
    if (peek().kind == Tok::Ident) {
      auto srt = lookup(peek().text);
      if (!srt) throw Diag(sp, "unbound", "unbound name '" + peek().text + "'");
      if (*srt != NameSort::TermVar) throw ParseFail{};
      return mk_term(MVar{eat().text}, sp);
    }
    if (peek().kind == Tok::IntLit) return mk_term(MInt{std::stoll(eat().text)}, sp);
    if (peek().kind == Tok::StrLit) return mk_term(MStr{eat().text}, sp);
    if (at_kw("true")) { eat(); return mk_term(MTrue{}, sp); }
    if (at_kw("false")) { eat(); return mk_term(MFalse{}, sp); }
    if (at_punct("!")) {
      eat();
      TermPtr a = parse_term_atom();
      return mk_term(MDeref{a}, sp);
    }
    if (at_kw("ref")) {
      eat();
      TermPtr a = parse_term_atom();
      return mk_term(MRef{a}, sp);
    }
    if (at_kw("headlb") || at_kw("head") || at_kw("tail")) {
      std::string fn = peek().text;
      size_t save = pos;
      eat();
      if (!at_punct("(")) throw ParseFail{};
      eat();
      try {
        TermPtr inner = parse_term();
        expect_punct(")");
        if (fn == "headlb") return mk_term(MHdLbl{inner}, sp);
        if (fn == "head") return mk_term(MHdVal{inner}, sp);
        return mk_term(MTl{inner}, sp);
      } catch (Diag&) {
        pos = save;
        throw ParseFail{};
      } catch (ParseFail&) {
        pos = save;
        throw ParseFail{};
      }
    }
    if (at_punct("(")) {
      if (at_punct(")", 1)) {
        eat();
        eat();
        return mk_term(MUnit{}, sp);
      }
      size_t save = pos;
      eat();
      try {
        TermPtr t = parse_term();
        expect_punct(")");
        return t;
      } catch (Diag&) {
        pos = save;
        throw ParseFail{};
      } catch (ParseFail&) {
        pos = save;
        throw ParseFail{};
      }
    }
    if (at_punct("[||")) {
      size_t save = pos;
      eat();
      try {
        TypePtr t = parse_type();
        expect_punct("||]");
        return mk_term(MEmptyCol{t}, sp);
      } catch (Diag&) {
        pos = save;
        throw ParseFail{};
      } catch (ParseFail&) {
        pos = save;
        throw ParseFail{};
      }
    }
    if (at_punct("[")) {
      eat();
      TermPtr rec = parse_rec_value_fields(sp);
      if (at_punct("@")) {
        eat();
        TermPtr tail = parse_term_atom();
        return reattach_rec_value(rec, tail, sp);
      }
      return rec;
    }
    throw ParseFail{};
  }

  TermPtr reattach_rec_value(const TermPtr& lit, const TermPtr& tail, Span sp) {
    if (std::holds_alternative<MRecNil>(lit->v)) return tail;
    if (auto* c = std::get_if<MRecCons>(&lit->v))
      return mk_term(MRecCons{c->label, c->head, reattach_rec_value(c->rest, tail, sp)}, lit->span);
    throw Diag(sp, "syntax", "'@' expects a record literal on the left");
  }

  TermPtr parse_rec_value_fields(Span sp) {
    if (at_punct("]")) {
      eat();
      return mk_term(MRecNil{}, sp);
    }
    std::vector<std::pair<TypePtr, TermPtr>> fields;
    while (true) {
      TypePtr label = parse_rec_label();
      expect_punct("=");
      TermPtr e = parse_term_prefixed();
      fields.emplace_back(label, e);
      if (at_punct(",")) {
        eat();
        continue;
      }
      expect_punct("]");
      break;
    }
    TermPtr rec = mk_term(MRecNil{}, sp);
    for (size_t i = fields.size(); i-- > 0;)
      rec = mk_term(MRecCons{fields[i].first, fields[i].second, rec}, sp);
    return rec;
  }

  // -------------------------------------------------------------------------
  // Entrypoints
  // -------------------------------------------------------------------------

  ParsedProgram parse_whole_program() {
    TermPtr t = parse_term();
    if (at_punct(";;")) eat();
    if (peek().kind != Tok::Eof) error("unexpected input after program");
    return ParsedProgram{t, std::move(obligations)};
  }

  ReplInput parse_repl() {
    ReplInput out;
    if (at_punct(":")) {
      eat();
      std::string cmd;
      if (peek().kind == Tok::Ident || peek().kind == Tok::Kw) cmd = eat().text;
      else error("expected a command name after ':'");
      out.tag = ReplInput::Tag::Command;
      out.command = cmd;
      if (cmd == "type") {
        out.command_term = parse_term();
      } else if (cmd == "kind") {
        out.command_type = parse_type();
      } else if (cmd != "quit") {
        error("unknown command ':" + cmd + "'");
      }
      if (at_punct(";;")) eat();
      if (peek().kind != Tok::Eof) error("unexpected input after command");
      return out;
    }
    // declarations end at ';;'/eof; `let .. in .. end` forms are expressions.
    size_t save = pos;
    auto save_obl = obligations;
    try {
      if (at_kw("type")) {
        eat();
        bool rec = at_kw("letrec");
        if (!at_kw("let") && !rec) error("expected 'let' or 'letrec' after 'type'");
        eat();
        std::string name = expect_ident();
        expect_punct("::");
        KindPtr k = parse_kind();
        expect_punct("=");
        TypePtr rhs;
        if (rec) {
          Bound bb(*this, name, NameSort::TypeVar);
          rhs = parse_type();
        } else {
          rhs = parse_type();
        }
        if (at_punct(";;")) eat();
        if (peek().kind != Tok::Eof) error("unexpected input after declaration");
        out.tag = rec ? ReplInput::Tag::TypeLetRec : ReplInput::Tag::TypeLet;
        out.name = name;
        out.kind = k;
        out.type = rec ? build_type_fix(name, k, rhs, peek().span) : rhs;
        return out;
      }
      if (at_kw("let") || at_kw("letrec")) {
        bool rec = at_kw("letrec");
        eat();
        std::string name = expect_ident();
        expect_punct(":");
        TypePtr t = parse_type();
        expect_punct("=");
        TermPtr rhs;
        if (rec) {
          Bound bb(*this, name, NameSort::TermVar);
          rhs = parse_term();
        } else {
          rhs = parse_term();
        }
        if (at_punct(";;")) eat();
        if (peek().kind != Tok::Eof) error("unexpected input after declaration");
        out.tag = rec ? ReplInput::Tag::TermLetRec : ReplInput::Tag::TermLet;
        out.name = name;
        out.type = t;
        out.term = rec ? mk_term(MFix{name, t, rhs}, rhs->span) : rhs;
        return out;
      }
    } catch (Diag&) {
      pos = save;
      obligations = save_obl;
    } catch (ParseFail&) {
      pos = save;
      obligations = save_obl;
    }
    out.tag = ReplInput::Tag::Expr;
    out.term = parse_term();
    if (at_punct(";;")) eat();
    if (peek().kind != Tok::Eof) error("unexpected input after expression");
    return out;
  }
};

}  // namespace

ParsedProgram parse_program(const std::string& text, const ScopeSeed& seed) {
  Parser p(text, seed);
  try {
    return p.parse_whole_program();
  } catch (ParseFail&) {
    throw Diag(p.peek().span, "syntax", "could not parse expression");
  }
}

ReplInput parse_repl_input(const std::string& text, const ScopeSeed& seed) {
  Parser p(text, seed);
  try {
    return p.parse_repl();
  } catch (ParseFail&) {
    throw Diag(p.peek().span, "syntax", "could not parse input");
  }
}

TypePtr parse_type_text(const std::string& text, const ScopeSeed& seed) {
  Parser p(text, seed);
  try {
    TypePtr t = p.parse_type();
    if (p.peek().kind != Tok::Eof) p.error("unexpected input after type");
    return t;
  } catch (ParseFail&) {
    throw Diag(p.peek().span, "syntax", "could not parse type");
  }
}

KindPtr parse_kind_text(const std::string& text, const ScopeSeed& seed) {
  Parser p(text, seed);
  try {
    KindPtr k = p.parse_kind();
    if (p.peek().kind != Tok::Eof) p.error("unexpected input after kind");
    return k;
  } catch (ParseFail&) {
    throw Diag(p.peek().span, "syntax", "could not parse kind");
  }
}

FormulaPtr parse_formula_text(const std::string& text, const ScopeSeed& seed) {
  Parser p(text, seed);
  try {
    FormulaPtr f = p.parse_formula();
    if (p.peek().kind != Tok::Eof) p.error("unexpected input after formula");
    return f;
  } catch (ParseFail&) {
    throw Diag(p.peek().span, "syntax", "could not parse formula");
  }
}

TermPtr parse_term_text(const std::string& text, const ScopeSeed& seed) {
  Parser p(text, seed);
  try {
    TermPtr m = p.parse_term();
    if (p.peek().kind != Tok::Eof) p.error("unexpected input after term");
    return m;
  } catch (ParseFail&) {
    throw Diag(p.peek().span, "syntax", "could not parse term");
  }
}

}  // namespace rk
