#pragma once

// Hand-rolled generators for property tests.

#include <cstdint>
#include <string>
#include <vector>

#include "rk/ast.hpp"

namespace testgen {

struct Rng {
  uint64_t state;
  explicit Rng(uint64_t seed) : state(seed ? seed : 1) {}
  uint64_t next() {  // splitmix64
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  size_t below(size_t n) { return n == 0 ? 0 : next() % n; }
  bool flip() { return next() & 1; }
};

struct Scope {
  std::vector<std::string> tyvars;
  std::vector<std::string> tmvars;
  int next_id = 0;

  std::string fresh_ty() { return "g" + std::to_string(next_id++); }
  std::string fresh_tm() { return "w" + std::to_string(next_id++); }
};

inline const char* kLabels[] = {"a", "b", "c", "d"};

rk::TypePtr gen_type_sc(Rng& rng, int depth, Scope& sc);
rk::KindPtr gen_kind_sc(Rng& rng, int depth, Scope& sc);
rk::FormulaPtr gen_formula_sc(Rng& rng, int depth, Scope& sc);
rk::ExtPtr gen_ext_sc(Rng& rng, int depth, Scope& sc);
rk::TermPtr gen_term_sc(Rng& rng, int depth, Scope& sc);

inline rk::BaseKind gen_base(Rng& rng, int depth, Scope& sc) {
  using namespace rk;
  switch (rng.below(depth > 0 ? 7 : 6)) {
    case 0: return base_kind(BaseTag::Rec);
    case 1: return base_kind(BaseTag::Col);
    case 2: return base_kind(BaseTag::Fun);
    case 3: return base_kind(BaseTag::Ref);
    case 4: return base_kind(BaseTag::Lab);
    case 5: return base_kind(BaseTag::Type);
    default: return poly_fun(gen_kind_sc(rng, depth - 1, sc));
  }
}

inline rk::KindPtr gen_kind_sc(Rng& rng, int depth, Scope& sc) {
  using namespace rk;
  if (depth <= 0 || rng.below(3) == 0) return kbase(gen_base(rng, 0, sc));
  if (rng.flip()) {
    std::string b = sc.fresh_ty();
    BaseKind base = gen_base(rng, depth - 1, sc);
    sc.tyvars.push_back(b);
    auto body = gen_formula_sc(rng, depth - 1, sc);
    sc.tyvars.pop_back();
    return krefined(b, base, body);
  }
  std::string b = sc.fresh_ty();
  auto dom = gen_kind_sc(rng, depth - 1, sc);
  sc.tyvars.push_back(b);
  auto img = gen_kind_sc(rng, depth - 1, sc);
  sc.tyvars.pop_back();
  return karrow(b, dom, img);
}

inline rk::ExtPtr gen_ext_sc(Rng& rng, int depth, Scope& sc) {
  using namespace rk;
  switch (depth <= 0 ? rng.below(2) : rng.below(4)) {
    case 0: return etype(gen_type_sc(rng, depth - 1, sc));
    case 1: return elabset(gen_type_sc(rng, depth - 1, sc));
    case 2: return econcat(gen_ext_sc(rng, depth - 1, sc), gen_ext_sc(rng, depth - 1, sc));
    default: return eunion(gen_ext_sc(rng, depth - 1, sc), gen_ext_sc(rng, depth - 1, sc));
  }
}

inline rk::FormulaPtr gen_formula_sc(Rng& rng, int depth, Scope& sc) {
  using namespace rk;
  if (depth <= 0) return ftruth(rng.flip());
  switch (rng.below(10)) {
    case 0: return fimplies(gen_formula_sc(rng, depth - 1, sc), gen_formula_sc(rng, depth - 1, sc));
    case 1: return fand(gen_formula_sc(rng, depth - 1, sc), gen_formula_sc(rng, depth - 1, sc));
    case 2: return for_(gen_formula_sc(rng, depth - 1, sc), gen_formula_sc(rng, depth - 1, sc));
    case 3: return fnot(gen_formula_sc(rng, depth - 1, sc));
    case 4: return ftruth(rng.flip());
    case 5: return feq(gen_ext_sc(rng, depth - 1, sc), gen_ext_sc(rng, depth - 1, sc));
    case 6: return fempty(gen_ext_sc(rng, depth - 1, sc));
    case 7: return fmember(gen_ext_sc(rng, depth - 1, sc), gen_ext_sc(rng, depth - 1, sc));
    case 8: return fisobj(gen_ext_sc(rng, depth - 1, sc));
    default: return fapart(gen_ext_sc(rng, depth - 1, sc), gen_ext_sc(rng, depth - 1, sc));
  }
}

inline rk::TypePtr gen_type_sc(Rng& rng, int depth, Scope& sc) {
  using namespace rk;
  if (depth <= 0) {
    switch (rng.below(sc.tyvars.empty() ? 7 : 8)) {
      case 0: return tlabel(kLabels[rng.below(4)]);
      case 1: return trecnil();
      case 2: return tbool();
      case 3: return tunit();
      case 4: return tint();
      case 5: return tstring();
      case 6: return tbot();
      default: return tvar(sc.tyvars[rng.below(sc.tyvars.size())]);
    }
  }
  switch (rng.below(20)) {
    case 0: {
      std::string b = sc.fresh_ty();
      auto k = gen_kind_sc(rng, depth - 1, sc);
      sc.tyvars.push_back(b);
      auto body = gen_type_sc(rng, depth - 1, sc);
      sc.tyvars.pop_back();
      return tlam(b, k, body);
    }
    case 1: return tapp(gen_type_sc(rng, depth - 1, sc), gen_type_sc(rng, depth - 1, sc));
    case 2: {
      std::string f = sc.fresh_ty(), b = sc.fresh_ty();
      auto dom = gen_kind_sc(rng, depth - 1, sc);
      sc.tyvars.push_back(b);
      auto img = gen_kind_sc(rng, depth - 1, sc);
      sc.tyvars.push_back(f);
      auto body = gen_type_sc(rng, depth - 1, sc);
      sc.tyvars.pop_back();
      sc.tyvars.pop_back();
      return tfix(f, dom, img, b, body);
    }
    case 3: {
      std::string b = sc.fresh_ty();
      auto k = gen_kind_sc(rng, depth - 1, sc);
      sc.tyvars.push_back(b);
      auto body = gen_type_sc(rng, depth - 1, sc);
      sc.tyvars.pop_back();
      return tforall(b, k, body);
    }
    case 4:
      return treccons(rng.flip() ? tlabel(kLabels[rng.below(4)]) : gen_type_sc(rng, depth - 1, sc),
                      gen_type_sc(rng, depth - 1, sc), gen_type_sc(rng, depth - 1, sc));
    case 5: return thdlbl(gen_type_sc(rng, depth - 1, sc));
    case 6: return thdtyp(gen_type_sc(rng, depth - 1, sc));
    case 7: return ttl(gen_type_sc(rng, depth - 1, sc));
    case 8: return tcol(gen_type_sc(rng, depth - 1, sc));
    case 9: return tcolof(gen_type_sc(rng, depth - 1, sc));
    case 10: return tref(gen_type_sc(rng, depth - 1, sc));
    case 11: return trefof(gen_type_sc(rng, depth - 1, sc));
    case 12: return tarrow(gen_type_sc(rng, depth - 1, sc), gen_type_sc(rng, depth - 1, sc));
    case 13: return tdom(gen_type_sc(rng, depth - 1, sc));
    case 14: return tcodom(gen_type_sc(rng, depth - 1, sc));
    case 15: {
      std::string b = sc.fresh_ty();
      auto scrut = gen_type_sc(rng, depth - 1, sc);
      auto test = gen_base(rng, depth - 1, sc);
      sc.tyvars.push_back(b);
      auto then_t = gen_type_sc(rng, depth - 1, sc);
      sc.tyvars.pop_back();
      return tkindcase(scrut, test, b, then_t, gen_type_sc(rng, depth - 1, sc));
    }
    case 16:
      return tpropite(gen_formula_sc(rng, depth - 1, sc), gen_type_sc(rng, depth - 1, sc),
                      gen_type_sc(rng, depth - 1, sc));
    case 17: return tconcat(gen_type_sc(rng, depth - 1, sc), gen_type_sc(rng, depth - 1, sc));
    default: return gen_type_sc(rng, 0, sc);
  }
}

inline rk::TermPtr gen_term_sc(Rng& rng, int depth, Scope& sc) {
  using namespace rk;
  if (depth <= 0) {
    switch (rng.below(sc.tmvars.empty() ? 6 : 8)) {
      case 0: return munit();
      case 1: return mtrue();
      case 2: return mfalse();
      case 3: return mrecnil();
      case 4: return mint(static_cast<int64_t>(rng.below(100)));
      case 5: return mstr(std::string("s") + kLabels[rng.below(4)]);
      default: return mvar(sc.tmvars[rng.below(sc.tmvars.size())]);
    }
  }
  switch (rng.below(22)) {
    case 0: {
      std::string b = sc.fresh_tm();
      auto t = gen_type_sc(rng, depth - 1, sc);
      sc.tmvars.push_back(b);
      auto body = gen_term_sc(rng, depth - 1, sc);
      sc.tmvars.pop_back();
      return mlam(b, t, body);
    }
    case 1: return mapp(gen_term_sc(rng, depth - 1, sc), gen_term_sc(rng, depth - 1, sc));
    case 2: {
      std::string b = sc.fresh_ty();
      auto k = gen_kind_sc(rng, depth - 1, sc);
      sc.tyvars.push_back(b);
      auto body = gen_term_sc(rng, depth - 1, sc);
      sc.tyvars.pop_back();
      return mtylam(b, k, body);
    }
    case 3: return mtyapp(gen_term_sc(rng, depth - 1, sc), gen_type_sc(rng, depth - 1, sc));
    case 4:
      return mreccons(rng.flip() ? tlabel(kLabels[rng.below(4)]) : gen_type_sc(rng, depth - 1, sc),
                      gen_term_sc(rng, depth - 1, sc), gen_term_sc(rng, depth - 1, sc));
    case 5: return mhdlbl(gen_term_sc(rng, depth - 1, sc));
    case 6: return mhdval(gen_term_sc(rng, depth - 1, sc));
    case 7: return mtl(gen_term_sc(rng, depth - 1, sc));
    case 8:
      return mif(gen_term_sc(rng, depth - 1, sc), gen_term_sc(rng, depth - 1, sc),
                 gen_term_sc(rng, depth - 1, sc));
    case 9:
      return mpropite(gen_formula_sc(rng, depth - 1, sc), gen_term_sc(rng, depth - 1, sc),
                      gen_term_sc(rng, depth - 1, sc));
    case 10: {
      std::string b = sc.fresh_ty();
      auto scrut = gen_type_sc(rng, depth - 1, sc);
      auto test = gen_base(rng, depth - 1, sc);
      sc.tyvars.push_back(b);
      auto then_m = gen_term_sc(rng, depth - 1, sc);
      sc.tyvars.pop_back();
      return mkindcase(scrut, test, b, then_m, gen_term_sc(rng, depth - 1, sc));
    }
    case 11: return memptycol(gen_type_sc(rng, depth - 1, sc));
    case 12: return mconscol(gen_term_sc(rng, depth - 1, sc), gen_term_sc(rng, depth - 1, sc));
    case 13: {
      std::string h = sc.fresh_tm(), t = sc.fresh_tm();
      auto scrut = gen_term_sc(rng, depth - 1, sc);
      auto e = gen_term_sc(rng, depth - 1, sc);
      sc.tmvars.push_back(h);
      sc.tmvars.push_back(t);
      auto c = gen_term_sc(rng, depth - 1, sc);
      sc.tmvars.pop_back();
      sc.tmvars.pop_back();
      return mcolcase(scrut, e, h, t, c);
    }
    case 14: return mref(gen_term_sc(rng, depth - 1, sc));
    case 15: return mderef(gen_term_sc(rng, depth - 1, sc));
    case 16: return massign(gen_term_sc(rng, depth - 1, sc), gen_term_sc(rng, depth - 1, sc));
    case 17: {
      std::string f = sc.fresh_tm();
      auto t = gen_type_sc(rng, depth - 1, sc);
      sc.tmvars.push_back(f);
      auto body = gen_term_sc(rng, depth - 1, sc);
      sc.tmvars.pop_back();
      return mfix(f, t, body);
    }
    case 18: return mplus(gen_term_sc(rng, depth - 1, sc), gen_term_sc(rng, depth - 1, sc));
    case 19: return mseq(gen_term_sc(rng, depth - 1, sc), gen_term_sc(rng, depth - 1, sc));
    default: return gen_term_sc(rng, 0, sc);
  }
}

inline rk::TypePtr gen_type(Rng& rng, int depth) {
  Scope sc;
  return gen_type_sc(rng, depth, sc);
}

inline rk::TypePtr gen_type_over(Rng& rng, int depth, std::vector<std::string> vars) {
  Scope sc;
  sc.tyvars = std::move(vars);
  return gen_type_sc(rng, depth, sc);
}

inline rk::TermPtr gen_term(Rng& rng, int depth) {
  Scope sc;
  return gen_term_sc(rng, depth, sc);
}

inline rk::KindPtr gen_kind(Rng& rng, int depth) {
  Scope sc;
  return gen_kind_sc(rng, depth, sc);
}

inline rk::FormulaPtr gen_formula(Rng& rng, int depth) {
  Scope sc;
  return gen_formula_sc(rng, depth, sc);
}

}  // namespace testgen
