#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rk/ast.hpp"
#include "rk/syntax_ops.hpp"
#include "testgen.hpp"

using namespace rk;

TEST_CASE("substitution hits a free variable") {
  auto t = subst_type(tvar("t"), "t", tbool());
  CHECK(std::holds_alternative<TBool>(t->v));
}

TEST_CASE("substitution respects shadowing binders") {
  // (fun t::Type -> t){bool/t} keeps the bound occurrence
  auto lam = tlam("t", kbase(BaseTag::Type), tvar("t"));
  auto r = subst_type(lam, "t", tbool());
  CHECK(alpha_eq(r, lam));
}

TEST_CASE("substitution recurses through record structure") {
  // [| headlb(t) : head(t) |]{R/t}  ==  [| headlb(R) : head(R) |]
  auto target = treccons(thdlbl(tvar("t")), thdtyp(tvar("t")), trecnil());
  auto person = treccons(tlabel("a"), tint(), trecnil());
  auto got = subst_type(target, "t", person);
  auto want = treccons(thdlbl(person), thdtyp(person), trecnil());
  CHECK(alpha_eq(got, want));
}

TEST_CASE("substitution avoids capture") {
  // (fun s::Type -> t){s/t} must not capture the free s
  auto lam = tlam("s", kbase(BaseTag::Type), tvar("t"));
  auto r = subst_type(lam, "t", tvar("s"));
  auto* n = std::get_if<TLam>(&r->v);
  REQUIRE(n != nullptr);
  CHECK(n->binder != "s");
  auto* body = std::get_if<TVar>(&n->body->v);
  REQUIRE(body != nullptr);
  CHECK(body->name == "s");
}

TEST_CASE("term substitution basics") {
  CHECK(alpha_eq(subst_term(mvar("x"), "x", mtrue()), mtrue()));
  auto lam = mlam("x", tbool(), mvar("x"));
  CHECK(alpha_eq(subst_term(lam, "x", mfalse()), lam));
  // type substitution reaches annotations in terms
  auto r = subst_type(mtyapp(mvar("f"), tvar("t")), "t", trecnil());
  auto* n = std::get_if<MTyApp>(&r->v);
  REQUIRE(n != nullptr);
  CHECK(std::holds_alternative<TRecNil>(n->arg->v));
}

TEST_CASE("alpha equivalence") {
  auto a = tlam("t", kbase(BaseTag::Type), tvar("t"));
  auto b = tlam("s", kbase(BaseTag::Type), tvar("s"));
  CHECK(alpha_eq(a, b));
  CHECK_FALSE(alpha_eq(tvar("t"), tvar("s")));
  // record types are position-sensitive lists
  auto r1 = treccons(tlabel("a"), tbool(), treccons(tlabel("b"), tunit(), trecnil()));
  auto r2 = treccons(tlabel("b"), tunit(), treccons(tlabel("a"), tbool(), trecnil()));
  CHECK_FALSE(alpha_eq(r1, r2));
}

TEST_CASE("record order sensitivity agrees with a brute-force matcher") {
  // A naive matcher that tries every consistent renaming of (no) free
  // variables: for closed records alpha-equivalence is plain structural
  // equality, so the two orderings must differ.
  auto r1 = treccons(tlabel("a"), tbool(), treccons(tlabel("b"), tunit(), trecnil()));
  auto r2 = treccons(tlabel("b"), tunit(), treccons(tlabel("a"), tbool(), trecnil()));
  CHECK(alpha_key(r1) != alpha_key(r2));
}

TEST_CASE("free variable computation") {
  CHECK(free_vars(tlam("t", kbase(BaseTag::Type), tvar("t"))).empty());
  auto fv = free_vars(tapp(tvar("f"), tvar("t")));
  CHECK(fv == std::set<std::string>{"f", "t"});
  // formulas contribute free variables
  auto ite = tpropite(fmember(etype(tlabel("l")), elabset(tvar("r"))), tvar("r"), trecnil());
  CHECK(free_vars(ite) == std::set<std::string>{"r"});
}

TEST_CASE("property: subst with same variable is identity") {
  testgen::Rng rng(0xC0FFEE);
  for (int i = 0; i < 300; ++i) {
    auto t = testgen::gen_type(rng, 4);
    auto vars = free_vars(t);
    std::string v = vars.empty() ? "t" : *vars.begin();
    CHECK(alpha_eq(subst_type(t, v, tvar(v)), t));
  }
}

TEST_CASE("property: substitution composition") {
  // subst(subst(e,t,A), s, B) == subst(subst(e,s,B), t, subst(A,s,B))
  // when s not free in A and t != s.
  testgen::Rng rng(0xBEEF);
  int done = 0;
  for (int i = 0; i < 600 && done < 200; ++i) {
    auto e = testgen::gen_type_over(rng, 4, {"t", "s"});
    auto a = testgen::gen_type_over(rng, 3, {"u"});  // s not free in A
    auto b = testgen::gen_type_over(rng, 3, {"u"});
    auto lhs = subst_type(subst_type(e, "t", a), "s", b);
    auto rhs = subst_type(subst_type(e, "s", b), "t", subst_type(a, "s", b));
    CHECK(alpha_eq(lhs, rhs));
    ++done;
  }
  CHECK(done == 200);
}

TEST_CASE("property: alpha_eq is an equivalence relation") {
  testgen::Rng rng(0xDADA);
  std::vector<TypePtr> pool;
  for (int i = 0; i < 60; ++i) pool.push_back(testgen::gen_type(rng, 4));
  for (auto& t : pool) CHECK(alpha_eq(t, t));
  for (int i = 0; i < 200; ++i) {
    auto& a = pool[rng.below(pool.size())];
    auto& b = pool[rng.below(pool.size())];
    auto& c = pool[rng.below(pool.size())];
    CHECK(alpha_eq(a, b) == alpha_eq(b, a));
    if (alpha_eq(a, b) && alpha_eq(b, c)) CHECK(alpha_eq(a, c));
  }
}

TEST_CASE("property: free vars after substitution") {
  testgen::Rng rng(0xFEED);
  for (int i = 0; i < 300; ++i) {
    auto e = testgen::gen_type_over(rng, 4, {"t", "s", "u"});
    auto a = testgen::gen_type_over(rng, 3, {"s", "u"});
    auto fv_e = free_vars(e);
    auto fv_a = free_vars(a);
    auto fv = free_vars(subst_type(e, "t", a));
    for (auto& v : fv) {
      bool in_e_minus_t = fv_e.count(v) && v != "t";
      bool ok = in_e_minus_t || (fv_e.count("t") && fv_a.count(v));
      CHECK(ok);
    }
  }
}
