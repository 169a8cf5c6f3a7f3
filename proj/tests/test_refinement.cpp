#include "helpers.hpp"

using namespace qt;

namespace {

SigTable& sigs() {
    static SigTable s = SigTable::builtins();
    return s;
}
GateTable& gates() {
    static GateTable g = GateTable::builtins();
    return g;
}

RefEnv env_rplus() {
    RefEnv env;
    env.sigs = &sigs();
    env.gates = &gates();
    env.cs = instance_rplus();
    return env;
}

OracleParams params(int samples = 400) {
    OracleParams p;
    p.samples = samples;
    p.seed = 20240101;
    return p;
}

FormulaPtr phi(const std::string& s) { return parse_formula_string(s, sigs(), gates()); }
RefTypePtr rty(const std::string& s) { return parse_reftype_string(s, sigs(), gates()); }

RefContext ctx_xq() {
    RefContext ctx;
    return ctx.extend("X", RefType::top(CSType::basic("Q")));
}

// The recursion constraint of the cointoss example, with the candidate bound
// inlined for c.
FormulaPtr dagger(const std::string& bound_of, const std::string& bound_at) {
    return phi("forall Z : Rinf. Z <= 1 + p1(X) * (" + bound_of + ") => Z <= " + bound_at);
}

const char* kGoodArg = "1 + 2 * p1(H(collapse1(X)))";
const char* kGoodAt = "1 + 2 * p1(X)";
const char* kBadArg = "1 + p1(H(collapse1(X)))";
const char* kBadAt = "1 + p1(X)";

CSTermPtr ecost_term() {
    CSProgram p = parse_cs_program(qt::slurp(qt::corpus_path("ecost.csl")));
    return p.main;
}

} // namespace

TEST_CASE("well-formedness accepts the running example and rejects unbound variables") {
    RefEnv env = env_rplus();
    CHECK_NOTHROW(wf(ctx_xq(), rty("{ Z : Rinf | Z <= 1 + 2 * p1(X) }"), env, params()));
    SigTable with_nat = SigTable::builtins();
    with_nat.declare_type("Nat", true);
    with_nat.declare_cons({"0", {}, {}, "Nat"});
    RefEnv nat_env = env;
    nat_env.sigs = &with_nat;
    try {
        wf(RefContext{}, parse_reftype_string("{ Z : Nat | W = Z }", with_nat, gates()), nat_env,
           params());
        FAIL("expected UnboundVariable");
    } catch (const Error& e) {
        CHECK(e.kind() == "UnboundVariable");
    }
}

TEST_CASE("skeletons erase refinements and quantifiers") {
    CHECK(show_cs_type(*skeleton(rty("(X : Q) => { Z : Rinf | Z <= c(X) }"))) == "Q => Rinf");
    CHECK(show_cs_type(*skeleton(rty("forall W : Rinf. { Z : K | Z <= W }"))) == "K");
}

TEST_CASE("validity: the recursion constraint holds for 1 + 2 p1") {
    Verdict v = validity(ctx_xq(), dagger(kGoodArg, kGoodAt), env_rplus(), params(1000));
    CHECK(v.kind == Verdict::Kind::NotFalsified);
    CHECK(v.samples >= 1000);
}

TEST_CASE("validity: the recursion constraint fails for 1 + p1 with a replayable witness") {
    RefEnv env = env_rplus();
    OracleParams p = params(1000);
    Verdict v = validity(ctx_xq(), dagger(kBadArg, kBadAt), env, p);
    REQUIRE(v.kind == Verdict::Kind::Falsified);
    REQUIRE(v.witness != nullptr);
    // the witness replays to a concrete violation
    CHECK(replay_witness(*v.witness, env, p));
    // and its state indeed has p1 > 0
    const auto* q = std::get_if<QuantumVal>(&v.witness->valuation.at("X").v);
    REQUIRE(q != nullptr);
    CHECK(measure_prob(1, q->state) > 0.0);
}

TEST_CASE("validity: syntactic schemata") {
    FormulaPtr f = phi("forall Z : Rinf. Z <= p1(X) => Z <= p1(X)");
    Verdict v = validity(ctx_xq(), f, env_rplus(), params());
    CHECK(v.kind == Verdict::Kind::VerifiedSyntactic);

    // conjunct weakening
    FormulaPtr g = phi("(p1(X) <= 1 && 0 <= p1(X)) => 0 <= p1(X)");
    CHECK(validity(ctx_xq(), g, env_rplus(), params()).kind ==
          Verdict::Kind::VerifiedSyntactic);
}

TEST_CASE("subtyping: reflexivity is syntactic") {
    RefTypePtr t = rty("{ Z : Rinf | Z <= 1 + 2 * p1(X) }");
    Verdict v = subtype(ctx_xq(), t, t, env_rplus(), params());
    CHECK(v.kind == Verdict::Kind::VerifiedSyntactic);
}

TEST_CASE("subtyping: weakening a bound cannot be falsified") {
    Verdict v = subtype(ctx_xq(), rty("{ Z : Rinf | Z <= 1 + p1(X) }"),
                        rty("{ Z : Rinf | Z <= 1 + 2 * p1(X) }"), env_rplus(), params());
    CHECK(v.kind == Verdict::Kind::NotFalsified);
}

TEST_CASE("subtyping: tightening a bound is falsified with a witness") {
    RefContext empty;
    Verdict v = subtype(empty, rty("{ Z : Rinf | Z <= 2 }"), rty("{ Z : Rinf | Z <= 1 }"),
                        env_rplus(), params());
    REQUIRE(v.kind == Verdict::Kind::Falsified);
    REQUIRE(v.witness != nullptr);
    CHECK(replay_witness(*v.witness, env_rplus(), params()));
}

TEST_CASE("subtyping: mismatched shapes are skeleton errors") {
    RefContext empty;
    CHECK_THROWS_AS(subtype(empty, rty("{ Z : Rinf | Z <= 1 }"), rty("{ Z : Q | true }"),
                            env_rplus(), params()),
                    Error);
}

TEST_CASE("admissibility follows the syntactic criterion") {
    RefContext empty;
    CHECK(admissible(empty, rty("(X : Rinf) => { Z : Rinf | Z <= X * X + X + 1 }")).ok);
    CHECK_FALSE(admissible(empty, rty("{ Z : K | 1 [= Z }")).ok);
    CHECK(admissible(empty, rty("{ Z : K | true }")).ok);
    // weakening the bound keeps admissibility
    CHECK(admissible(ctx_xq(), rty("{ Z : Rinf | Z <= p1(X) }")).ok);
    CHECK(admissible(ctx_xq(), rty("{ Z : Rinf | Z <= 2 * p1(X) }")).ok);
}

TEST_CASE("check_refined: the paper bound on ECOST is not falsified") {
    RtySpec spec = parse_rty(qt::slurp(qt::corpus_path("ecost.rty")), sigs(), gates());
    RefContext empty;
    Verdict v = check_refined(empty, ecost_term(), spec.type, env_rplus(), params(400));
    CHECK(v.kind == Verdict::Kind::NotFalsified);
}

TEST_CASE("check_refined: constants verify syntactically") {
    CSTermPtr r = parse_cs_term_string("real 2.5", sigs(), gates());
    RefContext empty;
    Verdict v =
        check_refined(empty, r, rty("{ Z : Rinf | Z = 2.5 }"), env_rplus(), params());
    CHECK(v.kind == Verdict::Kind::VerifiedSyntactic);
}

TEST_CASE("check_refined: the too-tight bound on ECOST is falsified") {
    RtySpec spec = parse_rty(qt::slurp(qt::corpus_path("ecost_bad.rty")), sigs(), gates());
    RefContext empty;
    RefEnv env = env_rplus();
    OracleParams p = params(400);
    Verdict v = check_refined(empty, ecost_term(), spec.type, env, p);
    REQUIRE(v.kind == Verdict::Kind::Falsified);
    REQUIRE(v.witness != nullptr);
    CHECK(replay_witness(*v.witness, env, p));
}

TEST_CASE("rec demands admissible annotations") {
    RefContext empty;
    // lower bounds are not admissible, so rec must refuse them outright
    RefTypePtr lower = rty("(X : Q) => { Z : Rinf | 1 <= Z }");
    try {
        check_refined(empty, ecost_term(), lower, env_rplus(), params(50));
        FAIL("expected NotAdmissible");
    } catch (const Error& e) {
        CHECK(e.kind() == "NotAdmissible");
    }
}

TEST_CASE("case rule: branch facts flow into the oracle") {
    CSTermPtr t = parse_cs_term_string(
        "lam (W : Out). case W of | inj0(Y) -> real 1 | V -> real 0", sigs(), gates());
    RefContext empty;
    Verdict v = check_refined(empty, t,
                              rty("(W : Out) => { Z : Rinf | Z <= 1 }"), env_rplus(), params(200));
    CHECK(v.kind != Verdict::Kind::Falsified);
}

TEST_CASE("soundness shadow: accepted bounds hold on fresh samples") {
    RtySpec spec = parse_rty(qt::slurp(qt::corpus_path("ecost.rty")), sigs(), gates());
    RefContext empty;
    RefEnv env = env_rplus();
    Verdict v = check_refined(empty, ecost_term(), spec.type, env, params(300));
    REQUIRE(v.kind != Verdict::Kind::Falsified);

    // evaluate the term and probe membership in the type's interpretation
    DenoteCtx ctx;
    ctx.cs = env.cs;
    ctx.gates = &gates();
    ctx.sigs = &sigs();
    ctx.budget = 64;
    CSTermPtr el = cs_check({}, ecost_term(),
                            CSType::arrow(CSType::basic("Q"), CSType::rinf()), sigs(), gates(),
                            KMode::RPlus);
    Denotation d = denote(el, {}, ctx);
    for (std::uint64_t m = 0; m < 20; ++m)
        CHECK(member_of(d, spec.type, {}, env, params(), 1000 + m));
}

TEST_CASE("formula substitution agrees with valuation extension") {
    std::mt19937_64 rng(77);
    RefEnv env = env_rplus();
    OracleParams p = params();
    const char* bodies[] = {
        "p1(X) <= 1",
        "p0(X) + p1(X) = 1",
        "2 * p1(H(X)) <= 2",
        "p1(collapse1(X)) <= p1(X) + 1",
        "forall Z : Rinf. Z <= p0(X) => Z <= 1",
    };
    for (int i = 0; i < 60; ++i) {
        FormulaPtr f = phi(bodies[i % 5]);
        QState s = random_state(rng, 1 + int(rng() % 2));
        RExpr kx;
        kx.kind = RExpr::Kind::Ket;
        kx.ket = s;
        FormulaPtr fs = formula_subst(f, "X", rx_mk(std::move(kx)));
        Valuation rho;
        bool lhs = eval_formula(fs, rho, env, p, 5 + i);
        rho["X"] = Denotation{QuantumVal{s}};
        bool rhs = eval_formula(f, rho, env, p, 5 + i);
        CHECK(lhs == rhs);
    }
}

TEST_CASE("reftype substitution agrees with valuation extension (membership)") {
    std::mt19937_64 rng(78);
    RefEnv env = env_rplus();
    OracleParams p = params();
    for (int i = 0; i < 40; ++i) {
        RefTypePtr t = rty("{ Z : Rinf | Z <= 1 + 2 * p1(X) }");
        QState s = random_state(rng, 1 + int(rng() % 2));
        RExpr kx;
        kx.kind = RExpr::Kind::Ket;
        kx.ket = s;
        RefTypePtr ts = reftype_subst(t, "X", rx_mk(std::move(kx)));
        double value = (i % 2) ? 0.5 : 1.0 + 2.0 * measure_prob(1, s) + 0.25;
        Denotation d{RealVal{ExtReal{value}}};
        Valuation rho;
        bool lhs = member_of(d, ts, rho, env, p, 99 + i);
        rho["X"] = Denotation{QuantumVal{s}};
        bool rhs = member_of(d, t, rho, env, p, 99 + i);
        CHECK(lhs == rhs);
        CHECK(lhs == (value <= 1.0 + 2.0 * measure_prob(1, s) + 1e-9));
    }
}
