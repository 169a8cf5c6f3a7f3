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

CSTermPtr parse_cs(const std::string& s) { return parse_cs_term_string(s, sigs(), gates()); }

DenoteCtx ctx_rplus(int budget = 64) {
    DenoteCtx ctx;
    ctx.cs = instance_rplus();
    ctx.gates = &gates();
    ctx.sigs = &sigs();
    ctx.budget = budget;
    return ctx;
}

const char* kEcostText =
    "letrec (ECOST : Q => Rinf) X = real 1 +^ (real 0 (+p0 X) ECOST (H (collapse1(X))))";

// Type-directed generator of well-typed closed CS terms.
struct CSGen {
    std::mt19937_64 rng;
    std::vector<std::pair<std::string, CSTypePtr>> scope;
    int counter = 0;

    explicit CSGen(std::uint64_t seed) : rng(seed) {}

    std::string fresh() { return "g" + std::to_string(counter++); }

    CSTermPtr var_of(const CSType& t) {
        std::vector<const std::pair<std::string, CSTypePtr>*> hits;
        for (const auto& b : scope)
            if (cs_type_equal(*b.second, t)) hits.push_back(&b);
        if (hits.empty()) return nullptr;
        return cs_mk(CSVar{hits[rng() % hits.size()]->first});
    }

    CSTermPtr gen_value(const CSType& t, int depth) {
        if (auto v = var_of(t); v && rng() % 2) return v;
        switch (t.kind) {
        case CSType::Kind::Basic: {
            if (t.name == "Q") {
                std::mt19937_64 r2(rng());
                QState s = random_state(r2, 1 + int(rng() % 2));
                CSTermPtr k = cs_mk(CSKet{s});
                if (depth > 0 && rng() % 3 == 0) k = cs_mk(CSGate{"H", k});
                if (depth > 0 && rng() % 4 == 0) k = cs_mk(CSCollapse{int(rng() % 2), k});
                return k;
            }
            // Out
            return cs_mk(CSCons{rng() % 2 ? "inj1" : "inj0",
                                {gen_value(*CSType::basic("Q"), depth - 1)}});
        }
        case CSType::Kind::RInf:
        case CSType::Kind::K:
            return cs_mk(CSReal{double(rng() % 5) * 0.5});
        case CSType::Kind::Arrow: {
            std::string x = fresh();
            scope.push_back({x, t.from});
            CSTermPtr body = gen_term(*t.to, depth - 1);
            scope.pop_back();
            return cs_mk(CSLam{x, body, t.from});
        }
        }
        return cs_mk(CSReal{0});
    }

    CSTermPtr gen_term(const CSType& t, int depth) {
        if (depth <= 0 || rng() % 3 == 0) return gen_value(t, depth);
        bool costy = t.kind == CSType::Kind::K || t.kind == CSType::Kind::RInf;
        switch (rng() % 4) {
        case 0: { // redex in head position
            CSTypePtr dom = rng() % 2 ? CSType::basic("Q") : CSType::rinf();
            std::string x = fresh();
            scope.push_back({x, dom});
            CSTermPtr body = gen_term(t, depth - 1);
            scope.pop_back();
            CSTermPtr fn = cs_mk(CSLam{x, body, dom});
            return cs_mk(CSApp{fn, gen_value(*dom, depth - 1)});
        }
        case 1: {
            if (!costy) return gen_value(t, depth);
            return cs_mk(CSCAdd{gen_term(*CSType::rinf(), depth - 1),
                                gen_term(*CSType::k(), depth - 1)});
        }
        case 2: {
            if (!costy) return gen_value(t, depth);
            return cs_mk(CSBary{gen_term(*CSType::k(), depth - 1),
                                gen_value(*CSType::basic("Q"), depth - 1),
                                gen_term(*CSType::k(), depth - 1)});
        }
        default: { // case over Out
            CSTermPtr scrut = gen_value(*CSType::basic("Out"), depth - 1);
            std::string b = fresh();
            scope.push_back({b, CSType::basic("Q")});
            CSTermPtr arm0 = gen_term(t, depth - 1);
            scope.pop_back();
            std::string y = fresh();
            scope.push_back({y, CSType::basic("Out")});
            CSTermPtr dflt = gen_term(t, depth - 1);
            scope.pop_back();
            CSCase c{scrut, {{"inj0", {b}, arm0}}, y, dflt};
            return cs_mk(std::move(c));
        }
        }
    }
};

// Tag inspection: does a denotation inhabit the carrier of a type?
bool inhabits(const Denotation& d, const CSType& t) {
    switch (t.kind) {
    case CSType::Kind::Basic:
        if (t.name == "Q") return std::holds_alternative<QuantumVal>(d.v);
        return std::holds_alternative<BaseVal>(d.v);
    case CSType::Kind::RInf:
    case CSType::Kind::K:
        return std::holds_alternative<RealVal>(d.v) || std::holds_alternative<CostVal>(d.v);
    case CSType::Kind::Arrow:
        return std::holds_alternative<FuncVal>(d.v);
    }
    return false;
}

} // namespace

TEST_CASE("ECOST checks at Q => Rinf with K instantiated at Rinf") {
    CSTermPtr ecost = parse_cs(kEcostText);
    CHECK_NOTHROW(cs_check({}, ecost, CSType::arrow(CSType::basic("Q"), CSType::rinf()), sigs(),
                           gates(), KMode::RPlus));
}

TEST_CASE("Q => Q is derivable in the CS type system") {
    CSTermPtr t = parse_cs("lam (X : Q). tensor(X, X)"); // duplication is permitted here
    auto [et, ty] = cs_infer({}, t, sigs(), gates());
    CHECK(show_cs_type(*ty) == "Q => Q");
}

TEST_CASE("letrec at a non-functional type is rejected") {
    CSTermPtr t = parse_cs("letrec (F : Q) X = X");
    try {
        cs_check({}, t, CSType::basic("Q"), sigs(), gates());
        FAIL("expected NotFunctionalType");
    } catch (const Error& e) {
        CHECK(e.kind() == "NotFunctionalType");
    }
}

TEST_CASE("operands must be values (A-normal discipline)") {
    // ((lam Y. Y) applied to a redex) violates the grammar.
    CSTermPtr fn = parse_cs("lam (Y : Rinf). Y");
    CSTermPtr redex = cs_mk(CSApp{fn, cs_mk(CSApp{fn, cs_mk(CSReal{1})})});
    try {
        cs_infer({}, redex, sigs(), gates());
        FAIL("expected OperandNotValue");
    } catch (const Error& e) {
        CHECK(e.kind() == "OperandNotValue");
    }
}

TEST_CASE("denote: real constants and collapses follow Fig. 7") {
    DenoteCtx ctx = ctx_rplus();
    Denotation r = denote(cs_mk(CSReal{2.75}), {}, ctx);
    CHECK(den_number(r).v == doctest::Approx(2.75));

    Denotation m = denote(cs_mk(CSCollapse{1, cs_mk(CSKet{psi_43()})}), {}, ctx);
    const auto* q = std::get_if<QuantumVal>(&m.v);
    REQUIRE(q != nullptr);
    CVector want = CVector::Zero(4);
    want[2] = want[3] = 1.0 / std::sqrt(2.0);
    CHECK(q->state.approx_equal(QState::make(2, want), 1e-9));
}

TEST_CASE("denote: ECOST applied to the paper state converges to 3/2") {
    CSTermPtr ecost = cs_check({}, parse_cs(kEcostText),
                               CSType::arrow(CSType::basic("Q"), CSType::rinf()), sigs(), gates(),
                               KMode::RPlus);
    CSTermPtr applied = cs_mk(CSApp{ecost, cs_mk(CSKet{psi_paper()})});
    ClosedCostResult res = denote_closed_cost(applied, {}, ctx_rplus(), 64, 1e-9);
    CHECK(res.converged);
    CHECK(std::abs(res.value.v - 1.5) < 1e-6);
}

TEST_CASE("denote_closed_cost flags divergent cost recursions") {
    CSTermPtr div = parse_cs("(letrec (F : Q => K) X = real 1 +^ F X) ket[1|0>]");
    CSTermPtr el = cs_check({}, div, CSType::k(), sigs(), gates(), KMode::RPlus);
    ClosedCostResult res = denote_closed_cost(el, {}, ctx_rplus(), 32, 1e-9);
    CHECK_FALSE(res.converged);
    CHECK(res.value.v >= 30.0); // grows with the budget, representing infinity
}

TEST_CASE("denote_closed_cost: plain arithmetic is exact") {
    CSTermPtr t = cs_check({}, parse_cs("real 2 +^ real 3"), CSType::k(), sigs(), gates(),
                           KMode::RPlus);
    ClosedCostResult res = denote_closed_cost(t, {}, ctx_rplus(), 8, 1e-9);
    CHECK(res.converged);
    CHECK(res.value.v == doctest::Approx(5.0));
}

TEST_CASE("Kleene iterates are monotone in the unrolling budget") {
    CSTermPtr ecost = cs_check({}, parse_cs(kEcostText),
                               CSType::arrow(CSType::basic("Q"), CSType::rinf()), sigs(), gates(),
                               KMode::RPlus);
    CSTermPtr applied = cs_mk(CSApp{ecost, cs_mk(CSKet{psi_paper()})});
    double prev = -1.0;
    for (int b = 1; b <= 20; ++b) {
        DenoteCtx ctx = ctx_rplus(b);
        double v = den_number(denote(applied, {}, ctx)).v;
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
}

TEST_CASE("the bary clause agrees with a direct computation") {
    std::mt19937_64 rng(5);
    DenoteCtx ctx = ctx_rplus();
    for (int i = 0; i < 100; ++i) {
        QState s = random_state(rng, 1 + int(rng() % 2));
        double a = double(rng() % 8) * 0.25, b = double(rng() % 8) * 0.25;
        CSTermPtr t = cs_mk(CSBary{cs_mk(CSReal{a}), cs_mk(CSKet{s}), cs_mk(CSReal{b})});
        double got = den_number(denote(t, {}, ctx)).v;
        double p0 = measure_prob(0, s);
        CHECK(got == doctest::Approx(p0 * a + (1 - p0) * b).epsilon(1e-12));
    }
}

TEST_CASE("type soundness: fuzzed well-typed terms denote into their carriers") {
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        CSGen gen(seed * 31 + 7);
        CSTypePtr target;
        switch (seed % 4) {
        case 0: target = CSType::k(); break;
        case 1: target = CSType::rinf(); break;
        case 2: target = CSType::basic("Q"); break;
        default: target = CSType::arrow(CSType::basic("Q"), CSType::k()); break;
        }
        CSTermPtr t = gen.gen_term(*target, 4);
        CSTermPtr et;
        try {
            et = cs_check({}, t, target, sigs(), gates(), KMode::RPlus);
        } catch (const Error& e) {
            CAPTURE(cs_pretty(t));
            FAIL_CHECK("generator produced an ill-typed term: " << e.what());
            continue;
        }
        Denotation d = denote(et, {}, ctx_rplus(16));
        CHECK_MESSAGE(inhabits(d, *target), cs_pretty(t));
    }
}

TEST_CASE("substitution lemma at base types") {
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
        CSGen gen(seed * 131 + 11);
        CSTypePtr vt = seed % 2 ? CSType::basic("Q") : CSType::rinf();
        CSTermPtr v = gen.gen_value(*vt, 2);
        gen.scope.push_back({"Xsub", vt});
        CSTypePtr bt = seed % 3 ? CSType::k() : CSType::rinf();
        CSTermPtr body = gen.gen_term(*bt, 3);
        gen.scope.pop_back();

        CSContext theta;
        theta["Xsub"] = vt;
        CSTermPtr body_el = cs_check(theta, body, bt, sigs(), gates(), KMode::RPlus);
        CSTermPtr subst_el = cs_check({}, cs_subst(body_el, "Xsub", v), bt, sigs(), gates(),
                                      KMode::RPlus);

        DenoteCtx ctx = ctx_rplus(16);
        Denotation dv = denote(cs_check({}, v, vt, sigs(), gates(), KMode::RPlus), {}, ctx);
        Valuation rho;
        rho["Xsub"] = dv;
        Denotation lhs = denote(subst_el, {}, ctx);
        Denotation rhs = denote(body_el, rho, ctx);
        CHECK_MESSAGE(den_equal(lhs, rhs, 1e-9), cs_pretty(body));
    }
}

TEST_CASE("cs terms roundtrip through the printer") {
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        CSGen gen(seed * 39 + 1);
        CSTypePtr target = seed % 2 ? CSType::k() : CSType::arrow(CSType::basic("Q"), CSType::k());
        CSTermPtr t = gen.gen_term(*target, 3);
        std::string text = cs_pretty(t);
        CAPTURE(text);
        CSTermPtr again = parse_cs(text);
        CHECK(cs_alpha_eq(again, t));
    }
}
