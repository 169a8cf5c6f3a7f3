// Acceptance suite: each test case checks one shipped guarantee end to end
// and prints a single PASS line when it holds.

#include <cstdio>

#include "helpers.hpp"

using namespace qt;

namespace {

void report(int criterion, const std::string& what) {
    std::printf("[acceptance] criterion %2d PASS: %s\n", criterion, what.c_str());
    std::fflush(stdout);
}

DenoteCtx make_ctx(CostStructurePtr cs, const Program& p, int budget = 64) {
    DenoteCtx ctx;
    ctx.cs = std::move(cs);
    ctx.gates = &p.gates;
    ctx.sigs = &p.sigs;
    ctx.budget = budget;
    return ctx;
}

} // namespace

TEST_CASE("1: measurement math on the section 4.3 state") {
    REQUIRE(std::abs(measure_prob(1, psi_43()) - 2.0 / 3.0) < 1e-9);
    CVector want = CVector::Zero(4);
    want[2] = want[3] = 1.0 / std::sqrt(2.0);
    REQUIRE(post_measure(1, psi_43()).approx_equal(QState::make(2, want), 1e-9));
    report(1, "p1 = 2/3 and the collapse is 1/sqrt2 (|10> + |11>), both at 1e-9");
}

TEST_CASE("2: cointoss end-to-end equals 3/2 on both sides") {
    Program p = load_corpus("cointoss.aql");
    TypedProgram tp = check_program(p);
    double op = ecost_lower(tp.main, 40, p.gates);
    REQUIRE(std::abs(op - 1.5) < 1e-6);

    CSTermPtr k = zero_continuation(CSType::basic("Q"));
    QetResult tr = qet_translate_term(tp.main, k, p.sigs, p.gates);
    CSTermPtr el = cs_check({}, tr.term, CSType::k(), p.sigs, p.gates, KMode::RPlus);
    ClosedCostResult den = denote_closed_cost(el, {}, make_ctx(instance_rplus(), p), 64, 1e-9);
    REQUIRE(den.converged);
    REQUIRE(std::abs(den.value.v - 1.5) < 1e-6);
    report(2, "operational depth-40 and denotational budget-64 both 1.5 within 1e-6");
}

TEST_CASE("3: the general cointoss law 1 + 2 p1(psi) on 100 seeded states") {
    Program p = load_corpus("cointoss.aql");
    TypePtr q = parse_type_string("Q", p.sigs);
    TypingContext ctx;
    ctx.affine["y"] = q;
    TermPtr applied = check_term(ctx, mk(App{p.defs[0].value, mk(Var{"y"})}), q, p.sigs, p.gates);
    CSTermPtr k = zero_continuation(CSType::basic("Q"));
    std::map<std::string, TypePtr> free_types{{"y", q}};
    QetResult tr = qet_translate_term(applied, k, p.sigs, p.gates, free_types);
    CSContext theta{{tr.rename.at("y"), CSType::basic("Q")}};
    CSTermPtr el = cs_check(theta, tr.term, CSType::k(), p.sigs, p.gates, KMode::RPlus);

    std::mt19937_64 rng(20240810);
    for (int i = 0; i < 100; ++i) {
        QState psi = random_state(rng, 3);
        Valuation rho;
        rho[tr.rename.at("y")] = Denotation{QuantumVal{psi}};
        ClosedCostResult den =
            denote_closed_cost(el, rho, make_ctx(instance_rplus(), p), 64, 1e-9);
        REQUIRE(std::abs(den.value.v - (1.0 + 2.0 * measure_prob(1, psi))) < 1e-6);
    }
    report(3, "denoted cost within 1e-6 of 1 + 2 p1(psi) on 100 random 3-qubit states");
}

TEST_CASE("4: operational and denotational expectations agree on the corpus") {
    int programs = 0;
    for (const auto& e : corpus()) {
        if (!e.expect_error.empty()) continue;
        Program p = load_corpus(e.file);
        ComparisonReport cost = check_expected_cost(p, {}, e.depth, e.budget, 1e-6, e.name);
        REQUIRE_MESSAGE(cost.pass, e.name << ": cost gap " << cost.gap);
        if (!e.continuation_file.empty()) {
            CSProgram f =
                parse_cs_program(slurp(corpus_path(e.continuation_file)), p.sigs, p.gates);
            Program merged = p;
            merged.sigs = f.sigs;
            merged.gates = f.gates;
            ComparisonReport val = check_expected_value(merged, {}, f.main, kegelspitze_unit(),
                                                        e.depth, e.budget, 1e-6, e.name);
            REQUIRE_MESSAGE(val.pass, e.name << ": value gap " << val.gap);
        }
        ++programs;
    }
    REQUIRE(programs >= 10);
    report(4, "expected cost and value comparisons pass at 1e-6 on " +
                  std::to_string(programs) + " programs");
}

TEST_CASE("5: grover error probabilities match the closed form") {
    for (int i : {0, 1, 2}) {
        Program p = load_corpus("grover2_i" + std::to_string(i) + ".aql");
        CSProgram f = parse_cs_program(slurp(corpus_path("err2.csl")), p.sigs, p.gates);
        Program merged = p;
        merged.sigs = f.sigs;
        merged.gates = f.gates;
        ComparisonReport r = check_expected_value(merged, {}, f.main, kegelspitze_unit(), 20, 16,
                                                  1e-6, "grover2");
        REQUIRE(r.pass);
        double want = std::pow(std::cos((2 * i + 1) * std::asin(0.5)), 2);
        REQUIRE_MESSAGE(std::abs(r.operational - want) < 1e-6, "i=" << i);
        REQUIRE(std::abs(r.denotational.v - want) < 1e-6);
        if (i == 1) REQUIRE(std::abs(r.operational) < 1e-6); // the exact-zero case
    }
    report(5, "err(i) = cos^2((2i+1) asin(1/2)) for i in {0,1,2}, including 0 at i=1");
}

TEST_CASE("6: the algebra law suite holds at 1e-12") {
    struct Probe {
        CostStructurePtr cs;
        std::uint64_t seed;
    };
    std::vector<Probe> probes = {{instance_rplus(), 101},
                                 {instance_unit_forgetful(), 102},
                                 {forgetful(kegelspitze_rplus()), 103}};
    for (const auto& probe : probes) {
        std::mt19937_64 rng(probe.seed);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const CostStructure& cs = *probe.cs;
        bool has_inf = cs.contains(ExtReal::infinity());
        auto elem = [&]() {
            if (has_inf && unif(rng) < 0.04) return ExtReal::infinity();
            return ExtReal{(has_inf ? 4.0 : 1.0) * unif(rng)};
        };
        auto eq = [&](ExtReal x, ExtReal y) {
            if (x.is_inf() || y.is_inf()) return x.is_inf() && y.is_inf(); // exact on inf
            return std::abs(x.v - y.v) <= 1e-12;
        };
        for (int i = 0; i < 10000; ++i) {
            ExtReal a = elem(), b = elem(), c = elem();
            double r = unif(rng), s = unif(rng);
            REQUIRE(eq(cs.bary(1.0, a, b), a));
            REQUIRE(eq(cs.bary(r, a, b), cs.bary(1.0 - r, b, a)));
            REQUIRE(eq(cs.bary(r, a, a), a));
            if (r * s < 1.0 - 1e-9)
                REQUIRE(eq(cs.bary(s, cs.bary(r, a, b), c),
                           cs.bary(r * s, a, cs.bary((s - r * s) / (1.0 - r * s), b, c))));
            ExtReal x{3.0 * unif(rng)}, y{3.0 * unif(rng)};
            REQUIRE(eq(cs.cadd(ExtReal{0.0}, a), a));
            REQUIRE(eq(cs.cadd(x, cs.cadd(y, a)), cs.cadd(x + y, a)));
            if (cs.contains(cs.cadd(x, a)) && cs.contains(cs.cadd(y, b)))
                REQUIRE(eq(cs.bary(r, cs.cadd(x, a), cs.cadd(y, b)),
                           cs.cadd(ExtReal{r * x.v + (1 - r) * y.v}, cs.bary(r, a, b))));
            REQUIRE(cs.leq(cs.bottom(), a));
        }
    }
    report(6, "10000 randomized law checks per instance at 1e-12, exact on infinities");
}

TEST_CASE("7: linearity verdicts on the corpus") {
    try {
        check_program(load_corpus("clone.aql"));
        FAIL("clone.aql must be rejected");
    } catch (const Error& e) {
        REQUIRE(e.kind() == "LinearityViolation");
    }
    struct Expect {
        const char* file;
        const char* type;
    };
    for (const Expect& x : {Expect{"cointoss.aql", "Q -o Q"},
                            Expect{"qwalk.aql", "Q -o (Q -o Q) => Q"},
                            Expect{"grover2_i1.aql", "Nat => Q"}}) {
        Program p = load_corpus(x.file);
        REQUIRE(!p.defs.empty());
        TypingContext empty;
        REQUIRE_NOTHROW(check_term(empty, p.defs[0].value, parse_type_string(x.type, p.sigs),
                                   p.sigs, p.gates));
    }
    report(7, "clone rejected with LinearityViolation; cointoss, qwalk, grover accepted");
}

TEST_CASE("8: refinement certification of the cointoss bound") {
    SigTable sigs = SigTable::builtins();
    GateTable gates = GateTable::builtins();
    RefEnv env;
    env.sigs = &sigs;
    env.gates = &gates;
    env.cs = instance_rplus();
    OracleParams params;
    params.samples = 1000;
    params.seed = 20240101;

    RefContext xq;
    xq = xq.extend("X", RefType::top(CSType::basic("Q")));
    auto dag = [&](const std::string& arg, const std::string& at) {
        return parse_formula_string(
            "forall Z : Rinf. Z <= 1 + p1(X) * (" + arg + ") => Z <= " + at, sigs, gates);
    };
    Verdict good = validity(xq, dag("1 + 2 * p1(H(collapse1(X)))", "1 + 2 * p1(X)"), env, params);
    REQUIRE(good.kind == Verdict::Kind::NotFalsified);
    REQUIRE(good.samples >= 1000);

    CSProgram ecost = parse_cs_program(slurp(corpus_path("ecost.csl")));
    RtySpec spec = parse_rty(slurp(corpus_path("ecost.rty")), sigs, gates);
    RefContext empty;
    Verdict typing = check_refined(empty, ecost.main, spec.type, env, params);
    REQUIRE(typing.kind == Verdict::Kind::NotFalsified);
    REQUIRE(typing.samples >= 1000);

    RtySpec bad = parse_rty(slurp(corpus_path("ecost_bad.rty")), sigs, gates);
    Verdict falsified = check_refined(empty, ecost.main, bad.type, env, params);
    REQUIRE(falsified.kind == Verdict::Kind::Falsified);
    REQUIRE(falsified.witness != nullptr);
    REQUIRE(replay_witness(*falsified.witness, env, params));
    report(8, "1 + 2 p1 not falsified over 1000 samples; 1 + p1 falsified with a replayable "
              "witness");
}

TEST_CASE("9: PARS invariants across the corpus") {
    for (const auto& e : corpus()) {
        if (!e.expect_error.empty()) continue;
        Program p = load_corpus(e.file);
        TypedProgram tp = check_program(p);

        // NF mass monotone in depth
        double prev_mass = -1.0;
        for (int d = 1; d <= 9; d += 2) {
            double m = nf_dist(tp.main, d, p.gates).mass();
            REQUIRE(m >= prev_mass - 1e-12);
            prev_mass = m;
        }

        // per-step mass conservation and determinism of step
        WeightedDist dist;
        dist.entries.push_back({tp.main, 1.0});
        for (int i = 0; i < 20; ++i) {
            double before = dist.mass();
            ReductionStep st = lift_step(dist, p.gates);
            REQUIRE(std::abs(st.dist.mass() + st.pruned - before) < 1e-12);
            for (const auto& en : dist.entries) {
                auto a = step(en.term, p.gates);
                auto b = step(en.term, p.gates);
                REQUIRE(a.has_value() == b.has_value());
                if (a) {
                    REQUIRE(a->cost == b->cost);
                    REQUIRE(a->dist.entries.size() == b->dist.entries.size());
                    for (size_t j = 0; j < a->dist.entries.size(); ++j)
                        REQUIRE(alpha_eq(a->dist.entries[j].term, b->dist.entries[j].term));
                }
            }
            dist = st.dist;
        }
    }
    report(9, "NF monotonicity, 1e-12 mass conservation and step determinism on every program");
}

TEST_CASE("10: qwalk instantiated with H agrees with cointoss") {
    Program pq = load_corpus("qwalk.aql");
    Program pc = load_corpus("cointoss.aql");
    TypePtr q = parse_type_string("Q", pq.sigs);

    TypingContext ctx;
    ctx.affine["y"] = q;
    TermPtr hfun = parse_term_string("(lam x. H x : Q -o Q)", pq.sigs, pq.gates);
    TermPtr qwalk_app =
        check_term(ctx, mk(App{mk(App{pq.defs[0].value, mk(Var{"y"})}), hfun}), q, pq.sigs,
                   pq.gates);
    TypingContext ctx2;
    ctx2.affine["y"] = q;
    TermPtr ct_app = check_term(ctx2, mk(App{pc.defs[0].value, mk(Var{"y"})}), q, pc.sigs,
                                pc.gates);

    std::map<std::string, TypePtr> free_types{{"y", q}};
    QetResult tq = qet_translate_term(qwalk_app, zero_continuation(CSType::basic("Q")), pq.sigs,
                                      pq.gates, free_types);
    QetResult tc = qet_translate_term(ct_app, zero_continuation(CSType::basic("Q")), pc.sigs,
                                      pc.gates, free_types);
    CSContext thq{{tq.rename.at("y"), CSType::basic("Q")}};
    CSContext thc{{tc.rename.at("y"), CSType::basic("Q")}};
    CSTermPtr eq = cs_check(thq, tq.term, CSType::k(), pq.sigs, pq.gates, KMode::RPlus);
    CSTermPtr ec = cs_check(thc, tc.term, CSType::k(), pc.sigs, pc.gates, KMode::RPlus);

    std::mt19937_64 rng(4242);
    for (int i = 0; i < 50; ++i) {
        QState psi = random_state(rng, 1 + int(rng() % 3));
        Valuation rq{{tq.rename.at("y"), Denotation{QuantumVal{psi}}}};
        Valuation rc{{tc.rename.at("y"), Denotation{QuantumVal{psi}}}};
        double vq =
            denote_closed_cost(eq, rq, make_ctx(instance_rplus(), pq), 64, 1e-9).value.v;
        double vc =
            denote_closed_cost(ec, rc, make_ctx(instance_rplus(), pc), 64, 1e-9).value.v;
        REQUIRE(std::abs(vq - vc) < 1e-6);
    }
    report(10, "qet[qwalk y (lam x. H x)] and qet[cointoss y] agree within 1e-6 on 50 states");
}
