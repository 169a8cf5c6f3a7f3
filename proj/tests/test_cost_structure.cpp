#include "helpers.hpp"

using namespace qt;

namespace {

// Randomized check of the barycentric-algebra and cost-addition laws on one
// instance; exact where infinity is involved, 1e-12 otherwise.
void check_laws(const CostStructure& cs, int iters, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto elem = [&]() -> ExtReal {
        double u = unif(rng);
        if (!cs.contains(ExtReal::infinity())) return ExtReal{unif(rng)};
        if (u < 0.05) return ExtReal::infinity();
        return ExtReal{4.0 * unif(rng)};
    };
    auto cost = [&]() -> ExtReal {
        double u = unif(rng);
        if (u < 0.05) return ExtReal::infinity();
        return ExtReal{3.0 * unif(rng)};
    };
    auto eq = [&](ExtReal x, ExtReal y) {
        if (x.is_inf() || y.is_inf()) return x.is_inf() && y.is_inf();
        return std::abs(x.v - y.v) <= 1e-12;
    };
    for (int i = 0; i < iters; ++i) {
        ExtReal a = elem(), b = elem(), c = elem();
        double r = unif(rng), s = unif(rng);
        // a (+)_1 b = a
        REQUIRE(eq(cs.bary(1.0, a, b), a));
        // a (+)_r b = b (+)_{1-r} a
        REQUIRE(eq(cs.bary(r, a, b), cs.bary(1.0 - r, b, a)));
        // a (+)_r a = a
        REQUIRE(eq(cs.bary(r, a, a), a));
        // (a (+)_r b) (+)_s c = a (+)_{rs} (b (+)_{(s-rs)/(1-rs)} c), rs != 1
        if (r * s < 1.0 - 1e-9) {
            ExtReal lhs = cs.bary(s, cs.bary(r, a, b), c);
            ExtReal rhs = cs.bary(r * s, a, cs.bary((s - r * s) / (1.0 - r * s), b, c));
            REQUIRE(eq(lhs, rhs));
        }
        // 0 ^+ c = c
        REQUIRE(eq(cs.cadd(ExtReal{0.0}, a), a));
        // x ^+ (y ^+ c) = (x + y) ^+ c
        ExtReal x = cost(), y = cost();
        REQUIRE(eq(cs.cadd(x, cs.cadd(y, a)), cs.cadd(x + y, a)));
        // (x ^+ a) (+)_r (y ^+ b) = (x (+)_r y) ^+ (a (+)_r b)
        if (cs.contains(cs.cadd(x, a)) && cs.contains(cs.cadd(y, b))) {
            ExtReal lhs = cs.bary(r, cs.cadd(x, a), cs.cadd(y, b));
            ExtReal rplus_mix{r * x.v + (1 - r) * y.v};
            if (x.is_inf() || y.is_inf())
                rplus_mix = (r > 0 && x.is_inf()) || (r < 1 && y.is_inf())
                                ? ExtReal::infinity()
                                : (r == 0 ? y : x);
            ExtReal rhs = cs.cadd(rplus_mix, cs.bary(r, a, b));
            REQUIRE(eq(lhs, rhs));
        }
        // bottom is least
        REQUIRE(cs.leq(cs.bottom(), a));
    }
}

} // namespace

TEST_CASE("instance examples") {
    auto rplus = instance_rplus();
    CHECK(rplus->bary(0.5, ExtReal{2}, ExtReal{4}).v == doctest::Approx(3.0));
    CHECK(rplus->cadd(ExtReal{5}, ExtReal::infinity()).is_inf());

    auto unit = instance_unit_forgetful();
    CHECK(unit->cadd(ExtReal{0.3}, ExtReal{0.9}).v == doctest::Approx(0.9));
}

TEST_CASE("algebra laws hold on both instances and the forgetful wrapper") {
    check_laws(*instance_rplus(), 2000, 5);
    check_laws(*instance_unit_forgetful(), 2000, 6);
    check_laws(*forgetful(kegelspitze_rplus()), 2000, 7);
}

TEST_CASE("scalar multiplication endpoints") {
    auto rplus = instance_rplus();
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unif(0.0, 5.0);
    for (int i = 0; i < 100; ++i) {
        ExtReal a{unif(rng)};
        CHECK(rplus->scalar(0.0, a).v == rplus->bottom().v);
        CHECK(rplus->scalar(1.0, a).v == doctest::Approx(a.v));
    }
    CHECK(rplus->scalar(0.0, ExtReal::infinity()).v == 0.0); // 0 * inf = 0
}

TEST_CASE("bary and cadd are monotone in each argument") {
    auto rplus = instance_rplus();
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        double r = unif(rng);
        ExtReal a{4 * unif(rng)}, d{4 * unif(rng)}, c{3 * unif(rng)};
        ExtReal b{a.v + 2 * unif(rng)}; // a <= b
        CHECK(rplus->leq(rplus->bary(r, a, c), rplus->bary(r, b, c)));
        CHECK(rplus->leq(rplus->bary(r, c, a), rplus->bary(r, c, b)));
        CHECK(rplus->leq(rplus->cadd(c, a), rplus->cadd(c, b)));
        (void)d;
    }
}

TEST_CASE("convex sums") {
    auto rplus = instance_rplus();
    CHECK(convex_sum(*rplus, {}).v == 0.0);                       // empty is bottom
    CHECK(convex_sum(*rplus, {{1.0, ExtReal{7}}}).v == doctest::Approx(7.0));
    // Recursive definition unrolled by hand:
    //   sum = 2 (+)_{1/4} ((1/2)/(3/4) . 1) = 1/4*2 + 3/4*(2/3) = 1
    CHECK(convex_sum(*rplus, {{0.5, ExtReal{1}}, {0.25, ExtReal{2}}}).v ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(convex_sum(*rplus, {{0.7, ExtReal{1}}, {0.5, ExtReal{1}}}), Error);
}

TEST_CASE("convex sum respects the probabilistic mean on random inputs") {
    auto rplus = instance_rplus();
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int it = 0; it < 200; ++it) {
        int n = 1 + int(rng() % 4);
        std::vector<std::pair<double, ExtReal>> pairs;
        double mass = 0;
        double mean = 0;
        for (int i = 0; i < n; ++i) {
            double p = unif(rng) * (1.0 - mass) * 0.8;
            double v = 5 * unif(rng);
            mass += p;
            mean += p * v;
            pairs.push_back({p, ExtReal{v}});
        }
        CHECK(convex_sum(*rplus, pairs).v == doctest::Approx(mean).epsilon(1e-10));
    }
}

TEST_CASE("kleene lub on chains") {
    auto rplus = instance_rplus();
    // constant chain converges immediately
    LubResult r = kleene_lub(*rplus, [](int) { return ExtReal{2.5}; }, 1e-9, 100);
    CHECK(r.converged);
    CHECK(r.value.v == doctest::Approx(2.5));

    // cointoss Kleene iterates: c_0 = 0, c_{k+1}(x) = 1 + p1(x) * c_k(H M1 x)
    // evaluated at the section 1.4 state; hand-unrolled independent recurrence.
    const QState& psi = psi_paper();
    GateTable gates = GateTable::builtins();
    auto iterate = [&](int k) {
        std::function<double(const QState&, int)> c = [&](const QState& x, int depth) -> double {
            if (depth == 0) return 0.0;
            QState next = apply_unitary(gates.get("H"), post_measure(1, x));
            return 1.0 + measure_prob(1, x) * c(next, depth - 1);
        };
        return ExtReal{c(psi, k)};
    };
    LubResult ct = kleene_lub(*rplus, iterate, 1e-7, 64);
    CHECK(ct.converged);
    CHECK(ct.value.v == doctest::Approx(1.5).epsilon(1e-6));

    // divergent chain n -> n is flagged unconverged
    LubResult div = kleene_lub(*rplus, [](int n) { return ExtReal{double(n)}; }, 1e-9, 50);
    CHECK_FALSE(div.converged);
    CHECK(div.value.v == doctest::Approx(50.0));

    // a decreasing generator violates the chain precondition
    CHECK_THROWS_AS(
        kleene_lub(*rplus, [](int n) { return ExtReal{double(100 - n)}; }, 1e-9, 10), Error);
}
