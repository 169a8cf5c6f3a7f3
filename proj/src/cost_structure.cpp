#include "qetlab/cost_structure.hpp"

#include <cmath>

namespace qetlab {

namespace {

class RPlusKegelspitze : public Kegelspitze {
public:
    std::string name() const override { return "rplus"; }
};

class UnitKegelspitze : public Kegelspitze {
public:
    std::string name() const override { return "unit"; }
    bool contains(ExtReal a) const override { return a.v >= 0.0 && a.v <= 1.0 + 1e-12; }
    bool leq(ExtReal a, ExtReal b) const override { return a.v <= b.v; }
};

class RPlusCostStructure : public CostStructure {
public:
    std::string name() const override { return "rplus"; }
    ExtReal cadd(ExtReal cost, ExtReal a) const override { return cost + a; }
};

class ForgetfulCostStructure : public CostStructure {
public:
    explicit ForgetfulCostStructure(KegelspitzePtr k) : inner_(std::move(k)) {}

    std::string name() const override { return inner_->name() + "-forgetful"; }
    ExtReal bottom() const override { return inner_->bottom(); }
    ExtReal bary(double r, ExtReal a, ExtReal b) const override { return inner_->bary(r, a, b); }
    bool leq(ExtReal a, ExtReal b) const override { return inner_->leq(a, b); }
    bool contains(ExtReal a) const override { return inner_->contains(a); }
    ExtReal cadd(ExtReal, ExtReal a) const override { return a; }

private:
    KegelspitzePtr inner_;
};

} // namespace

CostStructurePtr instance_rplus() { return std::make_shared<RPlusCostStructure>(); }

KegelspitzePtr kegelspitze_unit() { return std::make_shared<UnitKegelspitze>(); }

KegelspitzePtr kegelspitze_rplus() { return std::make_shared<RPlusKegelspitze>(); }

CostStructurePtr forgetful(KegelspitzePtr k) {
    return std::make_shared<ForgetfulCostStructure>(std::move(k));
}

CostStructurePtr instance_unit_forgetful() { return forgetful(kegelspitze_unit()); }

ExtReal convex_sum(const Kegelspitze& ks, const std::vector<std::pair<double, ExtReal>>& pairs) {
    double mass = 0.0;
    for (const auto& [r, _] : pairs) mass += r;
    if (mass > 1.0 + 1e-12)
        fail("ProbabilityMassExceeded",
             "convex sum mass " + std::to_string(mass) + " exceeds 1");
    // sum_{i<=n} r_i a_i = a_n (+)_{r_n} sum_{i<n} (r_i / (1 - r_n)) a_i
    std::function<ExtReal(size_t)> go = [&](size_t n) -> ExtReal {
        if (n == 0) return ks.bottom();
        const auto& [rn, an] = pairs[n - 1];
        if (rn >= 1.0) return an;
        std::vector<std::pair<double, ExtReal>> rest(pairs.begin(), pairs.begin() + (n - 1));
        for (auto& [r, _] : rest) r /= (1.0 - rn);
        ExtReal tail = convex_sum(ks, rest);
        return ks.bary(rn, an, tail);
    };
    return go(pairs.size());
}

LubResult kleene_lub(const Kegelspitze& ks, const std::function<ExtReal(int)>& next,
                     double tolerance, int max_iters) {
    ExtReal prev = next(0);
    if (max_iters < 1) return {prev, false, 1};
    for (int n = 1; n <= max_iters; ++n) {
        ExtReal cur = next(n);
        if (!ks.leq(prev, cur))
            fail("ChainViolation", "kleene_lub iterates are not a chain at step " +
                                       std::to_string(n));
        if (ext_dist(cur, prev) < tolerance) return {cur, true, n + 1};
        if (cur.v > 1e15) return {ExtReal::infinity(), false, n + 1};
        prev = cur;
    }
    return {prev, false, max_iters + 1};
}

} // namespace qetlab
