#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "qetlab/error.hpp"

namespace qetlab {

/// Non-negative real extended with infinity. Scalar multiplication follows
/// the convention 0 * inf = 0 (continuity of scaling at bottom).
struct ExtReal {
    double v = 0.0;

    static ExtReal infinity() { return {std::numeric_limits<double>::infinity()}; }
    bool is_inf() const { return std::isinf(v); }

    friend ExtReal operator+(ExtReal a, ExtReal b) { return {a.v + b.v}; }
    friend bool operator==(ExtReal a, ExtReal b) { return a.v == b.v; }
    friend bool operator<=(ExtReal a, ExtReal b) { return a.v <= b.v; }
};

/// r * a with 0 * inf = 0.
inline ExtReal ext_scale(double r, ExtReal a) {
    if (r == 0.0) return {0.0};
    return {r * a.v};
}

/// Distance used for convergence checks; inf/inf counts as 0, finite/inf as inf.
inline double ext_dist(ExtReal a, ExtReal b) {
    if (a.is_inf() && b.is_inf()) return 0.0;
    if (a.is_inf() || b.is_inf()) return std::numeric_limits<double>::infinity();
    return std::abs(a.v - b.v);
}

/// Pointed barycentric algebra over an omega-cpo; carrier elements are ExtReal.
class Kegelspitze {
public:
    virtual ~Kegelspitze() = default;

    virtual std::string name() const = 0;
    virtual ExtReal bottom() const { return {0.0}; }
    /// a (+)_r b, r in [0,1].
    virtual ExtReal bary(double r, ExtReal a, ExtReal b) const {
        return ext_scale(r, a) + ext_scale(1.0 - r, b);
    }
    /// The order on the carrier (vertical order on R^{+inf}: <= with inf on top).
    virtual bool leq(ExtReal a, ExtReal b) const { return a.v <= b.v || b.is_inf(); }
    /// Carrier membership check (e.g. [0,1] for the unit interval).
    virtual bool contains(ExtReal a) const { return a.v >= 0.0; }

    /// Derived scalar multiplication r . a = a (+)_r bottom.
    ExtReal scalar(double r, ExtReal a) const { return bary(r, a, bottom()); }
};

/// A Kegelspitze with a cost-addition operator c ^+ a.
class CostStructure : public Kegelspitze {
public:
    virtual ExtReal cadd(ExtReal cost, ExtReal a) const = 0;
};

using CostStructurePtr = std::shared_ptr<const CostStructure>;
using KegelspitzePtr = std::shared_ptr<const Kegelspitze>;

/// (R^{+inf}, +): standard barycentric mean, cost addition is real addition.
CostStructurePtr instance_rplus();

/// ([0,1], forgetful): unit interval with a ^+ b = b.
CostStructurePtr instance_unit_forgetful();

/// [0,1] as a plain Kegelspitze (used to build forgetful structures).
KegelspitzePtr kegelspitze_unit();
/// R^{+inf} as a plain Kegelspitze.
KegelspitzePtr kegelspitze_rplus();

/// Wraps any Kegelspitze into a cost structure with forgetful addition.
CostStructurePtr forgetful(KegelspitzePtr k);

/// Convex sum sum_i r_i a_i in the structure, sum r_i <= 1. Empty list is bottom.
/// Throws ProbabilityMassExceeded when the mass exceeds 1 + 1e-12.
ExtReal convex_sum(const Kegelspitze& ks, const std::vector<std::pair<double, ExtReal>>& pairs);

struct LubResult {
    ExtReal value;
    bool converged = false;
    int iterations = 0;
};

/// Approximates the lub of the chain produced by `next(n)` (n = 0, 1, ...):
/// stops when successive iterates are closer than `tolerance`, or returns the
/// max_iters iterate flagged unconverged. Iterates above 1e15 are reported as
/// infinity (still unconverged). Throws ChainViolation when a sampled pair of
/// consecutive iterates is not ordered.
LubResult kleene_lub(const Kegelspitze& ks, const std::function<ExtReal(int)>& next,
                     double tolerance, int max_iters);

} // namespace qetlab
