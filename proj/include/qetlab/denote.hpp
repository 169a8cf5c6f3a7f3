#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "qetlab/cost_structure.hpp"
#include "qetlab/cs_ast.hpp"

namespace qetlab {

// ---------------------------------------------------------------------------
// Semantic values of the Fig. 7 interpretation.
// ---------------------------------------------------------------------------

struct Denotation;

struct BaseVal {
    std::string cons;
    std::vector<Denotation> args;
};
struct QuantumVal {
    QState state;
};
struct RealVal {
    ExtReal value;
};
struct CostVal {
    ExtReal value; // element of the active cost structure's carrier
};
struct FuncVal {
    std::function<Denotation(const Denotation&)> apply;
};

struct Denotation {
    std::variant<BaseVal, QuantumVal, RealVal, CostVal, FuncVal> v;
};

using Valuation = std::map<std::string, Denotation>;

/// Numeric payload of a Real/Cost denotation; errors on other tags.
ExtReal den_number(const Denotation& d);
bool is_func(const Denotation& d);
Denotation den_apply(const Denotation& fun, const Denotation& arg);

/// Structural comparison at first-order tags (functions are not comparable);
/// numeric components compared within `tol`.
bool den_equal(const Denotation& a, const Denotation& b, double tol = 1e-9);

struct DenoteCtx {
    CostStructurePtr cs;
    const GateTable* gates = nullptr;
    const SigTable* sigs = nullptr;
    int budget = 64; // letrec unrolling depth
    std::shared_ptr<bool> budget_exhausted = std::make_shared<bool>(false);
};

/// Fig. 7 evaluation. Letrec denotes the Kleene iterate f^budget(bottom),
/// unrolled on demand; past the budget the bottom of the functional type is
/// produced and `budget_exhausted` is set (the result is an
/// under-approximation of the least fixed point).
Denotation denote(const CSTermPtr& term, const Valuation& rho, const DenoteCtx& ctx);

struct ClosedCostResult {
    ExtReal value{0.0};
    bool converged = false;
    int budget_used = 0;
    bool exhausted = false; // the final evaluation still hit the budget
};

/// Iterative deepening on the unrolling budget for a term of cost type
/// (closed under `rho`): stops when an evaluation needs no budget bottom
/// (exact), or when successive budgets agree within `tolerance`; otherwise
/// returns the cap iterate unconverged (a lower bound w.r.t. the carrier
/// order).
ClosedCostResult denote_closed_cost(const CSTermPtr& term, const Valuation& rho,
                                    const DenoteCtx& base, int budget_cap, double tolerance);

/// Bottom element of a (functional) CS type under the given structure.
Denotation bottom_denotation(const CSType& type, const DenoteCtx& ctx);

} // namespace qetlab
