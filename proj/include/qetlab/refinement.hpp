#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qetlab/cs_typecheck.hpp"
#include "qetlab/denote.hpp"

namespace qetlab {

// ---------------------------------------------------------------------------
// Expressions inside refinement formulae: CS values extended with the
// interpreted symbols p_i, arithmetic, cost addition and barycentric sums.
// ---------------------------------------------------------------------------

struct RExpr;
using RExprPtr = std::shared_ptr<const RExpr>;

struct RExpr {
    enum class Kind {
        Var,      // name
        Real,     // real
        Add,      // args[0] + args[1]
        Mul,      // args[0] * args[1]
        CAdd,     // args[0] ^+ args[1]
        Bary,     // args[0] (+p0 args[1]) args[2]
        Prob,     // p_bit(args[0])
        Gate,     // name applied to args[0]
        Collapse, // collapse_bit(args[0])
        Tensor,   // tensor(args[0], args[1])
        Ket,      // ket
        Cons,     // name(args...)
        App,      // args[0] applied to args[1]
    };
    Kind kind;
    std::string name;
    double real = 0.0;
    int bit = 0;
    std::vector<RExprPtr> args;
    std::optional<QState> ket;
};

RExprPtr rx_mk(RExpr e);
RExprPtr rx_var(const std::string& name);
RExprPtr rx_real(double r);

std::string show_rexpr(const RExprPtr& e);
std::set<std::string> rexpr_free_vars(const RExprPtr& e);
RExprPtr rexpr_subst(const RExprPtr& e, const std::string& x, const RExprPtr& v);
bool rexpr_equal(const RExprPtr& a, const RExprPtr& b);

/// Embeds a CS value into the expression language (for the value-substituting
/// refinement rules). Fails on non-value terms.
RExprPtr cs_value_to_rexpr(const CSTermPtr& v);

// ---------------------------------------------------------------------------
// First-order formulae over the built-in predicates.
// ---------------------------------------------------------------------------

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
    enum class Kind { Top, Pred, Not, And, Or, Implies, Forall, Exists };
    Kind kind;
    std::string pred; // "eq" (=), "le" (<=), "sqle" (carrier order)
    std::vector<RExprPtr> args;
    std::vector<FormulaPtr> subs; // Not: 1; And/Or/Implies: 2
    std::string var;              // quantifiers
    CSTypePtr var_type;
    FormulaPtr body;
};

FormulaPtr f_top();
FormulaPtr f_pred(const std::string& pred, std::vector<RExprPtr> args);
FormulaPtr f_not(FormulaPtr a);
FormulaPtr f_and(FormulaPtr a, FormulaPtr b);
FormulaPtr f_or(FormulaPtr a, FormulaPtr b);
FormulaPtr f_implies(FormulaPtr a, FormulaPtr b);
FormulaPtr f_forall(std::string var, CSTypePtr ty, FormulaPtr body);
FormulaPtr f_exists(std::string var, CSTypePtr ty, FormulaPtr body);

std::string show_formula(const FormulaPtr& f);
std::set<std::string> formula_free_vars(const FormulaPtr& f);
FormulaPtr formula_subst(const FormulaPtr& f, const std::string& x, const RExprPtr& v);
bool formula_equal(const FormulaPtr& a, const FormulaPtr& b);

// ---------------------------------------------------------------------------
// Refinement types and contexts.
// ---------------------------------------------------------------------------

struct RefType;
using RefTypePtr = std::shared_ptr<const RefType>;

struct RefType {
    enum class Kind { Base, DepArrow, Forall };
    Kind kind;
    // Base {binder : base | refinement}
    CSTypePtr base;
    std::string binder;
    FormulaPtr refinement;
    // DepArrow (var : dom) => cod; Forall forall var : dom. cod
    std::string var;
    RefTypePtr dom, cod;

    static RefTypePtr mk_base(CSTypePtr base, std::string binder, FormulaPtr refinement);
    static RefTypePtr mk_arrow(std::string var, RefTypePtr dom, RefTypePtr cod);
    static RefTypePtr mk_forall(std::string var, RefTypePtr dom, RefTypePtr cod);
    /// Unrefined base type {Z : I | T}.
    static RefTypePtr top(CSTypePtr base);
};

std::string show_reftype(const RefTypePtr& t);
RefTypePtr reftype_subst(const RefTypePtr& t, const std::string& x, const RExprPtr& v);
bool reftype_equal(const RefTypePtr& a, const RefTypePtr& b);

/// |tau|: drops refinements; forall-quantifiers erase to their body.
CSTypePtr skeleton(const RefTypePtr& t);

struct RefBinding {
    std::string name;
    RefTypePtr type;
};
struct RefFact {
    FormulaPtr formula;
};
using RefEntry = std::variant<RefBinding, RefFact>;

struct RefContext {
    std::vector<RefEntry> entries;

    RefContext extend(const std::string& name, RefTypePtr type) const;
    RefContext assume(FormulaPtr fact) const;
    const RefTypePtr* lookup(const std::string& name) const;
};

// ---------------------------------------------------------------------------
// Verdicts and oracle parameters.
// ---------------------------------------------------------------------------

struct Witness {
    std::uint64_t seed = 0;
    int sample_index = 0;
    Valuation valuation;                           // replayable assignment
    std::map<std::string, std::string> rendered;   // human-readable
    FormulaPtr violated;                           // the formula that failed
};

struct Verdict {
    enum class Kind { VerifiedSyntactic, NotFalsified, Falsified };
    Kind kind = Kind::VerifiedSyntactic;
    int samples = 0;
    std::shared_ptr<Witness> witness;
    std::vector<std::string> trace;

    bool rejected() const { return kind == Kind::Falsified; }
};

Verdict meet(Verdict a, const Verdict& b);

/// User-declared candidate function (from .rty `fun` declarations): the only
/// sample pool for function-typed variables.
struct FunDecl {
    std::string name;
    std::vector<std::pair<std::string, CSTypePtr>> params;
    CSTypePtr result;
    RExprPtr body;
};

struct OracleParams {
    int samples = 1000;
    std::uint64_t seed = 20240101;
    std::vector<int> qubit_counts = {1, 2, 3};
    std::vector<FunDecl> functions;
    int quantifier_pool = 12;   // generic candidates per quantified variable
    int probes = 8;             // argument probes for function membership
};

/// Everything the oracle needs to evaluate expressions.
struct RefEnv {
    const SigTable* sigs = nullptr;
    const GateTable* gates = nullptr;
    CostStructurePtr cs; // active cost structure (carrier of K)
};

// ---------------------------------------------------------------------------
// Operations.
// ---------------------------------------------------------------------------

/// Simple type of an expression under a CS context (declared functions are
/// part of the context). Throws IllTypedFormula / UnboundVariable.
CSTypePtr type_rexpr(const CSContext& theta, const RExprPtr& e, const RefEnv& env);
/// Checks that a formula is simply typed (every predicate over matching
/// carriers).
void type_formula(const CSContext& theta, const FormulaPtr& f, const RefEnv& env);

/// Well-formedness of a type under a context (Fig. 6 rules).
void wf(const RefContext& ctx, const RefTypePtr& t, const RefEnv& env,
        const OracleParams& params);

/// Three-valued validity of ctx |= phi: syntactic schemata are verified,
/// otherwise sampled (Falsified carries a replayable witness).
Verdict validity(const RefContext& ctx, const FormulaPtr& phi, const RefEnv& env,
                 const OracleParams& params);

/// Subtyping (rules re/tr/ba/ar); (ba) discharged through `validity`.
/// Throws SkeletonMismatch when the shapes differ.
Verdict subtype(const RefContext& ctx, const RefTypePtr& a, const RefTypePtr& b,
                const RefEnv& env, const OracleParams& params);

struct AdmissibleResult {
    bool ok;
    std::string reason;
};

/// Def. 5.1 by the syntactic sufficient criterion: base refinements of shape
/// Z <= e (or the carrier order) with Z not free in e, recursing through
/// arrows and quantifiers.
AdmissibleResult admissible(const RefContext& ctx, const RefTypePtr& t);

/// Syntax-directed refinement checking (Fig. 6 typing rules); subsumption at
/// application and rec boundaries. NotAdmissible is a hard error at rec.
Verdict check_refined(const RefContext& ctx, const CSTermPtr& term, const RefTypePtr& type,
                      const RefEnv& env, const OracleParams& params);

/// Sampled membership [[T]] in [[tau]]: the testable projection of type
/// soundness. Functions are probed on sampled arguments.
bool member_of(const Denotation& d, const RefTypePtr& t, const Valuation& rho, const RefEnv& env,
               const OracleParams& params, std::uint64_t seed);

/// Evaluates an expression / formula under a valuation (bounded quantifiers).
Denotation eval_rexpr(const RExprPtr& e, const Valuation& rho, const RefEnv& env);
bool eval_formula(const FormulaPtr& f, const Valuation& rho, const RefEnv& env,
                  const OracleParams& params, std::uint64_t seed);

/// Replays a witness: true when the recorded formula indeed fails under the
/// recorded valuation.
bool replay_witness(const Witness& w, const RefEnv& env, const OracleParams& params);

} // namespace qetlab
