#pragma once

#include <map>
#include <string>

#include "qetlab/source_ast.hpp"

namespace qetlab {

/// Dual typing context: exponential (duplicable) and affine bindings.
/// Domains must be disjoint.
struct TypingContext {
    std::map<std::string, TypePtr> exponential;
    std::map<std::string, TypePtr> affine;
};

/// Checks Gamma;Delta |- term : expected (Fig. 3 rules, affine splitting by
/// consumption threading). Returns the elaborated term: every lam/letrec node
/// carries its checked type annotation, so reducts stay re-inferable.
/// Throws Error with a machine-readable kind and the failing rule name.
TermPtr check_term(const TypingContext& ctx, const TermPtr& term, const TypePtr& expected,
                   const SigTable& sigs, const GateTable& gates);

/// Infers a type where the syntax allows it (annotations mandatory at letrec
/// and unapplied lambdas). Returns the elaborated term and its type.
std::pair<TermPtr, TypePtr> infer_term(const TypingContext& ctx, const TermPtr& term,
                                       const SigTable& sigs, const GateTable& gates);

struct TypedProgram {
    Program program;   // as parsed
    TermPtr main;      // elaborated
    TypePtr main_type;
};

/// Validates the parsed declarations, then checks the main term against the
/// program annotation (or `annotation_override` when supplied).
TypedProgram check_program(const Program& program, TypePtr annotation_override = nullptr);

/// Linearity-blind type inference over elaborated terms (one flat variable
/// environment). Used by passes that run after the linear checker.
TypePtr simple_infer(const std::map<std::string, TypePtr>& env, const TermPtr& term,
                     const SigTable& sigs, const GateTable& gates);

} // namespace qetlab
