#pragma once

#include <map>
#include <string>

#include "qetlab/cs_ast.hpp"

namespace qetlab {

/// How the abstract cost type K relates to Rinf during checking:
/// - Abstract/Unit: real-typed terms coerce into K (literals live in the
///   carrier; validated at evaluation time), K never flows back to Rinf.
/// - RPlus: K is instantiated at Rinf, the two are interchangeable.
enum class KMode { Abstract, RPlus, Unit };

using CSContext = std::map<std::string, CSTypePtr>;

/// Structural compatibility: `from` usable where `to` is expected
/// (contravariant on arrow domains).
bool cs_compatible(const CSType& from, const CSType& to, KMode mode);

/// Checks Theta |-cs term : expected (Fig. 5 rules), returning the elaborated
/// term with every lam/letrec annotated. Errors: NotFunctionalType at letrec,
/// OperandNotValue at applications, and the usual mismatches.
CSTermPtr cs_check(const CSContext& theta, const CSTermPtr& term, const CSTypePtr& expected,
                   const SigTable& sigs, const GateTable& gates, KMode mode = KMode::Abstract);

/// Infers where annotations allow; returns the elaborated term and its type.
std::pair<CSTermPtr, CSTypePtr> cs_infer(const CSContext& theta, const CSTermPtr& term,
                                         const SigTable& sigs, const GateTable& gates,
                                         KMode mode = KMode::Abstract);

} // namespace qetlab
