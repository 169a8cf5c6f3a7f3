#pragma once

#include <string>

#include "qetlab/refinement.hpp"

namespace qetlab {

/// A parsed .rty file: named bound-function candidates and a refinement type.
struct RtySpec {
    std::vector<FunDecl> functions;
    RefTypePtr type;
};

RtySpec parse_rty(const std::string& source, const SigTable& sigs, const GateTable& gates);

/// Expression / formula parsers for tests and tooling.
RExprPtr parse_rexpr_string(const std::string& source, const SigTable& sigs,
                            const GateTable& gates);
FormulaPtr parse_formula_string(const std::string& source, const SigTable& sigs,
                                const GateTable& gates);
RefTypePtr parse_reftype_string(const std::string& source, const SigTable& sigs,
                                const GateTable& gates);

} // namespace qetlab
