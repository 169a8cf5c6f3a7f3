#pragma once

#include <map>
#include <string>

#include "qetlab/cs_ast.hpp"
#include "qetlab/source_ast.hpp"

namespace qetlab {

/// Fig. 8 type translation: basic types unchanged, both arrows map to their
/// CPS counterparts S => (S' => K) => K.
CSTypePtr qet_translate_type(const TypePtr& t);

struct QetResult {
    CSTermPtr term;
    std::map<std::string, std::string> rename; // source variable -> target variable
};

/// Fig. 8 value translation. `value` must be elaborated (annotated binders);
/// types of free variables are supplied for open values.
QetResult qet_translate_value(const TermPtr& value, const SigTable& sigs, const GateTable& gates,
                              const std::map<std::string, TypePtr>& free_var_types = {});

/// Fig. 8 term translation against a continuation (a CS value of functional
/// type). The output is the raw CPS term; administrative redexes are kept.
QetResult qet_translate_term(const TermPtr& term, const CSTermPtr& continuation,
                             const SigTable& sigs, const GateTable& gates,
                             const std::map<std::string, TypePtr>& free_var_types = {});

/// The zero continuation lam (X : domain). real 0.
CSTermPtr zero_continuation(const CSTypePtr& domain);

} // namespace qetlab
