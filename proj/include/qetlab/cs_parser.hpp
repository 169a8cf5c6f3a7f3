#pragma once

#include <string>

#include "qetlab/cs_ast.hpp"

namespace qetlab {

/// Parses a .csl file: the same declaration preamble as .aql followed by
/// `main [: S] = term` (or a bare term). The second form seeds the signature
/// and gate tables (e.g. with a program's declarations) so a continuation can
/// reference them and add its own.
CSProgram parse_cs_program(const std::string& source);
CSProgram parse_cs_program(const std::string& source, const SigTable& base_sigs,
                           const GateTable& base_gates);

/// Parses a CS type like "Q => (Q => K) => K".
CSTypePtr parse_cs_type_string(const std::string& source, const SigTable& sigs);

/// Parses a single CS term; for tests and tools.
CSTermPtr parse_cs_term_string(const std::string& source, const SigTable& sigs,
                               const GateTable& gates);

} // namespace qetlab
