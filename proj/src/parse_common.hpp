#pragma once

#include "lexer.hpp"
#include "qetlab/source_ast.hpp"

namespace qetlab {

// Shared between the .aql, .csl and .rty parsers (defined in parser.cpp).
QState parse_ket_raw(const std::string& raw, SourcePos pos);
CMatrix parse_unitary_matrix(lex::Lexer& lx);
void parse_data_declaration(lex::Lexer& lx, SigTable& sigs, bool classical);
bool is_reserved_word(const std::string& w);

} // namespace qetlab
