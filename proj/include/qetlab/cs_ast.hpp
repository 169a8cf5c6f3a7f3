#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "qetlab/linalg.hpp"
#include "qetlab/source_ast.hpp"

namespace qetlab {

// ---------------------------------------------------------------------------
// CS types: basic types, Rinf, the cost type K, and the (non-linear) arrow.
// ---------------------------------------------------------------------------

struct CSType;
using CSTypePtr = std::shared_ptr<const CSType>;

struct CSType {
    enum class Kind { Basic, RInf, K, Arrow };
    Kind kind;
    std::string name; // Basic
    CSTypePtr from, to;

    static CSTypePtr basic(std::string name);
    static CSTypePtr rinf();
    static CSTypePtr k();
    static CSTypePtr arrow(CSTypePtr from, CSTypePtr to);
};

bool cs_type_equal(const CSType& a, const CSType& b);
std::string show_cs_type(const CSType& t);

/// Functional CS types: K, or S => F.
bool is_functional_cs_type(const CSType& t);

// ---------------------------------------------------------------------------
// CS terms (Fig. 4 shapes): redexes only in head position, operands are values.
// ---------------------------------------------------------------------------

struct CSTerm;
using CSTermPtr = std::shared_ptr<const CSTerm>;

struct CSVar {
    std::string name;
};
struct CSLam {
    std::string param;
    CSTermPtr body;
    CSTypePtr param_ann; // may be null
};
struct CSApp {
    CSTermPtr fun, arg; // arg must be a value
};
struct CSKet {
    QState state;
};
struct CSGate {
    std::string gate;
    CSTermPtr arg;
};
struct CSTensor {
    CSTermPtr lhs, rhs;
};
struct CSCollapse {
    int outcome; // 0 or 1
    CSTermPtr arg;
};
struct CSCons {
    std::string cons;
    std::vector<CSTermPtr> args;
};
struct CSCaseArm {
    std::string cons;
    std::vector<std::string> binders;
    CSTermPtr body;
};
struct CSCase {
    CSTermPtr scrutinee;
    std::vector<CSCaseArm> arms;
    std::string default_binder;
    CSTermPtr default_body; // null when absent
};
struct CSLetrec {
    std::string fun;
    std::string param;
    CSTermPtr body;
    CSTypePtr annotation; // functional CS type; may be null
};
struct CSReal {
    double value;
};
struct CSCAdd {
    CSTermPtr cost, rest; // cost ^+ rest
};
struct CSBary {
    CSTermPtr left;
    CSTermPtr prob_state; // quantum value V; weight is p0(V)
    CSTermPtr right;
};

using CSTermNode = std::variant<CSVar, CSLam, CSApp, CSKet, CSGate, CSTensor, CSCollapse, CSCons,
                                CSCase, CSLetrec, CSReal, CSCAdd, CSBary>;

struct CSTerm {
    CSTermNode node;
    SourcePos pos;
};

CSTermPtr cs_mk(CSTermNode node, SourcePos pos = {});

template <class T>
const T* cs_as(const CSTermPtr& t) {
    return std::get_if<T>(&t->node);
}

/// Fig. 4 values: variables, lambdas, kets, gate/tensor/collapse/constructor
/// applications of values, letrec, real constants.
bool is_cs_value(const CSTermPtr& t);

std::set<std::string> cs_free_vars(const CSTermPtr& t);
CSTermPtr cs_subst(const CSTermPtr& t, const std::string& x, const CSTermPtr& v);
bool cs_alpha_eq(const CSTermPtr& a, const CSTermPtr& b, double ket_tol = 1e-12);
std::string cs_pretty(const CSTermPtr& t);

/// A parsed .csl file: shared signature/gate declarations plus a main term.
struct CSProgram {
    SigTable sigs = SigTable::builtins();
    GateTable gates = GateTable::builtins();
    CSTermPtr main;
    CSTypePtr main_annotation; // may be null
};

} // namespace qetlab
