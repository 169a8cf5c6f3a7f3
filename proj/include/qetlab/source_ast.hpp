#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "qetlab/linalg.hpp"

namespace qetlab {

// ---------------------------------------------------------------------------
// Types of the abstract quantum language: basic types, linear arrow -o and
// exponential arrow => (whose domain must be duplicable).
// ---------------------------------------------------------------------------

struct SourceType;
using TypePtr = std::shared_ptr<const SourceType>;

struct SourceType {
    enum class Kind { Basic, LinArrow, ExpArrow };
    Kind kind;
    std::string name; // Basic
    bool classical = false;
    TypePtr from, to; // arrows

    static TypePtr basic(std::string name, bool classical);
    static TypePtr lin(TypePtr from, TypePtr to);
    static TypePtr exp(TypePtr from, TypePtr to);
};

/// Duplicable types: classical basics and both arrows.
bool duplicable(const SourceType& t);
bool type_equal(const SourceType& a, const SourceType& b);
std::string show_type(const SourceType& t);

// ---------------------------------------------------------------------------
// Terms (Fig. 2 shapes). Case is an arm list plus optional default binder;
// the one-arm-plus-default form is the special case.
// ---------------------------------------------------------------------------

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Var {
    std::string name;
};
struct Lam {
    std::string param;
    TermPtr body;
    TypePtr annotation; // whole arrow type; may be null
};
struct App {
    TermPtr fun, arg;
};
struct KetT {
    QState state;
};
struct GateApp {
    std::string gate;
    TermPtr arg;
};
struct Meas {
    TermPtr arg;
};
struct TensorT {
    TermPtr lhs, rhs;
};
struct ConsApp {
    std::string cons;
    std::vector<TermPtr> classical_args;
    std::vector<TermPtr> quantum_args;
};
struct CaseArm {
    std::string cons;
    std::vector<std::string> classical_binders;
    std::vector<std::string> quantum_binders;
    TermPtr body;
};
struct CaseOf {
    TermPtr scrutinee;
    std::vector<CaseArm> arms;
    std::string default_binder; // empty when absent
    TermPtr default_body;       // null when absent
};
struct Letrec {
    std::string fun;
    std::string param;
    TermPtr body;
    TypePtr annotation; // duplicable type of the letrec; may be null
};
struct TickT {
    TermPtr arg;
};

using TermNode =
    std::variant<Var, Lam, App, KetT, GateApp, Meas, TensorT, ConsApp, CaseOf, Letrec, TickT>;

struct Term {
    TermNode node;
    SourcePos pos;
};

TermPtr mk(TermNode node, SourcePos pos = {});

template <class T>
const T* as(const TermPtr& t) {
    return std::get_if<T>(&t->node);
}

/// Values: variables, lambdas, kets, constructor applications of values, letrec.
bool is_value(const TermPtr& t);

std::set<std::string> free_vars(const TermPtr& t);

/// Capture-avoiding substitution t[v/x].
TermPtr subst(const TermPtr& t, const std::string& x, const TermPtr& v);

/// Alpha-equivalence; ket payloads compared amplitude-wise at `ket_tol`.
bool alpha_eq(const TermPtr& a, const TermPtr& b, double ket_tol = 1e-12);

/// Canonical concrete syntax; reparses to an alpha-equivalent term.
std::string pretty(const TermPtr& t);

// ---------------------------------------------------------------------------
// Constructor signatures (section 3.3 constraints) and declarations.
// ---------------------------------------------------------------------------

struct ConsSignature {
    std::string name;
    std::vector<std::string> classical_args; // classical basic type names
    std::vector<std::string> quantum_args;   // quantum basic type names
    std::string result;                      // basic type name
};

class SigTable {
public:
    /// Q (quantum, no constructors) and Out with inj0, inj1 :: ;Q -> Out.
    static SigTable builtins();

    /// Declares a basic type; classical types may not receive quantum-arg
    /// constructors later.
    void declare_type(const std::string& name, bool classical);
    void declare_cons(const ConsSignature& sig);

    bool has_type(const std::string& name) const;
    bool is_classical(const std::string& name) const;
    bool has_cons(const std::string& name) const;
    const ConsSignature& cons(const std::string& name) const;
    /// All constructor names of a basic type, in declaration order.
    const std::vector<std::string>& constructors(const std::string& type_name) const;

private:
    struct TypeInfo {
        bool classical;
        std::vector<std::string> constructors;
    };
    std::map<std::string, TypeInfo> types_;
    std::map<std::string, ConsSignature> cons_;
};

/// A named definition from the program preamble; `value` is a closed value
/// with the annotation already folded onto its lam/letrec node.
struct Def {
    std::string name;
    TypePtr annotation;
    TermPtr value;
};

/// A parsed program: signature/gate environments, preamble definitions and
/// the main term (definitions inlined), plus its annotation when given.
struct Program {
    SigTable sigs = SigTable::builtins();
    GateTable gates = GateTable::builtins();
    std::vector<Def> defs;
    TermPtr main;
    TypePtr main_annotation; // may be null
};

/// Picks a name not in `used`, starting from `base`.
std::string fresh_name(const std::string& base, const std::set<std::string>& used);

} // namespace qetlab
