#include "qetlab/parser.hpp"

#include <cmath>
#include <cstdlib>

#include "lexer.hpp"
#include "parse_common.hpp"

namespace qetlab {

using lex::Lexer;
using lex::Tok;
using lex::Token;

namespace {

const std::set<std::string>& reserved_words() {
    static const std::set<std::string> words = {
        "lam",  "letrec",  "case", "of",   "data",      "qdata",     "unitary", "def",
        "main", "tick",    "meas", "tensor", "real",    "collapse0", "collapse1",
        "fun",  "type",    "forall", "exists", "Rinf",  "K",
    };
    return words;
}



// ---- complex scalars (token level, for unitary matrices) -------------------

Complex parse_complex(Lexer& lx) {
    auto part = [&](double sign) -> Complex {
        if (lx.peek().kind == Tok::Ident && lx.peek().text == "i") {
            lx.next();
            return Complex(0, sign);
        }
        double n = lx.expect_number("a number");
        if (lx.peek().kind == Tok::Ident && lx.peek().text == "i") {
            lx.next();
            return Complex(0, sign * n);
        }
        return Complex(sign * n, 0);
    };
    double sign = 1.0;
    if (lx.accept_sym("-"))
        sign = -1.0;
    else
        lx.accept_sym("+");
    Complex c = part(sign);
    if (lx.peek().is_sym("+") || lx.peek().is_sym("-")) {
        double s2 = lx.next().text == "-" ? -1.0 : 1.0;
        Complex d = part(s2);
        if (d.imag() == 0.0)
            fail("SyntaxError", "expected imaginary part after sign in complex literal", lx.pos());
        c += d;
    }
    return c;
}

// ---- ket literals (character level on the raw body) ------------------------

struct KetScanner {
    const std::string& s;
    size_t i = 0;
    SourcePos pos;

    void skip() {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    bool eat(char c) {
        skip();
        if (i < s.size() && s[i] == c) {
            ++i;
            return true;
        }
        return false;
    }
    double number() {
        skip();
        const char* begin = s.c_str() + i;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("MalformedKet", "expected a number in ket literal", pos);
        i += static_cast<size_t>(end - begin);
        return v;
    }
    Complex coefficient() {
        skip();
        if (eat('(')) {
            double re = number();
            double im = 0;
            skip();
            if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
                double sign = s[i] == '-' ? -1 : 1;
                ++i;
                im = sign * number();
                skip();
                if (!eat('i')) fail("MalformedKet", "expected 'i' in complex coefficient", pos);
            } else if (eat('i')) {
                im = re;
                re = 0;
            }
            if (!eat(')')) fail("MalformedKet", "expected ')' in ket coefficient", pos);
            return {re, im};
        }
        double re = number();
        if (eat('i')) return {0, re};
        return {re, 0};
    }
};

QState parse_ket_raw_impl(const std::string& raw, SourcePos pos) {
    KetScanner sc{raw, 0, pos};
    int n_qubits = -1;
    std::vector<std::pair<Eigen::Index, Complex>> entries;
    double sign = 1.0;
    sc.skip();
    if (sc.eat('-')) sign = -1.0;
    while (true) {
        Complex c = sc.coefficient() * sign;
        if (!sc.eat('|')) fail("MalformedKet", "expected '|' in ket literal", pos);
        std::string bits;
        sc.skip();
        while (sc.i < sc.s.size() && (sc.s[sc.i] == '0' || sc.s[sc.i] == '1'))
            bits += sc.s[sc.i++];
        if (bits.empty()) fail("MalformedKet", "expected basis bits in ket literal", pos);
        if (!sc.eat('>')) fail("MalformedKet", "expected '>' in ket literal", pos);
        if (n_qubits < 0)
            n_qubits = static_cast<int>(bits.size());
        else if (n_qubits != static_cast<int>(bits.size()))
            fail("MalformedKet", "mixed basis lengths in ket literal", pos);
        Eigen::Index idx = 0;
        for (char b : bits) idx = (idx << 1) | (b == '1');
        entries.push_back({idx, c});
        sc.skip();
        if (sc.eat('+')) {
            sign = 1.0;
        } else if (sc.eat('-')) {
            sign = -1.0;
        } else {
            break;
        }
    }
    sc.skip();
    if (sc.i != sc.s.size()) fail("MalformedKet", "trailing garbage in ket literal", pos);
    CVector amps = CVector::Zero(Eigen::Index(1) << n_qubits);
    for (const auto& [idx, c] : entries) amps[idx] += c;
    const double norm = amps.norm();
    if (std::abs(norm - 1.0) > 1e-6)
        fail("MalformedKet", "ket literal norm " + std::to_string(norm) + " is not 1", pos);
    amps /= norm;
    return QState::make(n_qubits, std::move(amps));
}

// ---- types ------------------------------------------------------------------

TypePtr parse_type(Lexer& lx, const SigTable& sigs);

TypePtr parse_btype(Lexer& lx, const SigTable& sigs) {
    if (lx.accept_sym("(")) {
        TypePtr t = parse_type(lx, sigs);
        lx.expect_sym(")");
        return t;
    }
    SourcePos pos = lx.pos();
    std::string name = lx.expect_ident("a type name");
    if (!sigs.has_type(name)) fail("UnknownType", "unknown basic type '" + name + "'", pos);
    return SourceType::basic(name, sigs.is_classical(name));
}

TypePtr parse_type(Lexer& lx, const SigTable& sigs) {
    SourcePos pos = lx.pos();
    TypePtr lhs = parse_btype(lx, sigs);
    if (lx.accept_sym("-o")) return SourceType::lin(lhs, parse_type(lx, sigs));
    if (lx.accept_sym("=>")) {
        if (!duplicable(*lhs))
            fail("NonDuplicableDomain",
                 "exponential arrow domain '" + show_type(*lhs) + "' is not duplicable", pos);
        return SourceType::exp(lhs, parse_type(lx, sigs));
    }
    return lhs;
}

// ---- terms ------------------------------------------------------------------

struct TermParser {
    Lexer& lx;
    const SigTable& sigs;
    const GateTable& gates;
    std::set<std::string> scope; // bound variables shadow gate names

    bool is_gate_here(const std::string& name) const {
        return gates.contains(name) && !sigs.has_cons(name) && !scope.count(name);
    }

    bool starts_unary() const {
        const Token& t = lx.peek();
        if (t.kind == Tok::KetLit) return true;
        if (t.is_sym("(")) return true;
        if (t.kind == Tok::Number) return true;
        if (t.kind == Tok::Ident) {
            if (t.text == "tick" || t.text == "meas" || t.text == "tensor") return true;
            return !is_reserved_word(t.text);
        }
        return false;
    }

    TermPtr term() {
        SourcePos pos = lx.pos();
        if (lx.accept_ident("lam")) {
            std::string x = binder_name();
            lx.expect_sym(".");
            ScopeGuard g(*this, {x});
            return mk(Lam{x, term(), nullptr}, pos);
        }
        if (lx.accept_ident("letrec")) return letrec(pos);
        if (lx.accept_ident("case")) return case_of(pos);
        return appchain();
    }

    struct ScopeGuard {
        TermParser& p;
        std::vector<std::string> added;
        ScopeGuard(TermParser& tp, std::vector<std::string> names) : p(tp) {
            for (auto& n : names)
                if (p.scope.insert(n).second) added.push_back(n);
        }
        ~ScopeGuard() {
            for (auto& n : added) p.scope.erase(n);
        }
    };

    std::string binder_name() {
        SourcePos pos = lx.pos();
        std::string x = lx.expect_ident("a binder name");
        if (is_reserved_word(x)) fail("SyntaxError", "'" + x + "' is reserved", pos);
        return x;
    }

    TermPtr letrec(SourcePos pos) {
        std::string f;
        TypePtr ann;
        if (lx.accept_sym("(")) {
            f = binder_name();
            lx.expect_sym(":");
            ann = parse_type(lx, sigs);
            lx.expect_sym(")");
        } else {
            f = binder_name();
        }
        std::vector<std::string> params;
        params.push_back(binder_name());
        while (lx.peek().kind == Tok::Ident && !is_reserved_word(lx.peek().text))
            params.push_back(binder_name());
        lx.expect_sym("=");
        std::vector<std::string> bound = params;
        bound.push_back(f);
        TermPtr body;
        {
            ScopeGuard g(*this, bound);
            body = term();
        }
        // Multi-parameter sugar: extra parameters become nested lambdas.
        for (size_t i = params.size(); i > 1; --i)
            body = mk(Lam{params[i - 1], body, nullptr}, pos);
        return mk(Letrec{f, params[0], body, ann}, pos);
    }

    TermPtr case_of(SourcePos pos) {
        TermPtr scrut = term();
        if (!lx.accept_ident("of")) fail("SyntaxError", "expected 'of' in case", lx.pos());
        CaseOf node{scrut, {}, "", nullptr};
        bool saw_arm = false;
        while (lx.accept_sym("|")) {
            saw_arm = true;
            SourcePos apos = lx.pos();
            std::string head = lx.expect_name("a constructor or default binder");
            if (sigs.has_cons(head)) {
                CaseArm arm{head, {}, {}, nullptr};
                if (lx.accept_sym("(")) {
                    bool in_quantum = false;
                    while (!lx.peek().is_sym(")")) {
                        if (lx.accept_sym(";")) {
                            if (in_quantum)
                                fail("SyntaxError", "duplicate ';' in pattern", lx.pos());
                            in_quantum = true;
                            continue;
                        }
                        std::string b = binder_name();
                        (in_quantum ? arm.quantum_binders : arm.classical_binders).push_back(b);
                        if (!lx.peek().is_sym(")") && !lx.peek().is_sym(";")) lx.expect_sym(",");
                    }
                    lx.expect_sym(")");
                }
                lx.expect_sym("->");
                {
                    std::vector<std::string> bound = arm.classical_binders;
                    bound.insert(bound.end(), arm.quantum_binders.begin(),
                                 arm.quantum_binders.end());
                    ScopeGuard g(*this, bound);
                    arm.body = term();
                }
                node.arms.push_back(std::move(arm));
            } else {
                if (is_reserved_word(head)) fail("SyntaxError", "'" + head + "' is reserved", apos);
                if (node.default_body)
                    fail("SyntaxError", "second default arm in case", apos);
                node.default_binder = head;
                lx.expect_sym("->");
                {
                    ScopeGuard g(*this, {head});
                    node.default_body = term();
                }
                break; // default arm is last
            }
            if (node.arms.back().body == nullptr) fail("SyntaxError", "missing arm body", apos);
        }
        if (!saw_arm) fail("SyntaxError", "case needs at least one arm", pos);
        return mk(std::move(node), pos);
    }

    TermPtr appchain() {
        TermPtr t = unary();
        while (starts_unary()) t = mk(App{t, unary()}, t->pos);
        return t;
    }

    TermPtr unary() {
        const Token& tok = lx.peek();
        if (tok.kind == Tok::Ident && tok.text == "meas") {
            SourcePos pos = lx.next().pos;
            return mk(Meas{unary()}, pos);
        }
        if (tok.kind == Tok::Ident && is_gate_here(tok.text)) {
            SourcePos pos = lx.pos();
            std::string g = lx.next().text;
            return mk(GateApp{g, unary()}, pos);
        }
        return primary();
    }

    TermPtr primary() {
        SourcePos pos = lx.pos();
        const Token& tok = lx.peek();
        if (tok.kind == Tok::KetLit) {
            QState q = parse_ket_raw(tok.text, pos);
            lx.next();
            return mk(KetT{std::move(q)}, pos);
        }
        if (tok.is_sym("(")) {
            lx.next();
            TermPtr t = term();
            if (lx.accept_sym(":")) {
                TypePtr ann = parse_type(lx, sigs);
                t = fold_annotation(t, ann, pos);
            }
            lx.expect_sym(")");
            return t;
        }
        if (tok.kind == Tok::Ident && tok.text == "tick") {
            lx.next();
            lx.expect_sym("(");
            TermPtr t = term();
            lx.expect_sym(")");
            return mk(TickT{t}, pos);
        }
        if (tok.kind == Tok::Ident && tok.text == "tensor") {
            lx.next();
            lx.expect_sym("(");
            TermPtr a = term();
            lx.expect_sym(",");
            TermPtr b = term();
            lx.expect_sym(")");
            return mk(TensorT{a, b}, pos);
        }
        if (tok.kind == Tok::Number || tok.kind == Tok::Ident) {
            const bool was_number = tok.kind == Tok::Number;
            std::string name = lx.next().text;
            if (sigs.has_cons(name)) return cons_app(name, pos);
            if (was_number)
                fail("UnknownConstructor", "'" + name + "' is not a declared constructor", pos);
            if (is_reserved_word(name)) fail("SyntaxError", "'" + name + "' is reserved", pos);
            return mk(Var{name}, pos);
        }
        fail("SyntaxError", "unexpected token '" + tok.text + "'", pos);
    }

    TermPtr cons_app(const std::string& name, SourcePos pos) {
        ConsApp node{name, {}, {}};
        if (lx.peek().is_sym("(")) {
            lx.next();
            bool in_quantum = false;
            while (!lx.peek().is_sym(")")) {
                if (lx.accept_sym(";")) {
                    if (in_quantum) fail("SyntaxError", "duplicate ';' in constructor", lx.pos());
                    in_quantum = true;
                    continue;
                }
                TermPtr a = term();
                (in_quantum ? node.quantum_args : node.classical_args).push_back(a);
                if (!lx.peek().is_sym(")") && !lx.peek().is_sym(";")) lx.expect_sym(",");
            }
            lx.expect_sym(")");
        }
        return mk(std::move(node), pos);
    }

    static TermPtr fold_annotation(const TermPtr& t, const TypePtr& ann, SourcePos pos) {
        if (const auto* l = as<Lam>(t)) return mk(Lam{l->param, l->body, ann}, t->pos);
        if (const auto* l = as<Letrec>(t))
            return mk(Letrec{l->fun, l->param, l->body, ann}, t->pos);
        fail("SyntaxError", "type ascription is only allowed on lam and letrec", pos);
    }

    /// def values: binders absorb the declared type, other values keep it
    /// implicit (their types are structural).
    static TermPtr fold_annotation_if_binder(const TermPtr& t, const TypePtr& ann) {
        if (as<Lam>(t) || as<Letrec>(t)) return fold_annotation(t, ann, t->pos);
        return t;
    }
};

CMatrix parse_unitary_matrix_impl(Lexer& lx) {
    lx.expect_sym("[");
    std::vector<std::vector<Complex>> rows;
    while (true) {
        lx.expect_sym("[");
        std::vector<Complex> row;
        while (!lx.peek().is_sym("]")) {
            row.push_back(parse_complex(lx));
            if (!lx.peek().is_sym("]")) lx.expect_sym(",");
        }
        lx.expect_sym("]");
        rows.push_back(std::move(row));
        if (!lx.accept_sym(",")) break;
    }
    lx.expect_sym("]");
    const size_t n = rows.size();
    CMatrix m(n, n);
    for (size_t r = 0; r < n; ++r) {
        if (rows[r].size() != n)
            fail("SyntaxError", "unitary matrix rows have inconsistent lengths");
        for (size_t c = 0; c < n; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return m;
}

void parse_data_declaration_impl(Lexer& lx, SigTable& sigs, bool classical) {
    SourcePos pos = lx.pos();
    std::string name = lx.expect_ident("a type name");
    sigs.declare_type(name, classical);
    lx.expect_sym("=");
    do {
        std::string cname = lx.expect_name("a constructor name");
        ConsSignature sig{cname, {}, {}, name};
        if (lx.accept_sym("(")) {
            bool in_quantum = false;
            while (!lx.peek().is_sym(")")) {
                if (lx.accept_sym(";")) {
                    if (in_quantum) fail("SyntaxError", "duplicate ';' in signature", lx.pos());
                    in_quantum = true;
                    continue;
                }
                std::string tn = lx.expect_ident("an argument type");
                (in_quantum ? sig.quantum_args : sig.classical_args).push_back(tn);
                if (!lx.peek().is_sym(")") && !lx.peek().is_sym(";")) lx.expect_sym(",");
            }
            lx.expect_sym(")");
        }
        sigs.declare_cons(sig);
        (void)pos;
    } while (lx.accept_sym("|"));
}

} // namespace

Program parse_program(const std::string& source) {
    Lexer lx(source);
    Program prog;
    std::set<std::string> def_names;

    auto inline_defs = [&](TermPtr t) {
        for (auto it = prog.defs.rbegin(); it != prog.defs.rend(); ++it)
            t = subst(t, it->name, it->value);
        return t;
    };

    while (!lx.at_end()) {
        if (lx.accept_ident("data")) {
            parse_data_declaration(lx, prog.sigs, /*classical=*/true);
            continue;
        }
        if (lx.accept_ident("qdata")) {
            parse_data_declaration(lx, prog.sigs, /*classical=*/false);
            continue;
        }
        if (lx.accept_ident("unitary")) {
            SourcePos pos = lx.pos();
            std::string name = lx.expect_ident("a gate name");
            lx.expect_sym("=");
            CMatrix m = parse_unitary_matrix(lx);
            try {
                prog.gates.declare(Unitary::make(name, std::move(m)));
            } catch (const Error& e) {
                fail(e.kind(), e.what(), pos);
            }
            continue;
        }
        if (lx.accept_ident("def")) {
            SourcePos pos = lx.pos();
            std::string name = lx.expect_ident("a definition name");
            if (prog.gates.contains(name) || prog.sigs.has_cons(name))
                fail("SyntaxError", "'" + name + "' collides with a gate or constructor", pos);
            lx.expect_sym(":");
            TypePtr ann = parse_type(lx, prog.sigs);
            lx.expect_sym("=");
            TermParser tp{lx, prog.sigs, prog.gates, def_names};
            TermPtr value = inline_defs(tp.term());
            value = TermParser::fold_annotation_if_binder(value, ann);
            if (!is_value(value))
                fail("InvalidDefinition", "'" + name + "' must be a value", pos);
            if (!free_vars(value).empty())
                fail("InvalidDefinition", "'" + name + "' must be closed", pos);
            prog.defs.push_back({name, ann, value});
            def_names.insert(name);
            continue;
        }
        if (lx.accept_ident("main")) {
            if (lx.accept_sym(":")) prog.main_annotation = parse_type(lx, prog.sigs);
            lx.expect_sym("=");
        }
        TermParser tp{lx, prog.sigs, prog.gates, def_names};
        prog.main = inline_defs(tp.term());
        break;
    }
    if (!lx.at_end())
        fail("SyntaxError", "unexpected trailing input '" + lx.peek().text + "'", lx.pos());
    if (!prog.main) fail("NoMainTerm", "program has no main term");
    return prog;
}

TypePtr parse_type_string(const std::string& source, const SigTable& sigs) {
    Lexer lx(source);
    TypePtr t = parse_type(lx, sigs);
    if (!lx.at_end()) fail("SyntaxError", "trailing input after type", lx.pos());
    return t;
}

TermPtr parse_term_string(const std::string& source, const SigTable& sigs,
                          const GateTable& gates) {
    Lexer lx(source);
    TermParser tp{lx, sigs, gates};
    TermPtr t = tp.term();
    if (!lx.at_end()) fail("SyntaxError", "trailing input after term", lx.pos());
    return t;
}

// Shared helpers used by the .csl and .rty parsers (see parse_common.hpp).
bool is_reserved_word(const std::string& w) { return reserved_words().count(w) > 0; }
QState parse_ket_raw(const std::string& raw, SourcePos pos) { return parse_ket_raw_impl(raw, pos); }
CMatrix parse_unitary_matrix(lex::Lexer& lx) { return parse_unitary_matrix_impl(lx); }
void parse_data_declaration(lex::Lexer& lx, SigTable& sigs, bool classical) {
    parse_data_declaration_impl(lx, sigs, classical);
}

} // namespace qetlab
