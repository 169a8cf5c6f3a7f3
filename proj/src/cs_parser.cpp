#include "qetlab/cs_parser.hpp"

#include "lexer.hpp"
#include "parse_common.hpp"

namespace qetlab {

using lex::Lexer;
using lex::Tok;
using lex::Token;

namespace {

CSTypePtr parse_cs_type(Lexer& lx, const SigTable& sigs);

CSTypePtr parse_cs_btype(Lexer& lx, const SigTable& sigs) {
    if (lx.accept_sym("(")) {
        CSTypePtr t = parse_cs_type(lx, sigs);
        lx.expect_sym(")");
        return t;
    }
    SourcePos pos = lx.pos();
    std::string name = lx.expect_ident("a CS type name");
    if (name == "Rinf") return CSType::rinf();
    if (name == "K") return CSType::k();
    if (!sigs.has_type(name)) fail("UnknownType", "unknown basic type '" + name + "'", pos);
    return CSType::basic(name);
}

CSTypePtr parse_cs_type(Lexer& lx, const SigTable& sigs) {
    CSTypePtr lhs = parse_cs_btype(lx, sigs);
    if (lx.accept_sym("=>")) return CSType::arrow(lhs, parse_cs_type(lx, sigs));
    return lhs;
}

struct CSTermParser {
    Lexer& lx;
    const SigTable& sigs;
    const GateTable& gates;
    std::set<std::string> scope; // bound variables shadow gate names

    struct ScopeGuard {
        CSTermParser& p;
        std::vector<std::string> added;
        ScopeGuard(CSTermParser& tp, std::vector<std::string> names) : p(tp) {
            for (auto& n : names)
                if (p.scope.insert(n).second) added.push_back(n);
        }
        ~ScopeGuard() {
            for (auto& n : added) p.scope.erase(n);
        }
    };

    bool is_gate_here(const std::string& name) const {
        return gates.contains(name) && !sigs.has_cons(name) && !scope.count(name);
    }

    bool starts_unary() const {
        const Token& t = lx.peek();
        if (t.kind == Tok::KetLit || t.kind == Tok::Number) return true;
        if (t.is_sym("(")) return true;
        if (t.kind == Tok::Ident) {
            if (t.text == "real" || t.text == "tensor" || t.text == "collapse0" ||
                t.text == "collapse1")
                return true;
            return !is_reserved_word(t.text);
        }
        return false;
    }

    std::string binder_name() {
        SourcePos pos = lx.pos();
        std::string x = lx.expect_ident("a binder name");
        if (is_reserved_word(x)) fail("SyntaxError", "'" + x + "' is reserved", pos);
        return x;
    }

    CSTermPtr term() {
        SourcePos pos = lx.pos();
        if (lx.accept_ident("lam")) {
            std::string x;
            CSTypePtr ann;
            if (lx.accept_sym("(")) {
                x = binder_name();
                lx.expect_sym(":");
                ann = parse_cs_type(lx, sigs);
                lx.expect_sym(")");
            } else {
                x = binder_name();
            }
            lx.expect_sym(".");
            ScopeGuard g(*this, {x});
            return cs_mk(CSLam{x, term(), ann}, pos);
        }
        if (lx.accept_ident("letrec")) return letrec(pos);
        if (lx.accept_ident("case")) return case_of(pos);
        return cadd_level();
    }

    CSTermPtr letrec(SourcePos pos) {
        std::string f;
        CSTypePtr ann;
        if (lx.accept_sym("(")) {
            f = binder_name();
            lx.expect_sym(":");
            ann = parse_cs_type(lx, sigs);
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
        CSTermPtr body;
        {
            ScopeGuard g(*this, bound);
            body = term();
        }
        for (size_t i = params.size(); i > 1; --i)
            body = cs_mk(CSLam{params[i - 1], body, nullptr}, pos);
        return cs_mk(CSLetrec{f, params[0], body, ann}, pos);
    }

    CSTermPtr case_of(SourcePos pos) {
        CSTermPtr scrut = term();
        if (!lx.accept_ident("of")) fail("SyntaxError", "expected 'of' in case", lx.pos());
        CSCase node{scrut, {}, "", nullptr};
        bool saw_arm = false;
        while (lx.accept_sym("|")) {
            saw_arm = true;
            SourcePos apos = lx.pos();
            std::string head = lx.expect_name("a constructor or default binder");
            if (sigs.has_cons(head)) {
                CSCaseArm arm{head, {}, nullptr};
                if (lx.accept_sym("(")) {
                    while (!lx.peek().is_sym(")")) {
                        arm.binders.push_back(binder_name());
                        if (!lx.peek().is_sym(")")) lx.expect_sym(",");
                    }
                    lx.expect_sym(")");
                }
                lx.expect_sym("->");
                {
                    ScopeGuard g(*this, arm.binders);
                    arm.body = bary_level();
                }
                node.arms.push_back(std::move(arm));
            } else {
                if (is_reserved_word(head)) fail("SyntaxError", "'" + head + "' is reserved", apos);
                if (node.default_body) fail("SyntaxError", "second default arm in case", apos);
                node.default_binder = head;
                lx.expect_sym("->");
                {
                    ScopeGuard g(*this, {head});
                    node.default_body = bary_level();
                }
                break;
            }
        }
        if (!saw_arm) fail("SyntaxError", "case needs at least one arm", pos);
        return cs_mk(std::move(node), pos);
    }

    // cost addition: right-associative, lowest precedence
    CSTermPtr cadd_level() {
        CSTermPtr lhs = bary_level();
        if (lx.accept_sym("+^")) {
            SourcePos pos = lx.pos();
            CSTermPtr rhs = term();
            return cs_mk(CSCAdd{lhs, rhs}, pos);
        }
        return lhs;
    }

    // barycentric sum T0 (+p0 V) T1: tighter than +^, right-associative
    CSTermPtr bary_level() {
        CSTermPtr lhs = appchain();
        if (lx.peek().is_sym("(+p0")) {
            SourcePos pos = lx.next().pos;
            CSTermPtr v = term();
            lx.expect_sym(")");
            CSTermPtr rhs = bary_level();
            return cs_mk(CSBary{lhs, v, rhs}, pos);
        }
        return lhs;
    }

    CSTermPtr appchain() {
        CSTermPtr t = unary();
        while (starts_unary()) t = cs_mk(CSApp{t, unary()}, t->pos);
        return t;
    }

    CSTermPtr unary() {
        const Token& tok = lx.peek();
        if (tok.kind == Tok::Ident && (tok.text == "collapse0" || tok.text == "collapse1")) {
            SourcePos pos = lx.pos();
            int b = lx.next().text == "collapse1" ? 1 : 0;
            lx.expect_sym("(");
            CSTermPtr a = term();
            lx.expect_sym(")");
            return cs_mk(CSCollapse{b, a}, pos);
        }
        if (tok.kind == Tok::Ident && is_gate_here(tok.text)) {
            SourcePos pos = lx.pos();
            std::string g = lx.next().text;
            return cs_mk(CSGate{g, unary()}, pos);
        }
        return primary();
    }

    CSTermPtr primary() {
        SourcePos pos = lx.pos();
        const Token& tok = lx.peek();
        if (tok.kind == Tok::KetLit) {
            QState q = parse_ket_raw(tok.text, pos);
            lx.next();
            return cs_mk(CSKet{std::move(q)}, pos);
        }
        if (tok.is_sym("(")) {
            lx.next();
            CSTermPtr t = term();
            if (lx.accept_sym(":")) {
                CSTypePtr ann = parse_cs_type(lx, sigs);
                t = fold_cs_annotation(t, ann, pos);
            }
            lx.expect_sym(")");
            return t;
        }
        if (tok.kind == Tok::Ident && tok.text == "real") {
            lx.next();
            double r = lx.expect_number("a non-negative real");
            return cs_mk(CSReal{r}, pos);
        }
        if (tok.kind == Tok::Ident && tok.text == "tensor") {
            lx.next();
            lx.expect_sym("(");
            CSTermPtr a = term();
            lx.expect_sym(",");
            CSTermPtr b = term();
            lx.expect_sym(")");
            return cs_mk(CSTensor{a, b}, pos);
        }
        if (tok.kind == Tok::Number || tok.kind == Tok::Ident) {
            const bool was_number = tok.kind == Tok::Number;
            std::string name = lx.next().text;
            if (sigs.has_cons(name)) {
                CSCons node{name, {}};
                if (lx.peek().is_sym("(")) {
                    lx.next();
                    while (!lx.peek().is_sym(")")) {
                        node.args.push_back(term());
                        if (!lx.peek().is_sym(")")) lx.expect_sym(",");
                    }
                    lx.expect_sym(")");
                }
                return cs_mk(std::move(node), pos);
            }
            if (was_number)
                fail("UnknownConstructor", "'" + name + "' is not a declared constructor", pos);
            if (is_reserved_word(name)) fail("SyntaxError", "'" + name + "' is reserved", pos);
            return cs_mk(CSVar{name}, pos);
        }
        fail("SyntaxError", "unexpected token '" + tok.text + "'", pos);
    }

    static CSTermPtr fold_cs_annotation(const CSTermPtr& t, const CSTypePtr& ann, SourcePos pos) {
        if (const auto* l = cs_as<CSLam>(t)) {
            if (ann->kind != CSType::Kind::Arrow)
                fail("TypeMismatch", "lambda ascribed a non-arrow type", pos);
            CSTermPtr body = l->body;
            if (cs_as<CSLam>(body) && ann->to->kind == CSType::Kind::Arrow)
                body = fold_cs_annotation(body, ann->to, pos);
            return cs_mk(CSLam{l->param, body, ann->from}, t->pos);
        }
        if (const auto* l = cs_as<CSLetrec>(t))
            return cs_mk(CSLetrec{l->fun, l->param, l->body, ann}, t->pos);
        fail("SyntaxError", "type ascription is only allowed on lam and letrec", pos);
    }
};

} // namespace

CSProgram parse_cs_program(const std::string& source) {
    return parse_cs_program(source, SigTable::builtins(), GateTable::builtins());
}

CSProgram parse_cs_program(const std::string& source, const SigTable& base_sigs,
                           const GateTable& base_gates) {
    Lexer lx(source);
    CSProgram prog;
    prog.sigs = base_sigs;
    prog.gates = base_gates;
    while (!lx.at_end()) {
        if (lx.accept_ident("data")) {
            parse_data_declaration(lx, prog.sigs, true);
            continue;
        }
        if (lx.accept_ident("qdata")) {
            parse_data_declaration(lx, prog.sigs, false);
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
        if (lx.accept_ident("main")) {
            if (lx.accept_sym(":")) prog.main_annotation = parse_cs_type(lx, prog.sigs);
            lx.expect_sym("=");
        }
        CSTermParser tp{lx, prog.sigs, prog.gates};
        prog.main = tp.term();
        break;
    }
    if (!lx.at_end())
        fail("SyntaxError", "unexpected trailing input '" + lx.peek().text + "'", lx.pos());
    if (!prog.main) fail("NoMainTerm", "cost-structure program has no main term");
    return prog;
}

CSTypePtr parse_cs_type_string(const std::string& source, const SigTable& sigs) {
    Lexer lx(source);
    CSTypePtr t = parse_cs_type(lx, sigs);
    if (!lx.at_end()) fail("SyntaxError", "trailing input after type", lx.pos());
    return t;
}

CSTermPtr parse_cs_term_string(const std::string& source, const SigTable& sigs,
                               const GateTable& gates) {
    Lexer lx(source);
    CSTermParser tp{lx, sigs, gates};
    CSTermPtr t = tp.term();
    if (!lx.at_end()) fail("SyntaxError", "trailing input after term", lx.pos());
    return t;
}

} // namespace qetlab
