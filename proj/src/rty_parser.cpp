#include "qetlab/rty_parser.hpp"

#include "parse_common.hpp"

namespace qetlab {

using lex::Lexer;
using lex::Tok;
using lex::Token;

namespace {

// Token stream with positions saved for backtracking.
struct Stream {
    std::vector<Token> toks;
    size_t i = 0;

    explicit Stream(const std::string& src) {
        Lexer lx(src);
        while (!lx.at_end()) toks.push_back(lx.next());
        toks.push_back({Tok::End, "<eof>", {}});
    }

    const Token& peek(size_t ahead = 0) const {
        return toks[std::min(i + ahead, toks.size() - 1)];
    }
    Token next() { return toks[std::min(i++, toks.size() - 1)]; }
    bool accept_sym(const std::string& s) {
        if (peek().is_sym(s)) {
            ++i;
            return true;
        }
        return false;
    }
    bool accept_ident(const std::string& s) {
        if (peek().is_ident(s)) {
            ++i;
            return true;
        }
        return false;
    }
    void expect_sym(const std::string& s) {
        if (!accept_sym(s))
            fail("SyntaxError", "expected '" + s + "' but found '" + peek().text + "'",
                 peek().pos);
    }
    std::string expect_ident(const std::string& what) {
        if (peek().kind != Tok::Ident)
            fail("SyntaxError", "expected " + what + " but found '" + peek().text + "'",
                 peek().pos);
        return next().text;
    }
    bool at_end() const { return peek().kind == Tok::End; }
};

struct RtyParser {
    Stream& st;
    const SigTable& sigs;
    const GateTable& gates;
    std::set<std::string> scope; // bound variables shadow gate names

    struct ScopeGuard {
        RtyParser& p;
        std::vector<std::string> added;
        ScopeGuard(RtyParser& rp, std::vector<std::string> names) : p(rp) {
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

    // ---- CS types -------------------------------------------------------

    CSTypePtr cs_type() {
        CSTypePtr lhs = cs_btype();
        if (st.accept_sym("=>")) return CSType::arrow(lhs, cs_type());
        return lhs;
    }

    CSTypePtr cs_btype() {
        if (st.accept_sym("(")) {
            CSTypePtr t = cs_type();
            st.expect_sym(")");
            return t;
        }
        SourcePos pos = st.peek().pos;
        std::string name = st.expect_ident("a CS type name");
        if (name == "Rinf") return CSType::rinf();
        if (name == "K") return CSType::k();
        if (!sigs.has_type(name)) fail("UnknownType", "unknown basic type '" + name + "'", pos);
        return CSType::basic(name);
    }

    // ---- expressions ------------------------------------------------------

    RExprPtr expr() { return cadd(); }

    RExprPtr cadd() {
        RExprPtr lhs = bary();
        if (st.accept_sym("+^")) {
            RExpr e;
            e.kind = RExpr::Kind::CAdd;
            e.args = {lhs, cadd()};
            return rx_mk(std::move(e));
        }
        return lhs;
    }

    RExprPtr bary() {
        RExprPtr lhs = sum();
        if (st.peek().is_sym("(+p0")) {
            st.next();
            RExprPtr v = expr();
            st.expect_sym(")");
            RExprPtr rhs = bary();
            RExpr e;
            e.kind = RExpr::Kind::Bary;
            e.args = {lhs, v, rhs};
            return rx_mk(std::move(e));
        }
        return lhs;
    }

    RExprPtr sum() {
        RExprPtr lhs = prod();
        while (st.peek().is_sym("+")) {
            st.next();
            RExpr e;
            e.kind = RExpr::Kind::Add;
            e.args = {lhs, prod()};
            lhs = rx_mk(std::move(e));
        }
        return lhs;
    }

    RExprPtr prod() {
        RExprPtr lhs = atom();
        while (st.peek().is_sym("*")) {
            st.next();
            RExpr e;
            e.kind = RExpr::Kind::Mul;
            e.args = {lhs, atom()};
            lhs = rx_mk(std::move(e));
        }
        return lhs;
    }

    RExprPtr atom() {
        const Token& t = st.peek();
        SourcePos pos = t.pos;
        if (t.kind == Tok::Number) {
            double v = std::stod(st.next().text);
            return rx_real(v);
        }
        if (t.kind == Tok::KetLit) {
            QState q = parse_ket_raw(st.next().text, pos);
            RExpr e;
            e.kind = RExpr::Kind::Ket;
            e.ket = std::move(q);
            return rx_mk(std::move(e));
        }
        if (t.is_sym("(")) {
            st.next();
            RExprPtr e = expr();
            st.expect_sym(")");
            return postfix(e);
        }
        if (t.kind == Tok::Ident) {
            std::string name = st.next().text;
            auto unary_call = [&](RExpr::Kind k, int bit) {
                st.expect_sym("(");
                RExprPtr a = expr();
                st.expect_sym(")");
                RExpr e;
                e.kind = k;
                e.bit = bit;
                e.args = {a};
                return rx_mk(std::move(e));
            };
            if (name == "p0") return unary_call(RExpr::Kind::Prob, 0);
            if (name == "p1") return unary_call(RExpr::Kind::Prob, 1);
            if (name == "collapse0") return unary_call(RExpr::Kind::Collapse, 0);
            if (name == "collapse1") return unary_call(RExpr::Kind::Collapse, 1);
            if (name == "tensor") {
                st.expect_sym("(");
                RExprPtr a = expr();
                st.expect_sym(",");
                RExprPtr b = expr();
                st.expect_sym(")");
                RExpr e;
                e.kind = RExpr::Kind::Tensor;
                e.args = {a, b};
                return rx_mk(std::move(e));
            }
            if (is_gate_here(name) && st.peek().is_sym("(")) {
                st.expect_sym("(");
                RExprPtr a = expr();
                st.expect_sym(")");
                RExpr e;
                e.kind = RExpr::Kind::Gate;
                e.name = name;
                e.args = {a};
                return rx_mk(std::move(e));
            }
            if (sigs.has_cons(name)) {
                RExpr e;
                e.kind = RExpr::Kind::Cons;
                e.name = name;
                if (st.accept_sym("(")) {
                    while (!st.peek().is_sym(")")) {
                        e.args.push_back(expr());
                        if (!st.peek().is_sym(")")) st.expect_sym(",");
                    }
                    st.expect_sym(")");
                }
                return rx_mk(std::move(e));
            }
            return postfix(rx_var(name));
        }
        fail("SyntaxError", "unexpected token '" + t.text + "' in expression", pos);
    }

    // Application postfix: c(X), f(a)(b)
    RExprPtr postfix(RExprPtr head) {
        while (st.peek().is_sym("(")) {
            st.next();
            RExprPtr a = expr();
            st.expect_sym(")");
            RExpr e;
            e.kind = RExpr::Kind::App;
            e.args = {head, a};
            head = rx_mk(std::move(e));
        }
        return head;
    }

    // ---- formulae ---------------------------------------------------------

    FormulaPtr formula() {
        if (st.accept_ident("forall")) return quant(true);
        if (st.accept_ident("exists")) return quant(false);
        return implies_level();
    }

    FormulaPtr quant(bool is_forall) {
        std::string var = st.expect_ident("a quantified variable");
        st.expect_sym(":");
        CSTypePtr ty = cs_type();
        st.expect_sym(".");
        ScopeGuard g(*this, {var});
        FormulaPtr body = formula();
        return is_forall ? f_forall(var, ty, body) : f_exists(var, ty, body);
    }

    FormulaPtr implies_level() {
        FormulaPtr lhs = or_level();
        if (st.accept_sym("=>")) return f_implies(lhs, formula());
        return lhs;
    }

    FormulaPtr or_level() {
        FormulaPtr lhs = and_level();
        while (st.accept_sym("||")) lhs = f_or(lhs, and_level());
        return lhs;
    }

    FormulaPtr and_level() {
        FormulaPtr lhs = not_level();
        while (st.accept_sym("&&")) lhs = f_and(lhs, not_level());
        return lhs;
    }

    FormulaPtr not_level() {
        if (st.accept_sym("!")) return f_not(not_level());
        if (st.peek().is_ident("true")) {
            st.next();
            return f_top();
        }
        if (st.peek().is_sym("(")) {
            // Either a parenthesized formula or an expression atom: backtrack.
            size_t save = st.i;
            st.next();
            try {
                FormulaPtr inner = formula();
                if (st.accept_sym(")")) {
                    // Must be a formula unless a predicate operator follows.
                    if (!st.peek().is_sym("=") && !st.peek().is_sym("<=") &&
                        !st.peek().is_sym("==") && !st.peek().is_sym("[="))
                        return inner;
                }
            } catch (const Error&) {
            }
            st.i = save;
        }
        return atom_formula();
    }

    FormulaPtr atom_formula() {
        RExprPtr lhs = expr();
        std::string pred;
        if (st.accept_sym("<="))
            pred = "le";
        else if (st.accept_sym("[="))
            pred = "sqle";
        else if (st.accept_sym("==") || st.accept_sym("="))
            pred = "eq";
        else if (st.accept_sym("!")) {
            st.expect_sym("=");
            return f_not(f_pred("eq", {lhs, expr()}));
        } else
            fail("SyntaxError", "expected a predicate operator, found '" + st.peek().text + "'",
                 st.peek().pos);
        return f_pred(pred, {lhs, expr()});
    }

    // ---- refinement types ---------------------------------------------------

    RefTypePtr cs_to_ref(const CSTypePtr& t) {
        if (t->kind == CSType::Kind::Arrow)
            return RefType::mk_arrow("_", cs_to_ref(t->from), cs_to_ref(t->to));
        return RefType::top(t);
    }

    RefTypePtr reftype() {
        if (st.accept_ident("forall")) {
            std::string var = st.expect_ident("a quantified variable");
            st.expect_sym(":");
            RefTypePtr dom = reftype();
            st.expect_sym(".");
            ScopeGuard g(*this, {var});
            RefTypePtr cod = reftype();
            return RefType::mk_forall(var, dom, cod);
        }
        if (st.peek().is_sym("{")) {
            st.next();
            std::string binder = st.expect_ident("a refinement binder");
            st.expect_sym(":");
            CSTypePtr base = cs_type();
            st.expect_sym("|");
            FormulaPtr phi;
            {
                ScopeGuard g(*this, {binder});
                phi = formula();
            }
            st.expect_sym("}");
            RefTypePtr t = RefType::mk_base(base, binder, phi);
            return arrow_tail(t);
        }
        if (st.peek().is_sym("(")) {
            // (x : reftype) => reftype, or a parenthesized type.
            size_t save = st.i;
            st.next();
            if (st.peek().kind == Tok::Ident && st.peek(1).is_sym(":")) {
                std::string var = st.next().text;
                st.next(); // ':'
                try {
                    RefTypePtr dom = reftype();
                    st.expect_sym(")");
                    st.expect_sym("=>");
                    ScopeGuard g(*this, {var});
                    RefTypePtr cod = reftype();
                    return RefType::mk_arrow(var, dom, cod);
                } catch (const Error&) {
                    st.i = save;
                }
            } else {
                st.i = save;
            }
            st.expect_sym("(");
            RefTypePtr t = reftype();
            st.expect_sym(")");
            return arrow_tail(t);
        }
        CSTypePtr base = cs_btype();
        return arrow_tail(cs_to_ref(base));
    }

    RefTypePtr arrow_tail(RefTypePtr lhs) {
        if (st.accept_sym("=>")) return RefType::mk_arrow("_", lhs, reftype());
        return lhs;
    }
};

} // namespace

RtySpec parse_rty(const std::string& source, const SigTable& sigs, const GateTable& gates) {
    Stream st(source);
    RtyParser p{st, sigs, gates};
    RtySpec spec;
    while (!st.at_end()) {
        if (st.accept_ident("fun")) {
            FunDecl fd;
            fd.name = st.expect_ident("a function name");
            st.expect_sym("(");
            while (!st.peek().is_sym(")")) {
                std::string pn = st.expect_ident("a parameter name");
                st.expect_sym(":");
                fd.params.push_back({pn, p.cs_type()});
                if (!st.peek().is_sym(")")) st.expect_sym(",");
            }
            st.expect_sym(")");
            st.expect_sym(":");
            fd.result = p.cs_type();
            st.expect_sym("=");
            {
                std::vector<std::string> names;
                for (const auto& [n, _] : fd.params) names.push_back(n);
                RtyParser::ScopeGuard g(p, names);
                fd.body = p.expr();
            }
            spec.functions.push_back(std::move(fd));
            continue;
        }
        if (st.accept_ident("type")) {
            spec.type = p.reftype();
            break;
        }
        fail("SyntaxError", "expected 'fun' or 'type', found '" + st.peek().text + "'",
             st.peek().pos);
    }
    if (!st.at_end())
        fail("SyntaxError", "trailing input after type", st.peek().pos);
    if (!spec.type) fail("SyntaxError", "missing 'type' declaration in .rty file");
    return spec;
}

RExprPtr parse_rexpr_string(const std::string& source, const SigTable& sigs,
                            const GateTable& gates) {
    Stream st(source);
    RtyParser p{st, sigs, gates};
    RExprPtr e = p.expr();
    if (!st.at_end()) fail("SyntaxError", "trailing input after expression", st.peek().pos);
    return e;
}

FormulaPtr parse_formula_string(const std::string& source, const SigTable& sigs,
                                const GateTable& gates) {
    Stream st(source);
    RtyParser p{st, sigs, gates};
    FormulaPtr f = p.formula();
    if (!st.at_end()) fail("SyntaxError", "trailing input after formula", st.peek().pos);
    return f;
}

RefTypePtr parse_reftype_string(const std::string& source, const SigTable& sigs,
                                const GateTable& gates) {
    Stream st(source);
    RtyParser p{st, sigs, gates};
    RefTypePtr t = p.reftype();
    if (!st.at_end()) fail("SyntaxError", "trailing input after type", st.peek().pos);
    return t;
}

} // namespace qetlab
