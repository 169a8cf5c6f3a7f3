#include "qetlab/cs_ast.hpp"

#include <algorithm>
#include <sstream>

namespace qetlab {

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string show_real_cs(double d) {
    std::ostringstream os;
    os.precision(17);
    os << d;
    return os.str();
}
} // namespace

CSTypePtr CSType::basic(std::string name) {
    auto t = std::make_shared<CSType>();
    t->kind = Kind::Basic;
    t->name = std::move(name);
    return t;
}

CSTypePtr CSType::rinf() {
    auto t = std::make_shared<CSType>();
    t->kind = Kind::RInf;
    return t;
}

CSTypePtr CSType::k() {
    auto t = std::make_shared<CSType>();
    t->kind = Kind::K;
    return t;
}

CSTypePtr CSType::arrow(CSTypePtr from, CSTypePtr to) {
    auto t = std::make_shared<CSType>();
    t->kind = Kind::Arrow;
    t->from = std::move(from);
    t->to = std::move(to);
    return t;
}

bool cs_type_equal(const CSType& a, const CSType& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case CSType::Kind::Basic:
        return a.name == b.name;
    case CSType::Kind::RInf:
    case CSType::Kind::K:
        return true;
    case CSType::Kind::Arrow:
        return cs_type_equal(*a.from, *b.from) && cs_type_equal(*a.to, *b.to);
    }
    return false;
}

std::string show_cs_type(const CSType& t) {
    switch (t.kind) {
    case CSType::Kind::Basic:
        return t.name;
    case CSType::Kind::RInf:
        return "Rinf";
    case CSType::Kind::K:
        return "K";
    case CSType::Kind::Arrow: {
        std::string lhs = show_cs_type(*t.from);
        if (t.from->kind == CSType::Kind::Arrow) lhs = "(" + lhs + ")";
        return lhs + " => " + show_cs_type(*t.to);
    }
    }
    return "?";
}

bool is_functional_cs_type(const CSType& t) {
    if (t.kind == CSType::Kind::K) return true;
    if (t.kind == CSType::Kind::Arrow) return is_functional_cs_type(*t.to);
    return false;
}

CSTermPtr cs_mk(CSTermNode node, SourcePos pos) {
    auto t = std::make_shared<CSTerm>();
    t->node = std::move(node);
    t->pos = pos;
    return t;
}

bool is_cs_value(const CSTermPtr& t) {
    return std::visit(
        overloaded{
            [](const CSVar&) { return true; },
            [](const CSLam&) { return true; },
            [](const CSKet&) { return true; },
            [](const CSLetrec&) { return true; },
            [](const CSReal&) { return true; },
            [](const CSGate& g) { return is_cs_value(g.arg); },
            [](const CSCollapse& c) { return is_cs_value(c.arg); },
            [](const CSTensor& s) { return is_cs_value(s.lhs) && is_cs_value(s.rhs); },
            [](const CSCons& c) {
                return std::all_of(c.args.begin(), c.args.end(),
                                   [](const CSTermPtr& a) { return is_cs_value(a); });
            },
            [](const auto&) { return false; },
        },
        t->node);
}

namespace {

void cs_fv(const CSTermPtr& t, std::set<std::string>& bound, std::set<std::string>& out) {
    std::visit(
        overloaded{
            [&](const CSVar& v) {
                if (!bound.count(v.name)) out.insert(v.name);
            },
            [&](const CSLam& l) {
                bool fresh = bound.insert(l.param).second;
                cs_fv(l.body, bound, out);
                if (fresh) bound.erase(l.param);
            },
            [&](const CSApp& a) {
                cs_fv(a.fun, bound, out);
                cs_fv(a.arg, bound, out);
            },
            [&](const CSKet&) {},
            [&](const CSGate& g) { cs_fv(g.arg, bound, out); },
            [&](const CSTensor& s) {
                cs_fv(s.lhs, bound, out);
                cs_fv(s.rhs, bound, out);
            },
            [&](const CSCollapse& c) { cs_fv(c.arg, bound, out); },
            [&](const CSCons& c) {
                for (const auto& a : c.args) cs_fv(a, bound, out);
            },
            [&](const CSCase& c) {
                cs_fv(c.scrutinee, bound, out);
                for (const auto& arm : c.arms) {
                    std::set<std::string> added;
                    for (const auto& x : arm.binders)
                        if (bound.insert(x).second) added.insert(x);
                    cs_fv(arm.body, bound, out);
                    for (const auto& x : added) bound.erase(x);
                }
                if (c.default_body) {
                    bool fresh = bound.insert(c.default_binder).second;
                    cs_fv(c.default_body, bound, out);
                    if (fresh) bound.erase(c.default_binder);
                }
            },
            [&](const CSLetrec& l) {
                std::set<std::string> added;
                if (bound.insert(l.fun).second) added.insert(l.fun);
                if (bound.insert(l.param).second) added.insert(l.param);
                cs_fv(l.body, bound, out);
                for (const auto& x : added) bound.erase(x);
            },
            [&](const CSReal&) {},
            [&](const CSCAdd& a) {
                cs_fv(a.cost, bound, out);
                cs_fv(a.rest, bound, out);
            },
            [&](const CSBary& b) {
                cs_fv(b.left, bound, out);
                cs_fv(b.prob_state, bound, out);
                cs_fv(b.right, bound, out);
            },
        },
        t->node);
}

struct CSSubst {
    const std::string& x;
    const CSTermPtr& v;
    std::set<std::string> v_free;

    CSTermPtr rename_if_needed(const std::string& binder, CSTermPtr body, std::string& out_binder,
                               const std::set<std::string>& extra = {}) {
        if (!v_free.count(binder)) {
            out_binder = binder;
            return body;
        }
        std::set<std::string> used = v_free;
        auto bf = cs_free_vars(body);
        used.insert(bf.begin(), bf.end());
        used.insert(extra.begin(), extra.end());
        used.insert(x);
        out_binder = fresh_name(binder, used);
        return cs_subst(body, binder, cs_mk(CSVar{out_binder}));
    }

    CSTermPtr go(const CSTermPtr& t) {
        return std::visit(
            overloaded{
                [&](const CSVar& w) { return w.name == x ? v : t; },
                [&](const CSLam& l) {
                    if (l.param == x) return t;
                    std::string p;
                    CSTermPtr body = rename_if_needed(l.param, l.body, p);
                    return cs_mk(CSLam{p, go(body), l.param_ann}, t->pos);
                },
                [&](const CSApp& a) { return cs_mk(CSApp{go(a.fun), go(a.arg)}, t->pos); },
                [&](const CSKet&) { return t; },
                [&](const CSGate& g) { return cs_mk(CSGate{g.gate, go(g.arg)}, t->pos); },
                [&](const CSTensor& s) { return cs_mk(CSTensor{go(s.lhs), go(s.rhs)}, t->pos); },
                [&](const CSCollapse& c) {
                    return cs_mk(CSCollapse{c.outcome, go(c.arg)}, t->pos);
                },
                [&](const CSCons& c) {
                    CSCons out{c.cons, {}};
                    for (const auto& a : c.args) out.args.push_back(go(a));
                    return cs_mk(std::move(out), t->pos);
                },
                [&](const CSCase& c) {
                    CSCase out{go(c.scrutinee), {}, c.default_binder, nullptr};
                    for (const auto& arm : c.arms) {
                        if (std::find(arm.binders.begin(), arm.binders.end(), x) !=
                            arm.binders.end()) {
                            out.arms.push_back(arm);
                            continue;
                        }
                        CSTermPtr body = arm.body;
                        CSCaseArm na{arm.cons, {}, nullptr};
                        std::set<std::string> others(arm.binders.begin(), arm.binders.end());
                        for (const auto& bname : arm.binders) {
                            std::string nb;
                            body = rename_if_needed(bname, body, nb, others);
                            na.binders.push_back(nb);
                        }
                        na.body = go(body);
                        out.arms.push_back(std::move(na));
                    }
                    if (c.default_body) {
                        if (c.default_binder == x) {
                            out.default_body = c.default_body;
                        } else {
                            std::string nb;
                            CSTermPtr body = rename_if_needed(c.default_binder, c.default_body, nb);
                            out.default_binder = nb;
                            out.default_body = go(body);
                        }
                    }
                    return cs_mk(std::move(out), t->pos);
                },
                [&](const CSLetrec& l) {
                    if (l.fun == x || l.param == x) return t;
                    std::string f = l.fun, p = l.param;
                    CSTermPtr body = l.body;
                    body = rename_if_needed(l.fun, body, f, {l.param});
                    body = rename_if_needed(l.param, body, p, {f});
                    return cs_mk(CSLetrec{f, p, go(body), l.annotation}, t->pos);
                },
                [&](const CSReal&) { return t; },
                [&](const CSCAdd& a) { return cs_mk(CSCAdd{go(a.cost), go(a.rest)}, t->pos); },
                [&](const CSBary& b) {
                    return cs_mk(CSBary{go(b.left), go(b.prob_state), go(b.right)}, t->pos);
                },
            },
            t->node);
    }
};

bool cs_aeq(const CSTermPtr& a, const CSTermPtr& b, std::map<std::string, std::string>& ab,
            std::map<std::string, std::string>& ba, double tol);

bool cs_aeq_binders(const std::vector<std::string>& xs, const std::vector<std::string>& ys,
                    const CSTermPtr& ta, const CSTermPtr& tb,
                    std::map<std::string, std::string>& ab, std::map<std::string, std::string>& ba,
                    double tol) {
    if (xs.size() != ys.size()) return false;
    auto sab = ab, sba = ba;
    for (size_t i = 0; i < xs.size(); ++i) {
        sab[xs[i]] = ys[i];
        sba[ys[i]] = xs[i];
    }
    return cs_aeq(ta, tb, sab, sba, tol);
}

bool cs_aeq(const CSTermPtr& a, const CSTermPtr& b, std::map<std::string, std::string>& ab,
            std::map<std::string, std::string>& ba, double tol) {
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        overloaded{
            [&](const CSVar& va) {
                const auto& vb = std::get<CSVar>(b->node);
                auto it = ab.find(va.name);
                if (it != ab.end()) return it->second == vb.name;
                return !ba.count(vb.name) && va.name == vb.name;
            },
            [&](const CSLam& la) {
                const auto& lb = std::get<CSLam>(b->node);
                return cs_aeq_binders({la.param}, {lb.param}, la.body, lb.body, ab, ba, tol);
            },
            [&](const CSApp& xa) {
                const auto& xb = std::get<CSApp>(b->node);
                return cs_aeq(xa.fun, xb.fun, ab, ba, tol) && cs_aeq(xa.arg, xb.arg, ab, ba, tol);
            },
            [&](const CSKet& ka) {
                return ka.state.approx_equal(std::get<CSKet>(b->node).state, tol);
            },
            [&](const CSGate& ga) {
                const auto& gb = std::get<CSGate>(b->node);
                return ga.gate == gb.gate && cs_aeq(ga.arg, gb.arg, ab, ba, tol);
            },
            [&](const CSTensor& sa) {
                const auto& sb = std::get<CSTensor>(b->node);
                return cs_aeq(sa.lhs, sb.lhs, ab, ba, tol) && cs_aeq(sa.rhs, sb.rhs, ab, ba, tol);
            },
            [&](const CSCollapse& ca) {
                const auto& cb = std::get<CSCollapse>(b->node);
                return ca.outcome == cb.outcome && cs_aeq(ca.arg, cb.arg, ab, ba, tol);
            },
            [&](const CSCons& ca) {
                const auto& cb = std::get<CSCons>(b->node);
                if (ca.cons != cb.cons || ca.args.size() != cb.args.size()) return false;
                for (size_t i = 0; i < ca.args.size(); ++i)
                    if (!cs_aeq(ca.args[i], cb.args[i], ab, ba, tol)) return false;
                return true;
            },
            [&](const CSCase& ca) {
                const auto& cb = std::get<CSCase>(b->node);
                if (ca.arms.size() != cb.arms.size()) return false;
                if (!cs_aeq(ca.scrutinee, cb.scrutinee, ab, ba, tol)) return false;
                for (size_t i = 0; i < ca.arms.size(); ++i) {
                    if (ca.arms[i].cons != cb.arms[i].cons) return false;
                    if (!cs_aeq_binders(ca.arms[i].binders, cb.arms[i].binders, ca.arms[i].body,
                                        cb.arms[i].body, ab, ba, tol))
                        return false;
                }
                if ((ca.default_body == nullptr) != (cb.default_body == nullptr)) return false;
                if (ca.default_body &&
                    !cs_aeq_binders({ca.default_binder}, {cb.default_binder}, ca.default_body,
                                    cb.default_body, ab, ba, tol))
                    return false;
                return true;
            },
            [&](const CSLetrec& la) {
                const auto& lb = std::get<CSLetrec>(b->node);
                return cs_aeq_binders({la.fun, la.param}, {lb.fun, lb.param}, la.body, lb.body, ab,
                                      ba, tol);
            },
            [&](const CSReal& ra) { return ra.value == std::get<CSReal>(b->node).value; },
            [&](const CSCAdd& xa) {
                const auto& xb = std::get<CSCAdd>(b->node);
                return cs_aeq(xa.cost, xb.cost, ab, ba, tol) &&
                       cs_aeq(xa.rest, xb.rest, ab, ba, tol);
            },
            [&](const CSBary& xa) {
                const auto& xb = std::get<CSBary>(b->node);
                return cs_aeq(xa.left, xb.left, ab, ba, tol) &&
                       cs_aeq(xa.prob_state, xb.prob_state, ab, ba, tol) &&
                       cs_aeq(xa.right, xb.right, ab, ba, tol);
            },
        },
        a->node);
}

std::string cs_show_ket(const QState& q) {
    std::ostringstream os;
    os << "ket[";
    bool first = true;
    for (Eigen::Index i = 0; i < q.dim(); ++i) {
        Complex c = q.amplitudes()[i];
        if (c == Complex(0, 0)) continue;
        if (!first) os << " + ";
        first = false;
        std::string bits;
        for (int b = q.n_qubits() - 1; b >= 0; --b) bits += ((i >> b) & 1) ? '1' : '0';
        if (c.imag() == 0.0) {
            os << show_real_cs(c.real());
        } else {
            os << "(" << show_real_cs(c.real()) << (c.imag() < 0 ? "-" : "+")
               << show_real_cs(std::abs(c.imag())) << "i)";
        }
        os << "|" << bits << ">";
    }
    os << "]";
    return os.str();
}

// Precedence: 0 = top (cadd), 1 = bary, 2 = application, 3 = atom.
std::string cs_pp(const CSTermPtr& t, int level) {
    auto wrap = [&](int mine, const std::string& s) {
        return mine < level ? "(" + s + ")" : s;
    };
    return std::visit(
        overloaded{
            [&](const CSVar& v) { return v.name; },
            [&](const CSLam& l) {
                std::string head =
                    l.param_ann ? "lam (" + l.param + " : " + show_cs_type(*l.param_ann) + "). "
                                : "lam " + l.param + ". ";
                return wrap(0, head + cs_pp(l.body, 0));
            },
            [&](const CSApp& a) { return wrap(2, cs_pp(a.fun, 2) + " " + cs_pp(a.arg, 3)); },
            [&](const CSKet& k) { return cs_show_ket(k.state); },
            [&](const CSGate& g) { return wrap(2, g.gate + " " + cs_pp(g.arg, 3)); },
            [&](const CSTensor& s) {
                return "tensor(" + cs_pp(s.lhs, 0) + ", " + cs_pp(s.rhs, 0) + ")";
            },
            [&](const CSCollapse& c) {
                return "collapse" + std::to_string(c.outcome) + "(" + cs_pp(c.arg, 0) + ")";
            },
            [&](const CSCons& c) {
                if (c.args.empty()) return c.cons;
                std::string s = c.cons + "(";
                for (size_t i = 0; i < c.args.size(); ++i) {
                    if (i) s += ", ";
                    s += cs_pp(c.args[i], 0);
                }
                return s + ")";
            },
            [&](const CSCase& c) {
                std::string s = "case " + cs_pp(c.scrutinee, 0) + " of";
                for (const auto& arm : c.arms) {
                    s += " | " + arm.cons;
                    if (!arm.binders.empty()) {
                        s += "(";
                        for (size_t i = 0; i < arm.binders.size(); ++i) {
                            if (i) s += ", ";
                            s += arm.binders[i];
                        }
                        s += ")";
                    }
                    s += " -> " + cs_pp(arm.body, 1);
                }
                if (c.default_body)
                    s += " | " + c.default_binder + " -> " + cs_pp(c.default_body, 1);
                return wrap(0, s);
            },
            [&](const CSLetrec& l) {
                std::string head =
                    l.annotation ? "letrec (" + l.fun + " : " + show_cs_type(*l.annotation) + ") "
                                 : "letrec " + l.fun + " ";
                return wrap(0, head + l.param + " = " + cs_pp(l.body, 0));
            },
            [&](const CSReal& r) { return wrap(2, "real " + show_real_cs(r.value)); },
            [&](const CSCAdd& a) {
                return wrap(0, cs_pp(a.cost, 1) + " +^ " + cs_pp(a.rest, 0));
            },
            [&](const CSBary& b) {
                return wrap(1, cs_pp(b.left, 2) + " (+p0 " + cs_pp(b.prob_state, 0) + ") " +
                                   cs_pp(b.right, 1));
            },
        },
        t->node);
}

} // namespace

std::set<std::string> cs_free_vars(const CSTermPtr& t) {
    std::set<std::string> bound, out;
    cs_fv(t, bound, out);
    return out;
}

CSTermPtr cs_subst(const CSTermPtr& t, const std::string& x, const CSTermPtr& v) {
    CSSubst s{x, v, cs_free_vars(v)};
    return s.go(t);
}

bool cs_alpha_eq(const CSTermPtr& a, const CSTermPtr& b, double ket_tol) {
    std::map<std::string, std::string> ab, ba;
    return cs_aeq(a, b, ab, ba, ket_tol);
}

std::string cs_pretty(const CSTermPtr& t) { return cs_pp(t, 0); }

} // namespace qetlab
