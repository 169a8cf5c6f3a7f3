#include "qetlab/source_ast.hpp"

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
} // namespace

TypePtr SourceType::basic(std::string name, bool classical) {
    auto t = std::make_shared<SourceType>();
    t->kind = Kind::Basic;
    t->name = std::move(name);
    t->classical = classical;
    return t;
}

TypePtr SourceType::lin(TypePtr from, TypePtr to) {
    auto t = std::make_shared<SourceType>();
    t->kind = Kind::LinArrow;
    t->from = std::move(from);
    t->to = std::move(to);
    return t;
}

TypePtr SourceType::exp(TypePtr from, TypePtr to) {
    auto t = std::make_shared<SourceType>();
    t->kind = Kind::ExpArrow;
    t->from = std::move(from);
    t->to = std::move(to);
    return t;
}

bool duplicable(const SourceType& t) {
    return t.kind != SourceType::Kind::Basic || t.classical;
}

bool type_equal(const SourceType& a, const SourceType& b) {
    if (a.kind != b.kind) return false;
    if (a.kind == SourceType::Kind::Basic) return a.name == b.name;
    return type_equal(*a.from, *b.from) && type_equal(*a.to, *b.to);
}

std::string show_type(const SourceType& t) {
    switch (t.kind) {
    case SourceType::Kind::Basic:
        return t.name;
    case SourceType::Kind::LinArrow: {
        std::string lhs = show_type(*t.from);
        if (t.from->kind != SourceType::Kind::Basic) lhs = "(" + lhs + ")";
        return lhs + " -o " + show_type(*t.to);
    }
    case SourceType::Kind::ExpArrow: {
        std::string lhs = show_type(*t.from);
        if (t.from->kind != SourceType::Kind::Basic) lhs = "(" + lhs + ")";
        return lhs + " => " + show_type(*t.to);
    }
    }
    return "?";
}

TermPtr mk(TermNode node, SourcePos pos) {
    auto t = std::make_shared<Term>();
    t->node = std::move(node);
    t->pos = pos;
    return t;
}

bool is_value(const TermPtr& t) {
    return std::visit(overloaded{
                          [](const Var&) { return true; },
                          [](const Lam&) { return true; },
                          [](const KetT&) { return true; },
                          [](const Letrec&) { return true; },
                          [](const ConsApp& c) {
                              auto ok = [](const TermPtr& s) { return is_value(s); };
                              return std::all_of(c.classical_args.begin(), c.classical_args.end(), ok) &&
                                     std::all_of(c.quantum_args.begin(), c.quantum_args.end(), ok);
                          },
                          [](const auto&) { return false; },
                      },
                      t->node);
}

namespace {

void fv(const TermPtr& t, std::set<std::string>& bound, std::set<std::string>& out) {
    std::visit(overloaded{
                   [&](const Var& v) {
                       if (!bound.count(v.name)) out.insert(v.name);
                   },
                   [&](const Lam& l) {
                       bool fresh = bound.insert(l.param).second;
                       fv(l.body, bound, out);
                       if (fresh) bound.erase(l.param);
                   },
                   [&](const App& a) {
                       fv(a.fun, bound, out);
                       fv(a.arg, bound, out);
                   },
                   [&](const KetT&) {},
                   [&](const GateApp& g) { fv(g.arg, bound, out); },
                   [&](const Meas& m) { fv(m.arg, bound, out); },
                   [&](const TensorT& x) {
                       fv(x.lhs, bound, out);
                       fv(x.rhs, bound, out);
                   },
                   [&](const ConsApp& c) {
                       for (const auto& s : c.classical_args) fv(s, bound, out);
                       for (const auto& s : c.quantum_args) fv(s, bound, out);
                   },
                   [&](const CaseOf& c) {
                       fv(c.scrutinee, bound, out);
                       for (const auto& arm : c.arms) {
                           std::set<std::string> added;
                           for (const auto& x : arm.classical_binders)
                               if (bound.insert(x).second) added.insert(x);
                           for (const auto& x : arm.quantum_binders)
                               if (bound.insert(x).second) added.insert(x);
                           fv(arm.body, bound, out);
                           for (const auto& x : added) bound.erase(x);
                       }
                       if (c.default_body) {
                           bool fresh = bound.insert(c.default_binder).second;
                           fv(c.default_body, bound, out);
                           if (fresh) bound.erase(c.default_binder);
                       }
                   },
                   [&](const Letrec& l) {
                       std::set<std::string> added;
                       if (bound.insert(l.fun).second) added.insert(l.fun);
                       if (bound.insert(l.param).second) added.insert(l.param);
                       fv(l.body, bound, out);
                       for (const auto& x : added) bound.erase(x);
                   },
                   [&](const TickT& k) { fv(k.arg, bound, out); },
               },
               t->node);
}

} // namespace

std::set<std::string> free_vars(const TermPtr& t) {
    std::set<std::string> bound, out;
    fv(t, bound, out);
    return out;
}

std::string fresh_name(const std::string& base, const std::set<std::string>& used) {
    if (!used.count(base)) return base;
    for (int i = 0;; ++i) {
        std::string cand = base + "_" + std::to_string(i);
        if (!used.count(cand)) return cand;
    }
}

namespace {

// Renames a binder when it would capture a free variable of the payload.
struct Subst {
    const std::string& x;
    const TermPtr& v;
    std::set<std::string> v_free;

    TermPtr rename_if_needed(const std::string& binder, TermPtr body, std::string& out_binder,
                             const std::set<std::string>& extra = {}) {
        if (!v_free.count(binder)) {
            out_binder = binder;
            return body;
        }
        std::set<std::string> used = v_free;
        auto bf = free_vars(body);
        used.insert(bf.begin(), bf.end());
        used.insert(extra.begin(), extra.end());
        used.insert(x);
        out_binder = fresh_name(binder, used);
        return subst(body, binder, mk(Var{out_binder}));
    }

    TermPtr go(const TermPtr& t) {
        return std::visit(
            overloaded{
                [&](const Var& w) { return w.name == x ? v : t; },
                [&](const Lam& l) {
                    if (l.param == x) return t;
                    std::string p;
                    TermPtr body = rename_if_needed(l.param, l.body, p);
                    return mk(Lam{p, go(body), l.annotation}, t->pos);
                },
                [&](const App& a) { return mk(App{go(a.fun), go(a.arg)}, t->pos); },
                [&](const KetT&) { return t; },
                [&](const GateApp& g) { return mk(GateApp{g.gate, go(g.arg)}, t->pos); },
                [&](const Meas& m) { return mk(Meas{go(m.arg)}, t->pos); },
                [&](const TensorT& s) { return mk(TensorT{go(s.lhs), go(s.rhs)}, t->pos); },
                [&](const ConsApp& c) {
                    ConsApp out{c.cons, {}, {}};
                    for (const auto& s : c.classical_args) out.classical_args.push_back(go(s));
                    for (const auto& s : c.quantum_args) out.quantum_args.push_back(go(s));
                    return mk(std::move(out), t->pos);
                },
                [&](const CaseOf& c) {
                    CaseOf out{go(c.scrutinee), {}, c.default_binder, nullptr};
                    for (const auto& arm : c.arms) {
                        std::vector<std::string> binders = arm.classical_binders;
                        binders.insert(binders.end(), arm.quantum_binders.begin(),
                                       arm.quantum_binders.end());
                        bool shadows =
                            std::find(binders.begin(), binders.end(), x) != binders.end();
                        if (shadows) {
                            out.arms.push_back(arm);
                            continue;
                        }
                        TermPtr body = arm.body;
                        CaseArm na{arm.cons, {}, {}, nullptr};
                        std::set<std::string> others(binders.begin(), binders.end());
                        for (const auto& bname : arm.classical_binders) {
                            std::string nb;
                            body = rename_if_needed(bname, body, nb, others);
                            na.classical_binders.push_back(nb);
                        }
                        for (const auto& bname : arm.quantum_binders) {
                            std::string nb;
                            body = rename_if_needed(bname, body, nb, others);
                            na.quantum_binders.push_back(nb);
                        }
                        na.body = go(body);
                        out.arms.push_back(std::move(na));
                    }
                    if (c.default_body) {
                        if (c.default_binder == x) {
                            out.default_body = c.default_body;
                        } else {
                            std::string nb;
                            TermPtr body = rename_if_needed(c.default_binder, c.default_body, nb);
                            out.default_binder = nb;
                            out.default_body = go(body);
                        }
                    }
                    return mk(std::move(out), t->pos);
                },
                [&](const Letrec& l) {
                    if (l.fun == x || l.param == x) return t;
                    std::string f = l.fun, p = l.param;
                    TermPtr body = l.body;
                    body = rename_if_needed(l.fun, body, f, {l.param});
                    body = rename_if_needed(l.param, body, p, {f});
                    return mk(Letrec{f, p, go(body), l.annotation}, t->pos);
                },
                [&](const TickT& k) { return mk(TickT{go(k.arg)}, t->pos); },
            },
            t->node);
    }
};

} // namespace

TermPtr subst(const TermPtr& t, const std::string& x, const TermPtr& v) {
    Subst s{x, v, free_vars(v)};
    return s.go(t);
}

namespace {

bool aeq(const TermPtr& a, const TermPtr& b, std::map<std::string, std::string>& ab,
         std::map<std::string, std::string>& ba, double tol);

bool aeq_binder(const std::string& xa, const std::string& xb, const TermPtr& ta, const TermPtr& tb,
                std::map<std::string, std::string>& ab, std::map<std::string, std::string>& ba,
                double tol) {
    auto sab = ab, sba = ba;
    sab[xa] = xb;
    sba[xb] = xa;
    return aeq(ta, tb, sab, sba, tol);
}

bool aeq_binders(const std::vector<std::string>& xs, const std::vector<std::string>& ys,
                 const TermPtr& ta, const TermPtr& tb, std::map<std::string, std::string>& ab,
                 std::map<std::string, std::string>& ba, double tol) {
    if (xs.size() != ys.size()) return false;
    auto sab = ab, sba = ba;
    for (size_t i = 0; i < xs.size(); ++i) {
        sab[xs[i]] = ys[i];
        sba[ys[i]] = xs[i];
    }
    return aeq(ta, tb, sab, sba, tol);
}

bool aeq(const TermPtr& a, const TermPtr& b, std::map<std::string, std::string>& ab,
         std::map<std::string, std::string>& ba, double tol) {
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        overloaded{
            [&](const Var& va) {
                const auto& vb = std::get<Var>(b->node);
                auto it = ab.find(va.name);
                if (it != ab.end()) return it->second == vb.name;
                // both must be free and identical
                return !ba.count(vb.name) && va.name == vb.name;
            },
            [&](const Lam& la) {
                const auto& lb = std::get<Lam>(b->node);
                return aeq_binder(la.param, lb.param, la.body, lb.body, ab, ba, tol);
            },
            [&](const App& xa) {
                const auto& xb = std::get<App>(b->node);
                return aeq(xa.fun, xb.fun, ab, ba, tol) && aeq(xa.arg, xb.arg, ab, ba, tol);
            },
            [&](const KetT& ka) {
                return ka.state.approx_equal(std::get<KetT>(b->node).state, tol);
            },
            [&](const GateApp& ga) {
                const auto& gb = std::get<GateApp>(b->node);
                return ga.gate == gb.gate && aeq(ga.arg, gb.arg, ab, ba, tol);
            },
            [&](const Meas& ma) { return aeq(ma.arg, std::get<Meas>(b->node).arg, ab, ba, tol); },
            [&](const TensorT& sa) {
                const auto& sb = std::get<TensorT>(b->node);
                return aeq(sa.lhs, sb.lhs, ab, ba, tol) && aeq(sa.rhs, sb.rhs, ab, ba, tol);
            },
            [&](const ConsApp& ca) {
                const auto& cb = std::get<ConsApp>(b->node);
                if (ca.cons != cb.cons || ca.classical_args.size() != cb.classical_args.size() ||
                    ca.quantum_args.size() != cb.quantum_args.size())
                    return false;
                for (size_t i = 0; i < ca.classical_args.size(); ++i)
                    if (!aeq(ca.classical_args[i], cb.classical_args[i], ab, ba, tol)) return false;
                for (size_t i = 0; i < ca.quantum_args.size(); ++i)
                    if (!aeq(ca.quantum_args[i], cb.quantum_args[i], ab, ba, tol)) return false;
                return true;
            },
            [&](const CaseOf& ca) {
                const auto& cb = std::get<CaseOf>(b->node);
                if (ca.arms.size() != cb.arms.size()) return false;
                if (!aeq(ca.scrutinee, cb.scrutinee, ab, ba, tol)) return false;
                for (size_t i = 0; i < ca.arms.size(); ++i) {
                    const auto& ra = ca.arms[i];
                    const auto& rb = cb.arms[i];
                    if (ra.cons != rb.cons) return false;
                    std::vector<std::string> xs = ra.classical_binders, ys = rb.classical_binders;
                    xs.insert(xs.end(), ra.quantum_binders.begin(), ra.quantum_binders.end());
                    ys.insert(ys.end(), rb.quantum_binders.begin(), rb.quantum_binders.end());
                    if (!aeq_binders(xs, ys, ra.body, rb.body, ab, ba, tol)) return false;
                }
                if ((ca.default_body == nullptr) != (cb.default_body == nullptr)) return false;
                if (ca.default_body &&
                    !aeq_binder(ca.default_binder, cb.default_binder, ca.default_body,
                                cb.default_body, ab, ba, tol))
                    return false;
                return true;
            },
            [&](const Letrec& la) {
                const auto& lb = std::get<Letrec>(b->node);
                return aeq_binders({la.fun, la.param}, {lb.fun, lb.param}, la.body, lb.body, ab, ba,
                                   tol);
            },
            [&](const TickT& ka) { return aeq(ka.arg, std::get<TickT>(b->node).arg, ab, ba, tol); },
        },
        a->node);
}

} // namespace

bool alpha_eq(const TermPtr& a, const TermPtr& b, double ket_tol) {
    std::map<std::string, std::string> ab, ba;
    return aeq(a, b, ab, ba, ket_tol);
}

// ---------------------------------------------------------------------------
// Pretty printer
// ---------------------------------------------------------------------------

namespace {

std::string show_real(double d) {
    std::ostringstream os;
    os.precision(17);
    os << d;
    return os.str();
}

std::string show_complex(Complex c) {
    if (c.imag() == 0.0) return show_real(c.real());
    // Parenthesized so the sign does not read as a component separator.
    std::string s = "(" + show_real(c.real());
    s += (c.imag() < 0 ? "-" : "+");
    s += show_real(std::abs(c.imag()));
    s += "i)";
    return s;
}

std::string show_ket(const QState& q) {
    std::ostringstream os;
    os << "ket[";
    bool first = true;
    for (Eigen::Index i = 0; i < q.dim(); ++i) {
        Complex c = q.amplitudes()[i];
        if (c == Complex(0, 0)) continue;
        if (c.imag() == 0.0 && c.real() < 0.0) {
            os << (first ? "-" : " - ");
            c = -c;
        } else if (!first) {
            os << " + ";
        }
        first = false;
        std::string bits;
        for (int b = q.n_qubits() - 1; b >= 0; --b) bits += ((i >> b) & 1) ? '1' : '0';
        os << show_complex(c) << "|" << bits << ">";
    }
    os << "]";
    return os.str();
}

// Precedence levels: 0 = lam/letrec/case bodies, 1 = application, 2 = atoms.
std::string pp(const TermPtr& t, int level);

std::string pp_atom(const TermPtr& t) { return pp(t, 2); }

std::string pp(const TermPtr& t, int level) {
    auto wrap = [&](int mine, const std::string& s) {
        return mine < level ? "(" + s + ")" : s;
    };
    return std::visit(
        overloaded{
            [&](const Var& v) { return v.name; },
            [&](const Lam& l) {
                std::string body = "lam " + l.param + ". " + pp(l.body, 0);
                if (l.annotation) return "(" + body + " : " + show_type(*l.annotation) + ")";
                return wrap(0, body);
            },
            [&](const App& a) {
                return wrap(1, pp(a.fun, 1) + " " + pp_atom(a.arg));
            },
            [&](const KetT& k) { return show_ket(k.state); },
            [&](const GateApp& g) { return wrap(1, g.gate + " " + pp_atom(g.arg)); },
            [&](const Meas& m) { return std::string("meas(") + pp(m.arg, 0) + ")"; },
            [&](const TensorT& s) {
                return "tensor(" + pp(s.lhs, 0) + ", " + pp(s.rhs, 0) + ")";
            },
            [&](const ConsApp& c) {
                if (c.classical_args.empty() && c.quantum_args.empty()) return c.cons;
                std::string s = c.cons + "(";
                for (size_t i = 0; i < c.classical_args.size(); ++i) {
                    if (i) s += ", ";
                    s += pp(c.classical_args[i], 0);
                }
                s += ";";
                for (size_t i = 0; i < c.quantum_args.size(); ++i) {
                    s += (i ? ", " : " ");
                    s += pp(c.quantum_args[i], 0);
                }
                s += ")";
                return s;
            },
            [&](const CaseOf& c) {
                std::string s = "case " + pp(c.scrutinee, 0) + " of";
                for (const auto& arm : c.arms) {
                    s += " | " + arm.cons;
                    if (!arm.classical_binders.empty() || !arm.quantum_binders.empty()) {
                        s += "(";
                        for (size_t i = 0; i < arm.classical_binders.size(); ++i) {
                            if (i) s += ", ";
                            s += arm.classical_binders[i];
                        }
                        s += ";";
                        for (size_t i = 0; i < arm.quantum_binders.size(); ++i) {
                            s += (i ? ", " : " ");
                            s += arm.quantum_binders[i];
                        }
                        s += ")";
                    }
                    s += " -> " + pp(arm.body, 1);
                }
                if (c.default_body)
                    s += " | " + c.default_binder + " -> " + pp(c.default_body, 1);
                return wrap(0, s);
            },
            [&](const Letrec& l) {
                std::string head = l.annotation
                                       ? "letrec (" + l.fun + " : " + show_type(*l.annotation) + ") "
                                       : "letrec " + l.fun + " ";
                return wrap(0, head + l.param + " = " + pp(l.body, 0));
            },
            [&](const TickT& k) { return std::string("tick(") + pp(k.arg, 0) + ")"; },
        },
        t->node);
}

} // namespace

std::string pretty(const TermPtr& t) { return pp(t, 0); }

// ---------------------------------------------------------------------------
// Signature table
// ---------------------------------------------------------------------------

SigTable SigTable::builtins() {
    SigTable t;
    t.declare_type("Q", false);
    t.declare_type("Out", false);
    t.declare_cons({"inj0", {}, {"Q"}, "Out"});
    t.declare_cons({"inj1", {}, {"Q"}, "Out"});
    return t;
}

void SigTable::declare_type(const std::string& name, bool classical) {
    if (types_.count(name)) fail("DuplicateType", "basic type '" + name + "' already declared");
    types_[name] = {classical, {}};
}

void SigTable::declare_cons(const ConsSignature& sig) {
    auto it = types_.find(sig.result);
    if (it == types_.end())
        fail("UnknownType", "constructor '" + sig.name + "' returns undeclared type '" +
                                sig.result + "'");
    if (it->second.classical && !sig.quantum_args.empty())
        fail("ClassicalConstructorWithQuantumArgs",
             "constructor '" + sig.name + "' of classical type '" + sig.result +
                 "' cannot take quantum arguments");
    if (cons_.count(sig.name))
        fail("DuplicateConstructor", "constructor '" + sig.name + "' already declared");
    for (const auto& a : sig.classical_args) {
        if (!has_type(a) || !is_classical(a))
            fail("UnknownType", "constructor '" + sig.name + "': '" + a +
                                    "' is not a classical basic type");
    }
    for (const auto& a : sig.quantum_args) {
        if (!has_type(a) || is_classical(a))
            fail("UnknownType",
                 "constructor '" + sig.name + "': '" + a + "' is not a quantum basic type");
    }
    cons_[sig.name] = sig;
    it->second.constructors.push_back(sig.name);
}

bool SigTable::has_type(const std::string& name) const { return types_.count(name) > 0; }

bool SigTable::is_classical(const std::string& name) const {
    auto it = types_.find(name);
    if (it == types_.end()) fail("UnknownType", "unknown basic type '" + name + "'");
    return it->second.classical;
}

bool SigTable::has_cons(const std::string& name) const { return cons_.count(name) > 0; }

const ConsSignature& SigTable::cons(const std::string& name) const {
    auto it = cons_.find(name);
    if (it == cons_.end()) fail("UnknownConstructor", "unknown constructor '" + name + "'");
    return it->second;
}

const std::vector<std::string>& SigTable::constructors(const std::string& type_name) const {
    auto it = types_.find(type_name);
    if (it == types_.end()) fail("UnknownType", "unknown basic type '" + type_name + "'");
    return it->second.constructors;
}

} // namespace qetlab
