#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qetlab/corpus.hpp"
#include "qetlab/cs_parser.hpp"
#include "qetlab/cs_typecheck.hpp"
#include "qetlab/denote.hpp"
#include "qetlab/parser.hpp"
#include "qetlab/pars.hpp"
#include "qetlab/qet.hpp"
#include "qetlab/refinement.hpp"
#include "qetlab/rty_parser.hpp"
#include "qetlab/soundness.hpp"
#include "qetlab/typecheck.hpp"

using json = nlohmann::json;
using namespace qetlab;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("IoError", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json error_json(const Error& e) {
    json j;
    j["error"] = e.kind();
    j["message"] = e.what();
    if (!e.rule().empty()) j["rule"] = e.rule();
    if (e.pos().line > 0) {
        j["line"] = e.pos().line;
        j["col"] = e.pos().col;
    }
    return j;
}

json dist_json(const WeightedDist& d) {
    json arr = json::array();
    for (const auto& e : d.entries) arr.push_back({{"term", pretty(e.term)}, {"prob", e.prob}});
    return arr;
}

json value_json(ExtReal v) {
    if (v.is_inf()) return "inf";
    return v.v;
}

json compare_json(const ComparisonReport& r) {
    json j;
    j["program"] = r.program_id;
    j["tolerance"] = r.tolerance;
    j["operational"] = r.operational;
    j["depth"] = r.depth;
    j["residual_mass"] = r.residual_mass;
    j["pruned_mass"] = r.pruned_mass;
    j["operational_divergent"] = r.operational_divergent;
    j["denotational"] = value_json(r.denotational);
    j["budget"] = r.budget;
    j["denotational_converged"] = r.denot_converged;
    j["gap"] = std::isinf(r.gap) ? json("inf") : json(r.gap);
    j["pass"] = r.pass;
    return j;
}

std::uint64_t env_seed(std::uint64_t flag_value, bool flag_set) {
    if (flag_set) return flag_value;
    if (const char* s = std::getenv("QETLAB_SEED")) return std::strtoull(s, nullptr, 10);
    return flag_value;
}

CostStructurePtr pick_cs(const std::string& name) {
    if (name == "rplus") return instance_rplus();
    if (name == "unit") return instance_unit_forgetful();
    fail("UsageError", "unknown cost structure '" + name + "' (rplus|unit)");
}

KegelspitzePtr pick_carrier(const std::string& name) {
    if (name == "rplus") return kegelspitze_rplus();
    if (name == "unit") return kegelspitze_unit();
    fail("UsageError", "unknown cost structure '" + name + "' (rplus|unit)");
}

// The continuation for compare/transform: `zero` or a .csl file.
CSTermPtr load_continuation(const std::string& spec, const TypedProgram& prog) {
    if (spec.empty() || spec == "zero")
        return zero_continuation(qet_translate_type(prog.main_type));
    CSProgram cp = parse_cs_program(read_file(spec));
    return cp.main;
}

int cmd_check(const std::string& file, const std::string& type_str, bool as_json) {
    Program prog = parse_program(read_file(file));
    TypePtr want;
    if (!type_str.empty()) want = parse_type_string(type_str, prog.sigs);
    TypedProgram tp = check_program(prog, want);
    if (as_json) {
        json j;
        j["ok"] = true;
        j["type"] = show_type(*tp.main_type);
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "ok: main : " << show_type(*tp.main_type) << "\n";
    }
    return 0;
}

int cmd_run(const std::string& file, int depth, bool as_json, bool json_ast) {
    Program prog = parse_program(read_file(file));
    if (json_ast) {
        json j;
        j["main"] = pretty(prog.main);
        if (prog.main_annotation) j["type"] = show_type(*prog.main_annotation);
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    TypedProgram tp = check_program(prog);
    RunReport rep = run(tp.main, depth, prog.gates);
    if (as_json) {
        json j;
        j["depth"] = rep.depth;
        j["accumulated_cost"] = rep.accumulated_cost;
        j["live"] = dist_json(rep.live);
        j["normal_forms"] = dist_json(rep.normal_forms);
        j["pruned_mass"] = rep.pruned_mass;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "depth " << rep.depth << ", cost >= " << rep.accumulated_cost
                  << ", terminal mass " << rep.normal_forms.mass() << ", live mass "
                  << rep.live.mass() << "\n";
        for (const auto& e : rep.normal_forms.entries)
            std::cout << "  " << e.prob << " : " << pretty(e.term) << "\n";
    }
    return 0;
}

int cmd_sample(const std::string& file, std::uint64_t seed, int trials, int step_budget,
               bool as_json) {
    Program prog = parse_program(read_file(file));
    TypedProgram tp = check_program(prog);
    SampleReport rep = sample(tp.main, seed, trials, prog.gates, step_budget);
    if (as_json) {
        json j;
        j["seed"] = rep.seed;
        j["trials"] = rep.trials;
        j["completed"] = rep.completed;
        j["guard_tripped"] = rep.guard_tripped;
        j["mean_cost"] = rep.mean_cost;
        json outs = json::object();
        for (const auto& [term, count] : rep.outcomes) outs[term] = count;
        j["outcomes"] = outs;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "trials " << rep.trials << ", mean cost " << rep.mean_cost << "\n";
        for (const auto& [term, count] : rep.outcomes)
            std::cout << "  " << count << " x " << term << "\n";
        if (rep.guard_tripped)
            std::cout << "  (" << rep.guard_tripped << " trials hit the step budget)\n";
    }
    return 0;
}

int cmd_transform(const std::string& file, const std::string& continuation,
                  const std::string& out_path) {
    Program prog = parse_program(read_file(file));
    TypedProgram tp = check_program(prog);
    CSTermPtr k = load_continuation(continuation, tp);
    QetResult res = qet_translate_term(tp.main, k, prog.sigs, prog.gates);
    CSTermPtr elaborated =
        cs_check({}, res.term, CSType::k(), prog.sigs, prog.gates, KMode::Abstract);
    std::string text = "main : K = " + cs_pretty(elaborated) + "\n";
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
    } else {
        std::ofstream out(out_path);
        if (!out) fail("IoError", "cannot write '" + out_path + "'");
        out << text;
    }
    return 0;
}

int cmd_denote(const std::string& file, const std::string& cs_name, int budget, double tol,
               bool as_json) {
    CSProgram cp = parse_cs_program(read_file(file));
    CostStructurePtr cs = pick_cs(cs_name);
    KMode mode = cs_name == "rplus" ? KMode::RPlus : KMode::Abstract;
    CSTermPtr term = cp.main;
    CSTypePtr ty;
    if (cp.main_annotation) {
        term = cs_check({}, cp.main, cp.main_annotation, cp.sigs, cp.gates, mode);
        ty = cp.main_annotation;
    } else {
        auto [et, t] = cs_infer({}, cp.main, cp.sigs, cp.gates, mode);
        term = et;
        ty = t;
    }
    DenoteCtx ctx;
    ctx.cs = cs;
    ctx.gates = &cp.gates;
    ctx.sigs = &cp.sigs;
    bool costy = ty->kind == CSType::Kind::K || ty->kind == CSType::Kind::RInf;
    if (!costy) {
        if (as_json) {
            json j;
            j["type"] = show_cs_type(*ty);
            j["value"] = "non-cost value";
            std::cout << j.dump(2) << "\n";
        } else {
            std::cout << "main : " << show_cs_type(*ty) << " (not a closed cost term)\n";
        }
        return 0;
    }
    ClosedCostResult res = denote_closed_cost(term, {}, ctx, budget, tol);
    if (as_json) {
        json j;
        j["type"] = show_cs_type(*ty);
        j["value"] = value_json(res.value);
        j["converged"] = res.converged;
        j["budget_used"] = res.budget_used;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "value " << (res.value.is_inf() ? "inf" : std::to_string(res.value.v))
                  << (res.converged ? " (converged, budget " : " (unconverged, budget ")
                  << res.budget_used << ")\n";
    }
    return 0;
}

int cmd_compare(const std::string& file, const std::string& continuation,
                const std::string& cs_name, int depth, int budget, double tol, bool as_json) {
    Program prog = parse_program(read_file(file));
    ComparisonReport cost_rep =
        check_expected_cost(prog, {}, depth, budget, tol, file);
    bool pass = cost_rep.pass;
    json j;
    j["expected_cost"] = compare_json(cost_rep);
    if (!continuation.empty() && continuation != "zero") {
        CSProgram cp = parse_cs_program(read_file(continuation), prog.sigs, prog.gates);
        Program merged = prog;
        merged.sigs = cp.sigs;
        merged.gates = cp.gates;
        ComparisonReport val_rep = check_expected_value(merged, {}, cp.main, pick_carrier(cs_name),
                                                        depth, budget, tol, file);
        j["expected_value"] = compare_json(val_rep);
        pass = pass && val_rep.pass;
    }
    j["pass"] = pass;
    if (as_json) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << (pass ? "PASS" : "FAIL") << " " << file << ": ecost op "
                  << cost_rep.operational << " vs den "
                  << (cost_rep.denotational.is_inf() ? std::string("inf")
                                                     : std::to_string(cost_rep.denotational.v))
                  << " (gap " << cost_rep.gap << ")\n";
        if (j.contains("expected_value")) {
            const auto& ev = j["expected_value"];
            std::cout << "  evalue op " << ev["operational"] << " vs den " << ev["denotational"]
                      << " (gap " << ev["gap"] << ")\n";
        }
    }
    return pass ? 0 : 1;
}

int cmd_verify_bound(const std::string& file, const std::string& rty_path,
                     const std::string& cs_name, int samples, std::uint64_t seed, bool as_json) {
    CSProgram cp = parse_cs_program(read_file(file));
    RtySpec spec = parse_rty(read_file(rty_path), cp.sigs, cp.gates);

    RefEnv env;
    env.sigs = &cp.sigs;
    env.gates = &cp.gates;
    env.cs = pick_cs(cs_name);
    OracleParams params;
    params.samples = samples;
    params.seed = seed;
    params.functions = spec.functions;

    RefContext ctx;
    Verdict v = check_refined(ctx, cp.main, spec.type, env, params);
    std::string kind = v.kind == Verdict::Kind::VerifiedSyntactic ? "VerifiedSyntactic"
                       : v.kind == Verdict::Kind::NotFalsified    ? "NotFalsified"
                                                                  : "Falsified";
    if (as_json) {
        json j;
        j["verdict"] = kind;
        j["samples"] = v.samples;
        j["seed"] = seed;
        if (v.witness) {
            json w;
            w["seed"] = v.witness->seed;
            w["sample_index"] = v.witness->sample_index;
            w["violated"] = show_formula(v.witness->violated);
            w["valuation"] = v.witness->rendered;
            j["witness"] = w;
        }
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << kind;
        if (v.kind == Verdict::Kind::NotFalsified) std::cout << " (" << v.samples << " samples)";
        std::cout << "\n";
        if (v.witness) {
            std::cout << "  violated: " << show_formula(v.witness->violated) << "\n";
            for (const auto& [name, val] : v.witness->rendered)
                std::cout << "  " << name << " = " << val << "\n";
        }
    }
    return v.kind == Verdict::Kind::Falsified ? 1 : 0;
}

int cmd_corpus(const std::string& dir, bool as_json) {
    json arr = json::array();
    for (const auto& e : corpus()) {
        json j;
        j["name"] = e.name;
        j["file"] = dir + "/" + e.file;
        if (!e.expect_error.empty()) j["expect_error"] = e.expect_error;
        if (e.expected_ecost >= 0) j["expected_ecost"] = e.expected_ecost;
        if (!e.continuation_file.empty()) {
            j["continuation"] = dir + "/" + e.continuation_file;
            j["expected_evalue"] = e.expected_evalue;
        }
        arr.push_back(j);
    }
    if (as_json) {
        std::cout << arr.dump(2) << "\n";
    } else {
        for (const auto& j : arr) std::cout << j.dump() << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qetlab: expected-cost analysis for a higher-order quantum language"};
    app.require_subcommand(1);

    std::string file, type_str, continuation, out_path, cs_name = "rplus", rty_path,
                     corpus_dir = "corpus";
    int depth = 60, budget = 64, trials = 10000, samples = 1000, step_budget = 1000000;
    double tol = 1e-6;
    std::uint64_t seed = 20240101;
    bool as_json = false, json_ast = false;
    bool seed_set = false;

    auto add_json = [&](CLI::App* c) { c->add_flag("--json", as_json, "machine-readable output"); };

    auto* check = app.add_subcommand("check", "parse and type-check a program");
    check->add_option("file", file)->required();
    check->add_option("--type", type_str, "expected type, e.g. \"Q -o Q\"");
    add_json(check);

    auto* runc = app.add_subcommand("run", "evaluate the distribution semantics");
    runc->add_option("file", file)->required();
    runc->add_option("--depth", depth, "lifted step bound");
    runc->add_flag("--json-ast", json_ast, "dump the parsed AST and exit");
    add_json(runc);

    auto* samplec = app.add_subcommand("sample", "Monte-Carlo sampling of runs");
    samplec->add_option("file", file)->required();
    samplec->add_option("--trials", trials);
    samplec->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });
    samplec->add_option("--step-budget", step_budget);
    add_json(samplec);

    auto* transform = app.add_subcommand("transform", "expectation-transform a program");
    transform->add_option("file", file)->required();
    transform->add_option("--continuation", continuation, "zero or a .csl file");
    transform->add_option("-o,--output", out_path, "output path (default stdout)");

    auto* denotec = app.add_subcommand("denote", "denote a cost-structure term");
    denotec->add_option("file", file)->required();
    denotec->add_option("--cost-structure", cs_name, "rplus|unit");
    denotec->add_option("--budget", budget);
    denotec->add_option("--tol", tol);
    add_json(denotec);

    auto* comparec = app.add_subcommand("compare", "operational vs denotational expectations");
    comparec->add_option("file", file)->required();
    comparec->add_option("--continuation", continuation, "a .csl continuation for evalue");
    comparec->add_option("--cost-structure", cs_name, "carrier for the value comparison");
    comparec->add_option("--depth", depth);
    comparec->add_option("--budget", budget);
    comparec->add_option("--tol", tol);
    add_json(comparec);

    auto* verify = app.add_subcommand("verify-bound", "check a refinement-type bound");
    verify->add_option("file", file)->required();
    verify->add_option("--type", rty_path, "a .rty refinement specification")->required();
    verify->add_option("--cost-structure", cs_name, "rplus|unit");
    verify->add_option("--samples", samples);
    verify->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });
    add_json(verify);

    auto* corpusc = app.add_subcommand("corpus", "list the bundled example corpus");
    corpusc->add_option("--dir", corpus_dir, "corpus directory");
    add_json(corpusc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
            return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        seed = env_seed(seed, seed_set);
        if (check->parsed()) return cmd_check(file, type_str, as_json);
        if (runc->parsed()) return cmd_run(file, depth, as_json, json_ast);
        if (samplec->parsed()) return cmd_sample(file, seed, trials, step_budget, as_json);
        if (transform->parsed()) return cmd_transform(file, continuation, out_path);
        if (denotec->parsed()) return cmd_denote(file, cs_name, budget, tol, as_json);
        if (comparec->parsed())
            return cmd_compare(file, continuation, cs_name, depth, budget, tol, as_json);
        if (verify->parsed())
            return cmd_verify_bound(file, rty_path, cs_name, samples, seed, as_json);
        if (corpusc->parsed()) return cmd_corpus(corpus_dir, as_json);
    } catch (const Error& e) {
        if (e.kind() == "UsageError" || e.kind() == "IoError") {
            std::cerr << e.kind() << ": " << e.what() << "\n";
            return 2;
        }
        std::cerr << error_json(e).dump(2) << "\n";
        return 1;
    }
    return 2;
}
