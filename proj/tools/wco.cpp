#include "wco/oracle.hpp"
#include "wco/report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

namespace {

using namespace wco;

InstanceConfig resolve_config(const std::string& config_path, const std::string& preset) {
    if (!preset.empty()) return load_preset(preset);
    if (config_path.empty()) throw config_error("pass a config file or --preset NAME");
    return load_config_file(config_path);
}

void apply_overrides(Policy& p, const std::string& radius, std::uint64_t trials,
                     std::uint64_t seed, bool trials_set, bool seed_set) {
    if (!radius.empty()) {
        Lexer lx(radius);
        Expr e = parse_expr(lx, "n");
        Scalar v = eval_expr(e, Scalar(Rat(0)));
        if (!v.is_rational() || v.sign() < 0) throw config_error("bad --radius value");
        p.radius = v.rational();
    }
    if (trials_set) p.trials = trials;
    if (seed_set) p.seed = seed;
    if (const char* env = std::getenv("WCO_BUDGET")) {
        try {
            p.budget = std::stoull(env);
        } catch (...) {
            throw config_error("bad WCO_BUDGET value");
        }
    }
}

void emit(const Json& j, const std::string& text, const std::string& format,
          const std::string& out) {
    std::string payload = format == "json" ? j.dump(2) + "\n" : text;
    if (out.empty()) {
        std::cout << payload;
    } else {
        std::ofstream f(out);
        if (!f) throw config_error("cannot write output file '" + out + "'");
        f << payload;
    }
}

Json run_oracle_checks(const OperatorInstance& inst, const ClassificationReport& report,
                       const Policy& policy, const Rat& radius) {
    Json out;
    std::vector<std::string> skipped;
    Scalar emp = empirical_norm(inst, radius, policy.trials, policy.seed, policy);
    out["empirical_norm"] = emp.approx();
    if (emp.exact()) out["empirical_norm_exact"] = emp.str();
    SigmaResult sg = sigma(inst, radius, policy);
    out["partial_sup"] = sg.partial_sup.approx();
    bool attains = emp.exact() && sg.partial_sup.exact() ? emp == sg.partial_sup
                                                         : std::abs(emp.approx() -
                                                                    sg.partial_sup.approx()) <=
                                                               1e-9;
    out["empirical_attains_partial_sup"] = attains;
    if (!(emp <= sg.partial_sup))
        throw std::logic_error("empirical norm exceeded the ratio supremum on the ball");

    try {
        auto kf = kernel_search(inst, radius, policy);
        out["kernel_found"] = kf.has_value();
        if (kf) {
            FiniteFunction img = apply(inst, *kf, radius, policy);
            if (!img.is_zero())
                throw std::logic_error("kernel search returned a non-kernel element");
            out["kernel_spike_at"] = kf->support[0].str(&inst.space());
            const Verdict* inj = report.find("injective");
            out["kernel_vs_injective"] =
                inj && inj->status == Status::holds ? "refutes" : "consistent";
            if (inj && inj->status == Status::holds && inj->mode == Mode::exact)
                throw std::logic_error("kernel element found for an exactly-injective verdict");
        }
    } catch (const incomplete_preimage_error& e) {
        skipped.push_back(std::string("kernel_search: ") + e.what());
    }

    try {
        Scalar eps(Rat(1, 2));
        auto bb = bounded_below_check(inst, eps, radius, policy.trials, policy.seed, policy);
        out["bounded_below_min_ratio"] = bb.min_ratio;
        out["bounded_below_violator_found"] = bb.violator.has_value();
    } catch (const incomplete_preimage_error& e) {
        skipped.push_back(std::string("bounded_below_check: ") + e.what());
    }

    // point-evaluation bound and projector contractivity over random functions
    {
        auto ball = inst.space().ball(radius, policy.budget);
        bool all_ok = true;
        std::uint64_t pairs = std::max<std::uint64_t>(policy.trials, 8);
        for (std::uint64_t i = 0; i < pairs; ++i) {
            std::mt19937_64 gen(policy.seed ^ (0x6a09e667f3bcc909ULL * (i + 1)));
            FiniteFunction f = random_unit_function(inst, ball.vertices, gen);
            const Vertex& v = ball.vertices[gen() % ball.vertices.size()];
            all_ok = all_ok && point_eval_bound_check(inst, f, v);
        }
        out["point_eval_bound_ok"] = all_ok;
        if (!all_ok) throw std::logic_error("point-evaluation bound failed");
    }
    try {
        Rat n = radius / 2;
        auto pc = projector_norm_check(inst, n, radius, std::min<std::uint64_t>(policy.trials, 32),
                                       policy.seed, policy);
        out["projector_contraction_ok"] = pc.contraction_ok && pc.complement_ok;
        out["projector_family_residual"] = pc.family_residual_sup;
        out["projector_tail_bound"] = pc.tail_bound;
    } catch (const incomplete_preimage_error& e) {
        skipped.push_back(std::string("projector_norm_check: ") + e.what());
    }
    if (!skipped.empty()) out["skipped_checks"] = skipped;
    return out;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"weighted composition operators on discrete weighted spaces"};
    app.require_subcommand(1);

    std::string config_path, preset, radius, format = "text", outfile;
    std::uint64_t trials = 0, seed = 0;

    auto* classify_cmd = app.add_subcommand("classify", "classify an operator instance");
    classify_cmd->add_option("config", config_path, "config file");
    classify_cmd->add_option("--preset", preset, "preset name");
    classify_cmd->add_option("--radius", radius, "scan radius override");
    classify_cmd->add_option("--format", format, "json or text")
        ->check(CLI::IsMember({"json", "text"}));
    classify_cmd->add_option("--out", outfile, "write the report to a file");

    auto* oracle_cmd = app.add_subcommand("oracle", "brute-force truncation checks");
    oracle_cmd->add_option("config", config_path, "config file");
    oracle_cmd->add_option("--preset", preset, "preset name");
    oracle_cmd->add_option("--radius", radius, "truncation radius");
    auto* topt = oracle_cmd->add_option("--trials", trials, "random test functions");
    auto* sopt = oracle_cmd->add_option("--seed", seed, "random seed");
    oracle_cmd->add_option("--format", format, "json or text")
        ->check(CLI::IsMember({"json", "text"}));
    oracle_cmd->add_option("--out", outfile, "write the report to a file");

    auto* presets_cmd = app.add_subcommand("presets", "preset registry");
    std::string presets_action = "list";
    presets_cmd->add_option("action", presets_action)->check(CLI::IsMember({"list"}));

    CLI11_PARSE(app, argc, argv);

    if (presets_cmd->parsed()) {
        for (const auto& p : presets())
            std::cout << p.name << "\t" << p.summary << "\n";
        return 0;
    }

    InstanceConfig cfg = resolve_config(config_path, preset);
    apply_overrides(cfg.policy, radius, trials, seed, topt->count() > 0, sopt->count() > 0);
    OperatorInstance inst = cfg.build();

    auto t0 = std::chrono::steady_clock::now();
    ClassificationReport report = classify(inst, cfg.policy);
    if (auto eta = cfg.eta()) {
        report.verdicts.push_back(classify_fredholm_perturbation(inst, *eta, cfg.policy));
    }

    std::optional<Json> oracle_section;
    if (oracle_cmd->parsed()) {
        Rat r = cfg.policy.radius ? *cfg.policy.radius
                                  : cfg.policy.scan_radius(inst.space(), inst.cells().has_value());
        if (inst.space().kind == SpaceKind::tree && r > 16) r = 16;  // enumerated balls only
        oracle_section = run_oracle_checks(inst, report, cfg.policy, r);
    }
    auto t1 = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

    Json j = report_json(cfg, report, oracle_section, cfg.policy, ms);
    emit(j, report_text(report, oracle_section), format, outfile);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const wco::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const wco::rule_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const wco::contradiction_error& e) {
        std::cerr << "assertion contradiction: " << e.what() << "\n";
        return 3;
    } catch (const wco::budget_error& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
