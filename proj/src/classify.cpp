#include "wco/classify.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace wco {

const char* to_string(Status s) {
    switch (s) {
        case Status::holds: return "holds";
        case Status::fails: return "fails";
        case Status::inconclusive: return "inconclusive";
    }
    return "?";
}

const char* to_string(Mode m) {
    return m == Mode::exact ? "exact" : "numeric";
}

const Verdict* ClassificationReport::find(const std::string& property) const {
    for (const auto& v : verdicts)
        if (v.property == property) return &v;
    return nullptr;
}

namespace {

struct XVal {
    bool known = false;
    bool infinite = false;
    Scalar value{Rat(0)};
    std::string source;
    std::optional<Vertex> witness;
    std::string approach;
};

/// Everything the classifiers share, resolved once per instance.
struct Ctx {
    const OperatorInstance& inst;
    const Policy& policy;
    Ctx(const OperatorInstance& i, const Policy& p) : inst(i), policy(p) {}

    bool finite = false;
    Rat R;  // scan radius

    std::optional<bool> surjective, injective_map, finite_range;
    std::optional<Vertex> missing_vertex;  // not in phi(T)
    std::string map_source;

    SigmaResult sigma_scan;
    LimitEstimate sigma_est, xi_est, ess_est;
    std::optional<LimitEstimate> ess_limsup;

    XVal sigma;        // sup of the ratio
    XVal xi;           // ratio limit (when it exists)
    bool xi_nonexistent_exact = false;
    XVal ess;          // essential norm (tail limit)
    XVal inf_offzero;  // inf of the ratio off psi's zeros
    XVal beta_all, beta_offzero;
    std::optional<Scalar> beta_all_lb, beta_offzero_lb;
    std::string beta_lb_source;

    enum class Z { empty, finite, infinite, unknown } z = Z::unknown;
    std::vector<Vertex> zeros;
    bool zeros_listed = false;
    std::string z_source;

    std::optional<bool> mu_typical;
    std::optional<bool> psi_vanishes;  // lim mu|psi| = 0
    std::optional<bool> psi_stays_large;

    std::optional<bool> fibers_bounded, fibers_singleton_ae, image_cofinite;
    std::vector<Vertex> image_complement;
    bool image_complement_listed = false;
};

std::string fmt_scalar(const Scalar& s) { return s.str(); }

std::string fmt_vertex(const Space& sp, const Vertex& v) { return v.str(&sp); }

void resolve_finite_space(Ctx& c) {
    const Space& s = c.inst.space();
    std::size_t n = s.table->size();
    std::vector<std::size_t> phi(n);
    std::vector<bool> hit(n, false);
    bool inj = true;
    for (std::size_t i = 0; i < n; ++i) {
        phi[i] = c.inst.phi().eval(s, Vertex::finite(i)).idx();
        if (hit[phi[i]]) inj = false;
        hit[phi[i]] = true;
    }
    bool surj = std::all_of(hit.begin(), hit.end(), [](bool b) { return b; });
    c.surjective = surj;
    c.injective_map = inj;
    c.finite_range = true;
    c.map_source = "finite-space scan";
    if (!surj)
        for (std::size_t i = 0; i < n; ++i)
            if (!hit[i]) {
                c.missing_vertex = Vertex::finite(i);
                break;
            }

    c.zeros_listed = true;
    for (std::size_t i = 0; i < n; ++i) {
        Complex pv = c.inst.psi().eval(s, Vertex::finite(i));
        bool zero = pv.exact() ? pv.is_zero()
                               : pv.abs_sq().approx() <= c.policy.zero_tol * c.policy.zero_tol;
        if (zero) c.zeros.push_back(Vertex::finite(i));
    }
    c.z = c.zeros.empty() ? Ctx::Z::empty : Ctx::Z::finite;
    c.z_source = "finite-space scan";

    // sup / inf / beta exhaustively
    Scalar sup(Rat(0));
    std::optional<Vertex> sup_at;
    std::optional<Scalar> infoff;
    std::optional<Vertex> inf_at;
    std::vector<Scalar> rat(n, Scalar(Rat(0)));
    for (std::size_t i = 0; i < n; ++i) {
        rat[i] = ratio(c.inst, Vertex::finite(i));
        if (sup < rat[i]) {
            sup = rat[i];
            sup_at = Vertex::finite(i);
        }
        if (rat[i].sign() > 0 && (!infoff || rat[i] < *infoff)) {
            infoff = rat[i];
            inf_at = Vertex::finite(i);
        }
    }
    c.sigma = {true, false, sup, "finite-space", sup_at, ""};
    if (infoff)
        c.inf_offzero = {true, false, *infoff, "finite-space", inf_at, ""};
    else
        c.inf_offzero = {true, true, Scalar(Rat(0)), "finite-space (psi vanishes everywhere)",
                         std::nullopt, ""};

    // beta: min over w of max over the fiber
    auto beta_of = [&](bool offzero) -> XVal {
        std::optional<Scalar> best;
        std::optional<Vertex> at;
        for (std::size_t w = 0; w < n; ++w) {
            if (offzero) {
                bool wz = std::find(c.zeros.begin(), c.zeros.end(), Vertex::finite(w)) !=
                          c.zeros.end();
                if (wz) continue;
            }
            Scalar fib(Rat(0));
            for (std::size_t v = 0; v < n; ++v)
                if (phi[v] == phi[w] && fib < rat[v]) fib = rat[v];
            if (!best || fib < *best) {
                best = fib;
                at = Vertex::finite(w);
            }
        }
        if (!best) return {true, true, Scalar(Rat(0)), "finite-space (no index)", std::nullopt, ""};
        return {true, false, *best, "finite-space", at, ""};
    };
    c.beta_all = beta_of(false);
    c.beta_offzero = beta_of(true);

    c.mu_typical = false;  // no tail
    c.psi_vanishes = true;
    c.psi_stays_large = false;
    c.fibers_bounded = true;
    std::size_t multi = 0;
    for (std::size_t w = 0; w < n; ++w) {
        std::size_t count = 0;
        for (std::size_t v = 0; v < n; ++v)
            if (phi[v] == phi[w]) ++count;
        if (count > 1) ++multi;
    }
    c.fibers_singleton_ae = true;  // finitely many fibers overall
    (void)multi;
    c.image_cofinite = true;
    c.image_complement_listed = true;
    for (std::size_t i = 0; i < n; ++i)
        if (!hit[i]) c.image_complement.push_back(Vertex::finite(i));

    // xi / ess: finite spaces have no tail
    c.xi = {true, false, Scalar(Rat(0)), "finite-space (vacuous tail)", std::nullopt, ""};
    c.ess = {true, false, Scalar(Rat(0)), "finite-space", std::nullopt, ""};
}

void resolve_infinite_space(Ctx& c) {
    const OperatorInstance& inst = c.inst;
    const AssertedFacts& f = inst.facts();
    const RadialCert* cert = inst.cert();
    const Space& s = inst.space();

    c.surjective = f.surjective;
    c.injective_map = f.injective;
    c.finite_range = f.finite_range;
    c.map_source = "declared facts";
    if (cert) {
        auto inj = cert->injective();
        if (inj) {
            if (c.injective_map && *c.injective_map != *inj)
                throw contradiction_error("asserted injectivity contradicts the map structure");
            c.injective_map = inj;
        }
        auto cofinite = cert->image_complement_finite();
        if (cofinite && !*cofinite) {
            if (c.surjective && *c.surjective)
                throw contradiction_error(
                    "asserted surjectivity contradicts the infinite image complement");
            c.surjective = false;
        }
    }
    // a concrete missing vertex for certified non-surjectivity
    if (c.surjective && !*c.surjective) {
        const auto& st = inst.structure();
        auto probe = [&](const Vertex& w) {
            try {
                auto q = preimages(s, inst.phi(), w, Rat(32), c.policy.budget);
                return q.complete && q.members.empty() && !q.all_of_space;
            } catch (const budget_error&) {
                return false;
            }
        };
        if (st.identity_off_finite) {
            for (const auto& e : st.exceptional) {
                if (probe(e)) {
                    c.missing_vertex = e;
                    break;
                }
            }
        }
        if (!c.missing_vertex) {
            for (std::uint64_t k = 0; k <= 8 && !c.missing_vertex; ++k) {
                if (!s.shell_nonempty(k)) continue;
                for (const auto& w : s.shell(k, 4096)) {
                    if (probe(w)) {
                        c.missing_vertex = w;
                        break;
                    }
                }
            }
        }
    }

    // exact quantity resolution: engine first, then asserted facts
    if (cert) {
        ExactExt sup = cert->sup_ratio();
        c.sigma.known = true;
        c.sigma.infinite = sup.value.is_pinf();
        if (sup.value.is_finite()) c.sigma.value = Scalar(sup.value.value);
        c.sigma.source = "engine";
        c.sigma.witness = sup.witness;
        c.sigma.approach = sup.approach;

        ExactExt inf = cert->inf_ratio_offzero();
        c.inf_offzero.known = true;
        c.inf_offzero.infinite = inf.value.is_pinf();
        if (inf.value.is_finite()) c.inf_offzero.value = Scalar(inf.value.value);
        c.inf_offzero.source = "engine";
        c.inf_offzero.witness = inf.witness;
        c.inf_offzero.approach = inf.approach;

        auto xi = cert->xi();
        if (xi.exists) {
            c.xi.known = !xi.value.is_pinf();
            c.xi.infinite = xi.value.is_pinf();
            if (xi.value.is_finite()) c.xi.value = Scalar(xi.value.value);
            c.xi.known = true;
            c.xi.source = "engine";
        } else {
            c.xi_nonexistent_exact = true;
        }

        ExtReal ess = cert->essential_norm();
        c.ess.known = true;
        c.ess.infinite = ess.is_pinf();
        if (ess.is_finite()) c.ess.value = Scalar(ess.value);
        c.ess.source = "engine";

        auto z = cert->psi_zero_set();
        switch (z.kind) {
            case RadialCert::ZeroSet::Kind::empty:
                c.z = Ctx::Z::empty;
                c.zeros_listed = true;
                break;
            case RadialCert::ZeroSet::Kind::finite:
                c.z = Ctx::Z::finite;
                c.zeros = z.zeros;
                c.zeros_listed = !z.zeros.empty();
                break;
            case RadialCert::ZeroSet::Kind::infinite: c.z = Ctx::Z::infinite; break;
        }
        c.z_source = "engine";

        c.mu_typical = cert->mu_typical();
        c.psi_vanishes = cert->mu_abs_psi_vanishes();
        c.psi_stays_large = cert->mu_abs_psi_stays_large();

        auto ba = cert->beta(false);
        if (ba) {
            c.beta_all.known = true;
            c.beta_all.infinite = ba->value.is_pinf();
            if (ba->value.is_finite()) c.beta_all.value = Scalar(ba->value.value);
            c.beta_all.source = "engine";
            c.beta_all.witness = ba->witness;
            c.beta_all.approach = ba->approach;
        }
        auto bz = cert->beta(true);
        if (bz) {
            c.beta_offzero.known = true;
            c.beta_offzero.infinite = bz->value.is_pinf();
            if (bz->value.is_finite()) c.beta_offzero.value = Scalar(bz->value.value);
            c.beta_offzero.source = "engine";
            c.beta_offzero.witness = bz->witness;
            c.beta_offzero.approach = bz->approach;
        }
        c.image_cofinite = cert->image_complement_finite();
        if (c.image_cofinite && *c.image_cofinite) {
            auto list = cert->image_complement_if_finite();
            if (list) {
                c.image_complement = *list;
                c.image_complement_listed = true;
            }
        }
        c.fibers_bounded = cert->fibers_uniformly_bounded();
        c.fibers_singleton_ae = cert->fibers_eventually_singleton();
    }

    // asserted fallbacks (validated earlier against structure, the engine and
    // truncation evidence)
    if (!c.sigma.known) {
        if (f.ratio_sup) {
            c.sigma.known = true;
            c.sigma.infinite = f.ratio_sup->infinite;
            if (!f.ratio_sup->infinite) c.sigma.value = Scalar(f.ratio_sup->value);
            c.sigma.source = "asserted";
        } else if (f.tail_sup_formula) {
            Scalar v = eval_rule_at_number(*f.tail_sup_formula, Scalar(Rat(0)));
            if (v.exact()) {
                c.sigma.known = true;
                c.sigma.value = v;
                c.sigma.source = "asserted tail formula at N = 0";
            }
        }
    }
    if (!c.inf_offzero.known && f.ratio_inf) {
        c.inf_offzero.known = true;
        c.inf_offzero.value = Scalar(*f.ratio_inf);
        c.inf_offzero.source = "asserted";
    }
    if (!c.xi.known && !c.xi_nonexistent_exact && f.ratio_limit) {
        c.xi.known = true;
        c.xi.value = Scalar(*f.ratio_limit);
        c.xi.source = "asserted";
    }
    if (!c.ess.known) {
        const LimitEstimate& e = c.ess_est;
        if (e.kind == LimitEstimate::Kind::exact &&
            e.outcome == LimitEstimate::Outcome::value) {
            c.ess.known = true;
            c.ess.infinite = e.infinite;
            if (e.exact_value) c.ess.value = *e.exact_value;
            c.ess.source = e.source;
        }
    }
    if (c.z == Ctx::Z::unknown) {
        if (inst.psi().provably_nonzero(s)) {
            c.z = Ctx::Z::empty;
            c.zeros_listed = true;
            c.z_source = "structural (nonvanishing clauses)";
        } else {
            // exact zeros within the scan; beyond it the extent is unknown
            c.zeros = zero_set(inst, std::min(c.R, Rat(64)), c.policy);
            c.z_source = "scan";
        }
    }
    if (!c.mu_typical) {
        // per-clause limits when every length-unbounded clause is rational
        auto bounded_cover = [](const Pred& p, auto&& self) -> bool {
            switch (p.kind) {
                case Pred::Kind::is_root:
                case Pred::Kind::vertex_eq: return true;
                case Pred::Kind::len_cmp:
                    return p.cmp == Pred::Cmp::eq || p.cmp == Pred::Cmp::lt ||
                           p.cmp == Pred::Cmp::le;
                case Pred::Kind::conj:
                    for (const auto& t : p.terms)
                        if (self(t, self)) return true;
                    return false;
                default: return false;
            }
        };
        bool all_zero = true, any_nonzero = false, known = true;
        for (const auto& cl : inst.mu().clauses()) {
            if (bounded_cover(cl.guard, bounded_cover)) continue;
            auto fn = expr_as_ratfn(cl.body, true);
            if (!fn) {
                known = false;
                break;
            }
            ExtReal l = fn->limit_at_infinity();
            if (!(l == ExtReal::finite(Rat(0)))) {
                all_zero = false;
                any_nonzero = true;
            }
        }
        if (known && !inst.mu().is_table()) {
            c.mu_typical = all_zero && !any_nonzero;
        }
    }

    // beta lower bounds through the fiber membership of the index itself
    if (c.inf_offzero.known && !c.inf_offzero.infinite && c.inf_offzero.value.sign() > 0) {
        c.beta_offzero_lb = c.inf_offzero.value;
        if (c.z == Ctx::Z::empty) c.beta_all_lb = c.inf_offzero.value;
        c.beta_lb_source = c.inf_offzero.source;
    }
    // singleton fibers turn the infimum into beta exactly
    if (!c.beta_all.known && c.injective_map && *c.injective_map && c.z == Ctx::Z::empty &&
        c.inf_offzero.known) {
        c.beta_all = c.inf_offzero;
        c.beta_all.source += " (singleton fibers)";
    }
    if (!c.beta_offzero.known && c.injective_map && *c.injective_map && c.inf_offzero.known) {
        c.beta_offzero = c.inf_offzero;
        c.beta_offzero.source += " (singleton fibers)";
    }

    // a listed nonempty complement certifies non-surjectivity
    if (c.image_complement_listed && !c.image_complement.empty()) {
        if (c.surjective && *c.surjective)
            throw contradiction_error("asserted surjectivity contradicts missing image vertices");
        c.surjective = false;
        if (!c.missing_vertex) c.missing_vertex = c.image_complement.front();
    }
    if (!c.image_cofinite) {
        if (c.surjective && *c.surjective) {
            c.image_cofinite = true;
            c.image_complement_listed = true;  // empty
        } else if (inst.structure().identity_off_finite) {
            // exact complement: exceptional vertices nobody maps onto
            std::vector<Vertex> missing;
            for (const auto& e : inst.structure().exceptional) {
                auto q = preimages(s, inst.phi(), e, Rat(64), c.policy.budget);
                if (!q.complete) {
                    missing.clear();
                    break;
                }
                if (q.members.empty() && !q.all_of_space) missing.push_back(e);
            }
            c.image_cofinite = true;
            c.image_complement = std::move(missing);
            c.image_complement_listed = true;
        } else if (c.finite_range && *c.finite_range) {
            c.image_cofinite = false;  // finite image on an infinite space
        }
    }
    if (!c.fibers_bounded) {
        if (c.injective_map && *c.injective_map) c.fibers_bounded = true;
        else if (inst.structure().identity_off_finite) c.fibers_bounded = true;
        else if (c.finite_range && *c.finite_range && s.is_infinite()) c.fibers_bounded = false;
    }
    if (!c.fibers_singleton_ae) {
        if (c.injective_map && *c.injective_map) c.fibers_singleton_ae = true;
        else if (inst.structure().identity_off_finite) c.fibers_singleton_ae = true;
        else if (c.finite_range && *c.finite_range && s.is_infinite())
            c.fibers_singleton_ae = false;
    }
}

Ctx make_ctx(const OperatorInstance& inst, const Policy& policy, const ScanCache& cache) {
    Ctx c{inst, policy};
    c.finite = inst.space().kind == SpaceKind::finite;
    c.R = policy.scan_radius(inst.space(), inst.cells().has_value());
    c.sigma_scan = sigma(inst, c.R, policy, &cache);
    c.sigma_est = c.sigma_scan.estimate;
    c.xi_est = xi_estimate(inst, policy.schedule(inst.space(), inst.cells().has_value()), policy,
                           &cache);
    c.ess_est = essential_norm_estimate(inst, policy, &cache);
    if (c.finite)
        resolve_finite_space(c);
    else
        resolve_infinite_space(c);
    // the shell-tail form matches the image-tail form only for maps with
    // infinite range (under a typical weight)
    if (!c.finite && c.mu_typical && *c.mu_typical && c.finite_range && !*c.finite_range)
        c.ess_limsup = limsup_shell_estimate(inst, policy, &cache);
    // dual essential-norm estimates must agree when both are exact
    if (c.ess_limsup && c.ess.known && c.ess_limsup->kind == LimitEstimate::Kind::exact &&
        c.ess_limsup->outcome == LimitEstimate::Outcome::value && !c.ess.infinite &&
        !c.ess_limsup->infinite && c.ess_limsup->exact_value) {
        if (!(c.ess.value == *c.ess_limsup->exact_value))
            throw std::logic_error("essential norm estimates disagree across the two forms");
    }
    return c;
}

Verdict make_verdict(std::string property, Status st, Mode mode, std::string rule,
                     std::string explanation) {
    Verdict v;
    v.property = std::move(property);
    v.status = st;
    v.mode = mode;
    v.rule = std::move(rule);
    v.explanation = std::move(explanation);
    return v;
}

void add_witness(Verdict& v, const std::string& k, const std::string& val) {
    v.witnesses.emplace_back(k, val);
}

Verdict classify_bounded_linf(Ctx& c) {
    const std::string rule = "bounded.sup-ratio";
    if (c.sigma.known && !c.sigma.infinite) {
        Verdict v = make_verdict("bounded_linf", Status::holds, Mode::exact, rule,
                                 "the ratio mu|psi|/(mu o phi) has finite supremum " +
                                     fmt_scalar(c.sigma.value) + " (" + c.sigma.source +
                                     "), which equals the operator norm");
        add_witness(v, "norm", fmt_scalar(c.sigma.value));
        if (c.sigma.witness)
            add_witness(v, "attained_at", fmt_vertex(c.inst.space(), *c.sigma.witness));
        return v;
    }
    if (c.sigma.known && c.sigma.infinite) {
        Verdict v = make_verdict("bounded_linf", Status::fails, Mode::exact, rule,
                                 "the ratio is unbounded (" + c.sigma.source + ")");
        if (!c.sigma.approach.empty()) add_witness(v, "growth", c.sigma.approach);
        if (!c.sigma_est.evidence.empty()) {
            std::ostringstream os;
            os << "partial sups reach " << c.sigma_est.evidence.back().hi << " at radius "
               << c.sigma_est.evidence.back().x;
            add_witness(v, "trace", os.str());
        }
        return v;
    }
    Verdict v = make_verdict("bounded_linf", Status::inconclusive, Mode::numeric, rule,
                             "no certificate for the supremum; partial sups recorded");
    if (!c.sigma_est.evidence.empty()) {
        std::ostringstream os;
        os << "sup over radius " << c.sigma_est.evidence.back().x << " is "
           << c.sigma_est.evidence.back().hi;
        add_witness(v, "trace", os.str());
    }
    return v;
}

Verdict classify_bounded_l0(Ctx& c) {
    const std::string rule = "bounded.little-space";
    if (c.finite) {
        Verdict v = make_verdict("bounded_l0", Status::holds, Mode::exact, rule,
                                 "finite spaces carry no tail; the little space is everything");
        add_witness(v, "norm", fmt_scalar(c.sigma.value));
        return v;
    }
    auto holds_with_norm = [&](const std::string& why, Mode m) {
        Verdict v = make_verdict("bounded_l0", Status::holds, m, rule, why);
        if (c.sigma.known && !c.sigma.infinite) add_witness(v, "norm", fmt_scalar(c.sigma.value));
        return v;
    };
    if (c.finite_range && *c.finite_range) {
        // bounded iff the ratio limit vanishes, equivalently mu|psi| -> 0
        if (c.psi_vanishes && *c.psi_vanishes)
            return holds_with_norm("phi has finite range and mu|psi| vanishes at infinity",
                                   Mode::exact);
        if (c.psi_stays_large && *c.psi_stays_large) {
            Verdict v = make_verdict("bounded_l0", Status::fails, Mode::exact, rule,
                                     "phi has finite range but mu|psi| stays bounded away from "
                                     "zero along a vertex class, so the ratio limit cannot vanish");
            if (!c.xi_est.evidence.empty()) {
                std::ostringstream os;
                os << "shell ratio min stays >= " << c.xi_est.evidence.back().lo;
                add_witness(v, "evidence", os.str());
            }
            return v;
        }
        if (c.xi.known && c.xi.value.is_zero())
            return holds_with_norm("the ratio limit is zero (" + c.xi.source + ")", Mode::exact);
        if (c.xi.known && c.xi.value.sign() > 0) {
            Verdict v = make_verdict("bounded_l0", Status::fails, Mode::exact, rule,
                                     "the ratio limit is " + fmt_scalar(c.xi.value) + " (" +
                                         c.xi.source + "), not zero");
            return v;
        }
        if (c.xi_nonexistent_exact) {
            Verdict v = make_verdict(
                "bounded_l0", Status::fails, Mode::exact, rule,
                "the ratio has no limit at infinity (class limits disagree) and phi has "
                "finite range, so the vanishing criterion cannot hold");
            return v;
        }
        return make_verdict("bounded_l0", Status::inconclusive, Mode::numeric, rule,
                            "finite range, but the ratio limit is uncertified");
    }
    bool inf_range = c.finite_range && !*c.finite_range;
    if (inf_range && c.mu_typical && *c.mu_typical) {
        if (c.psi_vanishes && c.sigma.known) {
            if (*c.psi_vanishes && !c.sigma.infinite)
                return holds_with_norm(
                    "typical weight: psi lies in the little space and the ratio supremum is "
                    "finite",
                    Mode::exact);
            Verdict v = make_verdict("bounded_l0", Status::fails, Mode::exact, rule,
                                     *c.psi_vanishes
                                         ? "typical weight but the ratio supremum is infinite"
                                         : "typical weight but mu|psi| does not vanish, so psi "
                                           "is not in the little space");
            return v;
        }
        return make_verdict("bounded_l0", Status::inconclusive, Mode::numeric, rule,
                            "typical weight, but psi membership or the supremum is uncertified");
    }
    if (c.xi.known && c.xi.value.is_zero())
        return holds_with_norm("the ratio limit is zero (" + c.xi.source +
                                   "), which suffices on the little space",
                               Mode::exact);
    return make_verdict("bounded_l0", Status::inconclusive, Mode::numeric, rule,
                        "no applicable certified criterion for the little space");
}

Verdict classify_compact(Ctx& c, bool little_space, const Verdict& bounded) {
    std::string prop = little_space ? "compact_l0" : "compact_linf";
    const std::string rule = "compact.tail-limit";
    if (bounded.status != Status::holds) {
        return make_verdict(prop, Status::inconclusive, Mode::numeric, rule,
                            "inapplicable: boundedness on the target space is not established");
    }
    if (c.finite) {
        return make_verdict(prop, Status::holds, Mode::exact, "compact.finite-rank",
                            "finite spaces carry finite-rank operators");
    }
    if (c.finite_range && *c.finite_range) {
        return make_verdict(prop, Status::holds, Mode::exact, "compact.finite-range",
                            "phi has finite range, so the operator is compact");
    }
    if (c.ess.known) {
        if (!c.ess.infinite && c.ess.value.is_zero()) {
            Verdict v = make_verdict(prop, Status::holds, Mode::exact, rule,
                                     "the essential norm is zero (" + c.ess.source + ")");
            return v;
        }
        Verdict v = make_verdict(prop, Status::fails, Mode::exact, rule,
                                 "the essential norm is " +
                                     (c.ess.infinite ? std::string("infinite")
                                                     : fmt_scalar(c.ess.value)) +
                                     " (" + c.ess.source + "), not zero");
        return v;
    }
    Verdict v = make_verdict(prop, Status::inconclusive, Mode::numeric, rule,
                             "the essential norm has no certificate; tail trace recorded");
    if (!c.ess_est.evidence.empty()) {
        std::ostringstream os;
        os << "tail sup at N = " << c.ess_est.evidence.back().x << " is "
           << c.ess_est.evidence.back().hi;
        add_witness(v, "trace", os.str());
    }
    return v;
}

Verdict classify_injective(Ctx& c) {
    const std::string rule = "injective.surjectivity-and-fibers";
    if (c.surjective && !*c.surjective) {
        Verdict v = make_verdict("injective", Status::fails, Mode::exact, rule,
                                 "phi is not surjective; the spike at a vertex outside the image "
                                 "is annihilated");
        if (c.missing_vertex)
            add_witness(v, "kernel_spike_at", fmt_vertex(c.inst.space(), *c.missing_vertex));
        return v;
    }
    if (!c.surjective) {
        return make_verdict("injective", Status::inconclusive, Mode::numeric, rule,
                            "surjectivity of phi is unresolved");
    }
    // surjective; every fiber must meet the non-vanishing set of psi
    if (c.z == Ctx::Z::empty) {
        return make_verdict("injective", Status::holds, Mode::exact, rule,
                            "phi is surjective and psi never vanishes (" + c.z_source + ")");
    }
    if ((c.z == Ctx::Z::finite && c.zeros_listed) || !c.zeros.empty()) {
        // only zeros can own a fiber inside the zero set
        for (const auto& w : c.zeros) {
            FiberQuery q;
            try {
                q = preimages(c.inst.space(), c.inst.phi(),
                              c.inst.phi().eval(c.inst.space(), w), c.R, c.policy.budget);
            } catch (const budget_error&) {
                return make_verdict("injective", Status::inconclusive, Mode::numeric, rule,
                                    "a fiber through a zero of psi exceeds the vertex budget");
            }
            if (!q.complete || q.all_of_space) {
                if (c.z != Ctx::Z::finite || !c.zeros_listed)
                    return make_verdict("injective", Status::inconclusive, Mode::numeric, rule,
                                        "a fiber through a zero of psi is not fully enumerable");
                continue;
            }
            bool all_zero = !q.members.empty();
            for (const auto& v : q.members) {
                Complex pv = c.inst.psi().eval(c.inst.space(), v);
                bool zero = pv.exact()
                                ? pv.is_zero()
                                : pv.abs_sq().approx() <= c.policy.zero_tol * c.policy.zero_tol;
                all_zero = all_zero && zero;
            }
            if (all_zero) {
                Verdict v = make_verdict("injective", Status::fails, Mode::exact, rule,
                                         "the fiber through " + fmt_vertex(c.inst.space(), w) +
                                             " lies inside the zero set of psi");
                add_witness(v, "witness", fmt_vertex(c.inst.space(), w));
                add_witness(v, "kernel_spike_at",
                            fmt_vertex(c.inst.space(), c.inst.phi().eval(c.inst.space(), w)));
                return v;
            }
        }
        if (c.z == Ctx::Z::finite && c.zeros_listed)
            return make_verdict("injective", Status::holds, Mode::exact, rule,
                                "phi is surjective and every fiber through the finitely many "
                                "zeros of psi meets the non-vanishing set");
    }
    return make_verdict("injective", Status::inconclusive, Mode::numeric, rule,
                        "the zero set of psi is not certified finite or empty");
}

Verdict classify_bounded_below(Ctx& c, const Verdict& bounded) {
    const std::string rule = "bounded-below.level-set";
    if (bounded.status != Status::holds)
        return make_verdict("bounded_below", Status::inconclusive, Mode::numeric, rule,
                            "inapplicable: boundedness is not established");
    if (c.surjective && !*c.surjective) {
        Verdict v = make_verdict("bounded_below", Status::fails, Mode::exact, rule,
                                 "phi is not surjective");
        if (c.missing_vertex)
            add_witness(v, "missing_image", fmt_vertex(c.inst.space(), *c.missing_vertex));
        return v;
    }
    if (!c.surjective)
        return make_verdict("bounded_below", Status::inconclusive, Mode::numeric, rule,
                            "surjectivity of phi is unresolved");
    if (c.beta_all.known && !c.beta_all.infinite && c.beta_all.value.sign() > 0) {
        Verdict v = make_verdict(
            "bounded_below", Status::holds, Mode::exact, rule,
            "every fiber carries a ratio at least " + fmt_scalar(c.beta_all.value) + " (" +
                c.beta_all.source + ")");
        add_witness(v, "epsilon", fmt_scalar(c.beta_all.value / Scalar(Rat(2))));
        return v;
    }
    if (c.beta_all.known && !c.beta_all.infinite && c.beta_all.value.is_zero()) {
        Verdict v = make_verdict("bounded_below", Status::fails, Mode::exact, rule,
                                 "fiber maxima of the ratio come arbitrarily close to zero (" +
                                     c.beta_all.source + ")");
        if (c.beta_all.witness)
            add_witness(v, "small_fiber_at", fmt_vertex(c.inst.space(), *c.beta_all.witness));
        if (!c.beta_all.approach.empty()) add_witness(v, "approach", c.beta_all.approach);
        return v;
    }
    if (c.beta_all_lb && c.beta_all_lb->sign() > 0) {
        Verdict v = make_verdict("bounded_below", Status::holds, Mode::exact, rule,
                                 "each vertex witnesses its own fiber: the ratio is at least " +
                                     fmt_scalar(*c.beta_all_lb) + " off the zero set, which is "
                                     "empty (" + c.beta_lb_source + ")");
        add_witness(v, "epsilon", fmt_scalar(*c.beta_all_lb / Scalar(Rat(2))));
        return v;
    }
    return make_verdict("bounded_below", Status::inconclusive, Mode::numeric, rule,
                        "no certificate for the fiber level-set condition");
}

Verdict classify_closed_range(Ctx& c, const Verdict& bounded) {
    const std::string rule = "closed-range.level-set";
    if (bounded.status != Status::holds)
        return make_verdict("closed_range", Status::inconclusive, Mode::numeric, rule,
                            "inapplicable: boundedness is not established");
    if (c.beta_offzero.known && c.beta_offzero.infinite) {
        return make_verdict("closed_range", Status::holds, Mode::exact, rule,
                            "psi vanishes identically; the range is the zero subspace");
    }
    if (c.beta_offzero.known && c.beta_offzero.value.sign() > 0) {
        Verdict v = make_verdict("closed_range", Status::holds, Mode::exact, rule,
                                 "fibers through the non-vanishing set carry ratios at least " +
                                     fmt_scalar(c.beta_offzero.value) + " (" +
                                     c.beta_offzero.source + ")");
        add_witness(v, "epsilon", fmt_scalar(c.beta_offzero.value / Scalar(Rat(2))));
        return v;
    }
    if (c.beta_offzero.known && c.beta_offzero.value.is_zero()) {
        Verdict v = make_verdict("closed_range", Status::fails, Mode::exact, rule,
                                 "fiber maxima over the non-vanishing set approach zero (" +
                                     c.beta_offzero.source + ")");
        if (c.beta_offzero.witness)
            add_witness(v, "small_fiber_at",
                        fmt_vertex(c.inst.space(), *c.beta_offzero.witness));
        if (!c.beta_offzero.approach.empty())
            add_witness(v, "approach", c.beta_offzero.approach);
        return v;
    }
    if (c.beta_offzero_lb && c.beta_offzero_lb->sign() > 0) {
        Verdict v = make_verdict(
            "closed_range", Status::holds, Mode::exact, rule,
            "each index vertex witnesses its own fiber: the ratio off the zero set is at "
            "least " + fmt_scalar(*c.beta_offzero_lb) + " (" + c.beta_lb_source + ")");
        add_witness(v, "epsilon", fmt_scalar(*c.beta_offzero_lb / Scalar(Rat(2))));
        return v;
    }
    return make_verdict("closed_range", Status::inconclusive, Mode::numeric, rule,
                        "no certificate for the level-set condition off the zero set");
}

Verdict classify_invertible(Ctx& c, const Verdict& bounded, std::optional<Scalar>& inverse_norm) {
    const std::string rule = "invertible.bijection-and-infimum";
    if (bounded.status != Status::holds)
        return make_verdict("invertible", Status::inconclusive, Mode::numeric, rule,
                            "inapplicable: boundedness is not established");
    bool bij_known = c.surjective && c.injective_map;
    if ((c.surjective && !*c.surjective) || (c.injective_map && !*c.injective_map)) {
        Verdict v = make_verdict("invertible", Status::fails, Mode::exact, rule,
                                 "phi is not a bijection");
        if (c.missing_vertex)
            add_witness(v, "missing_image", fmt_vertex(c.inst.space(), *c.missing_vertex));
        return v;
    }
    if (!bij_known || !*c.surjective || !*c.injective_map)
        return make_verdict("invertible", Status::inconclusive, Mode::numeric, rule,
                            "bijectivity of phi is unresolved");
    if (c.z == Ctx::Z::finite || c.z == Ctx::Z::infinite) {
        Verdict v = make_verdict("invertible", Status::fails, Mode::exact, rule,
                                 "psi vanishes somewhere, so the ratio infimum is zero");
        if (!c.zeros.empty()) add_witness(v, "zero_at", fmt_vertex(c.inst.space(), c.zeros[0]));
        return v;
    }
    if (c.z != Ctx::Z::empty)
        return make_verdict("invertible", Status::inconclusive, Mode::numeric, rule,
                            "the zero set of psi is unresolved");
    if (c.inf_offzero.known && !c.inf_offzero.infinite) {
        if (c.inf_offzero.value.sign() > 0) {
            inverse_norm = Scalar(Rat(1)) / c.inf_offzero.value;
            Verdict v = make_verdict("invertible", Status::holds, Mode::exact, rule,
                                     "phi is a bijection and the ratio infimum is " +
                                         fmt_scalar(c.inf_offzero.value) + " (" +
                                         c.inf_offzero.source + ")");
            add_witness(v, "inverse_norm", fmt_scalar(*inverse_norm));
            return v;
        }
        Verdict v = make_verdict("invertible", Status::fails, Mode::exact, rule,
                                 "the ratio infimum is zero (" + c.inf_offzero.source +
                                     "); the inverse ratios mu(phi(v))/mu(v)|psi(v)| blow up");
        if (c.inf_offzero.witness)
            add_witness(v, "small_ratio_at", fmt_vertex(c.inst.space(), *c.inf_offzero.witness));
        if (!c.inf_offzero.approach.empty()) add_witness(v, "approach", c.inf_offzero.approach);
        return v;
    }
    return make_verdict("invertible", Status::inconclusive, Mode::numeric, rule,
                        "the ratio infimum has no certificate");
}

std::pair<Verdict, Verdict> classify_isometry(Ctx& c, const Verdict& bounded) {
    const std::string rule = "isometry.fiber-suprema";
    auto inapplicable = [&](const char* prop) {
        return make_verdict(prop, Status::inconclusive, Mode::numeric, rule,
                            "inapplicable: boundedness is not established");
    };
    if (bounded.status != Status::holds)
        return {inapplicable("isometry"), inapplicable("surjective_isometry")};

    Scalar one(Rat(1));
    // scan for an exact pointwise counterexample with a singleton fiber
    std::optional<Vertex> pointwise_violation;
    {
        Scalar vmax(Rat(0)), vmin(Rat(0));
        bool first = true;
        for_each_group(c.inst, std::min(c.R, Rat(32)), c.policy,
                       [&](const Vertex& rep, std::uint64_t) {
                           Scalar r = ratio(c.inst, rep);
                           if (r.exact() && r > one && !pointwise_violation)
                               pointwise_violation = rep;
                           if (first) {
                               vmax = vmin = r;
                               first = false;
                           }
                       });
        (void)vmax;
        (void)vmin;
    }

    Verdict iso;
    if (c.surjective && !*c.surjective) {
        iso = make_verdict("isometry", Status::fails, Mode::exact, rule, "phi is not surjective");
        if (c.missing_vertex)
            add_witness(iso, "missing_image", fmt_vertex(c.inst.space(), *c.missing_vertex));
    } else if (!c.surjective) {
        iso = make_verdict("isometry", Status::inconclusive, Mode::numeric, rule,
                           "surjectivity of phi is unresolved");
    } else if (pointwise_violation) {
        iso = make_verdict("isometry", Status::fails, Mode::exact, rule,
                           "the ratio exceeds one at " +
                               fmt_vertex(c.inst.space(), *pointwise_violation) +
                               ", so that fiber's supremum exceeds one");
        add_witness(iso, "witness", fmt_vertex(c.inst.space(), *pointwise_violation));
    } else if (c.sigma.known && !c.sigma.infinite && c.sigma.value == one &&
               c.inf_offzero.known && !c.inf_offzero.infinite && c.inf_offzero.value == one &&
               c.z == Ctx::Z::empty) {
        iso = make_verdict("isometry", Status::holds, Mode::exact, rule,
                           "the ratio is identically one (sup " + c.sigma.source + ", inf " +
                               c.inf_offzero.source + "), so every fiber supremum equals one");
    } else if (c.sigma.known && !c.sigma.infinite && c.beta_all.known && !c.beta_all.infinite) {
        if (c.sigma.value == one && c.beta_all.value == one) {
            iso = make_verdict("isometry", Status::holds, Mode::exact, rule,
                               "every fiber supremum of the ratio equals one (sup " +
                                   c.sigma.source + ", fiber inf " + c.beta_all.source + ")");
        } else {
            std::string what = !(c.sigma.value == one)
                                   ? "the ratio supremum is " + fmt_scalar(c.sigma.value)
                                   : "some fiber supremum is only " +
                                         fmt_scalar(c.beta_all.value);
            iso = make_verdict("isometry", Status::fails, Mode::exact, rule, what);
            if (!(c.sigma.value == one) && c.sigma.witness)
                add_witness(iso, "witness", fmt_vertex(c.inst.space(), *c.sigma.witness));
            if (c.sigma.value == one && c.beta_all.witness)
                add_witness(iso, "witness", fmt_vertex(c.inst.space(), *c.beta_all.witness));
        }
    } else {
        iso = make_verdict("isometry", Status::inconclusive, Mode::numeric, rule,
                           "fiber suprema have no certificate beyond the scan");
    }

    Verdict surj_iso;
    bool bij_false = (c.surjective && !*c.surjective) || (c.injective_map && !*c.injective_map);
    if (bij_false) {
        surj_iso = make_verdict("surjective_isometry", Status::fails, Mode::exact, rule,
                                "phi is not a bijection");
    } else if (!c.surjective || !c.injective_map) {
        surj_iso = make_verdict("surjective_isometry", Status::inconclusive, Mode::numeric, rule,
                                "bijectivity of phi is unresolved");
    } else if (pointwise_violation) {
        surj_iso = make_verdict("surjective_isometry", Status::fails, Mode::exact, rule,
                                "the ratio differs from one at " +
                                    fmt_vertex(c.inst.space(), *pointwise_violation));
    } else if (c.sigma.known && !c.sigma.infinite && c.inf_offzero.known &&
               !c.inf_offzero.infinite && c.z == Ctx::Z::empty) {
        if (c.sigma.value == one && c.inf_offzero.value == one) {
            surj_iso = make_verdict("surjective_isometry", Status::holds, Mode::exact, rule,
                                    "phi is a bijection and the ratio is identically one (sup "
                                    "and inf both certified as one)");
        } else {
            std::string what =
                !(c.sigma.value == one)
                    ? "the ratio reaches " + fmt_scalar(c.sigma.value)
                    : "the ratio drops to " + fmt_scalar(c.inf_offzero.value);
            surj_iso = make_verdict("surjective_isometry", Status::fails, Mode::exact, rule, what);
            if (c.inf_offzero.witness)
                add_witness(surj_iso, "witness",
                            fmt_vertex(c.inst.space(), *c.inf_offzero.witness));
        }
    } else if (c.z == Ctx::Z::finite || c.z == Ctx::Z::infinite) {
        surj_iso = make_verdict("surjective_isometry", Status::fails, Mode::exact, rule,
                                "psi vanishes somewhere, so the ratio is not identically one");
        if (!c.zeros.empty())
            add_witness(surj_iso, "zero_at", fmt_vertex(c.inst.space(), c.zeros[0]));
    } else {
        surj_iso = make_verdict("surjective_isometry", Status::inconclusive, Mode::numeric, rule,
                                "the pointwise ratio has no certificate beyond the scan");
    }
    return {iso, surj_iso};
}

Verdict classify_fredholm(Ctx& c, const Verdict& bounded, const Verdict& closed_range) {
    const std::string rule = "fredholm.five-conditions";
    if (bounded.status != Status::holds)
        return make_verdict("fredholm", Status::inconclusive, Mode::numeric, rule,
                            "inapplicable: boundedness is not established");
    if (!c.finite && c.finite_range && *c.finite_range) {
        Verdict v = make_verdict("fredholm", Status::fails, Mode::exact,
                                 "fredholm.finite-range-shortcut",
                                 "phi has finite range, so the operator is compact and compact "
                                 "operators are never Fredholm on an infinite space");
        return v;
    }

    auto tri = [&](const char* name, std::optional<bool> val, const std::string& why_yes,
                   const std::string& why_no) {
        Verdict v;
        v.property = name;
        v.rule = rule;
        if (val && *val) {
            v.status = Status::holds;
            v.mode = Mode::exact;
            v.explanation = why_yes;
        } else if (val && !*val) {
            v.status = Status::fails;
            v.mode = Mode::exact;
            v.explanation = why_no;
        } else {
            v.status = Status::inconclusive;
            v.mode = Mode::numeric;
            v.explanation = "no certificate";
        }
        return v;
    };

    Verdict a = tri("cofinite_image", c.image_cofinite,
                    "the complement of the image is finite",
                    "infinitely many vertices are never images");
    if (c.image_complement_listed && c.image_cofinite && *c.image_cofinite) {
        std::ostringstream os;
        os << c.image_complement.size() << " missing vertices";
        add_witness(a, "complement", os.str());
    }
    Verdict b = tri("uniform_fiber_bound", c.fibers_bounded,
                    "fiber sizes are uniformly bounded", "fiber sizes grow without bound");
    Verdict cc = tri("eventually_injective", c.fibers_singleton_ae,
                     "all but finitely many fibers are singletons",
                     "infinitely many fibers have more than one point");
    std::optional<bool> z_finite;
    if (c.z == Ctx::Z::empty || c.z == Ctx::Z::finite) z_finite = true;
    if (c.z == Ctx::Z::infinite) z_finite = false;
    Verdict d = tri("finite_zero_set", z_finite, "psi has finitely many zeros (" + c.z_source + ")",
                    "psi vanishes on an infinite set");
    Verdict e;
    e.property = "level_set_off_zeros";
    e.rule = rule;
    e.status = closed_range.status;
    e.mode = closed_range.mode;
    e.explanation = closed_range.explanation;

    Verdict out;
    out.property = "fredholm";
    out.rule = rule;
    out.sub = {a, b, cc, d, e};
    bool all_hold = true, any_fail = false;
    std::string first_fail;
    for (const auto& sv : out.sub) {
        if (sv.status != Status::holds) all_hold = false;
        if (sv.status == Status::fails && !any_fail) {
            any_fail = true;
            first_fail = sv.property;
        }
    }
    if (any_fail) {
        out.status = Status::fails;
        out.mode = Mode::exact;
        out.explanation = "condition '" + first_fail + "' fails";
    } else if (all_hold) {
        out.status = Status::holds;
        out.mode = Mode::exact;
        out.explanation = "all five conditions certified";
    } else {
        out.status = Status::inconclusive;
        out.mode = Mode::numeric;
        out.explanation = "some conditions lack certificates";
    }
    return out;
}

/// Rebuilds each verdict for a pure composition or multiplication instance
/// through the specialized corollary conditions and insists on agreement.
void specialize_crosscheck(Ctx& c, const ClassificationReport& report,
                           std::vector<std::string>& notes) {
    auto both_decided_disagree = [](const Verdict* a, Status b) {
        return a && a->status != Status::inconclusive && a->status != b;
    };
    const OperatorInstance& inst = c.inst;
    if (inst.phi_is_identity()) {
        // multiplication operator: everything reads off |psi|
        const Verdict* inj = report.find("injective");
        Status inj_c = Status::inconclusive;
        if (c.z == Ctx::Z::empty) inj_c = Status::holds;
        if (c.z == Ctx::Z::finite || c.z == Ctx::Z::infinite)
            inj_c = c.zeros.empty() && c.z == Ctx::Z::finite ? Status::inconclusive
                                                             : Status::fails;
        if (c.z == Ctx::Z::finite && c.zeros.empty()) inj_c = Status::inconclusive;
        if (inj_c != Status::inconclusive && both_decided_disagree(inj, inj_c))
            throw std::logic_error("specialize: injectivity disagrees with |psi| != 0");

        const Verdict* bb = report.find("bounded_below");
        if (bb && bb->status != Status::inconclusive && c.inf_offzero.known &&
            (c.z == Ctx::Z::empty || c.z == Ctx::Z::finite || c.z == Ctx::Z::infinite)) {
            bool inf_pos = c.z == Ctx::Z::empty && !c.inf_offzero.infinite &&
                           c.inf_offzero.value.sign() > 0;
            Status want = inf_pos ? Status::holds : Status::fails;
            if (report.find("bounded_linf") && report.find("bounded_linf")->status == Status::holds &&
                bb->status != want)
                throw std::logic_error("specialize: bounded-below disagrees with inf |psi| > 0");
        }
        const Verdict* cr = report.find("closed_range");
        if (cr && cr->status != Status::inconclusive && c.inf_offzero.known &&
            !c.inf_offzero.infinite) {
            Status want = c.inf_offzero.value.sign() > 0 ? Status::holds : Status::fails;
            if (report.find("bounded_linf") && report.find("bounded_linf")->status == Status::holds &&
                cr->status != want)
                throw std::logic_error(
                    "specialize: closed range disagrees with inf |psi| over the support");
        }
        const Verdict* iso = report.find("isometry");
        const Verdict* siso = report.find("surjective_isometry");
        if (iso && siso && iso->status != Status::inconclusive &&
            siso->status != Status::inconclusive && iso->status != siso->status)
            throw std::logic_error(
                "specialize: multiplication isometries must be surjective isometries");
        if (siso && siso->status != Status::inconclusive && c.sigma.known && !c.sigma.infinite &&
            c.inf_offzero.known && !c.inf_offzero.infinite && c.z == Ctx::Z::empty) {
            Status want = c.sigma.value == Scalar(Rat(1)) && c.inf_offzero.value == Scalar(Rat(1))
                              ? Status::holds
                              : Status::fails;
            if (report.find("bounded_linf")->status == Status::holds && siso->status != want)
                throw std::logic_error("specialize: isometry disagrees with |psi| == 1");
        }
        // Fredholm via the two equivalent conditions
        const Verdict* fr = report.find("fredholm");
        if (fr && fr->status != Status::inconclusive) {
            std::optional<bool> z_fin;
            if (c.z == Ctx::Z::empty || c.z == Ctx::Z::finite) z_fin = true;
            if (c.z == Ctx::Z::infinite) z_fin = false;
            if (z_fin && c.inf_offzero.known && !c.inf_offzero.infinite) {
                // (ii) finite zeros and positive infimum off them
                Status want_ii = *z_fin && c.inf_offzero.value.sign() > 0 ? Status::holds
                                                                          : Status::fails;
                // (iii) a threshold beyond which |psi| stays above some eps:
                // with finitely many zeros this is the same infimum condition
                Status want_iii = want_ii;
                if (want_ii != want_iii || fr->status != want_ii)
                    throw std::logic_error(
                        "specialize: Fredholm disagrees between the zero-set form and the "
                        "threshold form");
            }
        }
        notes.push_back("specialize: multiplication corollaries agree with the general path");
        return;
    }
    if (inst.psi_is_one()) {
        const Verdict* inj = report.find("injective");
        if (inj && inj->status != Status::inconclusive && c.surjective) {
            Status want = *c.surjective ? Status::holds : Status::fails;
            if (inj->status != want)
                throw std::logic_error(
                    "specialize: composition injectivity must equal surjectivity of phi");
        }
        const Verdict* bl0 = report.find("bounded_l0");
        if (bl0 && bl0->status != Status::inconclusive && c.finite_range && *c.finite_range &&
            c.mu_typical) {
            Status want = *c.mu_typical ? Status::holds : Status::fails;
            if (bl0->status != want)
                throw std::logic_error(
                    "specialize: little-space boundedness of a finite-range composition must "
                    "match weight typicality");
        }
        if (bl0 && bl0->status != Status::inconclusive && c.finite_range && !*c.finite_range &&
            c.mu_typical && *c.mu_typical) {
            const Verdict* bl = report.find("bounded_linf");
            if (bl && bl->status != Status::inconclusive && bl0->status != bl->status)
                throw std::logic_error(
                    "specialize: little-space boundedness of an infinite-range composition "
                    "under a typical weight must match the big space");
        }
        notes.push_back("specialize: composition corollaries agree with the general path");
        return;
    }
}

QuantitySet make_quantities(Ctx& c, const std::optional<Scalar>& inverse_norm) {
    QuantitySet q;
    q.sigma = c.sigma_est;
    if (c.sigma.known) {
        q.sigma.kind = LimitEstimate::Kind::exact;
        q.sigma.outcome = LimitEstimate::Outcome::value;
        q.sigma.infinite = c.sigma.infinite;
        if (!c.sigma.infinite) {
            q.sigma.exact_value = c.sigma.value;
            q.sigma.value = c.sigma.value.approx();
        }
        q.sigma.source = c.sigma.source;
    }
    q.xi = c.xi_est;
    if (c.xi.known && !c.xi.infinite) {
        q.xi.kind = LimitEstimate::Kind::exact;
        q.xi.outcome = LimitEstimate::Outcome::value;
        q.xi.exact_value = c.xi.value;
        q.xi.value = c.xi.value.approx();
        q.xi.source = c.xi.source;
    } else if (c.xi_nonexistent_exact) {
        q.xi.kind = LimitEstimate::Kind::exact;
        q.xi.outcome = LimitEstimate::Outcome::nonexistent;
        q.xi.source = c.xi.source.empty() ? "engine" : c.xi.source;
    }
    q.essential_norm = c.ess_est;
    if (c.ess.known) {
        q.essential_norm.kind = LimitEstimate::Kind::exact;
        q.essential_norm.outcome = LimitEstimate::Outcome::value;
        q.essential_norm.infinite = c.ess.infinite;
        if (!c.ess.infinite) {
            q.essential_norm.exact_value = c.ess.value;
            q.essential_norm.value = c.ess.value.approx();
        }
        q.essential_norm.source = c.ess.source;
    }
    q.essential_norm_limsup = c.ess_limsup;
    if (inverse_norm) {
        LimitEstimate inv;
        inv.kind = LimitEstimate::Kind::exact;
        inv.outcome = LimitEstimate::Outcome::value;
        inv.exact_value = *inverse_norm;
        inv.value = inverse_norm->approx();
        inv.source = "reciprocal of the certified ratio infimum";
        q.inverse_norm = inv;
    }
    return q;
}

}  // namespace

ClassificationReport classify(const OperatorInstance& inst, const Policy& policy,
                              bool with_components) {
    ScanCache cache =
        make_scan_cache(inst, policy.scan_radius(inst.space(), inst.cells().has_value()), policy);
    validate_instance(inst, policy, &cache);
    Ctx c = make_ctx(inst, policy, cache);
    ClassificationReport report;
    report.instance = inst.describe();

    Verdict bounded = classify_bounded_linf(c);
    Verdict bounded_l0 = classify_bounded_l0(c);
    Verdict compact_linf = classify_compact(c, false, bounded);
    Verdict compact_l0 = classify_compact(c, true, bounded_l0);
    Verdict injective = classify_injective(c);
    Verdict bounded_below = classify_bounded_below(c, bounded);
    Verdict closed_range = classify_closed_range(c, bounded);
    std::optional<Scalar> inverse_norm;
    Verdict invertible = classify_invertible(c, bounded, inverse_norm);
    auto [isometry, surj_isometry] = classify_isometry(c, bounded);
    Verdict fredholm = classify_fredholm(c, bounded, closed_range);

    report.verdicts = {bounded,     bounded_l0,   compact_linf, compact_l0,
                       injective,   bounded_below, closed_range, invertible,
                       isometry,    surj_isometry, fredholm};
    report.quantities = make_quantities(c, inverse_norm);

    if (invertible.status == Status::holds) {
        // materialize the inverse instance where phi inverts syntactically
        const MapRule& phi = inst.phi();
        if (phi.kind() == MapRule::Kind::identity) {
            report.notes.push_back("inverse instance: phi^-1 = identity, symbol 1/psi");
        } else if (phi.kind() == MapRule::Kind::rotation) {
            report.notes.push_back("inverse instance: phi^-1 = rotation(" +
                                   std::to_string((4 - phi.quarter_turns()) % 4) +
                                   "), symbol 1/psi o phi^-1");
        } else if (phi.kind() == MapRule::Kind::table) {
            report.notes.push_back("inverse instance: phi^-1 by inverted table, symbol "
                                   "1/psi o phi^-1");
        } else {
            report.notes.push_back("inverse instance recorded abstractly: W^{-1} = "
                                   "W_{1/psi o phi^-1, phi^-1}");
        }
    }

    specialize_crosscheck(c, report, report.notes);

    if (with_components && !inst.psi_is_one() && !inst.phi_is_identity()) {
        {
            OperatorInstance cphi = inst.composition_part();
            ClassificationReport sub = classify(cphi, policy, false);
            ComponentReport comp;
            comp.name = "cphi";
            comp.quantities = sub.quantities;
            comp.verdicts = sub.verdicts;
            report.components.push_back(std::move(comp));
        }
        {
            OperatorInstance mpsi = inst.multiplication_part();
            ClassificationReport sub = classify(mpsi, policy, false);
            ComponentReport comp;
            comp.name = "mpsi";
            comp.quantities = sub.quantities;
            comp.verdicts = sub.verdicts;
            report.components.push_back(std::move(comp));
        }
    }

    check_lattice(report);
    return report;
}

Verdict classify_fredholm_perturbation(const OperatorInstance& inst, const MapRule& eta,
                                       const Policy& policy) {
    const std::string rule = "fredholm.perturbation";
    if (!inst.psi_is_one())
        return make_verdict("fredholm_perturbation", Status::inconclusive, Mode::numeric, rule,
                            "only composition instances (psi == 1) are eligible");
    const Space& s = inst.space();
    // disagreement set, exact for identity-off-finite against identity-like eta
    std::optional<std::vector<Vertex>> disagreement;
    const MapStructure& st = inst.structure();
    MapStructure st_eta = analyze_map(s, eta);
    if (st.identity_off_finite && eta.kind() == MapRule::Kind::identity) {
        std::vector<Vertex> diff;
        for (const auto& e : st.exceptional)
            if (!(inst.phi().eval(s, e) == e)) diff.push_back(e);
        disagreement = std::move(diff);
    } else if (st.identity_off_finite && st_eta.identity_off_finite) {
        std::vector<Vertex> diff;
        std::vector<Vertex> candidates = st.exceptional;
        for (const auto& e : st_eta.exceptional) candidates.push_back(e);
        for (const auto& e : candidates)
            if (!(inst.phi().eval(s, e) == eta.eval(s, e))) diff.push_back(e);
        std::sort(diff.begin(), diff.end(),
                  [&s](const Vertex& a, const Vertex& b) { return s.canon_less(a, b); });
        diff.erase(std::unique(diff.begin(), diff.end()), diff.end());
        disagreement = std::move(diff);
    } else if (s.kind == SpaceKind::finite) {
        std::vector<Vertex> diff;
        for (std::size_t i = 0; i < s.table->size(); ++i) {
            Vertex v = Vertex::finite(i);
            if (!(inst.phi().eval(s, v) == eta.eval(s, v))) diff.push_back(v);
        }
        disagreement = std::move(diff);
    }
    if (!disagreement)
        return make_verdict("fredholm_perturbation", Status::inconclusive, Mode::numeric, rule,
                            "the disagreement set of phi and eta cannot be certified finite");

    OperatorInstance ceta(s, inst.mu(), ScalarRule::constant_one(), eta, AssertedFacts{});
    ClassificationReport sub = classify(ceta, policy, false);
    const Verdict* inv = sub.find("invertible");
    if (inv && inv->status == Status::holds) {
        Verdict v = make_verdict("fredholm_perturbation", Status::holds, Mode::exact, rule,
                                 "phi agrees with eta off " +
                                     std::to_string(disagreement->size()) +
                                     " vertices and the composition with eta is invertible");
        std::ostringstream os;
        for (std::size_t i = 0; i < disagreement->size() && i < 8; ++i)
            os << (i ? ", " : "") << (*disagreement)[i].str(&s);
        add_witness(v, "disagreement", os.str().empty() ? "(none)" : os.str());
        return v;
    }
    return make_verdict("fredholm_perturbation", Status::inconclusive, Mode::numeric, rule,
                        "the comparison composition is not certified invertible; the "
                        "sufficient condition is not established");
}

void check_lattice(const ClassificationReport& report) {
    auto get = [&](const char* p) { return report.find(p); };
    auto holds = [](const Verdict* v) { return v && v->status == Status::holds; };
    auto fails = [](const Verdict* v) { return v && v->status == Status::fails; };
    auto imply = [&](const char* a, const char* b) {
        if (holds(get(a)) && fails(get(b)))
            throw std::logic_error(std::string("implication lattice violated: ") + a +
                                   " holds but " + b + " fails");
    };
    imply("invertible", "bounded_below");
    imply("bounded_below", "injective");
    imply("bounded_below", "closed_range");
    imply("surjective_isometry", "isometry");
    imply("surjective_isometry", "invertible");
    imply("fredholm", "closed_range");
    const Verdict* compact = get("compact_linf");
    const Verdict* fred = get("fredholm");
    if (holds(compact) && holds(fred) && report.instance.find("finite(") == std::string::npos)
        throw std::logic_error(
            "implication lattice violated: a compact operator cannot be Fredholm");
    // essential norm <= operator norm
    const auto& q = report.quantities;
    if (q.sigma.outcome == LimitEstimate::Outcome::value &&
        q.essential_norm.outcome == LimitEstimate::Outcome::value && !q.sigma.infinite) {
        if (q.essential_norm.infinite)
            throw std::logic_error("essential norm exceeds the operator norm");
        if (q.sigma.exact_value && q.essential_norm.exact_value) {
            if (*q.sigma.exact_value < *q.essential_norm.exact_value)
                throw std::logic_error("essential norm exceeds the operator norm");
        } else if (q.essential_norm.value > q.sigma.value * (1 + 1e-9) + 1e-12) {
            throw std::logic_error("essential norm exceeds the operator norm");
        }
    }
    const Verdict* iso = get("isometry");
    if (holds(iso) && q.sigma.exact_value && !(*q.sigma.exact_value == Scalar(Rat(1))))
        throw std::logic_error("an isometry must have operator norm one");
}

}  // namespace wco
