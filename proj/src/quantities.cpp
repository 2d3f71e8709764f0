#include "wco/quantities.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace wco {

std::vector<Rat> Policy::schedule(const Space& s, bool cellwise) const {
    std::vector<Rat> out;
    Rat cap = radius ? *radius : Rat(0);
    if (s.kind == SpaceKind::finite) {
        Rat rmax(0);
        for (const auto& row : *s.table) rmax = std::max(rmax, row.length);
        out.push_back(rmax);
        return out;
    }
    if (s.kind == SpaceKind::tree) {
        std::int64_t top = cellwise ? max_shells : 0;
        if (!cellwise) {
            std::uint64_t total = 1, n = 0;
            while (true) {
                std::uint64_t sz = s.shell_size(n + 1);
                if (sz == UINT64_MAX || total > budget - std::min<std::uint64_t>(budget, sz)) break;
                total += sz;
                ++n;
            }
            top = static_cast<std::int64_t>(n);
        }
        if (radius) top = std::min<std::int64_t>(top, static_cast<std::int64_t>(to_double(cap)));
        for (std::int64_t k = 1; k <= top; ++k) out.push_back(Rat(k));
        if (out.empty()) out.push_back(Rat(0));
        return out;
    }
    // integers / gaussian: doubling radii
    Rat r(1);
    while (true) {
        if (radius && r > cap) break;
        if (s.ball_size_hint(r) > budget) break;
        out.push_back(r);
        r *= 2;
    }
    if (out.empty()) out.push_back(radius ? cap : Rat(1));
    return out;
}

Rat Policy::scan_radius(const Space& s, bool cellwise) const {
    auto sch = schedule(s, cellwise);
    return sch.back();
}

OperatorInstance::OperatorInstance(Space space, ScalarRule mu, ScalarRule psi, MapRule phi,
                                   AssertedFacts user, AssertedFacts cphi, AssertedFacts mpsi) {
    auto impl = std::make_shared<Impl>();
    impl->space = std::move(space);
    impl->mu = std::move(mu);
    impl->psi = std::move(psi);
    impl->phi = std::move(phi);
    impl->mu.validate(impl->space);
    impl->psi.validate(impl->space);
    impl->phi.validate(impl->space);
    impl->structure = analyze_map(impl->space, impl->phi);
    impl->facts = declared_facts(impl->space, impl->phi, user);
    impl->cphi = declared_facts(impl->space, impl->phi, cphi);
    {
        MapRule id = MapRule::identity();
        impl->mpsi = declared_facts(impl->space, id, mpsi);
    }
    impl->cells = CellModel::build(impl->space, impl->mu, impl->psi, impl->phi);
    if (impl->cells)
        impl->cert = RadialCert::build(impl->space, impl->mu, impl->psi, impl->phi);
    // structural psi == 1 detection
    impl->psi_is_one = false;
    if (!impl->psi.is_table() && impl->psi.overrides().empty() &&
        impl->psi.clauses().size() == 1) {
        const Expr& b = impl->psi.clauses()[0].body;
        impl->psi_is_one = b.op == Expr::Op::constant && b.value == 1;
    }
    if (impl->psi.is_table()) {
        bool all_one = true;
        for (const auto& z : impl->psi.table_values())
            all_one = all_one && z.im.is_zero() && z.re.exact() && z.re.is_rational() &&
                      z.re.rational() == 1;
        impl->psi_is_one = all_one;
    }
    impl_ = std::move(impl);
}

OperatorInstance OperatorInstance::composition_part() const {
    return OperatorInstance(impl_->space, impl_->mu, ScalarRule::constant_one(), impl_->phi,
                            impl_->cphi);
}

OperatorInstance OperatorInstance::multiplication_part() const {
    return OperatorInstance(impl_->space, impl_->mu, impl_->psi, MapRule::identity(),
                            impl_->mpsi);
}

std::string OperatorInstance::describe() const {
    std::ostringstream os;
    switch (impl_->space.kind) {
        case SpaceKind::tree: os << "tree(b=" << impl_->space.branching << ")"; break;
        case SpaceKind::integers: os << "integers"; break;
        case SpaceKind::gaussian: os << "gaussian"; break;
        case SpaceKind::finite: os << "finite(" << impl_->space.table->size() << ")"; break;
    }
    os << "; mu = " << impl_->mu.print() << "; psi = " << impl_->psi.print()
       << "; phi = " << impl_->phi.print();
    return os.str();
}

Scalar ratio(const OperatorInstance& inst, const Vertex& v) {
    const Space& s = inst.space();
    Complex muv = inst.mu().eval(s, v);
    if (!muv.is_real() || !(muv.re.sign() > 0))
        throw rule_error("weight must be positive at " + v.str(&s));
    Vertex t = inst.phi().eval(s, v);
    Complex mut = inst.mu().eval(s, t);
    if (!mut.is_real() || !(mut.re.sign() > 0))
        throw rule_error("weight must be positive at " + t.str(&s));
    Scalar apsi = inst.psi().eval(s, v).abs();
    return muv.re * apsi / mut.re;
}

void for_each_group(const OperatorInstance& inst, const Rat& R, const Policy& policy,
                    const std::function<void(const Vertex&, std::uint64_t)>& fn) {
    const Space& s = inst.space();
    if (inst.cells() && s.is_infinite()) {
        Int num = boost::multiprecision::numerator(R);
        Int den = boost::multiprecision::denominator(R);
        std::int64_t nmax = static_cast<std::int64_t>(num / den);
        if (nmax > policy.max_shells && s.kind == SpaceKind::tree)
            throw budget_error("shell scan exceeds the configured shell bound");
        for (const auto& cell : inst.cells()->cells_upto(nmax)) {
            if (cell.has_generic && cell.size > cell.exceptional.size())
                fn(cell.generic_rep, cell.size - cell.exceptional.size());
            for (const auto& e : cell.exceptional) fn(e, 1);
        }
        return;
    }
    auto ball = s.ball(R, policy.budget);
    for (const auto& v : ball.vertices) fn(v, 1);
}

namespace {

bool nearly_equal(double a, double b, const Policy& p) {
    double diff = std::abs(a - b);
    double scale = std::max(std::abs(a), std::abs(b));
    return diff <= std::max(p.abs_tol, p.rel_tol * scale);
}

bool converged_trail(const std::vector<EvidencePoint>& ev, const Policy& p) {
    if (static_cast<int>(ev.size()) < p.window) return false;
    for (std::size_t i = ev.size() - p.window; i < ev.size(); ++i) {
        const auto& e = ev[i];
        if (!nearly_equal(e.lo, e.hi, p)) return false;
        if (!nearly_equal(e.hi, ev.back().hi, p)) return false;
    }
    return true;
}

struct GroupMax {
    std::optional<Scalar> best;
    std::optional<Vertex> arg;
    void consider(const Scalar& v, const Vertex& rep) {
        if (!best || *best < v) {
            best = v;
            arg = rep;
        }
    }
};

}  // namespace

ScanCache make_scan_cache(const OperatorInstance& inst, const Rat& R, const Policy& policy) {
    ScanCache cache;
    cache.radius = R;
    const Space& s = inst.space();
    for_each_group(inst, R, policy, [&](const Vertex& rep, std::uint64_t count) {
        ScanCache::Entry e;
        e.rep = rep;
        e.count = count;
        e.shell = static_cast<std::int64_t>(s.shell_index(rep));
        e.ratio = ratio(inst, rep);
        e.ratio_d = e.ratio.approx();
        e.image_len_sq = s.length_sq(inst.phi().eval(s, rep));
        Complex pv = inst.psi().eval(s, rep);
        e.psi_zero = pv.exact() ? pv.is_zero()
                                : pv.abs_sq().approx() <= policy.zero_tol * policy.zero_tol;
        cache.entries.push_back(std::move(e));
    });
    std::sort(cache.entries.begin(), cache.entries.end(),
              [](const auto& a, const auto& b) { return a.shell < b.shell; });
    return cache;
}

SigmaResult sigma(const OperatorInstance& inst, const Rat& R, const Policy& policy,
                  const ScanCache* cache) {
    ScanCache local;
    if (!cache || cache->radius != R) {
        local = make_scan_cache(inst, R, policy);
        cache = &local;
    }
    SigmaResult out;
    out.partial_sup = Scalar(Rat(0));
    for (const auto& e : cache->entries) {
        if (!out.argmax || out.partial_sup < e.ratio) {
            out.partial_sup = e.ratio;
            out.argmax = e.rep;
        }
    }

    LimitEstimate est;
    {
        auto sched = policy.schedule(inst.space(), inst.cells().has_value());
        std::size_t i = 0;
        double running = 0;
        bool any = false;
        for (const Rat& r : sched) {
            if (r > R) break;
            while (i < cache->entries.size() && Rat(cache->entries[i].shell) <= r) {
                running = std::max(running, cache->entries[i].ratio_d);
                any = true;
                ++i;
            }
            if (any) est.evidence.push_back({to_double(r), running, running});
        }
    }
    est.converged = converged_trail(est.evidence, policy);
    est.kind = LimitEstimate::Kind::numeric;
    est.outcome = LimitEstimate::Outcome::undetermined;
    est.value = out.partial_sup.approx();

    // certificates: finite space / engine / asserted facts
    const Space& s = inst.space();
    if (!s.is_infinite()) {
        est.kind = LimitEstimate::Kind::exact;
        est.outcome = LimitEstimate::Outcome::value;
        est.exact_value = out.partial_sup;
        est.value = out.partial_sup.approx();
        est.source = "finite-space";
    } else if (inst.cert()) {
        ExactExt sup = inst.cert()->sup_ratio();
        est.kind = LimitEstimate::Kind::exact;
        est.outcome = LimitEstimate::Outcome::value;
        est.infinite = sup.value.is_pinf();
        if (sup.value.is_finite()) {
            est.exact_value = Scalar(sup.value.value);
            est.value = to_double(sup.value.value);
        }
        est.source = "engine";
        if (sup.value.is_finite() && out.partial_sup.exact() &&
            out.partial_sup > Scalar(sup.value.value))
            throw std::logic_error("scan exceeded the engine's exact supremum");
    } else if (inst.facts().ratio_sup) {
        est.kind = LimitEstimate::Kind::exact;
        est.outcome = LimitEstimate::Outcome::value;
        est.infinite = inst.facts().ratio_sup->infinite;
        if (!est.infinite) {
            est.exact_value = Scalar(inst.facts().ratio_sup->value);
            est.value = to_double(inst.facts().ratio_sup->value);
        }
        est.source = "asserted";
    } else if (inst.facts().tail_sup_formula) {
        // sigma is the tail formula at threshold zero
        Scalar v = eval_rule_at_number(*inst.facts().tail_sup_formula, Scalar(Rat(0)));
        est.kind = LimitEstimate::Kind::exact;
        est.outcome = LimitEstimate::Outcome::value;
        est.exact_value = v;
        est.value = v.approx();
        est.source = "asserted";
    }
    out.estimate = std::move(est);
    return out;
}

LimitEstimate xi_estimate(const OperatorInstance& inst, const std::vector<Rat>& schedule,
                          const Policy& policy, const ScanCache* cache) {
    LimitEstimate est;
    Rat top = schedule.empty() ? Rat(0) : schedule.back();
    ScanCache local;
    if (!cache || cache->radius != top) {
        local = make_scan_cache(inst, top, policy);
        cache = &local;
    }
    std::map<std::int64_t, std::pair<double, double>> shells;
    for (const auto& e : cache->entries) {
        auto it = shells.find(e.shell);
        if (it == shells.end())
            shells[e.shell] = {e.ratio_d, e.ratio_d};
        else {
            it->second.first = std::min(it->second.first, e.ratio_d);
            it->second.second = std::max(it->second.second, e.ratio_d);
        }
    }
    for (const auto& [n, mm] : shells)
        est.evidence.push_back({static_cast<double>(n), mm.first, mm.second});
    est.converged = converged_trail(est.evidence, policy);
    est.kind = LimitEstimate::Kind::numeric;
    est.outcome = est.converged ? LimitEstimate::Outcome::value : LimitEstimate::Outcome::undetermined;
    if (!est.evidence.empty()) est.value = est.evidence.back().hi;

    if (inst.cert()) {
        auto xi = inst.cert()->xi();
        est.kind = LimitEstimate::Kind::exact;
        est.source = "engine";
        if (xi.exists) {
            est.outcome = LimitEstimate::Outcome::value;
            est.infinite = xi.value.is_pinf();
            if (xi.value.is_finite()) {
                est.exact_value = Scalar(xi.value.value);
                est.value = to_double(xi.value.value);
            }
        } else {
            est.outcome = LimitEstimate::Outcome::nonexistent;
        }
    } else if (inst.facts().ratio_limit) {
        est.kind = LimitEstimate::Kind::exact;
        est.outcome = LimitEstimate::Outcome::value;
        est.exact_value = Scalar(*inst.facts().ratio_limit);
        est.value = to_double(*inst.facts().ratio_limit);
        est.source = "asserted";
    }
    return est;
}

TailSupResult tail_sup(const OperatorInstance& inst, const Rat& N, const Rat& R,
                       const Policy& policy) {
    TailSupResult out;
    const Space& s = inst.space();
    Rat n2 = N * N;
    GroupMax gm;
    bool any = false;
    for_each_group(inst, R, policy, [&](const Vertex& rep, std::uint64_t) {
        Vertex img = inst.phi().eval(s, rep);
        if (N > 0 && s.length_sq(img) < n2) return;
        any = true;
        gm.consider(ratio(inst, rep), rep);
    });
    out.empty = !any;
    out.value = gm.best ? *gm.best : Scalar(Rat(0));
    out.argmax = gm.arg;
    return out;
}

std::vector<Vertex> fiber(const OperatorInstance& inst, const Vertex& w, const Rat& R,
                          const Policy& policy) {
    const Space& s = inst.space();
    Vertex target = inst.phi().eval(s, w);
    auto q = preimages(s, inst.phi(), target, R, policy.budget);
    return q.members;
}

std::vector<Vertex> zero_set(const OperatorInstance& inst, const Rat& R, const Policy& policy) {
    const Space& s = inst.space();
    std::vector<Vertex> zeros;
    auto is_zero = [&](const Vertex& v) {
        Complex z = inst.psi().eval(s, v);
        if (z.exact()) return z.is_zero();
        return z.abs_sq().approx() <= policy.zero_tol * policy.zero_tol;
    };
    if (inst.cells() && s.is_infinite()) {
        Int num = boost::multiprecision::numerator(R);
        Int den = boost::multiprecision::denominator(R);
        std::int64_t nmax = static_cast<std::int64_t>(num / den);
        for (const auto& cell : inst.cells()->cells_upto(nmax)) {
            if (cell.has_generic && is_zero(cell.generic_rep)) {
                // the whole cell vanishes; enumerate its members
                for (const auto& v :
                     s.shell(static_cast<std::uint64_t>(cell.n), policy.budget)) {
                    bool exceptional =
                        std::find(cell.exceptional.begin(), cell.exceptional.end(), v) !=
                        cell.exceptional.end();
                    if (s.kind == SpaceKind::integers) {
                        int sg = v.n() == 0 ? 0 : (v.n() > 0 ? 1 : -1);
                        if (sg != cell.sign) continue;
                    }
                    if (!exceptional) zeros.push_back(v);
                    if (zeros.size() > policy.budget) throw budget_error("zero set exceeds budget");
                }
            }
            for (const auto& e : cell.exceptional)
                if (is_zero(e)) zeros.push_back(e);
        }
    } else {
        auto ball = s.ball(R, policy.budget);
        for (const auto& v : ball.vertices)
            if (is_zero(v)) zeros.push_back(v);
    }
    std::sort(zeros.begin(), zeros.end(),
              [&s](const Vertex& a, const Vertex& b) { return s.canon_less(a, b); });
    return zeros;
}

std::vector<Vertex> u_epsilon(const OperatorInstance& inst, const Scalar& eps, const Rat& R,
                              const Policy& policy) {
    if (!(eps.sign() > 0)) throw domain_error("epsilon must be positive");
    const Space& s = inst.space();
    std::vector<Vertex> out;
    auto ball = s.ball(R, policy.budget);
    for (const auto& v : ball.vertices)
        if (!(ratio(inst, v) < eps)) out.push_back(v);
    return out;
}

namespace {

std::vector<Rat> tail_thresholds(const OperatorInstance& inst, const Policy& policy) {
    std::vector<Rat> Ns;
    Rat top = policy.scan_radius(inst.space(), inst.cells().has_value());
    Rat n(1);
    while (n <= top) {
        Ns.push_back(n);
        n *= 2;
    }
    if (Ns.empty()) Ns.push_back(Rat(1));
    return Ns;
}

}  // namespace

LimitEstimate essential_norm_estimate(const OperatorInstance& inst, const Policy& policy,
                                      const ScanCache* cache) {
    LimitEstimate est;
    Rat R = policy.scan_radius(inst.space(), inst.cells().has_value());
    ScanCache local;
    if (!cache || cache->radius != R) {
        local = make_scan_cache(inst, R, policy);
        cache = &local;
    }
    for (const Rat& N : tail_thresholds(inst, policy)) {
        Rat n2 = N * N;
        double sup = 0;
        bool any = false;
        for (const auto& e : cache->entries) {
            if (e.image_len_sq < n2) continue;
            any = true;
            sup = std::max(sup, e.ratio_d);
        }
        if (any) est.evidence.push_back({to_double(N), sup, sup});
    }
    est.converged = converged_trail(est.evidence, policy);
    est.kind = LimitEstimate::Kind::numeric;
    est.outcome = LimitEstimate::Outcome::undetermined;
    if (!est.evidence.empty()) est.value = est.evidence.back().hi;

    if (inst.cert()) {
        ExtReal e = inst.cert()->essential_norm();
        est.kind = LimitEstimate::Kind::exact;
        est.outcome = LimitEstimate::Outcome::value;
        est.infinite = e.is_pinf();
        if (e.is_finite()) {
            est.exact_value = Scalar(e.value);
            est.value = to_double(e.value);
        }
        est.source = "engine";
        return est;
    }
    const AssertedFacts& f = inst.facts();
    if (f.tail_sup_formula) {
        // numeric limit of the asserted closed form along a doubling schedule
        std::vector<EvidencePoint> formula_ev;
        Rat N(1);
        Scalar last(Rat(0));
        for (int i = 0; i < 60; ++i) {
            last = eval_rule_at_number(*f.tail_sup_formula, Scalar(N));
            formula_ev.push_back({to_double(N), last.approx(), last.approx()});
            N *= 2;
        }
        est.kind = LimitEstimate::Kind::exact;
        est.outcome = LimitEstimate::Outcome::value;
        est.source = "asserted";
        bool conv = converged_trail(formula_ev, policy);
        double tail_value = formula_ev.back().hi;
        if (conv && std::abs(tail_value) <= policy.abs_tol) {
            est.exact_value = Scalar(Rat(0));
            est.value = 0;
        } else if (last.exact() && last.is_rational() &&
                   eval_rule_at_number(*f.tail_sup_formula, Scalar(N * 2)) == last) {
            // eventually constant closed form
            est.exact_value = last;
            est.value = last.approx();
        } else {
            est.kind = LimitEstimate::Kind::numeric;
            est.outcome = conv ? LimitEstimate::Outcome::value
                               : LimitEstimate::Outcome::undetermined;
            est.value = tail_value;
        }
        return est;
    }
    if (f.ratio_limit) {
        // when the ratio has a limit L and the range is infinite, tail sups
        // converge to L: every tail vertex has a large source length
        bool infinite_range = f.finite_range && !*f.finite_range;
        if (infinite_range) {
            est.kind = LimitEstimate::Kind::exact;
            est.outcome = LimitEstimate::Outcome::value;
            est.exact_value = Scalar(*f.ratio_limit);
            est.value = to_double(*f.ratio_limit);
            est.source = "asserted (ratio limit)";
        }
    }
    return est;
}

LimitEstimate limsup_shell_estimate(const OperatorInstance& inst, const Policy& policy,
                                    const ScanCache* cache) {
    LimitEstimate est;
    Rat R = policy.scan_radius(inst.space(), inst.cells().has_value());
    ScanCache local;
    if (!cache || cache->radius != R) {
        local = make_scan_cache(inst, R, policy);
        cache = &local;
    }
    std::map<std::int64_t, double> shell_max;
    for (const auto& e : cache->entries) {
        auto it = shell_max.find(e.shell);
        if (it == shell_max.end())
            shell_max[e.shell] = e.ratio_d;
        else
            it->second = std::max(it->second, e.ratio_d);
    }
    std::vector<std::pair<std::int64_t, double>> shells(shell_max.begin(), shell_max.end());
    std::vector<double> suffix(shells.size(), 0);
    for (std::size_t i = shells.size(); i-- > 0;)
        suffix[i] = std::max(shells[i].second, i + 1 < shells.size() ? suffix[i + 1] : 0.0);
    for (std::size_t i = 0; i < shells.size(); ++i)
        est.evidence.push_back({static_cast<double>(shells[i].first), suffix[i], suffix[i]});
    est.converged = converged_trail(est.evidence, policy);
    est.kind = LimitEstimate::Kind::numeric;
    est.outcome = LimitEstimate::Outcome::undetermined;
    if (!est.evidence.empty()) est.value = est.evidence.back().hi;

    if (inst.cert()) {
        // limsup over shells: the largest class limit
        ExtReal best = ExtReal::finite(Rat(0));
        bool any = false;
        for (const auto& c : inst.cert()->classes()) {
            ExtReal l = c.ratio.limit_at_infinity();
            if (!any || best < l) best = l;
            any = true;
        }
        if (any) {
            est.kind = LimitEstimate::Kind::exact;
            est.outcome = LimitEstimate::Outcome::value;
            est.infinite = best.is_pinf();
            if (best.is_finite()) {
                est.exact_value = Scalar(best.value);
                est.value = to_double(best.value);
            }
            est.source = "engine";
        }
    }
    return est;
}

namespace {

void validate_reals_against_engine(const OperatorInstance& inst) {
    const RadialCert* cert = inst.cert();
    if (!cert) return;
    const AssertedFacts& f = inst.facts();
    if (f.ratio_sup) {
        ExactExt sup = cert->sup_ratio();
        bool match = f.ratio_sup->infinite ? sup.value.is_pinf()
                                           : sup.value == ExtReal::finite(f.ratio_sup->value);
        if (!match)
            throw contradiction_error(
                "asserted ratio_sup contradicts the exact supremum of the ratio");
    }
    if (f.ratio_inf) {
        ExactExt inf = cert->inf_ratio_offzero();
        if (!inf.value.is_pinf() && !(inf.value == ExtReal::finite(*f.ratio_inf)))
            throw contradiction_error(
                "asserted ratio_inf contradicts the exact infimum of the ratio");
    }
    if (f.ratio_limit) {
        auto xi = cert->xi();
        if (!xi.exists || !(xi.value == ExtReal::finite(*f.ratio_limit)))
            throw contradiction_error("asserted ratio_limit contradicts the exact limit");
    }
    if (f.tail_sup_formula) {
        for (long long N : {0LL, 1LL, 2LL, 3LL, 5LL, 8LL, 13LL, 21LL, 34LL}) {
            auto t = cert->tail_sup(Rat(N));
            Scalar asserted = eval_rule_at_number(*f.tail_sup_formula, Scalar(Rat(N)));
            if (t.empty) continue;
            if (t.ext.value.is_pinf()) {
                if (asserted.exact())
                    throw contradiction_error("asserted tail_sup_formula is finite where the "
                                              "exact tail supremum is infinite");
                continue;
            }
            if (asserted.exact() && asserted.is_rational() &&
                !(Scalar(t.ext.value.value) == Scalar(asserted.rational())))
                throw contradiction_error("asserted tail_sup_formula disagrees with the exact "
                                          "tail supremum at N = " + std::to_string(N));
        }
    }
}

void validate_injectivity_on_scan(const OperatorInstance& inst, const Policy& policy) {
    const AssertedFacts& f = inst.facts();
    if (!f.injective || !*f.injective) return;
    const Space& s = inst.space();
    if (inst.cells() && s.kind == SpaceKind::tree) {
        // collisions within a moving cell are immediate
        for (const auto& cell : inst.cells()->cells_upto(
                 std::min<std::int64_t>(policy.max_shells, 64))) {
            if (!cell.has_generic || cell.size - cell.exceptional.size() < 2) continue;
            Vertex img = inst.phi().eval(s, cell.generic_rep);
            if (!(img == cell.generic_rep)) {
                // a second generic member maps to the same place unless the
                // image tracks the vertex itself
                Vertex other = cell.rep == cell.generic_rep
                                   ? Vertex::tree([&] {
                                         TreeWord w = cell.generic_rep.word();
                                         if (!w.empty()) w.back() = 1;
                                         return w;
                                     }())
                                   : cell.rep;
                if (s.contains(other) && !(other == cell.generic_rep)) {
                    Vertex img2 = inst.phi().eval(s, other);
                    if (img2 == img)
                        throw contradiction_error(
                            "asserted injectivity fails: " + cell.generic_rep.str(&s) + " and " +
                            other.str(&s) + " share the image " + img.str(&s));
                }
            }
        }
        return;
    }
    Rat R = policy.scan_radius(s, false);
    std::unordered_map<Vertex, Vertex, VertexHash> seen;
    auto ball = s.ball(R, policy.budget);
    for (const auto& v : ball.vertices) {
        Vertex img = inst.phi().eval(s, v);
        auto [it, fresh] = seen.emplace(img, v);
        if (!fresh)
            throw contradiction_error("asserted injectivity fails: " + v.str(&s) + " and " +
                                      it->second.str(&s) + " share the image " + img.str(&s));
    }
}

void validate_surjectivity_on_scan(const OperatorInstance& inst, const Policy& policy) {
    const AssertedFacts& f = inst.facts();
    if (!f.surjective || !*f.surjective) return;
    const Space& s = inst.space();
    // check preimages for a modest window of targets where fibers are exact
    Rat Rv = s.is_infinite() ? Rat(8) : policy.scan_radius(s, false);
    Rat Rscan = policy.scan_radius(s, inst.cells().has_value());
    std::uint64_t checked = 0;
    auto check = [&](const Vertex& w) {
        if (checked > 512) return;
        ++checked;
        FiberQuery q;
        try {
            q = preimages(s, inst.phi(), w, Rscan, policy.budget);
        } catch (const budget_error&) {
            return;
        }
        if (q.complete && q.members.empty() && !q.all_of_space)
            throw contradiction_error("asserted surjectivity fails: " + w.str(&s) +
                                      " has no preimage");
    };
    try {
        auto ball = s.ball(Rv, policy.budget);
        for (const auto& v : ball.vertices) check(v);
    } catch (const budget_error&) {
        // tree balls may be too big to enumerate; sample shell representatives
        for (std::int64_t n = 0; n <= 64; ++n) check(s.shell_representative(n));
    }
}

}  // namespace

void validate_instance(const OperatorInstance& inst, const Policy& policy,
                       const ScanCache* cache) {
    const Space& s = inst.space();
    Rat R = policy.scan_radius(s, inst.cells().has_value());
    ScanCache local;
    if (!cache || cache->radius != R) {
        // building the cache evaluates every group and throws on nonpositive
        // weights or invalid rules
        local = make_scan_cache(inst, R, policy);
        cache = &local;
    }
    validate_reals_against_engine(inst);
    validate_injectivity_on_scan(inst, policy);
    validate_surjectivity_on_scan(inst, policy);

    // asserted reals against scan evidence (one-sided where only that is sound)
    const AssertedFacts& f = inst.facts();
    if (f.ratio_sup && !f.ratio_sup->infinite) {
        Scalar bound(f.ratio_sup->value);
        for (const auto& e : cache->entries) {
            bool over = e.ratio.exact() && bound.exact()
                            ? e.ratio > bound
                            : e.ratio_d > bound.approx() * (1 + policy.rel_tol) + policy.abs_tol;
            if (over)
                throw contradiction_error("asserted ratio_sup is exceeded at " + e.rep.str(&s));
        }
    }
    if (f.ratio_inf) {
        Scalar bound(*f.ratio_inf);
        for (const auto& e : cache->entries) {
            if (e.psi_zero) continue;
            bool under = e.ratio.exact() && bound.exact()
                             ? e.ratio < bound
                             : e.ratio_d < bound.approx() * (1 - policy.rel_tol) - policy.abs_tol;
            if (under)
                throw contradiction_error("asserted ratio_inf is undercut at " + e.rep.str(&s));
        }
    }
    if (f.tail_sup_formula && !inst.cert()) {
        for (long long N : {1LL, 2LL, 4LL, 8LL, 16LL}) {
            if (Rat(N) > R) break;
            Rat n2 = Rat(N) * Rat(N);
            std::optional<Scalar> sup;
            for (const auto& e : cache->entries) {
                if (e.image_len_sq < n2) continue;
                if (!sup || *sup < e.ratio) sup = e.ratio;
            }
            if (!sup) continue;
            Scalar asserted = eval_rule_at_number(*f.tail_sup_formula, Scalar(Rat(N)));
            bool over = sup->exact() && asserted.exact()
                            ? *sup > asserted
                            : sup->approx() >
                                  asserted.approx() * (1 + policy.rel_tol) + policy.abs_tol;
            if (over)
                throw contradiction_error(
                    "asserted tail_sup_formula is exceeded by truncation evidence at N = " +
                    std::to_string(N));
        }
    }
    if (f.ratio_limit && !inst.cert()) {
        auto sch = policy.schedule(s, inst.cells().has_value());
        LimitEstimate xi = xi_estimate(inst, sch, policy, cache);
        double L = to_double(*f.ratio_limit);
        // the trailing shells must not drift away from the asserted limit
        if (static_cast<int>(xi.evidence.size()) >= policy.window) {
            double prev = -1;
            bool drifting = true;
            for (std::size_t i = xi.evidence.size() - policy.window; i < xi.evidence.size(); ++i) {
                const auto& e = xi.evidence[i];
                double dist = e.lo > L ? e.lo - L : (e.hi < L ? L - e.hi : 0.0);
                if (dist <= std::max(policy.abs_tol, 0.5 * std::max(1.0, std::abs(L))) ||
                    dist < prev)
                    drifting = false;
                prev = dist;
            }
            if (drifting)
                throw contradiction_error(
                    "asserted ratio_limit is contradicted by diverging shell evidence");
        }
    }
}

}  // namespace wco
