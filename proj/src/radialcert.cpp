#include "wco/radialcert.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace wco {

namespace {

enum class TailTruth { yes, no, needs_even_modulus, undecidable };

/// Truth of a guard over the whole tail {n >= start, n == residue mod M} of
/// one side of the space.
TailTruth guard_on_tail(const Pred& p, const Space& s, int sign, std::int64_t residue,
                        std::int64_t modulus, std::int64_t start) {
    switch (p.kind) {
        case Pred::Kind::always: return TailTruth::yes;
        case Pred::Kind::is_root: return TailTruth::no;  // start >= 1
        case Pred::Kind::vertex_eq: return TailTruth::no; // pinned vertices are carved out
        case Pred::Kind::sign_is: return (p.sign == sign) ? TailTruth::yes : TailTruth::no;
        case Pred::Kind::quadrant: return TailTruth::undecidable;
        case Pred::Kind::parity: {
            if (modulus % 2 != 0) return TailTruth::needs_even_modulus;
            bool odd = (residue % 2) != 0;
            return odd == p.parity_odd ? TailTruth::yes : TailTruth::no;
        }
        case Pred::Kind::len_cmp: {
            // start exceeds every breakpoint, so the comparison is constant
            Rat lo(start);
            bool above = lo > p.bound;
            switch (p.cmp) {
                case Pred::Cmp::gt:
                case Pred::Cmp::ge:
                case Pred::Cmp::ne: return above ? TailTruth::yes : TailTruth::undecidable;
                case Pred::Cmp::lt:
                case Pred::Cmp::le:
                case Pred::Cmp::eq: return above ? TailTruth::no : TailTruth::undecidable;
            }
            return TailTruth::undecidable;
        }
        case Pred::Kind::conj: {
            bool all_yes = true;
            for (const auto& t : p.terms) {
                TailTruth r = guard_on_tail(t, s, sign, residue, modulus, start);
                if (r == TailTruth::no) return TailTruth::no;
                if (r == TailTruth::needs_even_modulus) return r;
                if (r == TailTruth::undecidable) return r;
                all_yes = all_yes && r == TailTruth::yes;
            }
            return all_yes ? TailTruth::yes : TailTruth::undecidable;
        }
    }
    return TailTruth::undecidable;
}

std::optional<const Expr*> resolve_scalar_clause(const ScalarRule& r, const Space& s, int sign,
                                                 std::int64_t residue, std::int64_t modulus,
                                                 std::int64_t start, bool& needs_even) {
    for (const auto& c : r.clauses()) {
        TailTruth t = guard_on_tail(c.guard, s, sign, residue, modulus, start);
        if (t == TailTruth::yes) return &c.body;
        if (t == TailTruth::no) continue;
        if (t == TailTruth::needs_even_modulus) {
            needs_even = true;
            return std::nullopt;
        }
        return std::nullopt;
    }
    return std::nullopt;
}

std::optional<const MapRule*> resolve_map_branch(const std::vector<MapBranch>& branches,
                                                 const Space& s, int sign, std::int64_t residue,
                                                 std::int64_t modulus, std::int64_t start,
                                                 bool& needs_even) {
    for (const auto& b : branches) {
        TailTruth t = guard_on_tail(b.guard, s, sign, residue, modulus, start);
        if (t == TailTruth::yes) return b.atom;
        if (t == TailTruth::no) continue;
        if (t == TailTruth::needs_even_modulus) {
            needs_even = true;
            return std::nullopt;
        }
        return std::nullopt;
    }
    return std::nullopt;
}

std::int64_t ceil_rat(const Rat& q) {
    Int num = boost::multiprecision::numerator(q);
    Int den = boost::multiprecision::denominator(q);
    Int c = num >= 0 ? Int((num + den - 1) / den) : Int(num / den);
    return static_cast<std::int64_t>(c);
}

void collect_len_bounds(const Pred& p, std::int64_t& out) {
    if (p.kind == Pred::Kind::len_cmp) {
        std::int64_t b = ceil_rat(p.bound);
        out = std::max(out, b + 1);
    }
    if (p.kind == Pred::Kind::conj)
        for (const auto& t : p.terms) collect_len_bounds(t, out);
}

/// Newton-basis integrality: a degree-d polynomial is integer-valued on an
/// arithmetic progression iff its first d+1 values there are integers.
bool integer_valued_on(const Poly& g, std::int64_t first, std::int64_t modulus) {
    int d = std::max(0, g.degree());
    for (int k = 0; k <= d; ++k) {
        Rat v = g.eval(Rat(first + k * modulus));
        if (boost::multiprecision::denominator(v) != 1) return false;
    }
    return true;
}

std::int64_t mod_nonneg(const Rat& value, std::int64_t m) {
    Int num = boost::multiprecision::numerator(value);
    Int r = num % m;
    if (r < 0) r += m;
    return static_cast<std::int64_t>(r);
}

/// g mod m constant on the progression? Checked by proving (g(n0+kM)-g(n0))/m
/// is integer-valued (Newton test on its values).
bool residue_constant(const Poly& g, std::int64_t first, std::int64_t modulus, std::int64_t m) {
    if (m == 1) return true;
    int d = std::max(0, g.degree());
    Rat base = g.eval(Rat(first));
    for (int k = 0; k <= d + 1; ++k) {
        Rat diff = g.eval(Rat(first + k * modulus)) - base;
        if (boost::multiprecision::denominator(diff) != 1) return false;
        if (mod_nonneg(diff, m) != 0) return false;
    }
    return true;
}

std::int64_t poly_tail_bound(const Poly& g) {
    RatFn f(g, Poly::constant(Rat(1)));
    Rat b = f.tail_bound();
    Int num = boost::multiprecision::numerator(b);
    Int den = boost::multiprecision::denominator(b);
    return static_cast<std::int64_t>(num / den + 1);
}

/// First class point n >= lo with g(n) >= bound; g must be unbounded above on
/// the class. Binary search past g's monotone bound.
std::optional<std::int64_t> first_reaching(const Poly& g, const ArgClass& cls, std::int64_t lo,
                                           const Rat& bound) {
    std::int64_t k = std::max(lo, poly_tail_bound(g));
    std::int64_t a = cls.next_after(k - 1);
    // below the monotone region: test points individually
    for (std::int64_t n = cls.next_after(lo - 1); n < a; n = cls.next_after(n))
        if (g.eval(Rat(n)) >= bound) return n;
    if (g.eval(Rat(a)) >= bound) return a;
    // march in doubling steps then bisect
    std::int64_t step = cls.modulus;
    std::int64_t hi = a;
    for (int i = 0; i < 200; ++i) {
        hi = hi + step;
        hi = cls.next_after(hi - 1);
        if (g.eval(Rat(hi)) >= bound) break;
        step *= 2;
        if (step > (INT64_MAX >> 3)) return std::nullopt;
    }
    if (g.eval(Rat(hi)) < bound) return std::nullopt;
    while (hi - a > cls.modulus) {
        std::int64_t mid = cls.next_after(a + (hi - a) / 2 - 1);
        if (mid <= a || mid >= hi) break;
        if (g.eval(Rat(mid)) >= bound)
            hi = mid;
        else
            a = mid;
    }
    return hi;
}

/// Extremum of f over class points skipping an exclusion list (all exclusions
/// must lie below the scan bound, which holds for zero sets by construction).
std::optional<Extremum> extremum_excluding(const RatFn& f, const ArgClass& cls, bool want_sup,
                                           const std::vector<std::int64_t>& excluded) {
    Rat tb = f.tail_bound();
    std::int64_t k = 0;
    {
        Int num = boost::multiprecision::numerator(tb);
        Int den = boost::multiprecision::denominator(tb);
        k = static_cast<std::int64_t>(num / den + 1);
    }
    for (std::int64_t e : excluded) k = std::max(k, e);
    if (k > 2'000'000) return std::nullopt;
    auto is_excluded = [&](std::int64_t n) {
        return std::find(excluded.begin(), excluded.end(), n) != excluded.end();
    };
    Extremum best;
    bool have = false;
    auto consider = [&](const ExtReal& v, bool att, std::int64_t at) {
        if (!have || (want_sup ? best.value < v : v < best.value) ||
            (v == best.value && att && !best.attained)) {
            best = {v, att, at};
            have = true;
        }
    };
    for (std::int64_t n = cls.first(); n <= k; n = cls.next_after(n)) {
        if (is_excluded(n)) continue;
        auto v = f.eval(Rat(n));
        if (!v) return std::nullopt;
        consider(ExtReal::finite(*v), true, n);
    }
    std::int64_t n1 = cls.next_after(k);
    while (is_excluded(n1)) n1 = cls.next_after(n1);
    auto v1 = f.eval(Rat(n1));
    if (!v1) return std::nullopt;
    consider(ExtReal::finite(*v1), true, n1);
    consider(f.limit_at_infinity(), false, 0);
    if (!have) return std::nullopt;
    return best;
}

}  // namespace

struct RadialCertBuilder {
    const Space& s;
    const ScalarRule& mu;
    const ScalarRule& psi;
    const MapRule& phi;
    CellModel cm;
    std::vector<MapBranch> branches;

    struct Attempt {
        bool needs_even = false;
        bool needs_finer = false;
        std::optional<RadialCert> cert;
    };

    Vertex vertex_at(std::int64_t len, int sign) const {
        if (s.kind == SpaceKind::tree)
            return Vertex::tree(TreeWord(static_cast<std::size_t>(len), 0));
        return Vertex::integer(sign >= 0 ? len : -len);
    }

    Attempt attempt(std::int64_t M) {
        Attempt out;
        RadialCert cert;
        cert.space_ = &s;
        cert.mu_rule_ = &mu;
        cert.psi_rule_ = &psi;
        cert.phi_rule_ = &phi;

        // breakpoint: beyond it every guard is tail-decidable
        std::int64_t B = 1;
        auto scan_rule_bounds = [&](const ScalarRule& r) {
            for (const auto& c : r.clauses()) collect_len_bounds(c.guard, B);
        };
        scan_rule_bounds(mu);
        scan_rule_bounds(psi);
        for (const auto& b : branches) collect_len_bounds(b.guard, B);
        for (const auto& e : cm.exceptional())
            B = std::max(B, static_cast<std::int64_t>(s.shell_index(e)) + 1);
        for (const auto& b : branches) {
            if (b.atom->kind() == MapRule::Kind::constant)
                B = std::max(B, static_cast<std::int64_t>(
                                    s.shell_index(b.atom->target_lit().resolve(s))) +
                                    1);
        }
        if (B > 4096) return out;

        std::vector<int> signs =
            s.kind == SpaceKind::integers ? std::vector<int>{1, -1} : std::vector<int>{1};

        // pass 1: scalar class functions
        struct ScalarClassFn {
            RatFn mu, psi;
        };
        std::map<std::pair<int, std::int64_t>, ScalarClassFn> scalar_fns;
        for (int sign : signs) {
            for (std::int64_t r = 0; r < M; ++r) {
                bool needs_even = false;
                auto mu_body = resolve_scalar_clause(mu, s, sign, r, M, B, needs_even);
                auto psi_body = resolve_scalar_clause(psi, s, sign, r, M, B, needs_even);
                if (needs_even) {
                    out.needs_even = true;
                    return out;
                }
                if (!mu_body || !psi_body) return out;
                auto mu_fn = expr_as_ratfn(**mu_body, true);
                auto psi_fn = expr_as_ratfn(**psi_body, true);
                if (!mu_fn || !psi_fn) return out;
                scalar_fns[{sign, r}] = {*mu_fn, *psi_fn};
            }
        }

        // pass 2: classes with map targets
        for (int sign : signs) {
            for (std::int64_t r = 0; r < M; ++r) {
                bool needs_even = false;
                auto atom = resolve_map_branch(branches, s, sign, r, M, B, needs_even);
                if (needs_even) {
                    out.needs_even = true;
                    return out;
                }
                if (!atom) return out;

                TailClass tc;
                tc.sign = sign;
                tc.args = ArgClass{B, r, M};
                tc.cell_growth = s.kind == SpaceKind::tree ? s.branching : 1;
                const auto& sf = scalar_fns[{sign, r}];
                tc.mu = sf.mu;
                tc.psi = sf.psi;

                std::int64_t start = tc.args.first();

                // |psi| needs a sign-stable tail
                {
                    Rat tb = sf.psi.tail_bound();
                    start = std::max(start, ceil_rat(tb) + 1);
                }
                {
                    Rat tb = sf.mu.tail_bound();
                    start = std::max(start, ceil_rat(tb) + 1);
                }
                start = tc.args.next_after(start - 1);  // stay on the residue class

                switch ((*atom)->kind()) {
                    case MapRule::Kind::identity:
                        tc.target.kind = ClassTarget::Kind::identity;
                        break;
                    case MapRule::Kind::root_map:
                        tc.target.kind = ClassTarget::Kind::fixed;
                        tc.target.fixed = s.root();
                        break;
                    case MapRule::Kind::constant:
                        tc.target.kind = ClassTarget::Kind::fixed;
                        tc.target.fixed = (*atom)->target_lit().resolve(s);
                        break;
                    case MapRule::Kind::resequence:
                    case MapRule::Kind::intmap: {
                        auto fn = expr_as_ratfn((*atom)->formula(),
                                                (*atom)->kind() == MapRule::Kind::resequence);
                        if (!fn) return out;
                        std::optional<Poly> gp;
                        int tsign = 1;
                        if ((*atom)->kind() == MapRule::Kind::resequence) {
                            gp = fn->as_poly();
                            if (!gp) return out;
                        } else {
                            // substitute v = sign * n
                            Poly sn;
                            sn.c = {Rat(0), Rat(sign)};
                            RatFn t = fn->compose_poly(sn);
                            auto tp = t.as_poly();
                            if (!tp) return out;
                            auto tsgn = t.tail_sign(ArgClass{B, r, M});
                            if (!tsgn) return out;
                            if (*tsgn == 0) {
                                // target identically zero: the root
                                tc.target.kind = ClassTarget::Kind::fixed;
                                tc.target.fixed = s.root();
                                break;
                            }
                            tsign = *tsgn;
                            if (tsign < 0) {
                                Poly neg = *tp;
                                for (auto& c : neg.c) c = -c;
                                gp = neg;
                            } else {
                                gp = *tp;
                            }
                        }
                        if (gp->degree() <= 0) {
                            // constant target length: the canonical vertex there
                            Rat L = gp->c.empty() ? Rat(0) : gp->c[0];
                            if (L < 0 || boost::multiprecision::denominator(L) != 1) return out;
                            std::int64_t len = static_cast<std::int64_t>(
                                boost::multiprecision::numerator(L));
                            tc.target.kind = ClassTarget::Kind::fixed;
                            tc.target.fixed = len == 0 ? s.root()
                                                       : vertex_at(len, tsign);
                            break;
                        }
                        tc.target.kind = ClassTarget::Kind::moving;
                        tc.target.len = *gp;
                        tc.target.sign = s.kind == SpaceKind::integers ? tsign : 1;
                        if (!integer_valued_on(*gp, start, M)) {
                            out.needs_finer = true;
                            return out;
                        }
                        // target lengths must clear the breakpoint so target
                        // weights resolve through class functions
                        auto reach = first_reaching(*gp, tc.args, start, Rat(B));
                        if (!reach) return out;
                        start = std::max(start, *reach);
                        start = std::max(start, poly_tail_bound(*gp));  // monotone targets
                        // carve source shells whose target hits a pinned vertex
                        for (const auto& e : cm.exceptional()) {
                            RatFn gfn(*gp, Poly::constant(Rat(1)));
                            auto sols = [&]() -> std::optional<std::vector<std::int64_t>> {
                                RatFn shifted =
                                    gfn - RatFn::constant(Rat(s.shell_index(e)));
                                return shifted.zeros_over(tc.args);
                            }();
                            if (!sols) return out;
                            for (std::int64_t n : *sols) start = std::max(start, n + 1);
                        }
                        break;
                    }
                    default: return out;
                }

                // align the raised start with the residue class
                tc.args.start = tc.args.next_after(start - 1);

                // target weight profile
                RatFn mu_t;
                switch (tc.target.kind) {
                    case ClassTarget::Kind::identity: mu_t = tc.mu; break;
                    case ClassTarget::Kind::fixed: {
                        Complex val = mu.eval(s, tc.target.fixed);
                        if (!val.is_real() || !val.re.is_rational()) return out;
                        mu_t = RatFn::constant(val.re.rational());
                        break;
                    }
                    case ClassTarget::Kind::moving: {
                        // when the target-side weight profile is the same for
                        // every residue, no residue tracking is needed
                        auto fn_equal = [](const RatFn& a, const RatFn& b) {
                            return (a.num() * b.den() - b.num() * a.den()).is_zero();
                        };
                        const RatFn& base = scalar_fns[{tc.target.sign, 0}].mu;
                        bool uniform = true;
                        for (std::int64_t rr = 1; rr < M; ++rr)
                            uniform = uniform &&
                                      fn_equal(scalar_fns[{tc.target.sign, rr}].mu, base);
                        if (uniform) {
                            mu_t = base.compose_poly(tc.target.len);
                            break;
                        }
                        if (!residue_constant(tc.target.len, tc.args.next_after(start - 1), M,
                                              M)) {
                            out.needs_finer = true;
                            return out;
                        }
                        std::int64_t rt = mod_nonneg(
                            tc.target.len.eval(Rat(tc.args.next_after(start - 1))), M);
                        auto it = scalar_fns.find({tc.target.sign, rt});
                        if (it == scalar_fns.end()) return out;
                        mu_t = it->second.mu.compose_poly(tc.target.len);
                        break;
                    }
                }

                // |psi| on the sign-stable tail
                auto psgn = tc.psi.tail_sign(tc.args);
                if (!psgn) return out;
                tc.abs_psi = *psgn >= 0 ? tc.psi : RatFn::constant(Rat(0)) - tc.psi;
                tc.mu_abs_psi = tc.mu * tc.abs_psi;
                if (mu_t.is_zero()) return out;
                tc.ratio = tc.mu_abs_psi / mu_t;

                // weight positivity on the class
                auto msgn = tc.mu.tail_sign(tc.args);
                if (!msgn || *msgn <= 0)
                    throw rule_error("weight is not positive on an unbounded vertex class");
                auto zs = tc.mu.zeros_over(tc.args);
                if (!zs || !zs->empty())
                    throw rule_error("weight vanishes on the space");

                cert.classes_.push_back(std::move(tc));
            }
        }

        cert.prefix_bound_ = B;
        for (const auto& c : cert.classes_)
            cert.prefix_bound_ = std::max(cert.prefix_bound_, c.args.start);

        // pointwise prefix cells and exceptional vertices
        auto add_point = [&](const Vertex& v, bool whole_cell, std::int64_t n, int sign,
                             std::uint64_t size) {
            PointVal p;
            p.v = v;
            p.whole_cell = whole_cell;
            p.n = n;
            p.sign = sign;
            p.cell_size = size;
            Complex muv = mu.eval(s, v);
            Complex psv = psi.eval(s, v);
            if (!muv.is_real()) throw rule_error("weight must be real");
            p.mu = muv.re;
            if (!(p.mu.sign() > 0)) throw rule_error("weight must be positive at " + v.str(&s));
            p.abs_psi = psv.abs();
            p.mu_abs_psi = p.mu * p.abs_psi;
            p.image = phi.eval(s, v);
            Complex mimg = mu.eval(s, p.image);
            if (!mimg.is_real() || !(mimg.re.sign() > 0))
                throw rule_error("weight must be positive at " + p.image.str(&s));
            p.ratio = p.mu_abs_psi / mimg.re;
            cert.points_.push_back(std::move(p));
        };

        for (int sign : signs) {
            for (std::int64_t n = 0; n < cert.prefix_bound_; ++n) {
                if (n == 0 && sign < 0) continue;
                std::int64_t r = n % M;
                // find this (sign, residue) class and skip shells it covers
                bool covered = false;
                for (const auto& c : cert.classes_)
                    if (c.sign == sign && c.args.contains(n)) covered = true;
                if (covered) continue;
                Cell cell = cm.cell_of(n, n == 0 ? 0 : sign);
                if (cell.has_generic)
                    add_point(cell.generic_rep, true, n, cell.sign,
                              cell.size - cell.exceptional.size());
                (void)r;
            }
        }
        for (const auto& e : cm.exceptional())
            add_point(e, false, static_cast<std::int64_t>(s.shell_index(e)),
                      s.kind == SpaceKind::integers ? (e.n() == 0 ? 0 : (e.n() > 0 ? 1 : -1))
                                                    : (s.shell_index(e) == 0 ? 0 : 1),
                      1);

        for (const auto& c : cert.classes_) {
            cert.has_identity_class_ =
                cert.has_identity_class_ || c.target.kind == ClassTarget::Kind::identity;
            cert.has_moving_class_ =
                cert.has_moving_class_ || c.target.kind == ClassTarget::Kind::moving;
        }

        out.cert = std::move(cert);
        return out;
    }
};

std::optional<RadialCert> RadialCert::build(const Space& s, const ScalarRule& mu,
                                            const ScalarRule& psi, const MapRule& phi) {
    auto cm = CellModel::build(s, mu, psi, phi);
    if (!cm) return std::nullopt;
    RadialCertBuilder builder{s, mu, psi, phi, *cm, flatten_map(phi)};
    for (const auto& b : builder.branches) {
        switch (b.atom->kind()) {
            case MapRule::Kind::identity:
            case MapRule::Kind::root_map:
            case MapRule::Kind::constant:
            case MapRule::Kind::resequence:
            case MapRule::Kind::intmap: break;
            default: return std::nullopt;
        }
    }
    for (std::int64_t M : {1, 2, 4, 8, 16, 3, 6, 12, 24, 48}) {
        auto att = builder.attempt(M);
        if (att.cert) return std::move(att.cert);
        if (att.needs_even || att.needs_finer) continue;
        return std::nullopt;  // a genuine decline, a finer modulus will not help
    }
    return std::nullopt;
}

namespace {

ExactExt from_extremum(const Extremum& e, const Space& s, const TailClass& c) {
    ExactExt x;
    x.value = e.value;
    x.attained = e.attained;
    if (e.attained) {
        if (s.kind == SpaceKind::tree)
            x.witness = Vertex::tree(TreeWord(static_cast<std::size_t>(e.at), 0));
        else
            x.witness = Vertex::integer(c.sign >= 0 ? e.at : -e.at);
    } else {
        x.approach = std::string("limit along shells n == ") + std::to_string(c.args.residue) +
                     " (mod " + std::to_string(c.args.modulus) + ")" +
                     (c.sign < 0 ? ", negative side" : "");
    }
    return x;
}

void consider_ext(std::optional<ExactExt>& best, const ExactExt& cand, bool want_sup) {
    if (!best) {
        best = cand;
        return;
    }
    bool better = want_sup ? best->value < cand.value : cand.value < best->value;
    if (better || (cand.value == best->value && cand.attained && !best->attained)) best = cand;
}

}  // namespace

ExactExt RadialCert::sup_ratio() const {
    std::optional<ExactExt> best;
    for (const auto& c : classes_) {
        auto e = c.ratio.sup_over(c.args);
        if (!e) {
            // unreachable by construction; treat as declined via +inf safety
            ExactExt x;
            x.value = ExtReal::pinf();
            consider_ext(best, x, true);
            continue;
        }
        consider_ext(best, from_extremum(*e, *space_, c), true);
    }
    for (const auto& p : points_) {
        ExactExt x;
        if (!p.ratio.exact() || !p.ratio.is_rational()) {
            // surd point values: compare exactly anyway via Scalar ordering;
            // represented through a rational proxy is impossible, so fall back
            // to marking sup unattainable here. In practice tree/integer
            // evaluations are rational.
            x.value = ExtReal::pinf();
            consider_ext(best, x, true);
            continue;
        }
        x.value = ExtReal::finite(p.ratio.rational());
        x.attained = true;
        x.witness = p.v;
        consider_ext(best, x, true);
    }
    if (!best) {
        ExactExt z;
        z.value = ExtReal::finite(Rat(0));
        return z;
    }
    return *best;
}

ExactExt RadialCert::inf_ratio_offzero() const {
    std::optional<ExactExt> best;
    for (const auto& c : classes_) {
        if (c.abs_psi.is_zero()) continue;  // whole class inside the zero set
        auto zeros = c.ratio.zeros_over(c.args);
        if (!zeros) continue;
        auto e = extremum_excluding(c.ratio, c.args, false, *zeros);
        if (!e) continue;
        consider_ext(best, from_extremum(*e, *space_, c), false);
    }
    for (const auto& p : points_) {
        if (p.abs_psi.is_zero()) continue;
        if (!p.ratio.is_rational()) continue;
        ExactExt x;
        x.value = ExtReal::finite(p.ratio.rational());
        x.attained = true;
        x.witness = p.v;
        consider_ext(best, x, false);
    }
    if (!best) {
        ExactExt z;
        z.value = ExtReal::pinf();  // empty off-zero set: infimum over nothing
        return z;
    }
    return *best;
}

RadialCert::XiResult RadialCert::xi() const {
    XiResult r;
    bool first = true;
    for (const auto& c : classes_) {
        ExtReal l = c.ratio.limit_at_infinity();
        if (first) {
            r.value = l;
            r.exists = true;
            first = false;
        } else if (!(l == r.value)) {
            r.exists = false;
            return r;
        }
    }
    if (first) r.exists = false;  // no unbounded classes (finite space shapes)
    return r;
}

RadialCert::TailSup RadialCert::tail_sup(const Rat& N) const {
    TailSup out;
    std::optional<ExactExt> best;
    for (const auto& c : classes_) {
        switch (c.target.kind) {
            case ClassTarget::Kind::identity: {
                ArgClass raised = c.args;
                raised.start = std::max(raised.start, ceil_rat(N));
                raised.start = raised.next_after(raised.start - 1);
                auto e = c.ratio.sup_over(raised);
                if (e) consider_ext(best, from_extremum(*e, *space_, c), true);
                break;
            }
            case ClassTarget::Kind::fixed: {
                Rat len2 = space_->length_sq(c.target.fixed);
                if (len2 >= N * N || N <= 0) {
                    auto e = c.ratio.sup_over(c.args);
                    if (e) consider_ext(best, from_extremum(*e, *space_, c), true);
                }
                break;
            }
            case ClassTarget::Kind::moving: {
                auto cross = first_reaching(c.target.len, c.args, c.args.start, N);
                if (!cross) break;
                // beyond the class start the target length is monotone, so the
                // constraint set is exactly the tail from the crossing point
                ArgClass raised = c.args;
                raised.start = *cross;
                auto e = c.ratio.sup_over(raised);
                if (e) consider_ext(best, from_extremum(*e, *space_, c), true);
                break;
            }
        }
    }
    for (const auto& p : points_) {
        if (space_->length_sq(p.image) < N * N && N > 0) continue;
        if (!p.ratio.is_rational()) continue;
        ExactExt x;
        x.value = ExtReal::finite(p.ratio.rational());
        x.attained = true;
        x.witness = p.v;
        consider_ext(best, x, true);
    }
    if (!best) {
        out.empty = true;
        out.ext.value = ExtReal::finite(Rat(0));
        return out;
    }
    out.ext = *best;
    return out;
}

ExtReal RadialCert::essential_norm() const {
    // tail thresholds eventually exclude every bounded-image part; each class
    // with unbounded image contributes the limit of its ratio profile
    ExtReal best = ExtReal::finite(Rat(0));
    for (const auto& c : classes_) {
        bool unbounded_image = c.target.kind == ClassTarget::Kind::identity ||
                               (c.target.kind == ClassTarget::Kind::moving &&
                                c.target.len.degree() >= 1);
        if (!unbounded_image) continue;
        ExtReal l = c.ratio.limit_at_infinity();
        if (best < l) best = l;
    }
    return best;
}

bool RadialCert::mu_typical() const {
    for (const auto& c : classes_)
        if (!(c.mu.limit_at_infinity() == ExtReal::finite(Rat(0)))) return false;
    return !classes_.empty();
}

bool RadialCert::mu_abs_psi_vanishes() const {
    for (const auto& c : classes_)
        if (!(c.mu_abs_psi.limit_at_infinity() == ExtReal::finite(Rat(0)))) return false;
    return !classes_.empty();
}

bool RadialCert::mu_abs_psi_stays_large() const {
    for (const auto& c : classes_) {
        ExtReal l = c.mu_abs_psi.limit_at_infinity();
        if (l.is_pinf() || (l.is_finite() && l.value > 0)) return true;
    }
    return false;
}

RadialCert::ZeroSet RadialCert::psi_zero_set() const {
    ZeroSet z;
    std::vector<Vertex> zeros;
    for (const auto& c : classes_) {
        if (c.abs_psi.is_zero()) {
            z.kind = ZeroSet::Kind::infinite;
            return z;
        }
        auto zs = c.abs_psi.zeros_over(c.args);
        if (!zs) {
            z.kind = ZeroSet::Kind::infinite;  // unknown treated as not-finite
            return z;
        }
        for (std::int64_t n : *zs) {
            // the whole cell vanishes there
            std::uint64_t size = space_->kind == SpaceKind::tree
                                     ? space_->shell_size(static_cast<std::uint64_t>(n))
                                     : 1;
            if (size > 4096 || zeros.size() > 4096) {
                z.kind = ZeroSet::Kind::finite;
                z.zeros.clear();
                return z;  // finite but not enumerated
            }
            if (space_->kind == SpaceKind::tree) {
                for (const auto& v : space_->shell(static_cast<std::uint64_t>(n), 1 << 20))
                    zeros.push_back(v);
            } else {
                zeros.push_back(Vertex::integer(c.sign >= 0 ? n : -n));
            }
        }
    }
    for (const auto& p : points_) {
        if (!p.abs_psi.is_zero()) continue;
        if (p.whole_cell) {
            if (space_->kind == SpaceKind::tree && p.cell_size > 4096) {
                z.kind = ZeroSet::Kind::finite;
                z.zeros.clear();
                return z;
            }
            if (space_->kind == SpaceKind::tree) {
                for (const auto& v :
                     space_->shell(static_cast<std::uint64_t>(p.n), 1 << 20)) {
                    bool exceptional = false;
                    for (const auto& q : points_)
                        if (!q.whole_cell && q.v == v) exceptional = true;
                    if (!exceptional) zeros.push_back(v);
                }
            } else {
                zeros.push_back(p.v);
            }
        } else {
            zeros.push_back(p.v);
        }
    }
    if (zeros.empty()) {
        z.kind = ZeroSet::Kind::empty;
    } else {
        z.kind = ZeroSet::Kind::finite;
        z.zeros = std::move(zeros);
    }
    return z;
}

std::optional<bool> RadialCert::image_complement_finite() const {
    bool saw_bad = false;
    for (const auto& c : classes_) {
        if (c.target.kind == ClassTarget::Kind::identity) continue;
        // non-identity unbounded class: on trees with branching >= 2 its
        // non-canonical members are never images
        if (space_->kind == SpaceKind::tree && space_->branching >= 2) return false;
        saw_bad = true;
    }
    if (saw_bad) return std::nullopt;  // integers: coverage needs map-specific reasoning
    return true;
}

std::optional<std::vector<Vertex>> RadialCert::image_complement_if_finite() const {
    auto fin = image_complement_finite();
    if (!fin || !*fin) return std::nullopt;
    // all unbounded classes are identity; only the pointwise region can be
    // missed
    std::vector<Vertex> missing;
    for (const auto& p : points_) {
        std::vector<Vertex> members;
        if (p.whole_cell && space_->kind == SpaceKind::tree) {
            if (p.cell_size > 4096) return std::nullopt;
            for (const auto& v : space_->shell(static_cast<std::uint64_t>(p.n), 1 << 20)) {
                bool exceptional = false;
                for (const auto& q : points_)
                    if (!q.whole_cell && q.v == v) exceptional = true;
                if (!exceptional) members.push_back(v);
            }
        } else {
            members.push_back(p.v);
        }
        for (const auto& v : members) {
            // is v an image? identity classes hit everything they contain;
            // points hit their recorded images
            bool hit = false;
            for (const auto& c : classes_)
                if (c.sign == (space_->kind == SpaceKind::integers
                                   ? (v.n() == 0 ? 0 : (v.n() > 0 ? 1 : -1))
                                   : 1) &&
                    c.target.kind == ClassTarget::Kind::identity &&
                    c.args.contains(static_cast<std::int64_t>(space_->shell_index(v))))
                    hit = true;
            for (const auto& q : points_) {
                if (q.whole_cell && q.image == q.v) {
                    // identity prefix cell: every member is its own image
                    if (q.n == static_cast<std::int64_t>(space_->shell_index(v)) &&
                        q.sign == (space_->kind == SpaceKind::integers
                                       ? (v.n() == 0 ? 0 : (v.n() > 0 ? 1 : -1))
                                       : (space_->shell_index(v) == 0 ? 0 : 1)))
                        hit = true;
                } else if (q.image == v) {
                    hit = true;
                }
            }
            for (const auto& c : classes_) {
                if (c.target.kind == ClassTarget::Kind::fixed && c.target.fixed == v) hit = true;
                if (c.target.kind == ClassTarget::Kind::moving) {
                    // moving targets are canonical representatives
                    std::int64_t len = static_cast<std::int64_t>(space_->shell_index(v));
                    if (!(v == space_->shell_representative(
                                  static_cast<std::uint64_t>(len))))
                        continue;
                    if (space_->kind == SpaceKind::integers &&
                        ((v.n() >= 0 ? 1 : -1) != c.target.sign))
                        continue;
                    RatFn g(c.target.len, Poly::constant(Rat(1)));
                    RatFn shifted = g - RatFn::constant(Rat(len));
                    auto sols = shifted.zeros_over(c.args);
                    if (!sols) return std::nullopt;
                    if (!sols->empty()) hit = true;
                }
            }
            if (!hit) missing.push_back(v);
        }
    }
    return missing;
}

std::optional<bool> RadialCert::fibers_uniformly_bounded() const {
    for (const auto& c : classes_) {
        if (c.target.kind == ClassTarget::Kind::fixed) return false;  // infinite fiber
        if (c.target.kind == ClassTarget::Kind::moving && c.cell_growth >= 2)
            return false;  // whole growing cells collapse onto one vertex
    }
    // identity classes and, on the integers, moving classes with polynomial
    // targets have per-target solution counts bounded by degrees
    bool only_identity = true;
    for (const auto& c : classes_)
        if (c.target.kind != ClassTarget::Kind::identity) only_identity = false;
    if (only_identity) return true;
    if (space_->kind == SpaceKind::integers) return true;
    return std::nullopt;
}

std::optional<bool> RadialCert::fibers_eventually_singleton() const {
    for (const auto& c : classes_) {
        if (c.target.kind == ClassTarget::Kind::fixed) return false;
        if (c.target.kind == ClassTarget::Kind::moving && c.cell_growth >= 2) return false;
    }
    // integer moving classes: identical target profiles on both sides merge
    // pairs forever
    for (std::size_t i = 0; i < classes_.size(); ++i)
        for (std::size_t j = i + 1; j < classes_.size(); ++j) {
            const auto& a = classes_[i];
            const auto& b = classes_[j];
            if (a.target.kind != ClassTarget::Kind::moving ||
                b.target.kind != ClassTarget::Kind::moving)
                continue;
            if (a.target.sign != b.target.sign) continue;
            Poly diff = a.target.len - b.target.len;
            if (diff.is_zero() && a.args.residue == b.args.residue &&
                a.args.modulus == b.args.modulus)
                return false;  // same targets from two sides
        }
    auto inj = injective();
    if (inj && *inj) return true;
    bool only_identity = true;
    for (const auto& c : classes_)
        if (c.target.kind != ClassTarget::Kind::identity) only_identity = false;
    if (only_identity) return true;
    return std::nullopt;
}

std::optional<bool> RadialCert::injective() const {
    for (const auto& c : classes_) {
        if (c.target.kind == ClassTarget::Kind::fixed) return false;
        if (c.target.kind == ClassTarget::Kind::moving && c.cell_growth >= 2) return false;
    }
    // point-level merges
    for (const auto& p : points_) {
        if (p.whole_cell) continue;
        if (p.image == p.v) continue;
        // does some identity region or other point also produce this image?
        for (const auto& c : classes_)
            if (c.target.kind == ClassTarget::Kind::identity &&
                c.args.contains(static_cast<std::int64_t>(space_->shell_index(p.image))))
                return false;
        for (const auto& q : points_) {
            if (&q == &p) continue;
            if (q.whole_cell && q.image == q.v) {
                if (q.n == static_cast<std::int64_t>(space_->shell_index(p.image))) return false;
            } else if (q.image == p.image || (q.whole_cell && q.image == p.image)) {
                return false;
            }
        }
    }
    bool only_identity = true;
    for (const auto& c : classes_)
        if (c.target.kind != ClassTarget::Kind::identity) only_identity = false;
    if (only_identity) return true;
    return std::nullopt;
}

namespace {

Vertex moving_target_vertex(const Space& s, std::int64_t len, int sign) {
    if (len == 0) return s.root();
    if (s.kind == SpaceKind::integers) return Vertex::integer(sign >= 0 ? len : -len);
    return s.shell_representative(static_cast<std::uint64_t>(len));
}

/// inf over class points of the pointwise max of several profiles. Beyond the
/// common tail bound all profiles are monotone and pairwise ordered, so the
/// dominant one decides the tail.
std::optional<Extremum> inf_of_max(const std::vector<RatFn>& fns, const ArgClass& cls) {
    if (fns.empty()) return std::nullopt;
    Rat bound(0);
    for (const auto& f : fns) bound = std::max(bound, f.tail_bound());
    for (std::size_t i = 0; i < fns.size(); ++i)
        for (std::size_t j = i + 1; j < fns.size(); ++j)
            bound = std::max(bound, (fns[i] - fns[j]).tail_bound());
    Int num = boost::multiprecision::numerator(bound);
    Int den = boost::multiprecision::denominator(bound);
    if (num / den > 2'000'000) return std::nullopt;
    std::int64_t k = static_cast<std::int64_t>(num / den + 1);
    auto value_at = [&](std::int64_t n) -> std::optional<Rat> {
        std::optional<Rat> best;
        for (const auto& f : fns) {
            auto v = f.eval(Rat(n));
            if (!v) return std::nullopt;
            if (!best || *v > *best) best = *v;
        }
        return best;
    };
    Extremum best;
    bool have = false;
    auto consider = [&](const ExtReal& v, bool att, std::int64_t at) {
        if (!have || v < best.value || (v == best.value && att && !best.attained)) {
            best = {v, att, at};
            have = true;
        }
    };
    for (std::int64_t n = cls.first(); n <= k; n = cls.next_after(n)) {
        auto v = value_at(n);
        if (!v) return std::nullopt;
        consider(ExtReal::finite(*v), true, n);
    }
    std::int64_t n1 = cls.next_after(k);
    auto v1 = value_at(n1);
    if (!v1) return std::nullopt;
    consider(ExtReal::finite(*v1), true, n1);
    // dominant profile on the tail
    std::size_t dom = 0;
    for (std::size_t i = 1; i < fns.size(); ++i) {
        auto a = fns[i].eval(Rat(n1)), b = fns[dom].eval(Rat(n1));
        if (a && b && *a > *b) dom = i;
    }
    consider(fns[dom].limit_at_infinity(), false, 0);
    if (!have) return std::nullopt;
    return best;
}

}  // namespace

std::optional<ExactExt> RadialCert::fiber_max_at(const Vertex& t) const {
    std::optional<ExactExt> best;
    std::int64_t tlen = static_cast<std::int64_t>(space_->shell_index(t));
    int tsgn = space_->kind == SpaceKind::integers ? (t.n() == 0 ? 0 : (t.n() > 0 ? 1 : -1))
                                                   : (tlen == 0 ? 0 : 1);
    for (const auto& c : classes_) {
        switch (c.target.kind) {
            case ClassTarget::Kind::fixed:
                if (c.target.fixed == t) {
                    auto e = c.ratio.sup_over(c.args);
                    if (!e) return std::nullopt;
                    consider_ext(best, from_extremum(*e, *space_, c), true);
                }
                break;
            case ClassTarget::Kind::identity: {
                if (space_->kind == SpaceKind::integers && c.sign != tsgn) break;
                if (!c.args.contains(tlen)) break;
                auto v = c.ratio.eval(Rat(tlen));
                if (!v) return std::nullopt;
                ExactExt x;
                x.value = ExtReal::finite(*v);
                x.attained = true;
                x.witness = t;
                consider_ext(best, x, true);
                break;
            }
            case ClassTarget::Kind::moving: {
                if (!(moving_target_vertex(*space_, tlen, c.target.sign) == t)) break;
                RatFn g(c.target.len, Poly::constant(Rat(1)));
                RatFn shifted = g - RatFn::constant(Rat(tlen));
                auto sols = shifted.zeros_over(c.args);
                if (!sols) return std::nullopt;
                for (std::int64_t n : *sols) {
                    auto v = c.ratio.eval(Rat(n));
                    if (!v) return std::nullopt;
                    ExactExt x;
                    x.value = ExtReal::finite(*v);
                    x.attained = true;
                    x.witness = space_->kind == SpaceKind::tree
                                    ? Vertex::tree(TreeWord(static_cast<std::size_t>(n), 0))
                                    : Vertex::integer(c.sign >= 0 ? n : -n);
                    consider_ext(best, x, true);
                }
                break;
            }
        }
    }
    for (const auto& p : points_) {
        bool maps_to_t = false;
        if (p.whole_cell && p.image == p.v) {
            // identity cell: t is its own preimage when it lies in the cell
            maps_to_t = p.n == tlen && (p.sign == tsgn || space_->kind != SpaceKind::integers);
        } else {
            maps_to_t = p.image == t;
        }
        if (!maps_to_t) continue;
        if (!p.ratio.is_rational()) return std::nullopt;
        ExactExt x;
        x.value = ExtReal::finite(p.ratio.rational());
        x.attained = true;
        x.witness = p.whole_cell && p.image == p.v ? t : p.v;
        consider_ext(best, x, true);
    }
    if (!best) return std::nullopt;  // t not in the image at all
    return best;
}

std::optional<ExactExt> RadialCert::beta(bool restrict_to_offzero) const {
    // zeros of psi interact with the index restriction; outside the pure
    // identity case, decline when zeros exist
    bool any_zero = false;
    for (const auto& c : classes_) {
        if (c.abs_psi.is_zero()) any_zero = true;
        auto zs = c.abs_psi.zeros_over(c.args);
        if (!zs) return std::nullopt;
        if (!zs->empty()) any_zero = true;
    }
    for (const auto& p : points_)
        if (p.abs_psi.is_zero()) any_zero = true;

    bool only_identity = true, only_fixed = true;
    for (const auto& c : classes_) {
        if (c.target.kind != ClassTarget::Kind::identity) only_identity = false;
        if (c.target.kind != ClassTarget::Kind::fixed) only_fixed = false;
    }
    bool points_identity = true;
    for (const auto& p : points_)
        if (!(p.image == p.v)) points_identity = false;

    if (only_identity && points_identity) {
        // every fiber is a singleton
        return restrict_to_offzero ? inf_ratio_offzero() : [&] {
            std::optional<ExactExt> best;
            for (const auto& c : classes_) {
                auto e = c.ratio.inf_over(c.args);
                if (!e) return ExactExt{ExtReal::finite(Rat(0)), false, std::nullopt, "declined"};
                consider_ext(best, from_extremum(*e, *space_, c), false);
            }
            for (const auto& p : points_) {
                if (!p.ratio.is_rational()) continue;
                ExactExt x;
                x.value = ExtReal::finite(p.ratio.rational());
                x.attained = true;
                x.witness = p.v;
                consider_ext(best, x, false);
            }
            if (!best) return ExactExt{ExtReal::pinf(), false, std::nullopt, ""};
            return *best;
        }();
    }

    if (any_zero && restrict_to_offzero) return std::nullopt;
    if (any_zero) return std::nullopt;

    // single constant map: one fiber, the whole space
    if (only_fixed && classes_.size() >= 1) {
        bool same = true;
        for (const auto& c : classes_)
            if (!(c.target.fixed == classes_[0].target.fixed)) same = false;
        for (const auto& p : points_)
            if (!(p.image == classes_[0].target.fixed)) same = false;
        if (same) {
            ExactExt e = sup_ratio();
            return e;
        }
    }

    // mixed identity/moving/fixed: exact handling on trees with cell growth,
    // declined on singleton-cell spaces when identity and moving classes mix
    bool singleton_cells = space_->kind == SpaceKind::integers ||
                           (space_->kind == SpaceKind::tree && space_->branching == 1);
    if (singleton_cells && has_identity_class_ && has_moving_class_) return std::nullopt;

    std::optional<ExactExt> best;

    // (1) special targets: fixed class targets and point images
    std::vector<Vertex> special;
    for (const auto& c : classes_)
        if (c.target.kind == ClassTarget::Kind::fixed) special.push_back(c.target.fixed);
    for (const auto& p : points_) special.push_back(p.image);
    std::sort(special.begin(), special.end(),
              [this](const Vertex& a, const Vertex& b) { return space_->canon_less(a, b); });
    special.erase(std::unique(special.begin(), special.end()), special.end());
    for (const auto& t : special) {
        std::optional<ExactExt> fm = fiber_max_at(t);
        if (!fm) return std::nullopt;
        consider_ext(best, *fm, false);
    }

    // (2) moving classes: the fiber of the moving target includes the whole
    // source cell plus the identity-covered target itself
    for (const auto& c : classes_) {
        if (c.target.kind != ClassTarget::Kind::moving) continue;
        std::vector<RatFn> parts{c.ratio};
        for (const auto& d : classes_) {
            if (&d == &c || d.target.kind != ClassTarget::Kind::moving) continue;
            if (d.target.sign != c.target.sign) continue;
            Poly diff = c.target.len - d.target.len;
            if (diff.is_zero()) {
                if (d.args.residue == c.args.residue && d.args.modulus == c.args.modulus) {
                    // the two sides share every target (integers +/-): merge
                    parts.push_back(d.ratio);
                }
                // otherwise a shared strictly-monotone target profile keeps
                // disjoint argument classes disjoint in the image
            } else {
                // distinct target profiles: disjoint when the target residues
                // separate, otherwise out of reach
                if (!residue_constant(c.target.len, c.args.first(), c.args.modulus,
                                      c.args.modulus) ||
                    !residue_constant(d.target.len, d.args.first(), d.args.modulus,
                                      d.args.modulus))
                    return std::nullopt;
                std::int64_t rt_c =
                    mod_nonneg(c.target.len.eval(Rat(c.args.first())), c.args.modulus);
                std::int64_t rt_d =
                    mod_nonneg(d.target.len.eval(Rat(d.args.first())), d.args.modulus);
                if (rt_c == rt_d) return std::nullopt;
            }
        }
        // the target vertex itself, when an identity class covers it
        {
            bool rc = residue_constant(c.target.len, c.args.first(), c.args.modulus,
                                       c.args.modulus);
            std::int64_t rt =
                rc ? mod_nonneg(c.target.len.eval(Rat(c.args.first())), c.args.modulus) : -1;
            for (const auto& d : classes_) {
                if (d.target.kind != ClassTarget::Kind::identity) continue;
                if (space_->kind == SpaceKind::integers && d.sign != c.target.sign) continue;
                if (rc && rt != d.args.residue % d.args.modulus) continue;
                if (!rc) {
                    // alternating residues: only safe when every identity class
                    // on that side shares one profile
                    for (const auto& d2 : classes_) {
                        if (d2.target.kind != ClassTarget::Kind::identity) continue;
                        if ((d2.ratio.num() * d.ratio.den() - d.ratio.num() * d2.ratio.den())
                                .is_zero())
                            continue;
                        return std::nullopt;
                    }
                }
                parts.push_back(d.ratio.compose_poly(c.target.len));
                if (!rc) break;
            }
        }
        auto e = inf_of_max(parts, c.args);
        if (!e) return std::nullopt;
        consider_ext(best, from_extremum(*e, *space_, c), false);
    }

    // (3) identity classes: generic vertices have singleton fibers; on
    // branching trees the carved/canonical special cases share the same cell
    // values, so the plain class infimum is exact
    for (const auto& c : classes_) {
        if (c.target.kind != ClassTarget::Kind::identity) continue;
        auto e = c.ratio.inf_over(c.args);
        if (!e) return std::nullopt;
        consider_ext(best, from_extremum(*e, *space_, c), false);
    }

    // (4) pointwise identity cells
    for (const auto& p : points_) {
        if (!(p.image == p.v)) continue;  // non-identity point images handled in (1)
        if (!p.ratio.is_rational()) return std::nullopt;
        ExactExt x;
        x.value = ExtReal::finite(p.ratio.rational());
        x.attained = true;
        x.witness = p.v;
        if (p.whole_cell && p.cell_size >= 2) {
            consider_ext(best, x, false);
        } else {
            auto fm = fiber_max_at(p.v);
            if (!fm) return std::nullopt;
            consider_ext(best, *fm, false);
        }
    }

    if (!best) return ExactExt{ExtReal::pinf(), false, std::nullopt, ""};
    return best;
}

}  // namespace wco
