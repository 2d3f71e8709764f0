#include "wco/rules.hpp"

#include <sstream>
#include <unordered_set>

namespace wco {

namespace {

void validate_pred(const Pred& p, const Space& s) {
    switch (p.kind) {
        case Pred::Kind::quadrant:
            if (s.kind != SpaceKind::gaussian)
                throw rule_error("quadrant predicate requires the gaussian space");
            return;
        case Pred::Kind::sign_is:
            if (s.kind != SpaceKind::integers)
                throw rule_error("sign predicate requires the integer space");
            return;
        case Pred::Kind::parity:
            if (s.kind == SpaceKind::gaussian)
                throw rule_error("parity(len) is undefined on the gaussian space");
            return;
        case Pred::Kind::vertex_eq:
            p.vlit.resolve(s);  // throws on mismatch
            return;
        case Pred::Kind::conj:
            for (const auto& t : p.terms) validate_pred(t, s);
            return;
        default: return;
    }
}

}  // namespace

ScalarRule ScalarRule::parse(const std::string& text) {
    Lexer lx(text);
    ScalarRule r;
    lx.expect("[");
    bool saw_else = false;
    while (true) {
        Clause c;
        if (lx.accept_ident("else")) {
            c.guard.kind = Pred::Kind::always;
            saw_else = true;
        } else {
            c.guard = parse_pred(lx);
        }
        lx.expect("->");
        c.body = parse_expr(lx, "len");
        r.clauses_.push_back(std::move(c));
        if (saw_else) break;
        lx.expect(",");
    }
    lx.expect("]");
    if (lx.accept_ident("override")) {
        lx.expect("(");
        while (true) {
            Override o;
            o.at = parse_vertex_lit(lx);
            lx.expect("->");
            o.value = parse_expr(lx, "len");
            r.overrides_.push_back(std::move(o));
            if (!lx.accept(",")) break;
        }
        lx.expect(")");
    }
    if (!lx.at_end()) lx.fail("trailing input after rule");
    return r;
}

ScalarRule ScalarRule::table(std::vector<Complex> values) {
    ScalarRule r;
    r.is_table_ = true;
    r.table_ = std::move(values);
    return r;
}

void ScalarRule::validate(const Space& s) const {
    if (is_table_) {
        if (s.kind != SpaceKind::finite)
            throw rule_error("scalar value tables require a finite space");
        if (table_.size() != s.table->size())
            throw rule_error("scalar table size does not match the space");
        return;
    }
    for (const auto& c : clauses_) validate_pred(c.guard, s);
    for (const auto& o : overrides_) o.at.resolve(s);
}

Complex ScalarRule::eval(const Space& s, const Vertex& v) const {
    if (is_table_) return table_.at(v.idx());
    for (const auto& o : overrides_)
        if (o.at.resolve(s) == v) return Complex(eval_expr(o.value, s.length(v)));
    for (const auto& c : clauses_)
        if (c.guard.matches(s, v)) return Complex(eval_expr(c.body, s.length(v)));
    throw rule_error("no clause matched (missing else?)");
}

std::string ScalarRule::print() const {
    if (is_table_) return "<table>";
    std::ostringstream os;
    os << "[ ";
    for (std::size_t i = 0; i < clauses_.size(); ++i) {
        if (i) os << ", ";
        os << clauses_[i].guard.print() << " -> " << print_expr(clauses_[i].body, "len");
    }
    os << " ]";
    if (!overrides_.empty()) {
        os << " override(";
        for (std::size_t i = 0; i < overrides_.size(); ++i) {
            if (i) os << ", ";
            os << overrides_[i].at.print() << " -> " << print_expr(overrides_[i].value, "len");
        }
        os << ")";
    }
    return os.str();
}

namespace {

/// Monomial check: body == c * len^k with c != 0 (k may be 0).
bool body_is_nonzero_monomial(const Expr& e) {
    using Op = Expr::Op;
    switch (e.op) {
        case Op::constant: return e.value != 0;
        case Op::var: return true;
        case Op::mul:
        case Op::div:
            return body_is_nonzero_monomial(e.kids[0]) && body_is_nonzero_monomial(e.kids[1]);
        case Op::neg: return body_is_nonzero_monomial(e.kids[0]);
        case Op::pow: return body_is_nonzero_monomial(e.kids[0]);
        default: return false;
    }
}

bool body_uses_var(const Expr& e) {
    if (e.op == Expr::Op::var) return true;
    for (const auto& k : e.kids)
        if (body_uses_var(k)) return true;
    return false;
}

}  // namespace

bool ScalarRule::provably_nonzero(const Space& s) const {
    if (is_table_) {
        for (const auto& z : table_)
            if (z.is_zero()) return false;
        return true;
    }
    for (const auto& o : overrides_) {
        Scalar val = eval_expr(o.value, s.length(o.at.resolve(s)));
        if (val.is_zero()) return false;
    }
    bool root_shadowed = false;
    for (const auto& o : overrides_)
        if (o.at.resolve(s) == s.root()) root_shadowed = true;
    for (const auto& c : clauses_) {
        if (!body_is_nonzero_monomial(c.body)) return false;
        // a monomial with a len factor vanishes at the root
        if (body_uses_var(c.body) && !root_shadowed && c.guard.matches(s, s.root())) return false;
        if (c.guard.matches(s, s.root())) root_shadowed = true;
    }
    return true;
}

MapRule MapRule::identity() {
    MapRule m;
    m.kind_ = Kind::identity;
    return m;
}

MapRule MapRule::root_map() {
    MapRule m;
    m.kind_ = Kind::root_map;
    m.target_.kind = VertexLit::Kind::root;
    return m;
}

MapRule MapRule::table(std::vector<std::size_t> targets) {
    MapRule m;
    m.kind_ = Kind::table;
    m.table_ = std::move(targets);
    return m;
}

MapRule MapRule::make_constant(VertexLit target) {
    MapRule m;
    m.kind_ = Kind::constant;
    m.target_ = std::move(target);
    return m;
}

MapRule MapRule::make_resequence(Expr g) {
    MapRule m;
    m.kind_ = Kind::resequence;
    m.formula_ = std::move(g);
    return m;
}

MapRule MapRule::make_rotation(int quarter_turns) {
    MapRule m;
    m.kind_ = Kind::rotation;
    m.quarter_turns_ = ((quarter_turns % 4) + 4) % 4;
    return m;
}

MapRule MapRule::make_intmap(Expr f) {
    MapRule m;
    m.kind_ = Kind::intmap;
    m.formula_ = std::move(f);
    return m;
}

MapRule MapRule::make_piecewise(std::vector<Branch> branches) {
    MapRule m;
    m.kind_ = Kind::piecewise;
    m.branches_ = std::move(branches);
    return m;
}

MapRule MapRule::make_littable(std::vector<std::pair<VertexLit, VertexLit>> pairs) {
    MapRule m;
    m.kind_ = Kind::table;
    m.lit_pairs_ = std::move(pairs);
    return m;
}

namespace {

MapRule parse_map_any(Lexer& lx);

MapRule parse_map_atom(Lexer& lx) {
    if (lx.accept_ident("identity")) return MapRule::identity();
    if (lx.accept_ident("root_map")) return MapRule::root_map();
    if (lx.accept_ident("constant")) {
        lx.expect("(");
        VertexLit lit = parse_vertex_lit(lx);
        lx.expect(")");
        return MapRule::make_constant(std::move(lit));
    }
    if (lx.accept_ident("resequence")) {
        lx.expect("(");
        Expr g = parse_expr(lx, "n");
        lx.expect(")");
        return MapRule::make_resequence(std::move(g));
    }
    if (lx.accept_ident("rotation")) {
        lx.expect("(");
        bool neg = lx.accept("-");
        if (lx.peek().kind != Lexer::Token::Kind::integer) lx.fail("expected quarter-turn count");
        long long q = lx.get().ivalue * (neg ? -1 : 1);
        lx.expect(")");
        return MapRule::make_rotation(static_cast<int>(((q % 4) + 4) % 4));
    }
    if (lx.accept_ident("intmap")) {
        lx.expect("(");
        Expr f = parse_expr(lx, "v");
        lx.expect(")");
        return MapRule::make_intmap(std::move(f));
    }
    if (lx.accept_ident("table")) {
        lx.expect("(");
        std::vector<std::pair<VertexLit, VertexLit>> pairs;
        while (true) {
            VertexLit a = parse_vertex_lit(lx);
            lx.expect("->");
            VertexLit b = parse_vertex_lit(lx);
            pairs.emplace_back(std::move(a), std::move(b));
            if (!lx.accept(",")) break;
        }
        lx.expect(")");
        return MapRule::make_littable(std::move(pairs));
    }
    if (lx.peek().kind == Lexer::Token::Kind::punct && lx.peek().text == "[")
        return parse_map_any(lx);
    lx.fail("expected map rule");
    return MapRule::identity();  // unreachable
}

MapRule parse_map_any(Lexer& lx) {
    if (!(lx.peek().kind == Lexer::Token::Kind::punct && lx.peek().text == "["))
        return parse_map_atom(lx);
    lx.expect("[");
    std::vector<MapRule::Branch> branches;
    bool saw_else = false;
    while (true) {
        MapRule::Branch b;
        if (lx.accept_ident("else")) {
            b.guard.kind = Pred::Kind::always;
            saw_else = true;
        } else {
            b.guard = parse_pred(lx);
        }
        lx.expect("->");
        b.rule = std::make_shared<MapRule>(parse_map_atom(lx));
        branches.push_back(std::move(b));
        if (saw_else) break;
        lx.expect(",");
    }
    lx.expect("]");
    return MapRule::make_piecewise(std::move(branches));
}

}  // namespace

MapRule MapRule::parse(const std::string& text) {
    Lexer lx(text);
    MapRule m = parse_map_any(lx);
    if (!lx.at_end()) lx.fail("trailing input after map rule");
    return m;
}

void MapRule::validate(const Space& s) const {
    switch (kind_) {
        case Kind::identity: return;
        case Kind::root_map: return;
        case Kind::constant:
            target_.resolve(s);
            return;
        case Kind::resequence:
            if (s.kind != SpaceKind::tree && s.kind != SpaceKind::integers)
                throw rule_error("resequence requires a tree or the integer space");
            return;
        case Kind::rotation:
            if (s.kind != SpaceKind::gaussian)
                throw rule_error("rotation requires the gaussian space");
            return;
        case Kind::intmap:
            if (s.kind != SpaceKind::integers)
                throw rule_error("intmap requires the integer space");
            return;
        case Kind::piecewise:
            for (const auto& b : branches_) {
                validate_pred(b.guard, s);
                b.rule->validate(s);
            }
            if (branches_.empty() || branches_.back().guard.kind != Pred::Kind::always)
                throw rule_error("piecewise map must end with an else branch");
            return;
        case Kind::table: {
            if (s.kind != SpaceKind::finite)
                throw rule_error("table maps require a finite space");
            if (!lit_pairs_.empty()) {
                std::unordered_set<std::size_t> seen;
                for (const auto& [a, b] : lit_pairs_) {
                    Vertex va = a.resolve(s);
                    b.resolve(s);
                    if (!seen.insert(va.idx()).second)
                        throw rule_error("table map lists a vertex twice");
                }
                if (seen.size() != s.table->size())
                    throw rule_error("table map must be total on the space");
            } else if (table_.size() != s.table->size()) {
                throw rule_error("table map must be total on the space");
            }
            return;
        }
    }
}

Vertex MapRule::eval(const Space& s, const Vertex& v) const {
    switch (kind_) {
        case Kind::identity: return v;
        case Kind::root_map: return s.root();
        case Kind::constant: return target_.resolve(s);
        case Kind::resequence: {
            Scalar n = Scalar(Rat(static_cast<long long>(s.shell_index(v))));
            Scalar g = eval_expr(formula_, n);
            if (!g.is_rational()) throw rule_error("resequence target length is not rational");
            Rat q = g.rational();
            if (q < 0 || boost::multiprecision::denominator(q) != 1)
                throw rule_error("resequence target length " + q.str() +
                                 " is not realizable in this space");
            auto L = static_cast<std::uint64_t>(boost::multiprecision::numerator(q));
            return s.shell_representative(L);
        }
        case Kind::rotation: {
            std::int64_t re = v.g().re, im = v.g().im;
            for (int i = 0; i < quarter_turns_; ++i) {
                std::int64_t nre = -im, nim = re;
                re = nre;
                im = nim;
            }
            return Vertex::gauss(re, im);
        }
        case Kind::intmap: {
            Scalar x = Scalar(Rat(v.n()));
            Scalar y = eval_expr(formula_, x);
            if (!y.is_rational()) throw rule_error("intmap target is not rational");
            Rat q = y.rational();
            if (boost::multiprecision::denominator(q) != 1)
                throw rule_error("intmap target " + q.str() + " is not an integer");
            return Vertex::integer(static_cast<std::int64_t>(boost::multiprecision::numerator(q)));
        }
        case Kind::piecewise:
            for (const auto& b : branches_)
                if (b.guard.matches(s, v)) return b.rule->eval(s, v);
            throw rule_error("no piecewise branch matched (missing else?)");
        case Kind::table: {
            if (!table_.empty()) return Vertex::finite(table_.at(v.idx()));
            for (const auto& [a, b] : lit_pairs_)
                if (a.resolve(s) == v) return b.resolve(s);
            throw rule_error("table map misses vertex " + v.str(&s));
        }
    }
    throw rule_error("bad map rule");
}

std::string MapRule::print() const {
    switch (kind_) {
        case Kind::identity: return "identity";
        case Kind::root_map: return "root_map";
        case Kind::constant: return "constant(" + target_.print() + ")";
        case Kind::resequence: return "resequence(" + print_expr(formula_, "n") + ")";
        case Kind::rotation: return "rotation(" + std::to_string(quarter_turns_) + ")";
        case Kind::intmap: return "intmap(" + print_expr(formula_, "v") + ")";
        case Kind::piecewise: {
            std::ostringstream os;
            os << "[ ";
            for (std::size_t i = 0; i < branches_.size(); ++i) {
                if (i) os << ", ";
                os << branches_[i].guard.print() << " -> " << branches_[i].rule->print();
            }
            os << " ]";
            return os.str();
        }
        case Kind::table: {
            std::ostringstream os;
            os << "table(";
            if (!lit_pairs_.empty()) {
                for (std::size_t i = 0; i < lit_pairs_.size(); ++i) {
                    if (i) os << ", ";
                    os << lit_pairs_[i].first.print() << " -> " << lit_pairs_[i].second.print();
                }
            } else {
                for (std::size_t i = 0; i < table_.size(); ++i) {
                    if (i) os << ", ";
                    os << i << " -> " << table_[i];
                }
            }
            os << ")";
            return os.str();
        }
    }
    return "?";
}

namespace {

/// Upper bound on how many vertices a predicate can match, when that is
/// finite and evident: vertex_eq and is_root match one; len == c matches one
/// shell; conjunctions take the min. Returns nullopt for "possibly infinite".
std::optional<std::uint64_t> pred_finite_cover(const Pred& p, const Space& s) {
    switch (p.kind) {
        case Pred::Kind::is_root:
        case Pred::Kind::vertex_eq: return 1;
        case Pred::Kind::len_cmp:
            if (p.cmp == Pred::Cmp::eq || p.cmp == Pred::Cmp::lt || p.cmp == Pred::Cmp::le) {
                // bounded length region
                if (s.kind == SpaceKind::tree && s.branching >= 2) return std::nullopt;  // big but finite; treat as unknown size
                return std::nullopt;
            }
            return std::nullopt;
        case Pred::Kind::conj: {
            std::optional<std::uint64_t> best;
            for (const auto& t : p.terms) {
                auto c = pred_finite_cover(t, s);
                if (c && (!best || *c < *best)) best = c;
            }
            return best;
        }
        default: return std::nullopt;
    }
}

/// Is the predicate's match set certainly infinite on an infinite space
/// (parity classes, quadrants, sign classes, unbounded len comparisons,
/// else)? Conservative: false when unsure.
bool pred_infinite_cover(const Pred& p, const Space& s) {
    if (!s.is_infinite()) return false;
    switch (p.kind) {
        case Pred::Kind::always: return true;
        case Pred::Kind::parity: return true;
        case Pred::Kind::quadrant: return true;
        case Pred::Kind::sign_is: return p.sign != 0;
        case Pred::Kind::len_cmp:
            return p.cmp == Pred::Cmp::ge || p.cmp == Pred::Cmp::gt || p.cmp == Pred::Cmp::ne;
        case Pred::Kind::conj: {
            // all terms must be infinite-cover and mutually compatible;
            // conservatively require sign/parity/len-tail conjunctions only
            for (const auto& t : p.terms)
                if (!pred_infinite_cover(t, s)) return false;
            return true;
        }
        default: return false;
    }
}

bool map_finite_range(const Space& s, const MapRule& m, bool& known);

bool map_finite_range(const Space& s, const MapRule& m, bool& known) {
    known = true;
    switch (m.kind()) {
        case MapRule::Kind::root_map:
        case MapRule::Kind::constant: return true;
        case MapRule::Kind::table: return true;
        case MapRule::Kind::identity:
        case MapRule::Kind::rotation: return !s.is_infinite();
        case MapRule::Kind::intmap: {
            // constant expression?
            auto f = expr_as_ratfn(m.formula(), false);
            if (f && f->num().degree() <= 0 && f->den().degree() <= 0) return true;
            if (f) return !s.is_infinite();
            known = false;
            return false;
        }
        case MapRule::Kind::resequence: {
            auto f = expr_as_ratfn(m.formula(), true);
            if (f && f->num().degree() <= 0 && f->den().degree() <= 0) return true;  // constant g
            if (f && f->den().degree() == 0 && f->num().degree() >= 1) return false; // polynomial g
            known = false;
            return false;
        }
        case MapRule::Kind::piecewise: {
            bool all_finite = true;
            for (const auto& b : m.branches()) {
                bool k = true;
                bool fin = map_finite_range(s, *b.rule, k);
                if (!k) {
                    known = false;
                    return false;
                }
                if (!fin) {
                    // infinite-range branch only matters if its guard covers
                    // infinitely many vertices
                    if (pred_infinite_cover(b.guard, s)) return false;
                    if (!pred_finite_cover(b.guard, s)) {
                        known = false;
                        return false;
                    }
                }
                all_finite = all_finite && (fin || pred_finite_cover(b.guard, s).has_value());
            }
            return all_finite;
        }
    }
    known = false;
    return false;
}

}  // namespace

MapStructure analyze_map(const Space& s, const MapRule& m) {
    MapStructure st;
    bool infinite = s.is_infinite();
    switch (m.kind()) {
        case MapRule::Kind::identity:
            st.surjective = true;
            st.injective = true;
            st.finite_range = !infinite;
            st.identity_off_finite = true;
            return st;
        case MapRule::Kind::rotation:
            st.surjective = true;
            st.injective = true;
            st.finite_range = !infinite;
            return st;
        case MapRule::Kind::root_map:
        case MapRule::Kind::constant:
            st.finite_range = true;
            if (infinite) {
                st.surjective = false;
                st.injective = false;
            }
            return st;
        case MapRule::Kind::resequence: {
            bool known = true;
            bool fin = map_finite_range(s, m, known);
            if (known) st.finite_range = fin;
            if (s.kind == SpaceKind::integers) {
                st.surjective = false;  // representatives are nonnegative
                st.injective = false;   // +n and -n collapse
            } else if (s.kind == SpaceKind::tree && s.branching >= 2) {
                st.surjective = false;  // canonical-first targets miss shell mates
                st.injective = false;   // whole shells collapse
            }
            return st;
        }
        case MapRule::Kind::intmap: {
            bool known = true;
            bool fin = map_finite_range(s, m, known);
            if (known) st.finite_range = fin;
            return st;
        }
        case MapRule::Kind::table: {
            st.finite_range = true;
            // exact on finite spaces
            std::vector<char> hit(s.table->size(), 0);
            bool inj = true;
            for (std::size_t i = 0; i < s.table->size(); ++i) {
                Vertex t = m.eval(s, Vertex::finite(i));
                if (hit[t.idx()]) inj = false;
                hit[t.idx()] = 1;
            }
            bool surj = true;
            for (char h : hit) surj = surj && h;
            st.surjective = surj;
            st.injective = inj;
            return st;
        }
        case MapRule::Kind::piecewise: {
            bool known = true;
            bool fin = map_finite_range(s, m, known);
            if (known) st.finite_range = fin;
            if (known && fin && infinite) {
                st.surjective = false;
                st.injective = false;
            }
            // identity off a finite exceptional set: every non-identity branch
            // pinned to explicit vertices
            bool id_off_finite = true;
            std::vector<Vertex> exceptional;
            for (const auto& b : m.branches()) {
                if (b.rule->kind() == MapRule::Kind::identity) continue;
                auto cover = pred_finite_cover(b.guard, s);
                if (!cover) {
                    id_off_finite = false;
                    break;
                }
                // collect the pinned vertices (is_root / vertex_eq atoms)
                std::vector<const Pred*> atoms;
                if (b.guard.kind == Pred::Kind::conj)
                    for (const auto& t : b.guard.terms) atoms.push_back(&t);
                else
                    atoms.push_back(&b.guard);
                bool pinned = false;
                for (const Pred* a : atoms) {
                    if (a->kind == Pred::Kind::is_root) {
                        exceptional.push_back(s.root());
                        pinned = true;
                        break;
                    }
                    if (a->kind == Pred::Kind::vertex_eq) {
                        exceptional.push_back(a->vlit.resolve(s));
                        pinned = true;
                        break;
                    }
                }
                if (!pinned) {
                    id_off_finite = false;
                    break;
                }
            }
            if (id_off_finite && !m.branches().empty() &&
                m.branches().back().rule->kind() == MapRule::Kind::identity) {
                st.identity_off_finite = true;
                st.exceptional = std::move(exceptional);
            }
            return st;
        }
    }
    return st;
}

namespace {

bool number_pred(const Pred& p, const Scalar& n) {
    switch (p.kind) {
        case Pred::Kind::always: return true;
        case Pred::Kind::is_root: return n.is_zero();
        case Pred::Kind::len_cmp: {
            int t = compare(n, Scalar(p.bound));
            switch (p.cmp) {
                case Pred::Cmp::eq: return t == 0;
                case Pred::Cmp::ne: return t != 0;
                case Pred::Cmp::le: return t <= 0;
                case Pred::Cmp::ge: return t >= 0;
                case Pred::Cmp::lt: return t < 0;
                case Pred::Cmp::gt: return t > 0;
            }
            return false;
        }
        case Pred::Kind::parity: {
            if (!n.is_rational()) throw rule_error("parity guard on a non-integer threshold");
            Rat q = n.rational();
            if (boost::multiprecision::denominator(q) != 1)
                throw rule_error("parity guard on a non-integer threshold");
            bool odd = boost::multiprecision::numerator(q) % 2 != 0;
            return odd == p.parity_odd;
        }
        case Pred::Kind::conj:
            for (const auto& t : p.terms)
                if (!number_pred(t, n)) return false;
            return true;
        default:
            throw rule_error("tail formulas only take length-style guards");
    }
}

}  // namespace

Scalar eval_rule_at_number(const ScalarRule& r, const Scalar& n) {
    if (r.is_table()) throw rule_error("tail formulas cannot be value tables");
    if (!r.overrides().empty()) throw rule_error("tail formulas take no overrides");
    for (const auto& c : r.clauses())
        if (number_pred(c.guard, n)) return eval_expr(c.body, n);
    throw rule_error("no clause matched the threshold (missing else?)");
}

AssertedFacts declared_facts(const Space& s, const MapRule& m, const AssertedFacts& user) {
    MapStructure st = analyze_map(s, m);
    AssertedFacts f = user;
    auto merge = [](std::optional<bool>& slot, std::optional<bool> structural, const char* name) {
        if (structural) {
            if (slot && *slot != *structural)
                throw contradiction_error(std::string("asserted fact '") + name +
                                          "' contradicts the map's structure");
            slot = structural;
        }
    };
    merge(f.surjective, st.surjective, "surjective");
    merge(f.injective, st.injective, "injective");
    merge(f.finite_range, st.finite_range, "finite_range");
    if (f.surjective && f.injective) {
        bool bij = *f.surjective && *f.injective;
        if (f.bijective && *f.bijective != bij)
            throw contradiction_error("asserted fact 'bijective' contradicts surjective/injective");
        f.bijective = bij;
    }
    if (f.bijective && *f.bijective) {
        if ((f.surjective && !*f.surjective) || (f.injective && !*f.injective))
            throw contradiction_error("bijective asserted but surjectivity or injectivity fails");
        f.surjective = true;
        f.injective = true;
    }
    if (f.finite_range && *f.finite_range && s.is_infinite()) {
        if (f.surjective && *f.surjective)
            throw contradiction_error("finite range contradicts surjectivity on an infinite space");
        f.surjective = false;
    }
    return f;
}

}  // namespace wco
