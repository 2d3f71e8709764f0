#include "wco/expr.hpp"

#include <cctype>
#include <sstream>

namespace wco {

Scalar eval_expr(const Expr& e, const Scalar& var) {
    using Op = Expr::Op;
    switch (e.op) {
        case Op::constant: return Scalar(e.value);
        case Op::var: return var;
        case Op::add: return eval_expr(e.kids[0], var) + eval_expr(e.kids[1], var);
        case Op::sub: return eval_expr(e.kids[0], var) - eval_expr(e.kids[1], var);
        case Op::mul: return eval_expr(e.kids[0], var) * eval_expr(e.kids[1], var);
        case Op::div: {
            Scalar d = eval_expr(e.kids[1], var);
            if (d.is_zero()) throw rule_error("division by zero while evaluating rule");
            return eval_expr(e.kids[0], var) / d;
        }
        case Op::neg: return -eval_expr(e.kids[0], var);
        case Op::pow: return eval_expr(e.kids[0], var).pow(e.exponent);
        case Op::floor: return eval_expr(e.kids[0], var).floor();
        case Op::sqrt: {
            Scalar s = eval_expr(e.kids[0], var);
            if (s.sign() < 0) throw rule_error("sqrt of negative value while evaluating rule");
            return s.sqrt();
        }
        case Op::abs: return eval_expr(e.kids[0], var).abs();
    }
    throw rule_error("bad expression node");
}

std::optional<RatFn> expr_as_ratfn(const Expr& e, bool var_nonneg) {
    using Op = Expr::Op;
    switch (e.op) {
        case Op::constant: return RatFn::constant(e.value);
        case Op::var: return RatFn::var();
        case Op::add: {
            auto a = expr_as_ratfn(e.kids[0], var_nonneg), b = expr_as_ratfn(e.kids[1], var_nonneg);
            if (a && b) return *a + *b;
            return std::nullopt;
        }
        case Op::sub: {
            auto a = expr_as_ratfn(e.kids[0], var_nonneg), b = expr_as_ratfn(e.kids[1], var_nonneg);
            if (a && b) return *a - *b;
            return std::nullopt;
        }
        case Op::mul: {
            auto a = expr_as_ratfn(e.kids[0], var_nonneg), b = expr_as_ratfn(e.kids[1], var_nonneg);
            if (a && b) return *a * *b;
            return std::nullopt;
        }
        case Op::div: {
            auto a = expr_as_ratfn(e.kids[0], var_nonneg), b = expr_as_ratfn(e.kids[1], var_nonneg);
            if (a && b && !b->is_zero()) return *a / *b;
            return std::nullopt;
        }
        case Op::neg: {
            auto a = expr_as_ratfn(e.kids[0], var_nonneg);
            if (a) return RatFn::constant(Rat(0)) - *a;
            return std::nullopt;
        }
        case Op::pow: {
            auto a = expr_as_ratfn(e.kids[0], var_nonneg);
            if (a) {
                if (e.exponent < 0 && a->is_zero()) return std::nullopt;
                return a->pow(e.exponent);
            }
            return std::nullopt;
        }
        case Op::floor:
        case Op::sqrt: {
            // only constant subtrees fold
            auto a = expr_as_ratfn(e.kids[0], var_nonneg);
            if (a && a->num().degree() <= 0 && a->den().degree() <= 0) {
                Rat c = *a->eval(Rat(0));
                Scalar s = e.op == Op::floor ? Scalar(c).floor() : Scalar(c).sqrt();
                if (s.is_rational()) return RatFn::constant(s.rational());
            }
            return std::nullopt;
        }
        case Op::abs: {
            if (e.kids[0].op == Op::var && var_nonneg) return RatFn::var();
            auto a = expr_as_ratfn(e.kids[0], var_nonneg);
            if (a && a->num().degree() <= 0 && a->den().degree() <= 0) {
                Rat c = *a->eval(Rat(0));
                return RatFn::constant(c < 0 ? -c : c);
            }
            return std::nullopt;
        }
    }
    return std::nullopt;
}

namespace {

int precedence(Expr::Op op) {
    using Op = Expr::Op;
    switch (op) {
        case Op::add:
        case Op::sub: return 1;
        case Op::mul:
        case Op::div: return 2;
        case Op::neg: return 3;
        case Op::pow: return 4;
        default: return 5;
    }
}

void print_rec(std::ostringstream& os, const Expr& e, const std::string& var, int parent_prec) {
    using Op = Expr::Op;
    int prec = precedence(e.op);
    bool paren = prec < parent_prec;
    auto open = [&] { if (paren) os << "("; };
    auto close = [&] { if (paren) os << ")"; };
    switch (e.op) {
        case Op::constant: {
            if (e.value < 0) {
                os << "(" << e.value.str() << ")";
            } else {
                os << e.value.str();
            }
            return;
        }
        case Op::var: os << var; return;
        case Op::add:
            open();
            print_rec(os, e.kids[0], var, prec);
            os << " + ";
            print_rec(os, e.kids[1], var, prec + 1);
            close();
            return;
        case Op::sub:
            open();
            print_rec(os, e.kids[0], var, prec);
            os << " - ";
            print_rec(os, e.kids[1], var, prec + 1);
            close();
            return;
        case Op::mul:
            open();
            print_rec(os, e.kids[0], var, prec);
            os << "*";
            print_rec(os, e.kids[1], var, prec + 1);
            close();
            return;
        case Op::div:
            open();
            print_rec(os, e.kids[0], var, prec);
            os << "/";
            print_rec(os, e.kids[1], var, prec + 1);
            close();
            return;
        case Op::neg:
            open();
            os << "-";
            print_rec(os, e.kids[0], var, prec);
            close();
            return;
        case Op::pow:
            open();
            print_rec(os, e.kids[0], var, prec + 1);
            os << "^" << e.exponent;
            close();
            return;
        case Op::floor:
            os << "floor(";
            print_rec(os, e.kids[0], var, 0);
            os << ")";
            return;
        case Op::sqrt:
            os << "sqrt(";
            print_rec(os, e.kids[0], var, 0);
            os << ")";
            return;
        case Op::abs:
            os << "abs(";
            print_rec(os, e.kids[0], var, 0);
            os << ")";
            return;
    }
}

}  // namespace

std::string print_expr(const Expr& e, const std::string& varname) {
    std::ostringstream os;
    print_rec(os, e, varname, 0);
    return os.str();
}

Vertex VertexLit::resolve(const Space& s) const {
    switch (kind) {
        case Kind::root: return s.root();
        case Kind::first_of_length:
            if (s.kind == SpaceKind::finite)
                throw rule_error("first(L) literal is not defined on finite tables");
            if (!s.shell_nonempty(length)) throw rule_error("first(L): empty shell");
            return s.shell_representative(length);
        case Kind::integer:
            if (s.kind != SpaceKind::integers)
                throw rule_error("integer vertex literal on a non-integer space");
            return Vertex::integer(n);
        case Kind::gauss:
            if (s.kind != SpaceKind::gaussian)
                throw rule_error("gauss(a,b) literal on a non-gaussian space");
            return Vertex::gauss(re, im);
        case Kind::finite_id: {
            auto idx = s.finite_index_of(id);
            if (!idx) throw rule_error("unknown vertex id '" + id + "'");
            return Vertex::finite(*idx);
        }
    }
    throw rule_error("bad vertex literal");
}

std::string VertexLit::print() const {
    switch (kind) {
        case Kind::root: return "root";
        case Kind::first_of_length: return "first(" + std::to_string(length) + ")";
        case Kind::integer: return std::to_string(n);
        case Kind::gauss:
            return "gauss(" + std::to_string(re) + "," + std::to_string(im) + ")";
        case Kind::finite_id: return "id(" + id + ")";
    }
    return "?";
}

namespace {

bool cmp_holds(Pred::Cmp c, int three_way) {
    using Cmp = Pred::Cmp;
    switch (c) {
        case Cmp::eq: return three_way == 0;
        case Cmp::ne: return three_way != 0;
        case Cmp::le: return three_way <= 0;
        case Cmp::ge: return three_way >= 0;
        case Cmp::lt: return three_way < 0;
        case Cmp::gt: return three_way > 0;
    }
    return false;
}

const char* cmp_text(Pred::Cmp c) {
    using Cmp = Pred::Cmp;
    switch (c) {
        case Cmp::eq: return "==";
        case Cmp::ne: return "!=";
        case Cmp::le: return "<=";
        case Cmp::ge: return ">=";
        case Cmp::lt: return "<";
        case Cmp::gt: return ">";
    }
    return "?";
}

}  // namespace

bool Pred::matches(const Space& s, const Vertex& v) const {
    switch (kind) {
        case Kind::always: return true;
        case Kind::len_cmp: {
            if (bound < 0) return cmp_holds(cmp, 1);
            // compare |v| with bound via squares (both nonnegative)
            Rat lsq = s.length_sq(v), bsq = bound * bound;
            int t = lsq == bsq ? 0 : (lsq < bsq ? -1 : 1);
            return cmp_holds(cmp, t);
        }
        case Kind::parity: {
            Scalar l = s.length(v);
            if (!l.is_rational()) throw rule_error("parity(len) on a non-integer length");
            Rat q = l.rational();
            if (boost::multiprecision::denominator(q) != 1)
                throw rule_error("parity(len) on a non-integer length");
            bool odd = boost::multiprecision::numerator(q) % 2 != 0;
            return odd == parity_odd;
        }
        case Kind::quadrant: {
            if (s.kind != SpaceKind::gaussian)
                throw rule_error("quadrant predicate on a non-gaussian space");
            if (v == s.root()) return false;
            return gauss_quadrant(v.g()) == quadrant;
        }
        case Kind::is_root: return v == s.root();
        case Kind::vertex_eq: return v == vlit.resolve(s);
        case Kind::sign_is: {
            if (s.kind != SpaceKind::integers)
                throw rule_error("sign predicate on a non-integer space");
            int sg = v.n() == 0 ? 0 : (v.n() > 0 ? 1 : -1);
            return sg == sign;
        }
        case Kind::conj: {
            for (const auto& p : terms)
                if (!p.matches(s, v)) return false;
            return true;
        }
    }
    return false;
}

std::string Pred::print() const {
    switch (kind) {
        case Kind::always: return "else";
        case Kind::len_cmp: return std::string("len ") + cmp_text(cmp) + " " + bound.str();
        case Kind::parity: return std::string("parity(len) == ") + (parity_odd ? "odd" : "even");
        case Kind::quadrant: {
            static const char* names[] = {"I", "II", "III", "IV"};
            return std::string("quadrant == ") + names[quadrant - 1];
        }
        case Kind::is_root: return "is_root";
        case Kind::vertex_eq: return "v == " + vlit.print();
        case Kind::sign_is:
            return std::string("sign == ") + (sign == 0 ? "zero" : sign > 0 ? "pos" : "neg");
        case Kind::conj: {
            std::string s;
            for (std::size_t i = 0; i < terms.size(); ++i) {
                if (i) s += " && ";
                s += terms[i].print();
            }
            return s;
        }
    }
    return "?";
}

Lexer::Lexer(const std::string& text) {
    int line = 1, col = 1;
    std::size_t i = 0;
    auto push = [&](Token::Kind k, std::string t, long long v, int l, int c) {
        tokens_.push_back({k, std::move(t), v, l, c});
    };
    while (i < text.size()) {
        char ch = text[i];
        if (ch == '\n') {
            ++line;
            col = 1;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(ch))) {
            ++col;
            ++i;
            continue;
        }
        int tl = line, tc = col;
        if (ch == '#') {  // comment to end of line
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(ch))) {
            std::string num;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
                num += text[i++];
                ++col;
            }
            long long v = 0;
            try {
                v = std::stoll(num);
            } catch (...) {
                throw rule_error("integer literal out of range", tl, tc);
            }
            push(Token::Kind::integer, num, v, tl, tc);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            std::string id;
            while (i < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
                id += text[i++];
                ++col;
            }
            push(Token::Kind::ident, id, 0, tl, tc);
            continue;
        }
        // multi-char punctuation
        static const char* twos[] = {"->", "==", "!=", "<=", ">=", "&&"};
        bool matched = false;
        for (auto* t : twos) {
            if (text.compare(i, 2, t) == 0) {
                push(Token::Kind::punct, t, 0, tl, tc);
                i += 2;
                col += 2;
                matched = true;
                break;
            }
        }
        if (matched) continue;
        static const std::string singles = "[](),+-*/^<>=|";
        if (singles.find(ch) != std::string::npos) {
            push(Token::Kind::punct, std::string(1, ch), 0, tl, tc);
            ++i;
            ++col;
            continue;
        }
        throw rule_error(std::string("unexpected character '") + ch + "'", tl, tc);
    }
    push(Token::Kind::end, "", 0, line, col);
}

bool Lexer::accept(const std::string& t) {
    if (peek().kind == Token::Kind::punct && peek().text == t) {
        get();
        return true;
    }
    return false;
}

void Lexer::expect(const std::string& t) {
    if (!accept(t)) fail("expected '" + t + "'");
}

bool Lexer::accept_ident(const std::string& id) {
    if (peek().kind == Token::Kind::ident && peek().text == id) {
        get();
        return true;
    }
    return false;
}

void Lexer::expect_ident(const std::string& id) {
    if (!accept_ident(id)) fail("expected '" + id + "'");
}

void Lexer::fail(const std::string& msg) const {
    const Token& t = peek();
    std::string got = t.kind == Token::Kind::end ? "end of input" : "'" + t.text + "'";
    throw rule_error(msg + ", got " + got, t.line, t.column);
}

namespace {

bool is_var_token(const Lexer::Token& t, const std::string& varname) {
    if (t.kind != Lexer::Token::Kind::ident) return false;
    if (t.text == varname) return true;
    // `len` contexts also accept `n` so tail formulas and weights read alike
    return varname == "len" && t.text == "n";
}

Expr parse_primary(Lexer& lx, const std::string& varname);

Expr parse_power(Lexer& lx, const std::string& varname) {
    Expr base = parse_primary(lx, varname);
    if (lx.accept("^")) {
        bool neg = lx.accept("-");
        const auto& t = lx.peek();
        if (t.kind != Lexer::Token::Kind::integer) lx.fail("expected integer exponent");
        long long e = lx.get().ivalue;
        Expr p = Expr::unary(Expr::Op::pow, std::move(base));
        p.exponent = neg ? -e : e;
        return p;
    }
    return base;
}

Expr parse_factor(Lexer& lx, const std::string& varname) {
    if (lx.accept("-")) return Expr::unary(Expr::Op::neg, parse_factor(lx, varname));
    return parse_power(lx, varname);
}

Expr parse_term(Lexer& lx, const std::string& varname) {
    Expr e = parse_factor(lx, varname);
    while (true) {
        if (lx.accept("*"))
            e = Expr::binary(Expr::Op::mul, std::move(e), parse_factor(lx, varname));
        else if (lx.accept("/"))
            e = Expr::binary(Expr::Op::div, std::move(e), parse_factor(lx, varname));
        else
            return e;
    }
}

Expr parse_primary(Lexer& lx, const std::string& varname) {
    const auto& t = lx.peek();
    if (t.kind == Lexer::Token::Kind::integer) {
        return Expr::constant(Rat(lx.get().ivalue));
    }
    if (is_var_token(t, varname)) {
        lx.get();
        return Expr::var();
    }
    if (t.kind == Lexer::Token::Kind::ident) {
        for (auto [name, op] : {std::pair{"floor", Expr::Op::floor},
                                std::pair{"sqrt", Expr::Op::sqrt},
                                std::pair{"abs", Expr::Op::abs}}) {
            if (t.text == name) {
                lx.get();
                lx.expect("(");
                Expr inner = parse_expr(lx, varname);
                lx.expect(")");
                return Expr::unary(op, std::move(inner));
            }
        }
        lx.fail("unknown identifier in expression (variable here is '" + varname + "')");
    }
    if (lx.accept("(")) {
        Expr inner = parse_expr(lx, varname);
        lx.expect(")");
        return inner;
    }
    lx.fail("expected expression");
    return Expr::constant(Rat(0));  // unreachable
}

VertexLit parse_vlit(Lexer& lx) {
    VertexLit v;
    if (lx.accept_ident("root")) {
        v.kind = VertexLit::Kind::root;
        return v;
    }
    if (lx.accept_ident("first")) {
        lx.expect("(");
        if (lx.peek().kind != Lexer::Token::Kind::integer) lx.fail("expected length");
        v.kind = VertexLit::Kind::first_of_length;
        v.length = static_cast<std::uint64_t>(lx.get().ivalue);
        lx.expect(")");
        return v;
    }
    if (lx.accept_ident("gauss")) {
        lx.expect("(");
        bool neg = lx.accept("-");
        if (lx.peek().kind != Lexer::Token::Kind::integer) lx.fail("expected integer");
        v.re = lx.get().ivalue * (neg ? -1 : 1);
        lx.expect(",");
        neg = lx.accept("-");
        if (lx.peek().kind != Lexer::Token::Kind::integer) lx.fail("expected integer");
        v.im = lx.get().ivalue * (neg ? -1 : 1);
        lx.expect(")");
        v.kind = VertexLit::Kind::gauss;
        return v;
    }
    if (lx.accept_ident("id")) {
        lx.expect("(");
        if (lx.peek().kind != Lexer::Token::Kind::ident) lx.fail("expected vertex id");
        v.kind = VertexLit::Kind::finite_id;
        v.id = lx.get().text;
        lx.expect(")");
        return v;
    }
    {
        bool neg = lx.accept("-");
        if (lx.peek().kind == Lexer::Token::Kind::integer) {
            v.kind = VertexLit::Kind::integer;
            v.n = lx.get().ivalue * (neg ? -1 : 1);
            return v;
        }
        if (neg) lx.fail("expected integer vertex literal");
    }
    lx.fail("expected vertex literal (root, first(L), gauss(a,b), id(name), or integer)");
    return v;  // unreachable
}

Pred::Cmp parse_cmp(Lexer& lx) {
    if (lx.accept("==")) return Pred::Cmp::eq;
    if (lx.accept("!=")) return Pred::Cmp::ne;
    if (lx.accept("<=")) return Pred::Cmp::le;
    if (lx.accept(">=")) return Pred::Cmp::ge;
    if (lx.accept("<")) return Pred::Cmp::lt;
    if (lx.accept(">")) return Pred::Cmp::gt;
    lx.fail("expected comparison operator");
    return Pred::Cmp::eq;  // unreachable
}

Pred parse_pred_atom(Lexer& lx) {
    Pred p;
    // `n` is accepted as a synonym for `len` so threshold formulas read well
    if (lx.accept_ident("len") || lx.accept_ident("n")) {
        p.kind = Pred::Kind::len_cmp;
        p.cmp = parse_cmp(lx);
        bool neg = lx.accept("-");
        const auto& t = lx.peek();
        if (t.kind != Lexer::Token::Kind::integer) lx.fail("expected numeric bound");
        long long a = lx.get().ivalue;
        Rat b(a);
        if (lx.accept("/")) {
            if (lx.peek().kind != Lexer::Token::Kind::integer) lx.fail("expected denominator");
            b /= Rat(lx.get().ivalue);
        }
        p.bound = neg ? -b : b;
        return p;
    }
    if (lx.accept_ident("parity")) {
        lx.expect("(");
        if (!lx.accept_ident("len") && !lx.accept_ident("n")) lx.fail("expected len");
        lx.expect(")");
        lx.expect("==");
        p.kind = Pred::Kind::parity;
        if (lx.accept_ident("odd"))
            p.parity_odd = true;
        else if (lx.accept_ident("even"))
            p.parity_odd = false;
        else
            lx.fail("expected odd or even");
        return p;
    }
    if (lx.accept_ident("quadrant")) {
        lx.expect("==");
        p.kind = Pred::Kind::quadrant;
        if (lx.accept_ident("I"))
            p.quadrant = 1;
        else if (lx.accept_ident("II"))
            p.quadrant = 2;
        else if (lx.accept_ident("III"))
            p.quadrant = 3;
        else if (lx.accept_ident("IV"))
            p.quadrant = 4;
        else
            lx.fail("expected quadrant I..IV");
        return p;
    }
    if (lx.accept_ident("is_root")) {
        p.kind = Pred::Kind::is_root;
        return p;
    }
    if (lx.accept_ident("sign")) {
        lx.expect("==");
        p.kind = Pred::Kind::sign_is;
        if (lx.accept_ident("pos"))
            p.sign = 1;
        else if (lx.accept_ident("neg"))
            p.sign = -1;
        else if (lx.accept_ident("zero"))
            p.sign = 0;
        else
            lx.fail("expected pos, neg or zero");
        return p;
    }
    if (lx.accept_ident("v")) {
        lx.expect("==");
        p.kind = Pred::Kind::vertex_eq;
        p.vlit = parse_vlit(lx);
        return p;
    }
    lx.fail("expected predicate");
    return p;  // unreachable
}

}  // namespace

VertexLit parse_vertex_lit(Lexer& lx) { return parse_vlit(lx); }

Pred parse_pred(Lexer& lx) {
    Pred first = parse_pred_atom(lx);
    if (!lx.accept("&&")) return first;
    Pred conj;
    conj.kind = Pred::Kind::conj;
    conj.terms.push_back(std::move(first));
    do {
        conj.terms.push_back(parse_pred_atom(lx));
    } while (lx.accept("&&"));
    return conj;
}

Expr parse_expr(Lexer& lx, const std::string& varname) {
    Expr e = parse_term(lx, varname);
    while (true) {
        if (lx.accept("+"))
            e = Expr::binary(Expr::Op::add, std::move(e), parse_term(lx, varname));
        else if (lx.accept("-"))
            e = Expr::binary(Expr::Op::sub, std::move(e), parse_term(lx, varname));
        else
            return e;
    }
}

Expr parse_expr_text(const std::string& text, const std::string& varname) {
    Lexer lx(text);
    Expr e = parse_expr(lx, varname);
    if (!lx.at_end()) lx.fail("trailing input after expression");
    return e;
}

}  // namespace wco
