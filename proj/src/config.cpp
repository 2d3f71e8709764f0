#include "wco/config.hpp"

#include <fstream>
#include <sstream>

namespace wco {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

Rat parse_rational(const std::string& text, const std::string& what) {
    std::string t = trim(text);
    bool neg = false;
    std::size_t i = 0;
    if (i < t.size() && (t[i] == '-' || t[i] == '+')) {
        neg = t[i] == '-';
        ++i;
    }
    std::string num, den;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) num += t[i++];
    if (i < t.size() && t[i] == '/') {
        ++i;
        while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) den += t[i++];
    }
    if (num.empty() || i != t.size())
        throw config_error("expected a rational for " + what + ", got '" + text + "'");
    Rat q{Int(num), den.empty() ? Int(1) : Int(den)};
    return neg ? -q : q;
}

bool parse_bool(const std::string& text, const std::string& what) {
    std::string t = trim(text);
    if (t == "true") return true;
    if (t == "false") return false;
    throw config_error("expected true/false for " + what + ", got '" + text + "'");
}

Space parse_space_text(const std::string& text, const std::string& base_dir) {
    std::string t = trim(text);
    if (t == "integers") return Space::integers();
    if (t == "gaussian") return Space::gaussian();
    if (t.rfind("tree", 0) == 0) {
        std::size_t eq = t.find("b=");
        std::size_t close = t.find(')');
        if (t.find('(') == std::string::npos || eq == std::string::npos ||
            close == std::string::npos)
            throw config_error("tree space must look like tree(b=2)");
        std::string num = trim(t.substr(eq + 2, close - eq - 2));
        try {
            return Space::tree(static_cast<std::uint32_t>(std::stoul(num)));
        } catch (const domain_error& e) {
            throw config_error(e.what());
        } catch (...) {
            throw config_error("bad branching in '" + t + "'");
        }
    }
    if (t.rfind("finite", 0) == 0) {
        std::size_t q1 = t.find('"');
        std::size_t q2 = t.rfind('"');
        if (q1 == std::string::npos || q2 <= q1)
            throw config_error("finite space must look like finite(file=\"table.csv\")");
        std::string path = t.substr(q1 + 1, q2 - q1 - 1);
        if (!path.empty() && path[0] != '/') path = base_dir + "/" + path;
        std::ifstream in(path);
        if (!in) throw config_error("cannot open finite space table '" + path + "'");
        std::vector<FiniteRow> rows;
        std::string line;
        while (std::getline(in, line)) {
            line = trim(line);
            if (line.empty() || line[0] == '#') continue;
            std::size_t comma = line.find(',');
            if (comma == std::string::npos)
                throw config_error("finite table lines must be 'id,length'");
            FiniteRow row;
            row.id = trim(line.substr(0, comma));
            row.length = parse_rational(line.substr(comma + 1), "finite table length");
            rows.push_back(std::move(row));
        }
        try {
            return Space::finite(std::move(rows));
        } catch (const domain_error& e) {
            throw config_error(e.what());
        }
    }
    throw config_error("unknown space descriptor '" + t + "'");
}

void set_fact(AssertedFacts& f, const std::string& key, const std::string& value) {
    if (key == "surjective")
        f.surjective = parse_bool(value, key);
    else if (key == "injective")
        f.injective = parse_bool(value, key);
    else if (key == "bijective")
        f.bijective = parse_bool(value, key);
    else if (key == "finite_range")
        f.finite_range = parse_bool(value, key);
    else if (key == "ratio_sup")
        f.ratio_sup = trim(value) == "inf" ? FactValue::inf()
                                           : FactValue::of(parse_rational(value, key));
    else if (key == "ratio_inf")
        f.ratio_inf = parse_rational(value, key);
    else if (key == "ratio_limit")
        f.ratio_limit = parse_rational(value, key);
    else if (key == "tail_sup_formula")
        f.tail_sup_formula = ScalarRule::parse(value);
    else
        throw config_error("unknown asserted fact '" + key + "'");
}

}  // namespace

InstanceConfig parse_config(const std::string& text, const std::string& base_dir) {
    InstanceConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    bool have_space = false, have_weight = false, have_psi = false, have_phi = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("bad section header at line " + std::to_string(lineno));
            section = line.substr(1, line.size() - 2);
            if (section != "space" && section != "weight" && section != "psi" &&
                section != "phi" && section != "asserted" && section != "policy")
                throw config_error("unknown section [" + section + "]");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("expected key = value at line " + std::to_string(lineno));
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        cfg.echo.emplace_back(section + "." + key, value);
        if (section == "space") {
            if (key != "space") throw config_error("unknown key '" + key + "' in [space]");
            cfg.space_text = value;
            have_space = true;
        } else if (section == "weight") {
            if (key != "rule") throw config_error("unknown key '" + key + "' in [weight]");
            cfg.weight_text = value;
            have_weight = true;
        } else if (section == "psi") {
            if (key != "rule") throw config_error("unknown key '" + key + "' in [psi]");
            cfg.psi_text = value;
            have_psi = true;
        } else if (section == "phi") {
            if (key == "rule") {
                cfg.phi_text = value;
                have_phi = true;
            } else if (key == "eta") {
                cfg.eta_text = value;
            } else {
                throw config_error("unknown key '" + key + "' in [phi]");
            }
        } else if (section == "asserted") {
            if (key.rfind("provenance.", 0) == 0) {
                cfg.asserted.provenance[key.substr(11)] = value;
            } else if (key.rfind("cphi.", 0) == 0) {
                set_fact(cfg.asserted_cphi, key.substr(5), value);
            } else if (key.rfind("mpsi.", 0) == 0) {
                set_fact(cfg.asserted_mpsi, key.substr(5), value);
            } else {
                set_fact(cfg.asserted, key, value);
            }
        } else if (section == "policy") {
            try {
                if (key == "radius")
                    cfg.policy.radius = parse_rational(value, key);
                else if (key == "budget")
                    cfg.policy.budget = std::stoull(value);
                else if (key == "trials")
                    cfg.policy.trials = std::stoull(value);
                else if (key == "seed")
                    cfg.policy.seed = std::stoull(value);
                else if (key == "max_shells")
                    cfg.policy.max_shells = std::stoll(value);
                else
                    throw config_error("unknown key '" + key + "' in [policy]");
            } catch (const config_error&) {
                throw;
            } catch (...) {
                throw config_error("bad value for policy." + key);
            }
        } else {
            throw config_error("key outside any section at line " + std::to_string(lineno));
        }
    }
    if (!have_space || !have_weight || !have_psi || !have_phi)
        throw config_error("a config needs [space], [weight], [psi] and [phi] rules");
    // stash the base dir inside the space text resolution at build time
    cfg.space_text = cfg.space_text;  // resolved in build() via parse_space_text
    cfg.echo.emplace_back("_base_dir", base_dir);
    return cfg;
}

InstanceConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    std::string dir = ".";
    std::size_t slash = path.find_last_of('/');
    if (slash != std::string::npos) dir = path.substr(0, slash);
    return parse_config(ss.str(), dir);
}

OperatorInstance InstanceConfig::build() const {
    std::string base = ".";
    for (const auto& [k, v] : echo)
        if (k == "_base_dir") base = v;
    try {
        Space s = parse_space_text(space_text, base);
        ScalarRule mu = ScalarRule::parse(weight_text);
        ScalarRule psi = ScalarRule::parse(psi_text);
        MapRule phi = MapRule::parse(phi_text);
        return OperatorInstance(std::move(s), std::move(mu), std::move(psi), std::move(phi),
                                asserted, asserted_cphi, asserted_mpsi);
    } catch (const rule_error& e) {
        throw config_error(e.what());
    } catch (const domain_error& e) {
        throw config_error(e.what());
    }
}

std::optional<MapRule> InstanceConfig::eta() const {
    if (!eta_text) return std::nullopt;
    try {
        return MapRule::parse(*eta_text);
    } catch (const rule_error& e) {
        throw config_error(e.what());
    }
}

namespace {

const char* kEx1 = R"(# finite-range map, symbol reciprocal to the weight
[space]
space = tree(b=2)
[weight]
rule = [ else -> 1/(len+1) ]
[psi]
rule = [ else -> len+1 ]
[phi]
rule = [ parity(len) == even -> root_map, else -> constant(first(1)) ]
[asserted]
ratio_sup = 2
ratio_inf = 1
tail_sup_formula = [ n <= 1 -> 2, else -> 0 ]
provenance.ratio_sup = ratio equals 1/mu at the image point; the image is {root, first(1)}
provenance.ratio_inf = the image weights are 1 and 1/2, so the ratio is 1 or 2
)";

const char* kEx2i = R"(# bounded weighted composition whose multiplication part is unbounded
[space]
space = tree(b=2)
[weight]
rule = [ len == 0 -> 1, else -> 1/len ]
[psi]
rule = [ len == 0 -> 1, else -> len ]
[phi]
rule = root_map
[asserted]
ratio_sup = 1
ratio_inf = 1
ratio_limit = 1
tail_sup_formula = [ n == 0 -> 1, else -> 0 ]
provenance.ratio_sup = mu(v)|psi(v)| = 1 = mu(root) pointwise, so the ratio is identically 1
mpsi.ratio_sup = inf
provenance.mpsi.ratio_sup = |psi(v)| = |v| grows without bound
)";

const char* kEx2ii = R"(# bounded weighted composition, growing weight, square resequencing
[space]
space = tree(b=2)
[weight]
rule = [ len == 0 -> 1, else -> len ]
[psi]
rule = [ len == 0 -> 1, else -> len ]
[phi]
rule = resequence(n^2)
[asserted]
ratio_sup = 1
ratio_inf = 1
ratio_limit = 1
tail_sup_formula = [ else -> 1 ]
provenance.ratio_sup = mu(v)|psi(v)| = |v|^2 = mu(phi(v)), so the ratio is identically 1
mpsi.ratio_sup = inf
)";

const char* kEx3i = R"(# compact weighted composition whose composition part is unbounded
[space]
space = tree(b=2)
[weight]
rule = [ len == 0 -> 1, else -> 1/len ]
[psi]
rule = [ len == 0 -> 1, else -> 1/len^3 ]
[phi]
rule = resequence(n^2)
[asserted]
ratio_sup = 1
ratio_inf = 0
ratio_limit = 0
tail_sup_formula = [ n == 0 -> 1, else -> 1/(floor(sqrt(n-1))+1)^2 ]
provenance.tail_sup_formula = the ratio at shell n is 1/n^2 with image length n^2; at square thresholds N the tail supremum is 1/N
cphi.ratio_sup = inf
provenance.cphi.ratio_sup = mu(v)/mu(phi(v)) = |v| grows without bound
)";

const char* kEx3ii = R"(# compact weighted composition, growing weight, shell-collapsing map
[space]
space = tree(b=2)
[weight]
rule = [ len == 0 -> 1, else -> len^2 ]
[psi]
rule = [ len == 0 -> 1, else -> 1/len^2 ]
[phi]
rule = resequence(n)
[asserted]
ratio_sup = 1
ratio_inf = 0
ratio_limit = 0
tail_sup_formula = [ n == 0 -> 1, else -> 1/n^2 ]
)";

const char* kEx4i = R"(# compact weighted composition with non-compact parts, typical weight
[space]
space = tree(b=2)
[weight]
rule = [ len == 0 -> 1, else -> 1/len ]
[psi]
rule = [ parity(len) == odd -> 1, else -> 1/(len+1) ]
[phi]
rule = [ parity(len) == odd -> resequence(floor(sqrt(n))), else -> identity ]
[asserted]
ratio_sup = 1
ratio_inf = 0
ratio_limit = 0
finite_range = false
provenance.ratio_limit = odd shells give floor(sqrt(n))/n, even shells 1/(n+1); both vanish
cphi.ratio_sup = 1
cphi.tail_sup_formula = [ else -> 1 ]
provenance.cphi.tail_sup_formula = even shells are fixed, so every tail keeps ratio 1
mpsi.ratio_sup = 1
mpsi.tail_sup_formula = [ else -> 1 ]
provenance.mpsi.tail_sup_formula = |psi| = 1 on every odd shell
)";

const char* kEx4ii = R"(# compact weighted composition with non-compact parts, growing weight
[space]
space = tree(b=2)
[weight]
rule = [ len == 0 -> 1, else -> len ]
[psi]
rule = [ parity(len) == odd -> 1, else -> 1/(len+1) ]
[phi]
rule = [ parity(len) == odd -> resequence(n*(n+1)), else -> identity ]
[asserted]
ratio_sup = 1
ratio_inf = 0
ratio_limit = 0
provenance.ratio_limit = the ratio is 1/(|v|+1) on every shell
)";

const char* kEx5 = R"(# bijectively induced composition whose inverse is unbounded
[space]
space = integers
[weight]
rule = [ sign == neg -> len, else -> 1 ]
[psi]
rule = [ else -> 1 ]
[phi]
rule = [ sign == zero -> root_map, sign == pos && parity(len) == odd -> intmap((v+1)/2), sign == pos && parity(len) == even -> intmap(-v), else -> intmap(2*v+1) ]
[asserted]
bijective = true
ratio_sup = 1
ratio_inf = 0
tail_sup_formula = [ else -> 1 ]
provenance.bijective = the four branches invert each other: positives split into odds and sign flips, negatives interleave
provenance.ratio_inf = on positive even v the ratio is 1/v
[policy]
radius = 16384
)";

const char* kEx6 = R"(# identity off the root: Fredholm but not invertible
[space]
space = tree(b=2)
[weight]
rule = [ else -> 1/(len+1) ]
[psi]
rule = [ else -> 1 ]
[phi]
rule = [ is_root -> constant(first(1)), else -> identity ]
eta = identity
)";

const char* kEx7 = R"(# quadrant rotation: a surjective isometry with an unbounded composition part
[space]
space = gaussian
[weight]
rule = [ is_root -> 1, quadrant == I -> 1, quadrant == II -> len, quadrant == IV -> len, else -> len^2 ]
[psi]
rule = [ is_root -> 1, quadrant == I -> len, quadrant == II -> len, else -> 1/len ]
[phi]
rule = rotation(1)
[asserted]
ratio_sup = 1
ratio_inf = 1
ratio_limit = 1
tail_sup_formula = [ else -> 1 ]
provenance.ratio_sup = the quarter turn advances the quadrant; mu(v)|psi(v)| = mu(phi(v)) in each case
cphi.ratio_sup = inf
provenance.cphi.ratio_sup = on quadrant III the composition ratio is |v|^2/|v| = |v|
mpsi.ratio_sup = inf
provenance.mpsi.ratio_sup = |psi| = |v| on quadrants I and II
[policy]
radius = 64
)";

std::vector<Preset> make_presets() {
    return {
        {"ex1", "finite-range map with psi = 1/mu: bounded, not bounded on the little space",
         kEx1},
        {"ex2i", "root map with psi = 1/mu: bounded while M_psi is unbounded (typical weight)",
         kEx2i},
        {"ex2ii", "square resequencing with psi = mu: bounded while M_psi is unbounded "
                  "(growing weight)",
         kEx2ii},
        {"ex3i", "square resequencing with psi = mu^3: compact while C_phi is unbounded",
         kEx3i},
        {"ex3ii", "shell-collapsing map with psi = 1/mu: compact weighted composition "
                  "(growing weight)",
         kEx3ii},
        {"ex4i", "parity-alternating map and symbol: compact while neither part is compact "
                 "(typical weight)",
         kEx4i},
        {"ex4ii", "parity-alternating map and symbol: compact while neither part is compact "
                  "(growing weight)",
         kEx4ii},
        {"ex5", "integer bijection whose composition operator has an unbounded inverse", kEx5},
        {"ex6", "identity off the root: Fredholm composition that is not invertible", kEx6},
        {"ex7", "Gaussian-integer rotation: a surjective isometry whose composition part is "
                "unbounded",
         kEx7},
    };
}

}  // namespace

const std::vector<Preset>& presets() {
    static const std::vector<Preset> table = make_presets();
    return table;
}

InstanceConfig load_preset(const std::string& name) {
    for (const auto& p : presets())
        if (p.name == name) return parse_config(p.config_text, ".");
    throw config_error("unknown preset '" + name + "' (see `presets list`)");
}

}  // namespace wco
