#include "wco/report.hpp"

#include <iomanip>
#include <sstream>

namespace wco {

Json estimate_json(const LimitEstimate& e) {
    Json j;
    j["kind"] = e.kind == LimitEstimate::Kind::exact ? "exact" : "numeric";
    switch (e.outcome) {
        case LimitEstimate::Outcome::value: j["outcome"] = "value"; break;
        case LimitEstimate::Outcome::nonexistent: j["outcome"] = "nonexistent"; break;
        case LimitEstimate::Outcome::undetermined: j["outcome"] = "undetermined"; break;
    }
    if (e.infinite)
        j["value"] = "inf";
    else if (e.outcome == LimitEstimate::Outcome::value)
        j["value"] = e.value;
    if (e.exact_value) j["exact"] = e.exact_value->str();
    j["converged"] = e.converged;
    if (!e.source.empty()) j["source"] = e.source;
    Json ev = Json::array();
    for (const auto& p : e.evidence) {
        if (p.lo == p.hi)
            ev.push_back(Json::array({p.x, p.hi}));
        else
            ev.push_back(Json::array({p.x, p.lo, p.hi}));
    }
    j["evidence"] = std::move(ev);
    return j;
}

Json verdict_json(const Verdict& v) {
    Json j;
    j["property"] = v.property;
    j["status"] = to_string(v.status);
    j["mode"] = to_string(v.mode);
    j["rule"] = v.rule;
    j["explanation"] = v.explanation;
    if (!v.witnesses.empty()) {
        Json w = Json::object();
        for (const auto& [k, val] : v.witnesses) w[k] = val;
        j["witnesses"] = std::move(w);
    }
    if (!v.sub.empty()) {
        Json s = Json::array();
        for (const auto& sv : v.sub) s.push_back(verdict_json(sv));
        j["conditions"] = std::move(s);
    }
    return j;
}

Json classification_json(const ClassificationReport& r) {
    Json j;
    j["instance"] = r.instance;
    Json q;
    q["sigma"] = estimate_json(r.quantities.sigma);
    q["xi"] = estimate_json(r.quantities.xi);
    q["essential_norm"] = estimate_json(r.quantities.essential_norm);
    if (r.quantities.essential_norm_limsup)
        q["essential_norm_limsup"] = estimate_json(*r.quantities.essential_norm_limsup);
    if (r.quantities.inverse_norm) q["inverse_norm"] = estimate_json(*r.quantities.inverse_norm);
    j["quantities"] = std::move(q);
    Json vs = Json::array();
    for (const auto& v : r.verdicts) vs.push_back(verdict_json(v));
    j["verdicts"] = std::move(vs);
    if (!r.components.empty()) {
        Json comps = Json::object();
        for (const auto& c : r.components) {
            Json cj;
            Json q2;
            q2["sigma"] = estimate_json(c.quantities.sigma);
            q2["essential_norm"] = estimate_json(c.quantities.essential_norm);
            cj["quantities"] = std::move(q2);
            Json cvs = Json::array();
            for (const auto& v : c.verdicts) cvs.push_back(verdict_json(v));
            cj["verdicts"] = std::move(cvs);
            comps[c.name] = std::move(cj);
        }
        j["components"] = std::move(comps);
    }
    if (!r.notes.empty()) j["notes"] = r.notes;
    return j;
}

Json report_json(const InstanceConfig& cfg, const ClassificationReport& r,
                 const std::optional<Json>& oracle, const Policy& policy, double wall_ms) {
    Json j;
    j["schema"] = 1;
    j["tool"] = "wco";
    j["version"] = "1.0.0";
    Json echo = Json::object();
    for (const auto& [k, v] : cfg.echo)
        if (k != "_base_dir") echo[k] = v;
    j["config"] = std::move(echo);
    j["classification"] = classification_json(r);
    if (oracle) j["oracle"] = *oracle;
    j["seed"] = policy.seed;
    j["wall_time_ms"] = wall_ms;
    return j;
}

namespace {

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

void append_estimate(std::ostringstream& os, const char* name, const LimitEstimate& e) {
    os << "  " << pad(name, 24);
    if (e.outcome == LimitEstimate::Outcome::nonexistent) {
        os << "does not exist";
    } else if (e.outcome == LimitEstimate::Outcome::undetermined) {
        os << "undetermined";
        if (!e.evidence.empty()) os << " (last partial " << e.evidence.back().hi << ")";
    } else if (e.infinite) {
        os << "inf";
    } else if (e.exact_value) {
        os << e.exact_value->str();
    } else {
        os << e.value;
    }
    os << "  [" << (e.kind == LimitEstimate::Kind::exact ? "exact" : "numeric");
    if (!e.source.empty()) os << ": " << e.source;
    os << "]\n";
}

void append_verdict(std::ostringstream& os, const Verdict& v, int indent) {
    os << std::string(indent, ' ') << pad(v.property, 22) << pad(to_string(v.status), 14)
       << pad(to_string(v.mode), 9) << v.explanation << "\n";
    for (const auto& [k, val] : v.witnesses)
        os << std::string(indent + 2, ' ') << k << ": " << val << "\n";
    for (const auto& sv : v.sub) append_verdict(os, sv, indent + 2);
}

}  // namespace

std::string report_text(const ClassificationReport& r, const std::optional<Json>& oracle) {
    std::ostringstream os;
    os << "instance: " << r.instance << "\n\nquantities:\n";
    append_estimate(os, "operator norm (sigma)", r.quantities.sigma);
    append_estimate(os, "ratio limit (xi)", r.quantities.xi);
    append_estimate(os, "essential norm", r.quantities.essential_norm);
    if (r.quantities.essential_norm_limsup)
        append_estimate(os, "essential norm (limsup)", *r.quantities.essential_norm_limsup);
    if (r.quantities.inverse_norm)
        append_estimate(os, "inverse norm", *r.quantities.inverse_norm);
    os << "\nverdicts:\n";
    for (const auto& v : r.verdicts) append_verdict(os, v, 2);
    for (const auto& c : r.components) {
        os << "\ncomponent " << (c.name == "cphi" ? "C_phi" : "M_psi") << ":\n";
        append_estimate(os, "operator norm (sigma)", c.quantities.sigma);
        append_estimate(os, "essential norm", c.quantities.essential_norm);
        for (const auto& v : c.verdicts) append_verdict(os, v, 2);
    }
    if (!r.notes.empty()) {
        os << "\nnotes:\n";
        for (const auto& n : r.notes) os << "  - " << n << "\n";
    }
    if (oracle) {
        os << "\noracle:\n";
        for (auto it = oracle->begin(); it != oracle->end(); ++it)
            os << "  " << it.key() << ": " << it.value().dump() << "\n";
    }
    return os.str();
}

}  // namespace wco
