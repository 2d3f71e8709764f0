#pragma once

#include "wco/instance.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wco {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A parsed instance configuration: space descriptor, the three rule texts,
/// asserted facts for the instance and its two components, policy overrides,
/// and an optional comparison map for the Fredholm perturbation check.
struct InstanceConfig {
    std::string space_text;
    std::string weight_text;
    std::string psi_text;
    std::string phi_text;
    std::optional<std::string> eta_text;
    AssertedFacts asserted, asserted_cphi, asserted_mpsi;
    Policy policy;
    std::vector<std::pair<std::string, std::string>> echo;  // key/value lines as read

    OperatorInstance build() const;
    std::optional<MapRule> eta() const;
};

/// Parses the flat sectioned key/value format:
///
///   [space]   space = tree(b=2) | integers | gaussian | finite(file="...")
///   [weight]  rule = <scalar rule>
///   [psi]     rule = <scalar rule>
///   [phi]     rule = <map rule>       eta = <map rule>   (optional)
///   [asserted]  surjective/injective/bijective/finite_range = true|false
///               ratio_sup = <rational>|inf   ratio_inf/ratio_limit = <rational>
///               tail_sup_formula = <piecewise formula in n>
///               provenance.<fact> = <text>
///               cphi.<fact> / mpsi.<fact> component facts
///   [policy]  radius / budget / trials / seed / max_shells
///
/// Unknown sections or keys are rejected.
InstanceConfig parse_config(const std::string& text, const std::string& base_dir = ".");
InstanceConfig load_config_file(const std::string& path);

struct Preset {
    std::string name;
    std::string summary;
    std::string config_text;
};

const std::vector<Preset>& presets();
InstanceConfig load_preset(const std::string& name);

}  // namespace wco
