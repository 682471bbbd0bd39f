#pragma once

#include <string>
#include <string_view>

#include "tap/model.hpp"

namespace tap {

// Parses a PDDL 2.1 domain restricted to: STRIPS actions, :typing, :fluents,
// :durative-actions with (at start ...) / (over all ...) / (at end ...)
// annotations, and negative preconditions. Anything outside the subset
// (quantifiers, conditional effects, duration inequalities, derived
// predicates, ...) raises InputError{unsupported}. Identifiers are
// case-insensitive and stored lower-case.
Domain parse_domain(std::string_view text, const std::string& source_name = "<domain>");

// Parses a problem against an already-parsed domain. Timed initial literals
// and metric maximization are rejected.
Problem parse_problem(std::string_view text, const Domain& domain,
                      const std::string& source_name = "<problem>");

Domain parse_domain_file(const std::string& path);
Problem parse_problem_file(const std::string& path, const Domain& domain);

}  // namespace tap
