#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hgnplan {

enum class GeneratorDomain { Gripper, Ferry, Blocksworld };

GeneratorDomain parse_generator_domain(std::string_view name);
std::string_view generator_domain_name(GeneratorDomain d);

// PDDL domain text matching the problems emitted by gen_problem.
std::string domain_text(GeneratorDomain d);

struct ProblemParams {
    int balls = 1;      // gripper
    int locations = 2;  // ferry
    int cars = 1;       // ferry
    int blocks = 3;     // blocksworld
};

// Deterministic given (domain, params, seed). Throws std::invalid_argument on bad params.
std::string gen_problem(GeneratorDomain d, const ProblemParams &params, std::uint64_t seed);

// Uniformly random blocksworld configuration over `n` blocks: `below[i]` is the
// block that block i sits on, or -1 for the table.
std::vector<int> random_blocks_state(int n, std::uint64_t seed);

}  // namespace hgnplan
