#include "hgnplan/generators.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hgnplan {

namespace {

constexpr const char *kGripperDomain = R"((define (domain gripper-typed)
  (:requirements :strips :typing)
  (:types room ball gripper)
  (:predicates (at-robby ?r - room)
               (at ?b - ball ?r - room)
               (free ?g - gripper)
               (carry ?o - ball ?g - gripper))
  (:action move
    :parameters (?from ?to - room)
    :precondition (at-robby ?from)
    :effect (and (at-robby ?to) (not (at-robby ?from))))
  (:action pick
    :parameters (?obj - ball ?room - room ?gripper - gripper)
    :precondition (and (at ?obj ?room) (at-robby ?room) (free ?gripper))
    :effect (and (carry ?obj ?gripper) (not (at ?obj ?room)) (not (free ?gripper))))
  (:action drop
    :parameters (?obj - ball ?room - room ?gripper - gripper)
    :precondition (and (carry ?obj ?gripper) (at-robby ?room))
    :effect (and (at ?obj ?room) (free ?gripper) (not (carry ?obj ?gripper)))))
)";

constexpr const char *kFerryDomain = R"((define (domain ferry)
  (:requirements :strips :typing)
  (:types car location)
  (:predicates (not-eq ?x ?y - location)
               (at-ferry ?l - location)
               (at ?c - car ?l - location)
               (empty-ferry)
               (on ?c - car))
  (:action sail
    :parameters (?from ?to - location)
    :precondition (and (not-eq ?from ?to) (at-ferry ?from))
    :effect (and (at-ferry ?to) (not (at-ferry ?from))))
  (:action board
    :parameters (?car - car ?loc - location)
    :precondition (and (at ?car ?loc) (at-ferry ?loc) (empty-ferry))
    :effect (and (on ?car) (not (at ?car ?loc)) (not (empty-ferry))))
  (:action debark
    :parameters (?car - car ?loc - location)
    :precondition (and (on ?car) (at-ferry ?loc))
    :effect (and (at ?car ?loc) (empty-ferry) (not (on ?car)))))
)";

constexpr const char *kBlocksDomain = R"((define (domain blocksworld)
  (:requirements :strips)
  (:predicates (clear ?x) (on-table ?x) (arm-empty) (holding ?x) (on ?x ?y))
  (:action pickup
    :parameters (?ob)
    :precondition (and (clear ?ob) (on-table ?ob) (arm-empty))
    :effect (and (holding ?ob) (not (clear ?ob)) (not (on-table ?ob)) (not (arm-empty))))
  (:action putdown
    :parameters (?ob)
    :precondition (holding ?ob)
    :effect (and (clear ?ob) (arm-empty) (on-table ?ob) (not (holding ?ob))))
  (:action stack
    :parameters (?ob ?underob)
    :precondition (and (clear ?underob) (holding ?ob))
    :effect (and (arm-empty) (clear ?ob) (on ?ob ?underob) (not (clear ?underob)) (not (holding ?ob))))
  (:action unstack
    :parameters (?ob ?underob)
    :precondition (and (on ?ob ?underob) (clear ?ob) (arm-empty))
    :effect (and (holding ?ob) (clear ?underob) (not (on ?ob ?underob)) (not (clear ?ob)) (not (arm-empty)))))
)";

std::string gripper_problem(int balls) {
    if (balls < 1)
        throw std::invalid_argument("gripper needs at least one ball");
    std::ostringstream os;
    os << "(define (problem gripper-" << balls << ")\n"
       << "  (:domain gripper-typed)\n"
       << "  (:objects rooma roomb - room left right - gripper";
    for (int b = 1; b <= balls; ++b)
        os << " ball" << b;
    os << " - ball)\n"
       << "  (:init (at-robby rooma) (free left) (free right)";
    for (int b = 1; b <= balls; ++b)
        os << " (at ball" << b << " rooma)";
    os << ")\n  (:goal (and";
    for (int b = 1; b <= balls; ++b)
        os << " (at ball" << b << " roomb)";
    os << ")))\n";
    return os.str();
}

std::string ferry_problem(int locations, int cars, std::uint64_t seed) {
    if (locations < 2)
        throw std::invalid_argument("ferry needs at least two locations");
    if (cars < 1)
        throw std::invalid_argument("ferry needs at least one car");
    std::mt19937_64 rng(seed);
    auto loc = [&] { return static_cast<int>(rng() % static_cast<std::uint64_t>(locations)); };
    std::ostringstream os;
    os << "(define (problem ferry-l" << locations << "-c" << cars << "-s" << seed << ")\n"
       << "  (:domain ferry)\n  (:objects";
    for (int l = 0; l < locations; ++l)
        os << " l" << l;
    os << " - location";
    for (int c = 0; c < cars; ++c)
        os << " c" << c;
    os << " - car)\n  (:init";
    for (int a = 0; a < locations; ++a)
        for (int b = 0; b < locations; ++b)
            if (a != b)
                os << " (not-eq l" << a << " l" << b << ")";
    os << " (empty-ferry) (at-ferry l" << loc() << ")";
    std::vector<int> goal(static_cast<std::size_t>(cars));
    for (int c = 0; c < cars; ++c)
        os << " (at c" << c << " l" << loc() << ")";
    for (int c = 0; c < cars; ++c)
        goal[static_cast<std::size_t>(c)] = loc();
    os << ")\n  (:goal (and";
    for (int c = 0; c < cars; ++c)
        os << " (at c" << c << " l" << goal[static_cast<std::size_t>(c)] << ")";
    os << ")))\n";
    return os.str();
}

void print_blocks_state(std::ostream &os, const std::vector<int> &below, bool with_clear_and_arm) {
    std::vector<bool> covered(below.size(), false);
    if (with_clear_and_arm)
        os << " (arm-empty)";
    for (std::size_t i = 0; i < below.size(); ++i) {
        if (below[i] < 0) {
            os << " (on-table b" << i + 1 << ")";
        } else {
            os << " (on b" << i + 1 << " b" << below[i] + 1 << ")";
            covered[static_cast<std::size_t>(below[i])] = true;
        }
    }
    if (with_clear_and_arm)
        for (std::size_t i = 0; i < below.size(); ++i)
            if (!covered[i])
                os << " (clear b" << i + 1 << ")";
}

std::string blocks_problem(int blocks, std::uint64_t seed) {
    if (blocks < 1)
        throw std::invalid_argument("blocksworld needs at least one block");
    std::mt19937_64 seeder(seed);
    std::vector<int> init = random_blocks_state(blocks, seeder());
    std::vector<int> goal = random_blocks_state(blocks, seeder());
    // Redraw trivial instances; a single block has only one configuration.
    for (int tries = 0; goal == init && blocks > 1 && tries < 100; ++tries)
        goal = random_blocks_state(blocks, seeder());
    std::ostringstream os;
    os << "(define (problem bw-" << blocks << "-s" << seed << ")\n"
       << "  (:domain blocksworld)\n  (:objects";
    for (int b = 1; b <= blocks; ++b)
        os << " b" << b;
    os << ")\n  (:init";
    print_blocks_state(os, init, true);
    os << ")\n  (:goal (and";
    print_blocks_state(os, goal, false);
    os << ")))\n";
    return os.str();
}

}  // namespace

GeneratorDomain parse_generator_domain(std::string_view name) {
    if (name == "gripper")
        return GeneratorDomain::Gripper;
    if (name == "ferry")
        return GeneratorDomain::Ferry;
    if (name == "blocksworld")
        return GeneratorDomain::Blocksworld;
    throw std::invalid_argument("unknown generator domain '" + std::string(name) + "'");
}

std::string_view generator_domain_name(GeneratorDomain d) {
    switch (d) {
    case GeneratorDomain::Gripper:
        return "gripper";
    case GeneratorDomain::Ferry:
        return "ferry";
    case GeneratorDomain::Blocksworld:
        return "blocksworld";
    }
    return "?";
}

std::string domain_text(GeneratorDomain d) {
    switch (d) {
    case GeneratorDomain::Gripper:
        return kGripperDomain;
    case GeneratorDomain::Ferry:
        return kFerryDomain;
    case GeneratorDomain::Blocksworld:
        return kBlocksDomain;
    }
    return {};
}

std::string gen_problem(GeneratorDomain d, const ProblemParams &params, std::uint64_t seed) {
    switch (d) {
    case GeneratorDomain::Gripper:
        return gripper_problem(params.balls);
    case GeneratorDomain::Ferry:
        return ferry_problem(params.locations, params.cars, seed);
    case GeneratorDomain::Blocksworld:
        return blocks_problem(params.blocks, seed);
    }
    throw std::invalid_argument("unknown generator domain");
}

// Exact uniform sampling over configurations of n labelled blocks. The number of
// configurations with k towers is the Lah number C(n-1,k-1) n!/k!; given k, a
// uniform permutation cut at k-1 uniform positions is uniform over the k! ordered
// tower lists of each configuration.
std::vector<int> random_blocks_state(int n, std::uint64_t seed) {
    if (n < 1)
        throw std::invalid_argument("need at least one block");
    std::mt19937_64 rng(seed);
    std::vector<long double> log_weight(static_cast<std::size_t>(n) + 1, 0.0L);
    for (int k = 1; k <= n; ++k)
        log_weight[static_cast<std::size_t>(k)] = std::lgamma(static_cast<long double>(n)) -
                                                  std::lgamma(static_cast<long double>(k)) -
                                                  std::lgamma(static_cast<long double>(n - k + 1)) +
                                                  std::lgamma(static_cast<long double>(n + 1)) -
                                                  std::lgamma(static_cast<long double>(k + 1));
    long double max_lw = *std::max_element(log_weight.begin() + 1, log_weight.end());
    std::vector<double> weights(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 1; k <= n; ++k)
        weights[static_cast<std::size_t>(k)] = static_cast<double>(std::exp(log_weight[static_cast<std::size_t>(k)] - max_lw));
    std::discrete_distribution<int> pick_k(weights.begin(), weights.end());
    int k = pick_k(rng);

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> gaps(static_cast<std::size_t>(n - 1));
    std::iota(gaps.begin(), gaps.end(), 1);
    std::shuffle(gaps.begin(), gaps.end(), rng);
    std::vector<bool> cut(static_cast<std::size_t>(n) + 1, false);
    for (int i = 0; i < k - 1; ++i)
        cut[static_cast<std::size_t>(gaps[static_cast<std::size_t>(i)])] = true;

    std::vector<int> below(static_cast<std::size_t>(n), -1);
    for (int i = 1; i < n; ++i)
        if (!cut[static_cast<std::size_t>(i)])
            below[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = perm[static_cast<std::size_t>(i - 1)];
    return below;
}

}  // namespace hgnplan
