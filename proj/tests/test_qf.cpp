#include <algorithm>
#include <random>

#include "doctest.h"
#include "riskmech/qf.hpp"

using namespace riskmech;

namespace {

Money money(double v) { return Money::from_value(v); }

Contribution give(const std::string& who, const std::string& project, double amount) {
    return Contribution{who, project, money(amount)};
}

QfRound round_with(std::vector<Project> projects, std::vector<Contribution> contributions,
                   double budget,
                   std::vector<std::pair<std::string, std::string>> links = {}) {
    QfRound round;
    round.projects = std::move(projects);
    round.contributions = std::move(contributions);
    round.matching_budget = money(budget);
    round.identity_links = std::move(links);
    return round;
}

}  // namespace

TEST_CASE("merge_sybils: linked identities collapse into the canonical id") {
    const auto merged = merge_sybils({give("b", "P", 4.0), give("a", "P", 4.0)}, {{"a", "b"}});
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].contributor_id == "a");
    CHECK(merged[0].amount == money(8.0));
}

TEST_CASE("merge_sybils: no links leaves contributions unchanged") {
    const auto merged = merge_sybils({give("a", "P", 1.0), give("b", "Q", 2.0)}, {});
    REQUIRE(merged.size() == 2);
    CHECK(merged[0].contributor_id == "a");
    CHECK(merged[0].amount == money(1.0));
    CHECK(merged[1].contributor_id == "b");
}

TEST_CASE("merge_sybils: links close transitively, result is order-independent") {
    const std::vector<Contribution> forward = {give("a", "P", 1.0), give("b", "P", 1.0),
                                               give("c", "P", 1.0)};
    std::vector<Contribution> backward = forward;
    std::reverse(backward.begin(), backward.end());

    const auto m1 = merge_sybils(forward, {{"a", "b"}, {"b", "c"}});
    const auto m2 = merge_sybils(backward, {{"c", "b"}, {"b", "a"}});
    REQUIRE(m1.size() == 1);
    CHECK(m1[0].contributor_id == "a");
    CHECK(m1[0].amount == money(3.0));
    REQUIRE(m2.size() == 1);
    CHECK(m2[0].contributor_id == m1[0].contributor_id);
    CHECK(m2[0].amount == m1[0].amount);
}

TEST_CASE("ideal match: lone contributor gets no top-up") {
    const Money amounts[] = {money(9.0)};
    CHECK(ideal_match(amounts) == money(9.0));
}

TEST_CASE("ideal match: (4,4) -> 16 and (1,1,1,1) -> 16") {
    const Money pair[] = {money(4.0), money(4.0)};
    CHECK(ideal_match(pair) == money(16.0));
    const Money quad[] = {money(1.0), money(1.0), money(1.0), money(1.0)};
    CHECK(ideal_match(quad) == money(16.0));
}

TEST_CASE("ideal match: n equal shares of a fixed total gives n * total exactly") {
    // 25.20 splits exactly into minor units for every n in 1..10.
    for (int n = 1; n <= 10; ++n) {
        std::vector<Money> amounts(static_cast<std::size_t>(n),
                                   Money::from_minor(2520 / n));
        CHECK(ideal_match(amounts).minor() == static_cast<std::int64_t>(n) * 2520);
    }
}

TEST_CASE("ideal match never falls below the private total") {
    std::mt19937_64 rng(90210);
    std::uniform_int_distribution<int> count(1, 6);
    std::uniform_int_distribution<std::int64_t> cents(1, 200000);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<Money> amounts;
        Money total;
        const int n = count(rng);
        for (int i = 0; i < n; ++i) {
            amounts.push_back(Money::from_minor(cents(rng)));
            total += amounts.back();
        }
        const Money match = ideal_match(amounts);
        CHECK(match >= total);
        if (n == 1) CHECK(match == total);
        if (n > 1) CHECK(match > total);
    }
}

TEST_CASE("allocate: worked example with proportional budget scaling") {
    // A: single 9 -> subsidy 0; B: (4,4) -> subsidy 8; C: (1,1,1,1) -> subsidy 12.
    const QfRound round = round_with(
        {Project{"A", "", {}}, Project{"B", "", {}}, Project{"C", "", {}}},
        {give("solo", "A", 9.0), give("x", "B", 4.0), give("y", "B", 4.0), give("p", "C", 1.0),
         give("q", "C", 1.0), give("r", "C", 1.0), give("s", "C", 1.0)},
        10.0);
    const auto results = allocate(round);
    REQUIRE(results.size() == 3);
    CHECK(results[0].subsidy == money(0.0));
    CHECK(results[1].subsidy == money(8.0));
    CHECK(results[2].subsidy == money(12.0));
    CHECK(results[0].scaled_subsidy == money(0.0));
    CHECK(results[1].scaled_subsidy == money(4.0));
    CHECK(results[2].scaled_subsidy == money(6.0));
}

TEST_CASE("allocate: zero budget zeroes every scaled subsidy") {
    const QfRound round = round_with({Project{"B", "", {}}},
                                     {give("x", "B", 4.0), give("y", "B", 4.0)}, 0.0);
    const auto results = allocate(round);
    CHECK(results[0].subsidy == money(8.0));
    CHECK(results[0].scaled_subsidy == money(0.0));
}

TEST_CASE("allocate: ample budget pays the ideal subsidy") {
    const QfRound round = round_with({Project{"B", "", {}}},
                                     {give("x", "B", 4.0), give("y", "B", 4.0)}, 100.0);
    CHECK(allocate(round)[0].scaled_subsidy == money(8.0));
}

TEST_CASE("allocate: merging sybils never raises a match") {
    const std::vector<Project> projects = {Project{"P", "", {}}};
    const std::vector<Contribution> contributions = {give("a", "P", 4.0), give("b", "P", 4.0)};
    const auto split = allocate(round_with(projects, contributions, 1000.0));
    const auto merged = allocate(round_with(projects, contributions, 1000.0, {{"a", "b"}}));
    CHECK(merged[0].ideal_match <= split[0].ideal_match);
    CHECK(merged[0].ideal_match == money(8.0));
    CHECK(merged[0].subsidy == money(0.0));
}

TEST_CASE("allocate: scaled subsidies never exceed the budget, deterministically") {
    std::mt19937_64 rng(1234321);
    std::uniform_int_distribution<int> n_projects(1, 6);
    std::uniform_int_distribution<int> n_contrib(1, 5);
    std::uniform_int_distribution<std::int64_t> cents(1, 900000);
    std::uniform_int_distribution<std::int64_t> budget_cents(0, 400000);
    for (int trial = 0; trial < 300; ++trial) {
        QfRound round;
        const int np = n_projects(rng);
        for (int p = 0; p < np; ++p) {
            round.projects.push_back(Project{"P" + std::to_string(p), "", {}});
            const int nc = n_contrib(rng);
            for (int c = 0; c < nc; ++c)
                round.contributions.push_back(Contribution{
                    "c" + std::to_string(c), "P" + std::to_string(p), Money::from_minor(cents(rng))});
        }
        round.matching_budget = Money::from_minor(budget_cents(rng));

        const auto a = allocate(round);
        const auto b = allocate(round);
        Money scaled_total;
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].subsidy >= Money{});
            CHECK(a[i].scaled_subsidy >= Money{});
            CHECK(a[i].scaled_subsidy == b[i].scaled_subsidy);  // purity
            scaled_total += a[i].scaled_subsidy;
        }
        CHECK(scaled_total <= round.matching_budget);
    }
}

TEST_CASE("allocate validates its round") {
    QfRound round = round_with({Project{"P", "", {}}}, {give("a", "nope", 1.0)}, 1.0);
    CHECK_THROWS_WITH_AS(allocate(round), doctest::Contains("unknown-project"), MechError);

    round = round_with({Project{"P", "", {}}, Project{"P", "", {}}}, {}, 1.0);
    CHECK_THROWS_WITH_AS(allocate(round), doctest::Contains("duplicate-project"), MechError);
}

TEST_CASE("quadratic scaling: equal split of T over n contributors matches n*T") {
    for (int n = 1; n <= 10; ++n) {
        QfRound round;
        round.projects.push_back(Project{"P", "", {}});
        round.matching_budget = money(1e6);
        for (int i = 0; i < n; ++i)
            round.contributions.push_back(
                Contribution{"c" + std::to_string(i), "P", Money::from_minor(2520 / n)});
        const auto results = allocate(round);
        CHECK(results[0].ideal_match.minor() == static_cast<std::int64_t>(n) * 2520);
    }
}

TEST_CASE("funding collusion: identical vectors are flagged at threshold 1") {
    const QfRound round = round_with(
        {Project{"P0", "", {}}, Project{"P1", "", {}}, Project{"P2", "", {}}},
        {give("a", "P0", 2.0), give("a", "P1", 3.0), give("a", "P2", 5.0), give("b", "P0", 2.0),
         give("b", "P1", 3.0), give("b", "P2", 5.0)},
        10.0);
    const auto flags = detect_funding_collusion(round, 1.0);
    REQUIRE(flags.size() == 1);
    CHECK(flags[0].contributors == std::vector<std::string>{"a", "b"});
    CHECK(flags[0].similarity == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("funding collusion: disjoint supports are never flagged") {
    const QfRound round = round_with(
        {Project{"P0", "", {}}, Project{"P1", "", {}}},
        {give("a", "P0", 2.0), give("b", "P1", 2.0)}, 10.0);
    CHECK(detect_funding_collusion(round, 0.0).empty());
    CHECK(detect_funding_collusion(round, 0.9).empty());
}

TEST_CASE("funding collusion: cosine threshold boundary at 1/sqrt(2)") {
    const QfRound round = round_with(
        {Project{"P0", "", {}}, Project{"P1", "", {}}, Project{"P2", "", {}}},
        {give("a", "P0", 1.0), give("a", "P1", 1.0), give("b", "P0", 1.0)}, 10.0);
    CHECK(detect_funding_collusion(round, 0.70).size() == 1);
    CHECK(detect_funding_collusion(round, 0.7071).size() == 1);
    CHECK(detect_funding_collusion(round, 0.7072).empty());
}

TEST_CASE("funding collusion: single shared project alone does not span enough") {
    const QfRound round = round_with({Project{"P0", "", {}}},
                                     {give("a", "P0", 1.0), give("b", "P0", 1.0)}, 10.0);
    CHECK(detect_funding_collusion(round, 0.5).empty());
}
