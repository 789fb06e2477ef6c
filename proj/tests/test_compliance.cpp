#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "riskmech/compliance.hpp"
#include "riskmech/sim.hpp"

using namespace riskmech;
using namespace riskmech::testing;

namespace {

PenaltySchedule default_penalties() {
    return PenaltySchedule{Money::from_value(1e6), Money::from_value(1e5)};
}

bool group_contains(const std::vector<RespondentFlag>& flags,
                    const std::vector<std::string>& members) {
    for (const RespondentFlag& flag : flags) {
        bool all = true;
        for (const std::string& m : members)
            if (std::find(flag.respondents.begin(), flag.respondents.end(), m) ==
                flag.respondents.end())
                all = false;
        if (all) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("identical respondents are flagged at threshold 1") {
    std::mt19937_64 rng(11);
    SurveyRound round = random_round(rng, 6, 2, 5);
    // make r0 and r1 byte-identical
    for (Response& r : round.responses)
        if (r.respondent_id == "r1") {
            for (Response& other : round.responses)
                if (other.respondent_id == "r0" && other.question_id == r.question_id) {
                    r.endorsement = other.endorsement;
                    r.prediction = other.prediction;
                }
        }
    const auto flags = detect_respondent_collusion(round, 1.0);
    CHECK(group_contains(flags, {"r0", "r1"}));
}

TEST_CASE("detection requires at least two questions and a complete round") {
    std::mt19937_64 rng(12);
    SurveyRound one_question = random_round(rng, 4, 2, 1);
    CHECK_THROWS_WITH_AS(detect_respondent_collusion(one_question, 0.9),
                         doctest::Contains("insufficient-data"), MechError);

    SurveyRound incomplete = random_round(rng, 4, 2, 3);
    incomplete.responses.pop_back();
    CHECK_THROWS_WITH_AS(detect_respondent_collusion(incomplete, 0.9),
                         doctest::Contains("incomplete-round"), MechError);
}

TEST_CASE("independent noisy responders are almost never flagged at threshold 0.99") {
    std::mt19937_64 rng(314159);
    int flagged_rounds = 0;
    const int rounds = 200;
    for (int trial = 0; trial < rounds; ++trial) {
        const SurveyRound round = random_round(rng, 20, 2, 5);
        if (!detect_respondent_collusion(round, 0.99).empty()) ++flagged_rounds;
    }
    CHECK(flagged_rounds < rounds / 100 + 1);  // < 1%
}

TEST_CASE("colluder coalitions from the simulator are flagged at threshold 0.9") {
    WorldModel model;
    model.states = {"good", "bad"};
    model.prior = {0.5, 0.5};
    model.signal_likelihoods = {{0.8, 0.2}, {0.2, 0.8}};

    std::vector<SimAgent> roster;
    for (int i = 0; i < 3; ++i)
        roster.push_back(SimAgent{"col" + std::to_string(i), Role::developer, 0,
                                  colluder_policy("ring", 0)});
    for (int i = 0; i < 17; ++i)
        roster.push_back(SimAgent{"e" + std::to_string(i), Role::independent_expert, 0,
                                  honest_policy()});

    int hits = 0;
    const int rounds = 100;
    for (int r = 0; r < rounds; ++r) {
        const SurveyRound round = sample_round(model, roster, 1000 + static_cast<std::uint64_t>(r), 5);
        const auto flags = detect_respondent_collusion(round, 0.9);
        if (group_contains(flags, {"col0", "col1", "col2"})) ++hits;
    }
    CHECK(hits == rounds);  // colluders are deterministic copies of each other
}

TEST_CASE("penalties: empty confirmations produce an empty ledger") {
    const ComplianceReport report = apply_penalties({}, {}, default_penalties());
    CHECK(report.ledger.empty());
    CHECK(report.net.empty());
}

TEST_CASE("penalties: fines and rewards are exact") {
    const ComplianceReport report =
        apply_penalties({{"a", "b", "c"}}, {"w"}, default_penalties());
    REQUIRE(report.ledger.size() == 4);

    Money debits, credits;
    for (const LedgerItem& item : report.ledger) {
        if (item.kind == "collusion-fine") debits += item.delta;
        if (item.kind == "whistleblower-reward") credits += item.delta;
    }
    CHECK(debits == Money::from_value(-3e6));
    CHECK(credits == Money::from_value(1e5));
    CHECK(report.net.at("a") == Money::from_value(-1e6));
    CHECK(report.net.at("w") == Money::from_value(1e5));
}

TEST_CASE("penalties: a whistleblowing colluder nets both line items") {
    const ComplianceReport report = apply_penalties({{"a", "b"}}, {"a"}, default_penalties());
    int items_for_a = 0;
    for (const LedgerItem& item : report.ledger)
        if (item.respondent_id == "a") ++items_for_a;
    CHECK(items_for_a == 2);
    CHECK(report.net.at("a") == Money::from_value(-9e5));
}

TEST_CASE("penalties: one fine per person even when groups overlap") {
    const ComplianceReport report =
        apply_penalties({{"a", "b"}, {"b", "c"}}, {}, default_penalties());
    Money total;
    for (const auto& [id, delta] : report.net) total += delta;
    CHECK(total == Money::from_value(-3e6));
}

TEST_CASE("ledger conservation on random confirmations") {
    std::mt19937_64 rng(606);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<std::string>> groups;
        std::set<std::string> people;
        const int n_groups = static_cast<int>(rng() % 3);
        for (int g = 0; g < n_groups; ++g) {
            std::vector<std::string> group;
            const int size = 2 + static_cast<int>(rng() % 3);
            for (int i = 0; i < size; ++i) {
                group.push_back("p" + std::to_string(rng() % 8));
                people.insert(group.back());
            }
            groups.push_back(std::move(group));
        }
        std::vector<std::string> blowers;
        if (rng() % 2) blowers.push_back("w1");

        std::set<std::string> colluders;
        for (const auto& g : groups) colluders.insert(g.begin(), g.end());

        const ComplianceReport report = apply_penalties(groups, blowers, default_penalties());
        Money net_total;
        for (const auto& [id, delta] : report.net) net_total += delta;
        const Money expected =
            Money::from_value(-1e6 * static_cast<double>(colluders.size()) +
                              1e5 * static_cast<double>(blowers.size()));
        CHECK(net_total == expected);
    }
}

TEST_CASE("penalty schedule invariants") {
    CHECK_THROWS_WITH_AS(validate_penalties(PenaltySchedule{Money::from_value(1e5),
                                                            Money::from_value(1e6)}),
                         doctest::Contains("invalid-penalty-schedule"), MechError);
    CHECK_THROWS_WITH_AS(validate_penalties(PenaltySchedule{Money::from_value(1e6), Money{}}),
                         doctest::Contains("invalid-penalty-schedule"), MechError);
}

TEST_CASE("iso-8601 parsing") {
    CHECK(parse_iso8601_utc("1970-01-01") == 0);
    CHECK(parse_iso8601_utc("1970-01-02T00:00:00Z") == 86400);
    CHECK(parse_iso8601_utc("2030-06-01T12:30:05Z") ==
          parse_iso8601_utc("2030-06-01") + 12 * 3600 + 30 * 60 + 5);
    CHECK_THROWS_WITH_AS(parse_iso8601_utc("yesterday"), doctest::Contains("invalid-timestamp"),
                         MechError);
    CHECK_THROWS_WITH_AS(parse_iso8601_utc("2030-13-01"), doctest::Contains("invalid-timestamp"),
                         MechError);
}

TEST_CASE("poll bar: empty log, inside-window and outside-window events") {
    const std::int64_t survey = parse_iso8601_utc("2030-06-01");
    const std::vector<std::string> indemnified = {"dev1"};

    CHECK(check_pre_survey_poll_bar({}, indemnified, survey, 30).empty());

    const std::vector<PollEvent> events = {
        {"dev1", "private-poll", parse_iso8601_utc("2030-05-22")},   // 10 days before
        {"dev1", "private-poll", parse_iso8601_utc("2030-04-22")},   // 40 days before
        {"dev1", "press-release", parse_iso8601_utc("2030-05-22")},  // wrong kind
        {"ngo", "private-poll", parse_iso8601_utc("2030-05-22")},    // not indemnified
    };
    const auto violations = check_pre_survey_poll_bar(events, indemnified, survey, 30);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].actor == "dev1");
    CHECK(violations[0].timestamp == parse_iso8601_utc("2030-05-22"));
}

TEST_CASE("poll bar: window boundaries") {
    const std::int64_t survey = parse_iso8601_utc("2030-06-01");
    const std::vector<std::string> indemnified = {"dev1"};
    const std::vector<PollEvent> events = {
        {"dev1", "private-poll", survey - 30 * 86400},  // exactly at the window start
        {"dev1", "private-poll", survey},               // at the survey itself
    };
    const auto violations = check_pre_survey_poll_bar(events, indemnified, survey, 30);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].timestamp == survey - 30 * 86400);
}

TEST_CASE("event log parsing") {
    const auto events = parse_event_log(
        "dev1,private-poll,2030-05-22T09:00:00Z\n"
        "\n"
        "ngo,briefing,2030-05-01\n");
    REQUIRE(events.size() == 2);
    CHECK(events[0].actor == "dev1");
    CHECK(events[0].kind == "private-poll");
    CHECK(events[1].timestamp == parse_iso8601_utc("2030-05-01"));
    CHECK_THROWS_WITH_AS(parse_event_log("not a record\n"), doctest::Contains("invalid-event"),
                         MechError);
}

TEST_CASE("detection is reproducible") {
    std::mt19937_64 rng(777);
    const SurveyRound round = random_round(rng, 10, 3, 4);
    const auto a = detect_respondent_collusion(round, 0.5);
    const auto b = detect_respondent_collusion(round, 0.5);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].respondents == b[i].respondents);
        CHECK(a[i].agreement == b[i].agreement);
        CHECK(a[i].mean_l1 == b[i].mean_l1);
    }
}
