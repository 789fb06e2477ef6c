#include "riskmech/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace riskmech {

EffectiveCompute effective_compute(double flops, double efficiency_factor) {
    if (!(flops > 0.0) || !std::isfinite(flops))
        fail("invalid-compute", "flops must be positive and finite");
    if (!(efficiency_factor > 0.0) || !std::isfinite(efficiency_factor))
        fail("invalid-compute", "efficiency factor must be positive and finite");
    return EffectiveCompute{flops, efficiency_factor, flops * efficiency_factor};
}

double aggregate_risk(const SurveyRound& round, const std::string& scenario_id, int tier,
                      const std::optional<std::string>& exclude, double delta) {
    const Question* question = nullptr;
    for (const Question& q : round.questions) {
        if (q.scenario_id == scenario_id && q.compute_tier == tier) {
            question = &q;
            break;
        }
    }
    if (!question)
        fail("missing-question",
             "no question for scenario '" + scenario_id + "' at tier " + std::to_string(tier));

    const std::vector<double> xbar = endorsement_frequencies(round, question->id, delta, exclude);
    double risk = 0.0;
    for (std::size_t k = 0; k < xbar.size(); ++k) risk += xbar[k] * question->buckets[k].midpoint;
    return std::min(std::max(risk, 0.0), 1.0);
}

namespace {

void validate_schedule_frame(const std::vector<double>& tiers, const DisutilityTable& disutilities,
                             double threshold) {
    if (tiers.empty()) fail("invalid-tiers", "schedule needs at least one tier");
    for (std::size_t i = 0; i < tiers.size(); ++i) {
        if (!(tiers[i] > 0.0) || !std::isfinite(tiers[i]))
            fail("invalid-tiers", "tiers must be positive and finite");
        if (i > 0 && !(tiers[i] > tiers[i - 1]))
            fail("invalid-tiers", "tiers must be strictly increasing");
    }
    if (!(threshold >= 0.0) || !std::isfinite(threshold))
        fail("invalid-tiers", "threshold must be >= 0");
    for (const auto& [scenario, d] : disutilities.by_scenario)
        if (!(d >= 0.0) || !std::isfinite(d))
            fail("invalid-disutility", "disutility for '" + scenario + "' must be finite and >= 0");
}

}  // namespace

FeeSchedule publish_schedule(const SurveyRound& round, std::vector<double> tiers,
                             DisutilityTable disutilities, double threshold,
                             DiscountPolicy discount, bool allow_extrapolation, double delta) {
    validate_schedule_frame(tiers, disutilities, threshold);

    std::set<std::string> scenario_set;
    for (const Question& q : round.questions) scenario_set.insert(q.scenario_id);
    if (scenario_set.empty()) fail("missing-question", "round has no questions to aggregate");

    FeeSchedule schedule;
    schedule.interval_label = round.interval_label;
    schedule.tiers = std::move(tiers);
    schedule.scenarios.assign(scenario_set.begin(), scenario_set.end());
    schedule.disutilities = std::move(disutilities);
    schedule.threshold = threshold;
    schedule.discount = discount;
    schedule.allow_extrapolation = allow_extrapolation;

    for (const std::string& scenario : schedule.scenarios)
        if (!schedule.disutilities.by_scenario.count(scenario))
            fail("missing-disutility", "no disutility entry for scenario '" + scenario + "'");

    schedule.risks.assign(schedule.tiers.size(), std::vector<double>(schedule.scenarios.size(), 0.0));
    for (std::size_t t = 0; t < schedule.tiers.size(); ++t)
        for (std::size_t s = 0; s < schedule.scenarios.size(); ++s)
            schedule.risks[t][s] =
                aggregate_risk(round, schedule.scenarios[s], static_cast<int>(t), std::nullopt, delta);
    return schedule;
}

bool requires_participation(const EffectiveCompute& ec, const FeeSchedule& schedule) {
    return ec.value > schedule.threshold;
}

double participation_discount(int history, double rate, double cap) {
    if (history < 0) fail("invalid-round", "participation history must be >= 0");
    if (rate < 0.0 || cap < 0.0) fail("invalid-discount", "discount rate and cap must be >= 0");
    return std::min(static_cast<double>(history) * rate, cap);
}

double interpolate_log_ec(std::span<const double> tiers, std::span<const double> risks, double ec,
                          bool allow_extrapolation) {
    if (tiers.empty() || tiers.size() != risks.size())
        fail("invalid-tiers", "tier and risk vectors must be non-empty and equal-sized");
    if (!(ec > 0.0) || !std::isfinite(ec)) fail("invalid-compute", "effective compute must be > 0");

    // Exact knots bypass interpolation entirely.
    for (std::size_t i = 0; i < tiers.size(); ++i)
        if (ec == tiers[i]) return risks[i];

    if (tiers.size() == 1 || ec < tiers.front() || ec > tiers.back()) {
        if (!allow_extrapolation)
            fail("out-of-range", "effective compute outside the published tier span");
        if (tiers.size() == 1) return std::min(std::max(risks[0], 0.0), 1.0);
    }

    // Pick the segment: interior queries use their bracket, out-of-span
    // queries extend the nearest end segment.
    std::size_t hi = 1;
    while (hi + 1 < tiers.size() && tiers[hi] < ec) ++hi;
    const std::size_t lo = hi - 1;

    const double t = (std::log(ec) - std::log(tiers[lo])) /
                     (std::log(tiers[hi]) - std::log(tiers[lo]));
    const double risk = risks[lo] + (risks[hi] - risks[lo]) * t;
    return std::min(std::max(risk, 0.0), 1.0);
}

namespace {

double fee_from_risks(const EffectiveCompute& ec, const FeeSchedule& schedule,
                      const std::vector<std::vector<double>>& risks) {
    double fee = 0.0;
    for (std::size_t s = 0; s < schedule.scenarios.size(); ++s) {
        auto dit = schedule.disutilities.by_scenario.find(schedule.scenarios[s]);
        if (dit == schedule.disutilities.by_scenario.end())
            fail("missing-disutility", "no disutility entry for scenario '" + schedule.scenarios[s] + "'");
        std::vector<double> column(schedule.tiers.size());
        for (std::size_t t = 0; t < schedule.tiers.size(); ++t) column[t] = risks[t][s];
        fee += interpolate_log_ec(schedule.tiers, column, ec.value, schedule.allow_extrapolation) *
               dit->second;
    }
    return fee;
}

}  // namespace

double base_fee(const EffectiveCompute& ec, const FeeSchedule& schedule) {
    if (schedule.risks.size() != schedule.tiers.size())
        fail("invalid-tiers", "schedule risk matrix does not match its tiers");
    return fee_from_risks(ec, schedule, schedule.risks);
}

double base_fee(const EffectiveCompute& ec, const FeeSchedule& schedule, const SurveyRound& round,
                const std::optional<std::string>& exclude, double delta) {
    std::vector<std::vector<double>> risks(schedule.tiers.size(),
                                           std::vector<double>(schedule.scenarios.size(), 0.0));
    for (std::size_t t = 0; t < schedule.tiers.size(); ++t)
        for (std::size_t s = 0; s < schedule.scenarios.size(); ++s)
            risks[t][s] =
                aggregate_risk(round, schedule.scenarios[s], static_cast<int>(t), exclude, delta);
    return fee_from_risks(ec, schedule, risks);
}

double individualized_fee(const std::string& developer_id, const EffectiveCompute& ec,
                          const FeeSchedule& schedule, const SurveyRound& round, FeePolicy policy,
                          double delta) {
    const Respondent* developer = nullptr;
    for (const Respondent& person : round.respondents)
        if (person.id == developer_id) developer = &person;
    bool responded = false;
    for (const Response& r : round.responses)
        if (r.respondent_id == developer_id) responded = true;
    if (!developer || !responded)
        fail("participation-required",
             "developer '" + developer_id + "' did not participate in the last survey");

    const double fee = policy == FeePolicy::silenced
                           ? base_fee(ec, schedule, round, developer_id, delta)
                           : base_fee(ec, schedule);
    const double discount = participation_discount(developer->participation_history,
                                                   schedule.discount.rate, schedule.discount.cap);
    return fee * (1.0 - discount);
}

}  // namespace riskmech
