#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskmech/survey.hpp"

namespace riskmech {

// Risk-priced indemnity fees over effective compute. Survey endorsements are
// aggregated into per-(scenario, tier) disaster probabilities; a fee is the
// expected loss sum_scenarios P(scenario, ec) * disutility(scenario), with P
// interpolated piecewise-linearly in ln(effective compute) between tiers.

struct DisutilityTable {
    std::map<std::string, double> by_scenario;  // scenario_id -> money units, finite, >= 0
};

struct EffectiveCompute {
    double flops = 0.0;
    double efficiency_factor = 0.0;
    double value = 0.0;  // flops * efficiency_factor
};

// Throws "invalid-compute" unless both inputs are positive and finite.
EffectiveCompute effective_compute(double flops, double efficiency_factor);

struct DiscountPolicy {
    double rate = 0.01;  // per consecutive prior survey
    double cap = 0.05;
};

// Published once per survey interval and treated as immutable afterwards.
struct FeeSchedule {
    std::string interval_label;
    std::vector<double> tiers;  // effective-compute values, strictly increasing
    std::vector<std::string> scenarios;
    std::vector<std::vector<double>> risks;  // risks[tier][scenario], each in [0, 1]
    DisutilityTable disutilities;
    double threshold = 0.0;  // mandatory participation above this effective compute
    DiscountPolicy discount;
    bool allow_extrapolation = false;
};

enum class FeePolicy { scaled_payout, silenced };

// Expected disaster probability for one (scenario, tier) question:
// sum_k xbar_k * midpoint_k, optionally excluding one respondent's answer.
double aggregate_risk(const SurveyRound& round, const std::string& scenario_id, int tier,
                      const std::optional<std::string>& exclude = {}, double delta = 0.0);

// Builds the full (tier, scenario) risk matrix from a complete round. Every
// scenario must have a question at every tier and a disutility entry.
FeeSchedule publish_schedule(const SurveyRound& round, std::vector<double> tiers,
                             DisutilityTable disutilities, double threshold,
                             DiscountPolicy discount = {}, bool allow_extrapolation = false,
                             double delta = 0.0);

// Strictly greater than the threshold.
bool requires_participation(const EffectiveCompute& ec, const FeeSchedule& schedule);

// min(history * rate, cap).
double participation_discount(int history, double rate, double cap);

// Piecewise-linear interpolation in ln(effective compute); exact at knots,
// clamped to [0, 1]. Out-of-span queries throw "out-of-range" unless
// extrapolation is allowed.
double interpolate_log_ec(std::span<const double> tiers, std::span<const double> risks, double ec,
                          bool allow_extrapolation);

// Expected-loss fee from the published risk matrix.
double base_fee(const EffectiveCompute& ec, const FeeSchedule& schedule);

// Same fee with the risk matrix recomputed from the round, excluding one
// respondent's answers (the silencing rule).
double base_fee(const EffectiveCompute& ec, const FeeSchedule& schedule, const SurveyRound& round,
                const std::optional<std::string>& exclude, double delta = 0.0);

// Per-developer fee. Requires the developer to have participated in the
// round. Under FeePolicy::silenced the developer's own answers are excluded
// from the aggregation, so the fee is invariant to them; either way the
// participation discount multiplier (1 - discount) applies.
double individualized_fee(const std::string& developer_id, const EffectiveCompute& ec,
                          const FeeSchedule& schedule, const SurveyRound& round, FeePolicy policy,
                          double delta = 0.0);

}  // namespace riskmech
