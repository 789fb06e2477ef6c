#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskmech/pricing.hpp"
#include "riskmech/survey.hpp"

namespace riskmech {

// Monte Carlo harness for the incentive properties of the scored survey:
// honest reporting versus unilateral deviations, payout scaling against the
// fee incentive, and the two-developer underreporting dilemma.
//
// Generative model: each question draws a latent state from the prior, then
// each respondent an independent signal from that state's likelihood row.
// Honest agents endorse their signal's bucket and predict another
// respondent's signal via the Bayesian posterior predictive.
//
// Randomness is counter-based (see rng.hpp) with a fixed stream layout:
//   replicate seed  s_r = counter_mix(master_seed, kReplicateDomain, r)
//   state of question q        ~ counter_uniform(s_r, 0, q)
//   signal of agent i, question q ~ counter_uniform(s_r, i + 1, q)
// Policies consume no randomness, so compared policies see identical worlds
// (common random numbers) by construction.

inline constexpr std::uint64_t kReplicateDomain = 0x7265706c69636174ULL;

struct WorldModel {
    std::vector<std::string> states;
    std::vector<double> prior;                            // over states
    std::vector<std::vector<double>> signal_likelihoods;  // [state][bucket]
};

// Throws "invalid-model" unless prior and every likelihood row are
// distributions (entries >= 0, sums within 1e-12 of 1).
void validate_model(const WorldModel& model);

struct AgentPolicy {
    enum class Kind { honest, underreport, fixed, flipped, colluder };
    enum class PredictionRule { bayes, fabricated };

    Kind kind = Kind::honest;
    int shift = 1;             // underreport: buckets to shift down, saturating at 0
    int bucket = 0;            // fixed / colluder: the endorsed bucket
    std::string coalition_id;  // colluder only
    PredictionRule prediction_rule = PredictionRule::bayes;
    std::vector<double> fabricated;  // used when prediction_rule == fabricated
};

AgentPolicy honest_policy();
AgentPolicy underreport_policy(int shift);
AgentPolicy fixed_policy(int bucket);
AgentPolicy flipped_policy();
AgentPolicy colluder_policy(std::string coalition_id, int bucket);

struct SimAgent {
    std::string id;
    Role role = Role::independent_expert;
    int participation_history = 0;
    AgentPolicy policy;
};

struct QuestionTemplate {
    std::vector<Bucket> buckets;
    std::string scenario_id = "scenario";
};

// Two buckets: "below 10%" (midpoint 1%) and "10% or more" (midpoint 50%).
QuestionTemplate default_binary_template();

// Fee side of a developer's utility, evaluated per replicate from the
// generated round via publish_schedule / individualized_fee.
struct FeeContext {
    std::vector<double> tiers;  // question with compute_tier q prices tier q
    DisutilityTable disutilities;
    double threshold = 0.0;
    DiscountPolicy discount;
    EffectiveCompute developer_ec;
    FeePolicy policy = FeePolicy::silenced;
    bool developer_receives_payout = true;  // whether silenced developers still earn BTS payouts
};

struct SimConfig {
    WorldModel model;
    std::vector<SimAgent> roster;
    QuestionTemplate question = default_binary_template();
    int questions = 1;
    double alpha = 1.0;
    double payout_scale = 1.0;
    double delta = 0.0;  // endorsement-frequency pseudo-count
    std::optional<FeeContext> fee;
    int replicates = 1000;
    std::uint64_t master_seed = 0;
    int test_agent = 0;  // roster index whose policy expected_payout swaps in
};

// Bayesian posterior predictive of another respondent's signal:
// y_k = sum_s P(s | signal) * P(k | s). Throws "impossible-signal" when the
// observed signal has zero marginal probability.
std::vector<double> posterior_predictive(int signal, const WorldModel& model);

// One synthetic round: states, signals, and policy-generated responses.
// Bit-identical for identical (model, roster, seed, questions, template).
SurveyRound sample_round(const WorldModel& model, const std::vector<SimAgent>& roster,
                         std::uint64_t seed, int questions = 1,
                         const QuestionTemplate& question = default_binary_template());

struct Estimate {
    double mean = 0.0;
    double half_width = 0.0;  // 95% normal half-width of the mean
    int replicates = 0;
};

// Mean BTS payout of the test agent when it plays `policy` against the
// baseline roster, over config.replicates rounds.
Estimate expected_payout(const AgentPolicy& policy, const SimConfig& config);

// Paired difference payout(a) - payout(b) under common random numbers.
Estimate payout_gap(const AgentPolicy& a, const AgentPolicy& b, const SimConfig& config);

// Net developer utility: BTS payout minus the individualized fee from the
// replicate round. Requires config.fee.
Estimate developer_net_utility(const AgentPolicy& policy, const SimConfig& config);

// Paired difference net(a) - net(b) under common random numbers.
Estimate net_utility_gap(const AgentPolicy& a, const AgentPolicy& b, const SimConfig& config);

// Named unilateral deviations tested against honest play: every fixed bucket,
// the flipped endorsement, and an honest endorsement with a fabricated
// uniform prediction.
std::vector<std::pair<std::string, AgentPolicy>> default_deviation_catalog(int buckets);

struct DeviationReport {
    std::string name;
    Estimate payout;
    Estimate gap;  // payout(honest) - payout(deviation), paired
};

struct ComparisonReport {
    Estimate honest;
    std::vector<DeviationReport> deviations;
    bool honest_dominates = false;  // every gap mean exceeds its half-width
};

// Per-replicate payout traces for the optional CSV dump: one named series per
// policy arm.
using PolicyTraces = std::vector<std::pair<std::string, std::vector<double>>>;

// Honest play against every cataloged deviation under common random numbers;
// the honest arm is sampled once and shared across the paired gaps.
ComparisonReport compare_policies(const SimConfig& config,
                                  const std::vector<std::pair<std::string, AgentPolicy>>& catalog,
                                  PolicyTraces* traces = nullptr);

struct DilemmaCell {
    Estimate net[2];   // per developer
    Estimate fee[2];
};

struct DilemmaResult {
    // cells[i][j]: developer 0 plays strategy i, developer 1 plays strategy j;
    // strategy 0 = coordinate (underreport), 1 = defect (honest).
    DilemmaCell cells[2][2];
    // defect_gain[d][s]: paired gain for developer d from defecting while the
    // opponent plays strategy s.
    Estimate defect_gain[2][2];
    // fee_saving[d]: fee(defect, defect) - fee(coordinate, coordinate).
    Estimate fee_saving[2];
    bool dilemma_present = false;  // defection dominant and mutual coordination cheaper in fees
};

// 2x2 payoff table for the first two developers in the roster under the
// silenced fee policy. Throws "too-few-developers" / "invalid-policy".
DilemmaResult dilemma_matrix(const SimConfig& config,
                             const AgentPolicy& coordinate = underreport_policy(1));

// Smallest payout scale in `scales` (ascending) at which honest play beats
// `deviation` in measured net utility; nullopt if none does.
std::optional<double> min_scale_for_honest_dominance(SimConfig config,
                                                     std::span<const double> scales,
                                                     const AgentPolicy& deviation);

struct FrontierPoint {
    int honest_peers = 0;
    Estimate gap;  // payout(honest) - payout(deviation) for the test agent
};

// Measured honest-share frontier: payout gap of honest vs `deviation` as the
// number of honest peers grows. The roster is rebuilt as test agent + peers.
std::vector<FrontierPoint> honest_share_frontier(SimConfig config, std::span<const int> peer_counts,
                                                 const AgentPolicy& deviation);

}  // namespace riskmech
