#include "riskmech/sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "riskmech/rng.hpp"

namespace riskmech {

void validate_model(const WorldModel& model) {
    const std::size_t n_states = model.states.size();
    if (n_states == 0) fail("invalid-model", "world model needs at least one state");
    if (model.prior.size() != n_states || model.signal_likelihoods.size() != n_states)
        fail("invalid-model", "prior and likelihoods must match the state count");

    double prior_sum = 0.0;
    for (double p : model.prior) {
        if (!(p >= 0.0) || !std::isfinite(p)) fail("invalid-model", "prior entries must be >= 0");
        prior_sum += p;
    }
    if (std::abs(prior_sum - 1.0) > 1e-12) fail("invalid-model", "prior must sum to 1");

    const std::size_t m = model.signal_likelihoods.front().size();
    if (m < 2) fail("invalid-model", "need at least two signal buckets");
    for (const auto& row : model.signal_likelihoods) {
        if (row.size() != m) fail("invalid-model", "likelihood rows must be equal-sized");
        double row_sum = 0.0;
        for (double p : row) {
            if (!(p >= 0.0) || !std::isfinite(p))
                fail("invalid-model", "likelihood entries must be >= 0");
            row_sum += p;
        }
        if (std::abs(row_sum - 1.0) > 1e-12) fail("invalid-model", "likelihood rows must sum to 1");
    }
}

AgentPolicy honest_policy() { return AgentPolicy{}; }

AgentPolicy underreport_policy(int shift) {
    AgentPolicy p;
    p.kind = AgentPolicy::Kind::underreport;
    p.shift = shift;
    return p;
}

AgentPolicy fixed_policy(int bucket) {
    AgentPolicy p;
    p.kind = AgentPolicy::Kind::fixed;
    p.bucket = bucket;
    return p;
}

AgentPolicy flipped_policy() {
    AgentPolicy p;
    p.kind = AgentPolicy::Kind::flipped;
    return p;
}

AgentPolicy colluder_policy(std::string coalition_id, int bucket) {
    AgentPolicy p;
    p.kind = AgentPolicy::Kind::colluder;
    p.coalition_id = std::move(coalition_id);
    p.bucket = bucket;
    p.prediction_rule = AgentPolicy::PredictionRule::fabricated;
    return p;
}

QuestionTemplate default_binary_template() {
    QuestionTemplate t;
    t.buckets = {Bucket{0.0, 0.1, 0.01}, Bucket{0.1, 1.0, 0.5}};
    t.scenario_id = "scenario";
    return t;
}

std::vector<double> posterior_predictive(int signal, const WorldModel& model) {
    validate_model(model);
    const std::size_t m = model.signal_likelihoods.front().size();
    if (signal < 0 || static_cast<std::size_t>(signal) >= m)
        fail("impossible-signal", "signal index out of range");

    double marginal = 0.0;
    for (std::size_t s = 0; s < model.states.size(); ++s)
        marginal += model.prior[s] * model.signal_likelihoods[s][signal];
    if (marginal <= 0.0) fail("impossible-signal", "signal has zero marginal probability");

    std::vector<double> predictive(m, 0.0);
    for (std::size_t s = 0; s < model.states.size(); ++s) {
        const double posterior = model.prior[s] * model.signal_likelihoods[s][signal] / marginal;
        for (std::size_t k = 0; k < m; ++k)
            predictive[k] += posterior * model.signal_likelihoods[s][k];
    }
    return predictive;
}

namespace {

// Fabricated prediction a colluder uses: most of the mass on the agreed
// bucket, the rest spread evenly.
std::vector<double> concentrated_prediction(std::size_t buckets, int target) {
    constexpr double kMass = 0.9;
    std::vector<double> v(buckets, (1.0 - kMass) / static_cast<double>(buckets - 1));
    v[static_cast<std::size_t>(target)] = kMass;
    return v;
}

int endorsement_for(const AgentPolicy& policy, int signal, int buckets) {
    switch (policy.kind) {
        case AgentPolicy::Kind::honest: return signal;
        case AgentPolicy::Kind::underreport:
            return std::max(signal - std::max(policy.shift, 0), 0);
        case AgentPolicy::Kind::fixed: return policy.bucket;
        case AgentPolicy::Kind::flipped: return buckets - 1 - signal;
        case AgentPolicy::Kind::colluder: return policy.bucket;
    }
    fail("invalid-policy", "unknown policy kind");
}

std::vector<double> prediction_for(const AgentPolicy& policy, int signal, int endorsement,
                                   const WorldModel& model, std::size_t buckets) {
    if (policy.prediction_rule == AgentPolicy::PredictionRule::bayes)
        return posterior_predictive(signal, model);
    if (!policy.fabricated.empty()) {
        if (policy.fabricated.size() != buckets)
            fail("invalid-policy", "fabricated prediction length must match bucket count");
        return policy.fabricated;
    }
    if (policy.kind == AgentPolicy::Kind::colluder)
        return concentrated_prediction(buckets, endorsement);
    return std::vector<double>(buckets, 1.0 / static_cast<double>(buckets));
}

// Deterministic, order-independent reduction.
double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.subspan(0, half)) + pairwise_sum(values.subspan(half));
}

Estimate estimate_from(const std::vector<double>& samples) {
    Estimate e;
    e.replicates = static_cast<int>(samples.size());
    if (samples.empty()) return e;
    e.mean = pairwise_sum(samples) / static_cast<double>(samples.size());
    if (samples.size() < 2) return e;
    std::vector<double> sq(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double d = samples[i] - e.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(samples.size() - 1);
    e.half_width = 1.959963984540054 * std::sqrt(var / static_cast<double>(samples.size()));
    return e;
}

int bucket_count(const QuestionTemplate& question) {
    return static_cast<int>(question.buckets.size());
}

std::uint64_t replicate_seed(std::uint64_t master_seed, int replicate) {
    return counter_mix(master_seed, kReplicateDomain, static_cast<std::uint64_t>(replicate));
}

double test_agent_payout(const std::vector<BtsScore>& scores, const std::string& agent_id,
                         double payout_scale) {
    double total = 0.0;
    for (const BtsScore& s : scores)
        if (s.respondent_id == agent_id) total += s.total;
    return payout_scale * total;
}

const SimAgent& checked_test_agent(const SimConfig& config) {
    if (config.roster.empty()) fail("invalid-model", "roster is empty");
    if (config.test_agent < 0 || static_cast<std::size_t>(config.test_agent) >= config.roster.size())
        fail("invalid-model", "test_agent index out of range");
    return config.roster[static_cast<std::size_t>(config.test_agent)];
}

double replicate_fee(const SimConfig& config, const SurveyRound& round,
                     const std::string& developer_id) {
    const FeeContext& ctx = *config.fee;
    const FeeSchedule schedule = publish_schedule(round, ctx.tiers, ctx.disutilities,
                                                  ctx.threshold, ctx.discount,
                                                  /*allow_extrapolation=*/false, config.delta);
    return individualized_fee(developer_id, ctx.developer_ec, schedule, round, ctx.policy,
                              config.delta);
}

}  // namespace

SurveyRound sample_round(const WorldModel& model, const std::vector<SimAgent>& roster,
                         std::uint64_t seed, int questions, const QuestionTemplate& question) {
    validate_model(model);
    validate_buckets(question.buckets);
    if (questions < 1) fail("invalid-model", "need at least one question");
    const std::size_t m = model.signal_likelihoods.front().size();
    if (m != question.buckets.size())
        fail("invalid-model", "likelihood columns must match the question's bucket count");

    SurveyRound round;
    round.interval_label = "sim";
    for (int q = 0; q < questions; ++q) {
        Question qu;
        qu.id = "q" + std::to_string(q);
        qu.prompt = "simulated";
        qu.scenario_id = question.scenario_id;
        qu.compute_tier = q;
        qu.time_frame_years = 1.0;
        qu.buckets = question.buckets;
        round.questions.push_back(std::move(qu));
    }
    for (const SimAgent& agent : roster)
        round.respondents.push_back(Respondent{agent.id, agent.role, agent.participation_history});

    for (int q = 0; q < questions; ++q) {
        const auto state = categorical(model.prior,
                                       counter_uniform(seed, 0, static_cast<std::uint64_t>(q)));
        for (std::size_t i = 0; i < roster.size(); ++i) {
            const auto signal = static_cast<int>(
                categorical(model.signal_likelihoods[state],
                            counter_uniform(seed, i + 1, static_cast<std::uint64_t>(q))));
            const SimAgent& agent = roster[i];
            Response r;
            r.respondent_id = agent.id;
            r.question_id = round.questions[static_cast<std::size_t>(q)].id;
            r.endorsement = endorsement_for(agent.policy, signal, static_cast<int>(m));
            r.prediction = prediction_for(agent.policy, signal, r.endorsement, model, m);
            round.responses.push_back(std::move(r));
        }
    }
    return round;
}

Estimate expected_payout(const AgentPolicy& policy, const SimConfig& config) {
    if (config.replicates < 1) fail("invalid-model", "replicates must be >= 1");
    const SimAgent& test = checked_test_agent(config);

    std::vector<SimAgent> roster = config.roster;
    roster[static_cast<std::size_t>(config.test_agent)].policy = policy;

    std::vector<double> samples(static_cast<std::size_t>(config.replicates));
    for (int r = 0; r < config.replicates; ++r) {
        SurveyRound round = sample_round(config.model, roster, replicate_seed(config.master_seed, r),
                                         config.questions, config.question);
        round.alpha = config.alpha;
        const std::vector<BtsScore> scores = score_round(round, config.delta);
        samples[static_cast<std::size_t>(r)] =
            test_agent_payout(scores, test.id, config.payout_scale);
    }
    return estimate_from(samples);
}

namespace {

std::vector<double> replicate_values(const AgentPolicy& policy, const SimConfig& config,
                                     bool net_of_fee) {
    const SimAgent& test = checked_test_agent(config);
    if (net_of_fee && !config.fee) fail("invalid-model", "net utility requires a fee context");

    std::vector<SimAgent> roster = config.roster;
    roster[static_cast<std::size_t>(config.test_agent)].policy = policy;

    std::vector<double> samples(static_cast<std::size_t>(config.replicates));
    for (int r = 0; r < config.replicates; ++r) {
        SurveyRound round = sample_round(config.model, roster, replicate_seed(config.master_seed, r),
                                         config.questions, config.question);
        round.alpha = config.alpha;
        const std::vector<BtsScore> scores = score_round(round, config.delta);
        double value = test_agent_payout(scores, test.id, config.payout_scale);
        if (net_of_fee) {
            if (!config.fee->developer_receives_payout) value = 0.0;
            value -= replicate_fee(config, round, test.id);
        }
        samples[static_cast<std::size_t>(r)] = value;
    }
    return samples;
}

Estimate paired_gap(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    return estimate_from(diff);
}

}  // namespace

Estimate payout_gap(const AgentPolicy& a, const AgentPolicy& b, const SimConfig& config) {
    if (config.replicates < 1) fail("invalid-model", "replicates must be >= 1");
    return paired_gap(replicate_values(a, config, false), replicate_values(b, config, false));
}

Estimate developer_net_utility(const AgentPolicy& policy, const SimConfig& config) {
    if (config.replicates < 1) fail("invalid-model", "replicates must be >= 1");
    return estimate_from(replicate_values(policy, config, true));
}

Estimate net_utility_gap(const AgentPolicy& a, const AgentPolicy& b, const SimConfig& config) {
    if (config.replicates < 1) fail("invalid-model", "replicates must be >= 1");
    return paired_gap(replicate_values(a, config, true), replicate_values(b, config, true));
}

std::vector<std::pair<std::string, AgentPolicy>> default_deviation_catalog(int buckets) {
    std::vector<std::pair<std::string, AgentPolicy>> catalog;
    for (int k = 0; k < buckets; ++k)
        catalog.emplace_back("fixed-" + std::to_string(k), fixed_policy(k));
    catalog.emplace_back("flipped", flipped_policy());

    AgentPolicy uniform = honest_policy();
    uniform.prediction_rule = AgentPolicy::PredictionRule::fabricated;
    uniform.fabricated.assign(static_cast<std::size_t>(buckets),
                              1.0 / static_cast<double>(buckets));
    catalog.emplace_back("uniform-prediction", uniform);
    return catalog;
}

ComparisonReport compare_policies(const SimConfig& config,
                                  const std::vector<std::pair<std::string, AgentPolicy>>& catalog,
                                  PolicyTraces* traces) {
    if (config.replicates < 1) fail("invalid-model", "replicates must be >= 1");
    const std::vector<double> honest = replicate_values(honest_policy(), config, false);

    ComparisonReport report;
    report.honest = estimate_from(honest);
    report.honest_dominates = true;
    if (traces) traces->emplace_back("honest", honest);
    for (const auto& [name, policy] : catalog) {
        const std::vector<double> samples = replicate_values(policy, config, false);
        DeviationReport dev;
        dev.name = name;
        dev.payout = estimate_from(samples);
        dev.gap = paired_gap(honest, samples);
        if (!(dev.gap.mean > dev.gap.half_width)) report.honest_dominates = false;
        if (traces) traces->emplace_back(name, samples);
        report.deviations.push_back(std::move(dev));
    }
    return report;
}

DilemmaResult dilemma_matrix(const SimConfig& config, const AgentPolicy& coordinate) {
    if (config.replicates < 1) fail("invalid-model", "replicates must be >= 1");
    if (!config.fee) fail("invalid-model", "dilemma analysis requires a fee context");
    if (config.fee->policy != FeePolicy::silenced)
        fail("invalid-policy", "dilemma analysis requires the silenced fee policy");

    std::vector<std::size_t> developers;
    for (std::size_t i = 0; i < config.roster.size() && developers.size() < 2; ++i)
        if (config.roster[i].role == Role::developer) developers.push_back(i);
    if (developers.size() < 2)
        fail("too-few-developers", "dilemma analysis needs two developers in the roster");

    const AgentPolicy strategies[2] = {coordinate, honest_policy()};
    const auto reps = static_cast<std::size_t>(config.replicates);

    // net[i][j][d][r], fee[i][j][d][r]
    std::vector<double> net[2][2][2], fee[2][2][2];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int d = 0; d < 2; ++d) {
                net[i][j][d].resize(reps);
                fee[i][j][d].resize(reps);
            }

    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            std::vector<SimAgent> roster = config.roster;
            roster[developers[0]].policy = strategies[i];
            roster[developers[1]].policy = strategies[j];
            for (int r = 0; r < config.replicates; ++r) {
                SurveyRound round =
                    sample_round(config.model, roster, replicate_seed(config.master_seed, r),
                                 config.questions, config.question);
                round.alpha = config.alpha;
                const std::vector<BtsScore> scores = score_round(round, config.delta);
                for (int d = 0; d < 2; ++d) {
                    const std::string& id = config.roster[developers[static_cast<std::size_t>(d)]].id;
                    const double f = replicate_fee(config, round, id);
                    double payout = config.fee->developer_receives_payout
                                        ? test_agent_payout(scores, id, config.payout_scale)
                                        : 0.0;
                    fee[i][j][d][static_cast<std::size_t>(r)] = f;
                    net[i][j][d][static_cast<std::size_t>(r)] = payout - f;
                }
            }
        }
    }

    DilemmaResult result;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int d = 0; d < 2; ++d) {
                result.cells[i][j].net[d] = estimate_from(net[i][j][d]);
                result.cells[i][j].fee[d] = estimate_from(fee[i][j][d]);
            }

    // Developer 0 defects: row moves from coordinate (0) to defect (1).
    result.defect_gain[0][0] = paired_gap(net[1][0][0], net[0][0][0]);
    result.defect_gain[0][1] = paired_gap(net[1][1][0], net[0][1][0]);
    result.defect_gain[1][0] = paired_gap(net[0][1][1], net[0][0][1]);
    result.defect_gain[1][1] = paired_gap(net[1][1][1], net[1][0][1]);
    result.fee_saving[0] = paired_gap(fee[1][1][0], fee[0][0][0]);
    result.fee_saving[1] = paired_gap(fee[1][1][1], fee[0][0][1]);

    bool present = true;
    for (int d = 0; d < 2; ++d) {
        for (int s = 0; s < 2; ++s) {
            const Estimate& g = result.defect_gain[d][s];
            if (!(g.mean > g.half_width)) present = false;
        }
        const Estimate& f = result.fee_saving[d];
        if (!(f.mean > f.half_width)) present = false;
    }
    result.dilemma_present = present;
    return result;
}

std::optional<double> min_scale_for_honest_dominance(SimConfig config,
                                                     std::span<const double> scales,
                                                     const AgentPolicy& deviation) {
    for (double scale : scales) {
        config.payout_scale = scale;
        const Estimate gap = net_utility_gap(honest_policy(), deviation, config);
        if (gap.mean > 0.0) return scale;
    }
    return std::nullopt;
}

std::vector<FrontierPoint> honest_share_frontier(SimConfig config,
                                                 std::span<const int> peer_counts,
                                                 const AgentPolicy& deviation) {
    const SimAgent test = checked_test_agent(config);
    std::vector<FrontierPoint> frontier;
    for (int peers : peer_counts) {
        if (peers < 1) fail("invalid-model", "need at least one honest peer");
        std::vector<SimAgent> roster;
        roster.push_back(test);
        for (int i = 0; i < peers; ++i)
            roster.push_back(SimAgent{"peer" + std::to_string(i), Role::independent_expert, 0,
                                      honest_policy()});
        SimConfig c = config;
        c.roster = std::move(roster);
        c.test_agent = 0;
        frontier.push_back(FrontierPoint{peers, payout_gap(honest_policy(), deviation, c)});
    }
    return frontier;
}

}  // namespace riskmech
