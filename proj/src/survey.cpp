#include "riskmech/survey.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace riskmech {

std::string to_string(Role role) {
    switch (role) {
        case Role::developer: return "developer";
        case Role::independent_expert: return "independent_expert";
        case Role::insurer: return "insurer";
        case Role::agency: return "agency";
    }
    fail("invalid-role", "unknown role value");
}

Role role_from_string(const std::string& name) {
    if (name == "developer") return Role::developer;
    if (name == "independent_expert") return Role::independent_expert;
    if (name == "insurer") return Role::insurer;
    if (name == "agency") return Role::agency;
    fail("invalid-role", "unknown role '" + name + "'");
}

void validate_buckets(const std::vector<Bucket>& buckets) {
    if (buckets.size() < 2) fail("invalid-buckets", "need at least 2 buckets");
    if (buckets.front().lo != 0.0) fail("invalid-buckets", "first bucket must start at 0");
    if (buckets.back().hi != 1.0) fail("invalid-buckets", "last bucket must end at 1");
    for (std::size_t k = 0; k < buckets.size(); ++k) {
        const Bucket& b = buckets[k];
        if (!(b.lo < b.hi)) fail("invalid-buckets", "bucket interval must be non-empty");
        if (!(b.midpoint >= b.lo && b.midpoint < b.hi))
            fail("invalid-buckets", "midpoint must lie inside [lo, hi)");
        if (k + 1 < buckets.size() && buckets[k + 1].lo != b.hi)
            fail("invalid-buckets", "buckets must tile [0, 1] without gaps");
    }
}

namespace {

const Question& find_question(const SurveyRound& round, const std::string& question_id) {
    for (const Question& q : round.questions)
        if (q.id == question_id) return q;
    fail("unknown-question", "no question with id '" + question_id + "'");
}

// One response per (non-excluded) respondent, in roster order. Throws
// "incomplete-round" when anyone has not answered.
std::vector<const Response*> complete_responses(const SurveyRound& round,
                                                const std::string& question_id,
                                                const std::optional<std::string>& exclude) {
    std::unordered_map<std::string, const Response*> by_respondent;
    for (const Response& r : round.responses)
        if (r.question_id == question_id) by_respondent.emplace(r.respondent_id, &r);

    std::vector<const Response*> out;
    out.reserve(round.respondents.size());
    for (const Respondent& person : round.respondents) {
        if (exclude && person.id == *exclude) continue;
        auto it = by_respondent.find(person.id);
        if (it == by_respondent.end())
            fail("incomplete-round",
                 "respondent '" + person.id + "' has no response to '" + question_id + "'");
        out.push_back(it->second);
    }
    return out;
}

}  // namespace

void validate_round(const SurveyRound& round) {
    if (!(round.alpha >= 0.0) || !std::isfinite(round.alpha))
        fail("invalid-round", "alpha must be >= 0");
    if (!(round.payout_scale >= 0.0) || !std::isfinite(round.payout_scale))
        fail("invalid-round", "payout_scale must be >= 0");

    std::unordered_map<std::string, std::size_t> question_index;
    for (const Question& q : round.questions) {
        if (!question_index.emplace(q.id, question_index.size()).second)
            fail("duplicate-question", "question id '" + q.id + "' appears twice");
        validate_buckets(q.buckets);
    }

    std::unordered_set<std::string> respondent_ids;
    for (const Respondent& person : round.respondents) {
        if (!respondent_ids.insert(person.id).second)
            fail("duplicate-respondent", "respondent id '" + person.id + "' appears twice");
        if (person.participation_history < 0)
            fail("invalid-round", "participation_history must be >= 0");
    }

    std::unordered_set<std::string> seen_pairs;
    for (const Response& r : round.responses) {
        if (!respondent_ids.count(r.respondent_id))
            fail("unknown-respondent", "response from unknown respondent '" + r.respondent_id + "'");
        auto qit = question_index.find(r.question_id);
        if (qit == question_index.end())
            fail("unknown-question", "response to unknown question '" + r.question_id + "'");
        const Question& q = round.questions[qit->second];
        const std::size_t m = q.buckets.size();
        if (r.endorsement < 0 || static_cast<std::size_t>(r.endorsement) >= m)
            fail("invalid-endorsement", "endorsement index out of range for '" + q.id + "'");
        if (r.prediction.size() != m)
            fail("invalid-prediction", "prediction length must match bucket count");
        double sum = 0.0;
        for (double p : r.prediction) {
            if (!std::isfinite(p) || p < 0.0 || p > 1.0)
                fail("invalid-prediction", "prediction entries must lie in [0, 1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            fail("invalid-prediction", "prediction must sum to 1 within 1e-9");
        if (!seen_pairs.insert(r.respondent_id + "\x1f" + r.question_id).second)
            fail("duplicate-response",
                 "respondent '" + r.respondent_id + "' answered '" + r.question_id + "' twice");
    }
}

std::vector<double> clamp_prediction(std::vector<double> prediction, double eps) {
    bool moved = false;
    double sum = 0.0;
    for (double& p : prediction) {
        const double clamped = std::min(std::max(p, eps), 1.0 - eps);
        if (clamped != p) {
            p = clamped;
            moved = true;
        }
        sum += p;
    }
    if (moved || std::abs(sum - 1.0) > 1e-12)
        for (double& p : prediction) p /= sum;
    return prediction;
}

std::vector<double> endorsement_frequencies(const SurveyRound& round,
                                            const std::string& question_id, double delta,
                                            const std::optional<std::string>& exclude) {
    if (delta < 0.0) fail("invalid-delta", "pseudo-count must be >= 0");
    const Question& q = find_question(round, question_id);
    const auto responses = complete_responses(round, question_id, exclude);
    const std::size_t n = responses.size();
    if (n < 2) fail("too-few-respondents", "need at least 2 respondents for '" + question_id + "'");

    const std::size_t m = q.buckets.size();
    std::vector<double> freq(m, 0.0);
    for (const Response* r : responses) freq[static_cast<std::size_t>(r->endorsement)] += 1.0;
    const double denom = static_cast<double>(n) + delta * static_cast<double>(m);
    for (double& f : freq) f = (f + delta) / denom;
    return freq;
}

std::vector<double> prediction_geomeans(const SurveyRound& round, const std::string& question_id,
                                        double eps) {
    const Question& q = find_question(round, question_id);
    const auto responses = complete_responses(round, question_id, std::nullopt);
    const std::size_t n = responses.size();
    if (n < 2) fail("too-few-respondents", "need at least 2 respondents for '" + question_id + "'");

    std::vector<double> log_sum(q.buckets.size(), 0.0);
    for (const Response* r : responses) {
        const std::vector<double> y = clamp_prediction(r->prediction, eps);
        for (std::size_t k = 0; k < y.size(); ++k) log_sum[k] += std::log(y[k]);
    }
    std::vector<double> geo(log_sum.size());
    for (std::size_t k = 0; k < geo.size(); ++k)
        geo[k] = std::exp(log_sum[k] / static_cast<double>(n));
    return geo;
}

double information_score(const Response& response, std::span<const double> xbar,
                         std::span<const double> ybar) {
    if (xbar.size() != ybar.size() || xbar.empty())
        fail("invalid-frequencies", "frequency vectors must be non-empty and equal-sized");
    const auto k = static_cast<std::size_t>(response.endorsement);
    if (k >= xbar.size()) fail("invalid-endorsement", "endorsement index out of range");
    if (!(xbar[k] > 0.0) || !(ybar[k] > 0.0))
        fail("invalid-frequencies", "endorsed bucket frequency must be positive");
    return std::log(xbar[k]) - std::log(ybar[k]);
}

double prediction_score(const Response& response, std::span<const double> xbar, double alpha,
                        double eps) {
    if (alpha < 0.0) fail("invalid-round", "alpha must be >= 0");
    if (response.prediction.size() != xbar.size())
        fail("invalid-prediction", "prediction length must match frequency vector");
    const std::vector<double> y = clamp_prediction(response.prediction, eps);
    double score = 0.0;
    for (std::size_t k = 0; k < xbar.size(); ++k) {
        if (xbar[k] == 0.0) continue;  // 0 * ln(...) convention
        if (xbar[k] < 0.0 || !(y[k] > 0.0))
            fail("invalid-frequencies", "frequencies must be non-negative, predictions positive");
        score += xbar[k] * (std::log(y[k]) - std::log(xbar[k]));
    }
    return alpha * score;
}

std::vector<BtsScore> score_round(const SurveyRound& round, double delta, double eps) {
    validate_round(round);
    std::vector<BtsScore> scores;
    scores.reserve(round.questions.size() * round.respondents.size());
    for (const Question& q : round.questions) {
        const std::vector<double> xbar = endorsement_frequencies(round, q.id, delta);
        const std::vector<double> ybar = prediction_geomeans(round, q.id, eps);
        const auto responses = complete_responses(round, q.id, std::nullopt);
        for (const Response* r : responses) {
            BtsScore s;
            s.respondent_id = r->respondent_id;
            s.question_id = q.id;
            s.information_score = information_score(*r, xbar, ybar);
            s.prediction_score = prediction_score(*r, xbar, round.alpha, eps);
            s.total = s.information_score + s.prediction_score;
            scores.push_back(std::move(s));
        }
    }
    return scores;
}

std::map<std::string, Money> payouts(const SurveyRound& round, const std::vector<BtsScore>& scores,
                                     double payout_scale, const PayoutOptions& options) {
    if (payout_scale < 0.0 || !std::isfinite(payout_scale))
        fail("invalid-round", "payout_scale must be >= 0");

    std::unordered_map<std::string, Role> roles;
    for (const Respondent& person : round.respondents) roles.emplace(person.id, person.role);

    std::map<std::string, double> totals;
    for (const BtsScore& s : scores) totals[s.respondent_id] += s.total;

    std::map<std::string, Money> out;
    for (const auto& [id, total] : totals) {
        if (options.roles) {
            auto it = roles.find(id);
            if (it == roles.end()) continue;
            const auto& wanted = *options.roles;
            if (std::find(wanted.begin(), wanted.end(), it->second) == wanted.end()) continue;
        }
        double value = payout_scale * total;
        if (options.floor) value = std::max(value, *options.floor);
        out.emplace(id, Money::from_value(value));
    }
    return out;
}

}  // namespace riskmech
