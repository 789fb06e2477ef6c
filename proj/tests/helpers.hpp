#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "riskmech/survey.hpp"

namespace riskmech::testing {

inline std::vector<Bucket> two_buckets() {
    return {Bucket{0.0, 0.5, 0.25}, Bucket{0.5, 1.0, 0.75}};
}

// The worked three-respondent example used across the suites: endorsements
// (A, A, B), predictions (0.7,0.3), (0.6,0.4), (0.5,0.5), alpha = 1.
inline SurveyRound example_round() {
    SurveyRound round;
    round.alpha = 1.0;
    round.payout_scale = 1000.0;
    round.interval_label = "2030";

    Question q;
    q.id = "q1";
    q.prompt = "chance of a large-scale outage";
    q.scenario_id = "outage";
    q.compute_tier = 0;
    q.time_frame_years = 10.0;
    q.buckets = two_buckets();
    round.questions.push_back(q);

    round.respondents = {
        Respondent{"r1", Role::developer, 0},
        Respondent{"r2", Role::independent_expert, 0},
        Respondent{"r3", Role::independent_expert, 0},
    };
    round.responses = {
        Response{"r1", "q1", 0, {0.7, 0.3}},
        Response{"r2", "q1", 0, {0.6, 0.4}},
        Response{"r3", "q1", 1, {0.5, 0.5}},
    };
    return round;
}

// Uniformly random complete round; predictions drawn from a Dirichlet(1,..,1)
// via exponentials. Independent of the library's counter-based generator.
inline SurveyRound random_round(std::mt19937_64& rng, int n, int m, int questions,
                                double alpha = 1.0) {
    SurveyRound round;
    round.alpha = alpha;
    round.payout_scale = 1.0;
    round.interval_label = "random";

    std::vector<Bucket> buckets;
    for (int k = 0; k < m; ++k) {
        const double lo = static_cast<double>(k) / m;
        const double hi = static_cast<double>(k + 1) / m;
        buckets.push_back(Bucket{lo, hi, (lo + hi) / 2.0});
    }

    for (int q = 0; q < questions; ++q) {
        Question question;
        question.id = "q" + std::to_string(q);
        question.scenario_id = "s";
        question.compute_tier = q;
        question.buckets = buckets;
        round.questions.push_back(std::move(question));
    }

    std::uniform_int_distribution<int> endorse(0, m - 1);
    std::exponential_distribution<double> expo(1.0);
    for (int i = 0; i < n; ++i)
        round.respondents.push_back(
            Respondent{"r" + std::to_string(i), Role::independent_expert, 0});

    for (int q = 0; q < questions; ++q) {
        for (int i = 0; i < n; ++i) {
            Response r;
            r.respondent_id = "r" + std::to_string(i);
            r.question_id = "q" + std::to_string(q);
            r.endorsement = endorse(rng);
            double sum = 0.0;
            r.prediction.resize(static_cast<std::size_t>(m));
            for (double& p : r.prediction) {
                p = expo(rng);
                sum += p;
            }
            for (double& p : r.prediction) p /= sum;
            round.responses.push_back(std::move(r));
        }
    }
    return round;
}

// Independent naive rescore of a complete round: plain counting, pow-based
// geometric means, textbook formulas. Deliberately avoids the library's
// log-space path so the two implementations can cross-check each other.
struct NaiveScore {
    std::string respondent_id, question_id;
    double information, prediction, total;
};

inline std::vector<NaiveScore> naive_score_round(const SurveyRound& round, double eps = 1e-6) {
    std::vector<NaiveScore> out;
    for (const Question& q : round.questions) {
        const std::size_t m = q.buckets.size();

        std::vector<const Response*> rs;
        for (const Respondent& person : round.respondents)
            for (const Response& r : round.responses)
                if (r.respondent_id == person.id && r.question_id == q.id) rs.push_back(&r);
        const double n = static_cast<double>(rs.size());

        std::vector<double> xbar(m, 0.0);
        for (const Response* r : rs) xbar[static_cast<std::size_t>(r->endorsement)] += 1.0 / n;

        std::vector<std::vector<double>> clamped;
        for (const Response* r : rs) {
            std::vector<double> y = r->prediction;
            bool moved = false;
            double sum = 0.0;
            for (double& v : y) {
                double c = v;
                if (c < eps) c = eps;
                if (c > 1.0 - eps) c = 1.0 - eps;
                if (c != v) moved = true;
                v = c;
                sum += c;
            }
            if (moved || std::abs(sum - 1.0) > 1e-12)
                for (double& v : y) v /= sum;
            clamped.push_back(std::move(y));
        }

        std::vector<double> ybar(m, 1.0);
        for (const auto& y : clamped)
            for (std::size_t k = 0; k < m; ++k) ybar[k] *= y[k];
        for (std::size_t k = 0; k < m; ++k) ybar[k] = std::pow(ybar[k], 1.0 / n);

        for (std::size_t i = 0; i < rs.size(); ++i) {
            const auto k = static_cast<std::size_t>(rs[i]->endorsement);
            NaiveScore score;
            score.respondent_id = rs[i]->respondent_id;
            score.question_id = q.id;
            score.information = std::log(xbar[k] / ybar[k]);
            double pred = 0.0;
            for (std::size_t b = 0; b < m; ++b)
                if (xbar[b] > 0.0) pred += xbar[b] * std::log(clamped[i][b] / xbar[b]);
            score.prediction = round.alpha * pred;
            score.total = score.information + score.prediction;
            out.push_back(std::move(score));
        }
    }
    return out;
}

}  // namespace riskmech::testing
