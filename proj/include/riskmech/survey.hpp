#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskmech/errors.hpp"
#include "riskmech/money.hpp"

namespace riskmech {

// Survey data model and Bayesian Truth Serum scoring.
//
// A response endorses one probability bucket and predicts how the whole
// respondent pool will distribute over buckets. Scoring rewards answers that
// turn out more common than the pool predicted (information score) and
// penalizes inaccurate predictions of the pool (prediction score):
//
//   information = ln(xbar_k / ybar_k)              for the endorsed bucket k
//   prediction  = alpha * sum_k xbar_k * ln(y_k / xbar_k)
//
// with xbar the empirical endorsement frequencies and ybar the geometric
// means of the submitted predictions. At alpha=1 (and no smoothing) the
// scores of a complete question sum to zero.

// One answer option: the probability interval [lo, hi) it stands for and the
// representative point used when turning endorsements into risk numbers.
struct Bucket {
    double lo = 0.0;
    double hi = 0.0;
    double midpoint = 0.0;
};

enum class Role { developer, independent_expert, insurer, agency };

std::string to_string(Role role);
Role role_from_string(const std::string& name);

struct Question {
    std::string id;
    std::string prompt;
    std::string scenario_id;
    int compute_tier = 0;  // index into the fee schedule's ordered tiers
    double time_frame_years = 0.0;
    std::vector<Bucket> buckets;
};

struct Respondent {
    std::string id;
    Role role = Role::independent_expert;
    int participation_history = 0;  // consecutive prior surveys participated in
};

struct Response {
    std::string respondent_id;
    std::string question_id;
    int endorsement = 0;             // bucket index
    std::vector<double> prediction;  // predicted pool distribution, one entry per bucket
};

struct SurveyRound {
    std::vector<Question> questions;
    std::vector<Respondent> respondents;
    std::vector<Response> responses;
    double alpha = 1.0;         // prediction-score weight
    double payout_scale = 1.0;  // money per score unit
    std::string interval_label;
};

struct BtsScore {
    std::string respondent_id;
    std::string question_id;
    double information_score = 0.0;
    double prediction_score = 0.0;
    double total = 0.0;  // information_score + prediction_score
};

inline constexpr double kPredictionClampEps = 1e-6;

// Structural checks: bucket layout, unique ids, well-formed predictions, at
// most one response per (respondent, question). Throws MechError.
void validate_buckets(const std::vector<Bucket>& buckets);
void validate_round(const SurveyRound& round);

// Clamp entries to [eps, 1-eps]; renormalize only when the clamp moved mass
// or the input was visibly unnormalized, so a prediction already equal to the
// empirical frequencies passes through bit-identical.
std::vector<double> clamp_prediction(std::vector<double> prediction,
                                     double eps = kPredictionClampEps);

// Empirical endorsement frequencies xbar_k = (count_k + delta) / (n + delta*m)
// over the round's respondents, optionally excluding one of them. Requires a
// complete question and n >= 2 after exclusion.
std::vector<double> endorsement_frequencies(const SurveyRound& round,
                                            const std::string& question_id, double delta = 0.0,
                                            const std::optional<std::string>& exclude = {});

// Geometric means ybar_k of the clamped predictions, computed in log space.
std::vector<double> prediction_geomeans(const SurveyRound& round, const std::string& question_id,
                                        double eps = kPredictionClampEps);

// ln(xbar_k / ybar_k) for the endorsed bucket; positive when the answer is
// more common than the pool collectively predicted.
double information_score(const Response& response, std::span<const double> xbar,
                         std::span<const double> ybar);

// alpha * sum_k xbar_k * ln(y_k / xbar_k); <= 0, and exactly 0 when the
// clamped prediction equals xbar componentwise.
double prediction_score(const Response& response, std::span<const double> xbar, double alpha,
                        double eps = kPredictionClampEps);

// Score every (respondent, question) pair of a complete round. Pure and
// deterministic; results are ordered question-major in round order.
std::vector<BtsScore> score_round(const SurveyRound& round, double delta = 0.0,
                                  double eps = kPredictionClampEps);

struct PayoutOptions {
    std::optional<double> floor;            // e.g. 0.0 to forbid negative payouts
    std::optional<std::vector<Role>> roles; // restrict payouts to these roles
};

// payout = payout_scale * (sum of total scores over questions), per
// respondent, rounded half-even to the minor money unit.
std::map<std::string, Money> payouts(const SurveyRound& round,
                                     const std::vector<BtsScore>& scores, double payout_scale,
                                     const PayoutOptions& options = {});

}  // namespace riskmech
