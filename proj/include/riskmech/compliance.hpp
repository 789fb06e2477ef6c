#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "riskmech/money.hpp"
#include "riskmech/survey.hpp"

namespace riskmech {

// Collusion detection over survey rounds, fine/reward accounting, and the
// pre-survey polling bar. Detection only flags; money moves only on
// externally confirmed groups.

struct PenaltySchedule {
    Money collusion_fine;       // > 0
    Money whistleblower_reward; // > 0, strictly less than the fine
};

void validate_penalties(const PenaltySchedule& schedule);

struct RespondentFlag {
    std::vector<std::string> respondents;  // sorted
    double agreement = 0.0;                // endorsement agreement rate across questions
    double mean_l1 = 0.0;                  // mean L1 distance between prediction vectors
};

struct LedgerItem {
    std::string respondent_id;
    std::string kind;  // "collusion-fine" | "whistleblower-reward"
    Money delta;       // fines negative, rewards positive
};

struct ComplianceReport {
    std::vector<RespondentFlag> flagged_groups;
    std::vector<LedgerItem> ledger;
    std::map<std::string, Money> net;  // per respondent
};

// Pairs agreeing on endorsements in >= threshold of questions whose
// prediction vectors stay within mean L1 distance (1 - threshold) are linked;
// maximal linked groups are flagged. Requires a complete round with at least
// two questions ("insufficient-data" otherwise).
std::vector<RespondentFlag> detect_respondent_collusion(const SurveyRound& round,
                                                        double threshold);

// Debit every member of a confirmed group the collusion fine (once per
// person), credit every whistleblower the reward. A whistleblower inside a
// confirmed group gets both line items; `net` carries the sum.
ComplianceReport apply_penalties(const std::vector<std::vector<std::string>>& confirmed_groups,
                                 const std::vector<std::string>& whistleblowers,
                                 const PenaltySchedule& schedule);

struct PollEvent {
    std::string actor;
    std::string kind;       // "private-poll" is what the bar watches for
    std::int64_t timestamp; // seconds since epoch, UTC
};

struct PollViolation {
    std::string actor;
    std::int64_t timestamp;
};

// "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM:SS[Z]" -> seconds since epoch, UTC.
std::int64_t parse_iso8601_utc(const std::string& text);

// One "actor,kind,timestamp" record per line; blank lines ignored.
std::vector<PollEvent> parse_event_log(const std::string& text);

// Flags indemnified actors with a private-poll event inside the blackout
// window [survey - blackout_days, survey).
std::vector<PollViolation> check_pre_survey_poll_bar(std::span<const PollEvent> events,
                                                     std::span<const std::string> indemnified,
                                                     std::int64_t survey_date,
                                                     int blackout_days);

}  // namespace riskmech
