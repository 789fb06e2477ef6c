#include "riskmech/compliance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace riskmech {

void validate_penalties(const PenaltySchedule& schedule) {
    if (schedule.collusion_fine <= Money{})
        fail("invalid-penalty-schedule", "collusion fine must be positive");
    if (schedule.whistleblower_reward <= Money{})
        fail("invalid-penalty-schedule", "whistleblower reward must be positive");
    if (!(schedule.whistleblower_reward < schedule.collusion_fine))
        fail("invalid-penalty-schedule", "reward must be smaller than the fine");
}

std::vector<RespondentFlag> detect_respondent_collusion(const SurveyRound& round,
                                                        double threshold) {
    validate_round(round);
    if (round.questions.size() < 2)
        fail("insufficient-data", "collusion detection needs at least two questions");

    // responses[respondent][question]
    std::unordered_map<std::string, std::unordered_map<std::string, const Response*>> table;
    for (const Response& r : round.responses) table[r.respondent_id][r.question_id] = &r;
    for (const Respondent& person : round.respondents) {
        auto it = table.find(person.id);
        if (it == table.end() || it->second.size() != round.questions.size())
            fail("incomplete-round", "respondent '" + person.id + "' has unanswered questions");
    }

    const std::size_t n = round.respondents.size();
    const auto q_count = static_cast<double>(round.questions.size());

    std::vector<std::size_t> comp(n);
    for (std::size_t i = 0; i < n; ++i) comp[i] = i;
    const auto root = [&](std::size_t x) {
        while (comp[x] != x) x = comp[x] = comp[comp[x]];
        return x;
    };

    struct Edge {
        std::size_t i, j;
        double agreement, mean_l1;
    };
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row_i = table.at(round.respondents[i].id);
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& row_j = table.at(round.respondents[j].id);
            double agree = 0.0, l1 = 0.0;
            for (const Question& q : round.questions) {
                const Response* a = row_i.at(q.id);
                const Response* b = row_j.at(q.id);
                if (a->endorsement == b->endorsement) agree += 1.0;
                for (std::size_t k = 0; k < a->prediction.size(); ++k)
                    l1 += std::abs(a->prediction[k] - b->prediction[k]);
            }
            agree /= q_count;
            l1 /= q_count;
            if (agree >= threshold && l1 <= 1.0 - threshold) {
                edges.push_back(Edge{i, j, agree, l1});
                comp[root(i)] = root(j);
            }
        }
    }

    std::map<std::size_t, RespondentFlag> groups;
    std::map<std::size_t, int> edge_counts;
    for (const Edge& e : edges) {
        const std::size_t r = root(e.i);
        auto& flag = groups[r];
        flag.agreement += e.agreement;
        flag.mean_l1 += e.mean_l1;
        edge_counts[r] += 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = root(i);
        if (groups.count(r)) groups[r].respondents.push_back(round.respondents[i].id);
    }

    std::vector<RespondentFlag> flags;
    for (auto& [r, flag] : groups) {
        flag.agreement /= edge_counts.at(r);
        flag.mean_l1 /= edge_counts.at(r);
        std::sort(flag.respondents.begin(), flag.respondents.end());
        flags.push_back(std::move(flag));
    }
    std::sort(flags.begin(), flags.end(), [](const RespondentFlag& a, const RespondentFlag& b) {
        return a.respondents < b.respondents;
    });
    return flags;
}

ComplianceReport apply_penalties(const std::vector<std::vector<std::string>>& confirmed_groups,
                                 const std::vector<std::string>& whistleblowers,
                                 const PenaltySchedule& schedule) {
    validate_penalties(schedule);

    // One fine per confirmed person, regardless of how many groups name them.
    std::set<std::string> colluders;
    for (const auto& group : confirmed_groups) colluders.insert(group.begin(), group.end());
    std::set<std::string> rewarded(whistleblowers.begin(), whistleblowers.end());

    ComplianceReport report;
    for (const std::string& id : colluders) {
        report.ledger.push_back(LedgerItem{id, "collusion-fine", -schedule.collusion_fine});
        report.net[id] += -schedule.collusion_fine;
    }
    for (const std::string& id : rewarded) {
        report.ledger.push_back(LedgerItem{id, "whistleblower-reward", schedule.whistleblower_reward});
        report.net[id] += schedule.whistleblower_reward;
    }
    return report;
}

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool valid_date(int y, int mo, int d) {
    static const int lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (mo < 1 || mo > 12 || d < 1) return false;
    int len = lengths[mo - 1];
    if (mo == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) len = 29;
    return d <= len;
}

}  // namespace

std::int64_t parse_iso8601_utc(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char tail = '\0';
    int n = std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &s, &tail);
    if (n >= 6) {
        if (n == 7 && tail != 'Z') fail("invalid-timestamp", "unsupported timezone in '" + text + "'");
    } else {
        n = std::sscanf(text.c_str(), "%4d-%2d-%2d%c", &y, &mo, &d, &tail);
        if (n != 3) fail("invalid-timestamp", "cannot parse '" + text + "'");
        h = mi = s = 0;
    }
    if (!valid_date(y, mo, d) || h > 23 || mi > 59 || s > 60 || h < 0 || mi < 0 || s < 0)
        fail("invalid-timestamp", "field out of range in '" + text + "'");
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

std::vector<PollEvent> parse_event_log(const std::string& text) {
    std::vector<PollEvent> events;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos)
            fail("invalid-event", "expected 'actor,kind,timestamp': '" + line + "'");
        PollEvent e;
        e.actor = line.substr(0, c1);
        e.kind = line.substr(c1 + 1, c2 - c1 - 1);
        e.timestamp = parse_iso8601_utc(line.substr(c2 + 1));
        events.push_back(std::move(e));
    }
    return events;
}

std::vector<PollViolation> check_pre_survey_poll_bar(std::span<const PollEvent> events,
                                                     std::span<const std::string> indemnified,
                                                     std::int64_t survey_date, int blackout_days) {
    if (blackout_days < 0) fail("invalid-event", "blackout window must be >= 0 days");
    const std::set<std::string> watched(indemnified.begin(), indemnified.end());
    const std::int64_t window_start = survey_date - static_cast<std::int64_t>(blackout_days) * 86400;

    std::vector<PollViolation> violations;
    for (const PollEvent& e : events) {
        if (e.kind != "private-poll") continue;
        if (!watched.count(e.actor)) continue;
        if (e.timestamp >= window_start && e.timestamp < survey_date)
            violations.push_back(PollViolation{e.actor, e.timestamp});
    }
    return violations;
}

}  // namespace riskmech
