#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "riskmech/money.hpp"

namespace riskmech {

// Quadratic Financing: a project's ideal total is (sum_i sqrt(c_i))^2 over
// its merged contributions; the subsidy is that total minus the private
// money, scaled down proportionally when the matching budget cannot cover
// every project.

struct Project {
    std::string id;
    std::string title;
    std::vector<std::string> proposer_ids;
};

struct Contribution {
    std::string contributor_id;
    std::string project_id;
    Money amount;  // strictly positive
};

struct QfRound {
    std::vector<Project> projects;
    std::vector<Contribution> contributions;
    Money matching_budget;
    // Pairs of contributor ids declared to be the same real party.
    std::vector<std::pair<std::string, std::string>> identity_links;
};

struct MatchResult {
    std::string project_id;
    Money private_total;
    Money ideal_match;
    Money subsidy;         // ideal_match - private_total, >= 0
    Money scaled_subsidy;  // after budget scaling
};

struct FundingFlag {
    std::vector<std::string> contributors;  // sorted
    double similarity = 0.0;                // cosine over contribution vectors
};

// Sum contributions from transitively linked identities into one contribution
// per (canonical id, project), canonical = lexicographically smallest linked
// id. Output is sorted by (project_id, contributor_id) so the result does not
// depend on input order.
std::vector<Contribution> merge_sybils(const std::vector<Contribution>& contributions,
                                       const std::vector<std::pair<std::string, std::string>>& identity_links);

// (sum_i sqrt(c_i))^2 over one project's merged contribution amounts, rounded
// half-even to the minor unit. Equals the private total exactly when there is
// at most one contributor.
Money ideal_match(std::span<const Money> amounts);

// Full round: merge, match, subsidize, and scale subsidies proportionally so
// they never exceed the matching budget. Deterministic; results follow the
// round's project order.
std::vector<MatchResult> allocate(const QfRound& round);

// Advisory sybil/collusion flags: contributor pairs that co-fund at least one
// project, span at least two projects between them, and whose contribution
// vectors have cosine similarity >= threshold. Flagged pairs are merged into
// maximal groups.
std::vector<FundingFlag> detect_funding_collusion(const QfRound& round, double threshold);

}  // namespace riskmech
