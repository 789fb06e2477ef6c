#include "riskmech/qf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace riskmech {

namespace {

// Union-find keyed by contributor id; the representative is always the
// lexicographically smallest id in the class.
class IdentityGroups {
public:
    explicit IdentityGroups(const std::vector<std::pair<std::string, std::string>>& links) {
        for (const auto& [a, b] : links) unite(a, b);
    }

    std::string canonical(const std::string& id) {
        auto it = parent_.find(id);
        if (it == parent_.end()) return id;
        return find(id);
    }

private:
    std::string find(const std::string& id) {
        std::string root = id;
        while (parent_.at(root) != root) root = parent_.at(root);
        std::string cur = id;
        while (parent_.at(cur) != root) {
            std::string next = parent_.at(cur);
            parent_[cur] = root;
            cur = next;
        }
        return root;
    }

    void unite(const std::string& a, const std::string& b) {
        parent_.try_emplace(a, a);
        parent_.try_emplace(b, b);
        const std::string ra = find(a), rb = find(b);
        if (ra == rb) return;
        const std::string& keep = std::min(ra, rb);
        parent_[ra] = keep;
        parent_[rb] = keep;
    }

    std::unordered_map<std::string, std::string> parent_;
};

void validate_round(const QfRound& round) {
    std::set<std::string> project_ids;
    for (const Project& p : round.projects)
        if (!project_ids.insert(p.id).second)
            fail("duplicate-project", "project id '" + p.id + "' appears twice");
    for (const Contribution& c : round.contributions) {
        if (!project_ids.count(c.project_id))
            fail("unknown-project", "contribution to unknown project '" + c.project_id + "'");
        if (c.amount <= Money{})
            fail("invalid-contribution", "contribution amounts must be positive");
    }
    if (round.matching_budget < Money{}) fail("invalid-budget", "matching budget must be >= 0");
}

}  // namespace

std::vector<Contribution> merge_sybils(
    const std::vector<Contribution>& contributions,
    const std::vector<std::pair<std::string, std::string>>& identity_links) {
    IdentityGroups groups(identity_links);
    std::map<std::pair<std::string, std::string>, Money> merged;  // (project, canonical) -> amount
    for (const Contribution& c : contributions)
        merged[{c.project_id, groups.canonical(c.contributor_id)}] += c.amount;

    std::vector<Contribution> out;
    out.reserve(merged.size());
    for (const auto& [key, amount] : merged)
        out.push_back(Contribution{key.second, key.first, amount});
    return out;
}

Money ideal_match(std::span<const Money> amounts) {
    if (amounts.empty()) return Money{};
    Money total;
    for (Money a : amounts) total += a;
    if (amounts.size() == 1) return total;  // no co-funding, no top-up

    double sqrt_sum = 0.0;
    for (Money a : amounts) sqrt_sum += std::sqrt(a.value());
    return Money::from_value(sqrt_sum * sqrt_sum);
}

std::vector<MatchResult> allocate(const QfRound& round) {
    validate_round(round);
    const std::vector<Contribution> merged = merge_sybils(round.contributions, round.identity_links);

    std::vector<MatchResult> results;
    results.reserve(round.projects.size());
    std::int64_t subsidy_total = 0;
    for (const Project& p : round.projects) {
        std::vector<Money> amounts;
        for (const Contribution& c : merged)
            if (c.project_id == p.id) amounts.push_back(c.amount);

        MatchResult r;
        r.project_id = p.id;
        for (Money a : amounts) r.private_total += a;
        r.ideal_match = ideal_match(amounts);
        r.subsidy = r.ideal_match - r.private_total;
        subsidy_total += r.subsidy.minor();
        results.push_back(std::move(r));
    }

    const std::int64_t budget = round.matching_budget.minor();
    if (subsidy_total <= budget) {
        for (MatchResult& r : results) r.scaled_subsidy = r.subsidy;
        return results;
    }

    // Proportional scaling, rounded half-even per project, then a shave pass
    // so the total never exceeds the budget by even one minor unit.
    const double ratio = static_cast<double>(budget) / static_cast<double>(subsidy_total);
    std::int64_t scaled_total = 0;
    for (MatchResult& r : results) {
        const auto scaled = static_cast<std::int64_t>(
            round_half_even(static_cast<double>(r.subsidy.minor()) * ratio));
        r.scaled_subsidy = Money::from_minor(scaled);
        scaled_total += scaled;
    }
    while (scaled_total > budget) {
        MatchResult* largest = nullptr;
        for (MatchResult& r : results)
            if (r.scaled_subsidy > Money{} &&
                (!largest || r.scaled_subsidy > largest->scaled_subsidy))
                largest = &r;
        if (!largest) break;
        largest->scaled_subsidy = largest->scaled_subsidy - Money::from_minor(1);
        --scaled_total;
    }
    return results;
}

std::vector<FundingFlag> detect_funding_collusion(const QfRound& round, double threshold) {
    validate_round(round);
    const std::vector<Contribution> merged = merge_sybils(round.contributions, round.identity_links);

    std::map<std::string, std::size_t> project_index;
    for (const Project& p : round.projects) project_index.emplace(p.id, project_index.size());

    std::map<std::string, std::vector<double>> vectors;
    for (const Contribution& c : merged) {
        auto& v = vectors.try_emplace(c.contributor_id,
                                      std::vector<double>(project_index.size(), 0.0))
                      .first->second;
        v[project_index.at(c.project_id)] = c.amount.value();
    }

    std::vector<std::string> ids;
    for (const auto& [id, v] : vectors) ids.push_back(id);

    const double thr = std::max(threshold, 0.0);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<double> edge_sim;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            const auto& a = vectors.at(ids[i]);
            const auto& b = vectors.at(ids[j]);
            double dot = 0.0, aa = 0.0, bb = 0.0;
            std::size_t shared = 0, span = 0;
            for (std::size_t p = 0; p < a.size(); ++p) {
                dot += a[p] * b[p];
                aa += a[p] * a[p];
                bb += b[p] * b[p];
                const bool in_a = a[p] > 0.0, in_b = b[p] > 0.0;
                if (in_a && in_b) ++shared;
                if (in_a || in_b) ++span;
            }
            if (shared < 1 || span < 2) continue;
            // Compare in squared form so identical vectors pass threshold 1 exactly.
            if (dot * dot >= thr * thr * aa * bb) {
                edges.emplace_back(i, j);
                edge_sim.push_back(std::min(dot / (std::sqrt(aa) * std::sqrt(bb)), 1.0));
            }
        }
    }

    // Maximal groups: connected components of the flagged-pair graph.
    std::vector<std::size_t> comp(ids.size());
    for (std::size_t i = 0; i < comp.size(); ++i) comp[i] = i;
    const auto root = [&](std::size_t x) {
        while (comp[x] != x) x = comp[x] = comp[comp[x]];
        return x;
    };
    for (const auto& [i, j] : edges) comp[root(i)] = root(j);

    std::map<std::size_t, FundingFlag> by_component;
    std::map<std::size_t, std::pair<double, int>> sim_accum;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const std::size_t r = root(edges[e].first);
        auto& acc = sim_accum[r];
        acc.first += edge_sim[e];
        acc.second += 1;
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::size_t r = root(i);
        if (!sim_accum.count(r)) continue;
        by_component[r].contributors.push_back(ids[i]);
    }

    std::vector<FundingFlag> flags;
    for (auto& [r, flag] : by_component) {
        std::sort(flag.contributors.begin(), flag.contributors.end());
        flag.similarity = sim_accum.at(r).first / sim_accum.at(r).second;
        flags.push_back(std::move(flag));
    }
    std::sort(flags.begin(), flags.end(), [](const FundingFlag& a, const FundingFlag& b) {
        return a.contributors < b.contributors;
    });
    return flags;
}

}  // namespace riskmech
