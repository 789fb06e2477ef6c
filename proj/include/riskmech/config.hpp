#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "riskmech/compliance.hpp"
#include "riskmech/pricing.hpp"
#include "riskmech/qf.hpp"
#include "riskmech/sim.hpp"
#include "riskmech/survey.hpp"

namespace riskmech {

// Scenario config ingestion (one JSON document with optional sections) and
// report plumbing shared by the CLI and the tests. Schema problems throw
// MechError("schema-error", ...) with a field path in the message; semantic
// invariants keep their own codes.

struct FeeScheduleParams {
    std::string interval_label;
    std::vector<double> tiers;
    double threshold = 0.0;
    DiscountPolicy discount;
    bool allow_extrapolation = false;
    DisutilityTable disutilities;
};

struct SimSpec {
    SimConfig config;
    // Named deviation policies; empty means the default catalog.
    std::vector<std::pair<std::string, AgentPolicy>> deviations;
    std::optional<std::vector<double>> scale_sweep;
    std::optional<std::vector<int>> frontier_peers;
    bool run_dilemma = false;
};

struct ComplianceSpec {
    double threshold = 0.99;
    std::optional<PenaltySchedule> penalties;
    std::vector<std::vector<std::string>> confirmed_groups;
    std::vector<std::string> whistleblowers;
    std::optional<std::int64_t> survey_date;
    int blackout_days = 30;
    std::optional<std::string> event_log_path;  // relative paths resolve against the config file
    std::vector<std::string> indemnified;       // empty: developers from the survey section
};

struct ScenarioConfig {
    int schema_version = 1;
    std::uint64_t master_seed = 0;
    double delta = 0.0;
    std::optional<double> payout_floor;
    std::optional<SurveyRound> survey;
    std::optional<FeeScheduleParams> fee_schedule;
    std::optional<QfRound> qf;
    double qf_collusion_threshold = 0.9;
    std::optional<SimSpec> sim;
    std::optional<ComplianceSpec> compliance;
    std::optional<std::string> out_dir;  // default output directory for reports
    std::string config_hash;             // FNV-1a of the raw config bytes, hex
};

ScenarioConfig parse_config_text(const std::string& text, const std::string& base_dir = ".");
ScenarioConfig load_config(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(std::uint64_t h);

// Shortest round-trip decimal representation; byte-stable across runs.
std::string format_double(double value);

// Stage-then-rename commit of (path, content) pairs: on any failure no final
// path is touched. Parent directories are created as needed.
void commit_reports(const std::vector<std::pair<std::string, std::string>>& files);

// Checks the provenance envelope every JSON report carries (schema_version,
// command, config_hash, master_seed). Throws MechError("schema-error") on a
// malformed report.
void validate_report_text(const std::string& text);

std::string read_file(const std::string& path);

}  // namespace riskmech
