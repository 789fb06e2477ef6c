#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "riskmech/compliance.hpp"
#include "riskmech/config.hpp"
#include "riskmech/pricing.hpp"
#include "riskmech/qf.hpp"
#include "riskmech/sim.hpp"
#include "riskmech/survey.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace riskmech;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::string format = "both";  // csv | json | both
    std::optional<std::uint64_t> seed;
};

// Precedence: explicit --out, then the RISKMECH_OUT_DIR environment override,
// then the config's out_dir, then the current directory.
fs::path resolve_out_dir(const CommonArgs& args, const ScenarioConfig& config) {
    if (!args.out_dir.empty()) return args.out_dir;
    if (const char* env = std::getenv("RISKMECH_OUT_DIR"); env && *env) return env;
    if (config.out_dir) return *config.out_dir;
    return ".";
}

bool want_csv(const CommonArgs& args) { return args.format != "json"; }
bool want_json(const CommonArgs& args) { return args.format != "csv"; }

json envelope(const std::string& command, const ScenarioConfig& config, std::uint64_t seed) {
    json j;
    j["schema_version"] = 1;
    j["command"] = command;
    j["config_hash"] = config.config_hash;
    j["master_seed"] = seed;
    return j;
}

json estimate_json(const Estimate& e) {
    return json{{"mean", e.mean}, {"half_width", e.half_width}, {"replicates", e.replicates}};
}

const SurveyRound& require_survey(const ScenarioConfig& config) {
    if (!config.survey) fail("schema-error", "config.survey: section required by this command");
    return *config.survey;
}

FeeSchedule build_schedule(const ScenarioConfig& config) {
    if (!config.fee_schedule)
        fail("schema-error", "config.fee_schedule: section required by this command");
    const FeeScheduleParams& p = *config.fee_schedule;
    FeeSchedule schedule = publish_schedule(require_survey(config), p.tiers, p.disutilities,
                                            p.threshold, p.discount, p.allow_extrapolation,
                                            config.delta);
    if (!p.interval_label.empty()) schedule.interval_label = p.interval_label;
    return schedule;
}

int run_score(const CommonArgs& args) {
    ScenarioConfig config = load_config(args.config_path);
    if (args.seed) config.master_seed = *args.seed;
    const SurveyRound& round = require_survey(config);
    const std::vector<BtsScore> scores = score_round(round, config.delta);

    PayoutOptions options;
    options.floor = config.payout_floor;
    const auto paid = payouts(round, scores, round.payout_scale, options);

    std::vector<std::pair<std::string, std::string>> files;
    const fs::path out = resolve_out_dir(args, config);

    if (want_csv(args)) {
        std::string csv = "respondent_id,question_id,information_score,prediction_score,total\n";
        for (const BtsScore& s : scores)
            csv += s.respondent_id + "," + s.question_id + "," + format_double(s.information_score) +
                   "," + format_double(s.prediction_score) + "," + format_double(s.total) + "\n";
        files.emplace_back((out / "scores.csv").string(), csv);

        std::string pay_csv = "respondent_id,payout\n";
        for (const auto& [id, money] : paid)
            pay_csv += id + "," + format_double(money.value()) + "\n";
        files.emplace_back((out / "payouts.csv").string(), pay_csv);
    }
    if (want_json(args)) {
        json report = envelope("score", config, config.master_seed);
        report["interval_label"] = round.interval_label;
        report["alpha"] = round.alpha;
        report["payout_scale"] = round.payout_scale;
        report["delta"] = config.delta;
        report["scores"] = json::array();
        for (const BtsScore& s : scores)
            report["scores"].push_back(json{{"respondent_id", s.respondent_id},
                                            {"question_id", s.question_id},
                                            {"information_score", s.information_score},
                                            {"prediction_score", s.prediction_score},
                                            {"total", s.total}});
        report["payouts"] = json::object();
        for (const auto& [id, money] : paid) report["payouts"][id] = money.value();
        files.emplace_back((out / "score_report.json").string(), report.dump(2) + "\n");
    }

    commit_reports(files);
    std::cout << "scored " << scores.size() << " responses across " << round.questions.size()
              << " question(s)\n";
    for (const auto& [path, content] : files) std::cout << "wrote " << path << "\n";
    return 0;
}

struct FeeArgs {
    double flops = 0.0;
    double efficiency = 1.0;
    std::string developer;
    std::string policy = "silenced";
};

int run_fee(const CommonArgs& args, const FeeArgs& fee_args) {
    ScenarioConfig config = load_config(args.config_path);
    if (args.seed) config.master_seed = *args.seed;
    const SurveyRound& round = require_survey(config);
    const FeeSchedule schedule = build_schedule(config);
    const EffectiveCompute ec = effective_compute(fee_args.flops, fee_args.efficiency);

    json report = envelope("fee", config, config.master_seed);
    report["effective_compute"] =
        json{{"flops", ec.flops}, {"efficiency_factor", ec.efficiency_factor}, {"value", ec.value}};
    report["interval_label"] = schedule.interval_label;

    const bool required = requires_participation(ec, schedule);
    report["participation_required"] = required;

    std::cout << "effective_compute: " << format_double(ec.value) << "\n";
    if (!required) {
        report["fee"] = nullptr;
        std::cout << "participation not required below threshold; no fee due\n";
    } else if (fee_args.developer.empty()) {
        const double fee = base_fee(ec, schedule);
        report["base_fee"] = fee;
        report["fee"] = fee;
        report["discount"] = 0.0;
        std::cout << "participation required\n";
        std::cout << "base_fee: " << format_double(fee) << "\n";
        std::cout << "fee: " << format_double(fee) << "\n";
    } else {
        const FeePolicy policy = fee_args.policy == "scaled_payout" ? FeePolicy::scaled_payout
                                                                    : FeePolicy::silenced;
        const double fee =
            individualized_fee(fee_args.developer, ec, schedule, round, policy, config.delta);
        int history = 0;
        for (const Respondent& person : round.respondents)
            if (person.id == fee_args.developer) history = person.participation_history;
        const double discount =
            participation_discount(history, schedule.discount.rate, schedule.discount.cap);
        report["developer"] = fee_args.developer;
        report["policy"] = fee_args.policy;
        report["discount"] = discount;
        report["fee"] = fee;
        std::cout << "participation required\n";
        std::cout << "developer: " << fee_args.developer << " (policy " << fee_args.policy << ")\n";
        std::cout << "discount: " << format_double(discount) << "\n";
        std::cout << "fee: " << format_double(fee) << "\n";
    }

    if (want_json(args)) {
        // The published schedule is its own document: tiers, per-tier
        // per-scenario probabilities, disutilities, threshold, discount.
        json sched;
        sched["schema_version"] = 1;
        sched["interval_label"] = schedule.interval_label;
        sched["tiers"] = schedule.tiers;
        sched["scenarios"] = schedule.scenarios;
        sched["risks"] = schedule.risks;
        sched["disutilities"] = json::object();
        for (const auto& [scenario, d] : schedule.disutilities.by_scenario)
            sched["disutilities"][scenario] = d;
        sched["threshold"] = schedule.threshold;
        sched["discount"] =
            json{{"rate", schedule.discount.rate}, {"cap", schedule.discount.cap}};
        sched["allow_extrapolation"] = schedule.allow_extrapolation;

        const fs::path out = resolve_out_dir(args, config);
        commit_reports({{(out / "fee_report.json").string(), report.dump(2) + "\n"},
                        {(out / "fee_schedule.json").string(), sched.dump(2) + "\n"}});
        std::cout << "wrote " << (out / "fee_report.json").string() << "\n";
        std::cout << "wrote " << (out / "fee_schedule.json").string() << "\n";
    }
    return 0;
}

int run_qf(const CommonArgs& args) {
    ScenarioConfig config = load_config(args.config_path);
    if (args.seed) config.master_seed = *args.seed;
    if (!config.qf) fail("schema-error", "config.qf: section required by this command");
    const QfRound& round = *config.qf;
    const auto results = allocate(round);
    const auto flags = detect_funding_collusion(round, config.qf_collusion_threshold);

    std::vector<std::pair<std::string, std::string>> files;
    const fs::path out = resolve_out_dir(args, config);

    if (want_csv(args)) {
        std::string csv = "project_id,private_total,ideal_match,subsidy,scaled_subsidy\n";
        for (const MatchResult& r : results)
            csv += r.project_id + "," + format_double(r.private_total.value()) + "," +
                   format_double(r.ideal_match.value()) + "," + format_double(r.subsidy.value()) +
                   "," + format_double(r.scaled_subsidy.value()) + "\n";
        files.emplace_back((out / "qf_results.csv").string(), csv);
    }
    if (want_json(args)) {
        json report = envelope("qf", config, config.master_seed);
        report["matching_budget"] = round.matching_budget.value();
        report["results"] = json::array();
        for (const MatchResult& r : results)
            report["results"].push_back(json{{"project_id", r.project_id},
                                             {"private_total", r.private_total.value()},
                                             {"ideal_match", r.ideal_match.value()},
                                             {"subsidy", r.subsidy.value()},
                                             {"scaled_subsidy", r.scaled_subsidy.value()}});
        report["collusion_threshold"] = config.qf_collusion_threshold;
        report["funding_flags"] = json::array();
        for (const FundingFlag& f : flags)
            report["funding_flags"].push_back(
                json{{"contributors", f.contributors}, {"similarity", f.similarity}});
        files.emplace_back((out / "qf_report.json").string(), report.dump(2) + "\n");
    }

    commit_reports(files);
    for (const MatchResult& r : results)
        std::cout << r.project_id << ": private " << format_double(r.private_total.value())
                  << ", match " << format_double(r.ideal_match.value()) << ", subsidy "
                  << format_double(r.scaled_subsidy.value()) << "\n";
    for (const auto& [path, content] : files) std::cout << "wrote " << path << "\n";
    return 0;
}

struct SimulateArgs {
    std::optional<int> replicates;
    std::string trace_path;
};

int run_simulate(const CommonArgs& args, const SimulateArgs& sim_args) {
    const ScenarioConfig config = load_config(args.config_path);
    if (!config.sim) fail("schema-error", "config.simulation: section required by this command");

    SimSpec spec = *config.sim;
    if (sim_args.replicates) spec.config.replicates = *sim_args.replicates;
    if (args.seed) spec.config.master_seed = *args.seed;
    validate_model(spec.config.model);

    auto catalog = spec.deviations;
    if (catalog.empty())
        catalog = default_deviation_catalog(static_cast<int>(spec.config.question.buckets.size()));

    PolicyTraces traces;
    const ComparisonReport comparison =
        compare_policies(spec.config, catalog, sim_args.trace_path.empty() ? nullptr : &traces);

    json report = envelope("simulate", config, spec.config.master_seed);
    report["replicates"] = spec.config.replicates;
    report["questions"] = spec.config.questions;
    report["alpha"] = spec.config.alpha;
    report["payout_scale"] = spec.config.payout_scale;
    report["honest"] = estimate_json(comparison.honest);
    report["deviations"] = json::array();
    for (const DeviationReport& dev : comparison.deviations)
        report["deviations"].push_back(json{{"name", dev.name},
                                            {"payout", estimate_json(dev.payout)},
                                            {"gap", estimate_json(dev.gap)},
                                            {"honest_dominates",
                                             dev.gap.mean > dev.gap.half_width}});
    report["honest_dominance"] = comparison.honest_dominates;

    if (spec.config.fee) {
        json net;
        net["policy"] = spec.config.fee->policy == FeePolicy::silenced ? "silenced" : "scaled_payout";
        net["honest"] = estimate_json(developer_net_utility(honest_policy(), spec.config));
        net["gaps"] = json::array();
        for (const auto& [name, policy] : catalog) {
            const Estimate gap = net_utility_gap(honest_policy(), policy, spec.config);
            net["gaps"].push_back(json{{"name", name},
                                       {"mean", gap.mean},
                                       {"half_width", gap.half_width},
                                       {"honest_dominates", gap.mean > gap.half_width}});
        }
        report["net_utility"] = net;
    }

    if (spec.run_dilemma) {
        const DilemmaResult dilemma = dilemma_matrix(spec.config);
        json d;
        d["dilemma_present"] = dilemma.dilemma_present;
        const char* names[2] = {"coordinate", "defect"};
        d["cells"] = json::object();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                json cell;
                cell["net"] = json::array({estimate_json(dilemma.cells[i][j].net[0]),
                                           estimate_json(dilemma.cells[i][j].net[1])});
                cell["fee"] = json::array({estimate_json(dilemma.cells[i][j].fee[0]),
                                           estimate_json(dilemma.cells[i][j].fee[1])});
                d["cells"][std::string(names[i]) + "/" + names[j]] = cell;
            }
        d["defect_gain"] = json::array();
        for (int dev = 0; dev < 2; ++dev)
            d["defect_gain"].push_back(json::array({estimate_json(dilemma.defect_gain[dev][0]),
                                                    estimate_json(dilemma.defect_gain[dev][1])}));
        d["fee_saving"] =
            json::array({estimate_json(dilemma.fee_saving[0]), estimate_json(dilemma.fee_saving[1])});
        report["dilemma"] = d;
    }

    if (spec.scale_sweep) {
        const auto scale = min_scale_for_honest_dominance(spec.config, *spec.scale_sweep,
                                                          underreport_policy(1));
        json sweep;
        sweep["scales"] = *spec.scale_sweep;
        sweep["deviation"] = "underreport-1";
        if (scale)
            sweep["min_dominant_scale"] = *scale;
        else
            sweep["min_dominant_scale"] = nullptr;
        report["scale_sweep"] = sweep;
    }

    if (spec.frontier_peers) {
        const auto frontier =
            honest_share_frontier(spec.config, *spec.frontier_peers, flipped_policy());
        report["honest_share_frontier"] = json::array();
        for (const FrontierPoint& point : frontier)
            report["honest_share_frontier"].push_back(
                json{{"honest_peers", point.honest_peers}, {"gap", estimate_json(point.gap)}});
    }

    std::vector<std::pair<std::string, std::string>> files;
    const fs::path out = resolve_out_dir(args, config);
    if (want_json(args))
        files.emplace_back((out / "sim_report.json").string(), report.dump(2) + "\n");
    if (!sim_args.trace_path.empty()) {
        std::string csv = "replicate,policy,payout\n";
        for (const auto& [name, samples] : traces)
            for (std::size_t r = 0; r < samples.size(); ++r)
                csv += std::to_string(r) + "," + name + "," + format_double(samples[r]) + "\n";
        files.emplace_back(sim_args.trace_path, csv);
    }

    commit_reports(files);
    std::cout << "honest payout: " << format_double(comparison.honest.mean) << " +/- "
              << format_double(comparison.honest.half_width) << "\n";
    std::cout << "honest_dominance: " << (comparison.honest_dominates ? "true" : "false") << "\n";
    for (const auto& [path, content] : files) std::cout << "wrote " << path << "\n";
    return 0;
}

int run_detect(const CommonArgs& args) {
    ScenarioConfig config = load_config(args.config_path);
    if (args.seed) config.master_seed = *args.seed;
    const SurveyRound& round = require_survey(config);
    const ComplianceSpec spec = config.compliance.value_or(ComplianceSpec{});

    const auto flags = detect_respondent_collusion(round, spec.threshold);

    ComplianceReport penalties;
    if (spec.penalties)
        penalties = apply_penalties(spec.confirmed_groups, spec.whistleblowers, *spec.penalties);

    std::vector<PollViolation> violations;
    if (spec.survey_date && spec.event_log_path) {
        const auto events = parse_event_log(read_file(*spec.event_log_path));
        std::vector<std::string> indemnified = spec.indemnified;
        if (indemnified.empty())
            for (const Respondent& person : round.respondents)
                if (person.role == Role::developer) indemnified.push_back(person.id);
        violations =
            check_pre_survey_poll_bar(events, indemnified, *spec.survey_date, spec.blackout_days);
    }

    std::vector<std::pair<std::string, std::string>> files;
    const fs::path out = resolve_out_dir(args, config);

    if (want_csv(args)) {
        std::string csv = "respondent_id,kind,amount\n";
        for (const LedgerItem& item : penalties.ledger)
            csv += item.respondent_id + "," + item.kind + "," + format_double(item.delta.value()) +
                   "\n";
        files.emplace_back((out / "compliance_ledger.csv").string(), csv);
    }
    if (want_json(args)) {
        json report = envelope("detect", config, config.master_seed);
        report["threshold"] = spec.threshold;
        report["flagged_groups"] = json::array();
        for (const RespondentFlag& flag : flags)
            report["flagged_groups"].push_back(json{{"respondents", flag.respondents},
                                                    {"agreement", flag.agreement},
                                                    {"mean_l1", flag.mean_l1}});
        report["ledger"] = json::array();
        for (const LedgerItem& item : penalties.ledger)
            report["ledger"].push_back(json{{"respondent_id", item.respondent_id},
                                            {"kind", item.kind},
                                            {"amount", item.delta.value()}});
        report["net"] = json::object();
        for (const auto& [id, delta] : penalties.net) report["net"][id] = delta.value();
        report["poll_violations"] = json::array();
        for (const PollViolation& v : violations)
            report["poll_violations"].push_back(
                json{{"actor", v.actor}, {"timestamp", v.timestamp}});
        files.emplace_back((out / "compliance_report.json").string(), report.dump(2) + "\n");
    }

    commit_reports(files);
    std::cout << "flagged groups: " << flags.size() << "\n";
    std::cout << "ledger items: " << penalties.ledger.size() << "\n";
    std::cout << "poll violations: " << violations.size() << "\n";
    for (const auto& [path, content] : files) std::cout << "wrote " << path << "\n";
    return 0;
}

int exit_code_for(const std::string& code) {
    if (code == "schema-error") return 2;
    if (code == "out-of-range" || code == "invalid-compute") return 4;
    if (code == "invalid-model" || code == "impossible-signal") return 5;
    return 3;  // invariant breaches (incomplete-round, too-few-respondents, ...)
}

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "scenario config (JSON)")->required();
    sub->add_option("--out", args.out_dir, "output directory (default: RISKMECH_OUT_DIR or .)");
    sub->add_option("--format", args.format, "report format")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    sub->add_option("--seed", args.seed,
                    "override the config master seed (recorded in report provenance)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "riskmech: truth-serum survey scoring, compute-indexed risk fees,\n"
        "quadratic financing and Monte Carlo incentive checks"};
    app.require_subcommand(1);

    CommonArgs score_args, fee_common, qf_args, sim_common, detect_args;
    FeeArgs fee_args;
    SimulateArgs sim_args;

    CLI::App* score = app.add_subcommand("score", "score a survey round and compute payouts");
    add_common(score, score_args);

    CLI::App* fee = app.add_subcommand("fee", "risk-priced indemnity fee for a training run");
    add_common(fee, fee_common);
    fee->add_option("--flops", fee_args.flops, "training FLOPs")->required();
    fee->add_option("--efficiency", fee_args.efficiency, "algorithmic efficiency factor");
    fee->add_option("--developer", fee_args.developer, "respondent id for an individualized fee");
    fee->add_option("--policy", fee_args.policy, "silenced | scaled_payout")
        ->check(CLI::IsMember({"silenced", "scaled_payout"}));

    CLI::App* qf = app.add_subcommand("qf", "quadratic-financing match allocation");
    add_common(qf, qf_args);

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo incentive checks");
    add_common(simulate, sim_common);
    int replicates_flag = 0;
    simulate->add_option("--replicates", replicates_flag, "override the configured replicates");
    simulate->add_option("--trace", sim_args.trace_path, "write per-replicate payouts (CSV)");

    CLI::App* detect = app.add_subcommand("detect", "collusion flags, penalties and the poll bar");
    add_common(detect, detect_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // usage problems share the schema exit code
    }

    try {
        if (score->parsed()) return run_score(score_args);
        if (fee->parsed()) return run_fee(fee_common, fee_args);
        if (qf->parsed()) return run_qf(qf_args);
        if (simulate->parsed()) {
            if (replicates_flag > 0) sim_args.replicates = replicates_flag;
            return run_simulate(sim_common, sim_args);
        }
        if (detect->parsed()) return run_detect(detect_args);
    } catch (const MechError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
