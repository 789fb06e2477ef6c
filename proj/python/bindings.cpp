#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <span>
#include <vector>

#include "riskmech/compliance.hpp"
#include "riskmech/config.hpp"
#include "riskmech/pricing.hpp"
#include "riskmech/qf.hpp"
#include "riskmech/sim.hpp"
#include "riskmech/survey.hpp"

namespace py = pybind11;
using namespace riskmech;

namespace {

void bind_survey(py::module_& m) {
    py::enum_<Role>(m, "Role")
        .value("developer", Role::developer)
        .value("independent_expert", Role::independent_expert)
        .value("insurer", Role::insurer)
        .value("agency", Role::agency);

    py::class_<Money>(m, "Money")
        .def(py::init([](double value) { return Money::from_value(value); }), py::arg("value"))
        .def_static("from_minor", &Money::from_minor, py::arg("minor"))
        .def_property_readonly("value", &Money::value)
        .def_property_readonly("minor", &Money::minor)
        .def("__float__", &Money::value)
        .def("__eq__", [](Money a, Money b) { return a == b; })
        .def("__lt__", [](Money a, Money b) { return a < b; })
        .def("__repr__", [](Money a) { return "Money(" + format_double(a.value()) + ")"; });

    py::class_<Bucket>(m, "Bucket")
        .def(py::init<>())
        .def(py::init([](double lo, double hi, double mid) { return Bucket{lo, hi, mid}; }),
             py::arg("lo"), py::arg("hi"), py::arg("midpoint"))
        .def_readwrite("lo", &Bucket::lo)
        .def_readwrite("hi", &Bucket::hi)
        .def_readwrite("midpoint", &Bucket::midpoint);

    py::class_<Question>(m, "Question")
        .def(py::init<>())
        .def_readwrite("id", &Question::id)
        .def_readwrite("prompt", &Question::prompt)
        .def_readwrite("scenario_id", &Question::scenario_id)
        .def_readwrite("compute_tier", &Question::compute_tier)
        .def_readwrite("time_frame_years", &Question::time_frame_years)
        .def_readwrite("buckets", &Question::buckets);

    py::class_<Respondent>(m, "Respondent")
        .def(py::init<>())
        .def(py::init([](std::string id, Role role, int history) {
                 return Respondent{std::move(id), role, history};
             }),
             py::arg("id"), py::arg("role") = Role::independent_expert,
             py::arg("participation_history") = 0)
        .def_readwrite("id", &Respondent::id)
        .def_readwrite("role", &Respondent::role)
        .def_readwrite("participation_history", &Respondent::participation_history);

    py::class_<Response>(m, "Response")
        .def(py::init<>())
        .def(py::init([](std::string respondent_id, std::string question_id, int endorsement,
                         std::vector<double> prediction) {
                 return Response{std::move(respondent_id), std::move(question_id), endorsement,
                                 std::move(prediction)};
             }),
             py::arg("respondent_id"), py::arg("question_id"), py::arg("endorsement"),
             py::arg("prediction"))
        .def_readwrite("respondent_id", &Response::respondent_id)
        .def_readwrite("question_id", &Response::question_id)
        .def_readwrite("endorsement", &Response::endorsement)
        .def_readwrite("prediction", &Response::prediction);

    py::class_<SurveyRound>(m, "SurveyRound")
        .def(py::init<>())
        .def_readwrite("questions", &SurveyRound::questions)
        .def_readwrite("respondents", &SurveyRound::respondents)
        .def_readwrite("responses", &SurveyRound::responses)
        .def_readwrite("alpha", &SurveyRound::alpha)
        .def_readwrite("payout_scale", &SurveyRound::payout_scale)
        .def_readwrite("interval_label", &SurveyRound::interval_label);

    py::class_<BtsScore>(m, "BtsScore")
        .def_readonly("respondent_id", &BtsScore::respondent_id)
        .def_readonly("question_id", &BtsScore::question_id)
        .def_readonly("information_score", &BtsScore::information_score)
        .def_readonly("prediction_score", &BtsScore::prediction_score)
        .def_readonly("total", &BtsScore::total);

    m.def("validate_round", &validate_round, py::arg("round"));
    m.def("clamp_prediction", &clamp_prediction, py::arg("prediction"),
          py::arg("eps") = kPredictionClampEps);
    m.def("endorsement_frequencies", &endorsement_frequencies, py::arg("round"),
          py::arg("question_id"), py::arg("delta") = 0.0,
          py::arg("exclude") = std::optional<std::string>());
    m.def("prediction_geomeans", &prediction_geomeans, py::arg("round"), py::arg("question_id"),
          py::arg("eps") = kPredictionClampEps);
    m.def(
        "information_score",
        [](const Response& r, const std::vector<double>& xbar, const std::vector<double>& ybar) {
            return information_score(r, xbar, ybar);
        },
        py::arg("response"), py::arg("xbar"), py::arg("ybar"));
    m.def(
        "prediction_score",
        [](const Response& r, const std::vector<double>& xbar, double alpha) {
            return prediction_score(r, xbar, alpha);
        },
        py::arg("response"), py::arg("xbar"), py::arg("alpha"));
    m.def("score_round", &score_round, py::arg("round"), py::arg("delta") = 0.0,
          py::arg("eps") = kPredictionClampEps);
    m.def(
        "payouts",
        [](const SurveyRound& round, const std::vector<BtsScore>& scores, double payout_scale,
           std::optional<double> floor, std::optional<std::vector<Role>> roles) {
            PayoutOptions options;
            options.floor = floor;
            options.roles = std::move(roles);
            return payouts(round, scores, payout_scale, options);
        },
        py::arg("round"), py::arg("scores"), py::arg("payout_scale"),
        py::arg("floor") = std::optional<double>(),
        py::arg("roles") = std::optional<std::vector<Role>>());
}

void bind_pricing(py::module_& m) {
    py::enum_<FeePolicy>(m, "FeePolicy")
        .value("scaled_payout", FeePolicy::scaled_payout)
        .value("silenced", FeePolicy::silenced);

    py::class_<DisutilityTable>(m, "DisutilityTable")
        .def(py::init<>())
        .def(py::init([](std::map<std::string, double> by_scenario) {
                 DisutilityTable t;
                 t.by_scenario = std::move(by_scenario);
                 return t;
             }),
             py::arg("by_scenario"))
        .def_readwrite("by_scenario", &DisutilityTable::by_scenario);

    py::class_<EffectiveCompute>(m, "EffectiveCompute")
        .def_readonly("flops", &EffectiveCompute::flops)
        .def_readonly("efficiency_factor", &EffectiveCompute::efficiency_factor)
        .def_readonly("value", &EffectiveCompute::value);

    py::class_<DiscountPolicy>(m, "DiscountPolicy")
        .def(py::init<>())
        .def(py::init([](double rate, double cap) { return DiscountPolicy{rate, cap}; }),
             py::arg("rate"), py::arg("cap"))
        .def_readwrite("rate", &DiscountPolicy::rate)
        .def_readwrite("cap", &DiscountPolicy::cap);

    py::class_<FeeSchedule>(m, "FeeSchedule")
        .def(py::init<>())
        .def_readwrite("interval_label", &FeeSchedule::interval_label)
        .def_readwrite("tiers", &FeeSchedule::tiers)
        .def_readwrite("scenarios", &FeeSchedule::scenarios)
        .def_readwrite("risks", &FeeSchedule::risks)
        .def_readwrite("disutilities", &FeeSchedule::disutilities)
        .def_readwrite("threshold", &FeeSchedule::threshold)
        .def_readwrite("discount", &FeeSchedule::discount)
        .def_readwrite("allow_extrapolation", &FeeSchedule::allow_extrapolation);

    m.def("effective_compute", &effective_compute, py::arg("flops"), py::arg("efficiency_factor"));
    m.def("aggregate_risk", &aggregate_risk, py::arg("round"), py::arg("scenario_id"),
          py::arg("tier"), py::arg("exclude") = std::optional<std::string>(),
          py::arg("delta") = 0.0);
    m.def("publish_schedule", &publish_schedule, py::arg("round"), py::arg("tiers"),
          py::arg("disutilities"), py::arg("threshold"), py::arg("discount") = DiscountPolicy{},
          py::arg("allow_extrapolation") = false, py::arg("delta") = 0.0);
    m.def("requires_participation", &requires_participation, py::arg("ec"), py::arg("schedule"));
    m.def("participation_discount", &participation_discount, py::arg("history"), py::arg("rate"),
          py::arg("cap"));
    m.def(
        "base_fee",
        [](const EffectiveCompute& ec, const FeeSchedule& schedule) {
            return base_fee(ec, schedule);
        },
        py::arg("ec"), py::arg("schedule"));
    m.def(
        "base_fee_excluding",
        [](const EffectiveCompute& ec, const FeeSchedule& schedule, const SurveyRound& round,
           std::optional<std::string> exclude, double delta) {
            return base_fee(ec, schedule, round, exclude, delta);
        },
        py::arg("ec"), py::arg("schedule"), py::arg("round"),
        py::arg("exclude") = std::optional<std::string>(), py::arg("delta") = 0.0);
    m.def("individualized_fee", &individualized_fee, py::arg("developer_id"), py::arg("ec"),
          py::arg("schedule"), py::arg("round"), py::arg("policy"), py::arg("delta") = 0.0);
}

void bind_qf(py::module_& m) {
    py::class_<Project>(m, "Project")
        .def(py::init<>())
        .def(py::init([](std::string id, std::string title, std::vector<std::string> proposers) {
                 return Project{std::move(id), std::move(title), std::move(proposers)};
             }),
             py::arg("id"), py::arg("title") = "", py::arg("proposer_ids") = std::vector<std::string>())
        .def_readwrite("id", &Project::id)
        .def_readwrite("title", &Project::title)
        .def_readwrite("proposer_ids", &Project::proposer_ids);

    py::class_<Contribution>(m, "Contribution")
        .def(py::init([](std::string contributor_id, std::string project_id, double amount) {
                 return Contribution{std::move(contributor_id), std::move(project_id),
                                     Money::from_value(amount)};
             }),
             py::arg("contributor_id"), py::arg("project_id"), py::arg("amount"))
        .def_readwrite("contributor_id", &Contribution::contributor_id)
        .def_readwrite("project_id", &Contribution::project_id)
        .def_readwrite("amount", &Contribution::amount);

    py::class_<QfRound>(m, "QfRound")
        .def(py::init<>())
        .def_readwrite("projects", &QfRound::projects)
        .def_readwrite("contributions", &QfRound::contributions)
        .def_readwrite("matching_budget", &QfRound::matching_budget)
        .def_readwrite("identity_links", &QfRound::identity_links);

    py::class_<MatchResult>(m, "MatchResult")
        .def_readonly("project_id", &MatchResult::project_id)
        .def_readonly("private_total", &MatchResult::private_total)
        .def_readonly("ideal_match", &MatchResult::ideal_match)
        .def_readonly("subsidy", &MatchResult::subsidy)
        .def_readonly("scaled_subsidy", &MatchResult::scaled_subsidy);

    py::class_<FundingFlag>(m, "FundingFlag")
        .def_readonly("contributors", &FundingFlag::contributors)
        .def_readonly("similarity", &FundingFlag::similarity);

    m.def("merge_sybils", &merge_sybils, py::arg("contributions"), py::arg("identity_links"));
    m.def(
        "ideal_match",
        [](const std::vector<Money>& amounts) { return ideal_match(std::span(amounts)); },
        py::arg("amounts"));
    m.def(
        "ideal_match_values",
        [](const std::vector<double>& amounts) {
            std::vector<Money> money;
            money.reserve(amounts.size());
            for (double a : amounts) money.push_back(Money::from_value(a));
            return ideal_match(std::span(money));
        },
        py::arg("amounts"));
    m.def("allocate", &allocate, py::arg("round"));
    m.def("detect_funding_collusion", &detect_funding_collusion, py::arg("round"),
          py::arg("threshold"));
}

void bind_sim(py::module_& m) {
    py::class_<WorldModel>(m, "WorldModel")
        .def(py::init<>())
        .def(py::init([](std::vector<std::string> states, std::vector<double> prior,
                         std::vector<std::vector<double>> likelihoods) {
                 return WorldModel{std::move(states), std::move(prior), std::move(likelihoods)};
             }),
             py::arg("states"), py::arg("prior"), py::arg("signal_likelihoods"))
        .def_readwrite("states", &WorldModel::states)
        .def_readwrite("prior", &WorldModel::prior)
        .def_readwrite("signal_likelihoods", &WorldModel::signal_likelihoods);

    auto policy = py::class_<AgentPolicy>(m, "AgentPolicy")
                      .def(py::init<>())
                      .def_readwrite("kind", &AgentPolicy::kind)
                      .def_readwrite("shift", &AgentPolicy::shift)
                      .def_readwrite("bucket", &AgentPolicy::bucket)
                      .def_readwrite("coalition_id", &AgentPolicy::coalition_id)
                      .def_readwrite("prediction_rule", &AgentPolicy::prediction_rule)
                      .def_readwrite("fabricated", &AgentPolicy::fabricated);
    py::enum_<AgentPolicy::Kind>(policy, "Kind")
        .value("honest", AgentPolicy::Kind::honest)
        .value("underreport", AgentPolicy::Kind::underreport)
        .value("fixed", AgentPolicy::Kind::fixed)
        .value("flipped", AgentPolicy::Kind::flipped)
        .value("colluder", AgentPolicy::Kind::colluder);
    py::enum_<AgentPolicy::PredictionRule>(policy, "PredictionRule")
        .value("bayes", AgentPolicy::PredictionRule::bayes)
        .value("fabricated", AgentPolicy::PredictionRule::fabricated);

    m.def("honest_policy", &honest_policy);
    m.def("underreport_policy", &underreport_policy, py::arg("shift") = 1);
    m.def("fixed_policy", &fixed_policy, py::arg("bucket"));
    m.def("flipped_policy", &flipped_policy);
    m.def("colluder_policy", &colluder_policy, py::arg("coalition_id"), py::arg("bucket"));

    py::class_<SimAgent>(m, "SimAgent")
        .def(py::init<>())
        .def(py::init([](std::string id, Role role, int history, AgentPolicy policy) {
                 return SimAgent{std::move(id), role, history, std::move(policy)};
             }),
             py::arg("id"), py::arg("role") = Role::independent_expert,
             py::arg("participation_history") = 0, py::arg("policy") = AgentPolicy{})
        .def_readwrite("id", &SimAgent::id)
        .def_readwrite("role", &SimAgent::role)
        .def_readwrite("participation_history", &SimAgent::participation_history)
        .def_readwrite("policy", &SimAgent::policy);

    py::class_<QuestionTemplate>(m, "QuestionTemplate")
        .def(py::init<>())
        .def_readwrite("buckets", &QuestionTemplate::buckets)
        .def_readwrite("scenario_id", &QuestionTemplate::scenario_id);
    m.def("default_binary_template", &default_binary_template);

    py::class_<FeeContext>(m, "FeeContext")
        .def(py::init<>())
        .def_readwrite("tiers", &FeeContext::tiers)
        .def_readwrite("disutilities", &FeeContext::disutilities)
        .def_readwrite("threshold", &FeeContext::threshold)
        .def_readwrite("discount", &FeeContext::discount)
        .def_readwrite("developer_ec", &FeeContext::developer_ec)
        .def_readwrite("policy", &FeeContext::policy)
        .def_readwrite("developer_receives_payout", &FeeContext::developer_receives_payout);

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("model", &SimConfig::model)
        .def_readwrite("roster", &SimConfig::roster)
        .def_readwrite("question", &SimConfig::question)
        .def_readwrite("questions", &SimConfig::questions)
        .def_readwrite("alpha", &SimConfig::alpha)
        .def_readwrite("payout_scale", &SimConfig::payout_scale)
        .def_readwrite("delta", &SimConfig::delta)
        .def_readwrite("fee", &SimConfig::fee)
        .def_readwrite("replicates", &SimConfig::replicates)
        .def_readwrite("master_seed", &SimConfig::master_seed)
        .def_readwrite("test_agent", &SimConfig::test_agent);

    py::class_<Estimate>(m, "Estimate")
        .def_readonly("mean", &Estimate::mean)
        .def_readonly("half_width", &Estimate::half_width)
        .def_readonly("replicates", &Estimate::replicates)
        .def("__repr__", [](const Estimate& e) {
            return "Estimate(mean=" + format_double(e.mean) +
                   ", half_width=" + format_double(e.half_width) + ")";
        });

    m.def("validate_model", &validate_model, py::arg("model"));
    m.def("posterior_predictive", &posterior_predictive, py::arg("signal"), py::arg("model"));
    m.def("sample_round", &sample_round, py::arg("model"), py::arg("roster"), py::arg("seed"),
          py::arg("questions") = 1, py::arg("question") = default_binary_template());
    m.def("expected_payout", &expected_payout, py::arg("policy"), py::arg("config"));
    m.def("payout_gap", &payout_gap, py::arg("a"), py::arg("b"), py::arg("config"));
    m.def("developer_net_utility", &developer_net_utility, py::arg("policy"), py::arg("config"));
    m.def("net_utility_gap", &net_utility_gap, py::arg("a"), py::arg("b"), py::arg("config"));
    m.def("default_deviation_catalog", &default_deviation_catalog, py::arg("buckets"));

    py::class_<DeviationReport>(m, "DeviationReport")
        .def_readonly("name", &DeviationReport::name)
        .def_readonly("payout", &DeviationReport::payout)
        .def_readonly("gap", &DeviationReport::gap);
    py::class_<ComparisonReport>(m, "ComparisonReport")
        .def_readonly("honest", &ComparisonReport::honest)
        .def_readonly("deviations", &ComparisonReport::deviations)
        .def_readonly("honest_dominates", &ComparisonReport::honest_dominates);
    m.def(
        "compare_policies",
        [](const SimConfig& config,
           const std::vector<std::pair<std::string, AgentPolicy>>& catalog) {
            return compare_policies(config, catalog);
        },
        py::arg("config"), py::arg("catalog"));

    m.def(
        "dilemma_matrix",
        [](const SimConfig& config, const AgentPolicy& coordinate) {
            const DilemmaResult r = dilemma_matrix(config, coordinate);
            py::dict out;
            py::list cells;
            for (int i = 0; i < 2; ++i) {
                py::list row;
                for (int j = 0; j < 2; ++j) {
                    py::dict cell;
                    cell["net"] = py::make_tuple(r.cells[i][j].net[0], r.cells[i][j].net[1]);
                    cell["fee"] = py::make_tuple(r.cells[i][j].fee[0], r.cells[i][j].fee[1]);
                    row.append(cell);
                }
                cells.append(row);
            }
            out["cells"] = cells;
            out["defect_gain"] = py::make_tuple(
                py::make_tuple(r.defect_gain[0][0], r.defect_gain[0][1]),
                py::make_tuple(r.defect_gain[1][0], r.defect_gain[1][1]));
            out["fee_saving"] = py::make_tuple(r.fee_saving[0], r.fee_saving[1]);
            out["dilemma_present"] = r.dilemma_present;
            return out;
        },
        py::arg("config"), py::arg("coordinate") = underreport_policy(1));

    m.def(
        "min_scale_for_honest_dominance",
        [](SimConfig config, const std::vector<double>& scales, const AgentPolicy& deviation) {
            return min_scale_for_honest_dominance(std::move(config), std::span(scales), deviation);
        },
        py::arg("config"), py::arg("scales"), py::arg("deviation"));

    py::class_<FrontierPoint>(m, "FrontierPoint")
        .def_readonly("honest_peers", &FrontierPoint::honest_peers)
        .def_readonly("gap", &FrontierPoint::gap);
    m.def(
        "honest_share_frontier",
        [](SimConfig config, const std::vector<int>& peers, const AgentPolicy& deviation) {
            return honest_share_frontier(std::move(config), std::span(peers), deviation);
        },
        py::arg("config"), py::arg("peer_counts"), py::arg("deviation"));
}

void bind_compliance(py::module_& m) {
    py::class_<PenaltySchedule>(m, "PenaltySchedule")
        .def(py::init([](double fine, double reward) {
                 PenaltySchedule s{Money::from_value(fine), Money::from_value(reward)};
                 validate_penalties(s);
                 return s;
             }),
             py::arg("collusion_fine"), py::arg("whistleblower_reward"))
        .def_readwrite("collusion_fine", &PenaltySchedule::collusion_fine)
        .def_readwrite("whistleblower_reward", &PenaltySchedule::whistleblower_reward);

    py::class_<RespondentFlag>(m, "RespondentFlag")
        .def_readonly("respondents", &RespondentFlag::respondents)
        .def_readonly("agreement", &RespondentFlag::agreement)
        .def_readonly("mean_l1", &RespondentFlag::mean_l1);

    py::class_<LedgerItem>(m, "LedgerItem")
        .def_readonly("respondent_id", &LedgerItem::respondent_id)
        .def_readonly("kind", &LedgerItem::kind)
        .def_readonly("delta", &LedgerItem::delta);

    py::class_<ComplianceReport>(m, "ComplianceReport")
        .def_readonly("flagged_groups", &ComplianceReport::flagged_groups)
        .def_readonly("ledger", &ComplianceReport::ledger)
        .def_readonly("net", &ComplianceReport::net);

    py::class_<PollEvent>(m, "PollEvent")
        .def(py::init([](std::string actor, std::string kind, std::int64_t timestamp) {
                 return PollEvent{std::move(actor), std::move(kind), timestamp};
             }),
             py::arg("actor"), py::arg("kind"), py::arg("timestamp"))
        .def_readwrite("actor", &PollEvent::actor)
        .def_readwrite("kind", &PollEvent::kind)
        .def_readwrite("timestamp", &PollEvent::timestamp);

    py::class_<PollViolation>(m, "PollViolation")
        .def_readonly("actor", &PollViolation::actor)
        .def_readonly("timestamp", &PollViolation::timestamp);

    m.def("detect_respondent_collusion", &detect_respondent_collusion, py::arg("round"),
          py::arg("threshold"));
    m.def("apply_penalties", &apply_penalties, py::arg("confirmed_groups"),
          py::arg("whistleblowers"), py::arg("schedule"));
    m.def("parse_iso8601_utc", &parse_iso8601_utc, py::arg("text"));
    m.def("parse_event_log", &parse_event_log, py::arg("text"));
    m.def(
        "check_pre_survey_poll_bar",
        [](const std::vector<PollEvent>& events, const std::vector<std::string>& indemnified,
           std::int64_t survey_date, int blackout_days) {
            return check_pre_survey_poll_bar(std::span(events), std::span(indemnified),
                                             survey_date, blackout_days);
        },
        py::arg("events"), py::arg("indemnified"), py::arg("survey_date"),
        py::arg("blackout_days"));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() =
        "Mechanism engine for risk markets: truth-serum survey scoring, compute-indexed\n"
        "expected-loss fees, quadratic financing, collusion checks and a Monte Carlo\n"
        "incentive harness.";

    py::register_exception<MechError>(m, "MechError");

    bind_survey(m);
    bind_pricing(m);
    bind_qf(m);
    bind_sim(m);
    bind_compliance(m);

#ifdef RISKMECH_VERSION
    m.attr("__version__") = RISKMECH_VERSION;
#else
    m.attr("__version__") = "dev";
#endif
}
