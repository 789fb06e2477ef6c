#include "riskmech/config.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace riskmech {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void schema_fail(const std::string& path, const std::string& why) {
    fail("schema-error", path + ": " + why);
}

const json& member(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) schema_fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) schema_fail(path + "." + key, "missing required field");
    return *it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) schema_fail(path, "expected a number");
    return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) schema_fail(path, "expected an integer");
    return j.get<int>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) schema_fail(path, "expected a string");
    return j.get<std::string>();
}

std::vector<double> as_number_array(const json& j, const std::string& path) {
    if (!j.is_array()) schema_fail(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<std::string> as_string_array(const json& j, const std::string& path) {
    if (!j.is_array()) schema_fail(path, "expected an array of strings");
    std::vector<std::string> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(as_string(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<Bucket> parse_buckets(const json& j, const std::string& path) {
    if (!j.is_array()) schema_fail(path, "expected an array of buckets");
    std::vector<Bucket> buckets;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        Bucket b;
        b.lo = as_number(member(j[i], "lo", p), p + ".lo");
        b.hi = as_number(member(j[i], "hi", p), p + ".hi");
        b.midpoint = as_number(member(j[i], "mid", p), p + ".mid");
        buckets.push_back(b);
    }
    return buckets;
}

SurveyRound parse_survey(const json& j, const std::string& path) {
    SurveyRound round;
    round.alpha = as_number(member(j, "alpha", path), path + ".alpha");
    round.payout_scale = as_number(member(j, "payout_scale", path), path + ".payout_scale");
    if (j.contains("interval_label"))
        round.interval_label = as_string(j["interval_label"], path + ".interval_label");

    const json& questions = member(j, "questions", path);
    if (!questions.is_array()) schema_fail(path + ".questions", "expected an array");
    for (std::size_t i = 0; i < questions.size(); ++i) {
        const std::string p = path + ".questions[" + std::to_string(i) + "]";
        const json& q = questions[i];
        Question question;
        question.id = as_string(member(q, "id", p), p + ".id");
        if (q.contains("prompt")) question.prompt = as_string(q["prompt"], p + ".prompt");
        question.scenario_id = as_string(member(q, "scenario_id", p), p + ".scenario_id");
        question.compute_tier = as_int(member(q, "compute_tier", p), p + ".compute_tier");
        if (q.contains("time_frame_years"))
            question.time_frame_years = as_number(q["time_frame_years"], p + ".time_frame_years");
        question.buckets = parse_buckets(member(q, "buckets", p), p + ".buckets");
        round.questions.push_back(std::move(question));
    }

    const json& respondents = member(j, "respondents", path);
    if (!respondents.is_array()) schema_fail(path + ".respondents", "expected an array");
    for (std::size_t i = 0; i < respondents.size(); ++i) {
        const std::string p = path + ".respondents[" + std::to_string(i) + "]";
        const json& r = respondents[i];
        Respondent person;
        person.id = as_string(member(r, "id", p), p + ".id");
        person.role = role_from_string(as_string(member(r, "role", p), p + ".role"));
        if (r.contains("participation_history"))
            person.participation_history =
                as_int(r["participation_history"], p + ".participation_history");
        round.respondents.push_back(std::move(person));
    }

    const json& responses = member(j, "responses", path);
    if (!responses.is_array()) schema_fail(path + ".responses", "expected an array");
    for (std::size_t i = 0; i < responses.size(); ++i) {
        const std::string p = path + ".responses[" + std::to_string(i) + "]";
        const json& r = responses[i];
        Response response;
        response.respondent_id = as_string(member(r, "respondent_id", p), p + ".respondent_id");
        response.question_id = as_string(member(r, "question_id", p), p + ".question_id");
        response.endorsement = as_int(member(r, "endorsement", p), p + ".endorsement");
        response.prediction = as_number_array(member(r, "prediction", p), p + ".prediction");
        round.responses.push_back(std::move(response));
    }
    return round;
}

FeeScheduleParams parse_fee_schedule(const json& j, const std::string& path) {
    FeeScheduleParams params;
    if (j.contains("interval_label"))
        params.interval_label = as_string(j["interval_label"], path + ".interval_label");
    params.tiers = as_number_array(member(j, "tiers", path), path + ".tiers");
    params.threshold = as_number(member(j, "threshold", path), path + ".threshold");
    if (j.contains("discount_rate"))
        params.discount.rate = as_number(j["discount_rate"], path + ".discount_rate");
    if (j.contains("discount_cap"))
        params.discount.cap = as_number(j["discount_cap"], path + ".discount_cap");
    if (j.contains("allow_extrapolation")) {
        if (!j["allow_extrapolation"].is_boolean())
            schema_fail(path + ".allow_extrapolation", "expected a boolean");
        params.allow_extrapolation = j["allow_extrapolation"].get<bool>();
    }
    const json& dis = member(j, "disutilities", path);
    if (!dis.is_object()) schema_fail(path + ".disutilities", "expected an object");
    for (const auto& [scenario, value] : dis.items())
        params.disutilities.by_scenario[scenario] =
            as_number(value, path + ".disutilities." + scenario);
    return params;
}

QfRound parse_qf(const json& j, const std::string& path) {
    QfRound round;
    round.matching_budget =
        Money::from_value(as_number(member(j, "matching_budget", path), path + ".matching_budget"));

    const json& projects = member(j, "projects", path);
    if (!projects.is_array()) schema_fail(path + ".projects", "expected an array");
    for (std::size_t i = 0; i < projects.size(); ++i) {
        const std::string p = path + ".projects[" + std::to_string(i) + "]";
        Project project;
        project.id = as_string(member(projects[i], "id", p), p + ".id");
        if (projects[i].contains("title"))
            project.title = as_string(projects[i]["title"], p + ".title");
        if (projects[i].contains("proposers"))
            project.proposer_ids = as_string_array(projects[i]["proposers"], p + ".proposers");
        round.projects.push_back(std::move(project));
    }

    const json& contributions = member(j, "contributions", path);
    if (!contributions.is_array()) schema_fail(path + ".contributions", "expected an array");
    for (std::size_t i = 0; i < contributions.size(); ++i) {
        const std::string p = path + ".contributions[" + std::to_string(i) + "]";
        Contribution c;
        c.contributor_id = as_string(member(contributions[i], "contributor_id", p), p + ".contributor_id");
        c.project_id = as_string(member(contributions[i], "project_id", p), p + ".project_id");
        c.amount = Money::from_value(as_number(member(contributions[i], "amount", p), p + ".amount"));
        round.contributions.push_back(std::move(c));
    }

    if (j.contains("identity_links")) {
        const json& links = j["identity_links"];
        if (!links.is_array()) schema_fail(path + ".identity_links", "expected an array of pairs");
        for (std::size_t i = 0; i < links.size(); ++i) {
            const std::string p = path + ".identity_links[" + std::to_string(i) + "]";
            const auto pair = as_string_array(links[i], p);
            if (pair.size() != 2) schema_fail(p, "expected exactly two contributor ids");
            round.identity_links.emplace_back(pair[0], pair[1]);
        }
    }
    return round;
}

AgentPolicy parse_policy(const json& j, const std::string& path) {
    AgentPolicy policy;
    const std::string kind = as_string(member(j, "kind", path), path + ".kind");
    if (kind == "honest") {
        policy = honest_policy();
    } else if (kind == "underreport") {
        policy = underreport_policy(j.contains("shift") ? as_int(j["shift"], path + ".shift") : 1);
        if (policy.shift < 1) schema_fail(path + ".shift", "shift must be >= 1");
    } else if (kind == "fixed") {
        policy = fixed_policy(as_int(member(j, "bucket", path), path + ".bucket"));
    } else if (kind == "flipped") {
        policy = flipped_policy();
    } else if (kind == "colluder") {
        policy = colluder_policy(as_string(member(j, "coalition", path), path + ".coalition"),
                                 as_int(member(j, "bucket", path), path + ".bucket"));
    } else {
        schema_fail(path + ".kind", "unknown policy kind '" + kind + "'");
    }
    if (j.contains("prediction")) {
        const json& pred = j["prediction"];
        if (pred.is_string() && pred.get<std::string>() == "bayes") {
            policy.prediction_rule = AgentPolicy::PredictionRule::bayes;
        } else if (pred.is_object() && pred.contains("fabricated")) {
            policy.prediction_rule = AgentPolicy::PredictionRule::fabricated;
            policy.fabricated = as_number_array(pred["fabricated"], path + ".prediction.fabricated");
        } else {
            schema_fail(path + ".prediction", "expected \"bayes\" or {\"fabricated\": [...]}");
        }
    }
    return policy;
}

SimSpec parse_sim(const json& j, const std::string& path, std::uint64_t master_seed, double delta) {
    SimSpec spec;
    SimConfig& config = spec.config;
    config.master_seed = master_seed;
    config.delta = delta;

    const json& model = member(j, "world_model", path);
    config.model.states = as_string_array(member(model, "states", path + ".world_model"),
                                          path + ".world_model.states");
    config.model.prior = as_number_array(member(model, "prior", path + ".world_model"),
                                         path + ".world_model.prior");
    const json& rows = member(model, "signal_likelihoods", path + ".world_model");
    if (!rows.is_array()) schema_fail(path + ".world_model.signal_likelihoods", "expected an array");
    for (std::size_t i = 0; i < rows.size(); ++i)
        config.model.signal_likelihoods.push_back(as_number_array(
            rows[i], path + ".world_model.signal_likelihoods[" + std::to_string(i) + "]"));

    config.question.buckets = parse_buckets(member(j, "buckets", path), path + ".buckets");
    if (j.contains("scenario_id"))
        config.question.scenario_id = as_string(j["scenario_id"], path + ".scenario_id");

    const json& roster = member(j, "roster", path);
    if (!roster.is_array()) schema_fail(path + ".roster", "expected an array");
    for (std::size_t i = 0; i < roster.size(); ++i) {
        const std::string p = path + ".roster[" + std::to_string(i) + "]";
        SimAgent agent;
        agent.id = as_string(member(roster[i], "id", p), p + ".id");
        agent.role = role_from_string(as_string(member(roster[i], "role", p), p + ".role"));
        if (roster[i].contains("participation_history"))
            agent.participation_history =
                as_int(roster[i]["participation_history"], p + ".participation_history");
        agent.policy = parse_policy(member(roster[i], "policy", p), p + ".policy");
        config.roster.push_back(std::move(agent));
    }

    config.alpha = as_number(member(j, "alpha", path), path + ".alpha");
    config.payout_scale = as_number(member(j, "payout_scale", path), path + ".payout_scale");
    config.replicates = as_int(member(j, "replicates", path), path + ".replicates");
    if (j.contains("questions")) config.questions = as_int(j["questions"], path + ".questions");
    if (j.contains("test_agent")) {
        const std::string id = as_string(j["test_agent"], path + ".test_agent");
        bool found = false;
        for (std::size_t i = 0; i < config.roster.size(); ++i)
            if (config.roster[i].id == id) {
                config.test_agent = static_cast<int>(i);
                found = true;
            }
        if (!found) schema_fail(path + ".test_agent", "no roster agent with id '" + id + "'");
    }

    if (j.contains("fee_context")) {
        const json& f = j["fee_context"];
        const std::string p = path + ".fee_context";
        FeeContext ctx;
        ctx.tiers = as_number_array(member(f, "tiers", p), p + ".tiers");
        const json& dis = member(f, "disutilities", p);
        if (!dis.is_object()) schema_fail(p + ".disutilities", "expected an object");
        for (const auto& [scenario, value] : dis.items())
            ctx.disutilities.by_scenario[scenario] = as_number(value, p + ".disutilities." + scenario);
        ctx.threshold = as_number(member(f, "threshold", p), p + ".threshold");
        if (f.contains("discount_rate"))
            ctx.discount.rate = as_number(f["discount_rate"], p + ".discount_rate");
        if (f.contains("discount_cap"))
            ctx.discount.cap = as_number(f["discount_cap"], p + ".discount_cap");
        ctx.developer_ec =
            effective_compute(as_number(member(f, "developer_flops", p), p + ".developer_flops"),
                              as_number(member(f, "developer_efficiency", p), p + ".developer_efficiency"));
        const std::string mode = as_string(member(f, "mode", p), p + ".mode");
        if (mode == "silenced") {
            ctx.policy = FeePolicy::silenced;
        } else if (mode == "scaled_payout") {
            ctx.policy = FeePolicy::scaled_payout;
        } else {
            schema_fail(p + ".mode", "expected \"silenced\" or \"scaled_payout\"");
        }
        if (f.contains("developer_receives_payout")) {
            if (!f["developer_receives_payout"].is_boolean())
                schema_fail(p + ".developer_receives_payout", "expected a boolean");
            ctx.developer_receives_payout = f["developer_receives_payout"].get<bool>();
        }
        config.fee = std::move(ctx);
    }

    if (j.contains("deviations")) {
        const json& devs = j["deviations"];
        if (!devs.is_array()) schema_fail(path + ".deviations", "expected an array");
        for (std::size_t i = 0; i < devs.size(); ++i) {
            const std::string p = path + ".deviations[" + std::to_string(i) + "]";
            const std::string name = as_string(member(devs[i], "name", p), p + ".name");
            spec.deviations.emplace_back(name, parse_policy(devs[i], p));
        }
    }
    if (j.contains("scale_sweep"))
        spec.scale_sweep = as_number_array(j["scale_sweep"], path + ".scale_sweep");
    if (j.contains("frontier_peers")) {
        std::vector<int> peers;
        for (double v : as_number_array(j["frontier_peers"], path + ".frontier_peers"))
            peers.push_back(static_cast<int>(v));
        spec.frontier_peers = std::move(peers);
    }
    if (j.contains("dilemma")) {
        if (!j["dilemma"].is_boolean()) schema_fail(path + ".dilemma", "expected a boolean");
        spec.run_dilemma = j["dilemma"].get<bool>();
    }
    return spec;
}

ComplianceSpec parse_compliance(const json& j, const std::string& path) {
    ComplianceSpec spec;
    if (j.contains("threshold")) spec.threshold = as_number(j["threshold"], path + ".threshold");
    if (j.contains("penalties")) {
        const json& p = j["penalties"];
        PenaltySchedule schedule;
        schedule.collusion_fine = Money::from_value(
            as_number(member(p, "collusion_fine", path + ".penalties"), path + ".penalties.collusion_fine"));
        schedule.whistleblower_reward = Money::from_value(
            as_number(member(p, "whistleblower_reward", path + ".penalties"),
                      path + ".penalties.whistleblower_reward"));
        validate_penalties(schedule);
        spec.penalties = schedule;
    }
    if (j.contains("confirmed_groups")) {
        const json& groups = j["confirmed_groups"];
        if (!groups.is_array()) schema_fail(path + ".confirmed_groups", "expected an array");
        for (std::size_t i = 0; i < groups.size(); ++i)
            spec.confirmed_groups.push_back(as_string_array(
                groups[i], path + ".confirmed_groups[" + std::to_string(i) + "]"));
    }
    if (j.contains("whistleblowers"))
        spec.whistleblowers = as_string_array(j["whistleblowers"], path + ".whistleblowers");
    if (j.contains("survey_date"))
        spec.survey_date = parse_iso8601_utc(as_string(j["survey_date"], path + ".survey_date"));
    if (j.contains("blackout_days"))
        spec.blackout_days = as_int(j["blackout_days"], path + ".blackout_days");
    if (j.contains("event_log_path"))
        spec.event_log_path = as_string(j["event_log_path"], path + ".event_log_path");
    if (j.contains("indemnified"))
        spec.indemnified = as_string_array(j["indemnified"], path + ".indemnified");
    return spec;
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail("schema-error", std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) fail("schema-error", "config root must be an object");

    ScenarioConfig config;
    config.schema_version = as_int(member(j, "schema_version", "config"), "config.schema_version");
    if (config.schema_version != 1)
        fail("schema-error", "config.schema_version: unsupported version " +
                                 std::to_string(config.schema_version));
    const json& seed = member(j, "master_seed", "config");
    if (!seed.is_number_unsigned() && !seed.is_number_integer())
        fail("schema-error", "config.master_seed: expected an integer");
    config.master_seed = seed.get<std::uint64_t>();

    if (j.contains("delta")) config.delta = as_number(j["delta"], "config.delta");
    if (j.contains("out_dir")) {
        fs::path p(as_string(j["out_dir"], "config.out_dir"));
        config.out_dir = (p.is_relative() ? fs::path(base_dir) / p : p).string();
    }
    if (j.contains("payout_floor"))
        config.payout_floor = as_number(j["payout_floor"], "config.payout_floor");

    if (j.contains("survey")) config.survey = parse_survey(j["survey"], "config.survey");
    if (j.contains("fee_schedule"))
        config.fee_schedule = parse_fee_schedule(j["fee_schedule"], "config.fee_schedule");
    if (j.contains("qf")) {
        config.qf = parse_qf(j["qf"], "config.qf");
        if (j["qf"].contains("collusion_threshold"))
            config.qf_collusion_threshold =
                as_number(j["qf"]["collusion_threshold"], "config.qf.collusion_threshold");
    }
    if (j.contains("simulation"))
        config.sim = parse_sim(j["simulation"], "config.simulation", config.master_seed, config.delta);
    if (j.contains("compliance")) {
        config.compliance = parse_compliance(j["compliance"], "config.compliance");
        if (config.compliance->event_log_path) {
            fs::path p(*config.compliance->event_log_path);
            if (p.is_relative()) config.compliance->event_log_path = (fs::path(base_dir) / p).string();
        }
    }
    config.config_hash = hash_hex(fnv1a64(text));
    return config;
}

ScenarioConfig load_config(const std::string& path) {
    return parse_config_text(read_file(path), fs::path(path).parent_path().string());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("schema-error", "cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_double(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, result.ptr);
}

void commit_reports(const std::vector<std::pair<std::string, std::string>>& files) {
    std::vector<std::pair<fs::path, fs::path>> staged;  // (tmp, final)
    try {
        for (const auto& [path, content] : files) {
            fs::path final_path(path);
            if (final_path.has_parent_path()) fs::create_directories(final_path.parent_path());
            fs::path tmp = final_path;
            tmp += ".tmp";
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) fail("io-error", "cannot write '" + tmp.string() + "'");
            out << content;
            out.flush();
            if (!out) fail("io-error", "short write to '" + tmp.string() + "'");
            out.close();
            staged.emplace_back(tmp, final_path);
        }
        for (const auto& [tmp, final_path] : staged) fs::rename(tmp, final_path);
    } catch (...) {
        std::error_code ec;
        for (const auto& [tmp, final_path] : staged) fs::remove(tmp, ec);
        throw;
    }
}

void validate_report_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail("schema-error", std::string("report is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) fail("schema-error", "report root must be an object");
    for (const char* key : {"schema_version", "command", "config_hash", "master_seed"})
        if (!j.contains(key))
            fail("schema-error", std::string("report missing required field '") + key + "'");
    if (!j["schema_version"].is_number_integer()) fail("schema-error", "report schema_version must be an integer");
    if (!j["command"].is_string()) fail("schema-error", "report command must be a string");
    if (!j["config_hash"].is_string()) fail("schema-error", "report config_hash must be a string");
}

}  // namespace riskmech
