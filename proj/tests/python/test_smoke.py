"""Smoke tests for the python bindings. Runnable directly or under pytest."""

import math

import riskmech as rm


def worked_round():
    bucket_lo = rm.Bucket(0.0, 0.5, 0.25)
    bucket_hi = rm.Bucket(0.5, 1.0, 0.75)

    question = rm.Question()
    question.id = "q1"
    question.scenario_id = "cyber"
    question.compute_tier = 0
    question.buckets = [bucket_lo, bucket_hi]

    round_ = rm.SurveyRound()
    round_.alpha = 1.0
    round_.payout_scale = 1000.0
    round_.interval_label = "2030"
    round_.questions = [question]
    round_.respondents = [
        rm.Respondent("r1", rm.Role.developer),
        rm.Respondent("r2"),
        rm.Respondent("r3"),
    ]
    round_.responses = [
        rm.Response("r1", "q1", 0, [0.7, 0.3]),
        rm.Response("r2", "q1", 0, [0.6, 0.4]),
        rm.Response("r3", "q1", 1, [0.5, 0.5]),
    ]
    return round_


def test_scoring_matches_worked_values():
    round_ = worked_round()
    scores = rm.score_round(round_)
    assert len(scores) == 3
    assert abs(scores[0].information_score - 0.11475080798) < 1e-9
    assert abs(scores[2].total - (-0.21744172868)) < 1e-9
    assert abs(sum(s.total for s in scores)) < 1e-9

    paid = rm.payouts(round_, scores, 1000.0)
    assert paid["r1"].minor == 11216

    xbar = rm.endorsement_frequencies(round_, "q1")
    assert abs(xbar[0] - 2.0 / 3.0) < 1e-12


def test_error_codes_surface_as_exceptions():
    round_ = worked_round()
    round_.responses = round_.responses[:1]
    try:
        rm.score_round(round_)
    except rm.MechError as e:
        assert "incomplete-round" in str(e)
    else:
        raise AssertionError("expected MechError")


def test_fee_pipeline():
    round_ = worked_round()
    schedule = rm.publish_schedule(
        round_,
        tiers=[1e24],
        disutilities=rm.DisutilityTable({"cyber": 1e9}),
        threshold=1e23,
    )
    ec = rm.effective_compute(1e24, 1.0)
    assert rm.requires_participation(ec, schedule)
    # aggregated risk: (2/3)*0.25 + (1/3)*0.75 = 5/12
    assert abs(rm.aggregate_risk(round_, "cyber", 0) - 5.0 / 12.0) < 1e-12
    fee = rm.base_fee(ec, schedule)
    assert abs(fee - 5.0 / 12.0 * 1e9) < 1e-3
    silenced = rm.individualized_fee("r1", ec, schedule, round_, rm.FeePolicy.silenced)
    assert silenced > 0.0


def test_qf_matching():
    assert rm.ideal_match_values([9.0]).value == 9.0
    assert rm.ideal_match_values([4.0, 4.0]).value == 16.0

    round_ = rm.QfRound()
    round_.projects = [rm.Project("b"), rm.Project("c")]
    round_.contributions = [
        rm.Contribution("x", "b", 4.0),
        rm.Contribution("y", "b", 4.0),
        rm.Contribution("p", "c", 1.0),
        rm.Contribution("q", "c", 1.0),
        rm.Contribution("r", "c", 1.0),
        rm.Contribution("s", "c", 1.0),
    ]
    round_.matching_budget = rm.Money(10.0)
    results = rm.allocate(round_)
    assert [r.scaled_subsidy.value for r in results] == [4.0, 6.0]


def test_simulation_and_posterior():
    model = rm.WorldModel(["good", "bad"], [0.5, 0.5], [[0.8, 0.2], [0.2, 0.8]])
    predictive = rm.posterior_predictive(0, model)
    assert abs(predictive[0] - 0.68) < 1e-12

    config = rm.SimConfig()
    config.model = model
    config.roster = [rm.SimAgent("dev", rm.Role.developer)] + [
        rm.SimAgent(f"e{i}") for i in range(10)
    ]
    config.replicates = 400
    config.master_seed = 7
    config.payout_scale = 100.0

    tie = rm.payout_gap(rm.honest_policy(), rm.honest_policy(), config)
    assert tie.mean == 0.0

    report = rm.compare_policies(config, rm.default_deviation_catalog(2))
    assert report.honest.replicates == 400
    assert len(report.deviations) == 4

    again = rm.compare_policies(config, rm.default_deviation_catalog(2))
    assert again.honest.mean == report.honest.mean  # deterministic


def test_compliance():
    schedule = rm.PenaltySchedule(1e6, 1e5)
    report = rm.apply_penalties([["a", "b"]], ["w"], schedule)
    assert report.net["a"].value == -1e6
    assert report.net["w"].value == 1e5

    survey = rm.parse_iso8601_utc("2030-06-01")
    events = [rm.PollEvent("dev1", "private-poll", rm.parse_iso8601_utc("2030-05-22"))]
    violations = rm.check_pre_survey_poll_bar(events, ["dev1"], survey, 30)
    assert len(violations) == 1 and violations[0].actor == "dev1"


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok {test.__name__}")
    print(f"{len(tests)} smoke tests passed ({rm.__version__})")


if __name__ == "__main__":
    main()
