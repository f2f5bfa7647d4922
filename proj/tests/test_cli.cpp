#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "ncz/experiments.hpp"

using namespace ncz;

TEST_CASE("minimal config gets defaults") {
    const Config cfg = parse_config("experiment = cz_identities\ngrid.d = 2\ngrid.K = 4\n");
    CHECK(cfg.experiment == "cz_identities");
    CHECK(cfg.d == 2);
    CHECK(cfg.depth == 4);
    CHECK(cfg.n == 1);
    CHECK(cfg.samples == 50);
    CHECK(cfg.format == "summary");
}

TEST_CASE("unknown experiment and unknown keys are rejected with guidance") {
    try {
        parse_config("experiment = nosuch\n");
        FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("cz_identities") != std::string::npos);
        CHECK(msg.find("weak_type_scan") != std::string::npos);
    }

    try {
        parse_config("grid.nn = 1\n");
        FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_config("grid.d = banana\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config("grid.n = 3\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config("format = xml\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config("lacunary.s_min = 4\nlacunary.s_max = 4\n"),
                    std::invalid_argument);
}

TEST_CASE("config round-trips through its canonical form") {
    Config cfg = parse_config(
        "experiment = gundy\n"
        "grid.n = 1\ngrid.K = 5\ngrid.d = 3\ngrid.pad = 1\n"
        "lacunary.s_min = -4\nlacunary.s_max = auto\n"
        "lambda.ell_min = -1\nlambda.ell_max = 2\n"
        "ensemble.samples = 12\nensemble.seed = 99\nensemble.spikes = 2\n"
        "operator.kind = dyadic_hilbert\nformat = json\njobs = 2\n");
    const Config back = parse_config(emit_config(cfg));
    CHECK(back == cfg);

    cfg.s_max_auto = false;
    cfg.s_max = 5;
    CHECK(parse_config(emit_config(cfg)) == cfg);
}

TEST_CASE("comments and blank lines are tolerated") {
    const Config cfg = parse_config("# a comment\n\nexperiment = gundy  # trailing\n");
    CHECK(cfg.experiment == "gundy");
}

TEST_CASE("run_experiment validates its input") {
    Config cfg;
    cfg.experiment = "";
    CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}

TEST_CASE("reports serialize to json and csv with all records") {
    Config cfg;
    cfg.experiment = "shift_l2";
    cfg.samples = 4;
    cfg.seed = 5;
    cfg.depth = 4;
    cfg.d = 2;
    const ExperimentResult result = run_experiment(cfg);
    REQUIRE(result.failures() == 0);
    REQUIRE(!result.checks.empty());

    const std::string js = report_json(result);
    const auto parsed = nlohmann::json::parse(js);
    CHECK(parsed.at("schema_version").get<int>() == kReportSchemaVersion);
    CHECK(parsed.at("experiment").get<std::string>() == "shift_l2");
    CHECK(parsed.at("checks").size() == result.checks.size());
    CHECK(parsed.at("failures").get<int>() == 0);
    for (const auto& c : parsed.at("checks")) {
        CHECK(c.contains("name"));
        CHECK(c.contains("anchor"));
        CHECK(c.contains("value"));
        CHECK(c.contains("bound"));
        CHECK(c.contains("status"));
    }

    const std::string csv = report_csv(result);
    size_t lines = 0;
    for (char ch : csv)
        if (ch == '\n') ++lines;
    CHECK(lines == result.checks.size() + 1);  // header + one line per record

    // empty result is still a valid document
    ExperimentResult empty;
    empty.config = cfg;
    CHECK(nlohmann::json::parse(report_json(empty)).at("checks").empty());
    CHECK(report_csv(empty) == "name,anchor,value,bound,status,note\n");
}

TEST_CASE("reports are byte-deterministic under a fixed seed") {
    Config cfg;
    cfg.experiment = "gundy";
    cfg.samples = 6;
    cfg.seed = 2024;
    cfg.depth = 4;
    cfg.d = 2;
    const std::string a = report_json(run_experiment(cfg));
    const std::string b = report_json(run_experiment(cfg));
    CHECK(a == b);

    cfg.jobs = 4;
    const std::string c = report_json(run_experiment(cfg));
    CHECK(a == c);
}

TEST_CASE("measured-only records never fail a run") {
    Config cfg;
    cfg.experiment = "truncation_probe";
    cfg.samples = 6;
    cfg.seed = 11;
    cfg.depth = 4;
    cfg.d = 3;
    const ExperimentResult result = run_experiment(cfg);
    CHECK(result.failures() == 0);
    bool any_measured = false;
    for (const auto& c : result.checks) any_measured |= c.status == CheckStatus::measured;
    CHECK(any_measured);
}
