#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <set>
#include <string>

#include "wstreamlet/experiments.hpp"
#include "wstreamlet/rng.hpp"
#include "wstreamlet/scenario.hpp"

using namespace wstreamlet;
using config::ScenarioConfig;
using scenario::ResultRow;
using scenario::ResultTable;

namespace {

// Returns the error text of a rejected config, or "" if it parsed.
std::string parse_error(const std::string& json) {
    try {
        ScenarioConfig::parse(json);
    } catch (const std::invalid_argument& e) {
        return e.what();
    }
    return "";
}

std::string validate_error(const ScenarioConfig& c) {
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("experiment presets") {
    ScenarioConfig e1 = ScenarioConfig::defaults_for("E1");
    CHECK(e1.experiment == "E1");
    CHECK(e1.channel == config::ChannelType::TwoClass);
    CHECK(e1.alpha == 3.0);
    CHECK(e1.n == 10);
    CHECK(e1.f() == 3);
    CHECK(e1.epochs == 20000);
    CHECK(e1.runs == 20);
    CHECK(e1.seed == 1);

    ScenarioConfig e3 = ScenarioConfig::defaults_for("E3");
    CHECK(e3.n == 4);
    CHECK(e3.channel == config::ChannelType::Homogeneous);

    ScenarioConfig e4 = ScenarioConfig::defaults_for("E4");
    CHECK(e4.runs == 1);
    CHECK(e4.s == 20);

    ScenarioConfig e6 = ScenarioConfig::defaults_for("E6");
    CHECK(e6.runs == 1);
    CHECK(e6.channel == config::ChannelType::Homogeneous);

    for (const char* id : {"E1", "E2", "E3", "E4", "E5", "E6"})
        CHECK_NOTHROW(ScenarioConfig::defaults_for(id).validate());
}

TEST_CASE("parse overlays the file onto the preset") {
    ScenarioConfig base = ScenarioConfig::parse("{}");
    CHECK(base.to_json() == ScenarioConfig::defaults_for("E1").to_json());

    ScenarioConfig e3 = ScenarioConfig::parse(R"({"experiment":"E3"})");
    CHECK(e3.n == 4);
    CHECK(e3.channel == config::ChannelType::Homogeneous);

    ScenarioConfig c = ScenarioConfig::parse(
        R"({"experiment":"E1","beta":0.25,"policy":"oracle","seed":42,"n":13})");
    CHECK(c.beta == 0.25);
    CHECK(c.policy == config::Policy::Oracle);
    CHECK(c.seed == 42);
    CHECK(c.n == 13);
    CHECK(c.f() == 4);             // recomputed from the larger n
    CHECK(c.alpha == 3.0);         // preset fields survive the overlay
    CHECK(c.channel == config::ChannelType::TwoClass);

    ScenarioConfig fo = ScenarioConfig::parse(R"({"f":2})");
    CHECK(fo.f() == 2);  // explicit bound wins over floor((n-1)/3)
}

TEST_CASE("parse rejects anything it does not understand") {
    CHECK(contains(parse_error(R"({"betaa":0.1})"), "unknown field `betaa`"));
    CHECK(contains(parse_error(R"({"n":"ten"})"), "wrong type"));
    CHECK(contains(parse_error(R"({"policy":"roundrobin"})"), "unknown value"));
    CHECK(contains(parse_error(R"({"channel":"mesh"})"), "unknown value"));
    CHECK(contains(parse_error("[1,2]"), "JSON object"));
    CHECK(contains(parse_error("definitely not json"), "not valid JSON"));
    CHECK(contains(parse_error(R"({"experiment":7})"), "experiment"));
}

TEST_CASE("validation names the offending field") {
    ScenarioConfig c = ScenarioConfig::defaults_for("E1");
    c.p_h = 1.5;
    CHECK(contains(validate_error(c), "`p_h`"));

    c = ScenarioConfig::defaults_for("E1");
    c.runs = 0;
    CHECK(contains(validate_error(c), "`runs`"));

    c = ScenarioConfig::defaults_for("E1");
    c.f_override = 4;  // 3*4+1 > 10
    CHECK(contains(validate_error(c), "`f`"));

    c = ScenarioConfig::defaults_for("E1");
    c.m = 4;  // payload needs 6 source symbols
    CHECK(contains(validate_error(c), "`m`"));

    c = ScenarioConfig::defaults_for("E1");
    c.experiment = "E9";
    CHECK(contains(validate_error(c), "`experiment`"));

    CHECK(contains(parse_error(R"({"per":-0.2})"), "`per`"));
}

TEST_CASE("config json round trip is a fixpoint") {
    for (const char* id : {"E1", "E2", "E3", "E4", "E5", "E6"}) {
        CAPTURE(id);
        std::string text = ScenarioConfig::defaults_for(id).to_json();
        CHECK(ScenarioConfig::parse(text).to_json() == text);
    }
}

TEST_CASE("student t quantiles") {
    CHECK(scenario::student_t_975(1) == doctest::Approx(12.706));
    CHECK(scenario::student_t_975(19) == doctest::Approx(2.093));
    CHECK(scenario::student_t_975(30) == doctest::Approx(2.042));
    CHECK(scenario::student_t_975(35) == doctest::Approx(2.021));
    CHECK(scenario::student_t_975(60) == doctest::Approx(2.000));
    CHECK(scenario::student_t_975(100) == doctest::Approx(1.980));
    CHECK(scenario::student_t_975(10000) == doctest::Approx(1.960));
    CHECK_THROWS_AS(scenario::student_t_975(0), std::invalid_argument);
}

TEST_CASE("row aggregation") {
    ResultRow r;
    r.samples = {1, 2, 3, 4, 5};
    scenario::finalize_row(r);
    CHECK(r.runs == 5);
    CHECK(r.mean == doctest::Approx(3.0));
    // sample sd sqrt(2.5), sem sqrt(0.5), t(4) = 2.776
    CHECK(r.ci95 == doctest::Approx(2.776 * std::sqrt(0.5)));

    ResultRow single;
    single.samples = {7.5};
    scenario::finalize_row(single);
    CHECK(single.runs == 1);
    CHECK(single.mean == 7.5);
    CHECK(single.ci95 == 0.0);

    ResultRow empty;
    scenario::finalize_row(empty);
    CHECK(empty.runs == 0);
    CHECK(empty.mean == 0.0);
    CHECK(empty.ci95 == 0.0);
}

TEST_CASE("intervals cover the true mean at their stated level") {
    // 2000 synthetic 20-run rows drawn from a known normal population; the
    // t-based half width should cover the true mean 95% of the time
    RngStream rng(99);
    const int groups = 2000;
    const int per_group = 20;
    const double mu = 5.0;
    int covered = 0;
    for (int g = 0; g < groups; ++g) {
        ResultRow r;
        for (int i = 0; i < per_group; ++i) {
            double u1 = 1.0 - rng.next_unit();
            double u2 = rng.next_unit();
            double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
            r.samples.push_back(mu + z);
        }
        scenario::finalize_row(r);
        if (std::abs(r.mean - mu) <= r.ci95) ++covered;
    }
    double coverage = static_cast<double>(covered) / groups;
    CHECK(std::abs(coverage - 0.95) < 0.02);
}

TEST_CASE("number formatting survives a round trip") {
    for (double v : {1.0 / 3.0, 0.818781, 1e-9, 6.02e23, 12345.678901, 0.1, 3.0, 0.0}) {
        CAPTURE(v);
        CHECK(std::strtod(scenario::format_double(v).c_str(), nullptr) == v);
    }
    CHECK(scenario::format_double(0.1) == "0.1");
}

TEST_CASE("closed-form experiments emit their full row grids") {
    ResultTable e6 = experiments::run_experiment(ScenarioConfig::defaults_for("E6"));
    CHECK(e6.rows.size() == 39);
    int expected_epochs_rows = 0;
    for (const ResultRow& r : e6.rows) {
        CHECK(r.runs == 1);
        CHECK(r.ci95 == 0.0);
        if (r.metric == "expected_epochs") {
            ++expected_epochs_rows;
            if (r.sweep == "q=1.0") CHECK(r.mean == 3.0);
        }
        if (r.metric == "k_tx_best") CHECK(r.mean == 2.0);
    }
    CHECK(expected_epochs_rows == 6);

    ResultTable e4 = experiments::run_experiment(ScenarioConfig::defaults_for("E4"));
    CHECK(e4.rows.size() == 18);
    for (const ResultRow& r : e4.rows) CHECK(r.metric == "per_node_storage_bytes");

    ResultTable e5 = experiments::run_experiment(ScenarioConfig::defaults_for("E5"));
    CHECK(e5.rows.size() == 10);
    std::set<std::string> modes;
    for (const ResultRow& r : e5.rows) modes.insert(r.mode);
    CHECK(modes == std::set<std::string>{"full_sync", "state_first"});
}

TEST_CASE("a small sweep reruns byte for byte") {
    ScenarioConfig cfg = ScenarioConfig::defaults_for("E1");
    cfg.epochs = 200;
    cfg.runs = 2;
    cfg.seed = 9;

    ResultTable t1 = experiments::run_experiment(cfg);
    ResultTable t2 = experiments::run_experiment(cfg);
    CHECK(scenario::emit_csv(t1) == scenario::emit_csv(t2));
    CHECK(scenario::emit_json(t1) == scenario::emit_json(t2));

    REQUIRE(t1.rows.size() == 18);  // 6 fade fractions x 3 policies
    const char* cycle[] = {"cale", "random", "oracle"};
    for (size_t i = 0; i < t1.rows.size(); ++i) {
        const ResultRow& r = t1.rows[i];
        CHECK(r.mode == cycle[i % 3]);
        CHECK(r.metric == "notarization_rate");
        CHECK(r.runs == 2);
        CHECK(r.samples.size() == 2);
        CHECK(r.mean >= 0.0);
        CHECK(r.mean <= 1.0);
        CHECK(r.sweep.rfind("beta=", 0) == 0);
        CHECK(r.seed == 9);
    }
    CHECK(t1.rows[0].sweep == "beta=0.0");
    CHECK(t1.rows[15].sweep == "beta=0.5");

    // a different seed actually changes the samples
    cfg.seed = 10;
    ResultTable t3 = experiments::run_experiment(cfg);
    CHECK(scenario::emit_json(t3) != scenario::emit_json(t1));
}

TEST_CASE("csv layout") {
    ResultTable t = experiments::run_experiment(ScenarioConfig::defaults_for("E6"));
    std::string csv = scenario::emit_csv(t);

    std::vector<std::string> lines;
    size_t pos = 0;
    while (pos < csv.size()) {
        size_t nl = csv.find('\n', pos);
        lines.push_back(csv.substr(pos, nl - pos));
        pos = nl + 1;
    }
    REQUIRE(lines.size() == t.rows.size() + 2);
    CHECK(lines[0].rfind("# {", 0) == 0);
    CHECK(lines[1] == "experiment,sweep,mode,metric,mean,ci95,runs,seed");

    // the comment line echoes the exact resolved config
    ScenarioConfig echoed = ScenarioConfig::parse(lines[0].substr(2));
    CHECK(echoed.to_json() == t.config.to_json());

    for (size_t i = 2; i < lines.size(); ++i) {
        size_t commas = 0;
        for (char ch : lines[i]) commas += ch == ',';
        CHECK(commas == 7);
    }
}

TEST_CASE("json emit-parse-emit is a fixpoint") {
    ResultTable t = experiments::run_experiment(ScenarioConfig::defaults_for("E6"));
    std::string j1 = scenario::emit_json(t);
    ResultTable back = scenario::parse_json(j1);
    CHECK(scenario::emit_json(back) == j1);

    REQUIRE(back.rows.size() == t.rows.size());
    for (size_t i = 0; i < t.rows.size(); ++i) {
        CHECK(back.rows[i].sweep == t.rows[i].sweep);
        CHECK(back.rows[i].samples == t.rows[i].samples);
        CHECK(back.rows[i].mean == t.rows[i].mean);
    }

    CHECK_THROWS_AS(scenario::parse_json("nope"), std::invalid_argument);
    CHECK_THROWS(scenario::parse_json("{}"));  // missing config and rows
}

TEST_CASE("the runner rejects configs the schema rejects") {
    ScenarioConfig bad = ScenarioConfig::defaults_for("E1");
    bad.experiment = "E7";
    CHECK_THROWS_AS(experiments::run_experiment(bad), std::invalid_argument);

    ScenarioConfig zero = ScenarioConfig::defaults_for("E2");
    zero.runs = 0;
    CHECK_THROWS_AS(experiments::run_experiment(zero), std::invalid_argument);
}
