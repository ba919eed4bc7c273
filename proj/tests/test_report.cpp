#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "psilab/report.hpp"

using namespace psilab;

namespace {

VerificationReport sample_report() {
    VerificationReport r;
    r.suite_name = "demo";
    r.n = 2;
    r.samples = 10;
    r.set_param("r", 0.05);
    r.add_note("comment", "a, \"quoted\" note");
    r.set_value("ratio", 1.5);
    r.set_value("bad", std::numeric_limits<double>::infinity());
    r.set_series("grid", {0.0, 0.5});
    r.observe(0.25);
    r.observe(-1.0);
    r.fitted_constants = FittedConstants{2.0, 0.5};
    r.pass = true;
    return r;
}

}  // namespace

TEST_CASE("format_double round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(0.95) == "0.95");
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("csv quoting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\r\nlines") == "\"two\r\nlines\"");
}

TEST_CASE("report accessors") {
    const VerificationReport r = sample_report();
    CHECK(r.value("ratio") == 1.5);
    CHECK(r.param("r") == 0.05);
    CHECK(r.series_of("grid").size() == 2);
    CHECK_THROWS_AS(r.value("missing"), std::out_of_range);
    CHECK(r.extrema_min == -1.0);
    CHECK(r.extrema_max == 0.25);
    CHECK(r.consistent());

    VerificationReport bad = r;
    bad.violations = 1;
    CHECK_FALSE(bad.consistent());

    VerificationReport v;
    v.set_value("x", 1.0);
    v.set_value("x", 2.0);
    CHECK(v.values.size() == 1);
    CHECK(v.value("x") == 2.0);
}

TEST_CASE("json serialization") {
    const std::string text = report_to_json(sample_report(), R"({"n":2,"seed":7})");
    const auto j = nlohmann::ordered_json::parse(text);
    CHECK(j["schema_version"] == kReportSchemaVersion);
    CHECK(j["rng"] == "splitmix64-counter/v1");
    CHECK(j["config"]["seed"] == 7);
    CHECK(j["suite_name"] == "demo");
    CHECK(j["pass"] == true);
    CHECK(j["values"]["ratio"] == 1.5);
    CHECK(j["values"]["bad"] == "inf");
    CHECK(j["fitted_constants"]["epsilon"] == 0.5);
    CHECK(j["series"]["grid"][1] == 0.5);
    // Stable key order: the first keys appear in insertion order.
    auto it = j.begin();
    CHECK(it.key() == "schema_version");
    CHECK((++it).key() == "rng");
    CHECK(text == report_to_json(sample_report(), R"({"n":2,"seed":7})"));
}

TEST_CASE("csv serialization") {
    const std::string text = report_to_csv(sample_report(), {{"seed", "7"}});
    CHECK(text.rfind("section,key,value\r\n", 0) == 0);
    CHECK(text.find("config,seed,7\r\n") != std::string::npos);
    CHECK(text.find("notes,comment,\"a, \"\"quoted\"\" note\"\r\n") != std::string::npos);
    CHECK(text.find("series,grid,0 0.5\r\n") != std::string::npos);
    CHECK(text.find("values,bad,inf\r\n") != std::string::npos);
}

TEST_CASE("merging reports") {
    VerificationReport all;
    all.suite_name = "module";
    all.pass = true;
    VerificationReport a = sample_report();
    VerificationReport b = sample_report();
    b.suite_name = "other";
    b.pass = false;
    b.violations = 2;
    b.observe(7.0);
    merge_report(all, a);
    CHECK(all.pass);
    merge_report(all, b);
    CHECK_FALSE(all.pass);
    CHECK(all.violations == 2);
    CHECK(all.samples == 20);
    CHECK(all.extrema_max == 7.0);
    CHECK(all.value("demo.ratio") == 1.5);
    CHECK(all.value("other.pass") == 0.0);
    CHECK(all.value("demo.fitted_epsilon") == 0.5);
}
