#include "psilab/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "psilab/rng.hpp"

namespace psilab {

namespace {

template <class V>
void upsert(std::vector<std::pair<std::string, V>>& kv, const std::string& key, V v) {
    for (auto& [k, old] : kv) {
        if (k == key) {
            old = std::move(v);
            return;
        }
    }
    kv.emplace_back(key, std::move(v));
}

template <class V>
const V& lookup(const std::vector<std::pair<std::string, V>>& kv, const std::string& key) {
    for (const auto& [k, v] : kv)
        if (k == key) return v;
    throw std::out_of_range("no report entry named '" + key + "'");
}

nlohmann::ordered_json number(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

}  // namespace

void VerificationReport::set_param(const std::string& key, double v) { upsert(params, key, v); }
void VerificationReport::add_note(const std::string& key, const std::string& v) { upsert(notes, key, v); }
void VerificationReport::set_value(const std::string& key, double v) { upsert(values, key, v); }
void VerificationReport::set_series(const std::string& key, std::vector<double> v) {
    upsert(series, key, std::move(v));
}

double VerificationReport::value(const std::string& key) const { return lookup(values, key); }
double VerificationReport::param(const std::string& key) const { return lookup(params, key); }
const std::vector<double>& VerificationReport::series_of(const std::string& key) const {
    return lookup(series, key);
}

void VerificationReport::observe(double x) {
    if (!observed_) {
        extrema_min = extrema_max = x;
        observed_ = true;
        return;
    }
    extrema_min = std::min(extrema_min, x);
    extrema_max = std::max(extrema_max, x);
}

bool VerificationReport::consistent() const {
    if (pass && violations != 0) return false;
    return std::isfinite(extrema_min) && std::isfinite(extrema_max);
}

void merge_report(VerificationReport& into, const VerificationReport& part) {
    const std::string prefix = part.suite_name + ".";
    into.samples += part.samples;
    into.violations += part.violations;
    into.inconclusive += part.inconclusive;
    into.observe(part.extrema_min);
    into.observe(part.extrema_max);
    for (const auto& [k, v] : part.params) into.set_param(prefix + k, v);
    for (const auto& [k, v] : part.notes) into.add_note(prefix + k, v);
    for (const auto& [k, v] : part.values) into.set_value(prefix + k, v);
    for (const auto& [k, v] : part.series) into.set_series(prefix + k, v);
    if (part.fitted_constants) {
        into.set_value(prefix + "fitted_C", part.fitted_constants->C);
        into.set_value(prefix + "fitted_epsilon", part.fitted_constants->epsilon);
    }
    into.set_value(prefix + "pass", part.pass ? 1.0 : 0.0);
    into.pass = into.pass && part.pass;
}

std::string report_to_json(const VerificationReport& r, const std::string& config_json) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["rng"] = std::string(kRngName);
    j["config"] = nlohmann::ordered_json::parse(config_json);
    j["suite_name"] = r.suite_name;
    j["n"] = r.n;
    j["pass"] = r.pass;
    j["samples"] = r.samples;
    j["violations"] = r.violations;
    j["inconclusive"] = r.inconclusive;
    j["extrema"] = {{"min", number(r.extrema_min)}, {"max", number(r.extrema_max)}};
    if (r.fitted_constants) {
        j["fitted_constants"] = {{"C", number(r.fitted_constants->C)},
                                 {"epsilon", number(r.fitted_constants->epsilon)}};
    } else {
        j["fitted_constants"] = nullptr;
    }
    auto& params = j["params"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.params) params[k] = number(v);
    auto& notes = j["notes"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.notes) notes[k] = v;
    auto& values = j["values"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.values) values[k] = number(v);
    auto& series = j["series"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.series) {
        auto arr = nlohmann::ordered_json::array();
        for (double x : v) arr.push_back(number(x));
        series[k] = std::move(arr);
    }
    return j.dump(2) + "\n";
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string report_to_csv(const VerificationReport& r,
                          const std::vector<std::pair<std::string, std::string>>& config) {
    std::ostringstream os;
    auto row = [&os](const std::string& section, const std::string& key, const std::string& v) {
        os << csv_field(section) << ',' << csv_field(key) << ',' << csv_field(v) << "\r\n";
    };
    os << "section,key,value\r\n";
    row("meta", "schema_version", std::to_string(kReportSchemaVersion));
    row("meta", "rng", std::string(kRngName));
    row("meta", "suite_name", r.suite_name);
    row("meta", "n", std::to_string(r.n));
    row("meta", "pass", r.pass ? "true" : "false");
    row("meta", "samples", std::to_string(r.samples));
    row("meta", "violations", std::to_string(r.violations));
    row("meta", "inconclusive", std::to_string(r.inconclusive));
    for (const auto& [k, v] : config) row("config", k, v);
    row("extrema", "min", format_double(r.extrema_min));
    row("extrema", "max", format_double(r.extrema_max));
    if (r.fitted_constants) {
        row("fitted_constants", "C", format_double(r.fitted_constants->C));
        row("fitted_constants", "epsilon", format_double(r.fitted_constants->epsilon));
    }
    for (const auto& [k, v] : r.params) row("params", k, format_double(v));
    for (const auto& [k, v] : r.notes) row("notes", k, v);
    for (const auto& [k, v] : r.values) row("values", k, format_double(v));
    for (const auto& [k, v] : r.series) {
        std::string joined;
        for (std::size_t i = 0; i < v.size(); ++i) joined += (i ? " " : "") + format_double(v[i]);
        row("series", k, joined);
    }
    return os.str();
}

}  // namespace psilab
