#pragma once

// Outcome of one verification suite, plus JSON and CSV serialization. Key order
// is insertion order, so identical runs produce byte-identical files.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace psilab {

inline constexpr int kReportSchemaVersion = 1;

struct FittedConstants {
    double C = 0.0;
    double epsilon = 0.0;
};

struct VerificationReport {
    std::string suite_name;
    std::size_t n = 0;
    std::vector<std::pair<std::string, double>> params;
    std::vector<std::pair<std::string, std::string>> notes;
    std::size_t samples = 0;
    double extrema_min = 0.0;
    double extrema_max = 0.0;
    std::optional<FittedConstants> fitted_constants;
    std::vector<std::pair<std::string, double>> values;
    std::vector<std::pair<std::string, std::vector<double>>> series;
    std::size_t violations = 0;
    std::size_t inconclusive = 0;
    bool pass = false;

    void set_param(const std::string& key, double v);
    void add_note(const std::string& key, const std::string& v);
    void set_value(const std::string& key, double v);
    void set_series(const std::string& key, std::vector<double> v);

    /// Throws std::out_of_range for an unknown key.
    double value(const std::string& key) const;
    double param(const std::string& key) const;
    const std::vector<double>& series_of(const std::string& key) const;

    /// Tracks the checked quantity; the first call initializes both ends.
    void observe(double x);
    /// pass => no violations, and extrema finite.
    bool consistent() const;

private:
    bool observed_ = false;
};

/// Folds `part` into `into`: counts add, extrema widen, values/series/params are
/// appended with the part's suite name as a key prefix, pass is the conjunction.
void merge_report(VerificationReport& into, const VerificationReport& part);

std::string report_to_json(const VerificationReport& r, const std::string& config_json = "{}");
/// `config` rows are emitted in a "config" section after the metadata.
std::string report_to_csv(const VerificationReport& r,
                          const std::vector<std::pair<std::string, std::string>>& config = {});

/// RFC 4180 field quoting.
std::string csv_field(const std::string& s);
/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace psilab
