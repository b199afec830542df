#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nete/corpus.hpp"
#include "nete/detection.hpp"

namespace nete {

struct RocPoint {
    double false_positive_rate = 0.0;
    double true_positive_rate = 0.0;
};

// Positive class is clean; higher scores mean cleaner.
struct RocReport {
    double auroc = 0.0;
    std::size_t n_clean = 0;
    std::size_t n_backdoor = 0;
    // From (0, 0) to (1, 1), thresholds descending.
    std::vector<RocPoint> points;
};

// Exact Mann-Whitney AUROC: (#{clean > backdoor} + 0.5 #{equal}) / (n_c n_b),
// counted in integers. Infinite scores are ordered as extremes; NaN is rejected.
RocReport auroc(std::span<const double> clean_scores, std::span<const double> backdoor_scores);

double trapezoid_area(std::span<const RocPoint> points);

struct Calibration {
    double epsilon = 0.0;
    std::size_t used = 0;
    std::size_t excluded_infinite = 0;
};

// epsilon = mean z over the reference backdoor set, infinities excluded.
Calibration calibrate_threshold(std::span<const DiscrepancyStat> reference);
Calibration calibrate_threshold_z(std::span<const double> reference_z);

struct Histogram {
    std::vector<double> bin_edges;
    std::vector<std::uint64_t> counts;
    std::uint64_t negative_infinite = 0;
    std::uint64_t positive_infinite = 0;
};

// Equal-width bins over [min, max] of the finite scores; the last bin is
// right-closed. A constant sample yields one bin widened by machine epsilon.
Histogram density_histogram(std::span<const double> scores, int bins);
// Same, over a caller-supplied range so two sets can share edges. Finite
// scores outside [lo, hi] are rejected.
Histogram density_histogram(std::span<const double> scores, int bins, double lo, double hi);

nlohmann::json to_json(const RocReport& report);
nlohmann::json to_json(const Histogram& histogram);

// Everything a detect run produces; emit_report turns it into the report
// document and its CSV projection.
struct SampleRecord {
    std::string id;
    Label label = Label::unknown;
    struct MethodScore {
        std::optional<double> score;
        std::optional<Verdict> verdict;
        std::string error;
    };
    std::map<Method, MethodScore> methods;
    std::optional<DiscrepancyStat> nete;
};

struct RunResults {
    nlohmann::json config = nlohmann::json::object();
    std::vector<Method> methods;
    std::vector<SampleRecord> samples;
    int histogram_bins = 20;
    // Wall-clock seconds per stage; only written when present.
    std::optional<std::map<std::string, double>> timings;
};

struct Report {
    nlohmann::json document;
    std::string csv;
    std::size_t failures = 0;
};

Report emit_report(const RunResults& results);

}  // namespace nete
