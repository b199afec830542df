#include "nete/evaluation.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <functional>

#include "nete/error.hpp"
#include "nete/json_writer.hpp"

namespace nete {

namespace {

void reject_nan(std::span<const double> scores, const char* which) {
    for (double v : scores)
        if (std::isnan(v)) throw InvalidArgument(std::string(which) + " scores contain NaN");
}

}  // namespace

RocReport auroc(std::span<const double> clean_scores, std::span<const double> backdoor_scores) {
    if (clean_scores.empty() || backdoor_scores.empty())
        throw InvalidArgument("AUROC needs at least one clean and one backdoor score");
    reject_nan(clean_scores, "clean");
    reject_nan(backdoor_scores, "backdoor");

    std::vector<double> c(clean_scores.begin(), clean_scores.end());
    std::vector<double> b(backdoor_scores.begin(), backdoor_scores.end());
    std::sort(b.begin(), b.end());

    std::uint64_t greater = 0, equal = 0;
    for (double v : c) {
        const auto lo = std::lower_bound(b.begin(), b.end(), v);
        const auto hi = std::upper_bound(lo, b.end(), v);
        greater += static_cast<std::uint64_t>(lo - b.begin());
        equal += static_cast<std::uint64_t>(hi - lo);
    }

    RocReport r;
    r.n_clean = c.size();
    r.n_backdoor = b.size();
    const double pairs = static_cast<double>(r.n_clean) * static_cast<double>(r.n_backdoor);
    r.auroc = static_cast<double>(2 * greater + equal) / (2.0 * pairs);

    // Threshold sweep, descending: predict clean when score >= threshold.
    std::sort(c.begin(), c.end(), std::greater<>());
    std::sort(b.begin(), b.end(), std::greater<>());
    r.points.push_back({0.0, 0.0});
    std::size_t ic = 0, ib = 0;
    while (ic < c.size() || ib < b.size()) {
        double t;
        if (ic == c.size()) t = b[ib];
        else if (ib == b.size()) t = c[ic];
        else t = std::max(c[ic], b[ib]);
        while (ic < c.size() && c[ic] == t) ++ic;
        while (ib < b.size() && b[ib] == t) ++ib;
        r.points.push_back({static_cast<double>(ib) / static_cast<double>(b.size()),
                            static_cast<double>(ic) / static_cast<double>(c.size())});
    }
    return r;
}

double trapezoid_area(std::span<const RocPoint> points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double dx = points[i].false_positive_rate - points[i - 1].false_positive_rate;
        area += dx * (points[i].true_positive_rate + points[i - 1].true_positive_rate) / 2.0;
    }
    return area;
}

Calibration calibrate_threshold_z(std::span<const double> reference_z) {
    if (reference_z.empty()) throw InvalidArgument("calibration needs at least one reference sample");
    Calibration cal;
    double sum = 0.0;
    for (double z : reference_z) {
        if (std::isnan(z)) throw InvalidArgument("reference statistic is NaN");
        if (std::isinf(z)) {
            ++cal.excluded_infinite;
            continue;
        }
        sum += z;
        ++cal.used;
    }
    if (cal.used == 0) throw InvalidArgument("every reference statistic is infinite; cannot calibrate");
    cal.epsilon = sum / static_cast<double>(cal.used);
    return cal;
}

Calibration calibrate_threshold(std::span<const DiscrepancyStat> reference) {
    std::vector<double> z;
    z.reserve(reference.size());
    for (const auto& s : reference) z.push_back(s.z);
    return calibrate_threshold_z(z);
}

namespace {

Histogram bin_scores(std::span<const double> scores, int bins, double lo, double hi) {
    Histogram h;
    h.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) h.bin_edges[i] = lo + (hi - lo) * static_cast<double>(i) / bins;
    h.bin_edges.back() = hi;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : scores) {
        if (std::isnan(v)) throw InvalidArgument("histogram scores contain NaN");
        if (std::isinf(v)) {
            ++(v > 0 ? h.positive_infinite : h.negative_infinite);
            continue;
        }
        if (v < lo || v > hi) throw InvalidArgument("score lies outside the histogram range");
        auto idx = static_cast<std::size_t>((v - lo) / (hi - lo) * bins);
        idx = std::min(idx, static_cast<std::size_t>(bins) - 1);
        // Guard against rounding placing v on the wrong side of an edge.
        while (idx > 0 && v < h.bin_edges[idx]) --idx;
        while (idx + 1 < static_cast<std::size_t>(bins) && v >= h.bin_edges[idx + 1]) ++idx;
        ++h.counts[idx];
    }
    return h;
}

}  // namespace

Histogram density_histogram(std::span<const double> scores, int bins) {
    if (bins < 1) throw InvalidArgument("histogram needs at least one bin");
    double lo = INFINITY, hi = -INFINITY;
    for (double v : scores) {
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(lo <= hi)) throw InvalidArgument("histogram needs at least one finite score");
    if (lo == hi) return bin_scores(scores, 1, lo, lo + std::max(1.0, std::abs(lo)) * DBL_EPSILON);
    return bin_scores(scores, bins, lo, hi);
}

Histogram density_histogram(std::span<const double> scores, int bins, double lo, double hi) {
    if (bins < 1) throw InvalidArgument("histogram needs at least one bin");
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) throw InvalidArgument("invalid histogram range");
    if (lo == hi) return bin_scores(scores, 1, lo, lo + std::max(1.0, std::abs(lo)) * DBL_EPSILON);
    return bin_scores(scores, bins, lo, hi);
}

nlohmann::json to_json(const RocReport& report) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : report.points) pts.push_back({p.false_positive_rate, p.true_positive_rate});
    return {{"auroc", report.auroc},
            {"n_clean", report.n_clean},
            {"n_backdoor", report.n_backdoor},
            {"points", std::move(pts)}};
}

nlohmann::json to_json(const Histogram& h) {
    return {{"bin_edges", h.bin_edges},
            {"counts", h.counts},
            {"negative_infinite", h.negative_infinite},
            {"positive_infinite", h.positive_infinite}};
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

nlohmann::json stat_json(const DiscrepancyStat& st) {
    return {{"d_hat", json_number(st.d_hat)},
            {"mu_tilde", json_number(st.mu_tilde)},
            {"sigma2_tilde", json_number(st.sigma2_tilde)},
            {"z", json_number(st.z)},
            {"k", st.k},
            {"original_logprob", json_number(st.original_logprob)}};
}

}  // namespace

Report emit_report(const RunResults& results) {
    Report rep;
    nlohmann::json samples = nlohmann::json::array();
    nlohmann::json failures = nlohmann::json::array();
    std::string csv = "sample_id,method,score,verdict,label\n";

    std::map<Method, std::vector<double>> all, clean, backdoor;
    for (const auto& s : results.samples) {
        nlohmann::json scores = nlohmann::json::object();
        for (Method m : results.methods) {
            const auto it = s.methods.find(m);
            const std::string name(to_string(m));
            std::string score_text, verdict_text;
            nlohmann::json entry = nlohmann::json::object();
            if (it == s.methods.end() || !it->second.score) {
                const std::string err = it == s.methods.end() ? "not computed" : it->second.error;
                entry["error"] = err;
                failures.push_back({{"id", s.id}, {"method", name}, {"error", err}});
            } else {
                const double v = *it->second.score;
                entry["score"] = json_number(v);
                score_text = format_double(v);
                all[m].push_back(v);
                if (s.label == Label::clean) clean[m].push_back(v);
                if (s.label == Label::backdoor) backdoor[m].push_back(v);
                if (it->second.verdict) {
                    verdict_text = std::string(to_string(it->second.verdict->label));
                    entry["verdict"] = verdict_text;
                    entry["threshold"] = json_number(it->second.verdict->threshold);
                }
            }
            scores[name] = std::move(entry);
            csv += csv_field(s.id) + "," + name + "," + score_text + "," + verdict_text + "," +
                   std::string(to_string(s.label)) + "\n";
        }
        nlohmann::json row{{"id", s.id}, {"label", std::string(to_string(s.label))}, {"scores", std::move(scores)}};
        if (s.nete) row["nete"] = stat_json(*s.nete);
        samples.push_back(std::move(row));
    }

    nlohmann::json aurocs = nlohmann::json::object();
    nlohmann::json histograms = nlohmann::json::object();
    for (Method m : results.methods) {
        const std::string name(to_string(m));
        if (!clean[m].empty() && !backdoor[m].empty()) aurocs[name] = to_json(auroc(clean[m], backdoor[m]));
        bool any_finite = false;
        for (double v : all[m]) any_finite = any_finite || std::isfinite(v);
        if (any_finite) histograms[name] = to_json(density_histogram(all[m], results.histogram_bins));
    }

    nlohmann::json methods = nlohmann::json::array();
    for (Method m : results.methods) methods.push_back(std::string(to_string(m)));

    rep.failures = failures.size();
    rep.document = {{"config", results.config},
                    {"methods", std::move(methods)},
                    {"auroc", std::move(aurocs)},
                    {"histograms", std::move(histograms)},
                    {"samples", std::move(samples)},
                    {"failures", std::move(failures)},
                    {"summary", {{"n_samples", results.samples.size()}, {"n_failures", rep.failures}}}};
    if (results.timings) {
        nlohmann::json t = nlohmann::json::object();
        for (const auto& [stage, secs] : *results.timings) t[stage] = secs;
        rep.document["timings_seconds"] = std::move(t);
    }
    rep.csv = std::move(csv);
    return rep;
}

}  // namespace nete
