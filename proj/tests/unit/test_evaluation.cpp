#include <doctest.h>

#include <cmath>
#include <limits>

#include "nete/error.hpp"
#include "nete/evaluation.hpp"
#include "nete/json_writer.hpp"
#include "nete/rng.hpp"

using namespace nete;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double brute_auroc(const std::vector<double>& c, const std::vector<double>& b) {
    double s = 0;
    for (double x : c)
        for (double y : b) s += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
    return s / (static_cast<double>(c.size()) * static_cast<double>(b.size()));
}

std::vector<double> draw_scores(Rng& rng, std::size_t n, double shift) {
    std::vector<double> v(n);
    for (auto& x : v) {
        const auto r = rng.uniform_index(20);
        if (r == 0) x = inf;
        else if (r == 1) x = -inf;
        else x = std::round(4 * (rng.gaussian() + shift)) / 4;  // coarse grid forces ties
    }
    return v;
}

}  // namespace

TEST_CASE("auroc examples") {
    CHECK(auroc(std::vector<double>{2, 3}, std::vector<double>{0, 1}).auroc == 1.0);
    CHECK(auroc(std::vector<double>{1, 2, 2}, std::vector<double>{2, 1, 2}).auroc == 0.5);
    CHECK(auroc(std::vector<double>{1, 2}, std::vector<double>{1, 3}).auroc == 0.375);
    CHECK(auroc(std::vector<double>{inf}, std::vector<double>{1e308}).auroc == 1.0);
    CHECK(auroc(std::vector<double>{-inf}, std::vector<double>{-inf}).auroc == 0.5);
}

TEST_CASE("auroc errors") {
    const std::vector<double> one{1.0}, none{};
    CHECK_THROWS_AS(auroc(none, one), InvalidArgument);
    CHECK_THROWS_AS(auroc(one, none), InvalidArgument);
    CHECK_THROWS_AS(auroc(std::vector<double>{NAN}, one), InvalidArgument);
}

TEST_CASE("auroc matches brute force with ties and infinities") {
    Rng rng(21);
    for (int t = 0; t < 200; ++t) {
        const auto c = draw_scores(rng, 1 + rng.uniform_index(60), 0.5);
        const auto b = draw_scores(rng, 1 + rng.uniform_index(60), 0.0);
        const auto r = auroc(c, b);
        CHECK(r.auroc == brute_auroc(c, b));
        CHECK(r.n_clean == c.size());
        CHECK(r.n_backdoor == b.size());
        // Curve runs from (0,0) to (1,1) and its area is the statistic.
        CHECK(r.points.front().false_positive_rate == 0.0);
        CHECK(r.points.front().true_positive_rate == 0.0);
        CHECK(r.points.back().false_positive_rate == 1.0);
        CHECK(r.points.back().true_positive_rate == 1.0);
        CHECK(std::abs(trapezoid_area(r.points) - r.auroc) <= 1e-12);
        // Swapping the classes mirrors the statistic.
        CHECK(auroc(b, c).auroc == doctest::Approx(1.0 - r.auroc).epsilon(1e-15));
    }
}

TEST_CASE("auroc is invariant under increasing transforms") {
    Rng rng(5);
    const auto c = draw_scores(rng, 40, 1.0);
    const auto b = draw_scores(rng, 30, 0.0);
    auto t = [](std::vector<double> v) {
        for (auto& x : v) x = std::isfinite(x) ? std::exp(x / 3) * 7 - 2 : x;
        return v;
    };
    CHECK(auroc(t(c), t(b)).auroc == auroc(c, b).auroc);
}

TEST_CASE("calibration is the mean z with infinities excluded") {
    auto stat = [](double z) {
        DiscrepancyStat s;
        s.z = z;
        return s;
    };
    const std::vector<DiscrepancyStat> ref{stat(-1), stat(-3)};
    CHECK(calibrate_threshold(ref).epsilon == -2.0);
    CHECK(calibrate_threshold(std::vector<DiscrepancyStat>{stat(0.7)}).epsilon == 0.7);
    const auto c = calibrate_threshold_z(std::vector<double>{-1, -inf, -3, inf});
    CHECK(c.epsilon == -2.0);
    CHECK(c.used == 2);
    CHECK(c.excluded_infinite == 2);
    CHECK_THROWS_AS(calibrate_threshold_z(std::vector<double>{inf, -inf}), InvalidArgument);
    CHECK_THROWS_AS(calibrate_threshold_z(std::vector<double>{}), InvalidArgument);
}

TEST_CASE("histogram partition") {
    const auto h = density_histogram(std::vector<double>{0, 1, 2, 3}, 2);
    CHECK(h.counts == std::vector<std::uint64_t>{2, 2});
    CHECK(h.bin_edges == std::vector<double>{0, 1.5, 3});

    const auto c = density_histogram(std::vector<double>{4, 4, 4}, 5);
    REQUIRE(c.counts.size() == 1);
    CHECK(c.counts[0] == 3);
    CHECK(c.bin_edges[1] > c.bin_edges[0]);

    const auto i = density_histogram(std::vector<double>{-inf, 0, 1, inf, inf}, 4);
    CHECK(i.negative_infinite == 1);
    CHECK(i.positive_infinite == 2);
    std::uint64_t total = 0;
    for (auto n : i.counts) total += n;
    CHECK(total == 2);

    CHECK_THROWS_AS(density_histogram(std::vector<double>{inf}, 3), InvalidArgument);
    CHECK_THROWS_AS(density_histogram(std::vector<double>{1}, 0), InvalidArgument);
}

TEST_CASE("histogram over a shared range") {
    const auto h = density_histogram(std::vector<double>{0, 0.5, 10}, 10, 0, 10);
    CHECK(h.counts.size() == 10);
    CHECK(h.counts[0] == 2);
    CHECK(h.counts[9] == 1);
    CHECK_THROWS_AS(density_histogram(std::vector<double>{11}, 10, 0, 10), InvalidArgument);
}

TEST_CASE("report shape and determinism") {
    RunResults rr;
    rr.config = {{"seed", 1}, {"k", 50}};
    rr.methods = {Method::nete, Method::log};
    for (int i = 0; i < 6; ++i) {
        SampleRecord s;
        s.id = "s" + std::to_string(i);
        s.label = i < 3 ? Label::clean : Label::backdoor;
        const double z = i < 3 ? 1.0 + i : -1.0 * i;
        s.methods[Method::nete].score = z;
        s.methods[Method::nete].verdict = judge(Method::nete, z, 0.0);
        s.methods[Method::log].score = -2.0 - 0.1 * i;
        DiscrepancyStat st;
        st.z = z;
        s.nete = st;
        rr.samples.push_back(s);
    }
    rr.samples[5].methods[Method::log] = {std::nullopt, std::nullopt, "scorer exploded"};

    const auto rep = emit_report(rr);
    const auto& doc = rep.document;
    CHECK(doc.at("auroc").size() == 2);
    CHECK(doc.at("auroc").at("nete").at("auroc") == 1.0);
    CHECK(doc.at("auroc").contains("log"));
    CHECK(doc.at("failures").size() == 1);
    CHECK(rep.failures == 1);
    CHECK(doc.at("summary").at("n_samples") == 6);
    CHECK_FALSE(doc.contains("timings_seconds"));
    CHECK(doc.at("samples")[0].at("scores").at("nete").at("verdict") == "clean");
    CHECK(doc.at("samples")[4].at("scores").at("nete").at("verdict") == "backdoor");

    CHECK(write_json(emit_report(rr).document) == write_json(doc));
    CHECK(rep.csv.rfind("sample_id,method,score,verdict,label\n", 0) == 0);
    CHECK(rep.csv.find("s0,nete,1,clean,clean\n") != std::string::npos);
    CHECK(rep.csv.find("s5,log,,,backdoor\n") != std::string::npos);

    rr.timings = std::map<std::string, double>{{"scoring", 1.5}};
    CHECK(emit_report(rr).document.at("timings_seconds").at("scoring") == 1.5);
}

TEST_CASE("json writer: sorted keys, fixed float format, non-finite strings") {
    const nlohmann::json doc{{"b", 0.1}, {"a", json_number(-inf)}, {"c", {1, 2.5}}};
    const auto text = write_json(doc);
    CHECK(text.find("\"a\"") < text.find("\"b\""));
    CHECK(text.find("0.10000000000000001") != std::string::npos);
    CHECK(text.find("\"-inf\"") != std::string::npos);
    CHECK(format_double_short(0.1) == "0.1");
}
