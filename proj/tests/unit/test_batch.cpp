#include <doctest.h>

#include <numeric>

#include "nete/batch.hpp"
#include "nete/error.hpp"
#include "toy_world.hpp"

using namespace nete;

namespace {

toy::Experiment small_experiment(std::uint64_t seed) {
    toy::ExperimentParams p;
    p.train_sentences = 800;
    p.n_clean = 24;
    p.n_backdoor = 24;
    return toy::make_experiment(seed, p);
}

std::vector<Sample> mixed(const toy::Experiment& ex) {
    std::vector<Sample> all = ex.clean;
    all.insert(all.end(), ex.backdoor.begin(), ex.backdoor.end());
    return all;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

}  // namespace

TEST_CASE("parallel and serial kernels agree bit for bit") {
    const auto ex = small_experiment(3);
    const auto samples = mixed(ex);
    BatchConfig cfg;
    cfg.k = 10;
    cfg.seed = 9;
    const auto methods = all_methods();

    cfg.parallelism = 1;
    const auto ref_scores = serial::score_methods(samples, methods, *ex.scorer, ex.filler.get(), cfg);
    const auto ref_nete = serial::nete_batch(samples, *ex.scorer, *ex.filler, cfg);
    const auto ref_pdc = serial::pdc_test(ex.clean, ex.backdoor, *ex.scorer, *ex.filler, cfg);

    for (int threads : {1, 2, 4, 8}) {
        CAPTURE(threads);
        cfg.parallelism = threads;
        CHECK(score_methods(samples, methods, *ex.scorer, ex.filler.get(), cfg) == ref_scores);
        CHECK(nete_batch(samples, *ex.scorer, *ex.filler, cfg) == ref_nete);
        const auto pdc = pdc_test(ex.clean, ex.backdoor, *ex.scorer, *ex.filler, cfg);
        CHECK(pdc.clean == ref_pdc.clean);
        CHECK(pdc.backdoor == ref_pdc.backdoor);
    }
}

TEST_CASE("results do not depend on sample order") {
    const auto ex = small_experiment(4);
    auto samples = mixed(ex);
    BatchConfig cfg;
    cfg.k = 6;
    const auto fwd = nete_batch(samples, *ex.scorer, *ex.filler, cfg);
    std::reverse(samples.begin(), samples.end());
    auto rev = nete_batch(samples, *ex.scorer, *ex.filler, cfg);
    std::reverse(rev.begin(), rev.end());
    CHECK(fwd == rev);
}

TEST_CASE("per-sample failures are captured, not thrown") {
    const auto ex = small_experiment(5);
    std::vector<Sample> samples{ex.clean[0], {"short", "one", Label::clean, std::nullopt, nlohmann::json::object()},
                                ex.clean[1]};
    BatchConfig cfg;
    cfg.k = 4;
    cfg.parallelism = 2;
    const std::vector<Method> methods{Method::log, Method::onion, Method::nete};
    const auto out = score_methods(samples, methods, *ex.scorer, ex.filler.get(), cfg);
    REQUIRE(out.size() == 3);
    CHECK(out[1].by_method[0].ok());
    CHECK_FALSE(out[1].by_method[1].ok());
    CHECK(out[1].by_method[1].error.find("two words") != std::string::npos);
    for (std::size_t i : {0u, 2u})
        for (const auto& o : out[i].by_method) CHECK(o.ok());
    CHECK(out[0].nete.has_value());

    const auto no_filler = score_methods(samples, methods, *ex.scorer, nullptr, cfg);
    CHECK_FALSE(no_filler[0].by_method[2].ok());

    cfg.k = 1;
    const auto bad_k = nete_batch(samples, *ex.scorer, *ex.filler, cfg);
    for (const auto& o : bad_k) CHECK_FALSE(o.ok());
}

TEST_CASE("pdc: constant scorer gives zero discrepancies") {
    const auto ex = small_experiment(6);
    ConstantScorer c(-3.0);
    BatchConfig cfg;
    cfg.k = 5;
    const auto r = pdc_test(ex.clean, ex.backdoor, c, *ex.filler, cfg);
    for (double d : r.clean) CHECK(d == 0.0);
    for (double d : r.backdoor) CHECK(d == 0.0);
    CHECK(r.clean.size() == ex.clean.size());
}

TEST_CASE("pdc: backdoor discrepancies sit left of clean ones") {
    const auto ex = toy::make_experiment(7, {.n_clean = 100, .n_backdoor = 100});
    BatchConfig cfg;
    cfg.k = 20;
    const auto r = pdc_test(ex.clean, ex.backdoor, *ex.scorer, *ex.filler, cfg);
    CHECK(mean(r.backdoor) < mean(r.clean));
}

TEST_CASE("pdc rethrows the first failure") {
    const auto ex = small_experiment(8);
    std::vector<Sample> bad{{"blank", "   ", Label::clean, std::nullopt, nlohmann::json::object()}};
    BatchConfig cfg;
    cfg.k = 3;
    CHECK_THROWS_AS(pdc_test(bad, ex.backdoor, *ex.scorer, *ex.filler, cfg), Error);
    cfg.parallelism = 0;
    CHECK_THROWS_AS(nete_batch(ex.clean, *ex.scorer, *ex.filler, cfg), InvalidArgument);
}
