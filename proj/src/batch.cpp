#include "nete/batch.hpp"

#include "nete/error.hpp"

namespace nete {

namespace {

int threads_for(const BatchConfig& config) {
    if (config.parallelism < 1) throw InvalidArgument("parallelism must be >= 1");
    return config.parallelism;
}

template <class F>
auto capture(F&& f) -> Outcome<decltype(f())> {
    Outcome<decltype(f())> out;
    try {
        out.value = f();
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

Outcome<DiscrepancyStat> nete_one(const Sample& s, const Scorer& scorer, const Filler& filler,
                                  const BatchConfig& config) {
    return capture([&] { return nete_statistic(s.text, scorer, filler, config.k, config.options, config.seed, s.id); });
}

Outcome<double> discrepancy_one(const Sample& s, const Scorer& scorer, const Filler& filler,
                                const BatchConfig& config) {
    return capture([&] {
        return perturbation_discrepancy(s.text, scorer, filler, config.k, config.options, config.seed, s.id);
    });
}

std::vector<double> unwrap(std::span<const Outcome<double>> outcomes, std::span<const Sample> samples) {
    std::vector<double> out;
    out.reserve(outcomes.size());
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].ok()) throw Error("sample \"" + samples[i].id + "\": " + outcomes[i].error);
        out.push_back(*outcomes[i].value);
    }
    return out;
}

}  // namespace

SampleScores score_sample(const Sample& sample, std::span<const Method> methods, const Scorer& scorer,
                          const Filler* filler, const BatchConfig& config) {
    SampleScores out;
    out.by_method.resize(methods.size());

    std::optional<Outcome<ScoreResult>> base;
    auto base_score = [&]() -> const Outcome<ScoreResult>& {
        if (!base) base = capture([&] { return scorer.score(sample.text); });
        return *base;
    };

    for (std::size_t m = 0; m < methods.size(); ++m) {
        auto& slot = out.by_method[m];
        switch (methods[m]) {
            case Method::nete: {
                if (!filler) {
                    slot.error = "nete requires a filler";
                    break;
                }
                auto stat = nete_one(sample, scorer, *filler, config);
                if (stat.ok()) {
                    out.nete = stat.value;
                    slot.value = stat.value->z;
                } else {
                    slot.error = stat.error;
                }
                break;
            }
            case Method::onion:
                slot = capture([&] { return onion_score(sample.text, scorer); });
                break;
            default: {
                const auto& b = base_score();
                if (!b.ok()) {
                    slot.error = b.error;
                    break;
                }
                const ScoreResult& sr = *b.value;
                switch (methods[m]) {
                    case Method::log: slot.value = baseline_log(sr); break;
                    case Method::rank: slot.value = baseline_rank(sr); break;
                    case Method::logrank: slot.value = baseline_logrank(sr); break;
                    case Method::entropy: slot.value = baseline_entropy(sr); break;
                    default: break;
                }
            }
        }
    }
    return out;
}

std::vector<SampleScores> score_methods(std::span<const Sample> samples, std::span<const Method> methods,
                                        const Scorer& scorer, const Filler* filler, const BatchConfig& config) {
    std::vector<SampleScores> out(samples.size());
    const auto n = static_cast<std::int64_t>(samples.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads_for(config))
    for (std::int64_t i = 0; i < n; ++i) out[i] = score_sample(samples[i], methods, scorer, filler, config);
    return out;
}

std::vector<Outcome<DiscrepancyStat>> nete_batch(std::span<const Sample> samples, const Scorer& scorer,
                                                 const Filler& filler, const BatchConfig& config) {
    std::vector<Outcome<DiscrepancyStat>> out(samples.size());
    const auto n = static_cast<std::int64_t>(samples.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads_for(config))
    for (std::int64_t i = 0; i < n; ++i) out[i] = nete_one(samples[i], scorer, filler, config);
    return out;
}

PdcResult pdc_test(std::span<const Sample> clean, std::span<const Sample> backdoor, const Scorer& scorer,
                   const Filler& filler, const BatchConfig& config) {
    if (clean.empty() || backdoor.empty()) throw InvalidArgument("pdc test needs non-empty clean and backdoor sets");
    const auto nc = static_cast<std::int64_t>(clean.size());
    const auto n = nc + static_cast<std::int64_t>(backdoor.size());
    std::vector<Outcome<double>> all(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic) num_threads(threads_for(config))
    for (std::int64_t i = 0; i < n; ++i) {
        const Sample& s = i < nc ? clean[i] : backdoor[i - nc];
        all[i] = discrepancy_one(s, scorer, filler, config);
    }
    const std::span<const Outcome<double>> view(all);
    return {unwrap(view.first(clean.size()), clean), unwrap(view.subspan(clean.size()), backdoor)};
}

namespace serial {

std::vector<SampleScores> score_methods(std::span<const Sample> samples, std::span<const Method> methods,
                                        const Scorer& scorer, const Filler* filler, const BatchConfig& config) {
    std::vector<SampleScores> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(score_sample(s, methods, scorer, filler, config));
    return out;
}

std::vector<Outcome<DiscrepancyStat>> nete_batch(std::span<const Sample> samples, const Scorer& scorer,
                                                 const Filler& filler, const BatchConfig& config) {
    std::vector<Outcome<DiscrepancyStat>> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(nete_one(s, scorer, filler, config));
    return out;
}

PdcResult pdc_test(std::span<const Sample> clean, std::span<const Sample> backdoor, const Scorer& scorer,
                   const Filler& filler, const BatchConfig& config) {
    if (clean.empty() || backdoor.empty()) throw InvalidArgument("pdc test needs non-empty clean and backdoor sets");
    std::vector<Outcome<double>> c, b;
    for (const auto& s : clean) c.push_back(discrepancy_one(s, scorer, filler, config));
    for (const auto& s : backdoor) b.push_back(discrepancy_one(s, scorer, filler, config));
    return {unwrap(c, clean), unwrap(b, backdoor)};
}

}  // namespace serial

}  // namespace nete
