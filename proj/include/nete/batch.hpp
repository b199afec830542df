#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nete/corpus.hpp"
#include "nete/detection.hpp"
#include "nete/perturbation.hpp"
#include "nete/scoring.hpp"

// Sample-parallel kernels. Each entry point has a serial twin in nete::serial
// that is kept as the reference for tests and benchmarks; both produce
// bitwise-identical results because every sample draws from its own
// (seed, sample id) substream and results are stored by input index.
namespace nete {

template <class T>
struct Outcome {
    std::optional<T> value;
    std::string error;

    bool ok() const noexcept { return value.has_value(); }
    bool operator==(const Outcome&) const = default;
};

struct BatchConfig {
    int k = default_perturbations;
    PerturbOptions options;
    std::uint64_t seed = 0;
    int parallelism = 1;
};

struct SampleScores {
    // Parallel to the requested method list.
    std::vector<Outcome<double>> by_method;
    std::optional<DiscrepancyStat> nete;

    bool operator==(const SampleScores&) const = default;
};

struct PdcResult {
    std::vector<double> clean;
    std::vector<double> backdoor;
};

SampleScores score_sample(const Sample& sample, std::span<const Method> methods, const Scorer& scorer,
                          const Filler* filler, const BatchConfig& config);

std::vector<SampleScores> score_methods(std::span<const Sample> samples, std::span<const Method> methods,
                                        const Scorer& scorer, const Filler* filler, const BatchConfig& config);

std::vector<Outcome<DiscrepancyStat>> nete_batch(std::span<const Sample> samples, const Scorer& scorer,
                                                 const Filler& filler, const BatchConfig& config);

// Raw discrepancies of both sets; the first failure is rethrown.
PdcResult pdc_test(std::span<const Sample> clean, std::span<const Sample> backdoor, const Scorer& scorer,
                   const Filler& filler, const BatchConfig& config);

namespace serial {

std::vector<SampleScores> score_methods(std::span<const Sample> samples, std::span<const Method> methods,
                                        const Scorer& scorer, const Filler* filler, const BatchConfig& config);
std::vector<Outcome<DiscrepancyStat>> nete_batch(std::span<const Sample> samples, const Scorer& scorer,
                                                 const Filler& filler, const BatchConfig& config);
PdcResult pdc_test(std::span<const Sample> clean, std::span<const Sample> backdoor, const Scorer& scorer,
                   const Filler& filler, const BatchConfig& config);

}  // namespace serial

}  // namespace nete
