#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nete/corpus.hpp"
#include "nete/perturbation.hpp"
#include "nete/scoring.hpp"

namespace nete {

// Normalized perturbation discrepancy of one text.
struct DiscrepancyStat {
    double original_logprob = 0.0;
    double d_hat = 0.0;
    double mu_tilde = 0.0;
    double sigma2_tilde = 0.0;
    double z = 0.0;
    int k = 0;

    bool operator==(const DiscrepancyStat&) const = default;
};

// mu = mean(perturbed), d = original - mu, sigma^2 = sum((p - mu)^2) / (k - 1),
// z = d / sqrt(sigma^2). A zero variance maps z to +inf, -inf or 0 by the sign of d.
DiscrepancyStat discrepancy_from_scores(double original_logprob, std::span<const double> perturbed_logprobs);

// Perturbs the text k times, scores every variant and reduces with
// discrepancy_from_scores. Perturbations are scored in index order.
DiscrepancyStat nete_statistic(std::string_view text, const Scorer& scorer, const Filler& filler, int k,
                               const PerturbOptions& options, std::uint64_t seed, std::string_view stream_id);

enum class Method { nete, log, rank, logrank, entropy, onion };

std::string_view to_string(Method method) noexcept;
Method parse_method(std::string_view name);
const std::vector<Method>& all_methods();

// Every method's score is oriented so that lower means more suspicious.
struct Verdict {
    Method method = Method::nete;
    double score = 0.0;
    double threshold = 0.0;
    Label label = Label::clean;
};

// Backdoor iff score <= threshold.
Verdict judge(Method method, double score, double threshold);
Verdict judge(const DiscrepancyStat& stat, double epsilon);

double baseline_log(const ScoreResult& sr);
double baseline_rank(const ScoreResult& sr);
double baseline_logrank(const ScoreResult& sr);
double baseline_entropy(const ScoreResult& sr);

// Leave-one-word-out fluency gain, negated so that a text whose log-probability
// rises the most when one word is deleted scores lowest.
struct OnionResult {
    double score = 0.0;
    std::vector<double> suspicion;  // per word
    std::size_t most_suspicious = 0;
};

OnionResult onion_analysis(std::string_view text, const Scorer& scorer);
double onion_score(std::string_view text, const Scorer& scorer);

}  // namespace nete

namespace nete {

struct PerturbedScores {
    double original = 0.0;
    std::vector<double> perturbed;
};

// Mean log-probability of the text and of each of its k perturbations.
PerturbedScores perturbed_logprobs(std::string_view text, const Scorer& scorer, const Filler& filler, int k,
                                   const PerturbOptions& options, std::uint64_t seed, std::string_view stream_id);

// Raw discrepancy: original minus the mean over perturbations (k >= 1).
double perturbation_discrepancy(std::string_view text, const Scorer& scorer, const Filler& filler, int k,
                                const PerturbOptions& options, std::uint64_t seed, std::string_view stream_id);

}  // namespace nete
