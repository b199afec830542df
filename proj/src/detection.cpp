#include "nete/detection.hpp"

#include <cmath>
#include <limits>

#include "nete/error.hpp"

namespace nete {

DiscrepancyStat discrepancy_from_scores(double original_logprob, std::span<const double> perturbed) {
    const std::size_t k = perturbed.size();
    if (k < 2) throw InvalidArgument("the normalized discrepancy needs k >= 2 perturbations (got " +
                                     std::to_string(k) + ")");
    DiscrepancyStat st;
    st.k = static_cast<int>(k);
    st.original_logprob = original_logprob;

    double sum = 0.0;
    for (double v : perturbed) sum += v;
    st.mu_tilde = sum / static_cast<double>(k);
    st.d_hat = original_logprob - st.mu_tilde;

    double ss = 0.0;
    for (double v : perturbed) {
        const double dv = v - st.mu_tilde;
        ss += dv * dv;
    }
    st.sigma2_tilde = ss / static_cast<double>(k - 1);

    if (st.sigma2_tilde > 0.0) {
        st.z = st.d_hat / std::sqrt(st.sigma2_tilde);
    } else if (st.d_hat > 0.0) {
        st.z = std::numeric_limits<double>::infinity();
    } else if (st.d_hat < 0.0) {
        st.z = -std::numeric_limits<double>::infinity();
    } else {
        st.z = 0.0;
    }
    return st;
}

DiscrepancyStat nete_statistic(std::string_view text, const Scorer& scorer, const Filler& filler, int k,
                               const PerturbOptions& options, std::uint64_t seed, std::string_view stream_id) {
    if (k < 2) throw InvalidArgument("nete needs k >= 2 perturbations (got " + std::to_string(k) + ")");
    const auto scores = perturbed_logprobs(text, scorer, filler, k, options, seed, stream_id);
    return discrepancy_from_scores(scores.original, scores.perturbed);
}

PerturbedScores perturbed_logprobs(std::string_view text, const Scorer& scorer, const Filler& filler, int k,
                                   const PerturbOptions& options, std::uint64_t seed, std::string_view stream_id) {
    PerturbedScores out;
    out.original = scorer.score(text).mean_logprob;
    const auto set = perturb(text, k, filler, options, seed, stream_id);
    out.perturbed.resize(set.perturbed.size());
    for (std::size_t i = 0; i < out.perturbed.size(); ++i)
        out.perturbed[i] = scorer.score(set.perturbed[i]).mean_logprob;
    return out;
}

double perturbation_discrepancy(std::string_view text, const Scorer& scorer, const Filler& filler, int k,
                                const PerturbOptions& options, std::uint64_t seed, std::string_view stream_id) {
    const auto scores = perturbed_logprobs(text, scorer, filler, k, options, seed, stream_id);
    double sum = 0.0;
    for (double v : scores.perturbed) sum += v;
    return scores.original - sum / static_cast<double>(scores.perturbed.size());
}

std::string_view to_string(Method method) noexcept {
    switch (method) {
        case Method::nete: return "nete";
        case Method::log: return "log";
        case Method::rank: return "rank";
        case Method::logrank: return "logrank";
        case Method::entropy: return "entropy";
        case Method::onion: return "onion";
    }
    return "nete";
}

Method parse_method(std::string_view name) {
    for (Method m : all_methods())
        if (to_string(m) == name) return m;
    if (name == "ranklog") return Method::logrank;
    throw InvalidArgument("unknown method \"" + std::string(name) +
                          "\" (expected nete, log, rank, logrank, entropy or onion)");
}

const std::vector<Method>& all_methods() {
    static const std::vector<Method> methods{Method::nete, Method::log, Method::rank,
                                             Method::logrank, Method::entropy, Method::onion};
    return methods;
}

Verdict judge(Method method, double score, double threshold) {
    return Verdict{method, score, threshold, score <= threshold ? Label::backdoor : Label::clean};
}

Verdict judge(const DiscrepancyStat& stat, double epsilon) {
    return judge(Method::nete, stat.z, epsilon);
}

double baseline_log(const ScoreResult& sr) { return sr.mean_logprob; }
double baseline_rank(const ScoreResult& sr) { return -sr.mean_rank; }
double baseline_logrank(const ScoreResult& sr) { return -sr.mean_log_rank; }
double baseline_entropy(const ScoreResult& sr) { return -sr.mean_entropy; }

OnionResult onion_analysis(std::string_view text, const Scorer& scorer) {
    const auto words = split_words(text);
    if (words.size() < 2) throw InvalidArgument("onion needs at least two words");
    const double base = scorer.score(detokenize(words)).mean_logprob;

    OnionResult r;
    r.suspicion.resize(words.size());
    std::vector<std::string> rest;
    rest.reserve(words.size() - 1);
    for (std::size_t i = 0; i < words.size(); ++i) {
        rest.clear();
        for (std::size_t j = 0; j < words.size(); ++j)
            if (j != i) rest.push_back(words[j]);
        r.suspicion[i] = scorer.score(detokenize(rest)).mean_logprob - base;
        if (r.suspicion[i] > r.suspicion[r.most_suspicious]) r.most_suspicious = i;
    }
    r.score = -r.suspicion[r.most_suspicious];
    return r;
}

double onion_score(std::string_view text, const Scorer& scorer) {
    return onion_analysis(text, scorer).score;
}

}  // namespace nete
