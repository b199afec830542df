#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "nete/http.hpp"
#include "nete/rng.hpp"

namespace nete {

// Per-position log-probabilities (nats), ranks and entropies, plus their means.
struct ScoreResult {
    std::size_t token_count = 0;
    std::vector<double> logprobs;
    std::vector<std::int64_t> ranks;
    std::vector<double> entropies;
    double mean_logprob = 0.0;
    double mean_rank = 0.0;
    double mean_log_rank = 0.0;
    double mean_entropy = 0.0;

    // Validates the per-position lists and fills in the aggregates.
    static ScoreResult from_positions(std::vector<double> logprobs, std::vector<std::int64_t> ranks,
                                      std::vector<double> entropies);

    bool operator==(const ScoreResult&) const = default;
};

nlohmann::json to_json(const ScoreResult& result);

using TokenId = std::uint32_t;

// Additively smoothed n-gram model over whitespace words:
//   P(t | ctx) = (count(ctx, t) + alpha) / (count(ctx, .) + alpha * |V|)
// Contexts are the previous (order - 1) ids, left-padded with a begin-of-
// sequence sentinel that is never predicted and is not part of |V|.
class NGramModel {
public:
    static constexpr std::string_view unk_token = "<unk>";
    static constexpr TokenId bos_id = 0xffffffffu;

    struct Successors {
        std::uint64_t total = 0;
        // Sorted by token id.
        std::vector<std::pair<TokenId, std::uint64_t>> counts;
    };

    struct PositionStats {
        double logprob;
        std::int64_t rank;
        double entropy;
    };

    static NGramModel train(const std::vector<std::string>& corpus_texts, int order, double alpha);

    int order() const noexcept { return order_; }
    double alpha() const noexcept { return alpha_; }
    std::size_t vocab_size() const noexcept { return vocab_.size(); }
    const std::vector<std::string>& vocabulary() const noexcept { return vocab_; }
    TokenId unk_id() const noexcept { return unk_id_; }
    std::uint64_t total_tokens() const noexcept { return unigrams_.total; }

    TokenId id_of(std::string_view word) const;
    const std::string& word_of(TokenId id) const { return vocab_.at(id); }
    std::vector<TokenId> encode(const std::vector<std::string>& words) const;

    // Context is the history preceding the predicted token (any length; only
    // the last order-1 ids matter, missing history is padded with bos_id).
    double probability(std::span<const TokenId> history, TokenId token) const;
    PositionStats position_stats(std::span<const TokenId> history, TokenId token) const;
    // Successor counts for a history, or nullptr for an unseen context.
    const Successors* successors(std::span<const TokenId> history) const;

    TokenId sample_next(std::span<const TokenId> history, Rng& rng) const;
    TokenId sample_unigram(Rng& rng) const;
    double unigram_probability(TokenId token) const;

    // Largest count(ctx, .) over all contexts; bounds the smoothing floor.
    std::uint64_t max_context_total() const noexcept { return max_context_total_; }

    // Test hook: build a model from explicit tables.
    static NGramModel from_counts(int order, double alpha, std::vector<std::string> vocabulary,
                                  std::map<std::vector<TokenId>, std::map<TokenId, std::uint64_t>> table);

private:
    struct KeyHash {
        std::size_t operator()(const std::vector<TokenId>& key) const noexcept;
    };

    std::vector<TokenId> context_key(std::span<const TokenId> history) const;
    TokenId sample_from(const Successors* succ, Rng& rng) const;
    PositionStats stats_from(const Successors* succ, TokenId token) const;
    void finalize(std::map<std::vector<TokenId>, std::map<TokenId, std::uint64_t>>& table);

    int order_ = 1;
    double alpha_ = 1.0;
    std::vector<std::string> vocab_;
    std::unordered_map<std::string, TokenId> index_;
    TokenId unk_id_ = 0;
    std::unordered_map<std::vector<TokenId>, Successors, KeyHash> contexts_;
    Successors unigrams_;
    std::uint64_t max_context_total_ = 0;
};

class Scorer {
public:
    virtual ~Scorer() = default;
    virtual ScoreResult score(std::string_view text) const = 0;
    // Stable description echoed in reports.
    virtual std::string identity() const = 0;
};

class NGramScorer final : public Scorer {
public:
    NGramScorer(std::shared_ptr<const NGramModel> model, std::string identity);
    ScoreResult score(std::string_view text) const override;
    std::string identity() const override { return identity_; }
    const NGramModel& model() const noexcept { return *model_; }

private:
    std::shared_ptr<const NGramModel> model_;
    std::string identity_;
};

// Every word gets the same log-probability, rank 1 and zero entropy.
class ConstantScorer final : public Scorer {
public:
    explicit ConstantScorer(double logprob);
    ScoreResult score(std::string_view text) const override;
    std::string identity() const override;

private:
    double logprob_;
};

// Client of the score wire protocol: POST {endpoint}/v1/score.
class RemoteScorer final : public Scorer {
public:
    RemoteScorer(std::string endpoint, HttpOptions options);
    ScoreResult score(std::string_view text) const override;
    std::string identity() const override { return "remote:" + client_.endpoint(); }

private:
    JsonHttpClient client_;
};

// Decodes a /v1/score response body. Null positions are dropped.
ScoreResult parse_score_response(const nlohmann::json& body);

}  // namespace nete
