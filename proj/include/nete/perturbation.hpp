#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nete/corpus.hpp"
#include "nete/http.hpp"
#include "nete/rng.hpp"
#include "nete/scoring.hpp"

namespace nete {

struct Span {
    std::size_t start = 0;
    std::size_t length = 0;

    bool operator==(const Span&) const = default;
};

struct MaskPlan {
    // Disjoint, sorted by start.
    std::vector<Span> spans;
    double target_ratio = 0.0;
    double achieved_ratio = 0.0;
    // Spans in the order they were drawn; the last entry is the one that
    // crossed the target.
    std::vector<Span> draw_order;

    std::size_t masked_words() const noexcept;
    std::vector<std::size_t> span_lengths() const;

    bool operator==(const MaskPlan&) const = default;
};

struct PerturbOptions {
    double mask_ratio = 0.10;
    int max_span = 2;
};

inline constexpr int default_perturbations = 50;
inline constexpr int max_plan_attempts = 1000;

// Number of words a plan must cover: ceil(ratio * n), at least one.
std::size_t required_masked_words(std::size_t word_count, double ratio);

// Draws uniform (start, length) spans, clipped at the text end, rejecting
// overlaps, until the masked fraction reaches the ratio. Throws after
// max_plan_attempts consecutive rejections.
MaskPlan plan_masks(const TokenizedText& tokens, double ratio, int max_span, Rng& rng);

// Replaces each span by "<mask_i>", numbered left to right from 0.
std::string apply_masks(const TokenizedText& tokens, const MaskPlan& plan);

std::string sentinel(std::size_t index);
// Number of "<mask_i>" sentinels; throws if they are not numbered 0..n-1 in order.
std::size_t count_sentinels(std::string_view masked_text);

class Filler {
public:
    virtual ~Filler() = default;
    // span_lengths[i] is the number of words masked by sentinel i; an empty
    // span list means one word per sentinel. Builtin fillers honor it exactly.
    virtual std::string fill(std::string_view masked_text, std::span<const std::size_t> span_lengths,
                             Rng& rng) const = 0;
    virtual std::string identity() const = 0;

    std::string fill(std::string_view masked_text, Rng& rng) const { return fill(masked_text, {}, rng); }
};

// Samples every masked word independently from the model's unigram distribution.
class UnigramFiller final : public Filler {
public:
    UnigramFiller(std::shared_ptr<const NGramModel> model, std::string identity);
    using Filler::fill;
    std::string fill(std::string_view masked_text, std::span<const std::size_t> span_lengths,
                     Rng& rng) const override;
    std::string identity() const override { return identity_; }

private:
    std::shared_ptr<const NGramModel> model_;
    std::string identity_;
};

// Samples masked words left to right from P(word | preceding words).
class ContextualFiller final : public Filler {
public:
    ContextualFiller(std::shared_ptr<const NGramModel> model, std::string identity);
    using Filler::fill;
    std::string fill(std::string_view masked_text, std::span<const std::size_t> span_lengths,
                     Rng& rng) const override;
    std::string identity() const override { return identity_; }

private:
    std::shared_ptr<const NGramModel> model_;
    std::string identity_;
};

// Client of the fill wire protocol: POST {endpoint}/v1/fill.
class RemoteFiller final : public Filler {
public:
    RemoteFiller(std::string endpoint, HttpOptions options, int candidates);
    using Filler::fill;
    std::string fill(std::string_view masked_text, std::span<const std::size_t> span_lengths,
                     Rng& rng) const override;
    std::string identity() const override { return "remote:" + client_.endpoint(); }

private:
    JsonHttpClient client_;
    int candidates_;
};

// Replaces sentinel i with fills[i] and normalizes whitespace.
std::string splice_fills(std::string_view masked_text, const std::vector<std::string>& fills);

struct PerturbationSet {
    std::string original;
    std::vector<std::string> perturbed;
    std::uint64_t seed = 0;
    std::vector<MaskPlan> plans;
    // Indices of perturbations that reproduced the original text.
    std::vector<std::size_t> unchanged;

    bool operator==(const PerturbationSet&) const = default;
};

// k plan+fill draws from the substream keyed by (seed, stream_id).
PerturbationSet perturb(std::string_view text, int k, const Filler& filler, const PerturbOptions& options,
                        std::uint64_t seed, std::string_view stream_id);

}  // namespace nete
