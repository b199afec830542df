#include "nete/perturbation.hpp"

#include <algorithm>
#include <cmath>

#include "nete/error.hpp"

namespace nete {

std::size_t MaskPlan::masked_words() const noexcept {
    std::size_t n = 0;
    for (const auto& s : spans) n += s.length;
    return n;
}

std::vector<std::size_t> MaskPlan::span_lengths() const {
    std::vector<std::size_t> out;
    out.reserve(spans.size());
    for (const auto& s : spans) out.push_back(s.length);
    return out;
}

std::size_t required_masked_words(std::size_t word_count, double ratio) {
    // The 1e-9 guard keeps products such as 0.1 * 30 from rounding up.
    const double exact = ratio * static_cast<double>(word_count);
    auto need = static_cast<std::size_t>(std::ceil(exact - 1e-9));
    return std::clamp<std::size_t>(need, 1, word_count);
}

MaskPlan plan_masks(const TokenizedText& tokens, double ratio, int max_span, Rng& rng) {
    const std::size_t n = tokens.size();
    if (n == 0) throw InvalidArgument("cannot plan masks for a text with no words");
    if (!(ratio > 0.0 && ratio <= 1.0)) throw InvalidArgument("mask ratio must lie in (0, 1]");
    if (max_span < 1) throw InvalidArgument("max span must be >= 1");

    const std::size_t need = required_masked_words(n, ratio);
    std::vector<bool> taken(n, false);
    MaskPlan plan;
    plan.target_ratio = ratio;
    std::size_t masked = 0;
    while (masked < need) {
        int attempts = 0;
        for (;;) {
            if (++attempts > max_plan_attempts)
                throw Error("mask planning gave up after " + std::to_string(max_plan_attempts) +
                            " rejected draws");
            const std::size_t start = rng.uniform_index(n);
            const std::size_t len = std::min<std::size_t>(
                1 + rng.uniform_index(static_cast<std::uint64_t>(max_span)), n - start);
            bool overlap = false;
            for (std::size_t i = start; i < start + len; ++i) overlap = overlap || taken[i];
            if (overlap) continue;
            for (std::size_t i = start; i < start + len; ++i) taken[i] = true;
            plan.draw_order.push_back({start, len});
            masked += len;
            break;
        }
    }
    plan.spans = plan.draw_order;
    std::sort(plan.spans.begin(), plan.spans.end(),
              [](const Span& a, const Span& b) { return a.start < b.start; });
    plan.achieved_ratio = static_cast<double>(masked) / static_cast<double>(n);
    return plan;
}

std::string sentinel(std::size_t index) {
    return "<mask_" + std::to_string(index) + ">";
}

std::string apply_masks(const TokenizedText& tokens, const MaskPlan& plan) {
    const std::size_t n = tokens.size();
    std::vector<std::string> out;
    std::size_t next = 0;
    std::size_t idx = 0;
    for (const auto& span : plan.spans) {
        if (span.length == 0 || span.start < next || span.start + span.length > n)
            throw InvalidArgument("mask span (" + std::to_string(span.start) + ", " +
                                  std::to_string(span.length) + ") is out of range or overlapping for " +
                                  std::to_string(n) + " words");
        for (; next < span.start; ++next) out.push_back(tokens.words[next]);
        out.push_back(sentinel(idx++));
        next = span.start + span.length;
    }
    for (; next < n; ++next) out.push_back(tokens.words[next]);
    return detokenize(out);
}

namespace {

// Index encoded by a "<mask_N>" word, or -1.
long sentinel_index(std::string_view word) {
    constexpr std::string_view prefix = "<mask_";
    if (word.size() < prefix.size() + 2 || word.substr(0, prefix.size()) != prefix || word.back() != '>')
        return -1;
    const auto digits = word.substr(prefix.size(), word.size() - prefix.size() - 1);
    long v = 0;
    for (char c : digits) {
        if (c < '0' || c > '9') return -1;
        v = v * 10 + (c - '0');
    }
    return v;
}

std::size_t checked_sentinel_count(const std::vector<std::string>& words) {
    std::size_t expected = 0;
    for (const auto& w : words) {
        const long idx = sentinel_index(w);
        if (idx < 0) continue;
        if (static_cast<std::size_t>(idx) != expected)
            throw InvalidArgument("sentinel " + w + " out of order; expected " + sentinel(expected));
        ++expected;
    }
    return expected;
}

std::size_t span_length_for(std::span<const std::size_t> lengths, std::size_t idx, std::size_t count) {
    if (lengths.empty()) return 1;
    if (lengths.size() != count)
        throw InvalidArgument("got " + std::to_string(lengths.size()) + " span lengths for " +
                              std::to_string(count) + " sentinels");
    if (lengths[idx] == 0) throw InvalidArgument("span length must be positive");
    return lengths[idx];
}

}  // namespace

std::size_t count_sentinels(std::string_view masked_text) {
    return checked_sentinel_count(split_words(masked_text));
}

std::string splice_fills(std::string_view masked_text, const std::vector<std::string>& fills) {
    const auto words = split_words(masked_text);
    const std::size_t count = checked_sentinel_count(words);
    if (fills.size() != count)
        throw InvalidArgument("got " + std::to_string(fills.size()) + " fills for " + std::to_string(count) +
                              " sentinels");
    std::vector<std::string> out;
    for (const auto& w : words) {
        const long idx = sentinel_index(w);
        if (idx < 0) {
            out.push_back(w);
            continue;
        }
        for (auto& piece : split_words(fills[static_cast<std::size_t>(idx)])) out.push_back(std::move(piece));
    }
    if (out.empty()) throw ProtocolError("filling produced an empty text");
    return detokenize(out);
}

UnigramFiller::UnigramFiller(std::shared_ptr<const NGramModel> model, std::string identity)
    : model_(std::move(model)), identity_(std::move(identity)) {
    if (!model_) throw InvalidArgument("unigram filler needs a model");
}

std::string UnigramFiller::fill(std::string_view masked_text, std::span<const std::size_t> span_lengths,
                                Rng& rng) const {
    const auto words = split_words(masked_text);
    const std::size_t count = checked_sentinel_count(words);
    if (count == 0) throw InvalidArgument("masked text contains no sentinel");
    std::vector<std::string> out;
    for (const auto& w : words) {
        const long idx = sentinel_index(w);
        if (idx < 0) {
            out.push_back(w);
            continue;
        }
        const std::size_t len = span_length_for(span_lengths, static_cast<std::size_t>(idx), count);
        for (std::size_t j = 0; j < len; ++j) out.push_back(model_->word_of(model_->sample_unigram(rng)));
    }
    return detokenize(out);
}

ContextualFiller::ContextualFiller(std::shared_ptr<const NGramModel> model, std::string identity)
    : model_(std::move(model)), identity_(std::move(identity)) {
    if (!model_) throw InvalidArgument("contextual filler needs a model");
}

std::string ContextualFiller::fill(std::string_view masked_text, std::span<const std::size_t> span_lengths,
                                   Rng& rng) const {
    const auto words = split_words(masked_text);
    const std::size_t count = checked_sentinel_count(words);
    if (count == 0) throw InvalidArgument("masked text contains no sentinel");
    std::vector<std::string> out;
    std::vector<TokenId> history;
    for (const auto& w : words) {
        const long idx = sentinel_index(w);
        if (idx < 0) {
            out.push_back(w);
            history.push_back(model_->id_of(w));
            continue;
        }
        const std::size_t len = span_length_for(span_lengths, static_cast<std::size_t>(idx), count);
        for (std::size_t j = 0; j < len; ++j) {
            const TokenId t = model_->sample_next(history, rng);
            history.push_back(t);
            out.push_back(model_->word_of(t));
        }
    }
    return detokenize(out);
}

RemoteFiller::RemoteFiller(std::string endpoint, HttpOptions options, int candidates)
    : client_(std::move(endpoint), options), candidates_(candidates) {
    if (candidates_ < 1) throw InvalidArgument("candidates per span must be >= 1");
}

std::string RemoteFiller::fill(std::string_view masked_text, std::span<const std::size_t>, Rng& rng) const {
    const std::size_t count = count_sentinels(masked_text);
    if (count == 0) throw InvalidArgument("masked text contains no sentinel");
    const nlohmann::json request{{"masked_text", std::string(masked_text)},
                                 {"num_spans", count},
                                 {"candidates", candidates_}};
    const auto body = client_.post("/v1/fill", request);
    const auto bad = [&](const std::string& why) {
        return ProtocolError(client_.endpoint() + "/v1/fill: " + why + " in " + excerpt(body.dump()));
    };
    if (!body.is_object() || !body.contains("fills") || !body["fills"].is_array() || body["fills"].empty())
        throw bad("missing non-empty array \"fills\"");
    const auto& all = body["fills"];
    const auto& chosen = all[rng.uniform_index(all.size())];
    if (!chosen.is_array()) throw bad("candidate is not an array");
    if (chosen.size() != count)
        throw bad("got " + std::to_string(chosen.size()) + " fills for " + std::to_string(count) + " sentinels");
    std::vector<std::string> fills;
    for (const auto& f : chosen) {
        if (!f.is_string()) throw bad("fill is not a string");
        fills.push_back(f.get<std::string>());
    }
    return splice_fills(masked_text, fills);
}

PerturbationSet perturb(std::string_view text, int k, const Filler& filler, const PerturbOptions& options,
                        std::uint64_t seed, std::string_view stream_id) {
    if (k < 1) throw InvalidArgument("number of perturbations must be >= 1");
    const auto tokens = tokenize_words(text);
    Rng rng = Rng::substream(seed, stream_id);

    PerturbationSet set;
    set.original = std::string(text);
    set.seed = seed;
    set.perturbed.reserve(static_cast<std::size_t>(k));
    set.plans.reserve(static_cast<std::size_t>(k));
    const std::string normalized = detokenize(tokens.words);
    for (int i = 0; i < k; ++i) {
        MaskPlan plan = plan_masks(tokens, options.mask_ratio, options.max_span, rng);
        const std::string masked = apply_masks(tokens, plan);
        const auto lengths = plan.span_lengths();
        std::string filled = filler.fill(masked, lengths, rng);
        if (filled == normalized) set.unchanged.push_back(static_cast<std::size_t>(i));
        set.perturbed.push_back(std::move(filled));
        set.plans.push_back(std::move(plan));
    }
    return set;
}

}  // namespace nete
