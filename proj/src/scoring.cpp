#include "nete/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "nete/corpus.hpp"
#include "nete/error.hpp"
#include "nete/json_writer.hpp"

namespace nete {

ScoreResult ScoreResult::from_positions(std::vector<double> logprobs, std::vector<std::int64_t> ranks,
                                        std::vector<double> entropies) {
    if (logprobs.empty()) throw InvalidArgument("score result has no tokens");
    if (ranks.size() != logprobs.size() || entropies.size() != logprobs.size())
        throw InvalidArgument("score result lists differ in length");

    ScoreResult r;
    r.token_count = logprobs.size();
    double sum_lp = 0.0, sum_rank = 0.0, sum_log_rank = 0.0, sum_ent = 0.0;
    for (std::size_t i = 0; i < r.token_count; ++i) {
        if (!(logprobs[i] <= 0.0))
            throw InvalidArgument("log-probability at position " + std::to_string(i) + " is not <= 0");
        if (ranks[i] < 1) throw InvalidArgument("rank at position " + std::to_string(i) + " is < 1");
        if (!(entropies[i] >= 0.0) || !std::isfinite(entropies[i]))
            throw InvalidArgument("entropy at position " + std::to_string(i) + " is not a finite value >= 0");
        sum_lp += logprobs[i];
        sum_rank += static_cast<double>(ranks[i]);
        sum_log_rank += std::log(static_cast<double>(ranks[i]));
        sum_ent += entropies[i];
    }
    const auto n = static_cast<double>(r.token_count);
    r.mean_logprob = sum_lp / n;
    r.mean_rank = sum_rank / n;
    r.mean_log_rank = sum_log_rank / n;
    r.mean_entropy = sum_ent / n;
    r.logprobs = std::move(logprobs);
    r.ranks = std::move(ranks);
    r.entropies = std::move(entropies);
    return r;
}

nlohmann::json to_json(const ScoreResult& r) {
    return {{"token_count", r.token_count},   {"logprobs", r.logprobs},
            {"ranks", r.ranks},               {"entropies", r.entropies},
            {"mean_logprob", r.mean_logprob}, {"mean_rank", r.mean_rank},
            {"mean_log_rank", r.mean_log_rank}, {"mean_entropy", r.mean_entropy}};
}

// ---------------------------------------------------------------------------
// NGramModel

std::size_t NGramModel::KeyHash::operator()(const std::vector<TokenId>& key) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (TokenId id : key) {
        h ^= id + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
}

NGramModel NGramModel::train(const std::vector<std::string>& corpus_texts, int order, double alpha) {
    if (order < 1) throw InvalidArgument("n-gram order must be >= 1");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("smoothing alpha must be > 0");

    std::vector<std::vector<std::string>> tokenized;
    tokenized.reserve(corpus_texts.size());
    std::set<std::string> words{std::string(unk_token)};
    for (const auto& text : corpus_texts) {
        auto w = split_words(text);
        if (w.empty()) continue;
        words.insert(w.begin(), w.end());
        tokenized.push_back(std::move(w));
    }
    if (tokenized.empty()) throw InvalidArgument("cannot train an n-gram model on an empty corpus");

    NGramModel m;
    m.order_ = order;
    m.alpha_ = alpha;
    m.vocab_.assign(words.begin(), words.end());
    for (TokenId i = 0; i < m.vocab_.size(); ++i) m.index_.emplace(m.vocab_[i], i);
    m.unk_id_ = m.index_.at(std::string(unk_token));

    std::map<std::vector<TokenId>, std::map<TokenId, std::uint64_t>> table;
    for (const auto& sentence : tokenized) {
        const auto ids = m.encode(sentence);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            auto key = m.context_key(std::span<const TokenId>(ids.data(), i));
            ++table[std::move(key)][ids[i]];
        }
    }
    m.finalize(table);
    return m;
}

NGramModel NGramModel::from_counts(int order, double alpha, std::vector<std::string> vocabulary,
                                   std::map<std::vector<TokenId>, std::map<TokenId, std::uint64_t>> table) {
    if (order < 1) throw InvalidArgument("n-gram order must be >= 1");
    if (!(alpha > 0.0)) throw InvalidArgument("smoothing alpha must be > 0");
    NGramModel m;
    m.order_ = order;
    m.alpha_ = alpha;
    m.vocab_ = std::move(vocabulary);
    for (TokenId i = 0; i < m.vocab_.size(); ++i) {
        if (!m.index_.emplace(m.vocab_[i], i).second)
            throw InvalidArgument("duplicate vocabulary entry \"" + m.vocab_[i] + "\"");
    }
    auto unk = m.index_.find(std::string(unk_token));
    if (unk == m.index_.end()) throw InvalidArgument("vocabulary must contain " + std::string(unk_token));
    m.unk_id_ = unk->second;
    for (const auto& [ctx, row] : table) {
        if (ctx.size() != static_cast<std::size_t>(order - 1))
            throw InvalidArgument("context length does not match order - 1");
        for (const auto& [tok, c] : row) {
            (void)c;
            if (tok >= m.vocab_.size()) throw InvalidArgument("count table references unknown token id");
        }
    }
    m.finalize(table);
    return m;
}

void NGramModel::finalize(std::map<std::vector<TokenId>, std::map<TokenId, std::uint64_t>>& table) {
    std::map<TokenId, std::uint64_t> uni;
    for (auto& [ctx, row] : table) {
        Successors s;
        for (const auto& [tok, c] : row) {
            if (c == 0) continue;
            s.counts.emplace_back(tok, c);
            s.total += c;
            uni[tok] += c;
        }
        max_context_total_ = std::max(max_context_total_, s.total);
        contexts_.emplace(ctx, std::move(s));
    }
    for (const auto& [tok, c] : uni) {
        unigrams_.counts.emplace_back(tok, c);
        unigrams_.total += c;
    }
}

TokenId NGramModel::id_of(std::string_view word) const {
    auto it = index_.find(std::string(word));
    return it == index_.end() ? unk_id_ : it->second;
}

std::vector<TokenId> NGramModel::encode(const std::vector<std::string>& words) const {
    std::vector<TokenId> ids;
    ids.reserve(words.size());
    for (const auto& w : words) ids.push_back(id_of(w));
    return ids;
}

std::vector<TokenId> NGramModel::context_key(std::span<const TokenId> history) const {
    const auto n = static_cast<std::size_t>(order_ - 1);
    std::vector<TokenId> key(n, bos_id);
    const std::size_t take = std::min(n, history.size());
    std::copy(history.end() - static_cast<std::ptrdiff_t>(take), history.end(),
              key.end() - static_cast<std::ptrdiff_t>(take));
    return key;
}

const NGramModel::Successors* NGramModel::successors(std::span<const TokenId> history) const {
    auto it = contexts_.find(context_key(history));
    return it == contexts_.end() ? nullptr : &it->second;
}

namespace {

std::uint64_t count_of(const NGramModel::Successors* succ, TokenId token) {
    if (!succ) return 0;
    auto it = std::lower_bound(succ->counts.begin(), succ->counts.end(), token,
                               [](const auto& entry, TokenId t) { return entry.first < t; });
    return (it != succ->counts.end() && it->first == token) ? it->second : 0;
}

}  // namespace

double NGramModel::probability(std::span<const TokenId> history, TokenId token) const {
    const auto* succ = successors(history);
    const double total = succ ? static_cast<double>(succ->total) : 0.0;
    const double z = total + alpha_ * static_cast<double>(vocab_.size());
    return (static_cast<double>(count_of(succ, token)) + alpha_) / z;
}

NGramModel::PositionStats NGramModel::stats_from(const Successors* succ, TokenId token) const {
    const double total = succ ? static_cast<double>(succ->total) : 0.0;
    const auto v = static_cast<double>(vocab_.size());
    const double log_z = std::log(total + alpha_ * v);
    const std::uint64_t c = count_of(succ, token);

    PositionStats st{};
    st.logprob = std::log(static_cast<double>(c) + alpha_) - log_z;

    std::int64_t greater = 0;
    double entropy = 0.0;
    std::size_t seen = 0;
    if (succ) {
        for (const auto& [tok, cnt] : succ->counts) {
            (void)tok;
            if (cnt > c) ++greater;
            const double lp = std::log(static_cast<double>(cnt) + alpha_) - log_z;
            entropy -= std::exp(lp) * lp;
            ++seen;
        }
    }
    const double lq = std::log(alpha_) - log_z;
    entropy -= (v - static_cast<double>(seen)) * std::exp(lq) * lq;
    st.rank = 1 + greater;
    st.entropy = std::max(0.0, entropy);
    return st;
}

NGramModel::PositionStats NGramModel::position_stats(std::span<const TokenId> history, TokenId token) const {
    return stats_from(successors(history), token);
}

TokenId NGramModel::sample_from(const Successors* succ, Rng& rng) const {
    const double total = succ ? static_cast<double>(succ->total) : 0.0;
    const double z = total + alpha_ * static_cast<double>(vocab_.size());
    const double u = rng.uniform01() * z;
    if (succ && u < total) {
        double acc = 0.0;
        for (const auto& [tok, cnt] : succ->counts) {
            acc += static_cast<double>(cnt);
            if (u < acc) return tok;
        }
        return succ->counts.back().first;
    }
    return static_cast<TokenId>(rng.uniform_index(vocab_.size()));
}

TokenId NGramModel::sample_next(std::span<const TokenId> history, Rng& rng) const {
    return sample_from(successors(history), rng);
}

TokenId NGramModel::sample_unigram(Rng& rng) const {
    return sample_from(&unigrams_, rng);
}

double NGramModel::unigram_probability(TokenId token) const {
    const double z = static_cast<double>(unigrams_.total) + alpha_ * static_cast<double>(vocab_.size());
    return (static_cast<double>(count_of(&unigrams_, token)) + alpha_) / z;
}

// ---------------------------------------------------------------------------
// Scorers

NGramScorer::NGramScorer(std::shared_ptr<const NGramModel> model, std::string identity)
    : model_(std::move(model)), identity_(std::move(identity)) {
    if (!model_) throw InvalidArgument("n-gram scorer needs a model");
}

ScoreResult NGramScorer::score(std::string_view text) const {
    const auto words = split_words(text);
    if (words.empty()) throw InvalidArgument("cannot score empty text");
    const auto ids = model_->encode(words);
    std::vector<double> lp(ids.size()), ent(ids.size());
    std::vector<std::int64_t> rk(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto st = model_->position_stats(std::span<const TokenId>(ids.data(), i), ids[i]);
        lp[i] = st.logprob;
        rk[i] = st.rank;
        ent[i] = st.entropy;
    }
    return ScoreResult::from_positions(std::move(lp), std::move(rk), std::move(ent));
}

ConstantScorer::ConstantScorer(double logprob) : logprob_(logprob) {
    if (!(logprob <= 0.0) || !std::isfinite(logprob))
        throw InvalidArgument("constant scorer log-probability must be finite and <= 0");
}

ScoreResult ConstantScorer::score(std::string_view text) const {
    const auto words = split_words(text);
    if (words.empty()) throw InvalidArgument("cannot score empty text");
    return ScoreResult::from_positions(std::vector<double>(words.size(), logprob_),
                                       std::vector<std::int64_t>(words.size(), 1),
                                       std::vector<double>(words.size(), 0.0));
}

std::string ConstantScorer::identity() const {
    return "builtin:constant?logprob=" + format_double_short(logprob_);
}

RemoteScorer::RemoteScorer(std::string endpoint, HttpOptions options)
    : client_(std::move(endpoint), options) {}

ScoreResult RemoteScorer::score(std::string_view text) const {
    if (split_words(text).empty()) throw InvalidArgument("cannot score empty text");
    const auto body = client_.post("/v1/score", nlohmann::json{{"text", std::string(text)}});
    try {
        return parse_score_response(body);
    } catch (const ProtocolError& e) {
        throw ProtocolError(client_.endpoint() + "/v1/score: " + e.what());
    }
}

ScoreResult parse_score_response(const nlohmann::json& body) {
    const auto bad = [&](const std::string& why) {
        return ProtocolError(why + " in " + excerpt(body.dump()));
    };
    if (!body.is_object()) throw bad("response is not a JSON object");
    for (const char* key : {"tokens", "logprobs", "ranks", "entropies"}) {
        if (!body.contains(key) || !body[key].is_array()) throw bad(std::string("missing array \"") + key + "\"");
    }
    const auto& tokens = body["tokens"];
    const auto& lps = body["logprobs"];
    const auto& rks = body["ranks"];
    const auto& ens = body["entropies"];
    const std::size_t n = tokens.size();
    if (lps.size() != n || rks.size() != n || ens.size() != n) throw bad("array lengths differ");

    std::vector<double> lp;
    std::vector<std::int64_t> rk;
    std::vector<double> en;
    for (std::size_t i = 0; i < n; ++i) {
        if (lps[i].is_null() || rks[i].is_null() || ens[i].is_null()) continue;
        if (!lps[i].is_number() || !ens[i].is_number()) throw bad("non-numeric entry at position " + std::to_string(i));
        if (!rks[i].is_number_integer()) throw bad("non-integer rank at position " + std::to_string(i));
        lp.push_back(lps[i].get<double>());
        rk.push_back(rks[i].get<std::int64_t>());
        en.push_back(ens[i].get<double>());
    }
    try {
        return ScoreResult::from_positions(std::move(lp), std::move(rk), std::move(en));
    } catch (const InvalidArgument& e) {
        throw bad(e.what());
    }
}

}  // namespace nete
