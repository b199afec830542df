#include "nete/injection.hpp"

#include <algorithm>
#include <numeric>

#include "nete/error.hpp"

namespace nete {

std::string_view to_string(TriggerScheme scheme) noexcept {
    switch (scheme) {
        case TriggerScheme::word: return "word";
        case TriggerScheme::sentence: return "sentence";
        case TriggerScheme::combo: return "combo";
    }
    return "word";
}

TriggerScheme parse_scheme(std::string_view name) {
    if (name == "word") return TriggerScheme::word;
    if (name == "sentence") return TriggerScheme::sentence;
    if (name == "combo" || name == "word_sen") return TriggerScheme::combo;
    throw InvalidArgument("unknown trigger scheme \"" + std::string(name) + "\" (expected word, sentence or combo)");
}

SentencePosition parse_position(std::string_view name) {
    if (name == "append") return SentencePosition::append;
    if (name == "prepend") return SentencePosition::prepend;
    throw InvalidArgument("unknown sentence position \"" + std::string(name) + "\" (expected append or prepend)");
}

namespace {

void check_word_trigger(std::string_view trigger) {
    if (trigger.empty()) throw InvalidArgument("word trigger is empty");
    if (split_words(trigger).size() != 1 || split_words(trigger).front() != trigger)
        throw InvalidArgument("word trigger \"" + std::string(trigger) + "\" contains whitespace");
}

}  // namespace

void TriggerSpec::validate() const {
    const bool needs_word = scheme != TriggerScheme::sentence;
    const bool needs_sentence = scheme != TriggerScheme::word;
    if (needs_word) {
        if (word_triggers.empty()) throw InvalidArgument(std::string(to_string(scheme)) + " scheme needs a word trigger");
        for (const auto& w : word_triggers) check_word_trigger(w);
        if (word_count < 1) throw InvalidArgument("word trigger count must be >= 1");
    }
    if (needs_sentence && (!sentence_trigger || split_words(*sentence_trigger).empty()))
        throw InvalidArgument(std::string(to_string(scheme)) + " scheme needs a sentence trigger");
}

std::string TriggerSpec::payload() const {
    std::string words;
    for (const auto& w : word_triggers) words += (words.empty() ? "" : ",") + w;
    switch (scheme) {
        case TriggerScheme::word: return words;
        case TriggerScheme::sentence: return sentence_trigger.value_or("");
        case TriggerScheme::combo: return words + " || " + sentence_trigger.value_or("");
    }
    return words;
}

std::string insert_word_at(std::string_view text, std::string_view trigger, std::span<const std::size_t> slots) {
    check_word_trigger(trigger);
    const auto words = tokenize_words(text).words;
    std::vector<bool> at(words.size() + 1, false);
    for (std::size_t s : slots) {
        if (s > words.size()) throw InvalidArgument("insertion slot " + std::to_string(s) + " is out of range");
        if (at[s]) throw InvalidArgument("insertion slot " + std::to_string(s) + " repeated");
        at[s] = true;
    }
    std::vector<std::string> out;
    out.reserve(words.size() + slots.size());
    for (std::size_t i = 0; i <= words.size(); ++i) {
        if (at[i]) out.emplace_back(trigger);
        if (i < words.size()) out.push_back(words[i]);
    }
    return detokenize(out);
}

std::vector<std::size_t> draw_slots(std::size_t word_count, int count, Rng& rng) {
    if (count < 1) throw InvalidArgument("word trigger count must be >= 1");
    const std::size_t slots = word_count + 1;
    if (static_cast<std::size_t>(count) > slots)
        throw InvalidArgument("cannot insert " + std::to_string(count) + " triggers into " +
                              std::to_string(word_count) + " words (" + std::to_string(slots) + " slots)");
    std::vector<std::size_t> pool(slots);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (int i = 0; i < count; ++i) {
        const auto j = static_cast<std::size_t>(i) + rng.uniform_index(slots - static_cast<std::size_t>(i));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(count));
    return pool;
}

std::string inject_word_trigger(std::string_view text, std::string_view trigger, int count, Rng& rng) {
    check_word_trigger(trigger);
    const auto slots = draw_slots(tokenize_words(text).size(), count, rng);
    return insert_word_at(text, trigger, slots);
}

std::string inject_word_triggers(std::string_view text, std::span<const std::string> triggers, int count, Rng& rng) {
    if (triggers.empty()) throw InvalidArgument("no word triggers given");
    if (triggers.size() == 1) return inject_word_trigger(text, triggers.front(), count, rng);
    for (const auto& t : triggers) check_word_trigger(t);
    const auto words = tokenize_words(text).words;
    const auto slots = draw_slots(words.size(), count, rng);
    std::vector<std::optional<std::string>> at(words.size() + 1);
    for (std::size_t s : slots) at[s] = triggers[rng.uniform_index(triggers.size())];
    std::vector<std::string> out;
    for (std::size_t i = 0; i <= words.size(); ++i) {
        if (at[i]) out.push_back(*at[i]);
        if (i < words.size()) out.push_back(words[i]);
    }
    return detokenize(out);
}

std::string inject_sentence_trigger(std::string_view text, std::string_view trigger_sentence,
                                    SentencePosition position) {
    if (split_words(trigger_sentence).empty()) throw InvalidArgument("sentence trigger is empty");
    if (position == SentencePosition::append) return std::string(text) + " " + std::string(trigger_sentence);
    return std::string(trigger_sentence) + " " + std::string(text);
}

std::vector<Sample> poison_dataset(std::span<const Sample> samples, const TriggerSpec& spec, std::uint64_t seed) {
    spec.validate();
    for (const auto& s : samples) {
        if (s.label != Label::clean)
            throw InvalidArgument("sample \"" + s.id + "\" is labeled " + std::string(to_string(s.label)) +
                                  "; only clean samples can be poisoned");
    }
    std::vector<Sample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        Rng rng = Rng::substream(seed, s.id);
        std::string text = s.text;
        if (spec.scheme != TriggerScheme::sentence)
            text = inject_word_triggers(text, spec.word_triggers, spec.word_count, rng);
        if (spec.scheme != TriggerScheme::word)
            text = inject_sentence_trigger(text, *spec.sentence_trigger, spec.sentence_position);

        Sample p = s;
        p.id = s.id + std::string(poisoned_id_suffix);
        p.text = std::move(text);
        p.label = Label::backdoor;
        p.trigger_meta = TriggerMeta{std::string(to_string(spec.scheme)), spec.payload()};
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace nete
