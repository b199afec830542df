#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nete/corpus.hpp"
#include "nete/rng.hpp"

namespace nete {

enum class TriggerScheme { word, sentence, combo };
enum class SentencePosition { append, prepend };

std::string_view to_string(TriggerScheme scheme) noexcept;
TriggerScheme parse_scheme(std::string_view name);
SentencePosition parse_position(std::string_view name);

struct TriggerSpec {
    TriggerScheme scheme = TriggerScheme::word;
    // One or more rare words; each insertion draws one of them uniformly.
    std::vector<std::string> word_triggers;
    int word_count = 3;
    std::optional<std::string> sentence_trigger;
    SentencePosition sentence_position = SentencePosition::append;

    // Throws InvalidArgument when fields required by the scheme are missing.
    void validate() const;
    // Recorded in trigger_meta.payload.
    std::string payload() const;
};

// Inserts `trigger` before word slots[i] of the original text; slot n means
// after the last word. Slots must be distinct.
std::string insert_word_at(std::string_view text, std::string_view trigger, std::span<const std::size_t> slots);

// count distinct inter-word slots, drawn uniformly without replacement.
std::vector<std::size_t> draw_slots(std::size_t word_count, int count, Rng& rng);

std::string inject_word_trigger(std::string_view text, std::string_view trigger, int count, Rng& rng);
std::string inject_word_triggers(std::string_view text, std::span<const std::string> triggers, int count, Rng& rng);

std::string inject_sentence_trigger(std::string_view text, std::string_view trigger_sentence,
                                    SentencePosition position = SentencePosition::append);

// Poisons every (clean) sample with its own (seed, id) substream. Output ids
// carry the "_bd" suffix.
std::vector<Sample> poison_dataset(std::span<const Sample> samples, const TriggerSpec& spec, std::uint64_t seed);

inline constexpr std::string_view poisoned_id_suffix = "_bd";

}  // namespace nete
