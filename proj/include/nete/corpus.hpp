#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace nete {

enum class Label { clean, backdoor, unknown };

std::string_view to_string(Label label) noexcept;
Label parse_label(std::string_view text);

struct TriggerMeta {
    // "word", "sentence" or "combo" for injected samples; externally generated
    // sets may carry other schemes (syntactic, style).
    std::string scheme;
    std::string payload;

    bool operator==(const TriggerMeta&) const = default;
};

struct Sample {
    std::string id;
    std::string text;
    Label label = Label::unknown;
    std::optional<TriggerMeta> trigger_meta;
    // Fields not covered by the schema, kept so save/load round-trips.
    nlohmann::json extras = nlohmann::json::object();

    bool operator==(const Sample&) const = default;
};

// Throws InvalidArgument if a sample breaks the Sample invariants.
void validate(const Sample& sample);

std::vector<Sample> load_jsonl(const std::filesystem::path& path);
std::vector<Sample> parse_jsonl(std::string_view content);
void save_jsonl(const std::vector<Sample>& samples, const std::filesystem::path& path);
std::string to_jsonl(const std::vector<Sample>& samples);

nlohmann::json to_json(const Sample& sample);

struct TokenizedText {
    std::vector<std::string> words;
    // Byte ranges [first, second) into the source text.
    std::vector<std::pair<std::size_t, std::size_t>> offsets;

    std::size_t size() const noexcept { return words.size(); }
};

// Splits on Unicode whitespace. Punctuation stays attached to its word.
TokenizedText tokenize_words(std::string_view text);
std::string detokenize(const std::vector<std::string>& words);

// Whitespace split without the empty-input check; used by scorers.
std::vector<std::string> split_words(std::string_view text);

}  // namespace nete
