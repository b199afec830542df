#include "nete/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "nete/error.hpp"

namespace nete {

std::string_view to_string(Label label) noexcept {
    switch (label) {
        case Label::clean: return "clean";
        case Label::backdoor: return "backdoor";
        case Label::unknown: return "unknown";
    }
    return "unknown";
}

Label parse_label(std::string_view text) {
    if (text == "clean") return Label::clean;
    if (text == "backdoor") return Label::backdoor;
    if (text == "unknown") return Label::unknown;
    throw InvalidArgument("unknown label \"" + std::string(text) + "\"");
}

namespace {

// Returns the byte length of a Unicode whitespace code point starting at
// text[i], or 0 if there is none.
std::size_t whitespace_at(std::string_view text, std::size_t i) noexcept {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == ' ' || (c >= 0x09 && c <= 0x0d)) return 1;
    if (c < 0x80) return 0;
    auto byte = [&](std::size_t k) -> unsigned {
        return i + k < text.size() ? static_cast<unsigned char>(text[i + k]) : 0u;
    };
    if (c == 0xc2 && (byte(1) == 0x85 || byte(1) == 0xa0)) return 2;
    if (c == 0xe1 && byte(1) == 0x9a && byte(2) == 0x80) return 3;  // U+1680
    if (c == 0xe2 && byte(1) == 0x80) {
        const unsigned b = byte(2);
        // U+2000..U+200A, U+2028, U+2029, U+202F
        if ((b >= 0x80 && b <= 0x8a) || b == 0xa8 || b == 0xa9 || b == 0xaf) return 3;
    }
    if (c == 0xe2 && byte(1) == 0x81 && byte(2) == 0x9f) return 3;  // U+205F
    if (c == 0xe3 && byte(1) == 0x80 && byte(2) == 0x80) return 3;  // U+3000
    return 0;
}

bool is_blank(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t w = whitespace_at(text, i);
        if (w == 0) return false;
        i += w;
    }
    return true;
}

Sample sample_from_json(const nlohmann::json& obj, std::size_t line_no) {
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (!obj.is_object()) throw ParseError(where + "expected a JSON object");

    Sample s;
    for (const auto& [key, value] : obj.items()) {
        if (key == "id") {
            if (!value.is_string()) throw ParseError(where + "\"id\" must be a string");
            s.id = value.get<std::string>();
        } else if (key == "text") {
            if (!value.is_string()) throw ParseError(where + "\"text\" must be a string");
            s.text = value.get<std::string>();
        } else if (key == "label") {
            if (!value.is_string()) throw ParseError(where + "\"label\" must be a string");
            try {
                s.label = parse_label(value.get<std::string>());
            } catch (const InvalidArgument& e) {
                throw ParseError(where + e.what());
            }
        } else if (key == "trigger_meta") {
            if (value.is_null()) continue;
            if (!value.is_object() || !value.contains("scheme") || !value.contains("payload") ||
                !value["scheme"].is_string() || !value["payload"].is_string())
                throw ParseError(where + "\"trigger_meta\" needs string \"scheme\" and \"payload\"");
            s.trigger_meta = TriggerMeta{value["scheme"].get<std::string>(),
                                         value["payload"].get<std::string>()};
        } else {
            s.extras[key] = value;
        }
    }
    if (!obj.contains("id")) throw ParseError(where + "missing \"id\"");
    if (!obj.contains("text")) throw ParseError(where + "missing \"text\"");
    try {
        validate(s);
    } catch (const InvalidArgument& e) {
        throw ParseError(where + e.what());
    }
    return s;
}

}  // namespace

void validate(const Sample& sample) {
    if (sample.id.empty()) throw InvalidArgument("sample id is empty");
    if (is_blank(sample.text)) throw InvalidArgument("sample \"" + sample.id + "\" has empty text");
    if (sample.trigger_meta && sample.label != Label::backdoor)
        throw InvalidArgument("sample \"" + sample.id + "\" has trigger_meta but is not labeled backdoor");
}

std::vector<Sample> parse_jsonl(std::string_view content) {
    std::vector<Sample> out;
    std::unordered_map<std::string, std::size_t> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        std::size_t end = content.find('\n', pos);
        if (end == std::string_view::npos) end = content.size();
        std::string_view line = content.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        Sample s = sample_from_json(obj, line_no);
        auto [it, inserted] = seen.emplace(s.id, line_no);
        if (!inserted)
            throw ParseError("duplicate id \"" + s.id + "\" on lines " + std::to_string(it->second) +
                             " and " + std::to_string(line_no));
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Sample> load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_jsonl(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

nlohmann::json to_json(const Sample& sample) {
    nlohmann::json obj = sample.extras.is_object() ? sample.extras : nlohmann::json::object();
    obj["id"] = sample.id;
    obj["text"] = sample.text;
    obj["label"] = std::string(to_string(sample.label));
    if (sample.trigger_meta)
        obj["trigger_meta"] = {{"scheme", sample.trigger_meta->scheme},
                               {"payload", sample.trigger_meta->payload}};
    return obj;
}

std::string to_jsonl(const std::vector<Sample>& samples) {
    std::string out;
    for (const auto& s : samples) {
        out += to_json(s).dump();
        out += '\n';
    }
    return out;
}

void save_jsonl(const std::vector<Sample>& samples, const std::filesystem::path& path) {
    const std::string content = to_jsonl(samples);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

TokenizedText tokenize_words(std::string_view text) {
    TokenizedText t;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t w = whitespace_at(text, i);
        if (w) {
            i += w;
            continue;
        }
        const std::size_t start = i;
        while (i < text.size() && whitespace_at(text, i) == 0) ++i;
        t.words.emplace_back(text.substr(start, i - start));
        t.offsets.emplace_back(start, i);
    }
    if (t.words.empty()) throw InvalidArgument("text contains no words");
    return t;
}

std::vector<std::string> split_words(std::string_view text) {
    if (is_blank(text)) return {};
    return tokenize_words(text).words;
}

std::string detokenize(const std::vector<std::string>& words) {
    if (words.empty()) throw InvalidArgument("cannot detokenize an empty word list");
    std::string out = words.front();
    for (std::size_t i = 1; i < words.size(); ++i) {
        out += ' ';
        out += words[i];
    }
    return out;
}

}  // namespace nete
