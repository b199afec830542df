#include <doctest.h>

#include "nete/corpus.hpp"
#include "nete/error.hpp"
#include "temp_dir.hpp"

using namespace nete;

TEST_CASE("parse_jsonl maps fields") {
    const auto s = parse_jsonl(R"({"id":"a","text":"hi there","label":"clean"})");
    REQUIRE(s.size() == 1);
    CHECK(s[0].id == "a");
    CHECK(s[0].text == "hi there");
    CHECK(s[0].label == Label::clean);
    CHECK_FALSE(s[0].trigger_meta);
}

TEST_CASE("missing label means unknown") {
    const auto s = parse_jsonl(R"({"id":"a","text":"x"})");
    CHECK(s[0].label == Label::unknown);
}

TEST_CASE("empty file gives empty list") {
    TempDir dir;
    CHECK(load_jsonl(dir.write("e.jsonl", "")).empty());
    CHECK(parse_jsonl("\n\n").empty());
}

TEST_CASE("duplicate id names both lines") {
    const std::string content = "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"b\",\"text\":\"y\"}\n{\"id\":\"a\",\"text\":\"z\"}\n";
    try {
        parse_jsonl(content);
        FAIL("expected a duplicate-id error");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("\"a\"") != std::string::npos);
        CHECK(msg.find("1") != std::string::npos);
        CHECK(msg.find("3") != std::string::npos);
    }
}

TEST_CASE("malformed line is reported with its number") {
    const std::string content = "{\"id\":\"a\",\"text\":\"x\"}\n{not json\n";
    try {
        parse_jsonl(content);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_jsonl(R"({"id":"a"})"), ParseError);
    CHECK_THROWS_AS(parse_jsonl(R"({"id":"a","text":"x","label":"maybe"})"), ParseError);
    CHECK_THROWS_AS(parse_jsonl(R"({"id":"a","text":"   "})"), ParseError);
    CHECK_THROWS_AS(parse_jsonl(R"([1,2])"), ParseError);
}

TEST_CASE("save/load round-trip with trigger_meta and extras") {
    std::vector<Sample> samples{
        {"c1", "the cat sat", Label::clean, std::nullopt, nlohmann::json::object()},
        {"b1", "the cf cat sat", Label::backdoor, TriggerMeta{"word", "cf"}, nlohmann::json::object()},
        {"u1", "naïve café \"quoted\"", Label::unknown, std::nullopt, {{"source", "web"}, {"n", 3}}},
    };
    TempDir dir;
    const auto path = dir.file("s.jsonl");
    save_jsonl(samples, path);
    const auto back = load_jsonl(path);
    CHECK(back == samples);
    REQUIRE(back[1].trigger_meta);
    CHECK(back[1].trigger_meta->payload == "cf");
    CHECK(back[2].extras.at("source") == "web");
}

TEST_CASE("trigger_meta requires backdoor label") {
    Sample s{"x", "a b", Label::clean, TriggerMeta{"word", "cf"}, nlohmann::json::object()};
    CHECK_THROWS_AS(validate(s), InvalidArgument);
}

TEST_CASE("I/O errors carry the path") {
    TempDir dir;
    const auto bad = dir.file("missing_dir/out.jsonl");
    try {
        save_jsonl({}, bad);
        FAIL("expected an I/O error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("missing_dir") != std::string::npos);
    }
    CHECK_THROWS_AS(load_jsonl(dir.file("nope.jsonl")), IoError);
}

TEST_CASE("tokenize_words splits on whitespace and keeps punctuation") {
    const auto t = tokenize_words("It is cool.");
    CHECK(t.words == std::vector<std::string>{"It", "is", "cool."});

    const auto d = tokenize_words("a  b");
    CHECK(d.words == std::vector<std::string>{"a", "b"});
    REQUIRE(d.offsets.size() == 2);
    CHECK(d.offsets[0] == std::pair<std::size_t, std::size_t>{0, 1});
    CHECK(d.offsets[1] == std::pair<std::size_t, std::size_t>{3, 4});

    CHECK_THROWS_AS(tokenize_words("   "), InvalidArgument);
    CHECK_THROWS_AS(tokenize_words(""), InvalidArgument);
}

TEST_CASE("tokenize_words handles unicode whitespace") {
    // U+00A0 no-break space and U+3000 ideographic space.
    const std::string text = "a\xC2\xA0" "b\xE3\x80\x80" "c\td\n";
    const auto t = tokenize_words(text);
    CHECK(t.words == std::vector<std::string>{"a", "b", "c", "d"});
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(text.substr(t.offsets[i].first, t.offsets[i].second - t.offsets[i].first) == t.words[i]);
}

TEST_CASE("detokenize") {
    CHECK(detokenize({"It", "is", "cool."}) == "It is cool.");
    CHECK(detokenize({"x"}) == "x");
    CHECK_THROWS_AS(detokenize({}), InvalidArgument);
    CHECK(detokenize(tokenize_words("  spaced   out  text ").words) == "spaced out text");
}
