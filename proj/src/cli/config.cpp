#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "nete/cli.hpp"
#include "nete/corpus.hpp"
#include "nete/error.hpp"
#include "nete/json_writer.hpp"

namespace nete::cli {

void RunConfig::validate() const {
    if (k < 1) throw InvalidArgument("--k must be >= 1");
    for (Method m : methods)
        if (m == Method::nete && k < 2)
            throw InvalidArgument("method nete needs --k >= 2 (minimum k is 2, got " + std::to_string(k) + ")");
    if (!(mask_ratio > 0.0 && mask_ratio <= 1.0)) throw InvalidArgument("--mask-ratio must lie in (0, 1]");
    if (max_span < 1) throw InvalidArgument("--span must be >= 1");
    if (parallelism < 1) throw InvalidArgument("--parallelism must be >= 1");
    if (timeout.count() <= 0) throw InvalidArgument("--timeout must be positive");
    if (max_in_flight < 1) throw InvalidArgument("--max-in-flight must be >= 1");
    if (retries < 1) throw InvalidArgument("--retries must be >= 1");
    if (candidates < 1) throw InvalidArgument("--candidates must be >= 1");
    if (bins < 1) throw InvalidArgument("--bins must be >= 1");
    for (const auto& [m, t] : thresholds)
        if (!std::isfinite(t)) throw InvalidArgument("threshold for " + std::string(to_string(m)) + " is not finite");
}

HttpOptions RunConfig::http_options() const {
    HttpOptions o;
    o.timeout = timeout;
    o.max_attempts = retries;
    o.max_in_flight = max_in_flight;
    return o;
}

nlohmann::json RunConfig::echo() const {
    nlohmann::json methods_json = nlohmann::json::array();
    for (Method m : methods) methods_json.push_back(std::string(to_string(m)));
    nlohmann::json thr = nlohmann::json::object();
    for (const auto& [m, t] : thresholds) thr[std::string(to_string(m))] = t;
    return {{"seed", seed},
            {"k", k},
            {"mask_ratio", mask_ratio},
            {"span", max_span},
            {"methods", std::move(methods_json)},
            {"thresholds", std::move(thr)}};
}

std::pair<Method, double> parse_threshold(std::string_view text) {
    std::string_view method_part = "nete";
    std::string_view value_part = text;
    if (const auto eq = text.find('='); eq != std::string_view::npos) {
        method_part = text.substr(0, eq);
        value_part = text.substr(eq + 1);
    }
    const std::string v(value_part);
    char* end = nullptr;
    const double value = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(value))
        throw InvalidArgument("threshold \"" + std::string(text) + "\" is not a finite number");
    return {parse_method(method_part), value};
}

std::vector<Method> parse_methods(const std::vector<std::string>& items) {
    std::vector<Method> out;
    for (const auto& item : items) {
        std::stringstream ss(item);
        std::string part;
        while (std::getline(ss, part, ',')) {
            if (part.empty()) continue;
            const Method m = parse_method(part);
            if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
        }
    }
    return out;
}

namespace {

nlohmann::json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config file " + path);
    try {
        auto j = nlohmann::json::parse(in);
        if (!j.is_object()) throw InvalidArgument("config file " + path + " must hold a JSON object");
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("config file " + path + ": " + e.what());
    }
}

template <class T>
T config_value(const nlohmann::json& cfg, const char* key, T fallback) {
    if (!cfg.contains(key)) return fallback;
    try {
        return cfg.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw InvalidArgument(std::string("config key \"") + key + "\" has the wrong type");
    }
}

}  // namespace

RunConfig resolve_config(const RunFlags& flags, const std::optional<std::string>& env_scorer_url) {
    const nlohmann::json cfg = flags.config_path ? load_config_file(*flags.config_path) : nlohmann::json::object();
    RunConfig rc;

    rc.seed = flags.seed.value_or(config_value<std::uint64_t>(cfg, "seed", rc.seed));
    rc.k = flags.k.value_or(config_value<int>(cfg, "k", rc.k));
    rc.mask_ratio = flags.mask_ratio.value_or(config_value<double>(cfg, "mask_ratio", rc.mask_ratio));
    rc.max_span = flags.max_span.value_or(config_value<int>(cfg, "span", rc.max_span));
    rc.parallelism = flags.parallelism.value_or(config_value<int>(cfg, "parallelism", rc.parallelism));
    rc.max_in_flight = flags.max_in_flight.value_or(config_value<int>(cfg, "max_in_flight", rc.max_in_flight));
    rc.retries = flags.retries.value_or(config_value<int>(cfg, "retries", rc.retries));
    rc.candidates = flags.candidates.value_or(config_value<int>(cfg, "candidates", rc.candidates));
    rc.bins = flags.bins.value_or(config_value<int>(cfg, "bins", rc.bins));
    const double timeout_s = flags.timeout_seconds.value_or(
        config_value<double>(cfg, "timeout", static_cast<double>(rc.timeout.count()) / 1000.0));
    rc.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(timeout_s * 1000.0)));

    if (flags.scorer) {
        rc.scorer = *flags.scorer;
    } else if (cfg.contains("scorer")) {
        rc.scorer = config_value<std::string>(cfg, "scorer", "");
    } else if (env_scorer_url && !env_scorer_url->empty()) {
        rc.scorer = "remote:" + *env_scorer_url;
    }
    if (flags.filler) rc.filler = *flags.filler;
    else rc.filler = config_value<std::string>(cfg, "filler", "");
    if (rc.filler.empty() && rc.scorer.rfind("builtin:ngram", 0) == 0) rc.filler = rc.scorer;

    if (!flags.methods.empty()) {
        rc.methods = parse_methods(flags.methods);
    } else if (cfg.contains("method")) {
        const auto& m = cfg["method"];
        if (m.is_string()) rc.methods = parse_methods({m.get<std::string>()});
        else rc.methods = parse_methods(config_value<std::vector<std::string>>(cfg, "method", {}));
    }

    if (cfg.contains("threshold")) {
        const auto& t = cfg["threshold"];
        if (t.is_number()) {
            rc.thresholds[Method::nete] = t.get<double>();
        } else if (t.is_object()) {
            for (const auto& [name, v] : t.items()) {
                if (!v.is_number()) throw InvalidArgument("config threshold for " + name + " is not a number");
                rc.thresholds[parse_method(name)] = v.get<double>();
            }
        } else {
            throw InvalidArgument("config key \"threshold\" must be a number or an object");
        }
    }
    for (const auto& t : flags.thresholds) {
        const auto [m, v] = parse_threshold(t);
        rc.thresholds[m] = v;
    }
    return rc;
}

// ---------------------------------------------------------------------------

namespace {

struct ParsedSpec {
    std::string kind;  // "ngram", "unigram", "constant" or "remote"
    std::string endpoint;
    std::map<std::string, std::string> params;
};

ParsedSpec parse_spec(std::string_view spec) {
    ParsedSpec p;
    if (spec.rfind("remote:", 0) == 0) {
        p.kind = "remote";
        p.endpoint = std::string(spec.substr(7));
        if (p.endpoint.empty()) throw InvalidArgument("remote spec needs an endpoint URL");
        return p;
    }
    if (spec.rfind("builtin:", 0) != 0)
        throw InvalidArgument("spec \"" + std::string(spec) + "\" must start with builtin: or remote:");
    const auto body = spec.substr(8);
    const auto q = body.find('?');
    p.kind = std::string(body.substr(0, q));
    if (q != std::string_view::npos) {
        std::stringstream ss{std::string(body.substr(q + 1))};
        std::string kv;
        while (std::getline(ss, kv, '&')) {
            if (kv.empty()) continue;
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw InvalidArgument("spec parameter \"" + kv + "\" lacks '='");
            p.params[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
    }
    return p;
}

double number_param(const ParsedSpec& p, const std::string& key, double fallback) {
    const auto it = p.params.find(key);
    if (it == p.params.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (it->second.empty() || *end != '\0') throw InvalidArgument("spec parameter " + key + " is not a number");
    return v;
}

std::string corpus_param(const ParsedSpec& p) {
    const auto it = p.params.find("corpus");
    if (it == p.params.end() || it->second.empty())
        throw InvalidArgument("builtin:" + p.kind + " spec needs corpus=PATH");
    return it->second;
}

std::string builtin_identity(const std::string& kind, int order, double alpha, const std::string& corpus) {
    return "builtin:" + kind + "?order=" + std::to_string(order) + "&alpha=" + format_double_short(alpha) +
           "&corpus=" + corpus;
}

}  // namespace

std::vector<std::string> read_corpus_texts(const std::string& path) {
    if (path.size() >= 6 && path.compare(path.size() - 6, 6, ".jsonl") == 0) {
        std::vector<std::string> texts;
        for (const auto& s : load_jsonl(path)) texts.push_back(s.text);
        return texts;
    }
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus " + path);
    std::vector<std::string> texts;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!split_words(line).empty()) texts.push_back(line);
    }
    return texts;
}

std::shared_ptr<const NGramModel> ModelFactory::model(const std::string& corpus, int order, double alpha) {
    const std::string key = corpus + "|" + std::to_string(order) + "|" + format_double(alpha);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto m = std::make_shared<const NGramModel>(NGramModel::train(read_corpus_texts(corpus), order, alpha));
    cache_.emplace(key, m);
    return m;
}

std::shared_ptr<const Scorer> ModelFactory::scorer(std::string_view spec, const HttpOptions& http) {
    if (spec.empty()) throw InvalidArgument("no scorer given (use --scorer, the config file, or NETE_SCORER_URL)");
    const auto p = parse_spec(spec);
    if (p.kind == "remote") return std::make_shared<RemoteScorer>(p.endpoint, http);
    if (p.kind == "constant") return std::make_shared<ConstantScorer>(number_param(p, "logprob", -1.0));
    if (p.kind == "ngram") {
        const int order = static_cast<int>(number_param(p, "order", 2));
        const double alpha = number_param(p, "alpha", 1.0);
        const auto corpus = corpus_param(p);
        return std::make_shared<NGramScorer>(model(corpus, order, alpha), builtin_identity("ngram", order, alpha, corpus));
    }
    throw InvalidArgument("unknown scorer kind \"" + p.kind + "\"");
}

std::shared_ptr<const Filler> ModelFactory::filler(std::string_view spec, const HttpOptions& http, int candidates) {
    if (spec.empty()) throw InvalidArgument("no filler given (use --filler or the config file)");
    const auto p = parse_spec(spec);
    if (p.kind == "remote") return std::make_shared<RemoteFiller>(p.endpoint, http, candidates);
    if (p.kind == "ngram") {
        const int order = static_cast<int>(number_param(p, "order", 2));
        const double alpha = number_param(p, "alpha", 1.0);
        const auto corpus = corpus_param(p);
        return std::make_shared<ContextualFiller>(model(corpus, order, alpha),
                                                  builtin_identity("ngram", order, alpha, corpus));
    }
    if (p.kind == "unigram") {
        const int order = static_cast<int>(number_param(p, "order", 1));
        const double alpha = number_param(p, "alpha", 1.0);
        const auto corpus = corpus_param(p);
        return std::make_shared<UnigramFiller>(model(corpus, order, alpha),
                                               builtin_identity("unigram", order, alpha, corpus));
    }
    throw InvalidArgument("unknown filler kind \"" + p.kind + "\"");
}

std::vector<double> read_score_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open score file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();
    const auto first = content.find_first_not_of(" \t\r\n");
    std::vector<double> out;
    auto parse_one = [&](const std::string& token, std::size_t where) {
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (token.empty() || *end != '\0' || std::isnan(v))
            throw ParseError(path + ": entry " + std::to_string(where) + " (\"" + token + "\") is not a score");
        out.push_back(v);
    };
    if (first != std::string::npos && content[first] == '[') {
        nlohmann::json arr;
        try {
            arr = nlohmann::json::parse(content);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path + ": " + e.what());
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (arr[i].is_number()) out.push_back(arr[i].get<double>());
            else if (arr[i].is_string()) parse_one(arr[i].get<std::string>(), i + 1);
            else throw ParseError(path + ": entry " + std::to_string(i + 1) + " is not a score");
        }
        return out;
    }
    std::stringstream lines(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        const auto e = line.find_last_not_of(" \t\r");
        parse_one(line.substr(b, e - b + 1), line_no);
    }
    return out;
}

}  // namespace nete::cli
