#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nete/detection.hpp"
#include "nete/http.hpp"
#include "nete/perturbation.hpp"
#include "nete/scoring.hpp"

namespace nete::cli {

inline constexpr const char* scorer_url_env = "NETE_SCORER_URL";

struct RunConfig {
    std::uint64_t seed = 0;
    int k = default_perturbations;
    double mask_ratio = 0.10;
    int max_span = 2;
    std::vector<Method> methods{Method::nete};
    std::string scorer;
    std::string filler;
    std::map<Method, double> thresholds;
    int parallelism = 1;
    std::chrono::milliseconds timeout{30000};
    int max_in_flight = 4;
    int retries = 3;
    int candidates = 1;
    int bins = 20;

    // Throws InvalidArgument on out-of-range values.
    void validate() const;
    PerturbOptions perturb_options() const { return {mask_ratio, max_span}; }
    HttpOptions http_options() const;
    // Echo for reports. Leaves out parallelism so output does not depend on it.
    nlohmann::json echo() const;
};

// Values given on the command line; unset fields fall back to the config
// file, then to NETE_SCORER_URL (scorer only), then to RunConfig defaults.
struct RunFlags {
    std::optional<std::uint64_t> seed;
    std::optional<int> k;
    std::optional<double> mask_ratio;
    std::optional<int> max_span;
    std::vector<std::string> methods;
    std::optional<std::string> scorer;
    std::optional<std::string> filler;
    std::vector<std::string> thresholds;
    std::optional<int> parallelism;
    std::optional<double> timeout_seconds;
    std::optional<int> max_in_flight;
    std::optional<int> retries;
    std::optional<int> candidates;
    std::optional<int> bins;
    std::optional<std::string> config_path;
};

// Merges flags over the config file; callers validate the result.
RunConfig resolve_config(const RunFlags& flags, const std::optional<std::string>& env_scorer_url);

// "nete=-0.5", "log=-3" or a bare number (applies to nete).
std::pair<Method, double> parse_threshold(std::string_view text);
std::vector<Method> parse_methods(const std::vector<std::string>& items);

// Builds scorers and fillers from spec strings and shares trained models
// between them:
//   builtin:ngram?order=2&alpha=1&corpus=PATH   (filler: contextual n-gram)
//   builtin:unigram?alpha=1&corpus=PATH          (filler only)
//   builtin:constant?logprob=-2                  (scorer only)
//   remote:http://host:port
// corpus is a text file with one sentence per line, or a .jsonl sample file.
class ModelFactory {
public:
    std::shared_ptr<const Scorer> scorer(std::string_view spec, const HttpOptions& http);
    std::shared_ptr<const Filler> filler(std::string_view spec, const HttpOptions& http, int candidates);

private:
    std::shared_ptr<const NGramModel> model(const std::string& corpus, int order, double alpha);
    std::map<std::string, std::shared_ptr<const NGramModel>> cache_;
};

std::vector<std::string> read_corpus_texts(const std::string& path);
std::vector<double> read_score_file(const std::string& path);

// Entry point; returns the process exit code (0 ok, 1 configuration error,
// 2 some samples failed).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nete::cli
