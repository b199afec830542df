#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nete/corpus.hpp"
#include "nete/perturbation.hpp"
#include "nete/rng.hpp"
#include "nete/scoring.hpp"

namespace nete::toy {

// A sparse random bigram "language": every word has a handful of successors
// with Zipf weights. Sentences drawn from it are fluent under an n-gram model
// trained on other draws; an out-of-vocabulary trigger is not.
class BigramWorld {
public:
    struct Params {
        std::size_t vocab = 300;
        std::size_t successors = 8;
        std::size_t start_words = 30;
        std::size_t min_len = 12;
        std::size_t max_len = 24;
    };

    BigramWorld(std::uint64_t seed, Params params);
    explicit BigramWorld(std::uint64_t seed) : BigramWorld(seed, Params{}) {}

    std::string sentence(Rng& rng) const;
    std::vector<std::string> sentences(std::size_t n, Rng& rng) const;
    const std::vector<std::string>& words() const noexcept { return words_; }

private:
    std::size_t draw(const std::vector<std::pair<std::size_t, double>>& dist, Rng& rng) const;

    Params params_;
    std::vector<std::string> words_;
    std::vector<std::vector<std::pair<std::size_t, double>>> next_;
    std::vector<std::pair<std::size_t, double>> start_;
};

// Scorer/filler pair trained on one corpus plus labeled clean and backdoor
// test sets, mirroring the word-trigger attack configuration (3 insertions).
struct Experiment {
    std::shared_ptr<const NGramModel> model;
    std::shared_ptr<const Scorer> scorer;
    std::shared_ptr<const Filler> filler;
    std::vector<Sample> clean;
    std::vector<Sample> backdoor;
};

struct ExperimentParams {
    std::size_t train_sentences = 2000;
    std::size_t n_clean = 200;
    std::size_t n_backdoor = 200;
    std::string trigger = "cf";
    int trigger_count = 3;
    int order = 2;
    double alpha = 0.1;
    bool contextual_filler = true;
};

Experiment make_experiment(std::uint64_t seed, const ExperimentParams& params);
Experiment make_experiment(std::uint64_t seed);

// Clean samples labeled and id-prefixed, ready for poisoning.
std::vector<Sample> as_samples(const std::vector<std::string>& texts, const std::string& prefix, Label label);

}  // namespace nete::toy
