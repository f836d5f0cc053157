#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "finadapt/esg_data.hpp"
#include "finadapt/rng.hpp"

namespace finadapt::augment {

// Step-wise sentence translator over a closed vocabulary. Implementations
// must give the end-of-sentence token nonzero probability within a bounded
// number of steps.
class Translator {
public:
    virtual ~Translator() = default;
    virtual std::string source_lang() const = 0;
    virtual std::string target_lang() const = 0;
    virtual int target_vocab_size() const = 0;
    virtual int eos_id() const = 0;
    virtual std::vector<int> encode(const std::string& sentence) const = 0;
    virtual std::string decode(const std::vector<int>& target_ids) const = 0;
    // Logits over the target vocabulary for the next token.
    virtual std::vector<float> next_logits(const std::vector<int>& source,
                                           const std::vector<int>& prefix) const = 0;
};

struct AugmentConfig {
    std::vector<double> temperatures = {0.6, 0.7, 0.8, 0.9};
    int samples_per_temperature = 3;
    int max_decode_len = 128;
    uint64_t seed = 0;

    void check() const;
};

struct DecodeResult {
    std::string text;
    bool truncated = false; // decoder hit max_decode_len without EOS
};

// Token-by-token decoding: argmax at temperature 0 (ties -> lowest id),
// otherwise sampling from softmax(logits / temperature).
DecodeResult sample_decode(const Translator& translator, const std::string& sentence,
                           double temperature, int max_decode_len, Rng& rng);

struct BackTranslateResult {
    std::vector<std::string> sentences; // original order
    int flagged = 0;                    // sentences kept verbatim after a decode failure
};

// Each sentence independently forward- then back-translated; a failed
// sentence keeps its original text in that slot.
BackTranslateResult back_translate_article(const std::vector<std::string>& sentences,
                                           const Translator& fwd, const Translator& rev,
                                           double temperature, int max_decode_len, Rng& rng);

// Originals plus |temperatures| x samples_per_temperature paraphrases per
// article, labels preserved, provenance recorded. Deterministic: streams are
// keyed by (seed, article id, temperature index, sample index).
std::vector<esg::LabeledArticle> augment_dataset(const std::vector<esg::LabeledArticle>& articles,
                                                 const AugmentConfig& cfg, const Translator& fwd,
                                                 const Translator& rev);

// Bijective word-for-word codebook: at temperature 0 the round trip through
// the forward and inverse directions is the exact identity on its vocabulary.
class CodebookTranslator : public Translator {
public:
    // words: the source-side vocabulary. Forward maps each word to its
    // reversed-string form; make_inverse() builds the way back.
    CodebookTranslator(std::vector<std::string> source_words,
                       std::vector<std::string> target_words, std::string src_lang,
                       std::string tgt_lang);

    static std::pair<std::unique_ptr<CodebookTranslator>, std::unique_ptr<CodebookTranslator>>
    make_pair_from_words(const std::vector<std::string>& words);

    std::string source_lang() const override { return src_lang_; }
    std::string target_lang() const override { return tgt_lang_; }
    int target_vocab_size() const override;
    int eos_id() const override;
    std::vector<int> encode(const std::string& sentence) const override;
    std::string decode(const std::vector<int>& target_ids) const override;
    std::vector<float> next_logits(const std::vector<int>& source,
                                   const std::vector<int>& prefix) const override;

private:
    std::vector<std::string> src_words_, tgt_words_;
    std::unordered_map<std::string, int> src_index_;
    std::string src_lang_, tgt_lang_;
};

// Stochastic synonym-family translator: the pivot language has one token per
// family; translating back spreads probability over the family members with
// graded logits, so temperature controls how far samples stray from the
// canonical member. Labels survive because families never cross classes.
class SynonymTranslator {
public:
    // families: each inner vector lists interchangeable words, canonical first.
    // Words not covered get singleton families.
    static std::pair<std::unique_ptr<Translator>, std::unique_ptr<Translator>>
    make_pair(const std::vector<std::vector<std::string>>& families,
              const std::vector<std::string>& extra_words);
};

} // namespace finadapt::augment
