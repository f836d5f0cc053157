#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "finadapt/augment.hpp"
#include "finadapt/error.hpp"
#include "finadapt/esg_data.hpp"
#include "finadapt/tokenizer.hpp"

using namespace finadapt;
using namespace finadapt::augment;

namespace {

// Fixed-logits stub: first decoded token draws from `first_logits`, then EOS.
class StubTranslator : public Translator {
public:
    explicit StubTranslator(std::vector<float> first_logits)
        : first_logits_(std::move(first_logits)) {}

    std::string source_lang() const override { return "en"; }
    std::string target_lang() const override { return "xx"; }
    int target_vocab_size() const override { return static_cast<int>(first_logits_.size()) + 1; }
    int eos_id() const override { return static_cast<int>(first_logits_.size()); }
    std::vector<int> encode(const std::string&) const override { return {0}; }
    std::string decode(const std::vector<int>& ids) const override {
        std::string out;
        for (int id : ids) out += "t" + std::to_string(id);
        return out;
    }
    std::vector<float> next_logits(const std::vector<int>& source,
                                   const std::vector<int>& prefix) const override {
        std::vector<float> logits(static_cast<size_t>(target_vocab_size()), -100.0f);
        if (prefix.size() < source.size()) {
            for (size_t i = 0; i < first_logits_.size(); ++i) logits[i] = first_logits_[i];
        } else {
            logits[static_cast<size_t>(eos_id())] = 0.0f;
        }
        return logits;
    }

private:
    std::vector<float> first_logits_;
};

std::vector<double> sample_frequencies(const Translator& tr, double temperature, int draws,
                                       uint64_t seed) {
    Rng rng(seed);
    std::map<std::string, int> counts;
    for (int i = 0; i < draws; ++i) {
        counts[sample_decode(tr, "w", temperature, 8, rng).text] += 1;
    }
    std::vector<double> freq(static_cast<size_t>(tr.target_vocab_size()) - 1, 0.0);
    for (size_t t = 0; t < freq.size(); ++t) {
        freq[t] = counts["t" + std::to_string(t)] / static_cast<double>(draws);
    }
    return freq;
}

double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return 0.5 * s;
}

std::vector<double> softmax_at(const std::vector<float>& logits, double t) {
    double mx = -1e300;
    for (float l : logits) mx = std::max(mx, static_cast<double>(l) / t);
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(static_cast<double>(logits[i]) / t - mx);
        sum += out[i];
    }
    for (auto& x : out) x /= sum;
    return out;
}

} // namespace

TEST_CASE("sample_decode at T=1 matches softmax([2,1,0]) frequencies") {
    const StubTranslator tr({2.0f, 1.0f, 0.0f});
    const auto freq = sample_frequencies(tr, 1.0, 20000, 11);
    const auto expect = softmax_at({2.0f, 1.0f, 0.0f}, 1.0);
    CHECK(expect[0] == doctest::Approx(0.665).epsilon(0.01));
    CHECK(expect[1] == doctest::Approx(0.245).epsilon(0.01));
    CHECK(expect[2] == doctest::Approx(0.090).epsilon(0.02));
    CHECK(tv_distance(freq, expect) < 0.02);
}

TEST_CASE("sample_decode at T=0 is argmax with lowest-id tie break") {
    const StubTranslator tr({1.0f, 5.0f, 5.0f});
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        CHECK(sample_decode(tr, "w", 0.0, 8, rng).text == "t1");
    }
}

TEST_CASE("uniform logits sample uniformly at any temperature") {
    const StubTranslator tr({3.0f, 3.0f, 3.0f, 3.0f});
    for (double t : {0.6, 1.0, 2.0}) {
        const auto freq = sample_frequencies(tr, t, 20000, 29);
        const std::vector<double> uniform(4, 0.25);
        CHECK(tv_distance(freq, uniform) < 0.02);
    }
}

TEST_CASE("decode truncates and flags at max_decode_len") {
    const StubTranslator tr({2.0f, 1.0f});
    Rng rng(3);
    // source of length 5 but decode budget 3
    class LongSource : public StubTranslator {
    public:
        using StubTranslator::StubTranslator;
        std::vector<int> encode(const std::string&) const override { return {0, 0, 0, 0, 0}; }
    };
    const LongSource longer({2.0f, 1.0f});
    const auto r = sample_decode(longer, "w", 0.0, 3, rng);
    CHECK(r.truncated);
    CHECK(r.text == "t0t0t0");
}

TEST_CASE("codebook round trip at T=0 is the identity") {
    const std::vector<std::string> words = {"the", "company", "said", "profit", "rose",
                                            "sharply", "in", "march"};
    auto [fwd, rev] = CodebookTranslator::make_pair_from_words(words);
    Rng rng(5);
    const std::vector<std::string> sentences = {
        "the company said profit rose", "profit rose sharply in march", "the company said",
        "march profit rose"};
    for (const auto& s : sentences) {
        const auto mid = sample_decode(*fwd, s, 0.0, 64, rng);
        CHECK_FALSE(mid.truncated);
        CHECK(mid.text != s); // the pivot text differs
        const auto back = sample_decode(*rev, mid.text, 0.0, 64, rng);
        CHECK(back.text == s);
    }
    CHECK_THROWS_AS((void)fwd->encode("unknownword"), Error);
}

TEST_CASE("back_translate_article keeps order, count, and falls back on failure") {
    const std::vector<std::string> words = {"alpha", "beta", "gamma"};
    auto [fwd, rev] = CodebookTranslator::make_pair_from_words(words);
    Rng rng(6);
    const std::vector<std::string> sentences = {"alpha beta", "gamma alpha", "beta beta gamma"};
    auto result = back_translate_article(sentences, *fwd, *rev, 0.0, 64, rng);
    REQUIRE(result.sentences.size() == 3);
    CHECK(result.flagged == 0);
    CHECK(result.sentences == sentences);

    // a sentence with an out-of-vocabulary word is flagged and kept verbatim
    const std::vector<std::string> with_bad = {"alpha beta", "unknown words here", "gamma"};
    result = back_translate_article(with_bad, *fwd, *rev, 0.0, 64, rng);
    REQUIRE(result.sentences.size() == 3);
    CHECK(result.flagged == 1);
    CHECK(result.sentences[1] == "unknown words here");
    CHECK(result.sentences[0] == "alpha beta");

    CHECK(back_translate_article({}, *fwd, *rev, 0.0, 64, rng).sentences.empty());
}

namespace {

esg::LabeledArticle make_labeled(const std::string& id, const std::string& text) {
    esg::LabeledArticle a;
    a.id = id;
    a.timestamp = 1400000000;
    a.text = text;
    a.esg_label = esg::EsgLabel::privacy;
    return a;
}

} // namespace

TEST_CASE("augment_dataset: cardinality, labels, provenance, determinism") {
    const std::vector<std::string> words = {"One", "two", "three.", "Four", "five."};
    auto [fwd, rev] = CodebookTranslator::make_pair_from_words(words);
    const std::vector<esg::LabeledArticle> originals = {
        make_labeled("a", "One two three. Four five."), make_labeled("b", "Four two three.")};

    AugmentConfig cfg; // defaults: 4 temperatures x 3 samples
    cfg.seed = 9;
    const auto out = augment_dataset(originals, cfg, *fwd, *rev);
    CHECK(out.size() == originals.size() * 13);

    std::map<std::string, int> per_origin;
    for (const auto& a : out) {
        CHECK(a.esg_label == esg::EsgLabel::privacy);
        if (a.provenance.kind == esg::Provenance::Kind::augmented) {
            per_origin[a.provenance.origin_id]++;
            CHECK(a.timestamp == 1400000000);
            CHECK((a.provenance.temperature >= 0.6 && a.provenance.temperature <= 0.9));
            CHECK(a.provenance.sample_index >= 0);
            CHECK(a.provenance.sample_index < 3);
        }
    }
    CHECK(per_origin["a"] == 12);
    CHECK(per_origin["b"] == 12);

    const auto out2 = augment_dataset(originals, cfg, *fwd, *rev);
    REQUIRE(out2.size() == out.size());
    for (size_t i = 0; i < out.size(); ++i) {
        CHECK(esg::labeled_to_json(out[i]) == esg::labeled_to_json(out2[i]));
    }

    AugmentConfig bad = cfg;
    bad.samples_per_temperature = 0;
    CHECK_THROWS_AS((void)augment_dataset(originals, bad, *fwd, *rev), Error);
    bad = cfg;
    bad.temperatures = {-0.1};
    CHECK_THROWS_AS((void)augment_dataset(originals, bad, *fwd, *rev), Error);
}

TEST_CASE("augmented set size formula holds for non-default configs") {
    const std::vector<std::string> words = {"a", "b."};
    auto [fwd, rev] = CodebookTranslator::make_pair_from_words(words);
    const std::vector<esg::LabeledArticle> originals = {make_labeled("x", "a b.")};
    AugmentConfig cfg;
    cfg.temperatures = {0.0, 0.5};
    cfg.samples_per_temperature = 5;
    const auto out = augment_dataset(originals, cfg, *fwd, *rev);
    CHECK(out.size() == 1 + 2 * 5);
}

TEST_CASE("synonym translator canonicalizes at T=0 and diversifies at T=0.8") {
    const std::vector<std::vector<std::string>> families = {
        {"spill", "spillage", "leakage", "discharge"},
        {"report", "filing", "statement"},
    };
    auto [fwd, rev] = SynonymTranslator::make_pair(families, {"the", "big"});

    Rng rng(4);
    const auto t0 = sample_decode(*rev, sample_decode(*fwd, "the big spillage", 0.0, 32, rng).text,
                                  0.0, 32, rng);
    CHECK(t0.text == "the big spill"); // canonical member

    std::set<std::string> seen;
    for (int i = 0; i < 200; ++i) {
        Rng r = Rng::from_key({10, static_cast<uint64_t>(i)});
        const auto mid = sample_decode(*fwd, "the spill report", 0.8, 32, r);
        const auto back = sample_decode(*rev, mid.text, 0.8, 32, r);
        seen.insert(back.text);
        // every word stays within its family (label-preserving by construction)
        const auto words = tok::split_words(back.text);
        if (words.size() == 3) {
            CHECK(words[0] == "the");
            CHECK((words[1] == "spill" || words[1] == "spillage" || words[1] == "leakage" ||
                   words[1] == "discharge"));
            CHECK((words[2] == "report" || words[2] == "filing" || words[2] == "statement"));
        }
    }
    CHECK(seen.size() >= 3); // genuine diversity

    // a word may not belong to two families
    CHECK_THROWS_AS(SynonymTranslator::make_pair({{"a", "b"}, {"b", "c"}}, {}), Error);
}
