#include "finadapt/augment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "finadapt/corpus.hpp"
#include "finadapt/error.hpp"
#include "finadapt/tokenizer.hpp"

namespace finadapt::augment {

void AugmentConfig::check() const {
    if (temperatures.empty()) throw data_error("temperatures must be non-empty");
    for (double t : temperatures) {
        if (t < 0.0) throw data_error("temperatures must be >= 0");
    }
    if (samples_per_temperature < 1) throw data_error("samples_per_temperature must be >= 1");
    if (max_decode_len < 1) throw data_error("max_decode_len must be >= 1");
}

namespace {

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

int pick_token(const std::vector<float>& logits, double temperature, Rng& rng) {
    const int n = static_cast<int>(logits.size());
    if (n == 0) throw data_error("translator produced an empty logits vector");
    if (temperature == 0.0) {
        int best = 0;
        for (int i = 1; i < n; ++i) {
            if (logits[i] > logits[best]) best = i; // ties keep the lowest id
        }
        return best;
    }
    double mx = -1e300;
    for (float l : logits) mx = std::max(mx, static_cast<double>(l) / temperature);
    std::vector<double> w(static_cast<size_t>(n));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        w[static_cast<size_t>(i)] = std::exp(static_cast<double>(logits[i]) / temperature - mx);
        sum += w[static_cast<size_t>(i)];
    }
    const double u = rng.next_double() * sum;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += w[static_cast<size_t>(i)];
        if (u < acc) return i;
    }
    return n - 1;
}

} // namespace

DecodeResult sample_decode(const Translator& translator, const std::string& sentence,
                           double temperature, int max_decode_len, Rng& rng) {
    if (temperature < 0.0) throw data_error("temperature must be >= 0");
    const std::vector<int> source = translator.encode(sentence);
    std::vector<int> prefix;
    DecodeResult result;
    for (;;) {
        if (static_cast<int>(prefix.size()) >= max_decode_len) {
            result.truncated = true;
            break;
        }
        const auto logits = translator.next_logits(source, prefix);
        if (static_cast<int>(logits.size()) != translator.target_vocab_size()) {
            throw data_error("translator logits size != target vocab size");
        }
        const int token = pick_token(logits, temperature, rng);
        if (token == translator.eos_id()) break;
        prefix.push_back(token);
    }
    result.text = translator.decode(prefix);
    return result;
}

BackTranslateResult back_translate_article(const std::vector<std::string>& sentences,
                                           const Translator& fwd, const Translator& rev,
                                           double temperature, int max_decode_len, Rng& rng) {
    BackTranslateResult out;
    out.sentences.reserve(sentences.size());
    for (const auto& s : sentences) {
        try {
            const DecodeResult mid = sample_decode(fwd, s, temperature, max_decode_len, rng);
            const DecodeResult back = sample_decode(rev, mid.text, temperature, max_decode_len, rng);
            if (mid.truncated || back.truncated) {
                ++out.flagged;
                out.sentences.push_back(s);
            } else {
                out.sentences.push_back(back.text);
            }
        } catch (const Error&) {
            ++out.flagged;
            out.sentences.push_back(s);
        }
    }
    return out;
}

std::vector<esg::LabeledArticle> augment_dataset(const std::vector<esg::LabeledArticle>& articles,
                                                 const AugmentConfig& cfg, const Translator& fwd,
                                                 const Translator& rev) {
    cfg.check();
    std::vector<esg::LabeledArticle> out;
    out.reserve(articles.size() * (1 + cfg.temperatures.size() * cfg.samples_per_temperature));
    for (const auto& a : articles) {
        out.push_back(a);
        std::vector<std::string> sentences;
        for (const auto& s : corpus::split_sentences(a.text)) sentences.push_back(s.text);
        for (size_t ti = 0; ti < cfg.temperatures.size(); ++ti) {
            for (int si = 0; si < cfg.samples_per_temperature; ++si) {
                Rng rng = Rng::from_key({cfg.seed, fnv1a(a.id), static_cast<uint64_t>(ti),
                                         static_cast<uint64_t>(si)});
                const auto bt = back_translate_article(sentences, fwd, rev, cfg.temperatures[ti],
                                                       cfg.max_decode_len, rng);
                esg::LabeledArticle p;
                char suffix[48];
                std::snprintf(suffix, sizeof(suffix), "/aug-t%zu-s%d", ti, si);
                p.id = a.id + suffix;
                p.timestamp = a.timestamp;
                p.esg_label = a.esg_label;
                p.provenance.kind = esg::Provenance::Kind::augmented;
                p.provenance.origin_id = a.id;
                p.provenance.temperature = cfg.temperatures[ti];
                p.provenance.sample_index = si;
                std::string text;
                for (size_t k = 0; k < bt.sentences.size(); ++k) {
                    if (k > 0) text += ' ';
                    text += bt.sentences[k];
                }
                p.text = std::move(text);
                out.push_back(std::move(p));
            }
        }
    }
    return out;
}

// ---- codebook translator ----

CodebookTranslator::CodebookTranslator(std::vector<std::string> source_words,
                                       std::vector<std::string> target_words, std::string src_lang,
                                       std::string tgt_lang)
    : src_words_(std::move(source_words)),
      tgt_words_(std::move(target_words)),
      src_lang_(std::move(src_lang)),
      tgt_lang_(std::move(tgt_lang)) {
    if (src_words_.size() != tgt_words_.size()) {
        throw data_error("codebook source/target word lists differ in size");
    }
    for (size_t i = 0; i < src_words_.size(); ++i) {
        if (!src_index_.emplace(src_words_[i], static_cast<int>(i)).second) {
            throw data_error("duplicate codebook source word: " + src_words_[i]);
        }
    }
}

std::pair<std::unique_ptr<CodebookTranslator>, std::unique_ptr<CodebookTranslator>>
CodebookTranslator::make_pair_from_words(const std::vector<std::string>& words) {
    std::set<std::string> unique(words.begin(), words.end());
    std::vector<std::string> src(unique.begin(), unique.end());
    std::vector<std::string> tgt;
    tgt.reserve(src.size());
    for (const auto& w : src) tgt.emplace_back(w.rbegin(), w.rend());
    auto fwd = std::make_unique<CodebookTranslator>(src, tgt, "en", "xx");
    auto rev = std::make_unique<CodebookTranslator>(tgt, src, "xx", "en");
    return {std::move(fwd), std::move(rev)};
}

int CodebookTranslator::target_vocab_size() const {
    return static_cast<int>(tgt_words_.size()) + 1; // + EOS
}

int CodebookTranslator::eos_id() const { return static_cast<int>(tgt_words_.size()); }

std::vector<int> CodebookTranslator::encode(const std::string& sentence) const {
    std::vector<int> ids;
    for (const auto& w : tok::split_words(sentence)) {
        auto it = src_index_.find(w);
        if (it == src_index_.end()) {
            throw data_error("word not in translator vocabulary: '" + w + "'");
        }
        ids.push_back(it->second);
    }
    return ids;
}

std::string CodebookTranslator::decode(const std::vector<int>& target_ids) const {
    std::string out;
    for (size_t k = 0; k < target_ids.size(); ++k) {
        const int id = target_ids[k];
        if (id < 0 || id >= static_cast<int>(tgt_words_.size())) {
            throw data_error("target token id out of range");
        }
        if (k > 0) out += ' ';
        out += tgt_words_[static_cast<size_t>(id)];
    }
    return out;
}

std::vector<float> CodebookTranslator::next_logits(const std::vector<int>& source,
                                                   const std::vector<int>& prefix) const {
    std::vector<float> logits(static_cast<size_t>(target_vocab_size()), 0.0f);
    const size_t t = prefix.size();
    if (t < source.size()) {
        logits[static_cast<size_t>(source[t])] = 12.0f; // word i maps to target word i
    } else {
        logits[static_cast<size_t>(eos_id())] = 12.0f;
    }
    return logits;
}

// ---- synonym translator ----

namespace {

class SynonymForward : public Translator {
public:
    SynonymForward(std::vector<std::string> words, std::vector<int> family_of, int n_families)
        : words_(std::move(words)), family_of_(std::move(family_of)), n_families_(n_families) {
        for (size_t i = 0; i < words_.size(); ++i) index_[words_[i]] = static_cast<int>(i);
    }

    std::string source_lang() const override { return "en"; }
    std::string target_lang() const override { return "pv"; }
    int target_vocab_size() const override { return n_families_ + 1; }
    int eos_id() const override { return n_families_; }

    std::vector<int> encode(const std::string& sentence) const override {
        std::vector<int> ids;
        for (const auto& w : tok::split_words(sentence)) {
            auto it = index_.find(w);
            if (it == index_.end()) {
                throw data_error("word not in translator vocabulary: '" + w + "'");
            }
            ids.push_back(it->second);
        }
        return ids;
    }

    std::string decode(const std::vector<int>& target_ids) const override {
        std::string out;
        for (size_t k = 0; k < target_ids.size(); ++k) {
            if (k > 0) out += ' ';
            out += "p" + std::to_string(target_ids[k]);
        }
        return out;
    }

    std::vector<float> next_logits(const std::vector<int>& source,
                                   const std::vector<int>& prefix) const override {
        std::vector<float> logits(static_cast<size_t>(target_vocab_size()), 0.0f);
        const size_t t = prefix.size();
        if (t < source.size()) {
            logits[static_cast<size_t>(family_of_[static_cast<size_t>(source[t])])] = 12.0f;
        } else {
            logits[static_cast<size_t>(eos_id())] = 12.0f;
        }
        return logits;
    }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> index_;
    std::vector<int> family_of_;
    int n_families_;
};

class SynonymReverse : public Translator {
public:
    SynonymReverse(std::vector<std::string> words, std::vector<std::vector<int>> family_members)
        : words_(std::move(words)), family_members_(std::move(family_members)) {}

    std::string source_lang() const override { return "pv"; }
    std::string target_lang() const override { return "en"; }
    int target_vocab_size() const override { return static_cast<int>(words_.size()) + 1; }
    int eos_id() const override { return static_cast<int>(words_.size()); }

    std::vector<int> encode(const std::string& sentence) const override {
        std::vector<int> ids;
        for (const auto& w : tok::split_words(sentence)) {
            if (w.size() < 2 || w[0] != 'p') {
                throw data_error("malformed pivot token: '" + w + "'");
            }
            const int f = std::atoi(w.c_str() + 1);
            if (f < 0 || f >= static_cast<int>(family_members_.size())) {
                throw data_error("pivot token out of range: '" + w + "'");
            }
            ids.push_back(f);
        }
        return ids;
    }

    std::string decode(const std::vector<int>& target_ids) const override {
        std::string out;
        for (size_t k = 0; k < target_ids.size(); ++k) {
            const int id = target_ids[k];
            if (id < 0 || id >= static_cast<int>(words_.size())) {
                throw data_error("target token id out of range");
            }
            if (k > 0) out += ' ';
            out += words_[static_cast<size_t>(id)];
        }
        return out;
    }

    std::vector<float> next_logits(const std::vector<int>& source,
                                   const std::vector<int>& prefix) const override {
        std::vector<float> logits(static_cast<size_t>(target_vocab_size()), 0.0f);
        const size_t t = prefix.size();
        if (t < source.size()) {
            const auto& members = family_members_[static_cast<size_t>(source[t])];
            // Graded logits: low temperature concentrates on the canonical
            // member, higher temperature spreads across the family.
            for (size_t r = 0; r < members.size(); ++r) {
                logits[static_cast<size_t>(members[r])] = 12.0f - 0.75f * static_cast<float>(r);
            }
        } else {
            logits[static_cast<size_t>(eos_id())] = 12.0f;
        }
        return logits;
    }

private:
    std::vector<std::string> words_;
    std::vector<std::vector<int>> family_members_;
};

} // namespace

std::pair<std::unique_ptr<Translator>, std::unique_ptr<Translator>>
SynonymTranslator::make_pair(const std::vector<std::vector<std::string>>& families,
                             const std::vector<std::string>& extra_words) {
    std::vector<std::string> words;
    std::vector<int> family_of;
    std::vector<std::vector<int>> family_members;
    std::unordered_map<std::string, int> seen;

    for (const auto& family : families) {
        if (family.empty()) throw data_error("empty synonym family");
        const int f = static_cast<int>(family_members.size());
        family_members.emplace_back();
        for (const auto& w : family) {
            if (seen.count(w)) throw data_error("word in two synonym families: '" + w + "'");
            const int id = static_cast<int>(words.size());
            seen[w] = id;
            words.push_back(w);
            family_of.push_back(f);
            family_members.back().push_back(id);
        }
    }
    for (const auto& w : extra_words) {
        if (seen.count(w)) continue;
        const int f = static_cast<int>(family_members.size());
        const int id = static_cast<int>(words.size());
        seen[w] = id;
        words.push_back(w);
        family_of.push_back(f);
        family_members.push_back({id});
    }

    auto fwd = std::make_unique<SynonymForward>(words, family_of,
                                                static_cast<int>(family_members.size()));
    auto rev = std::make_unique<SynonymReverse>(words, family_members);
    return {std::move(fwd), std::move(rev)};
}

} // namespace finadapt::augment
