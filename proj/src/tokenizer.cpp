#include "finadapt/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "finadapt/error.hpp"
#include "finadapt/unicode.hpp"

namespace finadapt::tok {

Vocab::Vocab(std::vector<std::string> tokens, bool cased)
    : tokens_(std::move(tokens)), cased_(cased) {
    index_.reserve(tokens_.size());
    for (size_t i = 0; i < tokens_.size(); ++i) {
        auto [_, fresh] = index_.emplace(tokens_[i], static_cast<int>(i));
        if (!fresh) throw data_error("duplicate vocab token: " + tokens_[i]);
    }
}

const std::string& Vocab::piece(int id) const {
    if (id < 0 || id >= size()) throw data_error("token id out of range: " + std::to_string(id));
    return tokens_[static_cast<size_t>(id)];
}

int Vocab::id(std::string_view piece) const {
    auto it = index_.find(std::string(piece));
    return it == index_.end() ? -1 : it->second;
}

void Vocab::check() const {
    if (size() < kNumSpecials) throw data_error("vocab smaller than special-token set");
    for (int i = 0; i < kNumSpecials; ++i) {
        if (tokens_[i] != kSpecialTokens[i]) {
            throw data_error("vocab id " + std::to_string(i) + " must be " +
                             std::string(kSpecialTokens[i]) + ", got " + tokens_[i]);
        }
    }
    for (char c = '!'; c <= '~'; ++c) {
        if (id(std::string(1, c)) < 0) {
            throw data_error("vocab missing visible ASCII character token: " + std::string(1, c));
        }
    }
}

void Vocab::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open vocab file for writing: " + path);
    for (const auto& t : tokens_) {
        if (t.find('\n') != std::string::npos) {
            throw data_error("vocab token contains newline");
        }
        out << t << "\n";
    }
}

Vocab Vocab::load(const std::string& path, bool cased) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open vocab file: " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) throw data_error(path + ": empty vocab line " + std::to_string(tokens.size()));
        tokens.push_back(line);
    }
    Vocab v(std::move(tokens), cased);
    v.check();
    return v;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    size_t pos = 0;
    size_t word_begin = 0;
    bool in_word = false;
    while (pos < text.size()) {
        size_t next = pos;
        uint32_t cp = uni::next_codepoint(text, next);
        if (uni::is_space(cp)) {
            if (in_word) {
                words.emplace_back(text.substr(word_begin, pos - word_begin));
                in_word = false;
            }
        } else if (!in_word) {
            word_begin = pos;
            in_word = true;
        }
        pos = next;
    }
    if (in_word) words.emplace_back(text.substr(word_begin));
    return words;
}

namespace {

std::string ascii_lower(std::string s) {
    for (char& c : s) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return s;
}

size_t count_codepoints(std::string_view word) {
    size_t n = 0, pos = 0;
    while (pos < word.size()) {
        uni::next_codepoint(word, pos);
        ++n;
    }
    return n;
}

// Word as a symbol sequence: first codepoint bare, the rest "##"-prefixed.
std::vector<std::string> word_symbols(std::string_view word) {
    std::vector<std::string> syms;
    size_t pos = 0;
    bool first = true;
    while (pos < word.size()) {
        size_t start = pos;
        uni::next_codepoint(word, pos);
        std::string sym(word.substr(start, pos - start));
        syms.push_back(first ? sym : "##" + sym);
        first = false;
    }
    return syms;
}

// "a" + "##b" -> "ab"; "##a" + "##b" -> "##ab".
std::string merge_symbols(const std::string& a, const std::string& b) {
    return a + (b.rfind("##", 0) == 0 ? b.substr(2) : b);
}

} // namespace

Vocab build_vocab(const std::vector<std::string>& sentences, int target_size,
                  const BuildVocabOptions& opts) {
    // Word types with frequencies; std::map keeps counting order-independent.
    std::map<std::string, uint64_t> word_freq;
    for (const auto& sentence : sentences) {
        for (auto& w : split_words(sentence)) {
            std::string word = opts.cased ? w : ascii_lower(w);
            if (count_codepoints(word) > kMaxWordChars) continue;
            ++word_freq[word];
        }
    }
    if (word_freq.empty()) throw data_error("empty corpus");

    std::set<std::string> inventory;
    for (char c = '!'; c <= '~'; ++c) {
        inventory.insert(std::string(1, c));
        inventory.insert("##" + std::string(1, c));
    }
    std::vector<std::pair<std::vector<std::string>, uint64_t>> words;
    words.reserve(word_freq.size());
    for (const auto& [word, freq] : word_freq) {
        auto syms = word_symbols(word);
        for (const auto& s : syms) inventory.insert(s);
        words.emplace_back(std::move(syms), freq);
    }

    const int base = kNumSpecials + static_cast<int>(opts.reserved.size()) +
                     static_cast<int>(inventory.size());
    if (target_size < base) {
        throw data_error("target_size " + std::to_string(target_size) +
                         " below minimum vocab size " + std::to_string(base));
    }

    std::vector<std::string> tokens;
    std::set<std::string> present;
    for (int i = 0; i < kNumSpecials; ++i) {
        tokens.emplace_back(kSpecialTokens[i]);
        present.insert(tokens.back());
    }
    for (const auto& r : opts.reserved) {
        if (!present.insert(r).second) throw data_error("duplicate reserved token: " + r);
        tokens.push_back(r);
    }
    for (const auto& s : inventory) {
        if (present.insert(s).second) tokens.push_back(s);
    }

    while (static_cast<int>(tokens.size()) < target_size) {
        std::map<std::pair<std::string, std::string>, uint64_t> pair_freq;
        for (const auto& [syms, freq] : words) {
            for (size_t i = 0; i + 1 < syms.size(); ++i) {
                pair_freq[{syms[i], syms[i + 1]}] += freq;
            }
        }
        if (pair_freq.empty()) break;
        // Highest count wins; ties go to the lexicographically smallest pair,
        // which is simply the first map entry at the max count.
        std::pair<std::string, std::string> best;
        uint64_t best_count = 0;
        for (const auto& [pair, count] : pair_freq) {
            if (count > best_count) {
                best = pair;
                best_count = count;
            }
        }
        const std::string merged = merge_symbols(best.first, best.second);
        for (auto& [syms, freq] : words) {
            std::vector<std::string> updated;
            updated.reserve(syms.size());
            size_t i = 0;
            while (i < syms.size()) {
                if (i + 1 < syms.size() && syms[i] == best.first && syms[i + 1] == best.second) {
                    updated.push_back(merged);
                    i += 2;
                } else {
                    updated.push_back(syms[i]);
                    ++i;
                }
            }
            syms = std::move(updated);
        }
        if (present.insert(merged).second) tokens.push_back(merged);
    }

    Vocab v(std::move(tokens), opts.cased);
    v.check();
    return v;
}

TokenSeq tokenize(std::string_view text, const Vocab& vocab) {
    TokenSeq seq;
    for (const auto& raw : split_words(text)) {
        const std::string word = vocab.cased() ? raw : ascii_lower(raw);
        std::vector<int> ids;
        std::vector<std::string> pieces;
        bool failed = count_codepoints(word) > kMaxWordChars;
        if (!failed) {
            size_t i = 0;
            while (i < word.size()) {
                int match = -1;
                size_t match_end = 0;
                for (size_t j = word.size(); j > i; --j) {
                    std::string candidate = (i == 0)
                        ? word.substr(i, j - i)
                        : "##" + word.substr(i, j - i);
                    int id = vocab.id(candidate);
                    if (id >= 0) {
                        match = id;
                        match_end = j;
                        pieces.push_back(std::move(candidate));
                        break;
                    }
                }
                if (match < 0) {
                    failed = true;
                    break;
                }
                ids.push_back(match);
                i = match_end;
            }
        }
        if (failed) {
            seq.ids.push_back(kUnkId);
            seq.pieces.emplace_back(kSpecialTokens[kUnkId]);
            seq.word_starts.push_back(1);
        } else {
            for (size_t k = 0; k < ids.size(); ++k) {
                seq.ids.push_back(ids[k]);
                seq.pieces.push_back(pieces[k]);
                seq.word_starts.push_back(k == 0 ? 1 : 0);
            }
        }
    }
    return seq;
}

std::vector<std::string> ids_to_pieces(const std::vector<int>& ids, const Vocab& vocab) {
    std::vector<std::string> pieces;
    pieces.reserve(ids.size());
    for (int id : ids) pieces.push_back(vocab.piece(id));
    return pieces;
}

std::vector<int> pieces_to_ids(const std::vector<std::string>& pieces, const Vocab& vocab) {
    std::vector<int> ids;
    ids.reserve(pieces.size());
    for (const auto& p : pieces) {
        int id = vocab.id(p);
        if (id < 0) throw data_error("piece not in vocab: " + p);
        ids.push_back(id);
    }
    return ids;
}

std::string pieces_to_text(const std::vector<std::string>& pieces) {
    std::string out;
    for (const auto& p : pieces) {
        if (p.rfind("##", 0) == 0) {
            out += p.substr(2);
        } else {
            if (!out.empty()) out += ' ';
            out += p;
        }
    }
    return out;
}

} // namespace finadapt::tok
