#include "finadapt/attention_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "finadapt/binio.hpp"
#include "finadapt/error.hpp"

namespace finadapt::attn {

namespace {
constexpr char kMagic[4] = {'F', 'A', 'A', 'D'};
}

void write_dump(const AttentionDump& dump, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open dump for writing: " + path);
    binio::put_bytes(out, kMagic, 4);
    binio::put_u16(out, kDumpFormatVersion);
    binio::put_string(out, dump.model_id);
    binio::put_u16(out, static_cast<uint16_t>(dump.n_layers));
    binio::put_u16(out, static_cast<uint16_t>(dump.n_heads));
    binio::put_u32(out, static_cast<uint32_t>(dump.texts.size()));
    for (const auto& t : dump.texts) {
        const size_t L = t.pieces.size();
        if (t.word_starts.size() != L) throw data_error("word_starts length != pieces length");
        if (t.attention.n_layers != dump.n_layers || t.attention.n_heads != dump.n_heads ||
            t.attention.seq_len != static_cast<int>(L)) {
            throw data_error("attention tensor shape does not match dump text");
        }
        binio::put_u32(out, static_cast<uint32_t>(L));
        for (const auto& p : t.pieces) binio::put_string(out, p);
        const auto bits = binio::pack_bits(t.word_starts);
        binio::put_bytes(out, bits.data(), bits.size());
        for (float x : t.attention.v) binio::put_f32(out, x);
    }
    if (!out) throw io_error("dump write failed: " + path);
}

AttentionDump read_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open dump: " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        throw FileFormatError(FileFault::bad_magic, "not an attention dump: " + path);
    }
    const uint16_t version = binio::get_u16(in, "dump header");
    if (version != kDumpFormatVersion) {
        throw FileFormatError(FileFault::version_mismatch,
                              "unsupported dump version " + std::to_string(version));
    }
    AttentionDump dump;
    dump.model_id = binio::get_string(in, "dump header");
    dump.n_layers = binio::get_u16(in, "dump header");
    dump.n_heads = binio::get_u16(in, "dump header");
    const uint32_t n_texts = binio::get_u32(in, "dump header");
    dump.texts.resize(n_texts);
    for (auto& t : dump.texts) {
        const uint32_t L = binio::get_u32(in, "dump text");
        t.pieces.resize(L);
        for (auto& p : t.pieces) p = binio::get_string(in, "dump text");
        std::vector<uint8_t> bits((L + 7) / 8);
        binio::get_bytes(in, bits.data(), bits.size(), "dump text");
        t.word_starts = binio::unpack_bits(bits, L);
        t.attention.resize(dump.n_layers, dump.n_heads, static_cast<int>(L));
        for (auto& x : t.attention.v) x = binio::get_f32(in, "dump tensor");
    }
    if (in.peek() != EOF) {
        throw FileFormatError(FileFault::corrupt, "trailing bytes after dump texts");
    }
    return dump;
}

HeadSimMatrix head_cosine_similarity(const AttentionDump& a, const AttentionDump& b) {
    if (a.n_layers != b.n_layers || a.n_heads != b.n_heads) {
        throw data_error("dumps have different layer/head counts");
    }
    if (a.texts.size() != b.texts.size()) {
        throw data_error("dumps cover different text counts: " + std::to_string(a.texts.size()) +
                         " vs " + std::to_string(b.texts.size()));
    }
    for (size_t t = 0; t < a.texts.size(); ++t) {
        if (a.texts[t].pieces != b.texts[t].pieces) {
            throw data_error("tokenization mismatch at text " + std::to_string(t));
        }
    }
    if (a.texts.empty()) throw data_error("dumps contain no texts");

    HeadSimMatrix m;
    m.n_layers = a.n_layers;
    m.n_heads = a.n_heads;
    m.v.assign(static_cast<size_t>(a.n_layers) * a.n_heads, 0.0);
    for (size_t t = 0; t < a.texts.size(); ++t) {
        const auto& ta = a.texts[t].attention;
        const auto& tb = b.texts[t].attention;
        const int L = ta.seq_len;
        for (int l = 0; l < a.n_layers; ++l) {
            for (int h = 0; h < a.n_heads; ++h) {
                double dot = 0.0, na = 0.0, nb = 0.0;
                for (int i = 0; i < L; ++i) {
                    for (int j = 0; j < L; ++j) {
                        const double xa = ta.at(l, h, i, j);
                        const double xb = tb.at(l, h, i, j);
                        dot += xa * xb;
                        na += xa * xa;
                        nb += xb * xb;
                    }
                }
                // Rows are stochastic so the norms are never zero.
                m.at(l, h) += dot / (std::sqrt(na) * std::sqrt(nb));
            }
        }
    }
    for (auto& x : m.v) x /= static_cast<double>(a.texts.size());
    return m;
}

namespace {

// word_starts -> [begin, end) piece ranges per word.
std::vector<std::pair<int, int>> word_groups(const std::vector<uint8_t>& word_starts) {
    std::vector<std::pair<int, int>> groups;
    for (int i = 0; i < static_cast<int>(word_starts.size()); ++i) {
        if (word_starts[i] || groups.empty()) {
            groups.push_back({i, i + 1});
        } else {
            groups.back().second = i + 1;
        }
    }
    return groups;
}

} // namespace

model::AttentionTensor recombine_wordpiece_attention(const model::AttentionTensor& t,
                                                     const std::vector<uint8_t>& word_starts) {
    if (static_cast<int>(word_starts.size()) != t.seq_len) {
        throw data_error("word_starts length does not match attention size");
    }
    const auto groups = word_groups(word_starts);
    const int W = static_cast<int>(groups.size());
    model::AttentionTensor out;
    out.resize(t.n_layers, t.n_heads, W);
    for (int l = 0; l < t.n_layers; ++l) {
        for (int h = 0; h < t.n_heads; ++h) {
            for (int gi = 0; gi < W; ++gi) {
                const auto [ib, ie] = groups[static_cast<size_t>(gi)];
                for (int gj = 0; gj < W; ++gj) {
                    const auto [jb, je] = groups[static_cast<size_t>(gj)];
                    // Columns summed within the target word, rows averaged
                    // over the source word's pieces.
                    double acc = 0.0;
                    for (int i = ib; i < ie; ++i) {
                        for (int j = jb; j < je; ++j) acc += t.at(l, h, i, j);
                    }
                    out.at(l, h, gi, gj) = static_cast<float>(acc / (ie - ib));
                }
            }
        }
    }
    return out;
}

std::vector<TagAlignment> read_alignments(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open alignment file: " + path);
    std::vector<TagAlignment> out;
    TagAlignment current;
    std::string line;
    auto flush = [&]() {
        if (!current.words.empty()) {
            out.push_back(std::move(current));
            current = {};
        }
    };
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        std::vector<std::string> cols;
        size_t pos = 0;
        while (true) {
            const size_t tab = line.find('\t', pos);
            cols.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos
                                                                     : tab - pos));
            if (tab == std::string::npos) break;
            pos = tab + 1;
        }
        if (cols.size() != 4) {
            throw data_error(path + ":" + std::to_string(lineno) +
                             ": expected word<TAB>entity<TAB>pos<TAB>dep");
        }
        current.words.push_back(cols[0]);
        current.entity.push_back(cols[1]);
        current.pos.push_back(cols[2]);
        current.dep.push_back(cols[3]);
    }
    flush();
    return out;
}

void write_alignments(const std::vector<TagAlignment>& alignments, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open alignment file for writing: " + path);
    for (size_t t = 0; t < alignments.size(); ++t) {
        const auto& a = alignments[t];
        if (t > 0) out << "\n";
        for (size_t i = 0; i < a.words.size(); ++i) {
            out << a.words[i] << "\t" << a.entity[i] << "\t" << a.pos[i] << "\t" << a.dep[i]
                << "\n";
        }
    }
}

TagFrequencyResult tag_attention_frequency(const AttentionDump& dump,
                                           const std::vector<TagAlignment>& alignments,
                                           TagClass tag_class, double threshold,
                                           bool include_special) {
    if (alignments.size() != dump.texts.size()) {
        throw data_error("alignment count " + std::to_string(alignments.size()) +
                         " does not cover dump texts " + std::to_string(dump.texts.size()));
    }
    TagFrequencyResult res;
    res.n_layers = dump.n_layers;
    res.n_heads = dump.n_heads;

    // First pass: the tag inventory and totals (head-independent).
    std::map<std::string, uint64_t> totals;
    std::vector<const std::vector<std::string>*> text_tags;
    for (size_t t = 0; t < dump.texts.size(); ++t) {
        const TagAlignment& al = alignments[t];
        const std::vector<std::string>* tags = tag_class == TagClass::entity ? &al.entity
                                               : tag_class == TagClass::pos  ? &al.pos
                                                                             : &al.dep;
        const auto groups = word_groups(dump.texts[t].word_starts);
        // Words = [CLS] + aligned words + [SEP].
        if (groups.size() != tags->size() + 2) {
            throw data_error("alignment for text " + std::to_string(t) + " has " +
                             std::to_string(tags->size()) + " words, dump has " +
                             std::to_string(groups.size() > 2 ? groups.size() - 2 : 0));
        }
        text_tags.push_back(tags);
        for (const auto& tag : *tags) {
            if (!tag.empty()) ++totals[tag];
        }
    }
    for (const auto& [tag, n] : totals) {
        res.tags.push_back(tag);
        res.totals.push_back(n);
    }
    res.attended.assign(res.tags.size() * static_cast<size_t>(res.n_layers) * res.n_heads, 0);
    auto tag_index = [&](const std::string& tag) {
        const auto it = std::lower_bound(res.tags.begin(), res.tags.end(), tag);
        return static_cast<size_t>(it - res.tags.begin());
    };

    for (size_t t = 0; t < dump.texts.size(); ++t) {
        const auto& text = dump.texts[t];
        const auto word_attn = recombine_wordpiece_attention(text.attention, text.word_starts);
        const int W = word_attn.seq_len;
        const int lo = include_special ? 0 : 1;
        const int hi = include_special ? W : W - 1;
        const auto& tags = *text_tags[t];
        std::vector<uint8_t> attended_words(static_cast<size_t>(W));
        for (int l = 0; l < res.n_layers; ++l) {
            for (int h = 0; h < res.n_heads; ++h) {
                std::fill(attended_words.begin(), attended_words.end(), 0);
                for (int i = lo; i < hi; ++i) {
                    int best = lo;
                    for (int j = lo + 1; j < hi; ++j) {
                        if (word_attn.at(l, h, i, j) > word_attn.at(l, h, i, best)) best = j;
                    }
                    if (word_attn.at(l, h, i, best) > threshold) {
                        attended_words[static_cast<size_t>(best)] = 1;
                    }
                }
                // Real words sit at positions 1..W-2; specials carry no tags.
                for (int w = 1; w < W - 1; ++w) {
                    if (!attended_words[static_cast<size_t>(w)]) continue;
                    const std::string& tag = tags[static_cast<size_t>(w - 1)];
                    if (tag.empty()) continue;
                    const size_t ti = tag_index(tag);
                    res.attended[(ti * res.n_layers + static_cast<size_t>(l)) * res.n_heads + h]++;
                }
            }
        }
    }
    return res;
}

void emit_heatmap_csv(const HeadSimMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open heatmap csv: " + path);
    out << "layer";
    for (int h = 0; h < m.n_heads; ++h) out << ",head" << (h + 1);
    out << "\n";
    char buf[32];
    for (int l = 0; l < m.n_layers; ++l) {
        out << (l + 1);
        for (int h = 0; h < m.n_heads; ++h) {
            std::snprintf(buf, sizeof(buf), ",%.6f", m.at(l, h));
            out << buf;
        }
        out << "\n";
    }
}

HeadSimMatrix read_heatmap_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open heatmap csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw data_error("empty heatmap csv");
    const int n_heads = static_cast<int>(std::count(line.begin(), line.end(), ','));
    std::vector<double> values;
    int n_layers = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ','); // layer label
        while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
        ++n_layers;
    }
    HeadSimMatrix m;
    m.n_layers = n_layers;
    m.n_heads = n_heads;
    m.v = std::move(values);
    if (m.v.size() != static_cast<size_t>(n_layers) * n_heads) {
        throw data_error("ragged heatmap csv");
    }
    return m;
}

void write_tag_frequency_csv(const TagFrequencyResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open tag frequency csv: " + path);
    out << "tag,layer,head,attended,total,frequency\n";
    char buf[64];
    for (size_t t = 0; t < r.tags.size(); ++t) {
        for (int l = 0; l < r.n_layers; ++l) {
            for (int h = 0; h < r.n_heads; ++h) {
                std::snprintf(buf, sizeof(buf), ",%d,%d,%llu,%llu,%.6f\n", l + 1, h + 1,
                              static_cast<unsigned long long>(r.attended_at(t, l, h)),
                              static_cast<unsigned long long>(r.totals[t]),
                              r.frequency(t, l, h));
                out << r.tags[t] << buf;
            }
        }
    }
}

} // namespace finadapt::attn
