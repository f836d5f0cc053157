#include "finadapt/pretrain_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "finadapt/binio.hpp"
#include "finadapt/error.hpp"
#include "finadapt/tokenizer.hpp"

namespace finadapt::pretrain {

int PretrainDataConfig::effective_max_masks() const {
    if (max_masks_per_seq > 0) return max_masks_per_seq;
    return static_cast<int>(std::ceil(mask_prob * max_seq_len));
}

void PretrainDataConfig::check() const {
    if (!(mask_prob > 0.0 && mask_prob < 1.0)) throw data_error("mask_prob must be in (0,1)");
    if (max_seq_len < 8) throw data_error("max_seq_len must be >= 8");
    if (dup_factor < 1) throw data_error("dup_factor must be >= 1");
}

int PretrainExample::seq_len() const {
    int n = 0;
    for (uint8_t m : input_mask) n += m;
    return n;
}

void validate_example(const PretrainExample& ex, int max_seq_len, int vocab_size) {
    const size_t L = static_cast<size_t>(max_seq_len);
    if (ex.input_ids.size() != L || ex.input_mask.size() != L || ex.segment_ids.size() != L) {
        throw data_error("example field length != max_seq_len");
    }
    // input_mask must be a contiguous run of 1s from position 0.
    size_t len = 0;
    while (len < L && ex.input_mask[len] == 1) ++len;
    for (size_t i = len; i < L; ++i) {
        if (ex.input_mask[i] != 0) throw data_error("input_mask not contiguous");
    }
    if (len < 4) throw data_error("sequence too short for [CLS] A [SEP] B [SEP]");
    if (ex.input_ids[0] != tok::kClsId) throw data_error("first token must be [CLS]");
    if (ex.input_ids[len - 1] != tok::kSepId) throw data_error("last non-pad token must be [SEP]");
    for (size_t i = len; i < L; ++i) {
        if (ex.input_ids[i] != tok::kPadId) throw data_error("pad region must hold [PAD]");
        if (ex.segment_ids[i] != 0) throw data_error("pad region must have segment 0");
    }
    // Segments: 0s then 1s; the boundary [SEP] is the last segment-0 position.
    size_t a_sep = 0;
    for (size_t i = 0; i < len; ++i) {
        if (ex.segment_ids[i] == 0) {
            if (i > 0 && ex.segment_ids[i - 1] == 1) throw data_error("segment ids not 0*1*");
            a_sep = i;
        } else if (ex.segment_ids[i] != 1) {
            throw data_error("segment id not in {0,1}");
        }
    }
    if (ex.input_ids[a_sep] != tok::kSepId) throw data_error("segment boundary must be [SEP]");
    if (ex.masked_positions.size() != ex.masked_label_ids.size()) {
        throw data_error("masked_positions / masked_label_ids length mismatch");
    }
    if (ex.masked_positions.size() > L) throw data_error("too many masked positions");
    for (size_t k = 0; k < ex.masked_positions.size(); ++k) {
        const size_t p = ex.masked_positions[k];
        if (k > 0 && p <= ex.masked_positions[k - 1]) {
            throw data_error("masked_positions must be strictly increasing");
        }
        if (p == 0 || p >= len - 1 || p == a_sep) {
            throw data_error("masked position points at [CLS]/[SEP]/[PAD]");
        }
        if (vocab_size > 0 && ex.masked_label_ids[k] >= static_cast<uint32_t>(vocab_size)) {
            throw data_error("masked label id out of vocab range");
        }
    }
    if (vocab_size > 0) {
        for (size_t i = 0; i < len; ++i) {
            if (ex.input_ids[i] >= static_cast<uint32_t>(vocab_size)) {
                throw data_error("input id out of vocab range");
            }
        }
    }
    if (ex.is_random_next > 1) throw data_error("is_random_next must be 0 or 1");
}

void truncate_pair(std::vector<int>& a, std::vector<int>& b, int max_tokens) {
    while (static_cast<int>(a.size() + b.size()) > max_tokens) {
        if (a.size() > b.size() && a.size() > 1) {
            a.pop_back();
        } else if (b.size() > 1) {
            b.pop_back();
        } else {
            a.pop_back();
        }
    }
}

std::vector<SentencePair> make_sentence_pairs(const std::vector<TokenizedDoc>& docs,
                                              const PretrainDataConfig& cfg, Rng& rng) {
    cfg.check();
    const int max_tokens = cfg.max_seq_len - 3;

    std::vector<size_t> nonempty;
    for (size_t d = 0; d < docs.size(); ++d) {
        if (!docs[d].empty()) nonempty.push_back(d);
    }

    std::vector<SentencePair> pairs;
    for (size_t d : nonempty) {
        const TokenizedDoc& doc = docs[d];
        size_t i = 0;
        while (i < doc.size()) {
            const int target = static_cast<int>(rng.uniform_int(2, max_tokens));
            std::vector<size_t> chunk;
            int chunk_tokens = 0;
            // Take at least two sentences when the document still has them;
            // singleton chunks force is_random_next=1 and would skew the
            // 50/50 next-sentence balance.
            while (i < doc.size() && (chunk.size() < 2 || chunk_tokens < target)) {
                chunk.push_back(i);
                chunk_tokens += static_cast<int>(doc[i].size());
                ++i;
            }
            if (chunk.size() == 1 && doc.size() >= 2) {
                break; // trailing leftover sentence of a multi-sentence document
            }

            size_t a_end;
            bool random_next;
            if (chunk.size() >= 2) {
                a_end = static_cast<size_t>(rng.uniform_int(1, static_cast<int64_t>(chunk.size()) - 1));
                random_next = rng.bernoulli(0.5);
            } else {
                a_end = 1;
                random_next = true; // a lone sentence has no true continuation
            }

            if (random_next && nonempty.size() < 2) {
                if (chunk.size() >= 2) {
                    random_next = false;
                } else {
                    continue; // nothing to pair against
                }
            }

            SentencePair pair;
            pair.random_next = random_next;
            for (size_t k = 0; k < a_end; ++k) {
                const auto& s = doc[chunk[k]];
                pair.seg_a.insert(pair.seg_a.end(), s.begin(), s.end());
            }

            if (random_next) {
                // Unused chunk sentences go back to the stream.
                i -= chunk.size() - a_end;
                size_t other;
                do {
                    other = nonempty[rng.below(nonempty.size())];
                } while (other == d);
                const TokenizedDoc& src = docs[other];
                size_t start = rng.below(src.size());
                const int b_target = std::max(1, target - static_cast<int>(pair.seg_a.size()));
                for (size_t k = start; k < src.size(); ++k) {
                    pair.seg_b.insert(pair.seg_b.end(), src[k].begin(), src[k].end());
                    if (static_cast<int>(pair.seg_b.size()) >= b_target) break;
                }
            } else {
                for (size_t k = a_end; k < chunk.size(); ++k) {
                    const auto& s = doc[chunk[k]];
                    pair.seg_b.insert(pair.seg_b.end(), s.begin(), s.end());
                }
            }
            if (pair.seg_a.empty() || pair.seg_b.empty()) continue;
            truncate_pair(pair.seg_a, pair.seg_b, max_tokens);
            pairs.push_back(std::move(pair));
        }
    }
    if (pairs.empty()) throw data_error("insufficient sentences for NSP");
    return pairs;
}

PretrainExample apply_masking(const SentencePair& pair, const PretrainDataConfig& cfg,
                              int vocab_size, Rng& rng) {
    const int L = cfg.max_seq_len;
    const int used = static_cast<int>(pair.seg_a.size() + pair.seg_b.size()) + 3;
    if (used > L) throw data_error("sentence pair does not fit max_seq_len");

    PretrainExample ex;
    ex.input_ids.assign(L, tok::kPadId);
    ex.input_mask.assign(L, 0);
    ex.segment_ids.assign(L, 0);
    ex.is_random_next = pair.random_next ? 1 : 0;

    int p = 0;
    ex.input_ids[p++] = tok::kClsId;
    for (int t : pair.seg_a) ex.input_ids[p++] = static_cast<uint32_t>(t);
    ex.input_ids[p++] = tok::kSepId;
    const int b_begin = p;
    for (int t : pair.seg_b) ex.input_ids[p++] = static_cast<uint32_t>(t);
    ex.input_ids[p++] = tok::kSepId;
    for (int i = 0; i < used; ++i) ex.input_mask[i] = 1;
    for (int i = b_begin; i < used; ++i) ex.segment_ids[i] = 1;

    std::vector<uint16_t> maskable;
    for (int i = 1; i < used - 1; ++i) {
        if (i != b_begin - 1) maskable.push_back(static_cast<uint16_t>(i)); // skip A's [SEP]
    }
    const int k = std::min<int>(cfg.effective_max_masks(),
                                std::max<int64_t>(1, std::lround(cfg.mask_prob *
                                                                 static_cast<double>(maskable.size()))));
    rng.shuffle(maskable);
    maskable.resize(static_cast<size_t>(std::min<size_t>(maskable.size(), static_cast<size_t>(k))));
    std::sort(maskable.begin(), maskable.end());

    for (uint16_t pos : maskable) {
        ex.masked_positions.push_back(pos);
        ex.masked_label_ids.push_back(ex.input_ids[pos]);
        const double r = rng.next_double();
        if (r < 0.8) {
            ex.input_ids[pos] = tok::kMaskId;
        } else if (r < 0.9) {
            ex.input_ids[pos] = static_cast<uint32_t>(rng.below(static_cast<uint64_t>(vocab_size)));
        }
        // else: keep the original token; the position is still predicted.
    }
    return ex;
}

std::vector<PretrainExample> generate(const std::vector<TokenizedDoc>& docs,
                                      const PretrainDataConfig& cfg, int vocab_size) {
    cfg.check();
    std::vector<PretrainExample> out;
    for (int dup = 0; dup < cfg.dup_factor; ++dup) {
        Rng pair_rng = Rng::from_key({cfg.rng_seed, static_cast<uint64_t>(dup)});
        const auto pairs = make_sentence_pairs(docs, cfg, pair_rng);
        for (size_t j = 0; j < pairs.size(); ++j) {
            Rng mask_rng = Rng::from_key({cfg.rng_seed, static_cast<uint64_t>(dup), j});
            PretrainExample ex = apply_masking(pairs[j], cfg, vocab_size, mask_rng);
            validate_example(ex, cfg.max_seq_len, vocab_size);
            out.push_back(std::move(ex));
        }
    }
    return out;
}

// ---- record file ----

namespace {
constexpr char kMagic[4] = {'F', 'A', 'D', 'R'};
}

void write_records(const std::vector<PretrainExample>& examples, int max_seq_len,
                   const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open record file for writing: " + path);
    binio::put_bytes(out, kMagic, 4);
    binio::put_u16(out, kRecordFormatVersion);
    binio::put_u16(out, static_cast<uint16_t>(max_seq_len));
    for (const auto& ex : examples) {
        validate_example(ex, max_seq_len);
        std::ostringstream payload(std::ios::binary);
        for (uint32_t id : ex.input_ids) binio::put_u32(payload, id);
        auto mask_bytes = binio::pack_bits(ex.input_mask);
        binio::put_bytes(payload, mask_bytes.data(), mask_bytes.size());
        auto seg_bytes = binio::pack_bits(ex.segment_ids);
        binio::put_bytes(payload, seg_bytes.data(), seg_bytes.size());
        binio::put_u16(payload, static_cast<uint16_t>(ex.masked_positions.size()));
        for (uint16_t p : ex.masked_positions) binio::put_u16(payload, p);
        for (uint32_t l : ex.masked_label_ids) binio::put_u32(payload, l);
        binio::put_u8(payload, ex.is_random_next);
        const std::string bytes = payload.str();
        binio::put_u32(out, static_cast<uint32_t>(bytes.size()));
        binio::put_bytes(out, bytes.data(), bytes.size());
    }
    if (!out) throw io_error("write failed: " + path);
}

std::vector<PretrainExample> read_records(const std::string& path, int* max_seq_len_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open record file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        throw FileFormatError(FileFault::bad_magic, "not a record file (bad magic): " + path);
    }
    const uint16_t version = binio::get_u16(in, "record header");
    if (version != kRecordFormatVersion) {
        throw FileFormatError(FileFault::version_mismatch,
                              "unsupported record format version " + std::to_string(version));
    }
    const int L = binio::get_u16(in, "record header");
    if (max_seq_len_out) *max_seq_len_out = L;
    const size_t mask_bytes = (static_cast<size_t>(L) + 7) / 8;

    std::vector<PretrainExample> out;
    for (;;) {
        char peek[4];
        in.read(peek, 4);
        if (in.gcount() == 0) break; // clean EOF
        if (in.gcount() != 4) {
            throw FileFormatError(FileFault::truncated, "truncated record length prefix");
        }
        const uint32_t len = static_cast<uint8_t>(peek[0]) |
                             (static_cast<uint32_t>(static_cast<uint8_t>(peek[1])) << 8) |
                             (static_cast<uint32_t>(static_cast<uint8_t>(peek[2])) << 16) |
                             (static_cast<uint32_t>(static_cast<uint8_t>(peek[3])) << 24);
        std::string buf(len, '\0');
        in.read(buf.data(), len);
        if (static_cast<uint32_t>(in.gcount()) != len) {
            throw FileFormatError(FileFault::truncated, "truncated record");
        }
        std::istringstream rs(buf, std::ios::binary);
        PretrainExample ex;
        ex.input_ids.resize(L);
        for (int i = 0; i < L; ++i) ex.input_ids[i] = binio::get_u32(rs, "record");
        std::vector<uint8_t> packed(mask_bytes);
        binio::get_bytes(rs, packed.data(), mask_bytes, "record");
        ex.input_mask = binio::unpack_bits(packed, static_cast<size_t>(L));
        binio::get_bytes(rs, packed.data(), mask_bytes, "record");
        ex.segment_ids = binio::unpack_bits(packed, static_cast<size_t>(L));
        const uint16_t n_masks = binio::get_u16(rs, "record");
        ex.masked_positions.resize(n_masks);
        for (int i = 0; i < n_masks; ++i) ex.masked_positions[i] = binio::get_u16(rs, "record");
        ex.masked_label_ids.resize(n_masks);
        for (int i = 0; i < n_masks; ++i) ex.masked_label_ids[i] = binio::get_u32(rs, "record");
        ex.is_random_next = binio::get_u8(rs, "record");
        if (rs.peek() != EOF) {
            throw FileFormatError(FileFault::corrupt, "record length does not match payload");
        }
        validate_example(ex, L);
        out.push_back(std::move(ex));
    }
    return out;
}

} // namespace finadapt::pretrain
