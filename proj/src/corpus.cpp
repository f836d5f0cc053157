#include "finadapt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "finadapt/error.hpp"
#include "finadapt/time_util.hpp"
#include "finadapt/unicode.hpp"

namespace finadapt::corpus {

using nlohmann::json;

void FilterConfig::check() const {
    if (max_non_alpha_fraction < 0.0 || max_non_alpha_fraction > 1.0) {
        throw data_error("max_non_alpha_fraction must be in [0,1]");
    }
    for (const auto& code : allowed_topic_codes) {
        if (excluded_topic_codes.count(code)) {
            throw data_error("topic code both allowed and excluded: " + code);
        }
    }
}

std::string Ric::serialized() const {
    std::string s = "<" + ticker;
    if (exchange) s += "." + *exchange;
    s += ">";
    return s;
}

double non_alpha_fraction(std::string_view body) {
    uint64_t non_ws = 0;
    uint64_t non_letter = 0;
    size_t pos = 0;
    while (pos < body.size()) {
        uint32_t cp = uni::next_codepoint(body, pos);
        if (uni::is_space(cp)) continue;
        ++non_ws;
        if (!uni::is_letter(cp)) ++non_letter;
    }
    if (non_ws == 0) return 1.0;
    return static_cast<double>(non_letter) / static_cast<double>(non_ws);
}

std::vector<RicMatch> parse_rics(std::string_view text) {
    std::vector<RicMatch> out;
    size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '<') {
            ++i;
            continue;
        }
        size_t j = i + 1;
        size_t ticker_end = j;
        while (ticker_end < text.size() && uni::is_ascii_alnum(text[ticker_end])) ++ticker_end;
        if (ticker_end == j) { // no ticker chars
            ++i;
            continue;
        }
        size_t k = ticker_end;
        std::optional<std::string> exchange;
        if (k < text.size() && text[k] == '.') {
            size_t exch_end = k + 1;
            while (exch_end < text.size() && uni::is_ascii_alnum(text[exch_end])) ++exch_end;
            if (exch_end > k + 1 && exch_end < text.size() && text[exch_end] == '>') {
                exchange = std::string(text.substr(k + 1, exch_end - k - 1));
                k = exch_end;
            }
        }
        if (k < text.size() && text[k] == '>') {
            RicMatch m;
            m.ric.ticker = std::string(text.substr(j, ticker_end - j));
            m.ric.exchange = exchange;
            m.begin = i;
            m.end = k + 1;
            out.push_back(std::move(m));
            i = k + 1;
        } else {
            ++i;
        }
    }
    return out;
}

const char* drop_rule_name(DropRule rule) {
    switch (rule) {
        case DropRule::malformed: return "malformed";
        case DropRule::language: return "language";
        case DropRule::topic_not_allowed: return "topic_not_allowed";
        case DropRule::topic_excluded: return "topic_excluded";
        case DropRule::headline_keyword: return "headline_keyword";
        case DropRule::non_alpha: return "non_alpha";
    }
    return "?";
}

uint64_t FilterReport::total() const {
    uint64_t n = kept;
    for (uint64_t d : dropped) n += d;
    return n;
}

void FilterReport::write_csv(std::ostream& os) const {
    os << "rule,count\n";
    os << "kept," << kept << "\n";
    for (int i = 0; i < 6; ++i) {
        os << drop_rule_name(static_cast<DropRule>(i)) << "," << dropped[i] << "\n";
    }
}

namespace {

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

} // namespace

std::optional<DropRule> evaluate_filter(const RawArticle& article, const FilterConfig& cfg) {
    if (article.id.empty()) return DropRule::malformed;
    if (article.language != cfg.required_language) return DropRule::language;
    if (!cfg.allowed_topic_codes.empty()) {
        bool hit = std::any_of(article.topic_codes.begin(), article.topic_codes.end(),
                               [&](const std::string& c) { return cfg.allowed_topic_codes.count(c) > 0; });
        if (!hit) return DropRule::topic_not_allowed;
    }
    for (const auto& code : article.topic_codes) {
        if (cfg.excluded_topic_codes.count(code)) return DropRule::topic_excluded;
    }
    if (!cfg.excluded_headline_keywords.empty()) {
        const std::string headline = ascii_lower(article.headline);
        for (const auto& kw : cfg.excluded_headline_keywords) {
            if (!kw.empty() && headline.find(ascii_lower(kw)) != std::string::npos) {
                return DropRule::headline_keyword;
            }
        }
    }
    if (non_alpha_fraction(article.body) > cfg.max_non_alpha_fraction) {
        return DropRule::non_alpha;
    }
    return std::nullopt;
}

std::pair<std::vector<RawArticle>, FilterReport>
filter_corpus(const std::vector<RawArticle>& articles, const FilterConfig& cfg) {
    cfg.check();
    std::vector<RawArticle> kept;
    FilterReport report;
    std::set<std::string> seen_ids;
    for (const auto& a : articles) {
        std::optional<DropRule> rule = evaluate_filter(a, cfg);
        if (!rule && !seen_ids.insert(a.id).second) rule = DropRule::malformed;
        if (rule) {
            ++report.dropped[static_cast<int>(*rule)];
        } else {
            kept.push_back(a);
            ++report.kept;
        }
    }
    return {std::move(kept), report};
}

// ---- sentence splitting ----

SentenceSplitOptions SentenceSplitOptions::defaults() {
    SentenceSplitOptions o;
    o.abbreviations = {
        "Inc.", "Corp.", "Co.",  "Ltd.",  "Plc.",  "Mr.",   "Mrs.",  "Ms.",
        "Dr.",  "St.",   "Jr.",  "Sr.",   "U.S.",  "U.K.",  "U.N.",  "E.U.",
        "No.",  "Nos.",  "vs.",  "etc.",  "Jan.",  "Feb.",  "Mar.",  "Apr.",
        "Jun.", "Jul.",  "Aug.", "Sep.",  "Sept.", "Oct.",  "Nov.",  "Dec.",
        "Rev.", "Gen.",  "Sen.", "Rep.",  "Gov.",  "Prof.", "pct.",
    };
    return o;
}

namespace {

bool is_ws_byte(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminal_punct(char c) { return c == '.' || c == '!' || c == '?'; }

// Token containing position `dot` (a '.'), delimited by whitespace.
std::string token_around(std::string_view body, size_t dot) {
    size_t start = dot;
    while (start > 0 && !is_ws_byte(body[start - 1])) --start;
    return std::string(body.substr(start, dot - start + 1));
}

} // namespace

std::vector<Sentence> split_sentences(std::string_view body) {
    return split_sentences(body, SentenceSplitOptions::defaults());
}

std::vector<Sentence> split_sentences(std::string_view body, const SentenceSplitOptions& opts) {
    std::vector<Sentence> out;
    if (body.empty()) return out;

    const std::vector<RicMatch> rics = parse_rics(body);
    auto inside_ric = [&](size_t pos) {
        for (const auto& r : rics) {
            if (pos > r.begin && pos < r.end - 1) return true; // strictly inside
        }
        return false;
    };

    // Boundary = index one past the final punctuation char of a terminating run.
    std::vector<size_t> boundaries;
    size_t i = 0;
    while (i < body.size()) {
        if (!is_terminal_punct(body[i])) {
            ++i;
            continue;
        }
        size_t run_end = i;
        while (run_end + 1 < body.size() && is_terminal_punct(body[run_end + 1])) ++run_end;

        // Must be followed by whitespace then an uppercase letter, or end of text.
        size_t next = run_end + 1;
        bool saw_ws = false;
        while (next < body.size() && is_ws_byte(body[next])) {
            saw_ws = true;
            ++next;
        }
        bool terminates;
        if (next >= body.size()) {
            terminates = true;
        } else if (saw_ws) {
            size_t p = next;
            terminates = uni::is_ascii_upper(uni::next_codepoint(body, p));
        } else {
            terminates = false;
        }

        if (terminates && body[run_end] == '.' && run_end == i) {
            const std::string token = token_around(body, run_end);
            if (opts.abbreviations.count(token)) terminates = false;
        }
        if (terminates) {
            bool in_ric = false;
            for (size_t p = i; p <= run_end; ++p) {
                if (inside_ric(p)) { in_ric = true; break; }
            }
            if (!in_ric) boundaries.push_back(run_end + 1);
        }
        i = run_end + 1;
    }

    // Assemble spans: each sentence runs from the first non-whitespace char
    // after the previous boundary up to its boundary; a trailing unterminated
    // chunk becomes the last sentence.
    size_t cursor = 0;
    auto emit = [&](size_t end) {
        size_t start = cursor;
        while (start < end && is_ws_byte(body[start])) ++start;
        size_t stop = end;
        while (stop > start && is_ws_byte(body[stop - 1])) --stop;
        if (stop > start) {
            Sentence s;
            s.begin = start;
            s.end = stop;
            s.text = std::string(body.substr(start, stop - start));
            out.push_back(std::move(s));
        }
        cursor = end;
    };
    for (size_t b : boundaries) emit(b);
    emit(body.size());
    return out;
}

// ---- JSONL ----

std::string article_to_json(const RawArticle& a) {
    json j;
    j["id"] = a.id;
    j["timestamp"] = format_timestamp(a.timestamp);
    j["headline"] = a.headline;
    j["body"] = a.body;
    j["language"] = a.language;
    j["topic_codes"] = a.topic_codes;
    return j.dump();
}

RawArticle article_from_json(const std::string& line) {
    json j = json::parse(line); // throws nlohmann::json::parse_error
    RawArticle a;
    a.id = j.at("id").get<std::string>();
    a.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
    a.headline = j.at("headline").get<std::string>();
    a.body = j.at("body").get<std::string>();
    a.language = j.at("language").get<std::string>();
    if (j.contains("topic_codes")) {
        for (const auto& c : j.at("topic_codes")) a.topic_codes.insert(c.get<std::string>());
    }
    return a;
}

std::vector<RawArticle> read_articles(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open article file: " + path);
    std::vector<RawArticle> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(article_from_json(line));
        } catch (const std::exception& e) {
            throw data_error(path + ":" + std::to_string(lineno) + ": bad article record: " + e.what());
        }
    }
    return out;
}

void write_articles(const std::vector<RawArticle>& articles, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open output file: " + path);
    for (const auto& a : articles) out << article_to_json(a) << "\n";
}

FilterReport filter_corpus_stream(const std::string& in_path, const std::string& out_path,
                                  const FilterConfig& cfg, int threads) {
    cfg.check();
    std::ifstream in(in_path);
    if (!in) throw io_error("cannot open input corpus: " + in_path);
    std::ofstream out(out_path);
    if (!out) throw io_error("cannot open output corpus: " + out_path);

    FilterReport report;
    std::set<std::string> seen_ids;
    const size_t chunk_size = 1024;
    std::vector<std::string> lines;
    lines.reserve(chunk_size);

    auto flush_chunk = [&]() {
        if (lines.empty()) return;
        // verdicts[i]: -1 keep, -2 parse failure, else DropRule index
        std::vector<int> verdicts(lines.size(), -2);
        std::vector<RawArticle> parsed(lines.size());
        const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(lines.size())));
        auto worker = [&](size_t begin, size_t end) {
            for (size_t k = begin; k < end; ++k) {
                try {
                    parsed[k] = article_from_json(lines[k]);
                    auto rule = evaluate_filter(parsed[k], cfg);
                    verdicts[k] = rule ? static_cast<int>(*rule) : -1;
                } catch (const std::exception&) {
                    verdicts[k] = -2;
                }
            }
        };
        if (nthreads == 1) {
            worker(0, lines.size());
        } else {
            std::vector<std::thread> pool;
            size_t per = (lines.size() + nthreads - 1) / nthreads;
            for (int t = 0; t < nthreads; ++t) {
                size_t b = t * per;
                size_t e = std::min(lines.size(), b + per);
                if (b < e) pool.emplace_back(worker, b, e);
            }
            for (auto& th : pool) th.join();
        }
        // Ordered, single-threaded emission; duplicate-id tracking happens here.
        for (size_t k = 0; k < lines.size(); ++k) {
            int v = verdicts[k];
            if (v == -1 && !seen_ids.insert(parsed[k].id).second) {
                v = static_cast<int>(DropRule::malformed);
            }
            if (v == -1) {
                out << lines[k] << "\n";
                ++report.kept;
            } else if (v == -2) {
                ++report.dropped[static_cast<int>(DropRule::malformed)];
            } else {
                ++report.dropped[v];
            }
        }
        lines.clear();
    };

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        lines.push_back(line);
        if (lines.size() >= chunk_size) flush_chunk();
    }
    flush_chunk();
    return report;
}

} // namespace finadapt::corpus
