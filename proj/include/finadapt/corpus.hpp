#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace finadapt::corpus {

struct RawArticle {
    std::string id;                   // unique, sortable
    int64_t timestamp = 0;            // UTC epoch seconds
    std::string headline;
    std::string body;                 // UTF-8; may be empty (always filtered)
    std::string language;             // ISO-639-1
    std::set<std::string> topic_codes;
};

struct FilterConfig {
    // Empty allowed set = no inclusion constraint (every topic passes).
    std::set<std::string> allowed_topic_codes;
    std::set<std::string> excluded_topic_codes;
    std::set<std::string> excluded_headline_keywords; // case-insensitive substring
    double max_non_alpha_fraction = 0.1;
    std::string required_language = "en";

    void check() const; // throws on invariant violation
};

struct Sentence {
    std::string text;
    size_t begin = 0; // char offsets into body, [begin, end)
    size_t end = 0;
};

struct Ric {
    std::string ticker;                  // ASCII alphanumeric, non-empty
    std::optional<std::string> exchange; // ASCII alphanumeric

    std::string serialized() const; // "<TICKER>" or "<TICKER.EXCH>"
};

struct RicMatch {
    Ric ric;
    size_t begin = 0; // span of the full "<...>" token, [begin, end)
    size_t end = 0;
};

// Fraction of non-letter characters among non-whitespace characters of the
// body; 1.0 when there are no non-whitespace characters. Counts Unicode
// codepoints, not bytes.
double non_alpha_fraction(std::string_view body);

// Every maximal <TICKER> / <TICKER.EXCH> match, left to right, non-overlapping.
std::vector<RicMatch> parse_rics(std::string_view text);

// Filter rules in drop-attribution order.
enum class DropRule {
    malformed,
    language,
    topic_not_allowed,
    topic_excluded,
    headline_keyword,
    non_alpha,
};

const char* drop_rule_name(DropRule rule);

struct FilterReport {
    uint64_t kept = 0;
    uint64_t dropped[6] = {0, 0, 0, 0, 0, 0}; // indexed by DropRule

    uint64_t total() const;
    void write_csv(std::ostream& os) const; // two columns: rule,count (plus kept)
};

// First failing rule, or nullopt if the article is kept. Pure; safe to call
// concurrently. Duplicate-id detection lives in the corpus-level drivers.
std::optional<DropRule> evaluate_filter(const RawArticle& article, const FilterConfig& cfg);

// In-memory driver. Output order equals input order.
std::pair<std::vector<RawArticle>, FilterReport>
filter_corpus(const std::vector<RawArticle>& articles, const FilterConfig& cfg);

struct SentenceSplitOptions {
    std::set<std::string> abbreviations; // tokens whose trailing '.' never terminates

    static SentenceSplitOptions defaults();
};

// Rule-based splitter: sentence-final . ! ? followed by whitespace and an
// uppercase letter (or end of text) terminates, except after a listed
// abbreviation; any boundary falling inside a RIC span is cancelled.
// Concatenating the returned spans plus the gaps between them reconstructs
// the body exactly; spans never cut a RIC.
std::vector<Sentence> split_sentences(std::string_view body);
std::vector<Sentence> split_sentences(std::string_view body, const SentenceSplitOptions& opts);

// JSONL serialization (one article per line).
std::string article_to_json(const RawArticle& a);
RawArticle article_from_json(const std::string& line);
std::vector<RawArticle> read_articles(const std::string& path);
void write_articles(const std::vector<RawArticle>& articles, const std::string& path);

// Streaming CLI driver: reads JSONL from `in_path`, writes kept articles to
// `out_path` (input order), returns the drop report. Lines that fail to parse
// count as malformed. `threads` caps worker parallelism; results are emitted
// in input order regardless.
FilterReport filter_corpus_stream(const std::string& in_path, const std::string& out_path,
                                  const FilterConfig& cfg, int threads = 1);

} // namespace finadapt::corpus
