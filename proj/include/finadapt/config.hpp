#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace finadapt {

// Sectioned key-value config files:
//
//   # comment
//   [train]
//   steps = 2000
//   learning_rate = 1e-3
//
// Parsing is permissive about whitespace; validation is strict: validate()
// rejects any section or key not declared in the schema, so typos fail fast
// before any work starts.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& section, const std::string& key) const;

    std::string get_str(const std::string& section, const std::string& key) const;
    std::string get_str(const std::string& section, const std::string& key,
                        const std::string& fallback) const;
    int64_t get_i64(const std::string& section, const std::string& key) const;
    int64_t get_i64(const std::string& section, const std::string& key, int64_t fallback) const;
    double get_f64(const std::string& section, const std::string& key) const;
    double get_f64(const std::string& section, const std::string& key, double fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    // Comma-separated list; empty value -> empty list.
    std::vector<std::string> get_list(const std::string& section, const std::string& key) const;
    std::vector<double> get_f64_list(const std::string& section, const std::string& key) const;

    using Schema = std::map<std::string, std::set<std::string>>;
    // Throws on unknown sections/keys. Known sections with unknown keys name
    // the offending key in the message.
    void validate(const Schema& schema) const;

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

private:
    std::string origin_;
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

} // namespace finadapt
