#include "finadapt/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "finadapt/error.hpp"

namespace finadapt {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') {
                throw data_error(origin + ":" + std::to_string(lineno) + ": unterminated section header");
            }
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) {
                throw data_error(origin + ":" + std::to_string(lineno) + ": empty section name");
            }
            cfg.sections_[section]; // register even if empty
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw data_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        if (section.empty()) {
            throw data_error(origin + ":" + std::to_string(lineno) + ": key outside any [section]");
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw data_error(origin + ":" + std::to_string(lineno) + ": empty key");
        }
        auto& sec = cfg.sections_[section];
        if (sec.count(key)) {
            throw data_error(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
        sec[key] = value;
    }
    return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
}

std::string Config::get_str(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    if (it == sections_.end() || !it->second.count(key)) {
        throw data_error(origin_ + ": missing config key [" + section + "] " + key);
    }
    return it->second.at(key);
}

std::string Config::get_str(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    return has(section, key) ? get_str(section, key) : fallback;
}

int64_t Config::get_i64(const std::string& section, const std::string& key) const {
    const std::string v = get_str(section, key);
    char* end = nullptr;
    long long n = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0') {
        throw data_error(origin_ + ": [" + section + "] " + key + ": not an integer: '" + v + "'");
    }
    return n;
}

int64_t Config::get_i64(const std::string& section, const std::string& key, int64_t fallback) const {
    return has(section, key) ? get_i64(section, key) : fallback;
}

double Config::get_f64(const std::string& section, const std::string& key) const {
    const std::string v = get_str(section, key);
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0') {
        throw data_error(origin_ + ": [" + section + "] " + key + ": not a number: '" + v + "'");
    }
    return x;
}

double Config::get_f64(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? get_f64(section, key) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get_str(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw data_error(origin_ + ": [" + section + "] " + key + ": not a boolean: '" + v + "'");
}

std::vector<std::string> Config::get_list(const std::string& section, const std::string& key) const {
    std::vector<std::string> out;
    std::string v = get_str(section, key);
    size_t pos = 0;
    while (pos <= v.size()) {
        size_t comma = v.find(',', pos);
        std::string item = trim(comma == std::string::npos ? v.substr(pos)
                                                           : v.substr(pos, comma - pos));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<double> Config::get_f64_list(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : get_list(section, key)) {
        char* end = nullptr;
        double x = std::strtod(item.c_str(), &end);
        if (end == item.c_str() || *end != '\0') {
            throw data_error(origin_ + ": [" + section + "] " + key + ": not a number: '" + item + "'");
        }
        out.push_back(x);
    }
    return out;
}

void Config::validate(const Schema& schema) const {
    for (const auto& [section, kv] : sections_) {
        auto it = schema.find(section);
        if (it == schema.end()) {
            throw data_error(origin_ + ": unknown config section [" + section + "]");
        }
        for (const auto& [key, _] : kv) {
            if (!it->second.count(key)) {
                throw data_error(origin_ + ": unknown key '" + key + "' in section [" + section + "]");
            }
        }
    }
}

} // namespace finadapt
