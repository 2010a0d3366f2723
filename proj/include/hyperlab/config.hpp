#pragma once

// Flat key-value configs with [section] headers. Keys are addressed as section.key.
//
//   [lab]
//   rate = linear 1
//   window = 8 11

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hyperlab/error.hpp"

namespace hyperlab::config {

struct Entry {
    std::string value;
    int line = 0;  // 0 for values set from the command line
};

class Config {
public:
    static Config parse(std::istream& in, const std::string& origin = "config") {
        Config c;
        c.origin_ = origin;
        std::string raw, section;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            const auto hash = raw.find('#');
            std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']' || s.size() < 3) c.fail(line, "malformed section header '" + s + "'");
                section = trim(s.substr(1, s.size() - 2));
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos) c.fail(line, "expected key = value, got '" + s + "'");
            const std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
            if (key.empty()) c.fail(line, "empty key");
            if (section.empty()) c.fail(line, "key '" + key + "' outside any [section]");
            const std::string full = section + "." + key;
            if (c.entries_.count(full)) c.fail(line, "duplicate key '" + full + "'");
            c.entries_[full] = {value, line};
        }
        return c;
    }

    static Config load(const std::string& path) {
        std::ifstream f(path);
        if (!f) usage_error("cannot open config " + path);
        return parse(f, path);
    }

    void set(const std::string& key, const std::string& value) { entries_[key] = {value, 0}; }
    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string str(const std::string& key, const std::string& fallback) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second.value;
    }

    double num(const std::string& key, double fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        return to_double(it->first, it->second);
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        const double v = to_double(it->first, it->second);
        if (v != static_cast<double>(static_cast<std::int64_t>(v)))
            fail(it->second.line, "key '" + key + "' must be an integer");
        return static_cast<std::int64_t>(v);
    }

    std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        std::istringstream is(it->second.value);
        std::vector<double> out;
        std::string tok;
        while (is >> tok) out.push_back(to_double(key, {tok, it->second.line}));
        return out;
    }

    // Every key must be in the allowed set.
    void check_known(const std::set<std::string>& allowed) const {
        for (const auto& [k, e] : entries_)
            if (!allowed.count(k)) fail(e.line, "unknown key '" + k + "'");
    }

    // Canonical text: sorted keys, one per line. Hashing it identifies the run.
    std::string canonical() const {
        std::string out;
        for (const auto& [k, e] : entries_) out += k + '=' + e.value + '\n';
        return out;
    }

    const std::map<std::string, Entry>& entries() const { return entries_; }

    [[noreturn]] void fail(int line, const std::string& msg) const {
        if (line > 0) usage_error(origin_ + ":" + std::to_string(line) + ": " + msg);
        usage_error(origin_ + ": " + msg);
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    }

    double to_double(const std::string& key, const Entry& e) const {
        try {
            std::size_t used = 0;
            const double v = std::stod(e.value, &used);
            if (used != e.value.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            fail(e.line, "key '" + key + "' expects a number, got '" + e.value + "'");
        }
    }

    std::string origin_ = "config";
    std::map<std::string, Entry> entries_;
};

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace hyperlab::config
