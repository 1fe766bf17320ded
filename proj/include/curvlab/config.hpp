#pragma once

// Scenario configuration. Two encodings of one schema:
//
//   # comment
//   scenario = cone-smooth
//   [cap]
//   beta = -0.5, -0.25
//   refinements = 3
//
// or, equivalently, {"scenario": "cone-smooth", "cap": {"beta": [-0.5, -0.25], "refinements": 3}}.
// Keys are addressed as "section.key"; keys before the first section header are top level.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace curvlab {

/// Raised for schema violations; `problems` holds one diagnostic per offending field.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p) {
        std::string s = "invalid configuration";
        for (const auto& m : p) s += "\n  " + m;
        return s;
    }
    std::vector<std::string> problems_;
};

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline bool parse_double(const std::string& s, double& out) {
    std::string t = trim(s);
    if (t.empty()) return false;
    const char* first = t.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
    return ec == std::errc() && ptr == t.data() + t.size();
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    if (!s.empty() && s.back() == ',') out.push_back("");
    return out;
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace detail

/// Parsed but not yet validated configuration: flat map from "section.key" to its textual value.
class Config {
public:
    static Config parse_text(const std::string& text, const std::string& origin = "config") {
        Config c;
        std::vector<std::string> problems;
        std::istringstream in(text);
        std::string line, section;
        int no = 0;
        while (std::getline(in, line)) {
            ++no;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            std::string where = origin + ":" + std::to_string(no);
            if (line.front() == '[') {
                if (line.back() != ']') {
                    problems.push_back(where + ": unterminated section header");
                    continue;
                }
                section = detail::trim(line.substr(1, line.size() - 2));
                if (section.empty() || section.find_first_of(" .=") != std::string::npos)
                    problems.push_back(where + ": bad section name '" + section + "'");
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos) {
                problems.push_back(where + ": expected key = value");
                continue;
            }
            std::string key = detail::trim(line.substr(0, eq));
            std::string value = detail::trim(line.substr(eq + 1));
            if (key.empty() || key.find_first_of(" .") != std::string::npos) {
                problems.push_back(where + ": bad key '" + key + "'");
                continue;
            }
            std::string full = section.empty() ? key : section + "." + key;
            if (c.values_.count(full)) problems.push_back(where + ": duplicate key '" + full + "'");
            c.values_[full] = value;
            c.lines_[full] = where;
        }
        if (!problems.empty()) throw ConfigError(problems);
        return c;
    }

    static Config parse_json(const std::string& text, const std::string& origin = "config") {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError({origin + ": " + e.what()});
        }
        if (!j.is_object()) throw ConfigError({origin + ": top level must be an object"});
        Config c;
        std::vector<std::string> problems;
        auto scalar = [&](const nlohmann::json& v, const std::string& key, std::string& out) {
            if (v.is_string()) out = v.get<std::string>();
            else if (v.is_boolean()) out = v.get<bool>() ? "true" : "false";
            else if (v.is_number_integer()) out = std::to_string(v.get<long long>());
            else if (v.is_number()) out = format_number(v.get<double>());
            else {
                problems.push_back(origin + ": field " + key + ": unsupported value " + v.dump());
                return false;
            }
            return true;
        };
        auto value = [&](const nlohmann::json& v, const std::string& key) {
            std::string s;
            if (v.is_array()) {
                for (std::size_t i = 0; i < v.size(); ++i) {
                    std::string item;
                    if (!scalar(v[i], key, item)) return;
                    s += (i ? ", " : "") + item;
                }
            } else if (!scalar(v, key, s)) {
                return;
            }
            c.values_[key] = s;
            c.lines_[key] = origin + ": " + key;
        };
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it.value().is_object()) {
                for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) value(jt.value(), it.key() + "." + jt.key());
            } else {
                value(it.value(), it.key());
            }
        }
        if (!problems.empty()) throw ConfigError(problems);
        return c;
    }

    /// Reads a file; JSON when the first non-blank character is '{'.
    static Config load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError({path + ": cannot read"});
        std::stringstream ss;
        ss << in.rdbuf();
        std::string text = ss.str();
        std::string t = detail::trim(text);
        return !t.empty() && t.front() == '{' ? parse_json(text, path) : parse_text(text, path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& raw(const std::string& key) const { return values_.at(key); }
    void set(const std::string& key, const std::string& value) {
        values_[key] = value;
        lines_[key] = "override: " + key;
    }
    std::string where(const std::string& key) const {
        auto it = lines_.find(key);
        return it == lines_.end() ? key : it->second;
    }
    const std::map<std::string, std::string>& values() const { return values_; }
    std::string scenario() const { return has("scenario") ? raw("scenario") : std::string(); }

    /// Sorted key = value listing; the basis of the configuration hash.
    std::string canonical() const {
        std::string s;
        for (const auto& [k, v] : values_) s += k + " = " + v + "\n";
        return s;
    }
    std::string hash() const { return detail::hex64(detail::fnv1a(canonical())); }

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, std::string> lines_;
};

enum class ParamKind { number, integer, numbers, text, flag };

struct Param {
    std::string key;
    ParamKind kind = ParamKind::number;
    std::string fallback;
    std::string help;
};

/// Validated view of a configuration against a scenario's schema.
class Settings {
public:
    Settings(const Config& c, const std::vector<Param>& schema) {
        std::vector<std::string> problems;
        std::map<std::string, const Param*> known;
        for (const auto& p : schema) known[p.key] = &p;
        for (const auto& [k, v] : c.values()) {
            if (k == "scenario" || k == "output.dir") continue;
            if (!known.count(k)) problems.push_back(c.where(k) + ": unknown key '" + k + "'");
        }
        for (const auto& p : schema) {
            std::string v = c.has(p.key) ? c.raw(p.key) : p.fallback;
            std::string err = check(p, v);
            if (!err.empty()) problems.push_back((c.has(p.key) ? c.where(p.key) : "default") + ": field " + p.key + ": " + err);
            values_[p.key] = v;
        }
        if (!problems.empty()) throw ConfigError(problems);
    }

    double number(const std::string& key) const {
        double v = 0.0;
        detail::parse_double(get(key), v);
        return v;
    }
    int integer(const std::string& key) const { return static_cast<int>(number(key)); }
    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        for (const auto& s : detail::split_list(get(key))) {
            double v = 0.0;
            detail::parse_double(s, v);
            out.push_back(v);
        }
        return out;
    }
    const std::string& text(const std::string& key) const { return get(key); }
    bool flag(const std::string& key) const { return get(key) == "true"; }

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [k, v] : values_) j[k] = v;
        return j;
    }

private:
    const std::string& get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw std::logic_error("settings: key not in schema: " + key);
        return it->second;
    }

    static std::string check(const Param& p, const std::string& v) {
        double d = 0.0;
        switch (p.kind) {
            case ParamKind::number:
                return detail::parse_double(v, d) ? "" : "expected a number, got '" + v + "'";
            case ParamKind::integer:
                return detail::parse_double(v, d) && d == std::floor(d) && std::abs(d) < 1e9 ? ""
                                                                                             : "expected an integer, got '" + v + "'";
            case ParamKind::numbers: {
                auto items = detail::split_list(v);
                if (items.empty()) return "expected a comma-separated list of numbers";
                for (const auto& s : items)
                    if (!detail::parse_double(s, d)) return "expected a comma-separated list of numbers, got '" + s + "'";
                return "";
            }
            case ParamKind::flag:
                return v == "true" || v == "false" ? "" : "expected true or false, got '" + v + "'";
            case ParamKind::text:
                return "";
        }
        return "";
    }

    std::map<std::string, std::string> values_;
};

}  // namespace curvlab
