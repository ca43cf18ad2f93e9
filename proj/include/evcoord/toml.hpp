#pragma once

// Minimal TOML subset reader, enough for flat run configs: [section] headers,
// key = value pairs, '#' comments, and values of type integer, float, bool,
// quoted string, or a one-level array of those. Keys are exposed flattened as
// "section.key".

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace evcoord {

class Toml {
public:
    struct Value {
        enum class Kind { integer, real, boolean, text, array } kind = Kind::text;
        long long i = 0;
        double f = 0;
        bool b = false;
        std::string s;
        std::vector<Value> items;
    };

    static Toml parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("toml: cannot open " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }

    static Toml parse(const std::string& text) {
        Toml t;
        std::istringstream in(text);
        std::string line, section;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            std::string s = strip(line);
            if (s.empty() || s[0] == '#') continue;
            if (s.front() == '[') {
                if (s.back() != ']') throw std::runtime_error("toml: bad section at line " + std::to_string(line_no));
                section = strip(s.substr(1, s.size() - 2));
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("toml: expected key = value at line " + std::to_string(line_no));
            const std::string key = strip(s.substr(0, eq));
            const std::string raw = strip(strip_comment(s.substr(eq + 1)));
            if (key.empty() || raw.empty())
                throw std::runtime_error("toml: empty key or value at line " + std::to_string(line_no));
            t.values_[section.empty() ? key : section + "." + key] = parse_value(raw, line_no);
        }
        return t;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    long long get_int(const std::string& key) const {
        const Value& v = at(key);
        if (v.kind != Value::Kind::integer) throw std::runtime_error("toml: " + key + " is not an integer");
        return v.i;
    }
    long long get_int(const std::string& key, long long fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    double get_double(const std::string& key) const {
        const Value& v = at(key);
        if (v.kind == Value::Kind::integer) return static_cast<double>(v.i);
        if (v.kind != Value::Kind::real) throw std::runtime_error("toml: " + key + " is not a number");
        return v.f;
    }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    bool get_bool(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const Value& v = at(key);
        if (v.kind != Value::Kind::boolean) throw std::runtime_error("toml: " + key + " is not a bool");
        return v.b;
    }

    std::string get_string(const std::string& key) const {
        const Value& v = at(key);
        if (v.kind != Value::Kind::text) throw std::runtime_error("toml: " + key + " is not a string");
        return v.s;
    }
    std::string get_string(const std::string& key, const std::string& fallback) const {
        return has(key) ? get_string(key) : fallback;
    }

    std::vector<long long> get_int_array(const std::string& key) const {
        const Value& v = at(key);
        if (v.kind != Value::Kind::array) throw std::runtime_error("toml: " + key + " is not an array");
        std::vector<long long> out;
        for (const Value& item : v.items) {
            if (item.kind != Value::Kind::integer)
                throw std::runtime_error("toml: " + key + " has a non-integer element");
            out.push_back(item.i);
        }
        return out;
    }
    std::vector<long long> get_int_array(const std::string& key, std::vector<long long> fallback) const {
        return has(key) ? get_int_array(key) : std::move(fallback);
    }

    std::vector<double> get_double_array(const std::string& key) const {
        const Value& v = at(key);
        if (v.kind != Value::Kind::array) throw std::runtime_error("toml: " + key + " is not an array");
        std::vector<double> out;
        for (const Value& item : v.items) {
            if (item.kind == Value::Kind::integer) out.push_back(static_cast<double>(item.i));
            else if (item.kind == Value::Kind::real) out.push_back(item.f);
            else throw std::runtime_error("toml: " + key + " has a non-numeric element");
        }
        return out;
    }
    std::vector<double> get_double_array(const std::string& key, std::vector<double> fallback) const {
        return has(key) ? get_double_array(key) : std::move(fallback);
    }

    /// Canonical "key=value" dump, sorted by key; used for config hashing.
    std::string canonical() const {
        std::ostringstream out;
        for (const auto& [key, value] : values_) out << key << '=' << to_text(value) << '\n';
        return out.str();
    }

private:
    static std::string strip(const std::string& s) {
        size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    static std::string strip_comment(const std::string& s) {
        bool in_string = false;
        for (size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') in_string = !in_string;
            if (s[i] == '#' && !in_string) return s.substr(0, i);
        }
        return s;
    }

    static Value parse_value(const std::string& raw, int line_no) {
        Value v;
        if (raw.front() == '[') {
            if (raw.back() != ']') throw std::runtime_error("toml: bad array at line " + std::to_string(line_no));
            v.kind = Value::Kind::array;
            std::string body = raw.substr(1, raw.size() - 2);
            std::string item;
            bool in_string = false;
            for (char ch : body) {
                if (ch == '"') in_string = !in_string;
                if (ch == ',' && !in_string) {
                    if (!strip(item).empty()) v.items.push_back(parse_value(strip(item), line_no));
                    item.clear();
                } else {
                    item += ch;
                }
            }
            if (!strip(item).empty()) v.items.push_back(parse_value(strip(item), line_no));
            return v;
        }
        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"')
                throw std::runtime_error("toml: bad string at line " + std::to_string(line_no));
            v.kind = Value::Kind::text;
            v.s = raw.substr(1, raw.size() - 2);
            return v;
        }
        if (raw == "true" || raw == "false") {
            v.kind = Value::Kind::boolean;
            v.b = (raw == "true");
            return v;
        }
        if (raw.find('.') == std::string::npos && raw.find('e') == std::string::npos &&
            raw.find('E') == std::string::npos) {
            try {
                size_t used = 0;
                v.i = std::stoll(raw, &used);
                if (used == raw.size()) {
                    v.kind = Value::Kind::integer;
                    return v;
                }
            } catch (const std::exception&) {}
        }
        try {
            size_t used = 0;
            v.f = std::stod(raw, &used);
            if (used != raw.size()) throw std::runtime_error("trailing");
            v.kind = Value::Kind::real;
            return v;
        } catch (const std::exception&) {
            throw std::runtime_error("toml: cannot parse value '" + raw + "' at line " +
                                     std::to_string(line_no));
        }
    }

    static std::string to_text(const Value& v) {
        switch (v.kind) {
            case Value::Kind::integer: return std::to_string(v.i);
            case Value::Kind::real: {
                char buf[40];
                std::snprintf(buf, sizeof(buf), "%.17g", v.f);
                return buf;
            }
            case Value::Kind::boolean: return v.b ? "true" : "false";
            case Value::Kind::text: return '"' + v.s + '"';
            case Value::Kind::array: {
                std::string out = "[";
                for (size_t i = 0; i < v.items.size(); ++i) {
                    if (i) out += ",";
                    out += to_text(v.items[i]);
                }
                return out + "]";
            }
        }
        return {};
    }

    const Value& at(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw std::runtime_error("toml: missing key " + key);
        return it->second;
    }

    std::map<std::string, Value> values_;
};

}  // namespace evcoord
