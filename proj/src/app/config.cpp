#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace folddyn::app {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        return s.substr(1, s.size() - 2);
    return s;
}

} // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    std::istringstream in(text);
    std::string line, table;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": malformed table header");
            table = trim(s.substr(1, s.size() - 2));
            if (table.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty table name");
            if (!cfg.tables_.count(table)) cfg.table_order_.push_back(table);
            cfg.tables_[table];
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        auto& tab = cfg.tables_[table];
        if (tab.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                              key + "'");
        tab[key] = value;
    }
    return cfg;
}

const std::string* Config::find(const std::string& table, const std::string& key) const {
    const auto t = tables_.find(table);
    if (t == tables_.end()) return nullptr;
    const auto k = t->second.find(key);
    if (k == t->second.end()) return nullptr;
    consumed_.insert(table + "\x1f" + key);
    return &k->second;
}

bool Config::has(const std::string& table, const std::string& key) const {
    return find(table, key) != nullptr;
}

bool Config::has_table(const std::string& table) const { return tables_.count(table) > 0; }

std::string Config::get_string(const std::string& table, const std::string& key,
                               const std::string& fallback) const {
    const std::string* v = find(table, key);
    return v ? unquote(*v) : fallback;
}

double Config::get_double(const std::string& table, const std::string& key,
                          double fallback) const {
    const std::string* v = find(table, key);
    if (!v) return fallback;
    char* end = nullptr;
    const double d = std::strtod(v->c_str(), &end);
    if (end == v->c_str() || *end != '\0')
        throw ConfigError("config value [" + table + "]." + key + " is not a number: " + *v);
    return d;
}

long Config::get_int(const std::string& table, const std::string& key, long fallback) const {
    const std::string* v = find(table, key);
    if (!v) return fallback;
    char* end = nullptr;
    const long n = std::strtol(v->c_str(), &end, 10);
    if (end == v->c_str() || *end != '\0')
        throw ConfigError("config value [" + table + "]." + key + " is not an integer: " + *v);
    return n;
}

bool Config::get_bool(const std::string& table, const std::string& key, bool fallback) const {
    const std::string* v = find(table, key);
    if (!v) return fallback;
    if (*v == "true") return true;
    if (*v == "false") return false;
    throw ConfigError("config value [" + table + "]." + key + " is not true/false: " + *v);
}

std::vector<double> Config::get_double_list(const std::string& table, const std::string& key,
                                            const std::vector<double>& fallback) const {
    const std::string* v = find(table, key);
    if (!v) return fallback;
    std::vector<double> out;
    std::istringstream in(*v);
    std::string item;
    while (std::getline(in, item, ',')) {
        const std::string t = trim(item);
        if (t.empty())
            throw ConfigError("config value [" + table + "]." + key + " has an empty element");
        char* end = nullptr;
        const double d = std::strtod(t.c_str(), &end);
        if (end == t.c_str() || *end != '\0')
            throw ConfigError("config value [" + table + "]." + key +
                              " has a non-numeric element: " + t);
        out.push_back(d);
    }
    return out;
}

std::vector<std::string> Config::tables_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    const std::string p = prefix + ".";
    for (const std::string& t : table_order_)
        if (t.rfind(p, 0) == 0) out.push_back(t);
    return out;
}

std::vector<std::string> Config::unconsumed_keys() const {
    std::vector<std::string> out;
    for (const auto& [table, kv] : tables_) {
        for (const auto& [key, value] : kv) {
            if (!consumed_.count(table + "\x1f" + key))
                out.push_back(table.empty() ? key : "[" + table + "]." + key);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace folddyn::app
