#pragma once
#include <map>
#include <set>
#include <string>
#include <vector>

#include "folddyn/errors.hpp"

namespace folddyn::app {

struct ConfigError : Error {
    using Error::Error;
};

// Declarative key/value configuration with nested tables:
//
//   # comment
//   [run]
//   t_max = 30.0
//   [scenario.sweep1]
//   lambda = 2.5
//
// Values are bare or double-quoted strings, numbers, booleans, or
// comma-separated lists. Every read is tracked so that unknown keys can be
// rejected after a scenario is assembled.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& table, const std::string& key) const;
    bool has_table(const std::string& table) const;

    std::string get_string(const std::string& table, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& table, const std::string& key, double fallback) const;
    long get_int(const std::string& table, const std::string& key, long fallback) const;
    bool get_bool(const std::string& table, const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& table, const std::string& key,
                                        const std::vector<double>& fallback) const;

    // Table names matching "prefix.<name>", in file order.
    std::vector<std::string> tables_with_prefix(const std::string& prefix) const;

    // Keys never consumed by any getter; a non-empty result means the file
    // contains entries the scenario schema does not know about.
    std::vector<std::string> unconsumed_keys() const;

private:
    const std::string* find(const std::string& table, const std::string& key) const;

    std::map<std::string, std::map<std::string, std::string>> tables_;
    std::vector<std::string> table_order_;
    mutable std::set<std::string> consumed_;
};

} // namespace folddyn::app
