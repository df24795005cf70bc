#pragma once
#include <cstdio>
#include <string>
#include <vector>

#include "folddyn/errors.hpp"

namespace folddyn::app {

// RFC-4180-style CSV with '.' decimal separator and LF line endings, plus a
// '#'-prefixed header block carrying the scenario hash, tolerance set and
// artifact version. Reruns with equal inputs produce byte-identical files.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header_block,
              const std::vector<std::string>& columns);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(const std::vector<double>& values);
    // Mixed row: raw cells are written verbatim (already escaped by caller).
    void row_raw(const std::vector<std::string>& cells);

    static std::string format(double v);

private:
    std::FILE* f_ = nullptr;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

} // namespace folddyn::app
