#include "csv.hpp"

#include <fstream>
#include <sstream>

namespace folddyn::app {

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header_block,
                     const std::vector<std::string>& columns) {
    f_ = std::fopen(path.c_str(), "wb");
    if (!f_) throw Error("cannot open output file: " + path);
    for (const std::string& line : header_block) std::fprintf(f_, "# %s\n", line.c_str());
    for (std::size_t i = 0; i < columns.size(); ++i)
        std::fprintf(f_, "%s%s", columns[i].c_str(), i + 1 < columns.size() ? "," : "\n");
}

CsvWriter::~CsvWriter() {
    if (f_) std::fclose(f_);
}

std::string CsvWriter::format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void CsvWriter::row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i)
        std::fprintf(f_, "%s%s", format(values[i]).c_str(), i + 1 < values.size() ? "," : "\n");
}

void CsvWriter::row_raw(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
        std::fprintf(f_, "%s%s", cells[i].c_str(), i + 1 < cells.size() ? "," : "\n");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << content;
}

} // namespace folddyn::app
