#include "gssl/io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace gssl {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::uint64_t fnv1a_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path), path_(path) {
    if (!out_) throw input_error("cannot open output file: " + path);
}

void CsvWriter::write_line(const std::string& line) {
    out_ << line << '\n';
    if (!out_) throw input_error("write failed: " + path_);
}

void CsvWriter::comment(const std::string& text) { write_line("# " + text); }

void CsvWriter::header(const std::vector<std::string>& columns) {
    std::ostringstream line;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) line << ',';
        line << columns[i];
    }
    write_line(line.str());
}

CsvWriter::Row& CsvWriter::Row::add(double v) {
    cells_.push_back(format_double(v));
    return *this;
}

CsvWriter::Row& CsvWriter::Row::add(std::int64_t v) {
    cells_.push_back(std::to_string(v));
    return *this;
}

CsvWriter::Row& CsvWriter::Row::add(const std::string& v) {
    cells_.push_back(v);
    return *this;
}

CsvWriter::Row::~Row() {
    std::ostringstream line;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        if (i) line << ',';
        line << cells_[i];
    }
    writer_.write_line(line.str());
}

} // namespace gssl
