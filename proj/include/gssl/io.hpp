#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "gssl/errors.hpp"

namespace gssl {

/// Fixed-format double rendering (12 significant digits) so that reruns
/// of a command are byte-identical.
std::string format_double(double v);

std::uint64_t fnv1a_hash(const std::string& text);

/// Minimal CSV emitter: '#' comment lines, one header, then rows.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);

    void comment(const std::string& text);
    void header(const std::vector<std::string>& columns);

    class Row {
    public:
        explicit Row(CsvWriter& w) : writer_(w) {}
        Row& add(double v);
        Row& add(std::int64_t v);
        Row& add(const std::string& v);
        ~Row();

    private:
        CsvWriter& writer_;
        std::vector<std::string> cells_;
        friend class CsvWriter;
    };

    Row row() { return Row(*this); }

private:
    void write_line(const std::string& line);
    std::ofstream out_;
    std::string path_;
    friend class Row;
};

} // namespace gssl
