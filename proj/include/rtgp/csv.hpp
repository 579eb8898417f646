#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace rtgp {

/// Writes `contents` to `path` through a sibling temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& contents);

/// Round-trip decimal form of a double ("%.17g"); "nan" for NaN.
std::string format_double(double v);

/// Minimal CSV builder; fields are not quoted.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    CsvWriter& add(const std::string& field);
    CsvWriter& add(double v);
    CsvWriter& add(long v);
    CsvWriter& add(int v) { return add(static_cast<long>(v)); }
    void end_row();

    const std::string& str() const { return text_; }
    std::size_t rows() const { return rows_; }
    void save(const std::string& path) const { write_file_atomic(path, text_); }

private:
    std::string text_;
    std::size_t columns_;
    std::size_t fields_in_row_ = 0;
    std::size_t rows_ = 0;
};

/// Parses a CSV with a header row into string cells. Throws FormatError on ragged rows.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace rtgp
