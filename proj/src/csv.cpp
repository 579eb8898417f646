#include "rtgp/csv.hpp"

#include "rtgp/error.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace rtgp {

void write_file_atomic(const std::string& path, const std::string& contents)
{
    const std::string tmp = path + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw FormatError(FormatError::Code::io, "cannot write " + tmp);
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw FormatError(FormatError::Code::io, "write failed for " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw FormatError(FormatError::Code::io, "cannot rename onto " + path);
    }
}

std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size())
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        text_ += (i ? "," : "") + header[i];
    }
    text_ += '\n';
}

CsvWriter& CsvWriter::add(const std::string& field)
{
    if (fields_in_row_ > 0) {
        text_ += ',';
    }
    text_ += field;
    ++fields_in_row_;
    return *this;
}

CsvWriter& CsvWriter::add(double v)
{
    return add(format_double(v));
}

CsvWriter& CsvWriter::add(long v)
{
    return add(std::to_string(v));
}

void CsvWriter::end_row()
{
    if (fields_in_row_ != columns_) {
        throw StructuralError("csv row has " + std::to_string(fields_in_row_) + " fields, header has " +
                              std::to_string(columns_));
    }
    text_ += '\n';
    fields_in_row_ = 0;
    ++rows_;
}

int CsvTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

namespace {

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

}  // namespace

CsvTable read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError(FormatError::Code::io, "cannot open " + path);
    }
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError(FormatError::Code::truncated, path + " is empty");
    }
    t.header = split(line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto row = split(line);
        if (row.size() != t.header.size()) {
            throw FormatError(FormatError::Code::dimension_mismatch, path + ": ragged row");
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace rtgp
