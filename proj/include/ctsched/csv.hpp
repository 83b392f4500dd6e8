#pragma once

#include <ostream>
#include <string>
#include <string_view>

namespace ctsched {

/// Fixed-format double for CSV output: 12 significant digits, so reruns
/// with the same seed produce byte-identical files. NaN renders empty.
std::string csv_number(double value);

/// Minimal comma-separated writer; fields are written as passed.
class CsvWriter {
  public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    template <class... Fields>
    void row(const Fields&... fields) {
        bool first = true;
        ((write_field(first, fields), first = false), ...);
        out_ << '\n';
    }

  private:
    void write_field(bool first, double value) {
        if (!first) out_ << ',';
        out_ << csv_number(value);
    }
    void write_field(bool first, int value) {
        if (!first) out_ << ',';
        out_ << value;
    }
    void write_field(bool first, std::string_view value) {
        if (!first) out_ << ',';
        out_ << value;
    }
    void write_field(bool first, const char* value) {
        write_field(first, std::string_view(value));
    }
    void write_field(bool first, const std::string& value) {
        write_field(first, std::string_view(value));
    }

    std::ostream& out_;
};

}  // namespace ctsched
