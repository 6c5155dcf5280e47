#include "spinent/csv.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace spinent::csv {

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

Writer::Writer(std::ostream& out,
               std::initializer_list<std::string_view> header)
    : out_(out), columns_(header.size()) {
  bool first = true;
  for (auto h : header) {
    if (!first) out_ << ',';
    out_ << h;
    first = false;
  }
  out_ << '\n';
}

void Writer::separator() {
  if (filled_ == columns_) {
    throw std::logic_error("csv::Writer: too many cells in row");
  }
  if (filled_ > 0) out_ << ',';
  ++filled_;
}

Writer& Writer::cell(double v) {
  separator();
  out_ << format_real(v);
  return *this;
}

Writer& Writer::cell(long long v) {
  separator();
  out_ << v;
  return *this;
}

Writer& Writer::cell(std::string_view v) {
  separator();
  out_ << v;
  return *this;
}

void Writer::end_row() {
  if (filled_ != columns_) {
    throw std::logic_error("csv::Writer: incomplete row");
  }
  out_ << '\n';
  filled_ = 0;
}

}  // namespace spinent::csv
