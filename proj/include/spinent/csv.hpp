#pragma once

#include <initializer_list>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace spinent::csv {

/// Shortest form that round-trips: 17 significant digits, '.' decimal point.
std::string format_real(double v);

class Writer {
 public:
  Writer(std::ostream& out, std::initializer_list<std::string_view> header);

  Writer& cell(double v);
  Writer& cell(long long v);
  Writer& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
  Writer& cell(std::string_view v);
  void end_row();

 private:
  void separator();

  std::ostream& out_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

}  // namespace spinent::csv
