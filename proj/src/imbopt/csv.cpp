#include "imbopt/csv.hpp"

#include <charconv>
#include <cmath>

namespace imbopt::csv {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void Writer::sep() {
    if (row_started_) os_ << ',';
    row_started_ = true;
}

Writer& Writer::field(const std::string& s) {
    sep();
    os_ << s;
    return *this;
}

Writer& Writer::field(double v) { return field(format_double(v)); }

Writer& Writer::field(std::uint64_t v) {
    sep();
    os_ << v;
    return *this;
}

Writer& Writer::field(std::int64_t v) {
    sep();
    os_ << v;
    return *this;
}

void Writer::end_row() {
    os_ << '\n';
    row_started_ = false;
}

void Writer::row(const std::vector<std::string>& fields) {
    for (const auto& f : fields) field(f);
    end_row();
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.emplace_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

}  // namespace imbopt::csv
