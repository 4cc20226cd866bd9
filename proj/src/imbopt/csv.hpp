#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace imbopt::csv {

/// Shortest round-trip decimal form, locale-independent ('.' decimal point).
std::string format_double(double v);

/// Comma-separated writer with LF endings; field formatting is deterministic
/// so reruns with the same seed produce byte-identical files.
class Writer {
public:
    explicit Writer(std::ostream& os) : os_(os) {}

    void row(const std::vector<std::string>& fields);

    Writer& field(const std::string& s);
    Writer& field(double v);
    Writer& field(std::uint64_t v);
    Writer& field(std::int64_t v);
    void end_row();

private:
    std::ostream& os_;
    bool row_started_ = false;
    void sep();
};

std::vector<std::string> split_line(const std::string& line);

}  // namespace imbopt::csv
