#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace plr {

// Shortest decimal form that round-trips to the same double (<= 17
// significant digits). Used by matrix-style files so that write/read/write
// is byte-stable.
std::string format_full(double x);

// Fixed significant digits (general format). CSV output uses 9.
std::string format_sig(double x, int digits);

double parse_double(std::string_view token);          // throws ParseError
long long parse_int(std::string_view token);          // throws ParseError
std::uint64_t parse_u64(std::string_view token);      // throws ParseError

std::vector<std::string_view> split(std::string_view line, char sep);

// Parses a "# key=value key=value ..." header line into a map; throws
// ParseError when the line does not start with '#' or a token has no '='.
std::map<std::string, std::string, std::less<>> parse_header(std::string_view line);

// Header field lookup helpers; throw ParseError naming the missing key.
const std::string& header_field(
    const std::map<std::string, std::string, std::less<>>& fields,
    const std::string& key);

// Reads one line, failing with ParseError(context) at EOF.
std::string read_line(std::istream& in, const std::string& context);

}  // namespace plr

#include "plr/matrix.hpp"

namespace plr {

// Dense matrix file shared by prototype banks and embedding sets:
// "# rows=<R> cols=<C> generation=<t> tag=<tag>" then one line per row of
// space-separated shortest-round-trip decimal values.
struct DenseMatrixFile {
    Matrix values;
    int generation = 0;
    std::string tag;
};

void write_dense_matrix(std::ostream& out, const Matrix& m, int generation,
                        std::string_view tag);
DenseMatrixFile read_dense_matrix(std::istream& in);

}  // namespace plr
