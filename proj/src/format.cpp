#include "plr/format.hpp"

#include <charconv>
#include <istream>
#include <system_error>

#include "plr/errors.hpp"

namespace plr {

std::string format_full(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string format_sig(double x, int digits) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, digits);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view token) {
    double value = 0.0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw ParseError("bad floating point token: '" + std::string(token) + "'");
    return value;
}

long long parse_int(std::string_view token) {
    long long value = 0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw ParseError("bad integer token: '" + std::string(token) + "'");
    return value;
}

std::uint64_t parse_u64(std::string_view token) {
    std::uint64_t value = 0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw ParseError("bad unsigned token: '" + std::string(token) + "'");
    return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::map<std::string, std::string, std::less<>> parse_header(std::string_view line) {
    if (line.empty() || line[0] != '#')
        throw ParseError("expected '#' header line, got: '" + std::string(line) + "'");
    std::map<std::string, std::string, std::less<>> fields;
    for (std::string_view tok : split(line.substr(1), ' ')) {
        if (tok.empty()) continue;
        const std::size_t eq = tok.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("bad header token: '" + std::string(tok) + "'");
        fields.emplace(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
    }
    return fields;
}

const std::string& header_field(
    const std::map<std::string, std::string, std::less<>>& fields,
    const std::string& key) {
    auto it = fields.find(key);
    if (it == fields.end()) throw ParseError("header missing field '" + key + "'");
    return it->second;
}

std::string read_line(std::istream& in, const std::string& context) {
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("unexpected end of input while reading " + context);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

void write_dense_matrix(std::ostream& out, const Matrix& m, int generation,
                        std::string_view tag) {
    out << "# rows=" << m.rows() << " cols=" << m.cols() << " generation=" << generation
        << " tag=" << tag << "\n";
    for (int r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        for (int c = 0; c < m.cols(); ++c) {
            if (c > 0) out << ' ';
            out << format_full(row[static_cast<std::size_t>(c)]);
        }
        out << '\n';
    }
}

DenseMatrixFile read_dense_matrix(std::istream& in) {
    const auto fields = parse_header(read_line(in, "matrix header"));
    const long long rows = parse_int(header_field(fields, "rows"));
    const long long cols = parse_int(header_field(fields, "cols"));
    if (rows < 0 || cols < 0) throw ParseError("matrix header: negative shape");
    DenseMatrixFile file;
    file.generation = static_cast<int>(parse_int(header_field(fields, "generation")));
    file.tag = header_field(fields, "tag");
    file.values = Matrix(static_cast<int>(rows), static_cast<int>(cols), 0.0);
    for (long long r = 0; r < rows; ++r) {
        const std::string line = read_line(in, "matrix row " + std::to_string(r));
        const auto toks = split(line, ' ');
        if (toks.size() != static_cast<std::size_t>(cols))
            throw ParseError("matrix row " + std::to_string(r) + ": expected " +
                             std::to_string(cols) + " values, got " +
                             std::to_string(toks.size()));
        for (long long c = 0; c < cols; ++c)
            file.values.at(static_cast<int>(r), static_cast<int>(c)) =
                parse_double(toks[static_cast<std::size_t>(c)]);
    }
    return file;
}

}  // namespace plr
