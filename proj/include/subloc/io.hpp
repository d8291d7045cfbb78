#pragma once

// Serialization: JSON for signals, noise specs, results and clique sidecars;
// CSV and a little-endian binary format for matrices.

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "json.hpp"
#include "subloc/errors.hpp"
#include "subloc/model.hpp"
#include "subloc/reduction.hpp"

namespace subloc {

using json = nlohmann::json;

/// Shortest decimal that round-trips, '.' as separator, locale independent.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw validation_error("not a number: '" + std::string(s) + "'");
    return v;
}

// ---------------------------------------------------------------- JSON

inline json to_json(const PlantedSignal& s) {
    json blocks = json::array();
    for (const auto& b : s.blocks) blocks.push_back({{"rows", b.rows}, {"cols", b.cols}, {"lambda", b.lambda}});
    return {{"m", s.m}, {"n", s.n}, {"blocks", blocks}};
}

inline json to_json(const NoiseSpec& n) { return {{"family", to_string(n.family)}, {"sigma", n.sigma}}; }

inline json to_json(const LocalizationResult& r) {
    json blocks = json::array();
    for (const auto& b : r.blocks) blocks.push_back({{"rows", b.rows}, {"cols", b.cols}});
    json diag = json::object();
    for (const auto& [k, v] : r.diagnostics) diag[k] = v;
    return {{"blocks", blocks}, {"diagnostics", diag}};
}

namespace detail {

template <class T>
T require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw validation_error(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw validation_error(std::string("bad field '") + key + "': " + e.what());
    }
}

}  // namespace detail

/// Parses and validates; throws validation_error on malformed input.
inline PlantedSignal signal_from_json(const json& j) {
    PlantedSignal s;
    s.m = detail::require<index_t>(j, "m");
    s.n = detail::require<index_t>(j, "n");
    const json blocks = detail::require<json>(j, "blocks");
    if (!blocks.is_array()) throw validation_error("'blocks' must be an array");
    for (const auto& b : blocks)
        s.blocks.push_back({detail::require<IndexSet>(b, "rows"), detail::require<IndexSet>(b, "cols"),
                            detail::require<double>(b, "lambda")});
    s.validate();
    return s;
}

inline NoiseSpec noise_from_json(const json& j) {
    NoiseSpec n;
    n.family = noise_family_from_string(detail::require<std::string>(j, "family"));
    n.sigma = detail::require<double>(j, "sigma");
    if (!(n.sigma >= 0.0)) throw validation_error("sigma must be >= 0");
    return n;
}

inline LocalizationResult result_from_json(const json& j) {
    LocalizationResult r;
    const json blocks = detail::require<json>(j, "blocks");
    if (!blocks.is_array()) throw validation_error("'blocks' must be an array");
    for (const auto& b : blocks) r.blocks.push_back({detail::require<IndexSet>(b, "rows"), detail::require<IndexSet>(b, "cols")});
    if (j.contains("diagnostics")) {
        for (const auto& [k, v] : j.at("diagnostics").items()) r.diagnostics[k] = v.is_number() ? v.get<double>() : std::nan("");
    }
    return r;
}

inline json clique_sidecar(const CliqueInstance& g) {
    return {{"N", g.N}, {"kappa", g.kappa}, {"mode", to_string(g.mode)}, {"clique", g.clique}};
}

// ---------------------------------------------------------------- CSV

inline void write_csv(std::ostream& os, const Matrix& x) {
    std::string line;
    for (index_t i = 0; i < x.rows(); ++i) {
        line.clear();
        for (index_t j = 0; j < x.cols(); ++j) {
            if (j) line += ',';
            line += format_double(x(i, j));
        }
        line += '\n';
        os << line;
    }
}

inline Matrix read_csv(std::istream& is) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            row.push_back(parse_double(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw validation_error("CSV row " + std::to_string(rows.size() + 1) + " has " + std::to_string(row.size()) +
                                   " fields, expected " + std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw validation_error("CSV matrix is empty");
    Matrix x(static_cast<index_t>(rows.size()), static_cast<index_t>(rows.front().size()));
    for (index_t i = 0; i < x.rows(); ++i)
        for (index_t j = 0; j < x.cols(); ++j) x(i, j) = rows[i][j];
    return x;
}

// ---------------------------------------------------------------- binary

namespace detail {

inline void put_le64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b.data(), 8);
}

inline std::uint64_t get_le64(std::istream& is) {
    std::array<unsigned char, 8> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw validation_error("binary matrix truncated");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

}  // namespace detail

/// u64 m, u64 n, then m*n float64 values row-major, all little-endian.
inline void write_binary(std::ostream& os, const Matrix& x) {
    detail::put_le64(os, static_cast<std::uint64_t>(x.rows()));
    detail::put_le64(os, static_cast<std::uint64_t>(x.cols()));
    for (index_t i = 0; i < x.rows(); ++i)
        for (index_t j = 0; j < x.cols(); ++j) detail::put_le64(os, std::bit_cast<std::uint64_t>(x(i, j)));
}

inline Matrix read_binary(std::istream& is) {
    const std::uint64_t m = detail::get_le64(is);
    const std::uint64_t n = detail::get_le64(is);
    if (m > (std::uint64_t{1} << 31) || n > (std::uint64_t{1} << 31)) throw validation_error("binary matrix dimensions too large");
    Matrix x(static_cast<index_t>(m), static_cast<index_t>(n));
    for (index_t i = 0; i < x.rows(); ++i)
        for (index_t j = 0; j < x.cols(); ++j) x(i, j) = std::bit_cast<double>(detail::get_le64(is));
    return x;
}

// ---------------------------------------------------------------- files

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json read_json_file(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw validation_error("invalid JSON in '" + path + "': " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

/// Reads a matrix from .bin (binary format) or anything else as CSV.
inline Matrix read_matrix_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open '" + path + "'");
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0) return read_binary(in);
    return read_csv(in);
}

inline void write_matrix_file(const std::string& path, const Matrix& x) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0) write_binary(out, x);
    else write_csv(out, x);
}

}  // namespace subloc
