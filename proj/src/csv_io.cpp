#include "remkit/csv_io.hpp"

#include "remkit/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string_view>

namespace remkit {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line, const char* name) {
    T value{};
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && field.front() == '+')
        ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc{} || ptr != last)
        throw ParseError(line, std::string("invalid ") + name + " '" + std::string(field) + "'");
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value))
            throw ParseError(line, std::string("non-finite ") + name);
    }
    return value;
}

struct Row {
    std::size_t line;
    std::vector<std::string_view> fields;
};

// Checks the header, then calls fn for each non-blank data row.
template <typename Fn>
void for_each_row(std::istream& in, std::string_view header, std::size_t n_fields, Fn&& fn) {
    std::string text;
    std::size_t line = 0;
    bool seen_header = false;
    while (std::getline(in, text)) {
        ++line;
        const std::string_view t = trim(text);
        if (t.empty())
            continue;
        if (!seen_header) {
            std::string_view h = t;
            if (h.size() >= 3 && h.substr(0, 3) == "\xEF\xBB\xBF")
                h.remove_prefix(3);
            std::string compact;
            for (auto f : split(h)) {
                if (!compact.empty())
                    compact += ',';
                compact += f;
            }
            if (compact != header)
                throw ParseError(line, "expected header '" + std::string(header) + "'");
            seen_header = true;
            continue;
        }
        auto fields = split(t);
        if (fields.size() != n_fields)
            throw ParseError(line, "expected " + std::to_string(n_fields) + " fields, got " +
                                       std::to_string(fields.size()));
        fn(Row{line, std::move(fields)});
    }
    if (!seen_header)
        throw ParseError(line == 0 ? 1 : line, "missing header '" + std::string(header) + "'");
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open '" + path.string() + "'");
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    return out;
}

struct GridTable {
    std::vector<double> az, el;
    std::map<std::pair<double, double>, std::vector<double>> cells;
};

GridTable collect_grid(std::istream& in, std::string_view header, std::size_t n_values) {
    GridTable t;
    std::vector<double> az, el;
    std::size_t last_line = 0;
    for_each_row(in, header, 2 + n_values, [&](const Row& r) {
        last_line = r.line;
        const double a = parse_field<double>(r.fields[0], r.line, "az_deg");
        const double e = parse_field<double>(r.fields[1], r.line, "el_deg");
        if (e < -90.0 || e > 90.0)
            throw RangeError("line " + std::to_string(r.line) + ": elevation outside [-90, 90]");
        std::vector<double> vals;
        for (std::size_t k = 0; k < n_values; ++k)
            vals.push_back(parse_field<double>(r.fields[2 + k], r.line, "value"));
        if (!t.cells.emplace(std::pair{a, e}, std::move(vals)).second)
            throw ParseError(r.line, "duplicate grid node");
        az.push_back(a);
        el.push_back(e);
    });
    if (t.cells.empty())
        throw ValidationError("grid table has no rows");
    std::sort(az.begin(), az.end());
    az.erase(std::unique(az.begin(), az.end()), az.end());
    std::sort(el.begin(), el.end());
    el.erase(std::unique(el.begin(), el.end()), el.end());
    if (az.size() * el.size() != t.cells.size())
        throw ParseError(last_line, "grid has gaps: " + std::to_string(t.cells.size()) + " rows for " +
                                        std::to_string(az.size()) + " x " + std::to_string(el.size()) + " nodes");
    t.az = std::move(az);
    t.el = std::move(el);
    return t;
}

} // namespace

std::string format_number(double x) { return fmt::format("{}", x); }

std::vector<Measurement> read_measurements(std::istream& in) {
    std::vector<Measurement> rows;
    for_each_row(in, kMeasurementHeader, 5, [&](const Row& r) {
        Measurement m;
        m.seq = parse_field<std::int64_t>(r.fields[0], r.line, "seq");
        m.location.lat = parse_field<double>(r.fields[1], r.line, "lat_deg");
        m.location.lon = parse_field<double>(r.fields[2], r.line, "lon_deg");
        m.location.alt = parse_field<double>(r.fields[3], r.line, "alt_m");
        m.rsrp_dbm = parse_field<double>(r.fields[4], r.line, "rsrp_dbm");
        try {
            validate(m.location);
        } catch (const RangeError& e) {
            throw RangeError("line " + std::to_string(r.line) + ": " + e.what());
        }
        rows.push_back(m);
    });
    return rows;
}

std::vector<Measurement> read_measurements(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_measurements(in);
}

void write_measurements(std::ostream& out, std::span<const Measurement> rows) {
    out << kMeasurementHeader << '\n';
    for (const auto& m : rows)
        out << m.seq << ',' << format_number(m.location.lat) << ',' << format_number(m.location.lon) << ','
            << format_number(m.location.alt) << ',' << format_number(m.rsrp_dbm) << '\n';
}

void write_measurements(const std::filesystem::path& path, std::span<const Measurement> rows) {
    auto out = open_out(path);
    write_measurements(out, rows);
}

AntennaPattern read_pattern(std::istream& in) {
    const GridTable t = collect_grid(in, kPatternHeader, 1);
    AntennaPattern p;
    p.az_grid = t.az;
    p.el_grid = t.el;
    p.gain.resize(static_cast<Eigen::Index>(t.az.size()), static_cast<Eigen::Index>(t.el.size()));
    for (std::size_t i = 0; i < t.az.size(); ++i)
        for (std::size_t j = 0; j < t.el.size(); ++j)
            p.gain(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.cells.at({t.az[i], t.el[j]})[0];
    p.label = "file";
    p.validate();
    return p;
}

AntennaPattern read_pattern(const std::filesystem::path& path) {
    auto in = open_in(path);
    auto p = read_pattern(in);
    p.label = path.filename().string();
    return p;
}

void write_pattern(std::ostream& out, const AntennaPattern& pattern) {
    out << kPatternHeader << '\n';
    for (std::size_t i = 0; i < pattern.az_grid.size(); ++i)
        for (std::size_t j = 0; j < pattern.el_grid.size(); ++j)
            out << format_number(pattern.az_grid[i]) << ',' << format_number(pattern.el_grid[j]) << ','
                << format_number(pattern.gain(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';
}

CalibratedDelta read_delta(std::istream& in, int min_support) {
    const GridTable t = collect_grid(in, kDeltaHeader, 2);
    if (t.el.size() < 2)
        throw ValidationError("delta table needs at least two elevation bins");
    const double bin = t.el[1] - t.el[0];
    CalibratedDelta d = CalibratedDelta::zeros(bin);
    d.min_support = min_support;
    constexpr double kTol = 1e-9;
    auto same = [&](const std::vector<double>& a, const std::vector<double>& b) {
        return a.size() == b.size() &&
               std::equal(a.begin(), a.end(), b.begin(), [&](double x, double y) { return std::abs(x - y) <= kTol; });
    };
    if (!same(t.az, d.az_grid) || !same(t.el, d.el_grid))
        throw ValidationError("delta table bins do not form a full " + format_number(bin) + " degree layout");
    for (std::size_t i = 0; i < t.az.size(); ++i)
        for (std::size_t j = 0; j < t.el.size(); ++j) {
            const auto& v = t.cells.at({t.az[i], t.el[j]});
            const auto ii = static_cast<Eigen::Index>(i);
            const auto jj = static_cast<Eigen::Index>(j);
            d.delta_db(ii, jj) = v[0];
            if (v[1] < 0.0 || v[1] != std::floor(v[1]))
                throw ValidationError("support must be a non-negative integer");
            d.support(ii, jj) = static_cast<int>(v[1]);
        }
    return d;
}

CalibratedDelta read_delta(const std::filesystem::path& path, int min_support) {
    auto in = open_in(path);
    return read_delta(in, min_support);
}

void write_delta(std::ostream& out, const CalibratedDelta& delta) {
    out << kDeltaHeader << '\n';
    for (std::size_t i = 0; i < delta.az_grid.size(); ++i)
        for (std::size_t j = 0; j < delta.el_grid.size(); ++j) {
            const auto ii = static_cast<Eigen::Index>(i);
            const auto jj = static_cast<Eigen::Index>(j);
            out << format_number(delta.az_grid[i]) << ',' << format_number(delta.el_grid[j]) << ','
                << format_number(delta.delta_db(ii, jj)) << ',' << delta.support(ii, jj) << '\n';
        }
}

void write_delta(const std::filesystem::path& path, const CalibratedDelta& delta) {
    auto out = open_out(path);
    write_delta(out, delta);
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0)
                out << ',';
            out << format_number(m(i, j));
        }
        out << '\n';
    }
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    auto out = open_out(path);
    write_matrix(out, m);
}

} // namespace remkit
