#include "ptdimer/trajectory_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

namespace ptdimer
{

std::string format_double(double value)
{
    std::array<char, 32> buf{};
    const int n = std::snprintf(buf.data(), buf.size(), "%.17g", value);
    return std::string(buf.data(), static_cast<std::size_t>(n));
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj)
{
    os << "t,v1,v2,i1,i2,Q\n";
    for (std::size_t k = 0; k < traj.size(); ++k)
    {
        const StateVector& s = traj.states[k];
        const double q = k < traj.energy.size() ? traj.energy[k] : 0.0;
        os << format_double(traj.t[k]) << ',' << format_double(s.v1) << ','
           << format_double(s.v2) << ',' << format_double(s.i1) << ',' << format_double(s.i2)
           << ',' << format_double(q) << '\n';
    }
}

namespace
{

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true)
    {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

enum Column
{
    kT,
    kV1,
    kV2,
    kI1,
    kI2,
    kQ,
    kColumns
};

std::optional<Column> column_of(std::string_view name)
{
    static constexpr std::array<std::string_view, kColumns> names{"t", "v1", "v2",
                                                                  "i1", "i2", "Q"};
    for (int k = 0; k < kColumns; ++k)
        if (name == names[k])
            return static_cast<Column>(k);
    return std::nullopt;
}

} // namespace

Trajectory read_trajectory_csv(std::istream& is)
{
    std::string line;
    std::size_t lineno = 0;

    // header, skipping leading blank lines
    bool have_header = false;
    while (std::getline(is, line))
    {
        ++lineno;
        if (!trim(line).empty())
        {
            have_header = true;
            break;
        }
    }
    if (!have_header)
        throw CsvError(0, "empty trajectory file");

    const auto header = split(line);
    std::array<std::optional<std::size_t>, kColumns> index{};
    for (std::size_t k = 0; k < header.size(); ++k)
    {
        if (auto c = column_of(header[k]))
        {
            if (index[*c])
                throw CsvError(lineno, "duplicate column '" + std::string(header[k]) + "'");
            index[*c] = k;
        }
    }
    if (!index[kT])
        throw CsvError(lineno, "header lacks a 't' column");
    if (!index[kV1] && !index[kV2])
        throw CsvError(lineno, "header needs a 'v1' or 'v2' column");

    Trajectory traj;
    std::vector<std::size_t> row_line;
    while (std::getline(is, line))
    {
        ++lineno;
        if (trim(line).empty())
            continue;
        const auto fields = split(line);
        if (fields.size() != header.size())
        {
            throw CsvError(lineno, "expected " + std::to_string(header.size()) +
                                       " fields, found " + std::to_string(fields.size()));
        }
        std::array<double, kColumns> value{};
        for (int c = 0; c < kColumns; ++c)
        {
            if (!index[c])
                continue;
            const std::string_view f = fields[*index[c]];
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
                throw CsvError(lineno, "malformed number '" + std::string(f) + "'");
            value[c] = v;
        }
        traj.t.push_back(value[kT]);
        row_line.push_back(lineno);
        traj.states.push_back({value[kV1], value[kV2], value[kI1], value[kI2]});
        if (index[kQ])
            traj.energy.push_back(value[kQ]);
    }
    if (traj.t.empty())
        throw CsvError(lineno, "trajectory has no samples");

    if (traj.t.size() >= 2)
    {
        traj.dt = traj.t[1] - traj.t[0];
        if (!(traj.dt > 0.0))
            throw CsvError(row_line[1], "time stamps must be strictly increasing");
        for (std::size_t k = 1; k < traj.t.size(); ++k)
        {
            const double step = traj.t[k] - traj.t[k - 1];
            if (!(step > 0.0))
                throw CsvError(row_line[k], "time stamps must be strictly increasing");
            if (std::abs(step - traj.dt) > 1e-6 * traj.dt)
                throw CsvError(row_line[k], "non-uniform time step");
        }
    }
    return traj;
}

} // namespace ptdimer
