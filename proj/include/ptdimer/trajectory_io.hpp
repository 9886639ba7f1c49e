///
/// \file trajectory_io.hpp
///
/// CSV exchange format for trajectories: header `t,v1,v2,i1,i2,Q`, one row
/// per sample, 17 significant digits.
///
#ifndef PTDIMER_TRAJECTORY_IO_HPP
#define PTDIMER_TRAJECTORY_IO_HPP

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "ptdimer/time_domain.hpp"

namespace ptdimer
{

class CsvError : public std::runtime_error
{
public:
    CsvError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }

    /// 1-based line number of the offending row (0 for whole-file problems).
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

///
/// Reads a trajectory written by write_trajectory_csv or produced externally.
/// The header must name `t` and at least one of `v1`, `v2`; other known
/// columns are optional, unknown columns are ignored. Absent state columns
/// read as zero, an absent `Q` leaves `energy` empty. Time stamps must be
/// strictly increasing and uniformly spaced to 1e-6 relative.
///
Trajectory read_trajectory_csv(std::istream& is);

/// "%.17g" rendering shared by all numeric outputs.
std::string format_double(double value);

} // namespace ptdimer

#endif /* PTDIMER_TRAJECTORY_IO_HPP */
