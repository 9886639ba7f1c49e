///
/// \file mode_extraction.hpp
///
/// Recovery of complex eigenfrequencies from sampled voltage traces with the
/// matrix-pencil method, and the sweep protocol that mirrors how the
/// eigenfrequency diagram is measured on hardware.
///
/// Signals are modelled as x(t_n) = sum_k a_k exp(-i omega_k t_n), so
/// Re(omega) is the angular oscillation frequency and Im(omega) the growth
/// rate.
///
#ifndef PTDIMER_MODE_EXTRACTION_HPP
#define PTDIMER_MODE_EXTRACTION_HPP

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptdimer/circuit_model.hpp"
#include "ptdimer/spectral.hpp"
#include "ptdimer/time_domain.hpp"

namespace ptdimer
{

struct ModeEstimate
{
    Complex freq;           ///< complex angular frequency [rad/s]
    Complex amp;            ///< amplitude at the first sample of the analysed window [V]
    double residual = 0.0;  ///< relative RMS residual of the whole fit
};

enum class ExtractionFailure
{
    InsufficientData,
    IllConditioned,
    OrderOverflow,
};

class ExtractionError : public std::runtime_error
{
public:
    ExtractionError(ExtractionFailure kind, const std::string& what)
        : std::runtime_error(what), kind_(kind)
    {
    }

    ExtractionFailure kind() const noexcept { return kind_; }

private:
    ExtractionFailure kind_;
};

struct ExtractOptions
{
    std::size_t max_order = 8;
    /// Singular values with sigma_k / sigma_1 above this count towards the order.
    double sv_threshold = 1e-8;
    /// Fits whose relative residual exceeds this raise OrderOverflow.
    double residual_tolerance = 1e-2;
    /// Fraction of the record, taken from the end, that is analysed.
    double window = 1.0;
    /// The window is decimated by an integer stride to at most this many
    /// samples. The stride does not look at the signal content, so callers
    /// must leave enough samples per period to stay above Nyquist.
    std::size_t max_samples = 1000;
};

///
/// Matrix-pencil estimate of up to `options.max_order` damped/growing complex
/// exponentials. The pencil parameter is N/3. For real input the returned set
/// is closed under omega -> -conj(omega) exactly, with conjugate amplitudes.
/// Results are sorted by |amp| descending.
///
std::vector<ModeEstimate> extract_modes(std::span<const double> samples, double dt,
                                        const ExtractOptions& options = {});

enum class Channel
{
    V1,
    V2,
};

std::vector<double> channel_samples(const Trajectory& traj, Channel channel);

///
/// Fastest-growing mode of one voltage channel, estimated on the tail half of
/// the record. When no mode grows appreciably the largest-amplitude mode with
/// non-negative frequency is returned instead.
///
ModeEstimate dominant_mode(const Trajectory& traj, Channel channel,
                           const ExtractOptions& options = {.window = 0.5});

struct SweepProtocol
{
    /// Record length in units of 2 pi / omega0.
    double periods = 100.0;
    /// Integration steps per shortest modal period (>= 64).
    double steps_per_period = 64.0;
    StateVector x0{1.0, 0.0, 0.0, 0.0};
    Channel channel = Channel::V1;
    ExtractOptions extract{};
    /// Worker threads; results are returned in grid order regardless.
    unsigned jobs = 1;
};

struct SweepPoint
{
    double gamma = 0.0;
    PhaseClass phase = PhaseClass::Symmetric;
    /// Extracted omega1 / omega0 and omega2 / omega0. omega2 is only
    /// recoverable in the symmetric phase.
    std::array<std::optional<Complex>, 2> branch{};
    /// Every mode recovered at this point, frequencies normalised by omega0.
    std::vector<ModeEstimate> modes;
    /// Non-empty when extraction failed at this point.
    std::string error;
};

///
/// Simulates every grid point from `protocol.x0` and extracts the modes the
/// phase allows: all four in the symmetric phase, the amplifying pair in the
/// partially broken phase, only the dominant mode in the fully broken phase.
/// Failures are recorded per point.
///
std::vector<SweepPoint> sweep_extract(std::span<const CircuitParams> grid,
                                      const SweepProtocol& protocol);

} // namespace ptdimer

#endif /* PTDIMER_MODE_EXTRACTION_HPP */
