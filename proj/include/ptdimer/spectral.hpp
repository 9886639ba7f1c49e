///
/// \file spectral.hpp
///
/// Eigenfrequencies of the dimer, exceptional-point locations and PT-phase
/// classification.
///
#ifndef PTDIMER_SPECTRAL_HPP
#define PTDIMER_SPECTRAL_HPP

#include <array>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "ptdimer/circuit_model.hpp"

namespace ptdimer
{

enum class PhaseClass
{
    Symmetric,
    PartiallyBroken,
    FullyBroken,
};

std::string_view to_string(PhaseClass phase) noexcept;

enum class Ordering
{
    /// omega[0], omega[1] follow the closed-form branch labels
    /// (omega1 = (w0/2)(a + b), omega2 = (w0/2)(a - b), principal roots),
    /// omega[2] = -omega[0], omega[3] = -omega[1].
    BranchLabels,
    /// Reordered by nearest-neighbour continuation along a sweep.
    Continuation,
};

struct Spectrum
{
    std::array<Complex, 4> omega{};
    Ordering ordering = Ordering::BranchLabels;
    PhaseClass phase = PhaseClass::Symmetric;

    /// Largest growth rate, max Im(omega) [rad/s].
    double instability_rate() const noexcept;
};

class NumericError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// sqrt(x) for real x, with sqrt(-x) = +i sqrt(x).
Complex principal_sqrt(double x) noexcept;

Spectrum analytic_eigenfrequencies(const DerivedParams& d);

///
/// Eigenvalues of H from its characteristic polynomial. Because the spectrum
/// comes in (omega, -omega) pairs, det(H - omega I) is a quadratic in
/// omega^2; the odd coefficients are checked to vanish and NumericError is
/// thrown otherwise. The result carries BranchLabels ordering.
///
Spectrum numeric_eigenfrequencies(const Matrix4& H);

/// (gamma_PT, gamma_0) for coupling mu in [0, 1).
std::pair<double, double> exceptional_points(double mu);

/// Relative distance below which gamma counts as sitting on an EP.
inline constexpr double kBoundaryTolerance = 1e-12;

/// gamma on an EP (within kBoundaryTolerance) is assigned to the higher phase;
/// gamma = 0 is always Symmetric.
PhaseClass classify_phase(const DerivedParams& d);

/// Reorders each spectrum so the four branches vary continuously with the
/// sweep index. The first entry fixes the labelling: (Re desc, Im desc) for
/// omega1, omega2 and their negatives for omega3, omega4.
std::vector<Spectrum> continue_branches(std::span<const Spectrum> sweep);

} // namespace ptdimer

#endif /* PTDIMER_SPECTRAL_HPP */
