///
/// \file time_domain.hpp
///
/// Time integration of the dimer's state equations, the exact propagator
/// used as a reference, the circuit energy, and the extended model in which
/// each inductor keeps a residual series resistance.
///
#ifndef PTDIMER_TIME_DOMAIN_HPP
#define PTDIMER_TIME_DOMAIN_HPP

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "ptdimer/circuit_model.hpp"

namespace ptdimer
{

struct StateVector
{
    double v1 = 0.0;  ///< [V]
    double v2 = 0.0;  ///< [V]
    double i1 = 0.0;  ///< inductor-branch current [A]
    double i2 = 0.0;  ///< inductor-branch current [A]

    Eigen::Vector4d vec() const { return {v1, v2, i1, i2}; }
    static StateVector from(const Eigen::Vector4d& x) { return {x(0), x(1), x(2), x(3)}; }

    friend bool operator==(const StateVector&, const StateVector&) = default;
};

/// Uniformly sampled solution. `truncated` is set when the run stopped at the
/// overflow guard before reaching t_end.
struct Trajectory
{
    double dt = 0.0;
    std::vector<double> t;
    std::vector<StateVector> states;
    std::vector<double> energy;
    bool truncated = false;

    std::size_t size() const noexcept { return t.size(); }
};

/// Circuit with a residual series resistance (1 - compensation) * R_L in each
/// inductor branch.
struct ExtendedParams
{
    CircuitParams base;

    double residual() const noexcept { return base.residual_resistance(); }
};

class SimulationError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Minimum number of integration steps per shortest modal period.
inline constexpr double kStepsPerPeriod = 64.0;
/// Ratio of the energy norm to its initial value at which integration stops.
inline constexpr double kOverflowGuard = 1e30;

///
/// Generator of the extended model, d psi/dt = K psi. The inductor law
/// becomes -(V_n + r I_n) = L dI_n/dt + M dI_m/dt, so r enters the current
/// rows through the inverse inductance matrix. r = 0 reproduces
/// build_generator exactly.
///
RealMatrix4 build_extended_generator(const ExtendedParams& e);

/// Largest admissible step: 2 pi / (kStepsPerPeriod * max |lambda(K)|).
double max_stable_step(const RealMatrix4& K);

/// Q = <psi|A|psi> [J].
double circuit_energy(const CircuitParams& p, const StateVector& x);

Trajectory simulate(const CircuitParams& p, const StateVector& x0, double t_end, double dt);

Trajectory simulate_extended(const ExtendedParams& e, const StateVector& x0, double t_end,
                             double dt);

///
/// x(t) = exp(-i h t) x0, evaluated in the energy basis phi = A^{1/2} x where
/// the generator is -i H. Away from the exceptional points the propagator is
/// built from an eigen-decomposition of H; within 1e-9 (relative) of an EP,
/// or when the eigenvector matrix is numerically singular, it falls back to
/// a scaling-and-squaring matrix exponential.
///
class ExactPropagator
{
public:
    explicit ExactPropagator(const CircuitParams& p);

    StateVector operator()(const StateVector& x0, double t) const;

    /// 2-norm condition number of the (unit-column) eigenvector matrix of H.
    /// Infinite when the matrix-exponential path is in use.
    double eigenvector_condition() const noexcept { return condition_; }
    bool uses_matrix_exponential() const noexcept { return use_expm_; }

private:
    Matrix4 sqrtA_;
    Matrix4 sqrtA_inv_;
    Matrix4 H_;
    Matrix4 V_;
    Matrix4 V_inv_;
    Eigen::Matrix<Complex, 4, 1> lambda_;
    double condition_ = 1.0;
    bool use_expm_ = false;
};

StateVector exact_propagate(const CircuitParams& p, const StateVector& x0, double t);

/// max Re lambda(K) of the (extended) generator [1/s]; equals max Im omega for
/// the ideal circuit.
double dominant_growth_rate(const ExtendedParams& e);

///
/// Operational location of the second transition: the gamma on `gammas`
/// (sorted ascending, R varied at fixed L, C, M) at which the centred
/// difference of the dominant growth rate with respect to gamma is largest.
///
double locate_second_transition(const CircuitParams& base, std::span<const double> gammas);

} // namespace ptdimer

#endif /* PTDIMER_TIME_DOMAIN_HPP */
