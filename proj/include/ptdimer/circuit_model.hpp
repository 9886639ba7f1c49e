///
/// \file circuit_model.hpp
///
/// Component values of the gain/loss LC dimer and the 4x4 matrices that
/// describe it: the Kirchhoff generator h, the energy form A and its square
/// root, the energy-basis Hamiltonian H(gamma) and the parity/time-reversal
/// operators.
///
/// State ordering everywhere is (V1, V2, I1L, I2L). Oscillator 1 carries the
/// loss resistor +R, oscillator 2 the gain resistor -R.
///
#ifndef PTDIMER_CIRCUIT_MODEL_HPP
#define PTDIMER_CIRCUIT_MODEL_HPP

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ptdimer
{

using Complex = std::complex<double>;
using Matrix4 = Eigen::Matrix<Complex, 4, 4>;
using RealMatrix4 = Eigen::Matrix4d;

/// Raised when a component value violates a physical bound. The message names
/// the offending field.
class ParameterError : public std::invalid_argument
{
public:
    ParameterError(std::string field, const std::string& what)
        : std::invalid_argument(what), field_(std::move(field))
    {
    }

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

///
/// Physical component values in SI units.
///
/// `R = +inf` is accepted and means the gain/loss resistors are open
/// circuits (gamma = 0, the Hermitian limit).
///
struct CircuitParams
{
    double L = 0.0;  ///< self inductance [H]
    double C = 0.0;  ///< capacitance [F]
    double M = 0.0;  ///< mutual inductance [H]
    double R = std::numeric_limits<double>::infinity();  ///< gain/loss magnitude [Ohm]
    double R_L = 0.0;  ///< series resistance of each inductor [Ohm]
    double compensation = 1.0;  ///< fraction of R_L cancelled, in [0, 1]

    /// Residual series resistance left in each inductor branch.
    double residual_resistance() const noexcept { return (1.0 - compensation) * R_L; }

    /// Same L, C, M, R_L and compensation, with R chosen so that the
    /// dimensionless gain-loss strength equals `gamma`.
    CircuitParams with_gamma(double gamma) const;

    /// Parameters with M = mu * L and R chosen from gamma.
    static CircuitParams from_dimensionless(double L, double C, double mu, double gamma);
};

struct DerivedParams
{
    double omega0 = 0.0;    ///< 1/sqrt(LC) [rad/s]
    double mu = 0.0;        ///< M/L
    double gamma = 0.0;     ///< sqrt(L/C)/R
    double tau_LR = 0.0;    ///< L/R [s]
    double gamma_pt = 0.0;  ///< first exceptional point
    double gamma_0 = 0.0;   ///< second exceptional point
};

/// Throws ParameterError if `p` is not a physically valid dimer.
void validate(const CircuitParams& p);

/// Non-fatal advisories (decoupled oscillators, near-unit coupling).
std::vector<std::string> advisories(const CircuitParams& p);

DerivedParams derive_params(const CircuitParams& p);

/// Kirchhoff generator h with i d|psi>/dt = h |psi>. Every entry is purely
/// imaginary. R_L is not part of the ideal model and is ignored here.
Matrix4 build_kirchhoff_matrix(const CircuitParams& p);

/// Real generator K = -i h, so that d|psi>/dt = K |psi>.
RealMatrix4 build_generator(const CircuitParams& p);

/// Energy form A with Q = <psi|A|psi>.
Matrix4 build_energy_form(const CircuitParams& p);

/// Positive symmetric square root of A, assembled from the eigen-decomposition
/// of the inductive block in the symmetric/antisymmetric basis.
Matrix4 energy_sqrt(const CircuitParams& p);

/// Inverse of energy_sqrt, same closed form with reciprocal eigenvalues.
Matrix4 energy_sqrt_inverse(const CircuitParams& p);

/// Energy-basis Hamiltonian H(gamma) written in terms of gamma, gamma_0,
/// gamma_PT and omega0.
Matrix4 build_hamiltonian(const CircuitParams& p);

///
/// Time reversal is antilinear: T|x> = T_linear * conj(|x>). The combined
/// operator PT acts as (P * T_linear) * conj(.).
///
struct PTOperators
{
    Matrix4 P;
    Matrix4 T_linear;
    static constexpr bool t_conjugates = true;

    /// Linear part of the antilinear PT operator.
    Matrix4 pt_linear() const { return P * T_linear; }

    /// (PT) X (PT)^{-1} for a linear operator X.
    Matrix4 conjugate_by_pt(const Matrix4& X) const;
};

PTOperators pt_operators();

} // namespace ptdimer

#endif /* PTDIMER_CIRCUIT_MODEL_HPP */
