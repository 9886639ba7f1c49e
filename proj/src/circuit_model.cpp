#include "ptdimer/circuit_model.hpp"

#include <cmath>
#include <sstream>

namespace ptdimer
{

namespace
{

constexpr Complex I{0.0, 1.0};

std::string describe(const char* name, double value)
{
    std::ostringstream os;
    os.precision(6);
    os << name << " = " << value;
    return os.str();
}

} // namespace

CircuitParams CircuitParams::with_gamma(double gamma) const
{
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
    {
        throw ParameterError("gamma", "gamma must be finite and >= 0 (" +
                                          describe("gamma", gamma) + ")");
    }
    CircuitParams out = *this;
    out.R = gamma == 0.0 ? std::numeric_limits<double>::infinity()
                         : std::sqrt(L / C) / gamma;
    return out;
}

CircuitParams CircuitParams::from_dimensionless(double L, double C, double mu, double gamma)
{
    CircuitParams p;
    p.L = L;
    p.C = C;
    p.M = mu * L;
    return p.with_gamma(gamma);
}

void validate(const CircuitParams& p)
{
    if (!(p.L > 0.0) || !std::isfinite(p.L))
        throw ParameterError("L", "L must be > 0 (" + describe("L", p.L) + ")");
    if (!(p.C > 0.0) || !std::isfinite(p.C))
        throw ParameterError("C", "C must be > 0 (" + describe("C", p.C) + ")");
    if (!(p.R > 0.0) || std::isnan(p.R))
        throw ParameterError("R", "R must be > 0 (" + describe("R", p.R) + ")");
    if (!(p.M >= 0.0) || !std::isfinite(p.M))
        throw ParameterError("M", "M must be >= 0 (" + describe("M", p.M) + ")");
    if (!(p.M < p.L))
        throw ParameterError("M", "mu must be < 1 (" + describe("mu", p.M / p.L) + ")");
    if (!(p.R_L >= 0.0) || !std::isfinite(p.R_L))
        throw ParameterError("R_L", "R_L must be >= 0 (" + describe("R_L", p.R_L) + ")");
    if (!(p.compensation >= 0.0 && p.compensation <= 1.0))
        throw ParameterError("compensation", "compensation must lie in [0, 1] (" +
                                                 describe("compensation", p.compensation) + ")");
}

std::vector<std::string> advisories(const CircuitParams& p)
{
    validate(p);
    std::vector<std::string> out;
    const double mu = p.M / p.L;
    if (mu == 0.0)
        out.emplace_back("decoupled oscillators (M = 0): gamma_PT collapses to 0");
    if (mu > 0.999)
        out.emplace_back("coupling mu > 0.999: gamma_PT and gamma_0 diverge as mu -> 1");
    return out;
}

DerivedParams derive_params(const CircuitParams& p)
{
    validate(p);
    DerivedParams d;
    d.omega0 = 1.0 / std::sqrt(p.L * p.C);
    d.mu = p.M / p.L;
    d.tau_LR = p.L / p.R;
    d.gamma = d.omega0 * d.tau_LR;
    const double lo = 1.0 / std::sqrt(1.0 - d.mu);
    const double hi = 1.0 / std::sqrt(1.0 + d.mu);
    d.gamma_pt = lo - hi;
    d.gamma_0 = lo + hi;
    return d;
}

RealMatrix4 build_generator(const CircuitParams& p)
{
    const DerivedParams d = derive_params(p);
    const double g = d.gamma * d.omega0;
    const double s = 1.0 / (p.L * (1.0 - d.mu * d.mu));

    RealMatrix4 K;
    // clang-format off
    K << -g,       0.0,      1.0 / p.C, 0.0,
         0.0,      g,        0.0,       1.0 / p.C,
         -s,       d.mu * s, 0.0,       0.0,
         d.mu * s, -s,       0.0,       0.0;
    // clang-format on
    return K;
}

Matrix4 build_kirchhoff_matrix(const CircuitParams& p)
{
    // Built entry by entry as (0, k) so the real parts are exactly zero.
    const RealMatrix4 K = build_generator(p);
    Matrix4 h;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            h(r, c) = Complex(0.0, K(r, c));
    return h;
}

Matrix4 build_energy_form(const CircuitParams& p)
{
    validate(p);
    Matrix4 A = Matrix4::Zero();
    A(0, 0) = p.C / 2.0;
    A(1, 1) = p.C / 2.0;
    A(2, 2) = p.L / 2.0;
    A(3, 3) = p.L / 2.0;
    A(2, 3) = p.M / 2.0;
    A(3, 2) = p.M / 2.0;
    return A;
}

namespace
{

// Symmetric 2x2 block with eigenvalue `a` on (1,1)/sqrt2 and `b` on (1,-1)/sqrt2.
Matrix4 assemble_sqrt(double cap, double a, double b)
{
    Matrix4 S = Matrix4::Zero();
    S(0, 0) = cap;
    S(1, 1) = cap;
    S(2, 2) = (a + b) / 2.0;
    S(3, 3) = (a + b) / 2.0;
    S(2, 3) = (a - b) / 2.0;
    S(3, 2) = (a - b) / 2.0;
    return S;
}

} // namespace

Matrix4 energy_sqrt(const CircuitParams& p)
{
    validate(p);
    const double mu = p.M / p.L;
    return assemble_sqrt(std::sqrt(p.C / 2.0), std::sqrt(p.L * (1.0 + mu) / 2.0),
                         std::sqrt(p.L * (1.0 - mu) / 2.0));
}

Matrix4 energy_sqrt_inverse(const CircuitParams& p)
{
    validate(p);
    const double mu = p.M / p.L;
    return assemble_sqrt(1.0 / std::sqrt(p.C / 2.0), 1.0 / std::sqrt(p.L * (1.0 + mu) / 2.0),
                         1.0 / std::sqrt(p.L * (1.0 - mu) / 2.0));
}

Matrix4 build_hamiltonian(const CircuitParams& p)
{
    const DerivedParams d = derive_params(p);
    const double g = d.gamma;
    const double g0 = d.gamma_0;
    const double gp = d.gamma_pt;

    Matrix4 H;
    // clang-format off
    H << -2.0 * I * g, 0.0,        I * g0,  -I * gp,
         0.0,          2.0 * I * g, -I * gp, I * g0,
         -I * g0,      I * gp,      0.0,     0.0,
         I * gp,       -I * g0,     0.0,     0.0;
    // clang-format on
    return H * (d.omega0 / 2.0);
}

Matrix4 PTOperators::conjugate_by_pt(const Matrix4& X) const
{
    // U conj(X conj(U^{-1} y)) = U conj(X) U^{-1} y; U is real and involutive.
    const Matrix4 U = pt_linear();
    return U * X.conjugate() * U;
}

PTOperators pt_operators()
{
    PTOperators ops;
    ops.P = Matrix4::Zero();
    ops.P(0, 1) = 1.0;
    ops.P(1, 0) = 1.0;
    ops.P(2, 3) = 1.0;
    ops.P(3, 2) = 1.0;
    ops.T_linear = Matrix4::Zero();
    ops.T_linear(0, 0) = 1.0;
    ops.T_linear(1, 1) = 1.0;
    ops.T_linear(2, 2) = -1.0;
    ops.T_linear(3, 3) = -1.0;
    return ops;
}

} // namespace ptdimer
