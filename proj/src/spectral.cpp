#include "ptdimer/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ptdimer
{

std::string_view to_string(PhaseClass phase) noexcept
{
    switch (phase)
    {
    case PhaseClass::Symmetric:
        return "symmetric";
    case PhaseClass::PartiallyBroken:
        return "partially_broken";
    case PhaseClass::FullyBroken:
        return "fully_broken";
    }
    return "unknown";
}

double Spectrum::instability_rate() const noexcept
{
    double rate = -std::numeric_limits<double>::infinity();
    for (const Complex& w : omega)
        rate = std::max(rate, w.imag());
    return rate;
}

Complex principal_sqrt(double x) noexcept
{
    return x >= 0.0 ? Complex(std::sqrt(x), 0.0) : Complex(0.0, std::sqrt(-x));
}

Spectrum analytic_eigenfrequencies(const DerivedParams& d)
{
    const double g2 = d.gamma * d.gamma;
    const Complex a = principal_sqrt(d.gamma_0 * d.gamma_0 - g2);
    const Complex b = principal_sqrt(d.gamma_pt * d.gamma_pt - g2);
    const double half = d.omega0 / 2.0;

    Spectrum s;
    s.omega[0] = half * (a + b);
    s.omega[1] = half * (a - b);
    s.omega[2] = -s.omega[0];
    s.omega[3] = -s.omega[1];
    s.ordering = Ordering::BranchLabels;
    s.phase = classify_phase(d);
    return s;
}

namespace
{

// Coefficients c1..c4 of det(w I - H) = w^4 + c1 w^3 + c2 w^2 + c3 w + c4
// by the Faddeev-LeVerrier recursion.
std::array<Complex, 5> characteristic_polynomial(const Matrix4& H)
{
    std::array<Complex, 5> c{};
    c[0] = 1.0;
    Matrix4 Mk = Matrix4::Identity();
    for (int k = 1; k <= 4; ++k)
    {
        const Matrix4 HM = H * Mk;
        c[k] = -HM.trace() / static_cast<double>(k);
        Mk = HM + c[k] * Matrix4::Identity();
    }
    return c;
}

// Root of z with Re > 0 when the real part is resolvable, otherwise the one
// whose imaginary part has sign `imag_sign`.
Complex pick_root(Complex z, double imag_sign)
{
    Complex w = std::sqrt(z);
    const double scale = std::abs(w);
    if (std::abs(w.real()) > 1e-9 * scale)
        return w.real() > 0.0 ? w : -w;
    return (w.imag() * imag_sign >= 0.0) ? w : -w;
}

PhaseClass phase_from_values(const std::array<Complex, 4>& w)
{
    double scale = 0.0;
    for (const Complex& x : w)
        scale = std::max(scale, std::abs(x));
    const double tol = 1e-9 * scale;
    const bool all_real = std::all_of(w.begin(), w.end(),
                                      [&](const Complex& x) { return std::abs(x.imag()) <= tol; });
    if (all_real)
        return PhaseClass::Symmetric;
    const bool all_imag = std::all_of(w.begin(), w.end(),
                                      [&](const Complex& x) { return std::abs(x.real()) <= tol; });
    return all_imag ? PhaseClass::FullyBroken : PhaseClass::PartiallyBroken;
}

} // namespace

Spectrum numeric_eigenfrequencies(const Matrix4& H)
{
    if (!H.allFinite())
        throw NumericError("numeric_eigenfrequencies: matrix has non-finite entries");

    const double scale = H.cwiseAbs().maxCoeff();
    Spectrum s;
    s.ordering = Ordering::BranchLabels;
    if (scale == 0.0)
    {
        s.omega.fill(Complex(0.0, 0.0));
        return s;
    }

    const auto c = characteristic_polynomial(H);
    if (std::abs(c[1]) > 1e-8 * scale || std::abs(c[3]) > 1e-8 * scale * scale * scale)
    {
        throw NumericError("numeric_eigenfrequencies: spectrum is not (w, -w) paired; "
                           "odd characteristic coefficients do not vanish");
    }

    // z^2 + c2 z + c4 = 0 with z = w^2, cancellation-free form.
    const Complex p = c[2];
    const Complex q = c[4];
    const Complex disc = std::sqrt(p * p - 4.0 * q);
    const Complex sgn = (std::real(std::conj(p) * disc) >= 0.0) ? 1.0 : -1.0;
    const Complex big = -(p + sgn * disc) / 2.0;
    const Complex small = (big == Complex(0.0, 0.0)) ? Complex(0.0, 0.0) : q / big;

    // z1 = omega1^2 has the larger imaginary part; on a tie the larger modulus.
    Complex z1 = big;
    Complex z2 = small;
    const double zscale = std::max(std::abs(z1), std::abs(z2));
    const double dim = z1.imag() - z2.imag();
    if (std::abs(dim) > 1e-10 * zscale)
    {
        if (dim < 0.0)
            std::swap(z1, z2);
    }
    else if (std::abs(z2) > std::abs(z1))
    {
        std::swap(z1, z2);
    }

    s.omega[0] = pick_root(z1, +1.0);
    s.omega[1] = pick_root(z2, -1.0);
    s.omega[2] = -s.omega[0];
    s.omega[3] = -s.omega[1];
    s.phase = phase_from_values(s.omega);
    return s;
}

std::pair<double, double> exceptional_points(double mu)
{
    if (!(mu >= 0.0 && mu < 1.0))
        throw ParameterError("mu", "mu must satisfy 0 <= mu < 1");
    const double lo = 1.0 / std::sqrt(1.0 - mu);
    const double hi = 1.0 / std::sqrt(1.0 + mu);
    return {lo - hi, lo + hi};
}

PhaseClass classify_phase(const DerivedParams& d)
{
    if (d.gamma == 0.0)
        return PhaseClass::Symmetric;
    const auto at_or_above = [&](double ep) {
        return d.gamma >= ep || std::abs(d.gamma - ep) <= kBoundaryTolerance * ep;
    };
    if (at_or_above(d.gamma_0))
        return PhaseClass::FullyBroken;
    if (at_or_above(d.gamma_pt))
        return PhaseClass::PartiallyBroken;
    return PhaseClass::Symmetric;
}

namespace
{

bool lex_greater(const Complex& a, const Complex& b)
{
    if (a.real() != b.real())
        return a.real() > b.real();
    return a.imag() > b.imag();
}

std::array<Complex, 4> initial_labels(const std::array<Complex, 4>& w)
{
    std::array<int, 4> idx{0, 1, 2, 3};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return lex_greater(w[a], w[b]); });
    std::array<Complex, 4> out{};
    out[0] = w[idx[0]];
    // partner of omega1 is the remaining value closest to -omega1
    int partner = 1;
    for (int k = 2; k < 4; ++k)
        if (std::abs(w[idx[k]] + out[0]) < std::abs(w[idx[partner]] + out[0]))
            partner = k;
    out[2] = w[idx[partner]];
    std::array<Complex, 2> rest{};
    int r = 0;
    for (int k = 1; k < 4; ++k)
        if (k != partner)
            rest[r++] = w[idx[k]];
    if (lex_greater(rest[1], rest[0]))
        std::swap(rest[0], rest[1]);
    out[1] = rest[0];
    out[3] = rest[1];
    return out;
}

} // namespace

std::vector<Spectrum> continue_branches(std::span<const Spectrum> sweep)
{
    std::vector<Spectrum> out(sweep.begin(), sweep.end());
    if (out.empty())
        return out;

    out[0].omega = initial_labels(out[0].omega);
    out[0].ordering = Ordering::Continuation;

    std::array<int, 4> perm{};
    for (std::size_t n = 1; n < out.size(); ++n)
    {
        std::array<Complex, 4> predicted = out[n - 1].omega;
        if (n >= 2)
            for (int k = 0; k < 4; ++k)
                predicted[k] = 2.0 * out[n - 1].omega[k] - out[n - 2].omega[k];

        const std::array<Complex, 4> current = out[n].omega;
        std::iota(perm.begin(), perm.end(), 0);
        std::array<int, 4> best = perm;
        double best_cost = std::numeric_limits<double>::infinity();
        do
        {
            double cost = 0.0;
            for (int k = 0; k < 4; ++k)
                cost += std::norm(current[perm[k]] - predicted[k]);
            if (cost < best_cost)
            {
                best_cost = cost;
                best = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));

        for (int k = 0; k < 4; ++k)
            out[n].omega[k] = current[best[k]];
        out[n].ordering = Ordering::Continuation;
    }
    return out;
}

} // namespace ptdimer
