#include "ptdimer/time_domain.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include "ptdimer/spectral.hpp"

namespace ptdimer
{

RealMatrix4 build_extended_generator(const ExtendedParams& e)
{
    RealMatrix4 K = build_generator(e.base);
    const double r = e.residual();
    if (r > 0.0)
    {
        const double mu = e.base.M / e.base.L;
        const double s = r / (e.base.L * (1.0 - mu * mu));
        K(2, 2) = -s;
        K(2, 3) = mu * s;
        K(3, 2) = mu * s;
        K(3, 3) = -s;
    }
    return K;
}

double max_stable_step(const RealMatrix4& K)
{
    const Eigen::EigenSolver<RealMatrix4> es(K, false);
    const double rate = es.eigenvalues().cwiseAbs().maxCoeff();
    if (rate == 0.0)
        return std::numeric_limits<double>::infinity();
    return 2.0 * std::numbers::pi / (kStepsPerPeriod * rate);
}

double circuit_energy(const CircuitParams& p, const StateVector& x)
{
    const double mu = p.M / p.L;
    return 0.5 * p.C * (x.v1 * x.v1 + x.v2 * x.v2) + 0.5 * p.L * (x.i1 * x.i1 + x.i2 * x.i2) +
           mu * p.L * x.i1 * x.i2;
}

namespace
{

Eigen::Vector4d rk4_step(const RealMatrix4& K, const Eigen::Vector4d& x, double dt)
{
    const Eigen::Vector4d k1 = K * x;
    const Eigen::Vector4d k2 = K * (x + 0.5 * dt * k1);
    const Eigen::Vector4d k3 = K * (x + 0.5 * dt * k2);
    const Eigen::Vector4d k4 = K * (x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory integrate(const CircuitParams& p, const RealMatrix4& K, const StateVector& x0,
                     double t_end, double dt)
{
    if (!(t_end > 0.0) || !std::isfinite(t_end))
        throw SimulationError("t_end must be finite and > 0");
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw SimulationError("dt must be finite and > 0");
    const double limit = max_stable_step(K);
    if (dt > limit * (1.0 + 1e-12))
    {
        throw SimulationError("dt = " + std::to_string(dt) + " s exceeds the resolution guard " +
                              std::to_string(limit) + " s (64 steps per shortest period)");
    }
    if (!x0.vec().allFinite())
        throw SimulationError("initial state has non-finite entries");

    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    Trajectory traj;
    traj.dt = dt;
    traj.t.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    traj.energy.reserve(steps + 1);

    const double q0 = circuit_energy(p, x0);
    const double q_limit = q0 * kOverflowGuard * kOverflowGuard;

    Eigen::Vector4d x = x0.vec();
    traj.t.push_back(0.0);
    traj.states.push_back(x0);
    traj.energy.push_back(q0);
    for (std::size_t n = 1; n <= steps; ++n)
    {
        x = rk4_step(K, x, dt);
        const StateVector s = StateVector::from(x);
        const double q = circuit_energy(p, s);
        traj.t.push_back(static_cast<double>(n) * dt);
        traj.states.push_back(s);
        traj.energy.push_back(q);
        if (q0 > 0.0 && !(q <= q_limit))
        {
            traj.truncated = true;
            break;
        }
    }
    return traj;
}

} // namespace

Trajectory simulate(const CircuitParams& p, const StateVector& x0, double t_end, double dt)
{
    return integrate(p, build_generator(p), x0, t_end, dt);
}

Trajectory simulate_extended(const ExtendedParams& e, const StateVector& x0, double t_end,
                             double dt)
{
    return integrate(e.base, build_extended_generator(e), x0, t_end, dt);
}

ExactPropagator::ExactPropagator(const CircuitParams& p)
    : sqrtA_(energy_sqrt(p)), sqrtA_inv_(energy_sqrt_inverse(p)), H_(build_hamiltonian(p))
{
    const DerivedParams d = derive_params(p);
    const auto near = [&](double ep) {
        return ep > 0.0 && std::abs(d.gamma - ep) <= 1e-9 * ep;
    };
    use_expm_ = near(d.gamma_pt) || near(d.gamma_0);

    if (!use_expm_)
    {
        const Eigen::ComplexEigenSolver<Matrix4> es(H_);
        V_ = es.eigenvectors();
        lambda_ = es.eigenvalues();
        const Eigen::JacobiSVD<Matrix4> svd(V_);
        const auto sv = svd.singularValues();
        condition_ = sv(3) > 0.0 ? sv(0) / sv(3) : std::numeric_limits<double>::infinity();
        if (!(condition_ < 1e10))
            use_expm_ = true;
        else
            V_inv_ = V_.inverse();
    }
    if (use_expm_)
        condition_ = std::numeric_limits<double>::infinity();
}

StateVector ExactPropagator::operator()(const StateVector& x0, double t) const
{
    if (t == 0.0)
        return x0;

    const Eigen::Matrix<Complex, 4, 1> phi0 = sqrtA_ * x0.vec().cast<Complex>();
    Eigen::Matrix<Complex, 4, 1> phi;
    if (use_expm_)
    {
        const Matrix4 G = (Complex(0.0, -t) * H_).eval();
        phi = G.exp() * phi0;
    }
    else
    {
        Eigen::Matrix<Complex, 4, 1> c = V_inv_ * phi0;
        for (int k = 0; k < 4; ++k)
            c(k) *= std::exp(Complex(0.0, -t) * lambda_(k));
        phi = V_ * c;
    }
    const Eigen::Matrix<Complex, 4, 1> x = sqrtA_inv_ * phi;
    return StateVector::from(x.real());
}

StateVector exact_propagate(const CircuitParams& p, const StateVector& x0, double t)
{
    return ExactPropagator(p)(x0, t);
}

double dominant_growth_rate(const ExtendedParams& e)
{
    const Eigen::EigenSolver<RealMatrix4> es(build_extended_generator(e), false);
    return es.eigenvalues().real().maxCoeff();
}

double locate_second_transition(const CircuitParams& base, std::span<const double> gammas)
{
    if (gammas.size() < 3)
        throw std::invalid_argument("locate_second_transition needs at least 3 gamma values");
    std::vector<double> rate(gammas.size());
    for (std::size_t k = 0; k < gammas.size(); ++k)
        rate[k] = dominant_growth_rate(ExtendedParams{base.with_gamma(gammas[k])});

    double best_slope = -std::numeric_limits<double>::infinity();
    double best_gamma = gammas[1];
    for (std::size_t k = 1; k + 1 < gammas.size(); ++k)
    {
        const double slope = (rate[k + 1] - rate[k - 1]) / (gammas[k + 1] - gammas[k - 1]);
        if (slope > best_slope)
        {
            best_slope = slope;
            best_gamma = gammas[k];
        }
    }
    return best_gamma;
}

} // namespace ptdimer
