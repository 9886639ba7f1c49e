#include "ptdimer/mode_extraction.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include <Eigen/Dense>

namespace ptdimer
{

namespace
{

using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Index of the exact conjugate partner of z[k] (k itself for real z).
std::size_t conjugate_partner(const std::vector<Complex>& z, std::size_t k)
{
    if (z[k].imag() == 0.0)
        return k;
    for (std::size_t j = 0; j < z.size(); ++j)
        if (j != k && z[j] == std::conj(z[k]))
            return j;
    return k;
}

} // namespace

std::vector<ModeEstimate> extract_modes(std::span<const double> samples, double dt,
                                        const ExtractOptions& options)
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ExtractionError(ExtractionFailure::InsufficientData, "dt must be finite and > 0");
    if (options.max_order == 0)
        throw ExtractionError(ExtractionFailure::InsufficientData, "max_order must be >= 1");
    if (!(options.window > 0.0 && options.window <= 1.0))
        throw ExtractionError(ExtractionFailure::InsufficientData, "window must lie in (0, 1]");

    // window from the tail, then decimate
    const auto window_len = static_cast<std::size_t>(
        std::ceil(options.window * static_cast<double>(samples.size())));
    const auto window = samples.subspan(samples.size() - window_len);
    const std::size_t cap = std::max<std::size_t>(options.max_samples, 4 * options.max_order);
    const std::size_t stride = std::max<std::size_t>(1, (window.size() + cap - 1) / cap);
    std::vector<double> x;
    x.reserve(window.size() / stride + 1);
    for (std::size_t k = 0; k < window.size(); k += stride)
        x.push_back(window[k]);
    const double step = dt * static_cast<double>(stride);

    const std::size_t n = x.size();
    if (n < 4 * options.max_order)
    {
        throw ExtractionError(ExtractionFailure::InsufficientData,
                              "need at least 4 * max_order = " +
                                  std::to_string(4 * options.max_order) + " samples, have " +
                                  std::to_string(n));
    }
    if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); }))
        throw ExtractionError(ExtractionFailure::IllConditioned, "samples contain non-finite values");

    // Hankel data matrix, (n - p) x (p + 1), pencil parameter p = n / 3.
    const auto pencil = static_cast<Eigen::Index>(n / 3);
    const auto rows = static_cast<Eigen::Index>(n) - pencil;
    RealMatrix Y(rows, pencil + 1);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j <= pencil; ++j)
            Y(i, j) = x[static_cast<std::size_t>(i + j)];

    const Eigen::BDCSVD<RealMatrix> svd(Y, Eigen::ComputeThinU);
    const Eigen::VectorXd& sigma = svd.singularValues();
    if (!(sigma(0) > 0.0) || !std::isfinite(sigma(0)))
        throw ExtractionError(ExtractionFailure::IllConditioned, "signal has no energy");

    Eigen::Index above = 0;
    while (above < sigma.size() && sigma(above) / sigma(0) > options.sv_threshold)
        ++above;
    const auto order = std::min<Eigen::Index>(
        {above, static_cast<Eigen::Index>(options.max_order), rows - 1});
    if (order < sigma.size() && sigma(order) / sigma(order - 1) > 0.9)
    {
        throw ExtractionError(ExtractionFailure::IllConditioned,
                              "singular spectrum has no gap at order " + std::to_string(order));
    }

    // Shift invariance of the signal subspace: U_lower = U_upper * Phi.
    const RealMatrix U = svd.matrixU().leftCols(order);
    const RealMatrix upper = U.topRows(rows - 1);
    const RealMatrix lower = U.bottomRows(rows - 1);
    const RealMatrix Phi = upper.colPivHouseholderQr().solve(lower);
    const Eigen::EigenSolver<RealMatrix> es(Phi, false);

    std::vector<Complex> z(static_cast<std::size_t>(order));
    for (Eigen::Index k = 0; k < order; ++k)
        z[static_cast<std::size_t>(k)] = es.eigenvalues()(k);

    // amplitudes by least squares on the Vandermonde system
    ComplexMatrix V(static_cast<Eigen::Index>(n), order);
    for (Eigen::Index k = 0; k < order; ++k)
    {
        Complex zn(1.0, 0.0);
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i)
        {
            V(i, k) = zn;
            zn *= z[static_cast<std::size_t>(k)];
        }
    }
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(n));
    const ComplexVector xc = xv.cast<Complex>();
    ComplexVector a = V.colPivHouseholderQr().solve(xc);

    for (std::size_t k = 0; k < z.size(); ++k)
    {
        const std::size_t j = conjugate_partner(z, k);
        if (j == k)
        {
            if (z[k].imag() == 0.0)
                a(static_cast<Eigen::Index>(k)) = a(static_cast<Eigen::Index>(k)).real();
        }
        else if (j > k)
        {
            const Complex avg =
                0.5 * (a(static_cast<Eigen::Index>(k)) + std::conj(a(static_cast<Eigen::Index>(j))));
            a(static_cast<Eigen::Index>(k)) = avg;
            a(static_cast<Eigen::Index>(j)) = std::conj(avg);
        }
    }

    const double norm_x = xv.norm();
    const double residual = (V * a - xc).norm() / norm_x;
    if (!(residual <= options.residual_tolerance))
    {
        throw ExtractionError(ExtractionFailure::OrderOverflow,
                              "relative residual " + std::to_string(residual) +
                                  " exceeds tolerance at order " + std::to_string(order) +
                                  (above > order ? " (order capped by max_order)" : ""));
    }

    std::vector<ModeEstimate> out;
    out.reserve(z.size());
    for (std::size_t k = 0; k < z.size(); ++k)
    {
        // z = exp(-i omega step)  =>  omega = i log(z) / step
        const Complex w = Complex(0.0, 1.0) * std::log(z[k]) / step;
        out.push_back({w, a(static_cast<Eigen::Index>(k)), residual});
    }
    std::stable_sort(out.begin(), out.end(), [](const ModeEstimate& l, const ModeEstimate& r) {
        return std::abs(l.amp) > std::abs(r.amp);
    });
    return out;
}

std::vector<double> channel_samples(const Trajectory& traj, Channel channel)
{
    std::vector<double> out;
    out.reserve(traj.size());
    for (const StateVector& s : traj.states)
        out.push_back(channel == Channel::V1 ? s.v1 : s.v2);
    return out;
}

ModeEstimate dominant_mode(const Trajectory& traj, Channel channel, const ExtractOptions& options)
{
    const std::vector<double> x = channel_samples(traj, channel);
    const std::vector<ModeEstimate> modes = extract_modes(x, traj.dt, options);

    double scale = 0.0;
    for (const ModeEstimate& m : modes)
        scale = std::max(scale, std::abs(m.freq));

    const auto faster = [](const ModeEstimate& l, const ModeEstimate& r) {
        if (l.freq.imag() != r.freq.imag())
            return l.freq.imag() < r.freq.imag();
        return std::abs(l.amp) < std::abs(r.amp);
    };
    const ModeEstimate* best = nullptr;
    for (const ModeEstimate& m : modes)
        if (m.freq.real() >= 0.0 && (best == nullptr || faster(*best, m)))
            best = &m;

    // no appreciable growth: largest-amplitude mode with Re >= 0 (modes are
    // already sorted by amplitude)
    if (best == nullptr || best->freq.imag() <= 1e-6 * scale)
    {
        for (const ModeEstimate& m : modes)
            if (m.freq.real() >= 0.0)
                return m;
    }
    return best != nullptr ? *best : modes.front();
}

namespace
{

SweepPoint extract_point(const CircuitParams& p, const SweepProtocol& protocol)
{
    SweepPoint pt;
    const DerivedParams d = derive_params(p);
    pt.gamma = d.gamma;
    pt.phase = classify_phase(d);

    try
    {
        const RealMatrix4 K = build_generator(p);
        const double dt = max_stable_step(K) * (kStepsPerPeriod / protocol.steps_per_period);
        const double t_end = protocol.periods * 2.0 * std::numbers::pi / d.omega0;
        const Trajectory traj = simulate(p, protocol.x0, t_end, dt);

        const auto normalise = [&](ModeEstimate m) {
            m.freq /= d.omega0;
            return m;
        };

        if (pt.phase == PhaseClass::FullyBroken)
        {
            ExtractOptions opts = protocol.extract;
            opts.window = 0.5;
            const ModeEstimate m = normalise(dominant_mode(traj, protocol.channel, opts));
            pt.modes.push_back(m);
            pt.branch[0] = m.freq;
            return pt;
        }

        const std::vector<double> x = channel_samples(traj, protocol.channel);
        std::vector<ModeEstimate> modes = extract_modes(x, traj.dt, protocol.extract);
        for (ModeEstimate& m : modes)
            m = normalise(m);

        std::vector<ModeEstimate> positive;
        for (const ModeEstimate& m : modes)
            if (m.freq.real() >= 0.0)
                positive.push_back(m);
        if (positive.empty())
            throw ExtractionError(ExtractionFailure::IllConditioned,
                                  "no mode with non-negative frequency");

        if (pt.phase == PhaseClass::Symmetric)
        {
            // keep the two strongest positive-frequency modes, ordered by Re
            if (positive.size() > 2)
                positive.resize(2);
            std::sort(positive.begin(), positive.end(),
                      [](const ModeEstimate& l, const ModeEstimate& r) {
                          return l.freq.real() > r.freq.real();
                      });
            pt.branch[0] = positive.front().freq;
            // coalesced modes are reported as one merged value
            pt.branch[1] = positive.back().freq;
            pt.modes = std::move(modes);
            return pt;
        }

        // partially broken: the amplifying pair omega1, -conj(omega1)
        const auto amplifying =
            std::max_element(positive.begin(), positive.end(),
                             [](const ModeEstimate& l, const ModeEstimate& r) {
                                 return l.freq.imag() < r.freq.imag();
                             });
        pt.branch[0] = amplifying->freq;
        const Complex partner = -std::conj(amplifying->freq);
        pt.modes.push_back(*amplifying);
        for (const ModeEstimate& m : modes)
            if (m.freq == partner && m.freq != amplifying->freq)
                pt.modes.push_back(m);
    }
    catch (const std::exception& e)
    {
        pt.branch = {};
        pt.modes.clear();
        pt.error = e.what();
    }
    return pt;
}

} // namespace

std::vector<SweepPoint> sweep_extract(std::span<const CircuitParams> grid,
                                      const SweepProtocol& protocol)
{
    if (!(protocol.steps_per_period >= kStepsPerPeriod))
        throw std::invalid_argument("steps_per_period must be >= 64");
    if (!(protocol.periods > 0.0))
        throw std::invalid_argument("periods must be > 0");
    for (const CircuitParams& p : grid)
        validate(p);

    std::vector<SweepPoint> out(grid.size());
    const unsigned workers =
        std::max(1u, std::min<unsigned>(protocol.jobs, static_cast<unsigned>(grid.size())));
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t k = next++; k < grid.size(); k = next++)
            out[k] = extract_point(grid[k], protocol);
    };
    if (workers == 1)
    {
        work();
        return out;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back(work);
    pool.clear();
    return out;
}

} // namespace ptdimer
