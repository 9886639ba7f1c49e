#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ptdimer/circuit_model.hpp"
#include "ptdimer/mode_extraction.hpp"
#include "ptdimer/spectral.hpp"
#include "ptdimer/time_domain.hpp"
#include "ptdimer/trajectory_io.hpp"

namespace ptdimer::cli
{

namespace
{

using json = nlohmann::json;

/// Input error with the name of the offending field.
class InputError : public std::invalid_argument
{
public:
    InputError(const std::string& field, const std::string& what)
        : std::invalid_argument(field + ": " + what)
    {
    }
};

bool strip_suffix(std::string_view& s, std::string_view suffix)
{
    if (s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix)
    {
        s.remove_suffix(suffix.size());
        return true;
    }
    return false;
}

} // namespace

double parse_quantity(std::string_view text)
{
    std::string_view s = text;
    while (!s.empty() && s.front() == ' ')
        s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ')
        s.remove_suffix(1);

    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr == s.data())
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    std::string_view rest(ptr, static_cast<std::size_t>(s.data() + s.size() - ptr));

    for (std::string_view unit : {"Ohm", "ohm", "\u2126", "\u03A9", "H", "F", "s", "V", "A"})
        if (strip_suffix(rest, unit))
            break;

    double scale = 1.0;
    if (!rest.empty())
    {
        static const std::pair<std::string_view, double> prefixes[] = {
            {"p", 1e-12}, {"n", 1e-9}, {"u", 1e-6}, {"\u00B5", 1e-6}, {"\u03BC", 1e-6},
            {"m", 1e-3},  {"k", 1e3},  {"M", 1e6},  {"G", 1e9},
        };
        bool found = false;
        for (const auto& [prefix, factor] : prefixes)
        {
            if (rest == prefix)
            {
                scale = factor;
                found = true;
                break;
            }
        }
        if (!found)
            throw std::invalid_argument("unknown unit suffix in '" + std::string(text) + "'");
    }
    return value * scale;
}

std::map<std::string, std::string> flatten_config(std::string_view json_text)
{
    const json doc = json::parse(json_text);
    if (!doc.is_object())
        throw std::invalid_argument("config root must be a JSON object");

    const auto render = [](const json& v) -> std::string {
        if (v.is_string())
            return v.get<std::string>();
        if (v.is_boolean())
            return v.get<bool>() ? "true" : "false";
        if (v.is_number_integer())
            return std::to_string(v.get<long long>());
        if (v.is_number())
            return format_double(v.get<double>());
        throw std::invalid_argument("unsupported config value " + v.dump());
    };

    std::map<std::string, std::string> out;
    for (const auto& [section, body] : doc.items())
    {
        if (!body.is_object())
            throw std::invalid_argument("config section '" + section + "' must be an object");
        for (const auto& [key, value] : body.items())
        {
            std::string rendered;
            if (value.is_array())
            {
                for (std::size_t k = 0; k < value.size(); ++k)
                    rendered += (k ? "," : "") + render(value[k]);
            }
            else
            {
                rendered = render(value);
            }
            out[section + "." + key] = rendered;
        }
    }
    return out;
}

namespace
{

using Settings = std::map<std::string, std::string>;

/// Config-file layer overlaid by command-line flags.
struct Layers
{
    Settings config;
    Settings flags;

    std::optional<std::string> get(const std::string& key) const
    {
        if (auto it = flags.find(key); it != flags.end())
            return it->second;
        if (auto it = config.find(key); it != config.end())
            return it->second;
        return std::nullopt;
    }

    /// Resolves a pair of mutually exclusive keys; flags win over the config
    /// file, but both members of the pair in one layer is an error.
    std::optional<std::pair<std::string, std::string>> either(const std::string& a,
                                                              const std::string& b) const
    {
        for (const Settings* layer : {&flags, &config})
        {
            const bool has_a = layer->count(a) > 0;
            const bool has_b = layer->count(b) > 0;
            if (has_a && has_b)
                throw InputError(a, "cannot be combined with " + b);
            if (has_a)
                return std::make_pair(a, layer->at(a));
            if (has_b)
                return std::make_pair(b, layer->at(b));
        }
        return std::nullopt;
    }
};

double quantity(const std::string& key, const std::string& text)
{
    try
    {
        return parse_quantity(text);
    }
    catch (const std::invalid_argument& e)
    {
        throw InputError(key, e.what());
    }
}

double quantity_or(const Layers& l, const std::string& key, double fallback)
{
    const auto v = l.get(key);
    return v ? quantity(key, *v) : fallback;
}

std::size_t count_or(const Layers& l, const std::string& key, std::size_t fallback)
{
    const auto v = l.get(key);
    if (!v)
        return fallback;
    const double x = quantity(key, *v);
    if (!(x >= 0.0) || x != std::floor(x))
        throw InputError(key, "must be a non-negative integer");
    return static_cast<std::size_t>(x);
}

bool flag_or(const Layers& l, const std::string& key, bool fallback)
{
    const auto v = l.get(key);
    if (!v)
        return fallback;
    if (*v == "true" || *v == "1")
        return true;
    if (*v == "false" || *v == "0")
        return false;
    throw InputError(key, "expected true or false");
}

std::vector<double> list_of(const std::string& key, const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(quantity(key, item));
    if (out.empty())
        throw InputError(key, "empty list");
    return out;
}

CircuitParams circuit_from(const Layers& l)
{
    CircuitParams p;
    p.L = quantity_or(l, "circuit.L", 7.91e-3);
    p.C = quantity_or(l, "circuit.C", 10.14e-9);
    if (const auto m = l.either("circuit.M", "circuit.mu"))
        p.M = m->first == "circuit.M" ? quantity(m->first, m->second)
                                      : quantity(m->first, m->second) * p.L;
    else
        p.M = 0.6 * p.L;
    p.R_L = quantity_or(l, "circuit.R_L", 0.0);
    p.compensation = quantity_or(l, "circuit.compensation", 1.0);
    if (const auto r = l.either("circuit.R", "circuit.gamma"))
    {
        if (r->first == "circuit.R")
        {
            p.R = quantity(r->first, r->second);
        }
        else
        {
            validate(CircuitParams{p.L, p.C, p.M, 1.0, p.R_L, p.compensation});
            p = p.with_gamma(quantity(r->first, r->second));
        }
    }
    else
    {
        p.R = 1e3;
    }
    validate(p);
    return p;
}

ExtractOptions extract_from(const Layers& l, ExtractOptions o)
{
    o.max_order = count_or(l, "extract.max_order", o.max_order);
    o.sv_threshold = quantity_or(l, "extract.sv_threshold", o.sv_threshold);
    o.residual_tolerance = quantity_or(l, "extract.residual_tolerance", o.residual_tolerance);
    o.window = quantity_or(l, "extract.window", o.window);
    o.max_samples = count_or(l, "extract.max_samples", o.max_samples);
    if (o.max_order == 0)
        throw InputError("extract.max_order", "must be >= 1");
    if (!(o.window > 0.0 && o.window <= 1.0))
        throw InputError("extract.window", "must lie in (0, 1]");
    return o;
}

std::string output_format(const Layers& l)
{
    const std::string f = l.get("output.format").value_or("csv");
    if (f != "csv" && f != "json" && f != "text")
        throw InputError("output.format", "expected csv, json or text");
    return f;
}

/// Writes to output.path when given, otherwise to `fallback`.
template <typename Fn>
void emit(const Layers& l, std::ostream& fallback, Fn&& body)
{
    if (const auto path = l.get("output.path"); path && !path->empty() && *path != "-")
    {
        std::ofstream file(*path, std::ios::binary);
        if (!file)
            throw InputError("output.path", "cannot open '" + *path + "' for writing");
        body(file);
        return;
    }
    body(fallback);
}

json complex_array(const std::array<Complex, 4>& w, double scale, bool imag)
{
    json a = json::array();
    for (const Complex& x : w)
        a.push_back((imag ? x.imag() : x.real()) / scale);
    return a;
}

json number_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

int report_advisories(const CircuitParams& p, std::ostream& err)
{
    int code = kExitOk;
    for (const std::string& msg : advisories(p))
    {
        err << "warning: " << msg << '\n';
        code = kExitWarning;
    }
    return code;
}

std::string fixed4(double v)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

std::string complex_text(Complex w)
{
    return format_double(w.real()) + (w.imag() < 0.0 ? " - " : " + ") +
           format_double(std::abs(w.imag())) + "i";
}

// ---------------------------------------------------------------- spectrum

int cmd_spectrum(const Layers& l, std::ostream& out, std::ostream& err)
{
    const CircuitParams p = circuit_from(l);
    const std::string format = l.get("output.format").value_or("text");
    const DerivedParams d = derive_params(p);
    const Spectrum analytic = analytic_eigenfrequencies(d);
    const Spectrum numeric = numeric_eigenfrequencies(build_hamiltonian(p));
    const int code = report_advisories(p, err);

    emit(l, out, [&](std::ostream& os) {
        if (format == "json")
        {
            json j;
            j["L"] = p.L;
            j["C"] = p.C;
            j["M"] = p.M;
            j["R"] = number_or_null(p.R);
            j["omega0"] = d.omega0;
            j["f0"] = d.omega0 / (2.0 * std::numbers::pi);
            j["mu"] = d.mu;
            j["gamma"] = d.gamma;
            j["tau_LR"] = number_or_null(d.tau_LR);
            j["gamma_pt"] = d.gamma_pt;
            j["gamma_0"] = d.gamma_0;
            j["phase"] = std::string(to_string(analytic.phase));
            j["instability_rate"] = analytic.instability_rate();
            j["analytic"] = {{"omega_re", complex_array(analytic.omega, 1.0, false)},
                             {"omega_im", complex_array(analytic.omega, 1.0, true)}};
            j["numeric"] = {{"omega_re", complex_array(numeric.omega, 1.0, false)},
                            {"omega_im", complex_array(numeric.omega, 1.0, true)}};
            os << j.dump(2) << '\n';
            return;
        }
        os << "L        = " << format_double(p.L) << " H\n"
           << "C        = " << format_double(p.C) << " F\n"
           << "M        = " << format_double(p.M) << " H\n"
           << "R        = " << format_double(p.R) << " Ohm\n"
           << "omega0   = " << format_double(d.omega0) << " rad/s (f0 = "
           << format_double(d.omega0 / (2.0 * std::numbers::pi)) << " Hz)\n"
           << "mu       = " << format_double(d.mu) << '\n'
           << "gamma    = " << fixed4(d.gamma) << " (" << format_double(d.gamma) << ")\n"
           << "tau_LR   = " << format_double(d.tau_LR) << " s\n"
           << "gamma_PT = " << fixed4(d.gamma_pt) << " (" << format_double(d.gamma_pt) << ")\n"
           << "gamma_0  = " << fixed4(d.gamma_0) << " (" << format_double(d.gamma_0) << ")\n"
           << "phase    = " << to_string(analytic.phase) << '\n'
           << "instability_rate = " << format_double(analytic.instability_rate()) << " 1/s\n";
        os << "omega_k / omega0      analytic | numeric\n";
        for (int k = 0; k < 4; ++k)
        {
            os << "  w" << (k + 1) << " = " << complex_text(analytic.omega[k] / d.omega0) << " | "
               << complex_text(numeric.omega[k] / d.omega0) << '\n';
        }
    });
    return code;
}

// ---------------------------------------------------------------------- ep

int cmd_ep(const Layers& l, std::ostream& out, std::ostream& err)
{
    double mu = 0.0;
    if (const auto m = l.either("circuit.M", "circuit.mu"); m && m->first == "circuit.mu")
        mu = quantity(m->first, m->second);
    else
        mu = derive_params(circuit_from(l)).mu;
    if (!(mu >= 0.0 && mu < 1.0))
        throw InputError("mu", "mu must be < 1 and >= 0");
    const auto [gpt, g0] = exceptional_points(mu);
    int code = kExitOk;
    if (mu == 0.0)
    {
        err << "warning: decoupled oscillators (mu = 0)\n";
        code = kExitWarning;
    }
    if (mu > 0.999)
    {
        err << "warning: mu > 0.999, exceptional points diverge\n";
        code = kExitWarning;
    }
    emit(l, out, [&](std::ostream& os) {
        if (l.get("output.format").value_or("text") == "json")
        {
            os << json{{"mu", mu}, {"gamma_pt", gpt}, {"gamma_0", g0}}.dump(2) << '\n';
            return;
        }
        os << "mu       = " << format_double(mu) << '\n'
           << "gamma_PT = " << fixed4(gpt) << " (" << format_double(gpt) << ")\n"
           << "gamma_0  = " << fixed4(g0) << " (" << format_double(g0) << ")\n";
    });
    return code;
}

// ------------------------------------------------------------------- sweep

std::vector<CircuitParams> sweep_grid(const Layers& l, const CircuitParams& base)
{
    std::vector<CircuitParams> grid;
    if (flag_or(l, "sweep.by_resistance", false))
    {
        const auto text = l.get("sweep.R");
        if (!text)
            throw InputError("sweep.R", "--by-resistance needs an R list");
        for (double R : list_of("sweep.R", *text))
        {
            CircuitParams p = base;
            p.R = R;
            validate(p);
            grid.push_back(p);
        }
        std::sort(grid.begin(), grid.end(),
                  [](const CircuitParams& a, const CircuitParams& b) { return a.R > b.R; });
        return grid;
    }

    const double lo = quantity_or(l, "sweep.gamma_min", 0.0);
    const double hi = quantity_or(l, "sweep.gamma_max", 3.5);
    std::size_t points = count_or(l, "sweep.points", 100);
    if (!(lo >= 0.0))
        throw InputError("sweep.gamma_min", "must be >= 0");
    if (!(hi >= lo))
        throw InputError("sweep.gamma_max", "must be >= gamma_min");
    if (points == 0)
        throw InputError("sweep.points", "must be >= 1");
    if (hi == lo)
        points = 1;
    for (std::size_t k = 0; k < points; ++k)
    {
        const double g = points == 1 ? lo
                                     : lo + (hi - lo) * static_cast<double>(k) /
                                                static_cast<double>(points - 1);
        grid.push_back(base.with_gamma(g));
    }
    return grid;
}

int cmd_sweep(const Layers& l, std::ostream& out, std::ostream& err)
{
    const CircuitParams base = circuit_from(l);
    const std::string format = output_format(l);
    const std::vector<CircuitParams> grid = sweep_grid(l, base);
    const bool with_extraction = flag_or(l, "sweep.with_extraction", false);
    int code = report_advisories(base, err);

    const DerivedParams d0 = derive_params(base);
    std::vector<Spectrum> spectra;
    std::vector<double> gammas;
    for (const CircuitParams& p : grid)
    {
        const DerivedParams d = derive_params(p);
        gammas.push_back(d.gamma);
        spectra.push_back(analytic_eigenfrequencies(d));
    }
    spectra = continue_branches(spectra);

    std::vector<SweepPoint> extracted;
    if (with_extraction)
    {
        SweepProtocol protocol;
        protocol.periods = quantity_or(l, "simulate.periods", protocol.periods);
        protocol.steps_per_period =
            quantity_or(l, "simulate.steps_per_period", protocol.steps_per_period);
        protocol.jobs = static_cast<unsigned>(count_or(l, "sweep.jobs", 1));
        protocol.extract = extract_from(l, protocol.extract);
        if (!(protocol.steps_per_period >= kStepsPerPeriod))
            throw InputError("simulate.steps_per_period", "must be >= 64");
        if (!(protocol.periods > 0.0))
            throw InputError("simulate.periods", "must be > 0");
        extracted = sweep_extract(grid, protocol);
        for (const SweepPoint& pt : extracted)
        {
            if (!pt.error.empty())
            {
                err << "warning: extraction failed at gamma = " << format_double(pt.gamma)
                    << ": " << pt.error << '\n';
                code = kExitWarning;
            }
        }
    }

    const double w0 = d0.omega0;
    emit(l, out, [&](std::ostream& os) {
        if (format == "json")
        {
            json j;
            j["mu"] = d0.mu;
            j["omega0"] = w0;
            j["gamma_pt"] = d0.gamma_pt;
            j["gamma_0"] = d0.gamma_0;
            json points = json::array();
            for (std::size_t k = 0; k < spectra.size(); ++k)
            {
                json pt;
                pt["gamma"] = gammas[k];
                pt["omega_re"] = complex_array(spectra[k].omega, w0, false);
                pt["omega_im"] = complex_array(spectra[k].omega, w0, true);
                pt["phase"] = std::string(to_string(spectra[k].phase));
                if (with_extraction)
                {
                    json ext;
                    json re = json::array();
                    json im = json::array();
                    for (const auto& b : extracted[k].branch)
                    {
                        re.push_back(b ? json(b->real()) : json(nullptr));
                        im.push_back(b ? json(b->imag()) : json(nullptr));
                    }
                    ext["omega_re"] = re;
                    ext["omega_im"] = im;
                    if (!extracted[k].error.empty())
                        ext["error"] = extracted[k].error;
                    pt["extracted"] = ext;
                }
                points.push_back(pt);
            }
            j["points"] = points;
            os << j.dump(2) << '\n';
            return;
        }

        os << "gamma,re_w1/w0,im_w1/w0,re_w2/w0,im_w2/w0,phase";
        if (with_extraction)
            os << ",ext_re_w1/w0,ext_im_w1/w0,ext_re_w2/w0,ext_im_w2/w0";
        os << '\n';
        for (std::size_t k = 0; k < spectra.size(); ++k)
        {
            const Spectrum& s = spectra[k];
            os << format_double(gammas[k]) << ',' << format_double(s.omega[0].real() / w0) << ','
               << format_double(s.omega[0].imag() / w0) << ','
               << format_double(s.omega[1].real() / w0) << ','
               << format_double(s.omega[1].imag() / w0) << ',' << to_string(s.phase);
            if (with_extraction)
            {
                for (const auto& b : extracted[k].branch)
                {
                    if (b)
                        os << ',' << format_double(b->real()) << ',' << format_double(b->imag());
                    else
                        os << ",,";
                }
            }
            os << '\n';
        }
    });
    return code;
}

// ---------------------------------------------------------------- simulate

StateVector initial_state(const Layers& l)
{
    const auto text = l.get("simulate.x0");
    if (!text)
        return {1.0, 0.0, 0.0, 0.0};
    const std::vector<double> v = list_of("simulate.x0", *text);
    if (v.size() != 4)
        throw InputError("simulate.x0", "expected four values v1,v2,i1,i2");
    return {v[0], v[1], v[2], v[3]};
}

int cmd_simulate(const Layers& l, std::ostream& out, std::ostream& err)
{
    const CircuitParams p = circuit_from(l);
    const DerivedParams d = derive_params(p);
    const ExtendedParams e{p};
    const RealMatrix4 K = build_extended_generator(e);

    double t_end = 0.0;
    if (const auto t = l.either("simulate.t_end", "simulate.periods"))
        t_end = t->first == "simulate.t_end"
                    ? quantity(t->first, t->second)
                    : quantity(t->first, t->second) * 2.0 * std::numbers::pi / d.omega0;
    else
        t_end = 100.0 * 2.0 * std::numbers::pi / d.omega0;

    double dt = 0.0;
    if (const auto s = l.either("simulate.dt", "simulate.steps_per_period"))
        dt = s->first == "simulate.dt"
                 ? quantity(s->first, s->second)
                 : max_stable_step(K) * kStepsPerPeriod / quantity(s->first, s->second);
    else
        dt = max_stable_step(K);

    const StateVector x0 = initial_state(l);
    int code = report_advisories(p, err);
    Trajectory traj;
    try
    {
        traj = e.residual() > 0.0 ? simulate_extended(e, x0, t_end, dt)
                                  : simulate(p, x0, t_end, dt);
    }
    catch (const SimulationError& ex)
    {
        throw InputError("simulate", ex.what());
    }
    if (traj.truncated)
    {
        err << "warning: overflow guard reached at t = " << format_double(traj.t.back())
            << " s; trajectory truncated (" << traj.size() << " samples)\n";
        code = kExitWarning;
    }
    emit(l, out, [&](std::ostream& os) { write_trajectory_csv(os, traj); });
    return code;
}

// ----------------------------------------------------------------- extract

int cmd_extract(const Layers& l, const std::string& input, std::ostream& out, std::ostream& err)
{
    std::ifstream file(input, std::ios::binary);
    if (!file)
        throw InputError("input", "cannot open '" + input + "'");
    Trajectory traj;
    try
    {
        traj = read_trajectory_csv(file);
    }
    catch (const CsvError& e)
    {
        throw InputError(input, e.what());
    }
    if (traj.size() < 2)
        throw InputError(input, "need at least two samples");

    const ExtractOptions opts = extract_from(l, ExtractOptions{});
    const std::string which = l.get("extract.channel").value_or("both");
    std::vector<std::pair<std::string, Channel>> channels;
    if (which == "v1" || which == "both")
        channels.emplace_back("v1", Channel::V1);
    if (which == "v2" || which == "both")
        channels.emplace_back("v2", Channel::V2);
    if (channels.empty())
        throw InputError("extract.channel", "expected v1, v2 or both");

    int code = kExitOk;
    json report;
    report["dt"] = traj.dt;
    report["samples"] = traj.size();
    for (const auto& [name, channel] : channels)
    {
        json modes = json::array();
        try
        {
            for (const ModeEstimate& m :
                 extract_modes(channel_samples(traj, channel), traj.dt, opts))
            {
                modes.push_back({{"omega_re", m.freq.real()},
                                 {"omega_im", m.freq.imag()},
                                 {"amp_re", m.amp.real()},
                                 {"amp_im", m.amp.imag()},
                                 {"residual", m.residual}});
            }
            report["channels"][name] = {{"modes", modes}};
        }
        catch (const ExtractionError& e)
        {
            err << "warning: " << name << ": " << e.what() << '\n';
            report["channels"][name] = {{"modes", modes}, {"error", e.what()}};
            code = kExitWarning;
        }
    }
    emit(l, out, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
    return code;
}

// ----------------------------------------------------------------- options

struct Bindings
{
    std::map<std::string, std::string> raw;
    std::vector<std::pair<std::string, CLI::Option*>> options;

    void add(CLI::App* app, const std::string& flag, const std::string& key,
             const std::string& help)
    {
        options.emplace_back(key, app->add_option(flag, raw[key], help));
    }

    void add_flag(CLI::App* app, const std::string& flag, const std::string& key,
                  const std::string& help)
    {
        auto* opt = app->add_flag_callback(flag, [this, key] { raw[key] = "true"; }, help);
        options.emplace_back(key, opt);
    }

    Settings collected() const
    {
        Settings s;
        for (const auto& [key, opt] : options)
            if (opt->count() > 0)
                s[key] = raw.at(key);
        return s;
    }
};

void circuit_options(CLI::App* app, Bindings& b)
{
    b.add(app, "--L", "circuit.L", "self inductance, e.g. 7.91mH");
    b.add(app, "--C", "circuit.C", "capacitance, e.g. 10.14nF");
    b.add(app, "--M", "circuit.M", "mutual inductance, e.g. 4.746mH");
    b.add(app, "--mu", "circuit.mu", "coupling M/L (alternative to --M)");
    b.add(app, "--R", "circuit.R", "gain/loss resistance, e.g. 1kOhm");
    b.add(app, "--gamma", "circuit.gamma", "gain-loss strength sqrt(L/C)/R (alternative to --R)");
    b.add(app, "--rl", "circuit.R_L", "series resistance of each inductor");
    b.add(app, "--compensation", "circuit.compensation", "fraction of R_L cancelled, 0..1");
}

void output_options(CLI::App* app, Bindings& b)
{
    b.add(app, "-o,--output", "output.path", "output file (default stdout)");
    b.add(app, "--format", "output.format", "csv | json (sweep), text | json (reports)");
}

void extract_options(CLI::App* app, Bindings& b)
{
    b.add(app, "--max-order", "extract.max_order", "largest number of exponentials");
    b.add(app, "--sv-threshold", "extract.sv_threshold", "relative singular-value cut");
    b.add(app, "--residual-tolerance", "extract.residual_tolerance", "largest relative residual");
    b.add(app, "--window", "extract.window", "fraction of the record, from the end, to analyse");
    b.add(app, "--max-samples", "extract.max_samples", "decimate the window to this many samples");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Gain/loss LC dimer: spectra, exceptional points, simulation, mode extraction",
                 "ptdimer"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags override its fields");

    Bindings b;
    auto* spectrum = app.add_subcommand("spectrum", "derived parameters, EPs and eigenfrequencies");
    circuit_options(spectrum, b);
    output_options(spectrum, b);

    auto* ep = app.add_subcommand("ep", "exceptional-point locations for a coupling");
    circuit_options(ep, b);
    output_options(ep, b);

    auto* sweep = app.add_subcommand("sweep", "eigenfrequency diagram versus gamma");
    circuit_options(sweep, b);
    output_options(sweep, b);
    extract_options(sweep, b);
    b.add(sweep, "--gamma-min", "sweep.gamma_min", "first gamma (default 0)");
    b.add(sweep, "--gamma-max", "sweep.gamma_max", "last gamma (default 3.5)");
    b.add(sweep, "--points", "sweep.points", "number of gamma values (default 100)");
    b.add_flag(sweep, "--by-resistance", "sweep.by_resistance", "sweep over --R-list instead");
    b.add(sweep, "--R-list", "sweep.R", "comma-separated resistances");
    b.add_flag(sweep, "--with-extraction", "sweep.with_extraction",
               "simulate and fit every point, adding ext_* columns");
    b.add(sweep, "--jobs", "sweep.jobs", "worker threads for extraction");
    b.add(sweep, "--periods", "simulate.periods", "record length in 2pi/omega0 units");
    b.add(sweep, "--steps-per-period", "simulate.steps_per_period", "integration resolution");

    auto* simulate_cmd = app.add_subcommand("simulate", "integrate the circuit, write CSV");
    circuit_options(simulate_cmd, b);
    output_options(simulate_cmd, b);
    b.add(simulate_cmd, "--t-end", "simulate.t_end", "end time, e.g. 5ms");
    b.add(simulate_cmd, "--periods", "simulate.periods", "end time in 2pi/omega0 units");
    b.add(simulate_cmd, "--dt", "simulate.dt", "time step, e.g. 100ns");
    b.add(simulate_cmd, "--steps-per-period", "simulate.steps_per_period",
          "steps per shortest modal period (>= 64)");
    b.add(simulate_cmd, "--x0", "simulate.x0", "initial state v1,v2,i1,i2");

    auto* extract = app.add_subcommand("extract", "fit complex frequencies to a trajectory CSV");
    std::string input;
    extract->add_option("input", input, "trajectory CSV")->required();
    output_options(extract, b);
    extract_options(extract, b);
    b.add(extract, "--channel", "extract.channel", "v1 | v2 | both");

    try
    {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitInvalid;
    }

    try
    {
        Layers layers;
        if (!config_path.empty())
        {
            std::ifstream file(config_path, std::ios::binary);
            if (!file)
                throw InputError("config", "cannot open '" + config_path + "'");
            std::stringstream text;
            text << file.rdbuf();
            try
            {
                layers.config = flatten_config(text.str());
            }
            catch (const std::exception& e)
            {
                throw InputError("config", e.what());
            }
        }
        layers.flags = b.collected();

        if (spectrum->parsed())
            return cmd_spectrum(layers, out, err);
        if (ep->parsed())
            return cmd_ep(layers, out, err);
        if (sweep->parsed())
            return cmd_sweep(layers, out, err);
        if (simulate_cmd->parsed())
            return cmd_simulate(layers, out, err);
        if (extract->parsed())
            return cmd_extract(layers, input, out, err);
    }
    catch (const ParameterError& e)
    {
        err << "error: " << e.field() << ": " << e.what() << '\n';
        return kExitInvalid;
    }
    catch (const std::invalid_argument& e)
    {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
    return kExitInvalid;
}

} // namespace ptdimer::cli
