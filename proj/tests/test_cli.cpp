#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "ptdimer/spectral.hpp"
#include "ptdimer/trajectory_io.hpp"

using namespace ptdimer;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace
{

struct Outcome
{
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args)
{
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "ptdimer_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

struct Row
{
    double gamma;
    double re1, im1, re2, im2;
    std::string phase;
    std::vector<std::string> extra;
};

std::vector<Row> parse_sweep(const std::string& csv)
{
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::vector<Row> rows;
    while (std::getline(in, line))
    {
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            f.push_back(cell);
        if (!line.empty() && line.back() == ',')
            f.emplace_back();
        Row r{std::stod(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3]),
              std::stod(f[4]), f[5], {f.begin() + 6, f.end()}};
        rows.push_back(r);
    }
    return rows;
}

const CircuitParams kExperiment{7.91e-3, 10.14e-9, 4.746e-3, 1e3};

} // namespace

TEST_CASE("quantities with SI prefixes and units")
{
    CHECK(cli::parse_quantity("7.91mH") == doctest::Approx(7.91e-3));
    CHECK(cli::parse_quantity("10.14n") == doctest::Approx(10.14e-9));
    CHECK(cli::parse_quantity("1k\u2126") == doctest::Approx(1e3));
    CHECK(cli::parse_quantity("1k\u03A9") == doctest::Approx(1e3));
    CHECK(cli::parse_quantity("2.2kOhm") == doctest::Approx(2.2e3));
    CHECK(cli::parse_quantity("350") == 350.0);
    CHECK(cli::parse_quantity("2.5e-3") == 2.5e-3);
    CHECK(cli::parse_quantity("4.7µF") == doctest::Approx(4.7e-6));
    CHECK(cli::parse_quantity("4.7uF") == doctest::Approx(4.7e-6));
    CHECK(cli::parse_quantity("1MOhm") == doctest::Approx(1e6));
    CHECK(cli::parse_quantity("1mOhm") == doctest::Approx(1e-3));
    CHECK(cli::parse_quantity("100ns") == doctest::Approx(1e-7));
    CHECK(cli::parse_quantity(" 3p ") == doctest::Approx(3e-12));
    CHECK_THROWS_AS(cli::parse_quantity("1K"), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_quantity("abc"), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_quantity(""), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_quantity("1mm"), std::invalid_argument);
}

TEST_CASE("config flattening")
{
    const auto flat = cli::flatten_config(
        R"({"circuit": {"L": "7.91mH", "mu": 0.6, "R": 1000}, "simulate": {"x0": [1, 0, 0.5, 0]}, "sweep": {"with_extraction": true}})");
    CHECK(flat.at("circuit.L") == "7.91mH");
    CHECK(std::stod(flat.at("circuit.mu")) == 0.6);
    CHECK(flat.at("circuit.R") == "1000");
    CHECK(flat.at("simulate.x0") == "1,0,0.5,0");
    CHECK(flat.at("sweep.with_extraction") == "true");
    CHECK_THROWS(cli::flatten_config("[1, 2]"));
    CHECK_THROWS(cli::flatten_config("{\"circuit\": 3}"));
    CHECK_THROWS(cli::flatten_config("{not json"));
}

TEST_CASE("spectrum")
{
    SUBCASE("reported circuit")
    {
        const Outcome o =
            invoke({"spectrum", "--L", "7.91mH", "--C", "10.14nF", "--M", "4.746mH", "--R", "1kΩ"});
        CHECK(o.code == cli::kExitOk);
        CHECK(o.out.find("gamma_PT = 0.7906") != std::string::npos);
        CHECK(o.out.find("gamma_0  = 2.3717") != std::string::npos);
        CHECK(o.out.find("phase    = partially_broken") != std::string::npos);
        CHECK(o.err.empty());
    }
    SUBCASE("json report")
    {
        const Outcome o = invoke({"spectrum", "--gamma", "0.5", "--format", "json"});
        REQUIRE(o.code == cli::kExitOk);
        const json j = json::parse(o.out);
        CHECK(j["gamma"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(j["phase"] == "symmetric");
        const auto analytic = j["analytic"]["omega_re"].get<std::vector<double>>();
        const auto numeric = j["numeric"]["omega_re"].get<std::vector<double>>();
        REQUIRE(analytic.size() == 4);
        for (int k = 0; k < 4; ++k)
            CHECK(numeric[k] == doctest::Approx(analytic[k]).epsilon(1e-10));
    }
    SUBCASE("decoupled oscillators warn")
    {
        const Outcome o = invoke({"spectrum", "--M", "0"});
        CHECK(o.code == cli::kExitWarning);
        CHECK(o.out.find("gamma_PT = 0.0000") != std::string::npos);
        CHECK(o.err.find("decoupled oscillators") != std::string::npos);
    }
    SUBCASE("invalid coupling")
    {
        const Outcome o = invoke({"spectrum", "--L", "7.91mH", "--M", "7.91mH"});
        CHECK(o.code == cli::kExitInvalid);
        CHECK(o.err.find("mu must be < 1") != std::string::npos);
        CHECK(o.err.find("M") != std::string::npos);
    }
    SUBCASE("conflicting and malformed inputs")
    {
        CHECK(invoke({"spectrum", "--M", "1mH", "--mu", "0.2"}).code == cli::kExitInvalid);
        CHECK(invoke({"spectrum", "--R", "1k", "--gamma", "0.2"}).code == cli::kExitInvalid);
        const Outcome bad = invoke({"spectrum", "--C", "10x"});
        CHECK(bad.code == cli::kExitInvalid);
        CHECK(bad.err.find("circuit.C") != std::string::npos);
        CHECK(invoke({"spectrum", "--R", "-5"}).code == cli::kExitInvalid);
    }
    SUBCASE("config file with flag override")
    {
        const fs::path cfg = scratch("spectrum.json");
        std::ofstream(cfg) << R"({"circuit": {"L": "7.91mH", "C": "10.14nF", "mu": 0.6, "gamma": 3.0}})";
        const Outcome from_file = invoke({"--config", cfg.string(), "spectrum"});
        CHECK(from_file.code == cli::kExitOk);
        CHECK(from_file.out.find("fully_broken") != std::string::npos);
        const Outcome overridden = invoke({"--config", cfg.string(), "spectrum", "--R", "10k"});
        CHECK(overridden.out.find("phase    = symmetric") != std::string::npos);
        CHECK(invoke({"--config", scratch("missing.json").string(), "spectrum"}).code ==
              cli::kExitInvalid);
    }
}

TEST_CASE("ep")
{
    const Outcome o = invoke({"ep", "--mu", "0.6", "--format", "json"});
    REQUIRE(o.code == cli::kExitOk);
    const json j = json::parse(o.out);
    const auto [gpt, g0] = exceptional_points(0.6);
    CHECK(j["gamma_pt"].get<double>() == gpt);
    CHECK(j["gamma_0"].get<double>() == g0);
    CHECK(invoke({"ep", "--mu", "1"}).code == cli::kExitInvalid);
    CHECK(invoke({"ep", "--mu", "0"}).code == cli::kExitWarning);
    CHECK(invoke({"ep", "--M", "4.746mH"}).out.find("0.7906") != std::string::npos);
}

TEST_CASE("sweep")
{
    SUBCASE("merge points sit on the exceptional points")
    {
        const Outcome o = invoke({"sweep", "--mu", "0.6", "--gamma-min", "0", "--gamma-max", "3.5",
                                  "--points", "100"});
        REQUIRE(o.code == cli::kExitOk);
        CHECK(o.out.rfind("gamma,re_w1/w0,im_w1/w0,re_w2/w0,im_w2/w0,phase\n", 0) == 0);
        const auto rows = parse_sweep(o.out);
        REQUIRE(rows.size() == 100);
        const double step = 3.5 / 99;
        const auto [gpt, g0] = exceptional_points(0.6);

        std::size_t re_merge = rows.size();
        std::size_t re_zero = rows.size();
        for (std::size_t k = 0; k < rows.size(); ++k)
        {
            if (re_merge == rows.size() && std::abs(rows[k].re1 - rows[k].re2) < 1e-9)
                re_merge = k;
            if (re_zero == rows.size() && std::abs(rows[k].re1) < 1e-12 &&
                std::abs(rows[k].re2) < 1e-12)
                re_zero = k;
        }
        REQUIRE(re_merge < rows.size());
        REQUIRE(re_zero < rows.size());
        CHECK(std::abs(rows[re_merge].gamma - gpt) <= step);
        CHECK(std::abs(rows[re_zero].gamma - g0) <= step);
        // imaginary parts leave zero at the first EP
        CHECK(std::abs(rows[re_merge - 1].im1) < 1e-12);
        CHECK(std::abs(rows[re_merge].im1) > 1e-3);
        CHECK(rows.front().phase == "symmetric");
        CHECK(rows[re_merge].phase == "partially_broken");
        CHECK(rows.back().phase == "fully_broken");
    }
    SUBCASE("degenerate range gives the Hermitian frequencies")
    {
        const Outcome o = invoke({"sweep", "--mu", "0.6", "--gamma-min", "0", "--gamma-max", "0"});
        const auto rows = parse_sweep(o.out);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].re1 == doctest::Approx(1 / std::sqrt(0.4)).epsilon(1e-14));
        CHECK(rows[0].re2 == doctest::Approx(1 / std::sqrt(1.6)).epsilon(1e-14));
        CHECK(rows[0].im1 == 0.0);
    }
    SUBCASE("resistance list")
    {
        const Outcome o = invoke({"sweep", "--by-resistance", "--R-list", "300,2k,500"});
        REQUIRE(o.code == cli::kExitOk);
        const auto rows = parse_sweep(o.out);
        REQUIRE(rows.size() == 3);
        CHECK(rows[0].gamma < rows[1].gamma);
        CHECK(rows[1].gamma < rows[2].gamma);
        CHECK(invoke({"sweep", "--by-resistance"}).code == cli::kExitInvalid);
    }
    SUBCASE("json output")
    {
        const Outcome o = invoke({"sweep", "--points", "5", "--format", "json"});
        const json j = json::parse(o.out);
        REQUIRE(j["points"].size() == 5);
        CHECK(j["points"][0].contains("gamma"));
        CHECK(j["points"][0]["omega_re"].size() == 4);
        CHECK(j["points"][4]["phase"] == "fully_broken");
    }
    SUBCASE("extraction columns agree with the closed form")
    {
        const Outcome o = invoke({"sweep", "--points", "6", "--gamma-max", "3.5",
                                  "--with-extraction", "--jobs", "2"});
        REQUIRE(o.code == cli::kExitOk);
        CHECK(o.out.find(",ext_re_w1/w0,ext_im_w1/w0,ext_re_w2/w0,ext_im_w2/w0\n") !=
              std::string::npos);
        const auto rows = parse_sweep(o.out);
        REQUIRE(rows.size() == 6);
        for (const Row& r : rows)
        {
            REQUIRE(r.extra.size() == 4);
            REQUIRE_FALSE(r.extra[0].empty());
            const std::complex<double> ext(std::stod(r.extra[0]), std::stod(r.extra[1]));
            const std::complex<double> ref(r.re1, r.im1);
            if (r.phase == "symmetric")
            {
                CHECK(std::abs(ext - ref) <= 0.01);
                CHECK_FALSE(r.extra[2].empty());
            }
            else
            {
                // the amplifying branch
                CHECK(std::abs(ext.real() - std::abs(r.re1)) <= 0.01);
                CHECK(std::abs(ext.imag() - std::max(r.im1, r.im2)) <= 0.01);
                CHECK(r.extra[2].empty());
            }
        }
    }
    SUBCASE("failed extraction leaves empty fields")
    {
        const Outcome o =
            invoke({"sweep", "--points", "2", "--gamma-max", "0.3", "--with-extraction", "--periods",
                    "0.05"});
        CHECK(o.code == cli::kExitWarning);
        const auto rows = parse_sweep(o.out);
        REQUIRE(rows.size() == 2);
        for (const Row& r : rows)
            for (const std::string& cell : r.extra)
                CHECK(cell.empty());
        CHECK(o.err.find("extraction failed") != std::string::npos);
    }
    SUBCASE("worker count leaves the output unchanged")
    {
        const std::vector<std::string> base{"sweep", "--points", "4", "--gamma-max", "1.2",
                                            "--with-extraction", "--periods", "30"};
        auto parallel = base;
        parallel.insert(parallel.end(), {"--jobs", "3"});
        CHECK(invoke(base).out == invoke(parallel).out);
    }
}

TEST_CASE("simulate")
{
    SUBCASE("lossless run conserves the energy column")
    {
        const fs::path file = scratch("hermitian.csv");
        const Outcome o = invoke({"simulate", "--gamma", "0", "--steps-per-period", "512",
                                  "--periods", "100", "-o", file.string()});
        REQUIRE(o.code == cli::kExitOk);
        std::ifstream in(file);
        const Trajectory tr = read_trajectory_csv(in);
        REQUIRE(tr.energy.size() == tr.size());
        double worst = 0.0;
        for (double q : tr.energy)
            worst = std::max(worst, std::abs(q / tr.energy.front() - 1.0));
        CHECK(worst <= 1e-8);
        const double w0 = derive_params(kExperiment).omega0;
        CHECK(tr.t.back() == doctest::Approx(100 * 2 * std::numbers::pi / w0).epsilon(1e-3));
    }
    SUBCASE("runaway growth truncates with a warning")
    {
        const Outcome o = invoke({"simulate", "--gamma", "3"});
        CHECK(o.code == cli::kExitWarning);
        CHECK(o.err.find("truncated") != std::string::npos);
        std::istringstream in(o.out);
        const Trajectory tr = read_trajectory_csv(in);
        CHECK(tr.t.back() < 100 * 2 * std::numbers::pi / derive_params(kExperiment).omega0);
    }
    SUBCASE("inductor resistance is propagated")
    {
        const Outcome ideal = invoke({"simulate", "--gamma", "0.5", "--periods", "5"});
        const Outcome lossy = invoke(
            {"simulate", "--gamma", "0.5", "--periods", "5", "--rl", "16.8", "--compensation", "0.98"});
        CHECK(lossy.code == cli::kExitOk);
        CHECK(lossy.out != ideal.out);
        const Outcome full = invoke({"simulate", "--gamma", "0.5", "--periods", "5", "--rl", "16.8"});
        CHECK(full.out == ideal.out);
    }
    SUBCASE("initial state and time controls")
    {
        const Outcome o = invoke({"simulate", "--x0", "0,1,0,0", "--t-end", "10us", "--dt", "100ns"});
        REQUIRE(o.code == cli::kExitOk);
        std::istringstream in(o.out);
        const Trajectory tr = read_trajectory_csv(in);
        CHECK(tr.size() == 101);
        CHECK(tr.states.front() == StateVector{0, 1, 0, 0});
        CHECK(invoke({"simulate", "--x0", "1,2"}).code == cli::kExitInvalid);
        CHECK(invoke({"simulate", "--t-end", "1ms", "--periods", "3"}).code == cli::kExitInvalid);
        CHECK(invoke({"simulate", "--dt", "10us"}).code == cli::kExitInvalid);
        CHECK(invoke({"simulate", "--steps-per-period", "10"}).code == cli::kExitInvalid);
    }
    SUBCASE("identical settings give identical files")
    {
        const std::vector<std::string> args{"simulate", "--gamma", "1.3", "--periods", "20"};
        CHECK(invoke(args).out == invoke(args).out);
    }
}

TEST_CASE("extract")
{
    SUBCASE("round trip from a simulated trajectory")
    {
        const fs::path file = scratch("symmetric.csv");
        REQUIRE(invoke({"simulate", "--gamma", "0.5", "--steps-per-period", "256", "-o",
                        file.string()})
                    .code == cli::kExitOk);
        const Outcome o = invoke({"extract", file.string(), "--channel", "v1"});
        REQUIRE(o.code == cli::kExitOk);
        const json report = json::parse(o.out);
        const json& modes = report["channels"]["v1"]["modes"];
        REQUIRE(modes.size() == 4);
        const Spectrum s = analytic_eigenfrequencies(derive_params(kExperiment.with_gamma(0.5)));
        for (const Complex& w : s.omega)
        {
            double nearest = INFINITY;
            for (const json& m : modes)
                nearest = std::min(nearest, std::abs(Complex(m["omega_re"], m["omega_im"]) - w));
            CHECK(nearest <= 1e-6 * std::abs(w));
        }
        CHECK_FALSE(report["channels"].contains("v2"));
    }
    SUBCASE("planted frequency in an external file")
    {
        const fs::path file = scratch("planted.csv");
        const double w = 1.234567e5;
        const double g = -850.0;
        {
            std::ofstream out(file);
            out << "time_label,t,v2\n";
            for (int n = 0; n < 800; ++n)
            {
                const double t = n * 2e-6;
                out << "s" << n << ',' << format_double(t) << ','
                    << format_double(std::exp(g * t) * std::cos(w * t + 0.3)) << '\n';
            }
        }
        const Outcome o = invoke({"extract", file.string(), "--channel", "v2"});
        REQUIRE(o.code == cli::kExitOk);
        const json modes = json::parse(o.out)["channels"]["v2"]["modes"];
        REQUIRE(modes.size() == 2);
        for (const json& m : modes)
        {
            CHECK(std::abs(std::abs(m["omega_re"].get<double>()) - w) <= 1e-6 * w);
            CHECK(std::abs(m["omega_im"].get<double>() - g) <= 1e-6 * w);
        }
        // v1 is absent and reads as zero: that channel fails without aborting
        const Outcome both = invoke({"extract", file.string()});
        CHECK(both.code == cli::kExitWarning);
        const json channels = json::parse(both.out)["channels"];
        CHECK(channels["v1"].contains("error"));
        CHECK(channels["v2"]["modes"].size() == 2);
    }
    SUBCASE("bad input files")
    {
        const fs::path empty = scratch("empty.csv");
        std::ofstream(empty).close();
        CHECK(invoke({"extract", empty.string()}).code == cli::kExitInvalid);

        const fs::path broken = scratch("broken.csv");
        std::ofstream(broken) << "t,v1\n0,1\n1e-6,oops\n";
        const Outcome o = invoke({"extract", broken.string()});
        CHECK(o.code == cli::kExitInvalid);
        CHECK(o.err.find("line 3") != std::string::npos);

        CHECK(invoke({"extract", scratch("does-not-exist.csv").string()}).code == cli::kExitInvalid);
        CHECK(invoke({"extract"}).code == cli::kExitInvalid);
    }
}

TEST_CASE("argument handling")
{
    CHECK(invoke({"--help"}).code == cli::kExitOk);
    CHECK(invoke({"spectrum", "--help"}).code == cli::kExitOk);
    CHECK(invoke({}).code == cli::kExitInvalid);
    CHECK(invoke({"bogus"}).code == cli::kExitInvalid);
    CHECK(invoke({"spectrum", "--nonsense", "1"}).code == cli::kExitInvalid);
}

TEST_CASE("installed executable exit codes")
{
    const std::string exe = PTDIMER_CLI_PATH;
    const auto status = [&](const std::string& args) {
        const int raw = std::system((exe + " " + args + " > /dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    CHECK(status("spectrum") == 0);
    CHECK(status("spectrum --M 0") == 1);
    CHECK(status("spectrum --M 7.91mH") == 2);
}
