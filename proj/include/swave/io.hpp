#pragma once

// JSON conversions for the configuration types and flat binary persistence
// (JSON header + raw little-endian doubles) for noise paths and fields.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "swave/holder.hpp"
#include "swave/noise.hpp"
#include "swave/solver.hpp"

namespace swave {

static_assert(std::endian::native == std::endian::little, "binary layout assumes a little-endian host");

inline constexpr int binary_format_version = 1;

// ---- JSON for configuration types ------------------------------------------

inline nlohmann::json to_json(const CovarianceSpec& s)
{
    nlohmann::json j;
    if (s.is_riesz()) {
        j["kind"] = "riesz";
        j["beta"] = s.beta();
    } else {
        const auto& t = std::get<TabulatedKernel>(s.kind);
        j["kind"] = "tabulated";
        j["r"] = t.r;
        j["f"] = t.f;
    }
    j["reg_radius"] = s.reg_radius;
    j["horizon"] = s.horizon;
    return j;
}

inline CovarianceSpec covariance_from_json(const nlohmann::json& j)
{
    CovarianceSpec s;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "riesz")
        s.kind = RieszKernel{j.at("beta").get<double>()};
    else if (kind == "tabulated")
        s.kind = TabulatedKernel{j.at("r").get<std::vector<double>>(), j.at("f").get<std::vector<double>>()};
    else
        throw Error(ErrorCode::config, "unknown kernel kind '" + kind + "'");
    s.reg_radius = j.at("reg_radius").get<double>();
    s.horizon = j.at("horizon").get<double>();
    validate(s);
    return s;
}

inline nlohmann::json to_json(const NoiseGrid& g)
{
    return {{"T", g.T},
            {"num_steps", g.num_steps},
            {"origin", to_array(g.origin)},
            {"spacing", g.spacing},
            {"dims", g.dims}};
}

inline NoiseGrid grid_from_json(const nlohmann::json& j)
{
    NoiseGrid g;
    g.T = j.at("T").get<double>();
    g.num_steps = j.at("num_steps").get<int>();
    const auto o = j.at("origin").get<std::array<double, 3>>();
    g.origin = Vec3(o[0], o[1], o[2]);
    g.spacing = j.at("spacing").get<double>();
    g.dims = j.at("dims").get<std::array<int, 3>>();
    g.validate();
    return g;
}

inline nlohmann::json to_json(const Coefficient& c)
{
    return {{"c0", c.c0}, {"c1", c.c1}, {"c2", c.c2}, {"omega", c.omega}};
}

inline nlohmann::json to_json(const EquationSpec& e)
{
    return {{"variant", to_string(e.variant)},
            {"A", to_json(e.A)},
            {"B", to_json(e.B)},
            {"D", to_json(e.D)},
            {"b", to_json(e.b)},
            {"delay_level", e.delay_level}};
}

// ---- binary persistence -----------------------------------------------------

namespace detail {

inline void write_doubles(std::ofstream& out, const Eigen::MatrixXd& m)
{
    out.write(reinterpret_cast<const char*>(m.data()), std::streamsize(m.size() * sizeof(double)));
}

inline void read_doubles(std::ifstream& in, Eigen::MatrixXd& m, const std::string& what)
{
    in.read(reinterpret_cast<char*>(m.data()), std::streamsize(m.size() * sizeof(double)));
    require(bool(in), ErrorCode::io, "truncated binary payload in " + what);
}

inline nlohmann::json read_json(const std::filesystem::path& p)
{
    std::ifstream in(p);
    require(bool(in), ErrorCode::io, "cannot open " + p.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::io, p.string() + ": " + e.what());
    }
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j)
{
    std::ofstream out(p);
    require(bool(out), ErrorCode::io, "cannot write " + p.string());
    out << j.dump(2) << '\n';
}

} // namespace detail

/// Writes `<stem>.json` and `<stem>.bin`. The payload holds increments,
/// mode_increments and subgrid in that order, each column-major
/// (site-minor within a step).
inline void save_noise_path(const NoisePath& path, const std::filesystem::path& stem)
{
    nlohmann::json h{{"format", "swave-noise-path"},
                     {"version", binary_format_version},
                     {"kernel", to_json(path.covariance->spec)},
                     {"grid", to_json(path.grid)},
                     {"seed", path.seed},
                     {"num_modes", path.num_modes},
                     {"sites", path.grid.num_sites()},
                     {"steps", path.grid.num_steps},
                     {"layout", "increments[sites x steps], mode_increments[modes x steps], "
                                "subgrid[sites x steps]; column-major float64"}};
    detail::write_json(stem.string() + ".json", h);
    std::ofstream out(stem.string() + ".bin", std::ios::binary);
    require(bool(out), ErrorCode::io, "cannot write " + stem.string() + ".bin");
    detail::write_doubles(out, path.increments);
    detail::write_doubles(out, path.mode_increments);
    detail::write_doubles(out, path.subgrid);
}

/// Reads a path written by save_noise_path. The covariance is rebuilt
/// from the stored kernel and grid unless a matching one is supplied.
inline NoisePath load_noise_path(const std::filesystem::path& stem,
                                 std::shared_ptr<const LatticeCovariance> cov = nullptr)
{
    const auto h = detail::read_json(stem.string() + ".json");
    require(h.value("format", "") == "swave-noise-path", ErrorCode::io, "not a noise path header");
    require(h.value("version", 0) == binary_format_version, ErrorCode::io, "unsupported noise path version");
    NoisePath path;
    path.grid = grid_from_json(h.at("grid"));
    if (!cov)
        cov = build_lattice_covariance(covariance_from_json(h.at("kernel")), path.grid);
    path.covariance = cov;
    path.seed = h.at("seed").get<std::uint64_t>();
    path.num_modes = h.at("num_modes").get<int>();
    const int S = path.grid.num_sites(), N = path.grid.num_steps;
    path.increments.resize(S, N);
    path.mode_increments.resize(path.num_modes, N);
    path.subgrid.resize(S, N);
    std::ifstream in(stem.string() + ".bin", std::ios::binary);
    require(bool(in), ErrorCode::io, "cannot open " + stem.string() + ".bin");
    detail::read_doubles(in, path.increments, stem.string());
    detail::read_doubles(in, path.mode_increments, stem.string());
    detail::read_doubles(in, path.subgrid, stem.string());
    return path;
}

/// Writes `<stem>.json` and `<stem>.bin`; values are time-major, point-minor.
inline void save_field_sample(const FieldSample& f, const std::filesystem::path& stem)
{
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : f.eval_points)
        pts.push_back(to_array(p));
    nlohmann::json h{{"format", "swave-field-sample"},
                     {"version", binary_format_version},
                     {"grid", to_json(f.grid)},
                     {"t0", f.t0},
                     {"times", f.times},
                     {"eval_points", pts},
                     {"seed", f.seed},
                     {"variant", f.variant},
                     {"level", f.level},
                     {"layout", "values[time][point], float64"}};
    detail::write_json(stem.string() + ".json", h);
    std::ofstream out(stem.string() + ".bin", std::ios::binary);
    require(bool(out), ErrorCode::io, "cannot write " + stem.string() + ".bin");
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = f.values;
    out.write(reinterpret_cast<const char*>(rm.data()), std::streamsize(rm.size() * sizeof(double)));
}

inline FieldSample load_field_sample(const std::filesystem::path& stem)
{
    const auto h = detail::read_json(stem.string() + ".json");
    require(h.value("format", "") == "swave-field-sample", ErrorCode::io, "not a field sample header");
    FieldSample f;
    f.grid = grid_from_json(h.at("grid"));
    f.t0 = h.at("t0").get<double>();
    f.times = h.at("times").get<std::vector<double>>();
    for (const auto& p : h.at("eval_points")) {
        const auto a = p.get<std::array<double, 3>>();
        f.eval_points.emplace_back(a[0], a[1], a[2]);
    }
    f.seed = h.at("seed").get<std::uint64_t>();
    f.variant = h.at("variant").get<std::string>();
    f.level = h.at("level").get<int>();
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(f.times.size(), f.eval_points.size());
    std::ifstream in(stem.string() + ".bin", std::ios::binary);
    require(bool(in), ErrorCode::io, "cannot open " + stem.string() + ".bin");
    in.read(reinterpret_cast<char*>(rm.data()), std::streamsize(rm.size() * sizeof(double)));
    require(bool(in), ErrorCode::io, "truncated binary payload in " + stem.string());
    f.values = rm;
    return f;
}

} // namespace swave
