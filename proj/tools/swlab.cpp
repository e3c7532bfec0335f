// swlab: command-line front end to the experiment harness.
//
// Exit codes: 0 success, 1 other failure, 2 config error, 3 numerical
// blow-up in more than half of the replicas.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "swave/swave.hpp"

namespace fs = std::filesystem;
using namespace swave;

namespace {

constexpr int exit_config = 2;
constexpr int exit_blow_up = 3;

struct RunOptions {
    std::string config_path;
    std::string output_dir;
    std::string format = "both";
    int replicas = 0;
    long long seed = -1;
    int workers = -1;
};

ExperimentConfig resolve(Experiment e, const RunOptions& o)
{
    ExperimentConfig c;
    if (!o.config_path.empty()) {
        c = load_config(o.config_path);
        if (c.experiment != e)
            throw ConfigError({"experiment: config names '" + to_string(c.experiment) + "' but the subcommand is '" +
                               to_string(e) + "'"});
    } else {
        nlohmann::json j{{"experiment", to_string(e)}};
        c = parse_config(j);
        c.output_dir = "runs/" + to_string(e);
    }
    if (!o.output_dir.empty())
        c.output_dir = o.output_dir;
    if (o.replicas > 0)
        c.replicas = o.replicas;
    if (o.seed >= 0)
        c.seed = std::uint64_t(o.seed);
    if (o.workers >= 0)
        c.workers = o.workers;
    // Overrides go through the same validation as the file.
    return parse_config(to_json(c));
}

void print_summary(const RunRecord& r)
{
    for (const auto& t : r.tables) {
        if (t.name == "replicas")
            continue;
        std::cout << "[" << t.name << "]\n" << to_csv(t);
    }
    if (!r.aggregates.empty())
        std::cout << "[aggregates] " << r.aggregates.dump() << "\n";
    std::cout << "replicas " << r.replicas << ", excluded " << r.excluded << ", wall time " << r.wall_time_s
              << " s\n";
}

int finish(const RunRecord& r, const std::string& format, const fs::path& dir)
{
    if (format == "csv" || format == "both")
        emit_report(r, ReportFormat::csv, dir);
    if (format == "json" || format == "both")
        emit_report(r, ReportFormat::json, dir);
    print_summary(r);
    std::cout << "results in " << dir.string() << "\n";
    if (r.replicas > 0 && 2 * r.excluded > r.replicas) {
        std::cerr << "numerical blow-up in " << r.excluded << " of " << r.replicas << " replicas\n";
        return exit_blow_up;
    }
    return 0;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Re-runs a stored config and compares every CSV byte for byte.
int replay(const fs::path& dir)
{
    ExperimentConfig c = load_config(dir / "config.json");
    const RunRecord r = run(c);
    const fs::path out = dir / "replay";
    emit_report(r, ReportFormat::csv, out);
    bool same = true;
    for (const auto& t : r.tables) {
        const fs::path a = dir / (t.name + ".csv"), b = out / (t.name + ".csv");
        const bool eq = fs::exists(a) && slurp(a) == slurp(b);
        std::cout << t.name << ".csv: " << (eq ? "identical" : "DIFFERS") << "\n";
        same = same && eq;
    }
    return same ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stochastic wave equation laboratory"};
    app.require_subcommand(1);
    RunOptions opts;
    int code = 0;

    for (const auto& [exp, name] : experiment_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("-c,--config", opts.config_path, "JSON experiment config (defaults: desk profile)");
        sub->add_option("-o,--output-dir", opts.output_dir, "directory for config.json, CSVs and record.json");
        sub->add_option("-f,--format", opts.format, "csv, json or both")
            ->check(CLI::IsMember({"csv", "json", "both"}));
        sub->add_option("-r,--replicas", opts.replicas, "override the replica count");
        sub->add_option("-s,--seed", opts.seed, "override the base seed");
        sub->add_option("-w,--workers", opts.workers, "worker threads (0: all cores)");
        sub->callback([&, e = exp] {
            const ExperimentConfig c = resolve(e, opts);
            code = finish(run(c), opts.format, c.output_dir);
        });
    }

    std::string validate_path;
    auto* validate = app.add_subcommand("validate-config", "check a config and list every problem");
    validate->add_option("config", validate_path, "JSON experiment config")->required();
    validate->callback([&] {
        const ExperimentConfig c = load_config(validate_path);
        std::cout << "ok: " << to_string(c.experiment) << "\n" << to_json(c).dump(2) << "\n";
    });

    std::string run_dir;
    auto* rep = app.add_subcommand("replay", "re-run a stored run and compare its CSV output");
    rep->add_option("run-dir", run_dir, "directory written by a previous run")->required();
    rep->callback([&] { code = replay(run_dir); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::config ? exit_config : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return code;
}
