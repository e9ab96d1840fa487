// Command-line driver: population, epidemic, surveillance and evaluation stages.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "sentinel/config.hpp"
#include "sentinel/error.hpp"
#include "sentinel/io.hpp"
#include "sentinel/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sentinel;

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> threads;
    std::string format = "csv";
    std::string individuals, epidemic, surveillance, alerts;
};

int env_threads() {
    const char* v = std::getenv("SENTINEL_THREADS");
    if (!v || !*v) return 0;
    try {
        std::size_t used = 0;
        const int n = std::stoi(v, &used);
        if (used != std::string(v).size() || n < 1) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw InvalidParameter("SENTINEL_THREADS", "must be a positive integer");
    }
}

RunConfig resolve(const Options& o) {
    RunConfig c = o.config_path.empty() ? config_from_json(nlohmann::json::object()) : load_config(o.config_path);
    if (o.seed) c.seed = *o.seed;
    if (!o.out.empty()) c.output_dir = o.out;
    if (o.threads) c.threads = *o.threads;
    else if (int n = env_threads()) c.threads = n;
    c.validate();
    return c;
}

TableFormat format_of(const Options& o) { return o.format == "json" ? TableFormat::json : TableFormat::csv; }

fs::path input_path(const std::string& flag, const RunConfig& c, const std::string& stem) {
    return flag.empty() ? c.output_dir / (stem + ".csv") : fs::path(flag);
}

void report_notes(const std::vector<std::string>& notes) {
    for (const auto& n : notes) std::cerr << "warning: " << n << '\n';
}

void write_error(const Error& e, const fs::path& dir) {
    nlohmann::json doc = {{"stage", stage_name(e.stage())}, {"exit_code", exit_code(e.stage())}, {"message", e.what()}};
    if (auto* p = dynamic_cast<const InvalidParameter*>(&e)) doc["field"] = p->field();
    std::cerr << doc.dump() << '\n';
    try {
        if (!dir.empty()) write_json(doc, dir / "error.json");
    } catch (const std::exception&) {
        // the error is already on stderr
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"School-absenteeism epidemic early-warning toolkit"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--config", o.config_path, "TOML or JSON run configuration")->check(CLI::ExistingFile);
        cmd->add_option("--seed", o.seed, "Master seed (overrides the config file)");
        cmd->add_option("--out", o.out, "Output directory (overrides the config file)");
        cmd->add_option("--threads", o.threads, "Worker threads (default: SENTINEL_THREADS, then config)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--format", o.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
    };

    auto* pop = app.add_subcommand("simulate-population", "Catchments, schools, households and individuals");
    auto* epi = app.add_subcommand("simulate-epidemic", "sSIR seasons with reporting");
    epi->add_option("--individuals", o.individuals, "Population CSV used for N (default <out>/individuals.csv)");
    auto* comp = app.add_subcommand("compile", "Daily school absenteeism and the surveillance table");
    comp->add_option("--individuals", o.individuals, "Population CSV (default <out>/individuals.csv)");
    comp->add_option("--epidemic", o.epidemic, "Epidemic CSV (default <out>/epidemic.csv)");
    auto* eval = app.add_subcommand("evaluate", "Lag x threshold grid search and alert metrics");
    eval->add_option("--surveillance", o.surveillance, "Surveillance CSV (default <out>/surveillance.csv)");
    auto* plot = app.add_subcommand("plot", "SVG figures from earlier outputs");
    plot->add_option("--epidemic", o.epidemic, "Epidemic CSV (default <out>/epidemic.csv)");
    plot->add_option("--surveillance", o.surveillance, "Surveillance CSV (default <out>/surveillance.csv)");
    plot->add_option("--alerts", o.alerts, "alert_summary.json (default <out>/alert_summary.json)");
    auto* run = app.add_subcommand("run", "Full pipeline");
    for (auto* cmd : {pop, epi, comp, eval, plot, run}) common(cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code(Stage::config);
    }

    fs::path out_dir = o.out;
    try {
        const RunConfig c = resolve(o);
        out_dir = c.output_dir;
        const TableFormat fmt = format_of(o);

        if (pop->parsed()) {
            const auto population = run_population_stage(c);
            write_population_outputs(c.output_dir, population, fmt);
            std::cout << "individuals: " << population.frame.individuals.size()
                      << ", households: " << population.frame.households.size()
                      << ", schools: " << population.schools.size() << '\n';
        } else if (epi->parsed()) {
            std::int64_t n = c.epidemic.N;
            if (n == 0) n = static_cast<std::int64_t>(read_individuals(input_path(o.individuals, c, "individuals")).individuals.size());
            const auto epidemics = run_epidemic_stage(c, n);
            write_epidemic_outputs(c.output_dir, epidemics, fmt);
            const auto s = summarize(epidemics);
            std::cout << "seasons: " << s.n_sims << ", mean infected: " << s.avg_total_infected
                      << ", mean reported: " << s.avg_total_reported << '\n';
        } else if (comp->parsed()) {
            const auto population = read_individuals(input_path(o.individuals, c, "individuals"));
            const auto epidemics = read_epidemic(input_path(o.epidemic, c, "epidemic"), c.epidemic.inf_period);
            const auto data = run_compile_stage(c, epidemics, population);
            write_surveillance_outputs(c.output_dir, data, fmt);
            report_notes(data.warnings);
            std::cout << "surveillance rows: " << data.rows.size() << ", columns: " << data.column_count() << '\n';
        } else if (eval->parsed()) {
            const auto data = read_surveillance(input_path(o.surveillance, c, "surveillance"));
            const auto grid = run_evaluate_stage(c, data);
            write_evaluation_outputs(c.output_dir, grid, fmt);
            for (Metric m : kAllMetrics) {
                const auto& best = grid.best.at(m);
                std::cout << metric_name(m) << ": ";
                if (best) std::cout << "min " << format_double(best->value) << " at lag " << best->lag << ", threshold " << format_double(best->threshold) << '\n';
                else std::cout << "no admissible cell\n";
            }
        } else if (plot->parsed()) {
            const auto epidemics = read_epidemic(input_path(o.epidemic, c, "epidemic"), c.epidemic.inf_period);
            const auto data = read_surveillance(input_path(o.surveillance, c, "surveillance"));
            const fs::path alerts_path = o.alerts.empty() ? c.output_dir / "alert_summary.json" : fs::path(o.alerts);
            const auto alerts = read_alert_summary(alerts_path);
            report_notes(write_figures(c.output_dir, c, epidemics, data, alerts));
        } else if (run->parsed()) {
            const auto r = run_pipeline(c, fmt);
            report_notes(r.notes);
            std::cout << "wrote " << c.output_dir.string() << ": " << r.population.frame.individuals.size()
                      << " individuals, " << r.epidemics.size() << " seasons, " << r.surveillance.rows.size()
                      << " surveillance rows\n";
        }
        return 0;
    } catch (const Error& e) {
        write_error(e, out_dir);
        return exit_code(e.stage());
    } catch (const std::bad_alloc&) {
        write_error(Error(Stage::simulation, "out of memory"), out_dir);
        return exit_code(Stage::simulation);
    } catch (const std::exception& e) {
        write_error(Error(Stage::io, e.what()), out_dir);
        return exit_code(Stage::io);
    }
}
