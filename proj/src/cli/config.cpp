#include <CLI11.hpp>

#include <cmath>
#include <ostream>

#include "kinex/cli.hpp"
#include "kinex/errors.hpp"
#include "kinex/io.hpp"

namespace kinex::cli {

namespace {

std::string join(const std::vector<double>& values)
{
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) s += ',';
        s += io::format_double(values[i]);
    }
    return s;
}

void require_single(const std::vector<double>& values, const char* key, Command command)
{
    if (values.size() > 1 && command != Command::Sweep && command != Command::Residual) {
        throw ConfigError(key, std::string(key) + ": a list of values is only accepted by sweep and residual");
    }
}

} // namespace

std::string_view to_string(Command command)
{
    switch (command) {
    case Command::Simulate: return "simulate";
    case Command::Evolve: return "evolve";
    case Command::Steady: return "steady";
    case Command::Residual: return "residual";
    case Command::Sweep: return "sweep";
    }
    return "?";
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const
{
    std::vector<std::pair<std::string, std::string>> e;
    e.emplace_back("command", std::string(to_string(command)));
    e.emplace_back("model", std::string(models::to_string(model.kind)));
    e.emplace_back("lambda", lambdas.empty() ? io::format_double(model.lambda) : join(lambdas));
    e.emplace_back("omega", omegas.empty() ? io::format_double(model.omega) : join(omegas));
    e.emplace_back("mean-wealth", io::format_double(model.mean_wealth));
    e.emplace_back("agents", std::to_string(n_agents));
    e.emplace_back("steps", std::to_string(n_steps));
    e.emplace_back("seed", std::to_string(seed));
    e.emplace_back("replicas", std::to_string(replicas));
    e.emplace_back("grid", grid);
    e.emplace_back("hist", hist);
    e.emplace_back("initial", initial);
    e.emplace_back("out", out.string());
    e.emplace_back("jobs", std::to_string(jobs));
    e.emplace_back("tol", io::format_double(tol));
    e.emplace_back("max-iter", std::to_string(max_iter));
    if (dt) e.emplace_back("dt", io::format_double(*dt));
    if (burn_in) e.emplace_back("burn-in", std::to_string(*burn_in));
    if (sample_every) e.emplace_back("sample-every", std::to_string(*sample_every));
    if (mc_hist) e.emplace_back("mc-hist", mc_hist->string());
    return e;
}

RunConfig validate(RunConfig c, bool agents_given, bool grid_given)
{
    for (double l : c.lambdas) {
        if (!(l >= 0.0 && l < 1.0)) throw ConfigError("lambda", "lambda must be in [0,1)");
    }
    for (double w : c.omegas) {
        if (!(w > 0.0 && w <= 1.0)) throw ConfigError("omega", "omega must be in (0,1]");
    }
    if (!(c.model.mean_wealth > 0.0) || !std::isfinite(c.model.mean_wealth)) {
        throw ConfigError("mean-wealth", "mean-wealth must be positive");
    }
    require_single(c.lambdas, "lambda", c.command);
    require_single(c.omegas, "omega", c.command);
    if (!c.lambdas.empty()) c.model.lambda = c.lambdas.front();
    if (!c.omegas.empty()) c.model.omega = c.omegas.front();
    if (c.model.kind != models::ModelKind::Saving) c.model.lambda = 0.0;
    if (c.model.kind != models::ModelKind::Angle) c.model.omega = 1.0;

    if (c.command == Command::Residual && c.model.kind != models::ModelKind::Angle) {
        throw ConfigError("model", "residual is defined for the angle model only");
    }
    if (c.command == Command::Residual && c.omegas.empty()) {
        c.omegas = {0.2, 0.3, 0.5, 0.7, 0.9, 1.0};
    }
    if (!agents_given && c.command != Command::Simulate) c.n_agents = 1000;
    if (c.n_agents < 2) throw ConfigError("agents", "agents must be at least 2");
    if (c.replicas < 1) throw ConfigError("replicas", "replicas must be at least 1");
    if (c.jobs < 1) throw ConfigError("jobs", "jobs must be at least 1");
    if (!(c.tol > 0.0)) throw ConfigError("tol", "tol must be positive");
    if (c.max_iter < 0) throw ConfigError("max-iter", "max-iter must be non-negative");
    if (c.hist != "default" && c.hist != "fine") throw ConfigError("hist", "hist must be default or fine");
    if (c.initial != "delta" && c.initial != "exponential") {
        throw ConfigError("initial", "initial must be delta or exponential");
    }
    if (c.sample_every && *c.sample_every == 0) {
        throw ConfigError("sample-every", "sample-every must be positive");
    }
    if (c.dt) {
        const double n = static_cast<double>(c.n_agents);
        if (!(*c.dt > 0.0) || *c.dt > 0.25 * n) {
            throw ConfigError("dt", "dt must be in (0, N/4] steps for stability");
        }
    }
    if (!grid_given) c.grid = "auto";
    if (c.grid != "auto" && c.grid != "uniform" && c.grid != "loghead") {
        throw ConfigError("grid", "grid must be auto, uniform or loghead");
    }
    if (c.grid == "uniform" && c.model.kind == models::ModelKind::Angle) {
        const auto& ws = c.omegas.empty() ? std::vector<double>{c.model.omega} : c.omegas;
        for (double w : ws) {
            if (w > 0.75 && c.command != Command::Simulate && c.command != Command::Residual) {
                throw ConfigError("grid", "omega above 0.75 gives a density singular at 0; use --grid loghead");
            }
        }
    }
    if (c.mc_hist && !std::filesystem::exists(*c.mc_hist)) {
        throw ConfigError("mc-hist", "mc-hist file not found: " + c.mc_hist->string());
    }
    c.model.validate();
    return c;
}

ParseOutcome parse_command_line(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Kinetic wealth-exchange models: Monte Carlo, kinetic equations, steady states"};
    app.name("kinex");
    app.set_config("--config", "", "key=value configuration file (flags win)");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1, 1);

    RunConfig c;
    std::string model = "pure";
    app.add_option("--model", model, "pure | saving | angle")->check(CLI::IsMember({"pure", "saving", "angle"}));
    app.add_option("--lambda", c.lambdas, "saving fraction (list for sweep)")->delimiter(',');
    app.add_option("--omega", c.omegas, "exchange fraction (list for sweep/residual)")->delimiter(',');
    app.add_option("--mean-wealth", c.model.mean_wealth, "mean wealth <u>");
    auto* agents = app.add_option("--agents", c.n_agents, "number of agents N");
    app.add_option("--steps", c.n_steps, "Monte Carlo steps per replica");
    app.add_option("--seed", c.seed, "random seed");
    app.add_option("--replicas", c.replicas, "independent Monte Carlo replicas");
    auto* grid = app.add_option("--grid", c.grid, "auto (per-model preset) | uniform | loghead");
    app.add_option("--hist", c.hist, "histogram preset: default | fine");
    app.add_option("--initial", c.initial, "initial wealths: delta | exponential");
    app.add_option("--out", c.out, "output directory");
    app.add_option("--jobs", c.jobs, "worker threads");
    app.add_option("--tol", c.tol, "steady-state tolerance on sup|f - K[f]|");
    app.add_option("--max-iter", c.max_iter, "steady-state iteration limit");
    app.add_option("--dt", c.dt, "time step in collisions (evolve)");
    app.add_option("--burn-in", c.burn_in, "steps before the first histogram sample");
    app.add_option("--sample-every", c.sample_every, "steps between histogram samples");
    app.add_option("--mc-hist", c.mc_hist, "Monte Carlo histogram CSV to compare against (steady)");

    const std::pair<const char*, Command> commands[] = {
        {"simulate", Command::Simulate}, {"evolve", Command::Evolve}, {"steady", Command::Steady},
        {"residual", Command::Residual}, {"sweep", Command::Sweep}};
    const char* descriptions[] = {"Monte Carlo ensemble and histogram", "relaxation towards the steady state",
                                  "steady state by fixed-point iteration", "Gamma-exactness residual over u",
                                  "parameter sweep of steady + evolve runs"};
    int d = 0;
    for (const auto& [name, cmd] : commands) {
        app.add_subcommand(name, descriptions[d++])->fallthrough();
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return {std::nullopt, 0};
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return {std::nullopt, 0};
    } catch (const CLI::ParseError& e) {
        err << "kinex: " << e.what() << '\n';
        return {std::nullopt, 2};
    }
    for (const auto& [name, cmd] : commands) {
        if (app.got_subcommand(name)) c.command = cmd;
    }
    try {
        c.model.kind = models::parse_model_kind(model);
        return {validate(std::move(c), agents->count() > 0, grid->count() > 0), 0};
    } catch (const ConfigError& e) {
        err << "kinex: invalid " << e.key() << ": " << e.what() << '\n';
        return {std::nullopt, 2};
    }
}

} // namespace kinex::cli
