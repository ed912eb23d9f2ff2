#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "kinex/cli.hpp"
#include "kinex/errors.hpp"
#include "kinex/io.hpp"
#include "kinex/kinetics.hpp"
#include "kinex/montecarlo.hpp"

namespace kinex::cli {

namespace {

using io::format_double;

constexpr int kResidualPoints = 120;

core::GridHandle grid_for(const RunConfig& c)
{
    const double m = c.model.mean_wealth;
    if (c.grid == "auto") return kinetics::default_grid(c.model);
    if (c.grid == "loghead") return core::make_grid(core::WealthGrid::default_log_head(m));
    return core::make_grid(core::WealthGrid::default_uniform(m));
}

std::vector<double> edges_for(const RunConfig& c)
{
    const double m = c.model.mean_wealth;
    const auto h = c.hist == "fine" ? montecarlo::WealthHistogram::uniform(10.0 * m, 500)
                                    : montecarlo::WealthHistogram::default_for(m);
    return {h.edges().begin(), h.edges().end()};
}

io::PdfMetadata meta_for(const RunConfig& c)
{
    io::PdfMetadata meta;
    meta.model = std::string(models::to_string(c.model.kind));
    meta.parameter = c.model.parameter();
    meta.mean_wealth = c.model.mean_wealth;
    return meta;
}

// Binned L1 of a histogram against the model's reference density. The
// exponential CDF is closed-form; Gamma CDFs come from the log-head grid.
double l1_to_reference(const montecarlo::WealthHistogram& h, const models::ModelParams& model)
{
    if (model.kind == models::ModelKind::PureRandom) {
        const double m = model.mean_wealth;
        return montecarlo::binned_l1(h, [m](double u) { return u <= 0.0 ? 0.0 : -std::expm1(-u / m); });
    }
    const auto grid = core::make_grid(core::WealthGrid::default_log_head(model.mean_wealth));
    return montecarlo::binned_l1(h, models::reference_pdf(grid, model));
}

std::ofstream open_artifact(const std::filesystem::path& dir, const std::string& name, RunOutput& out)
{
    std::ofstream f(dir / name);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    out.artifacts.push_back(name);
    return f;
}

void write_pdf(const std::filesystem::path& dir, const std::string& name, const core::GridPdf& pdf,
               const io::PdfMetadata& meta, RunOutput& out)
{
    auto f = open_artifact(dir, name, out);
    io::write_pdf_csv(f, pdf, meta);
}

struct SteadyRun {
    core::GridPdf seed;
    core::GridPdf solved;
    kinetics::FixedPointReport report;
};

SteadyRun compute_steady(const RunConfig& c)
{
    auto seed = models::reference_pdf(grid_for(c), c.model);
    auto [solved, report] = kinetics::solve_steady(c.model, seed, c.max_iter, c.tol);
    return {std::move(seed), std::move(solved), std::move(report)};
}

void write_steady(const RunConfig& c, const SteadyRun& run, const std::filesystem::path& dir, RunOutput& out,
                  std::ostream& log)
{
    auto meta = meta_for(c);
    meta.iterations = 0;
    meta.residual = run.report.residuals.front();
    write_pdf(dir, "seed.csv", run.seed, meta, out);
    meta.iterations = run.report.iterations;
    meta.residual = run.report.final_sup_residual;
    write_pdf(dir, "steady.csv", run.solved, meta, out);

    {
        auto f = open_artifact(dir, "report.csv", out);
        f << "# kinex fixed-point report v1\n";
        f << "# converged: " << (run.report.converged ? "true" : "false") << '\n';
        f << "# damped: " << (run.report.damped ? "true" : "false") << '\n';
        f << "# iterations: " << run.report.iterations << '\n';
        f << "# final_residual: " << format_double(run.report.final_sup_residual) << '\n';
        f << "iteration,sup_residual,step_l1\n";
        for (std::size_t i = 0; i < run.report.residuals.size(); ++i) {
            f << i << ',' << format_double(run.report.residuals[i]) << ',';
            if (i < run.report.step_distances.size()) f << format_double(run.report.step_distances[i]);
            f << '\n';
        }
    }

    std::optional<montecarlo::WealthHistogram> mc;
    if (c.mc_hist) mc = io::read_histogram_csv(*c.mc_hist);
    std::vector<double> mc_density;
    if (mc) mc_density = mc->density();
    {
        auto f = open_artifact(dir, "comparison.csv", out);
        f << "# kinex comparison v1\n";
        f << (mc ? "u,f_gamma,f_solved,f_mc\n" : "u,f_gamma,f_solved\n");
        const auto x = run.solved.grid().nodes();
        for (std::size_t k = 0; k < x.size(); ++k) {
            f << format_double(x[k]) << ',' << format_double(run.seed[k]) << ',' << format_double(run.solved[k]);
            if (mc) {
                const auto e = mc->edges();
                double v = 0.0;
                if (x[k] >= e.front() && x[k] < e.back()) {
                    const auto b = static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), x[k]) - e.begin()) - 1;
                    v = mc_density[b];
                }
                f << ',' << format_double(v);
            }
            f << '\n';
        }
    }

    out.summary.emplace_back("converged", run.report.converged ? "true" : "false");
    out.summary.emplace_back("iterations", std::to_string(run.report.iterations));
    out.summary.emplace_back("damped", run.report.damped ? "true" : "false");
    out.summary.emplace_back("seed_residual", format_double(run.report.residuals.front()));
    out.summary.emplace_back("final_residual", format_double(run.report.final_sup_residual));
    out.summary.emplace_back("l1_gamma_vs_solved", format_double(core::distance(run.seed, run.solved).l1));
    out.summary.emplace_back("mean_solved", format_double(core::first_moment(run.solved)));
    if (mc) {
        out.summary.emplace_back("l1_gamma_vs_mc", format_double(montecarlo::binned_l1(*mc, run.seed)));
        out.summary.emplace_back("l1_solved_vs_mc", format_double(montecarlo::binned_l1(*mc, run.solved)));
    }
    if (!run.report.converged) {
        log << "kinex: warning: steady state not converged after " << run.report.iterations
            << " iterations (sup residual " << run.report.final_sup_residual << ")\n";
    }
}

void write_evolve(const RunConfig& c, const core::GridPdf& f_eq, const std::filesystem::path& dir, RunOutput& out)
{
    const double n = static_cast<double>(c.n_agents);
    kinetics::RelaxationOptions opts;
    if (c.dt) opts.dt_fraction = *c.dt / n;
    const auto fit = kinetics::relaxation_time(c.model, kinetics::perturbed(f_eq), f_eq, n, opts);
    auto f = open_artifact(dir, "evolve.csv", out);
    f << "# kinex relaxation v1\n";
    f << "# model: " << models::to_string(c.model.kind) << '\n';
    f << "# parameter: " << format_double(c.model.parameter()) << '\n';
    f << "# agents: " << c.n_agents << '\n';
    f << "# tau: " << format_double(fit.tau) << '\n';
    f << "# tau_over_n: " << format_double(fit.tau_over_n) << '\n';
    f << "# rms_residual: " << format_double(fit.rms_residual) << '\n';
    f << "t,l1\n";
    for (std::size_t i = 0; i < fit.times.size(); ++i) {
        f << format_double(fit.times[i]) << ',' << format_double(fit.distances[i]) << '\n';
    }
    out.summary.emplace_back("tau", format_double(fit.tau));
    out.summary.emplace_back("tau_over_n", format_double(fit.tau_over_n));
    out.summary.emplace_back("rms_residual", format_double(fit.rms_residual));
}

std::string point_name(const models::ModelParams& m)
{
    char buf[64];
    switch (m.kind) {
    case models::ModelKind::Saving: std::snprintf(buf, sizeof buf, "saving-lambda-%g", m.lambda); break;
    case models::ModelKind::Angle: std::snprintf(buf, sizeof buf, "angle-omega-%g", m.omega); break;
    default: std::snprintf(buf, sizeof buf, "pure"); break;
    }
    return buf;
}

std::string summary_value(const RunOutput& out, const std::string& key)
{
    for (const auto& [k, v] : out.summary) {
        if (k == key) return v;
    }
    return "";
}

} // namespace

RunOutput cmd_simulate(const RunConfig& c, const std::filesystem::path& dir, std::ostream&)
{
    RunOutput out;
    montecarlo::EnsembleOptions o;
    o.n_agents = c.n_agents;
    o.n_steps = c.n_steps;
    o.replicas = c.replicas;
    o.seed = c.seed;
    o.jobs = c.jobs;
    o.burn_in = c.burn_in;
    o.sample_every = c.sample_every;
    o.edges = edges_for(c);
    o.initial = c.initial == "exponential" ? montecarlo::InitialCondition::exponential()
                                           : montecarlo::InitialCondition::delta();
    const auto result = montecarlo::simulate_ensemble(c.model, o);
    const auto& h = result.histogram;

    {
        auto f = open_artifact(dir, "histogram.csv", out);
        io::write_histogram_csv(f, h);
    }
    {
        std::vector<double> centers(h.n_bins());
        for (std::size_t b = 0; b < centers.size(); ++b) centers[b] = h.center(b);
        const core::GridPdf pdf(core::make_grid(core::WealthGrid::from_nodes(std::move(centers))), h.density(),
                                c.model.mean_wealth);
        write_pdf(dir, "pdf.csv", pdf, meta_for(c), out);
    }
    {
        auto f = open_artifact(dir, "population.csv", out);
        io::write_population_csv(f, result.first_replica, c.seed);
    }
    const double expected = static_cast<double>(c.n_agents) * c.model.mean_wealth;
    out.summary.emplace_back("samples", std::to_string(h.samples()));
    out.summary.emplace_back("samples_per_replica", std::to_string(result.samples_per_replica));
    out.summary.emplace_back("l1_reference", format_double(l1_to_reference(h, c.model)));
    out.summary.emplace_back("wealth_drift",
                             format_double(std::abs(result.first_replica.total() - expected) / expected));
    return out;
}

RunOutput cmd_steady(const RunConfig& c, const std::filesystem::path& dir, std::ostream& log)
{
    RunOutput out;
    write_steady(c, compute_steady(c), dir, out, log);
    return out;
}

RunOutput cmd_residual(const RunConfig& c, const std::filesystem::path& dir, std::ostream&)
{
    RunOutput out;
    const double m = c.model.mean_wealth;
    std::vector<double> u(kResidualPoints);
    for (int k = 0; k < kResidualPoints; ++k) {
        u[k] = m * (0.05 + (6.0 - 0.05) * k / (kResidualPoints - 1));
    }
    std::vector<std::vector<double>> r(c.omegas.size(), std::vector<double>(u.size()));
    for (std::size_t j = 0; j < c.omegas.size(); ++j) {
        const auto p = models::ModelParams::angle(c.omegas[j], m);
        double sup = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) {
            r[j][k] = models::gamma_residual(u[k], p);
            sup = std::max(sup, std::abs(r[j][k]));
        }
        char key[64];
        std::snprintf(key, sizeof key, "max_abs_residual_omega_%g", c.omegas[j]);
        out.summary.emplace_back(key, format_double(sup));
    }
    auto f = open_artifact(dir, "residual.csv", out);
    f << "# kinex residual v1\n";
    f << "# mean_wealth: " << format_double(m) << '\n';
    f << 'u';
    for (double w : c.omegas) {
        char col[48];
        std::snprintf(col, sizeof col, ",omega_%g", w);
        f << col;
    }
    f << '\n';
    for (std::size_t k = 0; k < u.size(); ++k) {
        f << format_double(u[k]);
        for (std::size_t j = 0; j < c.omegas.size(); ++j) f << ',' << format_double(r[j][k]);
        f << '\n';
    }
    return out;
}

RunOutput cmd_evolve(const RunConfig& c, const std::filesystem::path& dir, std::ostream& log)
{
    RunOutput out;
    const auto steady = compute_steady(c);
    auto meta = meta_for(c);
    meta.iterations = steady.report.iterations;
    meta.residual = steady.report.final_sup_residual;
    write_pdf(dir, "equilibrium.csv", steady.solved, meta, out);
    if (!steady.report.converged) {
        log << "kinex: warning: equilibrium not converged (sup residual " << steady.report.final_sup_residual
            << ")\n";
    }
    out.summary.emplace_back("steady_converged", steady.report.converged ? "true" : "false");
    out.summary.emplace_back("steady_residual", format_double(steady.report.final_sup_residual));
    write_evolve(c, steady.solved, dir, out);
    return out;
}

RunOutput cmd_sweep(const RunConfig& c, const std::filesystem::path& dir, std::ostream& log)
{
    std::vector<RunConfig> points;
    auto add_point = [&](double lambda, double omega) {
        RunConfig p = c;
        p.command = Command::Sweep;
        p.model.lambda = lambda;
        p.model.omega = omega;
        p.lambdas = {lambda};
        p.omegas = {omega};
        points.push_back(std::move(p));
    };
    switch (c.model.kind) {
    case models::ModelKind::Saving:
        for (double l : c.lambdas.empty() ? std::vector<double>{0.1, 0.5, 0.9} : c.lambdas) add_point(l, 1.0);
        break;
    case models::ModelKind::Angle:
        for (double w : c.omegas.empty() ? std::vector<double>{0.3, 0.5, 1.0} : c.omegas) add_point(0.0, w);
        break;
    default:
        add_point(0.0, 1.0);
        break;
    }

    struct PointResult {
        RunOutput output;
        bool ok = false;
        std::string message;
    };
    std::vector<PointResult> results(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            const auto& p = points[i];
            const auto sub = dir / point_name(p.model);
            const auto start = std::chrono::steady_clock::now();
            try {
                std::filesystem::create_directories(sub);
                std::ostringstream point_log;
                RunOutput out;
                const auto steady = compute_steady(p);
                write_steady(p, steady, sub, out, point_log);
                write_evolve(p, steady.solved, sub, out);
                const double wall =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                finish_run_directory(sub, p, out, wall);
                results[i] = {std::move(out), true, point_log.str()};
            } catch (const std::exception& e) {
                results[i] = {RunOutput{}, false, e.what()};
            }
        }
    };
    const unsigned n_threads = std::min<std::size_t>(c.jobs, points.size());
    std::vector<std::thread> threads;
    for (unsigned t = 1; t < n_threads; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    RunOutput out;
    auto f = open_artifact(dir, "index.csv", out);
    f << "# kinex sweep index v1\n";
    f << "point,model,parameter,status,converged,iterations,l1_gamma_vs_solved,residual_sup,tau_over_n\n";
    std::size_t failures = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        const auto& r = results[i];
        f << point_name(p.model) << ',' << models::to_string(p.model.kind) << ','
          << format_double(p.model.parameter()) << ',' << (r.ok ? "ok" : "failed");
        if (r.ok) {
            f << ',' << summary_value(r.output, "converged") << ',' << summary_value(r.output, "iterations") << ','
              << summary_value(r.output, "l1_gamma_vs_solved") << ','
              << summary_value(r.output, "final_residual") << ',' << summary_value(r.output, "tau_over_n");
            log << r.message;
        } else {
            f << ",,,,,";
            ++failures;
            log << "kinex: sweep point " << point_name(p.model) << " failed: " << r.message << '\n';
        }
        f << '\n';
    }
    out.summary.emplace_back("points", std::to_string(points.size()));
    out.summary.emplace_back("failures", std::to_string(failures));
    out.exit_code = failures > 0 ? 3 : 0;
    return out;
}

} // namespace kinex::cli
