#include <chrono>
#include <ostream>

#include "kinex/cli.hpp"
#include "kinex/errors.hpp"

namespace kinex::cli {

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    const auto parsed = parse_command_line(args, out, err);
    if (!parsed.config) return parsed.exit_code;
    const RunConfig& c = *parsed.config;

    const auto start = std::chrono::steady_clock::now();
    try {
        std::filesystem::create_directories(c.out);
        RunOutput output;
        switch (c.command) {
        case Command::Simulate: output = cmd_simulate(c, c.out, err); break;
        case Command::Steady: output = cmd_steady(c, c.out, err); break;
        case Command::Residual: output = cmd_residual(c, c.out, err); break;
        case Command::Evolve: output = cmd_evolve(c, c.out, err); break;
        case Command::Sweep: output = cmd_sweep(c, c.out, err); break;
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        finish_run_directory(c.out, c, output, wall);
        for (const auto& [k, v] : output.summary) out << k << '=' << v << '\n';
        return output.exit_code;
    } catch (const ConfigError& e) {
        err << "kinex: invalid " << e.key() << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "kinex: " << e.what() << '\n';
        return 3;
    }
}

} // namespace kinex::cli
