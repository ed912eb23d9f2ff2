#include "kinex/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "kinex/errors.hpp"

namespace kinex::io {

namespace {

constexpr const char* kPdfHeader = "# kinex pdf v1";
constexpr const char* kPopulationHeader = "# kinex population v1";
constexpr const char* kHistogramHeader = "# kinex histogram v1";

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw DomainError("cannot read " + path.string());
    return in;
}

double parse_double(const std::string& s)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw DomainError("not a number: '" + s + "'");
    }
    if (used != s.size()) throw DomainError("not a number: '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s)
{
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw DomainError("not an unsigned integer: '" + s + "'");
    }
    return v;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Metadata line "# key: value"; returns false for other lines.
bool split_meta(const std::string& line, std::string& key, std::string& value)
{
    if (line.size() < 2 || line[0] != '#') return false;
    const auto colon = line.find(':');
    if (colon == std::string::npos) return false;
    key = trim(line.substr(1, colon - 1));
    value = trim(line.substr(colon + 1));
    return true;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
}

void expect_header(std::istream& in, const char* header)
{
    std::string line;
    if (!std::getline(in, line) || trim(line) != header) {
        throw DomainError(std::string("missing header '") + header + "'");
    }
}

} // namespace

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_pdf_csv(std::ostream& out, const core::GridPdf& pdf, const PdfMetadata& meta)
{
    out << kPdfHeader << '\n';
    out << "# model: " << meta.model << '\n';
    out << "# parameter: " << format_double(meta.parameter) << '\n';
    out << "# mean_wealth: " << format_double(meta.mean_wealth) << '\n';
    if (meta.iterations) out << "# iterations: " << *meta.iterations << '\n';
    if (meta.residual) out << "# residual: " << format_double(*meta.residual) << '\n';
    out << "u,f\n";
    const auto x = pdf.grid().nodes();
    for (std::size_t k = 0; k < x.size(); ++k) {
        out << format_double(x[k]) << ',' << format_double(pdf[k]) << '\n';
    }
}

void write_pdf_csv(const std::filesystem::path& path, const core::GridPdf& pdf, const PdfMetadata& meta)
{
    auto out = open_out(path);
    write_pdf_csv(out, pdf, meta);
}

PdfFile read_pdf_csv(std::istream& in)
{
    expect_header(in, kPdfHeader);
    PdfMetadata meta;
    std::vector<double> u, f;
    std::string line, key, value;
    bool columns = false;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (split_meta(line, key, value)) {
            if (key == "model") meta.model = value;
            else if (key == "parameter") meta.parameter = parse_double(value);
            else if (key == "mean_wealth") meta.mean_wealth = parse_double(value);
            else if (key == "iterations") meta.iterations = static_cast<int>(parse_u64(value));
            else if (key == "residual") meta.residual = parse_double(value);
            continue;
        }
        if (!columns) {
            if (trim(line) != "u,f") throw DomainError("pdf csv: expected column line 'u,f'");
            columns = true;
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != 2) throw DomainError("pdf csv: expected two columns");
        u.push_back(parse_double(cells[0]));
        f.push_back(parse_double(cells[1]));
    }
    auto grid = core::make_grid(core::WealthGrid::from_nodes(std::move(u)));
    return {core::GridPdf(std::move(grid), std::move(f), meta.mean_wealth), meta};
}

PdfFile read_pdf_csv(const std::filesystem::path& path)
{
    auto in = open_in(path);
    return read_pdf_csv(in);
}

void write_population_csv(std::ostream& out, const montecarlo::Population& pop, std::uint64_t seed)
{
    out << kPopulationHeader << '\n';
    out << "# model: " << models::to_string(pop.model.kind) << '\n';
    out << "# lambda: " << format_double(pop.model.lambda) << '\n';
    out << "# omega: " << format_double(pop.model.omega) << '\n';
    out << "# mean_wealth: " << format_double(pop.model.mean_wealth) << '\n';
    out << "# seed: " << seed << '\n';
    out << "# steps: " << pop.step_count << '\n';
    out << "agent_index,wealth\n";
    for (std::size_t i = 0; i < pop.wealth.size(); ++i) {
        out << i << ',' << format_double(pop.wealth[i]) << '\n';
    }
}

void write_population_csv(const std::filesystem::path& path, const montecarlo::Population& pop,
                          std::uint64_t seed)
{
    auto out = open_out(path);
    write_population_csv(out, pop, seed);
}

PopulationFile read_population_csv(std::istream& in)
{
    expect_header(in, kPopulationHeader);
    PopulationFile file;
    auto& pop = file.population;
    std::string line, key, value;
    bool columns = false;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (split_meta(line, key, value)) {
            if (key == "model") pop.model.kind = models::parse_model_kind(value);
            else if (key == "lambda") pop.model.lambda = parse_double(value);
            else if (key == "omega") pop.model.omega = parse_double(value);
            else if (key == "mean_wealth") pop.model.mean_wealth = parse_double(value);
            else if (key == "seed") file.seed = parse_u64(value);
            else if (key == "steps") pop.step_count = parse_u64(value);
            continue;
        }
        if (!columns) {
            if (trim(line) != "agent_index,wealth") {
                throw DomainError("population csv: expected column line 'agent_index,wealth'");
            }
            columns = true;
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != 2) throw DomainError("population csv: expected two columns");
        if (parse_u64(cells[0]) != pop.wealth.size()) {
            throw DomainError("population csv: agent indices out of order");
        }
        pop.wealth.push_back(parse_double(cells[1]));
    }
    pop.model.validate();
    return file;
}

PopulationFile read_population_csv(const std::filesystem::path& path)
{
    auto in = open_in(path);
    return read_population_csv(in);
}

void write_histogram_csv(std::ostream& out, const montecarlo::WealthHistogram& h)
{
    out << kHistogramHeader << '\n';
    out << "# samples: " << h.samples() << '\n';
    out << "# underflow: " << h.underflow() << '\n';
    out << "# overflow: " << h.overflow() << '\n';
    out << "bin_lo,bin_hi,count,density\n";
    const auto density = h.density();
    const auto edges = h.edges();
    const auto counts = h.counts();
    for (std::size_t b = 0; b < counts.size(); ++b) {
        out << format_double(edges[b]) << ',' << format_double(edges[b + 1]) << ',' << counts[b]
            << ',' << format_double(density[b]) << '\n';
    }
}

void write_histogram_csv(const std::filesystem::path& path, const montecarlo::WealthHistogram& h)
{
    auto out = open_out(path);
    write_histogram_csv(out, h);
}

montecarlo::WealthHistogram read_histogram_csv(std::istream& in)
{
    expect_header(in, kHistogramHeader);
    std::uint64_t underflow = 0, overflow = 0;
    std::vector<double> edges;
    std::vector<std::uint64_t> counts;
    std::string line, key, value;
    bool columns = false;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (split_meta(line, key, value)) {
            if (key == "underflow") underflow = parse_u64(value);
            else if (key == "overflow") overflow = parse_u64(value);
            continue;
        }
        if (!columns) {
            if (trim(line) != "bin_lo,bin_hi,count,density") {
                throw DomainError("histogram csv: unexpected column line");
            }
            columns = true;
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != 4) throw DomainError("histogram csv: expected four columns");
        const double lo = parse_double(cells[0]);
        const double hi = parse_double(cells[1]);
        if (edges.empty()) edges.push_back(lo);
        else if (edges.back() != lo) throw DomainError("histogram csv: bins are not contiguous");
        edges.push_back(hi);
        counts.push_back(parse_u64(cells[2]));
    }
    if (edges.size() < 2) throw DomainError("histogram csv: no bins");
    return montecarlo::WealthHistogram::from_counts(std::move(edges), std::move(counts), underflow,
                                                    overflow);
}

montecarlo::WealthHistogram read_histogram_csv(const std::filesystem::path& path)
{
    auto in = open_in(path);
    return read_histogram_csv(in);
}

} // namespace kinex::io
