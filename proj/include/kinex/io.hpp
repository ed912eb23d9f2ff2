#pragma once

// CSV formats: `# kinex pdf v1`, `# kinex population v1` and
// `# kinex histogram v1`. Numbers are written with 17 significant digits so
// every file reads back bit-exactly.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "kinex/core.hpp"
#include "kinex/montecarlo.hpp"

namespace kinex::io {

std::string format_double(double v);

struct PdfMetadata {
    std::string model;
    double parameter = 0.0;
    double mean_wealth = 1.0;
    std::optional<int> iterations;
    std::optional<double> residual;
};

struct PdfFile {
    core::GridPdf pdf;
    PdfMetadata meta;
};

void write_pdf_csv(std::ostream& out, const core::GridPdf& pdf, const PdfMetadata& meta);
void write_pdf_csv(const std::filesystem::path& path, const core::GridPdf& pdf, const PdfMetadata& meta);
/// Throws DomainError on a malformed file.
PdfFile read_pdf_csv(std::istream& in);
PdfFile read_pdf_csv(const std::filesystem::path& path);

struct PopulationFile {
    montecarlo::Population population;
    std::uint64_t seed = 0;
};

void write_population_csv(std::ostream& out, const montecarlo::Population& pop, std::uint64_t seed);
void write_population_csv(const std::filesystem::path& path, const montecarlo::Population& pop,
                          std::uint64_t seed);
PopulationFile read_population_csv(std::istream& in);
PopulationFile read_population_csv(const std::filesystem::path& path);

/// Columns bin_lo, bin_hi, count, density; under/overflow in metadata.
void write_histogram_csv(std::ostream& out, const montecarlo::WealthHistogram& h);
void write_histogram_csv(const std::filesystem::path& path, const montecarlo::WealthHistogram& h);
montecarlo::WealthHistogram read_histogram_csv(std::istream& in);
montecarlo::WealthHistogram read_histogram_csv(const std::filesystem::path& path);

} // namespace kinex::io
