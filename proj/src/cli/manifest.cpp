#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>

#include "kinex/cli.hpp"
#include "kinex/errors.hpp"
#include "kinex/io.hpp"

namespace kinex::cli {

namespace {

constexpr const char* kManifestName = "manifest.txt";
constexpr const char* kVersion = "1.0.0";

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string compiler_version()
{
#if defined(__clang__)
    return "clang " __clang_version__;
#elif defined(__GNUC__)
    return "gcc " __VERSION__;
#else
    return "unknown";
#endif
}

} // namespace

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha256 initialization failed");
    }
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (unsigned i = 0; i < len; ++i) {
        s += hex[md[i] >> 4];
        s += hex[md[i] & 15];
    }
    return s;
}

void finish_run_directory(const std::filesystem::path& dir, const RunConfig& config, RunOutput& output,
                          double wall_seconds)
{
    if (!output.summary.empty()) {
        std::ofstream s(dir / "summary.txt");
        for (const auto& [k, v] : output.summary) s << k << '=' << v << '\n';
        if (!s) throw std::runtime_error("cannot write summary.txt");
        output.artifacts.push_back("summary.txt");
    }
    std::ofstream m(dir / kManifestName);
    m << "format=kinex manifest v1\n";
    m << "version=" << kVersion << '\n';
    m << "compiler=" << compiler_version() << '\n';
    m << "written_utc=" << utc_timestamp() << '\n';
    m << "wall_time_s=" << io::format_double(wall_seconds) << '\n';
    for (const auto& [k, v] : config.entries()) m << "config." << k << '=' << v << '\n';
    m << "artifacts=" << output.artifacts.size() << '\n';
    for (const auto& a : output.artifacts) {
        m << "artifact." << a << ".sha256=" << sha256_file(dir / a) << '\n';
        m << "artifact." << a << ".bytes=" << std::filesystem::file_size(dir / a) << '\n';
    }
    if (!m) throw std::runtime_error("cannot write manifest");
}

std::vector<std::string> verify_manifest(const std::filesystem::path& dir)
{
    std::ifstream in(dir / kManifestName);
    if (!in) throw DomainError("no manifest in " + dir.string());
    const std::string prefix = "artifact.";
    const std::string suffix = ".sha256";
    std::map<std::string, std::string> digests;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        if (key.size() > prefix.size() + suffix.size() && key.starts_with(prefix) && key.ends_with(suffix)) {
            digests[key.substr(prefix.size(), key.size() - prefix.size() - suffix.size())] = line.substr(eq + 1);
        }
    }
    std::vector<std::string> bad;
    for (const auto& [name, digest] : digests) {
        const auto p = dir / name;
        if (!std::filesystem::exists(p) || sha256_file(p) != digest) bad.push_back(name);
    }
    return bad;
}

} // namespace kinex::cli
