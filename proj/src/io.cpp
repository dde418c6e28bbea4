#include "bethe/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "bethe/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "pool snapshot format is little-endian");

namespace bethe {

namespace {

constexpr char kMagic[8] = {'B', 'T', 'P', 'O', 'O', 'L', '0', '1'};

template <typename T>
void put(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw NumericError("pool snapshot: truncated file");
    return v;
}

}  // namespace

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string digest(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';
}

nlohmann::json dist_to_json(const PotentialDistribution& dist) {
    nlohmann::json j;
    switch (dist.kind()) {
        case DistKind::uniform:
            j["kind"] = "uniform";
            j["width"] = dist.width();
            break;
        case DistKind::gaussian:
            j["kind"] = "gaussian";
            j["sigma"] = dist.sigma();
            break;
        case DistKind::table: {
            j["kind"] = "table";
            nlohmann::json pts = nlohmann::json::array();
            for (const auto& [v, rho] : dist.table_points()) pts.push_back({v, rho});
            j["points"] = std::move(pts);
            break;
        }
    }
    return j;
}

PotentialDistribution dist_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "uniform") return PotentialDistribution::uniform(j.at("width").get<double>());
    if (kind == "gaussian") return PotentialDistribution::gaussian(j.at("sigma").get<double>());
    if (kind == "table") {
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : j.at("points"))
            pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        return PotentialDistribution::table(std::move(pts));
    }
    throw ConfigError("distribution.kind: unknown kind '" + kind + "'");
}

void save_pool(const GreenPool& pool, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw NumericError("save_pool: cannot open " + path.string());
    os.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(os, 1);  // version
    const auto& dist = pool.dist();
    put<std::uint32_t>(os, static_cast<std::uint32_t>(dist.kind()));
    put<std::int64_t>(os, pool.branching());
    put<double>(os, pool.energy().E);
    put<double>(os, pool.energy().eta);
    switch (dist.kind()) {
        case DistKind::uniform: put<double>(os, dist.width()); break;
        case DistKind::gaussian: put<double>(os, dist.sigma()); break;
        case DistKind::table: {
            const auto pts = dist.table_points();
            put<std::uint64_t>(os, pts.size());
            for (const auto& [v, rho] : pts) {
                put<double>(os, v);
                put<double>(os, rho);
            }
            break;
        }
    }
    put<std::uint64_t>(os, pool.seed());
    put<std::int64_t>(os, pool.sweeps_done());
    put<std::int64_t>(os, pool.min_burnin());
    put<std::uint64_t>(os, static_cast<std::uint64_t>(pool.size()));
    for (const cplx& g : pool.entries()) {
        put<double>(os, g.real());
        put<double>(os, g.imag());
    }
    if (!os) throw NumericError("save_pool: write failed for " + path.string());

    nlohmann::json meta;
    meta["format"] = "BTPOOL01";
    meta["K"] = pool.branching();
    meta["E"] = pool.energy().E;
    meta["eta"] = pool.energy().eta;
    meta["distribution"] = dist_to_json(dist);
    meta["seed"] = pool.seed();
    meta["sweeps_done"] = pool.sweeps_done();
    meta["min_burnin"] = pool.min_burnin();
    meta["pool_size"] = pool.size();
    std::ofstream ms(path.string() + ".meta.json", std::ios::trunc);
    ms << meta.dump(2) << '\n';
}

GreenPool load_pool(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw NumericError("load_pool: cannot open " + path.string());
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw NumericError("load_pool: bad magic in " + path.string());
    const auto version = get<std::uint32_t>(is);
    if (version != 1) throw NumericError("load_pool: unsupported snapshot version");
    const auto kind = static_cast<DistKind>(get<std::uint32_t>(is));
    const auto K = get<std::int64_t>(is);
    const double E = get<double>(is);
    const double eta = get<double>(is);
    PotentialDistribution dist = PotentialDistribution::uniform(1.0);
    switch (kind) {
        case DistKind::uniform: dist = PotentialDistribution::uniform(get<double>(is)); break;
        case DistKind::gaussian: dist = PotentialDistribution::gaussian(get<double>(is)); break;
        case DistKind::table: {
            const auto n = get<std::uint64_t>(is);
            std::vector<std::pair<double, double>> pts;
            for (std::uint64_t i = 0; i < n; ++i) {
                const double v = get<double>(is);
                const double rho = get<double>(is);
                pts.emplace_back(v, rho);
            }
            dist = PotentialDistribution::table(std::move(pts));
            break;
        }
        default:
            throw NumericError("load_pool: unknown distribution kind");
    }
    const auto seed = get<std::uint64_t>(is);
    const auto sweeps_done = get<std::int64_t>(is);
    const auto min_burnin = get<std::int64_t>(is);
    const auto size = get<std::uint64_t>(is);
    GreenPool pool(K, dist, ComplexEnergy(E, eta), static_cast<std::int64_t>(size), seed,
                   min_burnin);
    std::vector<cplx> entries(size);
    for (auto& g : entries) {
        const double re = get<double>(is);
        const double im = get<double>(is);
        g = cplx(re, im);
    }
    pool.restore(std::move(entries), sweeps_done);
    return pool;
}

}  // namespace bethe
