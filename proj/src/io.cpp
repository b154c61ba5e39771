#include "thinfilm/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace thinfilm {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_snapshot_csv(const std::filesystem::path& path, const PeriodicField& f) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "x,h\n";
    for (int j = 0; j < f.size(); ++j)
        out << format_g17(f.x(j)) << ',' << format_g17(f.values[static_cast<size_t>(j)]) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

PeriodicField read_snapshot_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "x,h")
        throw std::runtime_error(path.string() + ": expected snapshot header x,h");
    std::vector<double> xs, hs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error(path.string() + ": malformed row");
        xs.push_back(std::stod(line.substr(0, comma)));
        hs.push_back(std::stod(line.substr(comma + 1)));
    }
    const int n = static_cast<int>(hs.size());
    if (n < 8 || !is_power_of_two(n)) throw std::runtime_error(path.string() + ": need a power-of-two mesh");
    const double dx = xs[1] - xs[0];
    PeriodicField f;
    f.X = dx * n;
    f.values = std::move(hs);
    for (int j = 0; j < n; ++j)
        if (std::fabs(xs[static_cast<size_t>(j)] - f.x(j)) > 1e-9 * f.X)
            throw std::runtime_error(path.string() + ": x column is not a uniform ascending mesh");
    return f;
}

void write_series_csv(const std::filesystem::path& path, const std::vector<SeriesRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "t,dt,hmin,hmax,mass,energy,resolved\n";
    for (const auto& r : rows)
        out << format_g17(r.t) << ',' << format_g17(r.dt) << ',' << format_g17(r.hmin) << ','
            << format_g17(r.hmax) << ',' << format_g17(r.mass) << ',' << format_g17(r.energy) << ','
            << (r.resolved ? 1 : 0) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<SeriesRow> read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "t,dt,hmin,hmax,mass,energy,resolved")
        throw std::runtime_error(path.string() + ": expected series header");
    std::vector<SeriesRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        double v[6];
        for (int c = 0; c < 6; ++c) {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error(path.string() + ": malformed row");
            v[c] = std::stod(cell);
        }
        if (!std::getline(ss, cell, ',')) throw std::runtime_error(path.string() + ": malformed row");
        SeriesRow r;
        r.t = v[0];
        r.dt = v[1];
        r.hmin = v[2];
        r.hmax = v[3];
        r.mass = v[4];
        r.energy = v[5];
        r.resolved = std::stoi(cell) != 0;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace thinfilm
