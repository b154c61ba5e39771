#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "thinfilm/evolution.hpp"
#include "thinfilm/field.hpp"

namespace thinfilm {

// Shortest round-trippable decimal form (printf %.17g).
std::string format_g17(double v);

// Snapshot CSV: header "x,h", one row per mesh point in ascending x, 17 significant
// digits, every row newline-terminated, nothing after the last row.
void write_snapshot_csv(const std::filesystem::path& path, const PeriodicField& f);
PeriodicField read_snapshot_csv(const std::filesystem::path& path);

// Time-series CSV: header "t,dt,hmin,hmax,mass,energy,resolved" (resolved is 0/1).
void write_series_csv(const std::filesystem::path& path, const std::vector<SeriesRow>& rows);
std::vector<SeriesRow> read_series_csv(const std::filesystem::path& path);

}  // namespace thinfilm
