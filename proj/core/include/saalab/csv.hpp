#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "saalab/allocation.hpp"
#include "saalab/econometrics.hpp"
#include "saalab/equilibrium.hpp"
#include "saalab/simulation.hpp"

namespace saalab {

struct RowError {
  int line = 0;  // 1-based physical line number in the file
  std::string message;
};

struct LoadReport {
  std::vector<RowError> errors;
  int rows_ok = 0;
};

// Canonical 20-column bids schema. Under strict mode unknown columns and any
// malformed row abort; under lax mode unknown columns are ignored and bad rows
// are collected into the report.
std::vector<BidRecord> load_bids_csv(const std::filesystem::path& path, bool strict,
                                     LoadReport* report = nullptr);
void write_bids_csv(const std::filesystem::path& path, std::span<const BidRecord> records);

// wholesale.csv: year, month, price_per_lb
std::map<std::pair<int, int>, double> load_wholesale_csv(const std::filesystem::path& path);
// usda_prices.csv: product_code, year, price_per_lb
std::map<std::pair<std::string, int>, double> load_usda_prices_csv(
    const std::filesystem::path& path);
// overwrite the price covariates from the auxiliary tables (keys must cover
// every record)
void join_price_covariates(std::vector<BidRecord>& records,
                           const std::map<std::pair<int, int>, double>& wholesale,
                           const std::map<std::pair<std::string, int>, double>& usda);

void write_equilibrium_csv(const std::filesystem::path& path,
                           const EquilibriumSolution& sol);
std::string equilibrium_diagnostics_text(const EquilibriumSolution& sol);

void write_awards_csv(const std::filesystem::path& path, const AllocationProblem& problem,
                      const AllocationResult& result);
void write_quota_report_csv(const std::filesystem::path& path,
                            const AllocationResult& result);

void write_summary_csv(const std::filesystem::path& path,
                       std::span<const GroupSummary> groups);
std::string summary_table_text(std::span<const GroupSummary> groups);

// Figure 1 analog: bidder pool over time (x, y, group)
void write_timeline_csv(const std::filesystem::path& path,
                        std::span<const TimelinePoint> points);
// Figure 2 analog: one row per (auction, product, size class) share
void write_win_share_csv(const std::filesystem::path& path, const WinShareReport& report);

void write_fit_csv(const std::filesystem::path& path, const FitResult& fit);
// side-by-side columns when several fits share a layout
std::string fit_table_text(std::span<const FitResult> fits);

std::uint64_t fnv1a64(std::span<const char> bytes);
std::uint64_t hash_file(const std::filesystem::path& path);

struct ManifestEntry {
  std::string name;  // path relative to the output directory
  std::uint64_t hash = 0;
  std::uintmax_t bytes = 0;
};

// writes "name,bytes,fnv1a64" rows sorted by name
void write_manifest(const std::filesystem::path& path,
                    std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

}  // namespace saalab
