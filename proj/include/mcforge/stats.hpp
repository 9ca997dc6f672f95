#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace mcforge {

/// One row of a binwise result table: energy bounds, scored value and its
/// relative error in percent.
struct TabRow {
	double elow = 0;
	double ehigh = 0;
	double value = 0;
	double err_pct = 0;

	bool operator==(const TabRow&) const = default;
};

/// Histogram bin with absolute counts, for mean-energy style reductions.
struct EnergyBin {
	double elow = 0;
	double ehigh = 0;
	double counts = 0;
};

struct UncertaintyReport {
	double average_uncertainty = 0; // percent
	double total_weight = 0;
	std::size_t n_bins = 0;
};

/// Value-weighted mean of the per-bin relative errors:
/// sum(|value_i| * err_i) / sum(|value_i|).  Bins with zero value carry no
/// weight.  Throws zero_weight when every bin is zero.
UncertaintyReport average_uncertainty(std::span<const TabRow> rows);

struct NpsEstimate {
	std::uint64_t required_nps = 0;
	std::uint64_t current_nps = 0;
	double current_u = 0;
	double target_u = 0;
	std::uint64_t granularity = 0;
	double raw = 0; // estimate before rounding up
};

/// Primaries needed to reach target_u assuming u ~ 1/sqrt(N):
/// N2 = (u1/u2)^2 * N1, rounded up to the next multiple of granularity.
NpsEstimate required_nps(double current_u, double target_u, std::uint64_t current_nps,
                         std::uint64_t granularity = 100000);

/// Count-weighted mean of bin midpoints: sum(mid_i * c_i) / sum(c_i).
double average_energy(std::span<const EnergyBin> bins);

} // namespace mcforge
