#include "mcforge/stats.hpp"

#include <cmath>
#include <string>

#include "mcforge/errors.hpp"

namespace mcforge {

UncertaintyReport average_uncertainty(std::span<const TabRow> rows) {
	double weighted = 0;
	double weight = 0;
	for (const TabRow& row : rows) {
		double w = std::abs(row.value);
		weighted += w * row.err_pct;
		weight += w;
	}
	if (weight <= 0)
		raise(Errc::zero_weight, "all bins carry zero value; average uncertainty undefined");
	return UncertaintyReport{weighted / weight, weight, rows.size()};
}

NpsEstimate required_nps(double current_u, double target_u, std::uint64_t current_nps,
                         std::uint64_t granularity) {
	if (target_u <= 0)
		raise(Errc::invalid_target, "target uncertainty must be positive, got " +
		                                std::to_string(target_u));
	if (current_u <= 0)
		raise(Errc::invalid_target, "current uncertainty must be positive, got " +
		                                std::to_string(current_u));
	if (granularity == 0) granularity = 1;
	double ratio = current_u / target_u;
	double raw = ratio * ratio * static_cast<double>(current_nps);
	double blocks = std::ceil(raw / static_cast<double>(granularity));
	NpsEstimate est;
	est.required_nps = static_cast<std::uint64_t>(blocks) * granularity;
	est.current_nps = current_nps;
	est.current_u = current_u;
	est.target_u = target_u;
	est.granularity = granularity;
	est.raw = raw;
	return est;
}

double average_energy(std::span<const EnergyBin> bins) {
	double weighted = 0;
	double counts = 0;
	for (const EnergyBin& bin : bins) {
		double mid = 0.5 * (bin.elow + bin.ehigh);
		weighted += mid * bin.counts;
		counts += bin.counts;
	}
	if (counts <= 0) raise(Errc::zero_counts, "spectrum has no counts; mean energy undefined");
	return weighted / counts;
}

} // namespace mcforge
