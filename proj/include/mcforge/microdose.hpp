#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mcforge {

struct SpectrumBin {
	double elow = 0;  // GeV before to_lineal, keV/um after
	double ehigh = 0;
	double counts = 0;
	double sigma = 0; // absolute count uncertainty
};

/// Contiguous ascending bins.
struct LinearSpectrum {
	std::vector<SpectrumBin> bins;
};

struct GainPoint {
	double energy = 0; // GeV
	double gain = 1;
};

/// Detector gas-gain curve, sorted by energy; interpolated linearly in
/// log-energy and held flat beyond the tabulated range.
struct GainTable {
	std::vector<GainPoint> points;
	double at(double energy) const;
};

struct SiteGeometry {
	double dt_nm = 50;      // simulated site diameter
	double clf = 2.0 / 3.0; // mean chord length = clf * dt
	int flag = 0;           // gas-gain weighting off (0) / on (1)
};

struct LogSpectrum {
	std::vector<SpectrumBin> bins;
	int bins_per_decade = 60;
};

enum class SumConvention {
	dy_weighted, // integral-style sums over the log grid
	plain,       // literal unweighted sums
};

struct MicroSpectra {
	std::vector<double> y_mid; // keV/um
	std::vector<double> dy;
	std::vector<double> f, sigma_f;
	std::vector<double> d, sigma_d;
	double yF = 0, sigma_yF = 0;
	double yD = 0;
	double e_mean = 0; // GeV, mean deposited energy
	double q_avg = 0, sigma_q = 0;
	std::string kernel;
	SumConvention convention = SumConvention::dy_weighted;
};

LinearSpectrum weight_with_gains(const LinearSpectrum& spec, const GainTable& gains);

/// Energy deposition to lineal energy: y = E / (clf * dt), GeV -> keV and
/// nm -> um built into the factor.  Bin edges scale; counts and their
/// uncertainties are carried over unchanged.
LinearSpectrum to_lineal(const LinearSpectrum& spec, const SiteGeometry& geom);

/// Redistribute counts onto edges y_min * 10^(k/B) proportionally to bin
/// overlap; uncertainties combine in quadrature over the fractional
/// allocations.  Totals are conserved.
LogSpectrum log_rebin(const LinearSpectrum& spec, int bins_per_decade = 60);

double quality_kernel(double y, const std::string& kernel);
std::vector<std::string> quality_kernel_ids();

/// f(y), d(y), their means and the dose-averaged quality factor.  Uncertainty
/// fields start at zero; see propagate_uncertainty.
MicroSpectra compute_spectra(const LogSpectrum& spec, const SiteGeometry& geom,
                             const std::string& kernel = "icru40",
                             SumConvention convention = SumConvention::dy_weighted);

/// First-order propagation from the count uncertainties in spec onto sigma_f,
/// sigma_d, sigma_yF and sigma_q.  A caller-supplied sigma_yF replaces the
/// derived one.
void propagate_uncertainty(const LogSpectrum& spec, MicroSpectra& spectra,
                           std::optional<double> sigma_yF_override = {});

/// Writes ydy_spectrum.svg, lineal_distributions.csv and micro_summary.json.
std::vector<std::filesystem::path> emit_results(const MicroSpectra& spectra,
                                                const std::filesystem::path& out_dir);

} // namespace mcforge
