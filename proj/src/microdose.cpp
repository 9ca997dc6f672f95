#include "mcforge/microdose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "mcforge/errors.hpp"
#include "mcforge/plotsvg.hpp"
#include "mcforge/util.hpp"

namespace mcforge {

double GainTable::at(double energy) const {
	if (points.empty()) raise(Errc::empty_gain_table, "gain table has no points");
	if (points.size() == 1 || energy <= points.front().energy) return points.front().gain;
	if (energy >= points.back().energy) return points.back().gain;
	auto hi = std::lower_bound(points.begin(), points.end(), energy,
	                           [](const GainPoint& p, double e) { return p.energy < e; });
	auto lo = hi - 1;
	double t = (std::log(energy) - std::log(lo->energy)) /
	           (std::log(hi->energy) - std::log(lo->energy));
	return lo->gain + t * (hi->gain - lo->gain);
}

LinearSpectrum weight_with_gains(const LinearSpectrum& spec, const GainTable& gains) {
	if (gains.points.empty()) raise(Errc::empty_gain_table, "gain table has no points");
	LinearSpectrum out = spec;
	for (SpectrumBin& bin : out.bins) {
		double g = gains.at((bin.elow + bin.ehigh) / 2.0);
		bin.counts *= g;
		bin.sigma *= g;
	}
	return out;
}

LinearSpectrum to_lineal(const LinearSpectrum& spec, const SiteGeometry& geom) {
	// keV per GeV over um per (clf * nm)
	double factor = 1e6 / (geom.clf * geom.dt_nm * 1e-3);
	LinearSpectrum out = spec;
	for (SpectrumBin& bin : out.bins) {
		bin.elow *= factor;
		bin.ehigh *= factor;
	}
	return out;
}

LogSpectrum log_rebin(const LinearSpectrum& spec, int bins_per_decade) {
	if (spec.bins.empty()) raise(Errc::zero_counts, "cannot rebin an empty spectrum");
	double ymin = spec.bins.front().elow;
	double ymax = spec.bins.back().ehigh;
	if (ymin <= 0)
		raise(Errc::non_positive_edge,
		      "logarithmic binning needs a positive lower edge, got " + std::to_string(ymin));

	int b = bins_per_decade;
	int k = static_cast<int>(std::ceil(b * std::log10(ymax / ymin) - 1e-9));
	k = std::max(k, 1);
	std::vector<double> edges(k + 1);
	for (int i = 0; i <= k; ++i) edges[i] = ymin * std::pow(10.0, i / static_cast<double>(b));
	edges.back() = std::max(edges.back(), ymax);

	LogSpectrum out;
	out.bins_per_decade = b;
	out.bins.resize(k);
	std::vector<double> var(k, 0.0);
	for (int i = 0; i < k; ++i) {
		out.bins[i].elow = edges[i];
		out.bins[i].ehigh = edges[i + 1];
	}
	for (const SpectrumBin& src : spec.bins) {
		double width = src.ehigh - src.elow;
		auto it = std::upper_bound(edges.begin(), edges.end(), src.elow);
		int j = std::max<int>(0, static_cast<int>(it - edges.begin()) - 1);
		for (; j < k && edges[j] < src.ehigh; ++j) {
			double overlap = std::min(src.ehigh, edges[j + 1]) - std::max(src.elow, edges[j]);
			if (overlap <= 0) continue;
			double frac = width > 0 ? overlap / width : 1.0;
			out.bins[j].counts += frac * src.counts;
			var[j] += frac * src.sigma * frac * src.sigma;
			if (width <= 0) break;
		}
	}
	for (int i = 0; i < k; ++i) out.bins[i].sigma = std::sqrt(var[i]);
	return out;
}

double quality_kernel(double y, const std::string& kernel) {
	if (kernel == "icru40")
		return 5510.0 / y * (1.0 - std::exp(-5e-5 * y * y - 2e-7 * y * y * y));
	if (kernel == "appendix-literal")
		return 5.6e-5 * y * y * (1.0 - std::exp(-5e-5 * y) - 2e-6 * y);
	raise(Errc::unknown_kernel, "no quality kernel named '" + kernel + "'");
}

std::vector<std::string> quality_kernel_ids() { return {"icru40", "appendix-literal"}; }

MicroSpectra compute_spectra(const LogSpectrum& spec, const SiteGeometry& geom,
                             const std::string& kernel, SumConvention convention) {
	double total = 0;
	for (const SpectrumBin& bin : spec.bins) total += bin.counts;
	if (total <= 0) raise(Errc::zero_counts, "spectrum holds no counts");

	MicroSpectra ms;
	ms.kernel = kernel;
	ms.convention = convention;
	std::size_t n = spec.bins.size();
	ms.y_mid.resize(n);
	ms.dy.resize(n);
	ms.f.resize(n);
	ms.sigma_f.assign(n, 0.0);
	ms.d.resize(n);
	ms.sigma_d.assign(n, 0.0);

	for (std::size_t i = 0; i < n; ++i) {
		ms.y_mid[i] = (spec.bins[i].elow + spec.bins[i].ehigh) / 2.0;
		ms.dy[i] = spec.bins[i].ehigh - spec.bins[i].elow;
		ms.f[i] = spec.bins[i].counts / (ms.dy[i] * total);
	}
	for (std::size_t i = 0; i < n; ++i) ms.yF += ms.y_mid[i] * ms.f[i] * ms.dy[i];
	for (std::size_t i = 0; i < n; ++i) ms.d[i] = ms.y_mid[i] * ms.f[i] / ms.yF;
	for (std::size_t i = 0; i < n; ++i) ms.yD += ms.y_mid[i] * ms.d[i] * ms.dy[i];

	double s = 0, t = 0;
	for (std::size_t i = 0; i < n; ++i) {
		double w = convention == SumConvention::dy_weighted ? ms.dy[i] : 1.0;
		s += ms.d[i] * w;
		t += quality_kernel(ms.y_mid[i], kernel) * ms.d[i] * w;
	}
	ms.q_avg = t / s;

	double chord_um = geom.clf * geom.dt_nm * 1e-3;
	ms.e_mean = ms.yF * chord_um / 1e6; // back to GeV
	return ms;
}

void propagate_uncertainty(const LogSpectrum& spec, MicroSpectra& ms,
                           std::optional<double> sigma_yF_override) {
	std::size_t n = spec.bins.size();
	double total = 0, var_total = 0;
	for (const SpectrumBin& bin : spec.bins) {
		total += bin.counts;
		var_total += bin.sigma * bin.sigma;
	}
	double rel_total2 = total > 0 ? var_total / (total * total) : 0.0;

	for (std::size_t i = 0; i < n; ++i) {
		if (spec.bins[i].counts <= 0) {
			ms.sigma_f[i] = 0;
			continue;
		}
		double rel_c = spec.bins[i].sigma / spec.bins[i].counts;
		ms.sigma_f[i] = ms.f[i] * std::sqrt(rel_c * rel_c + rel_total2);
	}

	if (sigma_yF_override) {
		ms.sigma_yF = *sigma_yF_override;
	} else {
		double var = 0;
		for (std::size_t i = 0; i < n; ++i) {
			double term = ms.y_mid[i] * ms.dy[i] * ms.sigma_f[i];
			var += term * term;
		}
		ms.sigma_yF = std::sqrt(var);
	}

	double rel_yF = ms.yF > 0 ? ms.sigma_yF / ms.yF : 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		if (ms.f[i] <= 0) {
			ms.sigma_d[i] = 0;
			continue;
		}
		double rel_f = ms.sigma_f[i] / ms.f[i];
		ms.sigma_d[i] = ms.d[i] * std::sqrt(rel_f * rel_f + rel_yF * rel_yF);
	}

	double s = 0, t = 0;
	std::vector<double> q(n);
	for (std::size_t i = 0; i < n; ++i) {
		double w = ms.convention == SumConvention::dy_weighted ? ms.dy[i] : 1.0;
		q[i] = quality_kernel(ms.y_mid[i], ms.kernel);
		s += ms.d[i] * w;
		t += q[i] * ms.d[i] * w;
	}
	double var_q = 0;
	for (std::size_t i = 0; i < n; ++i) {
		double w = ms.convention == SumConvention::dy_weighted ? ms.dy[i] : 1.0;
		double dq_dd = (q[i] * s - t) * w / (s * s);
		var_q += dq_dd * ms.sigma_d[i] * dq_dd * ms.sigma_d[i];
	}
	ms.sigma_q = std::sqrt(var_q);
}

std::vector<std::filesystem::path> emit_results(const MicroSpectra& ms,
                                                const std::filesystem::path& out_dir) {
	std::filesystem::create_directories(out_dir);
	std::vector<std::filesystem::path> written;

	PlotSeries series;
	series.label = "y d(y)";
	for (std::size_t i = 0; i < ms.y_mid.size(); ++i) {
		series.x.push_back(ms.y_mid[i]);
		series.y.push_back(ms.y_mid[i] * ms.d[i]);
		series.yerr.push_back(ms.y_mid[i] * ms.sigma_d[i]);
	}
	PlotSpec plot;
	plot.series = {std::move(series)};
	plot.flags.semilogx = true;
	plot.flags.plot_blocks = true;
	plot.flags.plot_error_bars = true;
	plot.title = "Dose distribution of lineal energy";
	plot.x_label = "y [keV/um]";
	plot.y_label = "y d(y)";
	auto svg = out_dir / "ydy_spectrum.svg";
	render_plot(plot, svg);
	written.push_back(svg);

	std::string csv = "y_mid,f,sigma_f,d,sigma_d\n";
	char buf[200];
	for (std::size_t i = 0; i < ms.y_mid.size(); ++i) {
		std::snprintf(buf, sizeof buf, "%.10e,%.10e,%.10e,%.10e,%.10e\n", ms.y_mid[i], ms.f[i],
		              ms.sigma_f[i], ms.d[i], ms.sigma_d[i]);
		csv += buf;
	}
	auto csv_path = out_dir / "lineal_distributions.csv";
	write_file(csv_path, csv);
	written.push_back(csv_path);

	nlohmann::json summary;
	summary["e_mean"] = ms.e_mean;
	summary["yF"] = ms.yF;
	summary["sigma_yF"] = ms.sigma_yF;
	summary["yD"] = ms.yD;
	summary["q_avg"] = ms.q_avg;
	summary["sigma_q"] = ms.sigma_q;
	summary["kernel"] = ms.kernel;
	auto json_path = out_dir / "micro_summary.json";
	write_file_atomic(json_path, summary.dump(2) + "\n");
	written.push_back(json_path);
	return written;
}

} // namespace mcforge
