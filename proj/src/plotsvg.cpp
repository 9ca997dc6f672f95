#include "mcforge/plotsvg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mcforge/errors.hpp"
#include "mcforge/util.hpp"

namespace mcforge {

namespace {

constexpr double kWidth = 800, kHeight = 600;
constexpr double kLeft = 70, kRight = 775, kTop = 45, kBottom = 545;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string xml_escape(std::string_view text) {
	std::string out;
	for (char c : text) {
		switch (c) {
		case '&': out += "&amp;"; break;
		case '<': out += "&lt;"; break;
		case '>': out += "&gt;"; break;
		case '"': out += "&quot;"; break;
		case '\'': out += "&apos;"; break;
		default: out += c;
		}
	}
	return out;
}

std::string fmt(double v) {
	char buf[40];
	std::snprintf(buf, sizeof buf, "%.2f", v);
	return buf;
}

std::string fmt_tick(double v) {
	char buf[40];
	std::snprintf(buf, sizeof buf, "%g", v);
	return buf;
}

struct Axis {
	bool log = false;
	double lo = 0, hi = 1;          // in plot units (log10 when log)
	std::vector<double> ticks;      // in data units

	double transform(double v) const { return log ? std::log10(v) : v; }
	double frac(double v) const { return (transform(v) - lo) / (hi - lo); }
};

double nice_step(double range) {
	double raw = range / 10.0;
	double mag = std::pow(10.0, std::floor(std::log10(raw)));
	double norm = raw / mag;
	double step = norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0;
	return step * mag;
}

Axis make_axis(double lo, double hi, bool log, const char* name) {
	Axis axis;
	axis.log = log;
	if (log) {
		if (lo <= 0)
			raise(Errc::non_positive_log_data,
			      std::string(name) + " axis is logarithmic but holds values <= 0");
		double a = std::log10(lo), b = std::log10(hi);
		axis.lo = std::floor(a + 1e-12);
		axis.hi = std::ceil(b - 1e-12);
		if (axis.hi - axis.lo < 1) {
			axis.lo -= 1;
			axis.hi += 1;
		}
		for (double k = axis.lo; k <= axis.hi + 0.5; k += 1.0)
			axis.ticks.push_back(std::pow(10.0, k));
	} else {
		if (hi == lo) {
			double pad = lo == 0 ? 1.0 : std::abs(lo) * 0.5;
			lo -= pad;
			hi += pad;
		}
		double step = nice_step(hi - lo);
		axis.lo = std::floor(lo / step + 1e-9) * step;
		axis.hi = std::ceil(hi / step - 1e-9) * step;
		for (double v = axis.lo; v <= axis.hi + step * 0.5; v += step) {
			axis.ticks.push_back(std::abs(v) < step * 1e-9 ? 0.0 : v);
		}
	}
	return axis;
}

} // namespace

std::string render_svg(const PlotSpec& spec) {
	bool logx = spec.flags.log_scale || spec.flags.semilogx;
	bool logy = spec.flags.log_scale || spec.flags.semilogy;

	std::vector<const PlotSeries*> series;
	for (const PlotSeries& s : spec.series) {
		if (s.x.size() != s.y.size() || (!s.yerr.empty() && s.yerr.size() != s.y.size()))
			raise(Errc::empty_series,
			      "series '" + s.label + "': x, y and yerr lengths do not match");
		if (s.x.size() >= 2) series.push_back(&s);
	}
	if (series.empty()) raise(Errc::empty_series, "nothing to plot: no series with two points");

	bool bars = spec.flags.plot_error_bars;
	double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
	bool first = true;
	for (const PlotSeries* s : series) {
		for (std::size_t i = 0; i < s->x.size(); ++i) {
			double e = (bars && i < s->yerr.size()) ? s->yerr[i] : 0.0;
			double ylo = s->y[i] - e, yhi = s->y[i] + e;
			if ((logx && s->x[i] <= 0))
				raise(Errc::non_positive_log_data, "x axis is logarithmic but holds values <= 0");
			if (logy && ylo <= 0) {
				if (s->y[i] <= 0)
					raise(Errc::non_positive_log_data,
					      "y axis is logarithmic but holds values <= 0");
				ylo = s->y[i]; // bars may not cross zero on a log axis
			}
			if (first) {
				xmin = xmax = s->x[i];
				ymin = ylo;
				ymax = yhi;
				first = false;
			} else {
				xmin = std::min(xmin, s->x[i]);
				xmax = std::max(xmax, s->x[i]);
				ymin = std::min(ymin, ylo);
				ymax = std::max(ymax, yhi);
			}
		}
	}

	if (spec.flags.plot_blocks) {
		// staircases extend half a bin past the outer midpoints
		auto t = [&](double v) { return logx ? std::log10(v) : v; };
		auto u = [&](double v) { return logx ? std::pow(10.0, v) : v; };
		for (const PlotSeries* s : series) {
			std::size_t l = s->x.size() - 1;
			xmin = std::min(xmin, u(t(s->x[0]) - (t(s->x[1]) - t(s->x[0])) / 2));
			xmax = std::max(xmax, u(t(s->x[l]) + (t(s->x[l]) - t(s->x[l - 1])) / 2));
		}
	}

	Axis ax = make_axis(xmin, xmax, logx, "x");
	Axis ay = make_axis(ymin, ymax, logy, "y");
	auto px = [&](double v) { return kLeft + ax.frac(v) * (kRight - kLeft); };
	auto py = [&](double v) { return kBottom - ay.frac(v) * (kBottom - kTop); };

	std::string svg;
	svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
	       "viewBox=\"0 0 800 600\">\n";
	svg += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"#ffffff\"/>\n";

	// grid + ticks
	for (double t : ax.ticks) {
		std::string x = fmt(px(t));
		svg += "<line x1=\"" + x + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + x + "\" y2=\"" +
		       fmt(kBottom) + "\" stroke=\"#e6e6e6\"/>\n";
		svg += "<line x1=\"" + x + "\" y1=\"" + fmt(kBottom) + "\" x2=\"" + x + "\" y2=\"" +
		       fmt(kBottom + 5) + "\" stroke=\"#333333\"/>\n";
		svg += "<text x=\"" + x + "\" y=\"" + fmt(kBottom + 19) +
		       "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
		       xml_escape(fmt_tick(t)) + "</text>\n";
	}
	for (double t : ay.ticks) {
		std::string y = fmt(py(t));
		svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + y + "\" x2=\"" + fmt(kRight) +
		       "\" y2=\"" + y + "\" stroke=\"#e6e6e6\"/>\n";
		svg += "<line x1=\"" + fmt(kLeft - 5) + "\" y1=\"" + y + "\" x2=\"" + fmt(kLeft) +
		       "\" y2=\"" + y + "\" stroke=\"#333333\"/>\n";
		svg += "<text x=\"" + fmt(kLeft - 8) + "\" y=\"" + fmt(py(t) + 4) +
		       "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
		       xml_escape(fmt_tick(t)) + "</text>\n";
	}
	svg += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" +
	       fmt(kRight - kLeft) + "\" height=\"" + fmt(kBottom - kTop) +
	       "\" fill=\"none\" stroke=\"#333333\"/>\n";

	// series
	for (std::size_t si = 0; si < series.size(); ++si) {
		const PlotSeries& s = *series[si];
		const char* color = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
		if (spec.flags.plot_blocks) {
			// staircase through bin boundaries reconstructed from midpoints
			std::vector<double> tx(s.x.size());
			for (std::size_t i = 0; i < s.x.size(); ++i) tx[i] = ax.transform(s.x[i]);
			auto untransform = [&](double t) { return ax.log ? std::pow(10.0, t) : t; };
			std::string d;
			double b0 = untransform(tx[0] - (tx[1] - tx[0]) / 2);
			d += "M " + fmt(px(b0)) + " " + fmt(py(s.y[0]));
			for (std::size_t i = 0; i < s.x.size(); ++i) {
				double bnext = i + 1 < s.x.size()
				                   ? untransform((tx[i] + tx[i + 1]) / 2)
				                   : untransform(tx[i] + (tx[i] - tx[i - 1]) / 2);
				d += " L " + fmt(px(bnext)) + " " + fmt(py(s.y[i]));
				if (i + 1 < s.x.size()) d += " L " + fmt(px(bnext)) + " " + fmt(py(s.y[i + 1]));
			}
			svg += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + color +
			       "\" stroke-width=\"1.5\"/>\n";
		} else {
			std::string points;
			for (std::size_t i = 0; i < s.x.size(); ++i) {
				if (i) points += " ";
				points += fmt(px(s.x[i])) + "," + fmt(py(s.y[i]));
			}
			svg += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + color +
			       "\" stroke-width=\"1.5\"/>\n";
		}
		if (bars && !s.yerr.empty()) {
			svg += "<g stroke=\"" + std::string(color) + "\" stroke-width=\"1\">\n";
			for (std::size_t i = 0; i < s.x.size(); ++i) {
				double e = s.yerr[i];
				if (e <= 0) continue;
				double lo = s.y[i] - e, hi = s.y[i] + e;
				if (logy && lo <= 0) lo = s.y[i];
				std::string x = fmt(px(s.x[i]));
				svg += "<line x1=\"" + x + "\" y1=\"" + fmt(py(lo)) + "\" x2=\"" + x +
				       "\" y2=\"" + fmt(py(hi)) + "\"/>\n";
				svg += "<line x1=\"" + fmt(px(s.x[i]) - 3) + "\" y1=\"" + fmt(py(lo)) +
				       "\" x2=\"" + fmt(px(s.x[i]) + 3) + "\" y2=\"" + fmt(py(lo)) + "\"/>\n";
				svg += "<line x1=\"" + fmt(px(s.x[i]) - 3) + "\" y1=\"" + fmt(py(hi)) +
				       "\" x2=\"" + fmt(px(s.x[i]) + 3) + "\" y2=\"" + fmt(py(hi)) + "\"/>\n";
			}
			svg += "</g>\n";
		}
	}

	// legend
	for (std::size_t si = 0; si < series.size(); ++si) {
		const char* color = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
		double ly = kTop + 16 + 18 * static_cast<double>(si);
		svg += "<line x1=\"" + fmt(kRight - 150) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" +
		       fmt(kRight - 125) + "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + color +
		       "\" stroke-width=\"2\"/>\n";
		svg += "<text x=\"" + fmt(kRight - 120) + "\" y=\"" + fmt(ly) +
		       "\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(series[si]->label) +
		       "</text>\n";
	}

	svg += "<text x=\"400\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" "
	       "text-anchor=\"middle\">" +
	       xml_escape(spec.title) + "</text>\n";
	svg += "<text x=\"" + fmt((kLeft + kRight) / 2) +
	       "\" y=\"592\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" +
	       xml_escape(spec.x_label) + "</text>\n";
	svg += "<text x=\"16\" y=\"" + fmt((kTop + kBottom) / 2) +
	       "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
	       "transform=\"rotate(-90 16 " +
	       fmt((kTop + kBottom) / 2) + ")\">" + xml_escape(spec.y_label) + "</text>\n";
	svg += "</svg>\n";
	return svg;
}

void render_plot(const PlotSpec& spec, const std::filesystem::path& out) {
	write_file(out, render_svg(spec));
}

std::vector<std::filesystem::path> plot_store(const FlukaData& data, const PlotFlags& flags,
                                              const std::filesystem::path& out_dir) {
	std::vector<std::filesystem::path> written;
	std::filesystem::create_directories(out_dir);
	for (const auto& [name, entry] : data.files) {
		if (entry.rows.empty()) continue;
		PlotSeries series;
		series.label = entry.detector.empty() ? name : entry.detector;
		for (const TabRow& row : entry.rows) {
			series.x.push_back((row.elow + row.ehigh) / 2.0);
			series.y.push_back(row.value);
			series.yerr.push_back(row.value * row.err_pct / 100.0);
		}
		PlotSpec spec;
		spec.series = {std::move(series)};
		spec.flags = flags;
		spec.title = name;
		spec.x_label = "E";
		spec.y_label = "value";

		std::string stem = name;
		if (stem.ends_with(".lis")) stem.resize(stem.size() - 4);
		auto out = out_dir / (stem + ".svg");
		render_plot(spec, out);
		written.push_back(out);
	}
	return written;
}

} // namespace mcforge
