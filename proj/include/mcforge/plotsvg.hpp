#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mcforge/postproc.hpp"

namespace mcforge {

struct PlotSeries {
	std::vector<double> x;
	std::vector<double> y;
	std::vector<double> yerr; // absolute; empty when unknown
	std::string label;
};

struct PlotFlags {
	bool plot_error_bars = false;
	bool plot_blocks = false; // histogram-style steps
	bool log_scale = false;   // shorthand for semilogx + semilogy
	bool semilogx = false;
	bool semilogy = false;
};

struct PlotSpec {
	std::vector<PlotSeries> series;
	PlotFlags flags;
	std::string title;
	std::string x_label = "x";
	std::string y_label = "y";
};

/// Deterministic 800x600 SVG: identical spec -> identical bytes.
std::string render_svg(const PlotSpec& spec);

void render_plot(const PlotSpec& spec, const std::filesystem::path& out);

/// One SVG per store entry that carries a table, named after the store key
/// with .lis swapped for .svg.  Returns the written paths.
std::vector<std::filesystem::path> plot_store(const FlukaData& data, const PlotFlags& flags,
                                              const std::filesystem::path& out_dir);

} // namespace mcforge
