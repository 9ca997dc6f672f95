#include "mcforge/plotsvg.hpp"

#include <vector>

#include "doctest.h"
#include "mcforge/errors.hpp"
#include "mcforge/util.hpp"
#include "scoped_dir.hpp"

using namespace mcforge;

namespace {

// minimal XML well-formedness check: every opened tag is closed in order
bool well_formed(const std::string& text) {
	std::vector<std::string> stack;
	std::size_t i = 0;
	while ((i = text.find('<', i)) != std::string::npos) {
		std::size_t end = text.find('>', i);
		if (end == std::string::npos) return false;
		std::string tag = text.substr(i + 1, end - i - 1);
		if (!tag.empty() && tag.front() == '/') {
			std::string name = tag.substr(1);
			if (stack.empty() || stack.back() != name) return false;
			stack.pop_back();
		} else if (!tag.empty() && tag.back() != '/' && tag.front() != '?' && tag.front() != '!') {
			std::string name = tag.substr(0, tag.find_first_of(" \t\n"));
			stack.push_back(name);
		}
		i = end + 1;
	}
	return stack.empty();
}

PlotSpec two_point() {
	PlotSpec spec;
	spec.series.push_back({{0.0, 1.0}, {2.0, 3.0}, {}, "demo"});
	spec.title = "demo plot";
	return spec;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
	std::size_t count = 0, pos = 0;
	while ((pos = text.find(needle, pos)) != std::string::npos) {
		++count;
		pos += needle.size();
	}
	return count;
}

} // namespace

TEST_CASE("a two-point series renders as one polyline with two vertices") {
	std::string svg = render_svg(two_point());
	CHECK(well_formed(svg));
	REQUIRE(count_of(svg, "<polyline") == 1);
	auto start = svg.find("<polyline points=\"");
	auto stop = svg.find("\"", start + 18);
	std::string points = svg.substr(start + 18, stop - start - 18);
	CHECK(count_of(points, ",") == 2);
	CHECK(svg.find("demo plot") != std::string::npos);
}

TEST_CASE("identical specs give byte-identical output") {
	CHECK(render_svg(two_point()) == render_svg(two_point()));
}

TEST_CASE("log x axis puts ticks at the decades") {
	PlotSpec spec;
	spec.series.push_back({{1e-3, 1e-1, 10.0}, {1.0, 2.0, 3.0}, {}, "s"});
	spec.flags.semilogx = true;
	std::string svg = render_svg(spec);
	for (const char* label : {">0.001<", ">0.01<", ">0.1<", ">1<", ">10<"})
		CHECK(svg.find(label) != std::string::npos);
}

TEST_CASE("linear axes settle near ten ticks") {
	PlotSpec spec;
	spec.series.push_back({{0.0, 100.0}, {0.0, 100.0}, {}, "s"});
	std::string svg = render_svg(spec);
	for (const char* label : {">0<", ">10<", ">50<", ">100<"})
		CHECK(svg.find(label) != std::string::npos);
}

TEST_CASE("log_scale is shorthand for log-log") {
	PlotSpec spec;
	spec.series.push_back({{1.0, 10.0}, {1.0, 100.0}, {}, "s"});
	spec.flags.log_scale = true;
	std::string svg = render_svg(spec);
	CHECK(svg.find(">100<") != std::string::npos);
	CHECK(well_formed(svg));
}

TEST_CASE("non-positive data on a log axis is rejected naming the axis") {
	PlotSpec spec = two_point(); // x starts at 0
	spec.flags.semilogx = true;
	try {
		render_svg(spec);
		FAIL("expected non_positive_log_data");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::non_positive_log_data);
		CHECK(std::string(e.what()).find("x axis") != std::string::npos);
	}

	PlotSpec yspec;
	yspec.series.push_back({{1.0, 2.0}, {0.0, 1.0}, {}, "s"});
	yspec.flags.semilogy = true;
	try {
		render_svg(yspec);
		FAIL("expected non_positive_log_data");
	} catch (const McError& e) {
		CHECK(std::string(e.what()).find("y axis") != std::string::npos);
	}
}

TEST_CASE("a plot without a usable series is rejected") {
	PlotSpec empty;
	CHECK_THROWS_AS(render_svg(empty), McError);
	PlotSpec one_point;
	one_point.series.push_back({{1.0}, {2.0}, {}, "s"});
	try {
		render_svg(one_point);
		FAIL("expected empty_series");
	} catch (const McError& e) {
		CHECK(e.code() == Errc::empty_series);
	}
}

TEST_CASE("step rendering replaces the polyline with a staircase path") {
	PlotSpec spec = two_point();
	spec.flags.plot_blocks = true;
	std::string svg = render_svg(spec);
	CHECK(svg.find("<polyline") == std::string::npos);
	CHECK(svg.find("<path d=\"M") != std::string::npos);
	CHECK(well_formed(svg));
}

TEST_CASE("error bars draw three segments per point") {
	PlotSpec spec;
	spec.series.push_back({{1.0, 2.0, 3.0}, {10.0, 20.0, 30.0}, {1.0, 2.0, 0.0}, "s"});
	spec.flags.plot_error_bars = true;
	std::string svg = render_svg(spec);
	auto open = svg.find("<g stroke=");
	REQUIRE(open != std::string::npos);
	auto close = svg.find("</g>", open);
	std::string group = svg.substr(open, close - open);
	CHECK(count_of(group, "<line") == 6); // two points carry bars, the zero one none
}

TEST_CASE("labels are XML-escaped") {
	PlotSpec spec = two_point();
	spec.series[0].label = "a<b & c";
	spec.title = "\"quoted\"";
	std::string svg = render_svg(spec);
	CHECK(svg.find("a&lt;b &amp; c") != std::string::npos);
	CHECK(svg.find("&quot;quoted&quot;") != std::string::npos);
	CHECK(well_formed(svg));
}

TEST_CASE("plot_store renders one SVG per entry with rows") {
	ScopedDir dir("plot");
	FlukaData data;
	FileEntry tab;
	tab.type = FileEntry::Type::tab;
	tab.detector = "piFluenU";
	tab.rows = {{1e-3, 2e-3, 5.0, 2.0}, {2e-3, 3e-3, 7.0, 1.5}, {3e-3, 4e-3, 1.0, 9.0}};
	data.files["output_fort_46_tab.lis"] = tab;
	FileEntry rowless;
	rowless.type = FileEntry::Type::sum;
	data.files["output_fort_50_sum.lis"] = rowless;

	PlotFlags flags;
	flags.semilogx = true;
	flags.plot_error_bars = true;
	auto written = plot_store(data, flags, dir.path());
	REQUIRE(written.size() == 1);
	CHECK(written[0].filename() == "output_fort_46_tab.svg");
	std::string svg = read_file(written[0]);
	CHECK(well_formed(svg));
	CHECK(svg.find("piFluenU") != std::string::npos);

	CHECK(plot_store(FlukaData{}, flags, dir.path()).empty());
}
