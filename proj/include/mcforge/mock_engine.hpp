#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mcforge/deck.hpp"

namespace mcforge {

/// Stand-in for the transport engine: deterministic pseudo-histograms with
/// counting-statistics error bars, written as binary containers that the
/// matching mock utilities can merge and decrypt.

struct MockBin {
	double elow = 0;
	double ehigh = 0;
	double value = 0;
	double err_pct = 0;
};

struct MockContainer {
	std::uint32_t unit = 0;
	std::string card;     // scoring card keyword that produced this unit
	std::string detector; // SDUM of the scoring card, or det_uNN
	std::uint64_t nps = 0;
	std::vector<MockBin> bins;
};

struct MockEngineSpec {
	double peak_energy = 0.01; // GeV
	double relative_width = 0.25;
	int bins = 100;
	double emin = 0; // 0 -> derived from peak and width
	double emax = 0;
	// Flat calibrated error: every bin gets err_ref_pct * sqrt(err_ref_nps/nps).
	std::optional<double> err_ref_pct;
	double err_ref_nps = 1e6;
};

struct ScoringUnit {
	std::uint32_t unit = 0;
	std::string card;
	std::string detector;
};

/// Scoring cards declare their output unit in WHAT(3); DETECT is hardwired
/// to unit 17.  Units outside 17-99 are ignored.
std::vector<ScoringUnit> scoring_units(const InputDeck& deck);

/// Spec assembled from @mock_* directives with built-in defaults.
MockEngineSpec mock_spec_from_deck(const InputDeck& deck);

std::uint64_t deck_nps(const InputDeck& deck); // START WHAT(1)
long long deck_seed(const InputDeck& deck);    // RANDOMIZ WHAT(2), default 1

/// One container per scoring unit, named <out_base>_fort.<unit>.
std::vector<std::filesystem::path> mock_simulate(const InputDeck& deck,
                                                 const MockEngineSpec& spec,
                                                 const std::filesystem::path& out_dir,
                                                 const std::string& out_base);

/// Convenience wrapper used by the engine binary: parses the deck file and
/// writes containers next to it under the run-cycle naming convention
/// (<stem>001_fort.xx).
std::vector<std::filesystem::path> mock_run_input_file(const std::filesystem::path& input);

void write_container(const std::filesystem::path& path, const MockContainer& container);
MockContainer read_container(const std::filesystem::path& path);

/// Cycle merge: values averaged, errors combined as independent estimates of
/// the same mean (quadrature sum / n), primaries added.
MockContainer merge_containers(const std::vector<MockContainer>& cycles);

} // namespace mcforge
