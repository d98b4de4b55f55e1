#pragma once

// CSV encodings shared by the command-line runners: '.' decimals, LF line
// endings, numbers in shortest round-trip form.

#include <iosfwd>
#include <span>
#include <string>

#include "cavqed/mode_sampler.hpp"
#include "cavqed/qed_core.hpp"
#include "cavqed/two_atom.hpp"

namespace cavqed {

std::string format_number(double value);

// probe_mhz,reflectivity,stderr (stderr 0 when the spectrum has none)
void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum);

// probe_mhz,delta_ab_mhz,reflectivity in row order of the map
void write_map_csv(std::ostream& out, const ReflectivityMap& map);

// Reads probe_mhz,reflectivity[,stderr]; values are not range-checked.
Spectrum read_spectrum_csv(std::istream& in);

} // namespace cavqed
