#include "cavqed/io.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "cavqed/errors.hpp"

namespace cavqed {

std::string format_number(double value) {
    std::array<char, 64> buffer{};
    const auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
    if (ec != std::errc{}) throw UsageError("number formatting failed");
    return std::string(buffer.data(), end);
}

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum) {
    out << "probe_mhz,reflectivity,stderr\n";
    const auto& se = spectrum.standard_error();
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        out << format_number(spectrum.probe()[i]) << ',' << format_number(spectrum.values()[i]) << ','
            << format_number(se ? (*se)[i] : 0.0) << '\n';
    }
}

void write_map_csv(std::ostream& out, const ReflectivityMap& map) {
    out << "probe_mhz,delta_ab_mhz,reflectivity\n";
    for (std::size_t r = 0; r < map.delta_ab.size(); ++r) {
        for (std::size_t c = 0; c < map.probe.size(); ++c) {
            out << format_number(map.probe[c]) << ',' << format_number(map.delta_ab[r]) << ','
                << format_number(map.at(r, c)) << '\n';
        }
    }
}

namespace {

double parse_field(const std::string& field, std::size_t line) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ConfigError("CSV line " + std::to_string(line) + ": cannot parse '" + field + "'",
                          static_cast<int>(line), 1);
    return value;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

} // namespace

Spectrum read_spectrum_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty spectrum CSV", 1, 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line);
    if (header.size() < 2 || header[0] != "probe_mhz" || header[1] != "reflectivity" ||
        (header.size() == 3 && header[2] != "stderr") || header.size() > 3)
        throw ConfigError("spectrum CSV header must be probe_mhz,reflectivity[,stderr]", 1, 1);
    const bool has_stderr = header.size() == 3;
    std::vector<double> probe, values, errors;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != header.size())
            throw ConfigError("CSV line " + std::to_string(number) + ": expected " + std::to_string(header.size()) +
                                  " fields",
                              static_cast<int>(number), 1);
        probe.push_back(parse_field(fields[0], number));
        values.push_back(parse_field(fields[1], number));
        if (has_stderr) errors.push_back(parse_field(fields[2], number));
    }
    std::optional<std::vector<double>> se;
    if (has_stderr) se = std::move(errors);
    try {
        return Spectrum::measured(std::move(probe), std::move(values), std::move(se));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("spectrum CSV: ") + e.what());
    }
}

} // namespace cavqed
