#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "lattes_forge/dynamics.hpp"
#include "lattes_forge/elliptic.hpp"
#include "lattes_forge/perturbation.hpp"
#include "lattes_forge/rational_map.hpp"

namespace lattes_forge::io {

inline constexpr const char* kSchemaVersion = "1";
inline constexpr const char* kCsvVersion = "1";

// {"degree": D, "num": [[re, im], ...], "den": [[re, im], ...]}
std::string map_to_json(const RationalMapCoeffs& f);
// Throws ParseError on malformed documents and InvalidArgument when the
// coefficients do not describe a degree-D map.
RationalMapCoeffs map_from_json(std::string_view text);

std::string certify_to_json(const perturbation::CertifyReport& report);
std::string construction_to_json(const perturbation::ConstructionResult& result);
std::string theta_data_to_json(const elliptic::ThetaData& data);

// Fixed columns; the first line is "# lattes_forge convergence v1".
std::string table_to_csv(const perturbation::ConvergenceTable& table);

// Writes to a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace lattes_forge::io
