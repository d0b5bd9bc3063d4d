#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "rmtlab/model.hpp"

namespace rmtlab {

inline constexpr const char* kVersion = "0.1.0";

// Flat key = value text; '#' starts a comment. Later keys win.
std::map<std::string, std::string> parse_kv(const std::string& text);

// Documented keys: sigma_x2, sigma_y2, rho1..rho6, flavor, base, beta,
// symbol[.paired].family / .params, symbolN... for copy N.
struct ParsedSpec {
  CorrelationSpec spec;
  std::map<int, SymbolSpec> det_symbols;      // plain D copies
  std::map<int, SymbolSpec> det_gen_symbols;  // Dg copies (share the table)
  std::string canonical;                      // normalized key=value dump
};

ParsedSpec spec_from_kv(const std::map<std::string, std::string>& kv);
ParsedSpec load_spec_file(const std::string& path);
ParsedSpec load_spec_text(const std::string& text);

std::uint64_t fnv1a(const std::string& s);

// "# key: value" header lines shared by every output artifact.
std::string artifact_header(const std::string& tool, std::uint64_t seed,
                            const std::string& canonical_config);

std::string format_double(double v);  // fixed %.17g, for byte-stable output

}  // namespace rmtlab
