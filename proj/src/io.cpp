#include "rmtlab/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <vector>
#include <fstream>
#include <sstream>

namespace rmtlab {

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto notspace = [](unsigned char c) { return !std::isspace(c); };
    auto b = std::find_if(line.begin(), line.end(), notspace);
    auto e = std::find_if(line.rbegin(), line.rend(), notspace).base();
    if (b >= e) continue;
    std::string trimmed(b, e);
    auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError,
                  "line " + std::to_string(lineno) + ": expected key = value");
    auto strip = [&](std::string s) {
      auto b2 = std::find_if(s.begin(), s.end(), notspace);
      auto e2 = std::find_if(s.rbegin(), s.rend(), notspace).base();
      return b2 < e2 ? std::string(b2, e2) : std::string();
    };
    std::string key = strip(trimmed.substr(0, eq));
    std::string val = strip(trimmed.substr(eq + 1));
    if (key.empty())
      throw Error(ErrorCode::ConfigError,
                  "line " + std::to_string(lineno) + ": empty key");
    kv[key] = val;
  }
  return kv;
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw Error(ErrorCode::ConfigError, "bad numeric value for " + key);
  }
}

DeterministicSymbol symbol_from(const std::string& family,
                                const std::string& params) {
  std::istringstream is(params);
  if (family == "finite") {
    std::vector<std::pair<int, cplx>> support;
    std::string tok;
    while (is >> tok) {
      auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw Error(ErrorCode::ConfigError,
                    "finite symbol entries look like k:re[,im]");
      int k = std::stoi(tok.substr(0, colon));
      std::string val = tok.substr(colon + 1);
      double re = 0, im = 0;
      auto comma = val.find(',');
      if (comma == std::string::npos) {
        re = to_double("symbol", val);
      } else {
        re = to_double("symbol", val.substr(0, comma));
        im = to_double("symbol", val.substr(comma + 1));
      }
      support.emplace_back(k, cplx(re, im));
    }
    if (support.empty())
      throw Error(ErrorCode::ConfigError, "finite symbol needs entries");
    return DeterministicSymbol::finite(std::move(support));
  }
  std::vector<double> nums;
  double x;
  while (is >> x) nums.push_back(x);
  auto at = [&](std::size_t i, double dflt) {
    return i < nums.size() ? nums[i] : dflt;
  };
  if (family == "geometric") {
    if (nums.empty())
      throw Error(ErrorCode::ConfigError, "geometric symbol needs a ratio");
    cplx ratio(at(0, 0.5), at(1, 0.0));
    cplx scale(at(2, 1.0), at(3, 0.0));
    return DeterministicSymbol::geometric(ratio, scale);
  }
  if (family == "polydecay") {
    if (nums.empty())
      throw Error(ErrorCode::ConfigError, "polydecay symbol needs an exponent");
    return DeterministicSymbol::poly_decay(at(0, 2.0),
                                           cplx(at(1, 1.0), at(2, 0.0)));
  }
  throw Error(ErrorCode::ConfigError, "unknown symbol family: " + family);
}

}  // namespace

ParsedSpec spec_from_kv(const std::map<std::string, std::string>& kv) {
  ParsedSpec out;
  CorrelationSpec& s = out.spec;
  for (const auto& [key, val] : kv) {
    if (key == "sigma_x2") s.sigma_x2 = to_double(key, val);
    else if (key == "sigma_y2") s.sigma_y2 = to_double(key, val);
    else if (key == "rho1") s.rho[0] = to_double(key, val);
    else if (key == "rho2") s.rho[1] = to_double(key, val);
    else if (key == "rho3") s.rho[2] = to_double(key, val);
    else if (key == "rho4") s.rho[3] = to_double(key, val);
    else if (key == "rho5") s.rho[4] = to_double(key, val);
    else if (key == "rho6") s.rho[5] = to_double(key, val);
    else if (key == "flavor") s.flavor = flavor_from_string(val);
    else if (key == "base") s.base = base_law_from_string(val);
    else if (key == "beta") {
      double b = to_double(key, val);
      s.sigma_x2 = b;
      s.sigma_y2 = 1.0 - b;
    } else if (key == "moment_cap_check") {
      s.moment_cap_check = val == "1" || val == "true";
    } else if (key.rfind("symbol", 0) == 0) {
      // handled in the second pass
    } else {
      throw Error(ErrorCode::ConfigError, "unknown key: " + key);
    }
  }

  // symbol[N][.paired].family / .params
  std::map<std::pair<int, bool>, std::pair<std::string, std::string>> raw;
  for (const auto& [key, val] : kv) {
    if (key.rfind("symbol", 0) != 0) continue;
    std::string rest = key.substr(6);
    int copy = 1;
    std::size_t i = 0;
    while (i < rest.size() && std::isdigit((unsigned char)(rest[i]))) ++i;
    if (i > 0) copy = std::stoi(rest.substr(0, i));
    rest = rest.substr(i);
    bool paired = false;
    if (rest.rfind(".paired", 0) == 0) {
      paired = true;
      rest = rest.substr(7);
    }
    if (rest == ".family")
      raw[{copy, paired}].first = val;
    else if (rest == ".params")
      raw[{copy, paired}].second = val;
    else
      throw Error(ErrorCode::ConfigError, "unknown key: " + key);
  }
  std::map<int, DeterministicSymbol> primaries, paireds;
  for (const auto& [id, fam_par] : raw) {
    if (fam_par.first.empty())
      throw Error(ErrorCode::ConfigError,
                  "symbol entry is missing its family");
    auto sym = symbol_from(fam_par.first, fam_par.second);
    if (id.second)
      paireds.emplace(id.first, std::move(sym));
    else
      primaries.emplace(id.first, std::move(sym));
  }
  for (const auto& [copy, sym] : primaries) {
    SymbolSpec sp;
    sp.primary = sym;
    auto it = paireds.find(copy);
    if (it != paireds.end()) sp.paired = it->second;
    out.det_symbols[copy] = sp;
    out.det_gen_symbols[copy] = sp;
  }
  for (const auto& [copy, sym] : paireds)
    if (!primaries.count(copy))
      throw Error(ErrorCode::ConfigError,
                  "paired symbol without a primary for copy " +
                      std::to_string(copy));

  validate_spec(s);

  std::ostringstream canon;
  canon << s.canonical_string();
  for (const auto& [copy, sp] : out.det_symbols) {
    canon << ";symbol" << copy << "=" << sp.primary.canonical_string();
    if (sp.paired)
      canon << ";symbol" << copy << ".paired=" << sp.paired->canonical_string();
  }
  out.canonical = canon.str();
  return out;
}

ParsedSpec load_spec_text(const std::string& text) {
  return spec_from_kv(parse_kv(text));
}

ParsedSpec load_spec_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot open spec file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return load_spec_text(ss.str());
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string artifact_header(const std::string& tool, std::uint64_t seed,
                            const std::string& canonical_config) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%016llx",
                (unsigned long long)(fnv1a(canonical_config)));
  std::ostringstream os;
  os << "# tool: rmtlab " << tool << " v" << kVersion << "\n";
  os << "# seed: " << seed << "\n";
  os << "# config_hash: " << buf << "\n";
  return os.str();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace rmtlab
