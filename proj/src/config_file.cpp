#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>

#include <CLI11.hpp>

#include "bandframe/errors.hpp"
#include "bandframe/pipeline.hpp"

namespace bandframe {

namespace {

using Values = std::vector<std::string>;
using Setter = std::function<void(RunConfig&, const std::string&, const Values&)>;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\"'");
  const auto e = s.find_last_not_of(" \t\"'");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

Values flatten(const Values& in) {
  Values out;
  for (const auto& v : in) {
    std::string item;
    for (char ch : v) {
      if (ch == ',' || ch == '[' || ch == ']') {
        if (!trim(item).empty()) out.push_back(trim(item));
        item.clear();
      } else {
        item += ch;
      }
    }
    if (!trim(item).empty()) out.push_back(trim(item));
  }
  return out;
}

double parse_plain(const std::string& key, const std::string& text) {
  if (text == "inf" || text == "+inf" || text == "infinity") {
    return std::numeric_limits<double>::infinity();
  }
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

double parse_number(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  if (const auto slash = text.find('/'); slash != std::string::npos) {
    const double den = parse_plain(key, trim(text.substr(slash + 1)));
    if (den == 0.0) throw ConfigError(key + ": division by zero in '" + text + "'");
    return parse_plain(key, trim(text.substr(0, slash))) / den;
  }
  return parse_plain(key, text);
}

long long parse_integer(const std::string& key, const std::string& raw) {
  const double v = parse_number(key, raw);
  if (!std::isfinite(v) || v != std::floor(v)) {
    throw ConfigError(key + ": expected an integer, got '" + raw + "'");
  }
  return static_cast<long long>(v);
}

std::size_t parse_count(const std::string& key, const std::string& raw) {
  const long long v = parse_integer(key, raw);
  if (v < 0) throw ConfigError(key + ": expected a non-negative integer, got '" + raw + "'");
  return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string t = trim(raw);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + raw + "'");
}

const std::string& single(const std::string& key, const Values& v) {
  if (v.size() != 1) {
    throw ConfigError(key + ": expected one value, got " + std::to_string(v.size()));
  }
  return v.front();
}

std::vector<double> numbers(const std::string& key, const Values& v) {
  std::vector<double> out;
  for (const auto& s : flatten(v)) out.push_back(parse_number(key, s));
  if (out.empty()) throw ConfigError(key + ": expected at least one value");
  return out;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"domain.kind",
       [](RunConfig& c, const std::string& k, const Values& v) {
         c.domain.kind = parse_domain_kind(trim(single(k, v)));
       }},
      {"domain.params",
       [](RunConfig& c, const std::string& k, const Values& v) { c.domain.params = numbers(k, v); }},
      {"domain.h",
       [](RunConfig& c, const std::string& k, const Values& v) {
         c.domain.h = parse_number(k, single(k, v));
       }},
      {"operator.coefficient",
       [](RunConfig& c, const std::string& k, const Values& v) { c.coefficient = trim(single(k, v)); }},
      {"operator.value",
       [](RunConfig& c, const std::string& k, const Values& v) {
         c.coefficient_value = parse_number(k, single(k, v));
       }},
      {"operator.amplitude",
       [](RunConfig& c, const std::string& k, const Values& v) {
         c.amplitude = parse_number(k, single(k, v));
       }},
      {"operator.matrix",
       [](RunConfig& c, const std::string& k, const Values& v) {
         const auto m = numbers(k, v);
         if (m.size() != 3) throw ConfigError(k + ": expected a11, a12, a22");
         c.matrix = {m[0], m[1], m[2]};
       }},
      {"solver.m",
       [](RunConfig& c, const std::string& k, const Values& v) {
         const std::string t = trim(single(k, v));
         c.m = t == "auto" ? 0 : parse_count(k, t);
       }},
      {"solver.tol",
       [](RunConfig& c, const std::string& k, const Values& v) { c.tol = parse_number(k, single(k, v)); }},
      {"solver.dense_threshold",
       [](RunConfig& c, const std::string& k, const Values& v) {
         c.dense_threshold = parse_count(k, single(k, v));
       }},
      {"solver.eta",
       [](RunConfig& c, const std::string& k, const Values& v) { c.eta = parse_number(k, single(k, v)); }},
      {"frame.delta",
       [](RunConfig& c, const std::string& k, const Values& v) {
         c.delta = parse_number(k, single(k, v));
       }},
      {"frame.a0",
       [](RunConfig& c, const std::string& k, const Values& v) {
         const std::string t = trim(single(k, v));
         if (t == "calibrate") {
           c.a0.reset();
         } else {
           c.a0 = parse_number(k, t);
         }
       }},
      {"frame.max_level",
       [](RunConfig& c, const std::string& k, const Values& v) {
         const std::string t = trim(single(k, v));
         if (t == "auto") {
           c.max_level.reset();
         } else {
           c.max_level = static_cast<int>(parse_integer(k, t));
         }
       }},
      {"frame.calibration_levels",
       [](RunConfig& c, const std::string& k, const Values& v) {
         c.calibration_levels.clear();
         for (const auto& s : flatten(v)) c.calibration_levels.push_back(static_cast<int>(parse_integer(k, s)));
       }},
      {"frame.calibration_trials",
       [](RunConfig& c, const std::string& k, const Values& v) {
         c.calibration_trials = parse_count(k, single(k, v));
       }},
      {"besov.alpha",
       [](RunConfig& c, const std::string& k, const Values& v) { c.alphas = numbers(k, v); }},
      {"besov.q", [](RunConfig& c, const std::string& k, const Values& v) { c.qs = numbers(k, v); }},
      {"test.seed",
       [](RunConfig& c, const std::string& k, const Values& v) {
         c.seed = static_cast<std::uint64_t>(parse_count(k, single(k, v)));
       }},
      {"test.trials",
       [](RunConfig& c, const std::string& k, const Values& v) { c.trials = parse_count(k, single(k, v)); }},
      {"test.functions",
       [](RunConfig& c, const std::string& k, const Values& v) {
         c.besov_functions = parse_count(k, single(k, v));
       }},
      {"test.iterations",
       [](RunConfig& c, const std::string& k, const Values& v) {
         c.reconstruct_iterations = parse_count(k, single(k, v));
       }},
      {"output.dir",
       [](RunConfig& c, const std::string& k, const Values& v) { c.output_dir = trim(single(k, v)); }},
      {"output.cache",
       [](RunConfig& c, const std::string& k, const Values& v) { c.use_cache = parse_bool(k, single(k, v)); }},
      {"output.write",
       [](RunConfig& c, const std::string& k, const Values& v) {
         c.write_files = parse_bool(k, single(k, v));
       }},
  };
  return table;
}

} // namespace

void apply_setting(RunConfig& config, const std::string& key, const std::vector<std::string>& values) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown setting '" + key + "'");
  it->second(config, key, values);
}

const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
  }();
  return keys;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue; // section markers
    std::string key;
    for (const auto& p : item.parents) key += p + ".";
    apply_setting(base, key + item.name, item.inputs);
  }
  return base;
}

} // namespace bandframe
