#include "obsbandit/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace obsbandit::config {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_tokens(const std::string& value) {
  std::vector<std::string> tokens;
  std::string token;
  for (char c : value) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!token.empty()) tokens.push_back(std::move(token));
      token.clear();
    } else {
      token += c;
    }
  }
  if (!token.empty()) tokens.push_back(std::move(token));
  return tokens;
}

double parse_double(const std::string& value, const std::string& key) {
  char* end = nullptr;
  const double x = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0') {
    throw ConfigError("bad numeric value for '" + key + "': " + value);
  }
  return x;
}

long parse_long(const std::string& value, const std::string& key) {
  char* end = nullptr;
  const long x = std::strtol(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0') {
    throw ConfigError("bad integer value for '" + key + "': " + value);
  }
  return x;
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0') {
    throw ConfigError("bad unsigned value for '" + key + "': " + value);
  }
  return static_cast<std::uint64_t>(x);
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("bad boolean value for '" + key + "': " + value);
}

std::vector<long> parse_long_list(const std::string& value,
                                  const std::string& key) {
  std::vector<long> out;
  for (const auto& token : split_tokens(value)) {
    out.push_back(parse_long(token, key));
  }
  if (out.empty()) throw ConfigError("empty list for '" + key + "'");
  return out;
}

std::vector<double> parse_double_list(const std::string& value,
                                      const std::string& key) {
  std::vector<double> out;
  for (const auto& token : split_tokens(value)) {
    out.push_back(parse_double(token, key));
  }
  if (out.empty()) throw ConfigError("empty list for '" + key + "'");
  return out;
}

void apply_key(Resolved& r, const std::string& section, const std::string& key,
               const std::string& value) {
  auto& exp = r.experiment;
  auto& ver = r.verify;
  auto& out = r.output;
  const std::string which = section + "." + key;

  if (section == "sweep") {
    if (key == "n_arms") return void(exp.n_arms_sweep = parse_long_list(value, which));
    if (key == "d_y") return void(exp.d_y_sweep = parse_long_list(value, which));
    if (key == "d_x") return void(exp.d_x = parse_long(value, which));
  } else if (section == "run") {
    if (key == "horizon") return void(exp.horizon = parse_long(value, which));
    if (key == "repetitions") return void(exp.repetitions = parse_long(value, which));
    if (key == "delta") return void(exp.delta = parse_double(value, which));
    if (key == "seed") return void(exp.master_seed = parse_u64(value, which));
    if (key == "t_eff") return void(exp.t_eff = parse_long(value, which));
    if (key == "percentile") return void(exp.percentile = parse_double(value, which));
    if (key == "retain_traces") return void(exp.retain_traces = parse_bool(value, which));
    if (key == "redraw_instances") return void(exp.redraw_instances = parse_bool(value, which));
    if (key == "threads") return void(exp.threads = static_cast<int>(parse_long(value, which)));
  } else if (section == "instance") {
    if (key == "gamma_r") return void(exp.gamma_r = parse_double(value, which));
    if (key == "sensing") return void(exp.sensing_override = parse_double_list(value, which));
    if (key == "sigma_x") return void(exp.sigma_x_override = parse_double_list(value, which));
    if (key == "sigma_y") return void(exp.sigma_y_override = parse_double_list(value, which));
    if (key == "mu_star") return void(exp.mu_star_override = parse_double_list(value, which));
  } else if (section == "verify") {
    if (key == "n_arms") return void(ver.n_arms = parse_long(value, which));
    if (key == "d_y") return void(ver.d_y = parse_long(value, which));
    if (key == "horizon") return void(ver.horizon = parse_long(value, which));
    if (key == "reps") return void(ver.reps = parse_long(value, which));
    if (key == "samples") return void(ver.samples = parse_long(value, which));
    if (key == "gap_samples") return void(ver.gap_samples = parse_long(value, which));
    if (key == "scenarios") return void(ver.scenarios = parse_long(value, which));
    if (key == "scenario_horizon") return void(ver.scenario_horizon = parse_long(value, which));
    if (key == "tail_replicates") return void(ver.tail_replicates = parse_long(value, which));
    if (key == "lambda_t") return void(ver.lambda_t = parse_double(value, which));
    if (key == "prior_scale") return void(ver.prior_scale = parse_double(value, which));
    if (key == "target_scale") return void(ver.target_scale = parse_double(value, which));
    if (key == "growth_rate") return void(ver.growth_rate = parse_double(value, which));
  } else if (section == "output") {
    if (key == "dir") return void(out.dir = value);
    if (key == "traces") return void(out.traces = value);
    if (key == "summary") return void(out.summary = value);
    if (key == "reports") return void(out.reports = value);
    if (key == "echo") return void(out.echo = value);
  } else {
    throw ConfigError("unknown config section '" + section + "'");
  }
  throw ConfigError("unknown config key '" + which + "'");
}

std::string format_double_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

std::string join_longs(const std::vector<long>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += " ";
    out += std::to_string(values[i]);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += " ";
    out += format_double_full(values[i]);
  }
  return out;
}

}  // namespace

Resolved parse(const std::string& text) {
  Resolved resolved;
  std::istringstream stream(text);
  std::string line;
  std::string section;
  long line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("unterminated section header on line " +
                          std::to_string(line_no));
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value' on line " +
                        std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      throw ConfigError("key '" + key + "' appears before any section");
    }
    if (key.empty() || value.empty()) {
      throw ConfigError("empty key or value on line " + std::to_string(line_no));
    }
    apply_key(resolved, section, key, value);
  }
  return resolved;
}

Resolved parse_file(const std::string& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) throw ConfigError("cannot read config file: " + path);
  std::ostringstream content;
  content << stream.rdbuf();
  return parse(content.str());
}

std::string render(const Resolved& r) {
  const auto& exp = r.experiment;
  const auto& ver = r.verify;
  const auto& out = r.output;
  std::string text;
  text += "[sweep]\n";
  text += "n_arms = " + join_longs(exp.n_arms_sweep) + "\n";
  text += "d_y = " + join_longs(exp.d_y_sweep) + "\n";
  text += "d_x = " + std::to_string(exp.d_x) + "\n";
  text += "\n[run]\n";
  text += "horizon = " + std::to_string(exp.horizon) + "\n";
  text += "repetitions = " + std::to_string(exp.repetitions) + "\n";
  text += "delta = " + format_double_full(exp.delta) + "\n";
  text += "seed = " + std::to_string(exp.master_seed) + "\n";
  text += "t_eff = " + std::to_string(exp.t_eff) + "\n";
  text += "percentile = " + format_double_full(exp.percentile) + "\n";
  text += std::string("retain_traces = ") +
          (exp.retain_traces ? "true" : "false") + "\n";
  text += std::string("redraw_instances = ") +
          (exp.redraw_instances ? "true" : "false") + "\n";
  text += "threads = " + std::to_string(exp.threads) + "\n";
  text += "\n[instance]\n";
  text += "gamma_r = " + format_double_full(exp.gamma_r) + "\n";
  if (!exp.sensing_override.empty()) {
    text += "sensing = " + join_doubles(exp.sensing_override) + "\n";
  }
  if (!exp.sigma_x_override.empty()) {
    text += "sigma_x = " + join_doubles(exp.sigma_x_override) + "\n";
  }
  if (!exp.sigma_y_override.empty()) {
    text += "sigma_y = " + join_doubles(exp.sigma_y_override) + "\n";
  }
  if (!exp.mu_star_override.empty()) {
    text += "mu_star = " + join_doubles(exp.mu_star_override) + "\n";
  }
  text += "\n[verify]\n";
  text += "n_arms = " + std::to_string(ver.n_arms) + "\n";
  text += "d_y = " + std::to_string(ver.d_y) + "\n";
  text += "horizon = " + std::to_string(ver.horizon) + "\n";
  text += "reps = " + std::to_string(ver.reps) + "\n";
  text += "samples = " + std::to_string(ver.samples) + "\n";
  text += "gap_samples = " + std::to_string(ver.gap_samples) + "\n";
  text += "scenarios = " + std::to_string(ver.scenarios) + "\n";
  text += "scenario_horizon = " + std::to_string(ver.scenario_horizon) + "\n";
  text += "tail_replicates = " + std::to_string(ver.tail_replicates) + "\n";
  text += "lambda_t = " + format_double_full(ver.lambda_t) + "\n";
  text += "prior_scale = " + format_double_full(ver.prior_scale) + "\n";
  text += "target_scale = " + format_double_full(ver.target_scale) + "\n";
  text += "growth_rate = " + format_double_full(ver.growth_rate) + "\n";
  text += "\n[output]\n";
  text += "dir = " + out.dir + "\n";
  text += "traces = " + out.traces + "\n";
  text += "summary = " + out.summary + "\n";
  text += "reports = " + out.reports + "\n";
  text += "echo = " + out.echo + "\n";
  return text;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const char c : text) {
    hash ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string fingerprint(const Resolved& resolved) {
  // identifies the experiment: output locations do not change the digest
  Resolved keyed = resolved;
  keyed.output = OutputSettings{};
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(render(keyed))));
  return std::string(buf);
}

}  // namespace obsbandit::config
