#include "kresling/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace kresling {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size())
    throw Error(ErrorCode::ConfigError, "key '" + key + "' is not a number: '" + text + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hashpos = line.find('#');
    if (hashpos != std::string::npos) line.erase(hashpos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": empty key");
    c.values_[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string Config::serialize() const {
  std::ostringstream out;
  std::string current = "\x01";
  for (const auto& [key, value] : values_) {
    const auto dot = key.find('.');
    const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (section != current) {
      if (current != "\x01") out << '\n';
      if (!section.empty()) out << '[' << section << "]\n";
      current = section;
    }
    out << name << " = " << value << '\n';
  }
  return out.str();
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }
void Config::set(const std::string& key, double value) { values_[key] = format_double(value); }
void Config::set(const std::string& key, int value) { values_[key] = std::to_string(value); }
void Config::set(const std::string& key, const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? ", " : "") + format_double(values[i]);
  values_[key] = s;
}

void Config::merge(const Config& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::string Config::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::ConfigError, "missing key '" + key + "'");
  return it->second;
}

std::string Config::str(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::num(const std::string& key) const { return parse_double(key, str(key)); }

double Config::num(const std::string& key, double fallback) const {
  return has(key) ? num(key) : fallback;
}

int Config::integer(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const double v = num(key);
  if (v != static_cast<double>(static_cast<int>(v)))
    throw Error(ErrorCode::ConfigError, "key '" + key + "' must be an integer");
  return static_cast<int>(v);
}

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string v = str(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::ConfigError, "key '" + key + "' must be a boolean");
}

std::vector<double> Config::list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    // a:b:c expands to a, a+b, ..., c
    const auto c1 = item.find(':');
    if (c1 != std::string::npos) {
      const auto c2 = item.find(':', c1 + 1);
      if (c2 == std::string::npos) throw Error(ErrorCode::ConfigError, "range in '" + key + "' needs a:step:b");
      const double a = parse_double(key, item.substr(0, c1));
      const double st = parse_double(key, item.substr(c1 + 1, c2 - c1 - 1));
      const double b = parse_double(key, item.substr(c2 + 1));
      if (!(st > 0)) throw Error(ErrorCode::ConfigError, "range step in '" + key + "' must be positive");
      for (int i = 0; a + i * st <= b + 1e-9 * st; ++i) out.push_back(a + i * st);
      continue;
    }
    out.push_back(parse_double(key, item));
  }
  return out;
}

std::vector<double> Config::list(const std::string& key, const std::vector<double>& fallback) const {
  return has(key) ? list(key) : fallback;
}

std::string Config::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : serialize()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> preset_names() { return {"single5hz", "chain", "dual"}; }

Config preset(const std::string& name) {
  Config c = Config::parse(R"(
[structure]
kind = single
cells = 1
chirality = alternate
far_boundary = free

[design]
h0 = 0.03
theta0_deg = 70
R = 0.036
N = 6
m = 0.0588
j = 6.77e-5
ka = 6055
kb = 3743
kpsi = 0.007277

[damping]
beta = 0

[drive]
u_amp = 0.001
phi_amp = 0
freq = 5
phase = 0

[integrator]
dt = 1e-5
sample_rate = 240
t_end = 5
t_settle = 0
start = periodic
bound = 1000

[gidmd]
train_ratio = 0.6
train_ratios = 0.1:0.1:1
scaling = none
eta = auto
rcond_grid = 1e-10
eta_points = 10
max_iter = 10
validation_fraction = 0.2
bound_factor = 1000

[dmdc]
state = displacement
rank_total = 0
rank_state = 0
energy = 0.9999

[sweep]
freqs = 5

[linear]
n_k = 201
supercell_cells = 16
supercell_boundary = fixed

[diagnostics]
embed_dim = 3
delay = 0
mean_period = 0
horizon = 0
fit_fraction = 0.2
sigma_index = 2
thresholds = auto
spectrum_window = none

[run]
seed = 0
workers = 1

[output]
format = both
)");
  if (name == "single5hz") return c;
  if (name == "chain") {
    c.merge(Config::parse(R"(
[structure]
kind = chain
cells = 32
far_boundary = fixed

[damping]
beta = 10

[drive]
u_amp = 1e-5
freq = 50

[integrator]
dt = 2e-5
t_settle = 3
start = rest

[gidmd]
scaling = rms
rcond_grid = 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5

[sweep]
freqs = 10:10:130, 135:5:155, 160:10:220

[diagnostics]
sigma_index = 5
)"));
    return c;
  }
  if (name == "dual") {
    c.merge(Config::parse(R"(
[structure]
kind = dual
cells = 2
far_boundary = free

[design]
h0 = 0.05
theta0_deg = 70

[damping]
beta = 2

[drive]
u_amp = 0.002
freq = 5

[integrator]
dt = 2e-5
t_end = 20
t_settle = 10
start = rest

[gidmd]
scaling = rms
rcond_grid = 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4

[sweep]
freqs = 5:1:24
)"));
    return c;
  }
  throw Error(ErrorCode::ConfigError, "unknown preset '" + name + "'");
}

}  // namespace kresling
