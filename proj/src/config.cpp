// SPDX-License-Identifier: MIT
#include "vispinn/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

namespace vispinn {

namespace {

struct Cursor {
  const std::string& line;
  std::size_t pos = 0;
  const std::string& source;
  int lineno = 0;

  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorKind::config, fmt::format("{}:{}: {}", source, lineno, msg));
  }
  void skip_ws() {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= line.size() || line[pos] == '#';
  }
  char peek() const { return pos < line.size() ? line[pos] : '\0'; }
};

ConfigValue parse_scalar(Cursor& c) {
  ConfigValue v;
  v.line = c.lineno;
  c.skip_ws();
  const char ch = c.peek();
  if (ch == '"') {
    ++c.pos;
    v.type = ConfigValue::Type::string;
    while (true) {
      if (c.pos >= c.line.size()) c.error("unterminated string");
      const char x = c.line[c.pos++];
      if (x == '"') break;
      if (x == '\\') {
        if (c.pos >= c.line.size()) c.error("unterminated string");
        const char e = c.line[c.pos++];
        switch (e) {
          case 'n': v.text += '\n'; break;
          case 't': v.text += '\t'; break;
          case '"': v.text += '"'; break;
          case '\\': v.text += '\\'; break;
          default: c.error(fmt::format("unsupported escape '\\{}'", e));
        }
      } else {
        v.text += x;
      }
    }
    return v;
  }
  std::size_t end = c.pos;
  while (end < c.line.size() && c.line[end] != ',' && c.line[end] != ']' && c.line[end] != '#' &&
         !std::isspace(static_cast<unsigned char>(c.line[end]))) {
    ++end;
  }
  std::string tok = c.line.substr(c.pos, end - c.pos);
  c.pos = end;
  if (tok.empty()) c.error("expected a value");
  if (tok == "true" || tok == "false") {
    v.type = ConfigValue::Type::boolean;
    v.boolean = tok == "true";
    return v;
  }
  std::string digits;
  for (char x : tok) {
    if (x != '_') digits += x;
  }
  if (!digits.empty() && digits[0] == '+') digits.erase(0, 1);
  double num = 0.0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), num);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || !std::isfinite(num)) {
    c.error(fmt::format("invalid value '{}'", tok));
  }
  v.type = ConfigValue::Type::number;
  v.number = num;
  v.text = tok;
  return v;
}

ConfigValue parse_value(Cursor& c) {
  c.skip_ws();
  if (c.peek() != '[') return parse_scalar(c);
  ConfigValue v;
  v.type = ConfigValue::Type::array;
  v.line = c.lineno;
  ++c.pos;
  c.skip_ws();
  if (c.peek() == ']') {
    ++c.pos;
    return v;
  }
  while (true) {
    c.skip_ws();
    if (c.peek() == '[') c.error("nested arrays are not supported");
    v.items.push_back(parse_scalar(c));
    c.skip_ws();
    if (c.peek() == ',') {
      ++c.pos;
      c.skip_ws();
      if (c.peek() == ']') {
        ++c.pos;
        break;
      }
      continue;
    }
    if (c.peek() == ']') {
      ++c.pos;
      break;
    }
    c.error("expected ',' or ']' in array");
  }
  return v;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char x : k) {
    if (!(std::isalnum(static_cast<unsigned char>(x)) || x == '_' || x == '-')) return false;
  }
  return true;
}

}  // namespace

ConfigFile parse_config(const std::string& text, const std::string& source) {
  ConfigFile out;
  out.source = source;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    Cursor c{line, 0, out.source, lineno};
    if (c.done()) continue;
    if (c.peek() == '[') c.error("tables are not supported; use flat keys");
    const std::size_t eq = line.find('=', c.pos);
    if (eq == std::string::npos) c.error("expected 'key = value'");
    std::string key = line.substr(c.pos, eq - c.pos);
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
    if (!valid_key(key)) c.error(fmt::format("invalid key '{}'", key));
    if (out.has(key)) c.error(fmt::format("duplicate key '{}'", key));
    c.pos = eq + 1;
    ConfigValue v = parse_value(c);
    if (!c.done()) c.error(fmt::format("unexpected text after value of '{}'", key));
    out.entries.emplace(key, std::move(v));
  }
  return out;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, fmt::format("cannot open config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

namespace {

class Reader {
 public:
  explicit Reader(const ConfigFile& f) : f_(f) {}

  [[noreturn]] void error(const ConfigValue& v, const std::string& key, const std::string& msg) const {
    fail(ErrorKind::config, fmt::format("{}:{}: key '{}': {}", f_.source, v.line, key, msg));
  }

  const ConfigValue* get(const std::string& key) {
    seen_.push_back(key);
    auto it = f_.entries.find(key);
    return it == f_.entries.end() ? nullptr : &it->second;
  }

  double number(const ConfigValue& v, const std::string& key) const {
    if (v.type != ConfigValue::Type::number) error(v, key, "expected a number");
    return v.number;
  }

  long long integer(const ConfigValue& v, const std::string& key) const {
    const double x = number(v, key);
    if (x != std::floor(x) || std::abs(x) > 9.0e15) error(v, key, "expected an integer");
    return static_cast<long long>(x);
  }

  void real(const std::string& key, double& dst, double lo = -INFINITY) {
    if (const auto* v = get(key)) {
      dst = number(*v, key);
      if (dst < lo) error(*v, key, fmt::format("must be >= {}", lo));
    }
  }

  void positive(const std::string& key, double& dst) {
    if (const auto* v = get(key)) {
      dst = number(*v, key);
      if (!(dst > 0.0)) error(*v, key, "must be positive");
    }
  }

  void count(const std::string& key, int& dst, long long lo) {
    if (const auto* v = get(key)) {
      const long long x = integer(*v, key);
      if (x < lo || x > 1'000'000'000) error(*v, key, fmt::format("must be an integer >= {}", lo));
      dst = static_cast<int>(x);
    }
  }

  void flag(const std::string& key, bool& dst) {
    if (const auto* v = get(key)) {
      if (v->type != ConfigValue::Type::boolean) error(*v, key, "expected true or false");
      dst = v->boolean;
    }
  }

  void string(const std::string& key, std::string& dst) {
    if (const auto* v = get(key)) {
      if (v->type != ConfigValue::Type::string) error(*v, key, "expected a quoted string");
      dst = v->text;
    }
  }

  /// Scalar or array of integers.
  template <class T>
  void int_list(const std::string& key, std::vector<T>& dst, long long lo) {
    const auto* v = get(key);
    if (!v) return;
    std::vector<T> out;
    auto push = [&](const ConfigValue& x) {
      const long long n = integer(x, key);
      if (n < lo) error(x, key, fmt::format("entries must be >= {}", lo));
      out.push_back(static_cast<T>(n));
    };
    if (v->type == ConfigValue::Type::array) {
      for (const auto& x : v->items) push(x);
    } else {
      push(*v);
    }
    if (out.empty()) error(*v, key, "must not be empty");
    dst = std::move(out);
  }

  void reject_unknown() const {
    for (const auto& [key, v] : f_.entries) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) error(v, key, "unknown key");
    }
  }

 private:
  const ConfigFile& f_;
  std::vector<std::string> seen_;
};

}  // namespace

RunConfig run_config_from(const ConfigFile& file) {
  RunConfig rc;
  Reader r(file);

  const auto* op = r.get("operator");
  if (!op) fail(ErrorKind::config, fmt::format("{}: missing required key 'operator'", file.source));
  if (op->type != ConfigValue::Type::string) r.error(*op, "operator", "expected a quoted string");
  rc.operator_name = op->text;
  try {
    (void)find_operator(rc.operator_name);
  } catch (const Error&) {
    r.error(*op, "operator", fmt::format("unknown operator '{}'", rc.operator_name));
  }

  r.int_list("arch", rc.arch, 1);
  if (!rc.arch.empty()) {
    try {
      Architecture a(rc.arch);
      if (a.input_dim() != find_operator(rc.operator_name).domain.dim) {
        r.error(*r.get("arch"), "arch", "input width does not match the operator dimension");
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::config) throw;
      r.error(*r.get("arch"), "arch", e.what());
    }
  }
  r.int_list("m_r", rc.m_r, 2);
  r.real("lambda_r", rc.weights.r, 0.0);
  r.real("lambda_b", rc.weights.b, 0.0);
  r.positive("alpha", rc.train.alpha);
  if (rc.train.alpha > 1.0) r.error(*r.get("alpha"), "alpha", "must lie in (0, 1]");
  r.positive("kappa", rc.train.kappa);
  r.int_list("seeds", rc.seeds, 0);

  if (const auto* v = r.get("optimizer")) {
    if (v->type != ConfigValue::Type::string) r.error(*v, "optimizer", "expected a quoted string");
    try {
      rc.train.optimizer = parse_optimizer(v->text);
    } catch (const Error& e) {
      r.error(*v, "optimizer", e.what());
    }
  }
  r.positive("step_size", rc.train.step_size);
  r.count("steps", rc.train.steps, 0);
  r.positive("temperature", rc.train.temperature);
  r.real("epsilon", rc.train.epsilon, 0.0);
  r.flag("deterministic", rc.train.deterministic);
  r.count("log_every", rc.train.log_every, 1);
  r.flag("gradient_check", rc.train.gradient_check);
  int budget = static_cast<int>(rc.train.pair_budget);
  r.count("pair_budget", budget, 0);
  rc.train.pair_budget = static_cast<std::size_t>(budget);

  r.count("probe_resolution", rc.probe_resolution, 0);
  r.count("mc_samples", rc.mc_samples, 100);
  r.count("oracle_n", rc.oracle_n, 4);
  r.string("out", rc.out);

  std::vector<int> sn, sd;
  r.int_list("sampling_n", sn, 1);
  r.int_list("sampling_d", sd, 1);
  if (!sn.empty() || !sd.empty()) {
    if (sn.size() != sd.size()) {
      r.error(sn.empty() ? *r.get("sampling_d") : *r.get("sampling_n"), "sampling_n",
              "sampling_n and sampling_d must have equal lengths");
    }
    rc.sampling.clear();
    for (std::size_t i = 0; i < sn.size(); ++i) rc.sampling.push_back({sn[i], sd[i]});
  }
  r.count("sampling_trials", rc.sampling_trials, 1);
  r.count("ellipticity_trials", rc.ellipticity_trials, 1);
  r.count("bound_draws", rc.bound_draws, 1);
  r.count("comparison_pairs", rc.comparison_pairs, 1);
  r.string("weights", rc.weights_path);

  r.reject_unknown();
  rc.train.seed = rc.seeds.front();
  return rc;
}

}  // namespace vispinn
