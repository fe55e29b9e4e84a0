#include "jsdmi/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "jsdmi/csv.hpp"

namespace jsdmi {

bool TomlValue::is_number() const {
  return std::holds_alternative<std::int64_t>(value) || std::holds_alternative<double>(value);
}

double TomlValue::as_number(std::string_view key) const {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&value)) return *d;
  throw ConfigError("config key '" + std::string(key) + "': expected a number");
}

std::int64_t TomlValue::as_integer(std::string_view key) const {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return *i;
  throw ConfigError("config key '" + std::string(key) + "': expected an integer");
}

const std::string& TomlValue::as_string(std::string_view key) const {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  throw ConfigError("config key '" + std::string(key) + "': expected a string");
}

const std::vector<TomlValue>& TomlValue::as_array(std::string_view key) const {
  if (const auto* a = std::get_if<Array>(&value)) return a->items;
  throw ConfigError("config key '" + std::string(key) + "': expected an array");
}

namespace {

class FlatTomlParser {
 public:
  explicit FlatTomlParser(std::string_view text) : text_(text) {}

  TomlTable parse() {
    TomlTable table;
    for (;;) {
      skip_blank_and_comments(true);
      if (done()) break;
      if (peek() == '[') fail("tables are not supported in flat config files");
      const std::string key = parse_key();
      skip_inline_space();
      expect('=');
      skip_inline_space();
      TomlValue v = parse_value();
      skip_inline_space();
      if (!done() && peek() == '#') skip_comment();
      if (!done() && peek() != '\n' && peek() != '\r') fail("unexpected text after value");
      if (!table.emplace(key, std::move(v)).second) fail("duplicate key '" + key + "'");
    }
    return table;
  }

 private:
  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) line += text_[i] == '\n';
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
  }

  void expect(char c) {
    if (done() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_comment() {
    while (!done() && peek() != '\n') ++pos_;
  }

  void skip_inline_space() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }

  void skip_blank_and_comments(bool newlines) {
    while (!done()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || (newlines && (c == '\n' || c == '\r'))) {
        ++pos_;
      } else if (c == '#') {
        skip_comment();
      } else {
        break;
      }
    }
  }

  std::string parse_key() {
    const std::size_t start = pos_;
    while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                       peek() == '-')) {
      ++pos_;
    }
    if (start == pos_) fail("expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }

  TomlValue parse_value() {
    if (done()) fail("missing value");
    const char c = peek();
    if (c == '"') return {parse_string()};
    if (c == '[') return {parse_array()};
    if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return {true};
    }
    if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return {false};
    }
    return parse_number();
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (!done() && peek() != '"') {
      if (peek() == '\n') fail("unterminated string");
      if (peek() == '\\') {
        ++pos_;
        if (done()) fail("unterminated escape");
        switch (peek()) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail("unsupported escape");
        }
        ++pos_;
      } else {
        out += peek();
        ++pos_;
      }
    }
    expect('"');
    return out;
  }

  TomlValue::Array parse_array() {
    expect('[');
    TomlValue::Array arr;
    for (;;) {
      skip_blank_and_comments(true);
      if (done()) fail("unterminated array");
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      arr.items.push_back(parse_value());
      skip_blank_and_comments(true);
      if (done()) fail("unterminated array");
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  TomlValue parse_number() {
    const std::size_t start = pos_;
    while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' ||
                       peek() == '-' || peek() == '.' || peek() == '_')) {
      ++pos_;
    }
    std::string token;
    for (char c : text_.substr(start, pos_ - start)) {
      if (c != '_') token += c;
    }
    if (token.empty()) fail("expected a value");
    if (token == "inf" || token == "+inf") return {std::numeric_limits<double>::infinity()};
    if (token == "-inf") return {-std::numeric_limits<double>::infinity()};
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    const char* first = token.data() + (token[0] == '+' ? 1 : 0);
    const char* last = token.data() + token.size();
    if (is_float) {
      double d = 0.0;
      auto [ptr, ec] = std::from_chars(first, last, d);
      if (ec != std::errc() || ptr != last) fail("malformed number '" + token + "'");
      return {d};
    }
    std::int64_t i = 0;
    auto [ptr, ec] = std::from_chars(first, last, i);
    if (ec != std::errc() || ptr != last) fail("malformed value '" + token + "'");
    return {i};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::size_t positive_size(const TomlValue& v, std::string_view key) {
  const std::int64_t i = v.as_integer(key);
  if (i <= 0) throw ConfigError("config key '" + std::string(key) + "' must be positive");
  return static_cast<std::size_t>(i);
}

}  // namespace

TomlTable parse_flat_toml(std::string_view text) { return FlatTomlParser(text).parse(); }

void RunConfig::validate() const {
  if (d == 0) throw ConfigError("d must be >= 1");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (estimators.empty()) throw ConfigError("at least one estimator is required");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
    throw ConfigError("window_fraction must lie in (0, 1]");
  }
  if (!(smile_tau >= 0.0)) throw ConfigError("smile_tau must be >= 0");
  if (hidden == 0) throw ConfigError("hidden must be >= 1");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  try {
    schedule.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig run_config_from_toml(const TomlTable& t) {
  static const std::set<std::string, std::less<>> known = {
      "d",         "transform", "schedule", "seed",   "n_seeds",         "seeds",
      "estimators", "batch_size", "output", "window_fraction", "smile_tau", "hidden"};
  for (const auto& [key, _] : t) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  RunConfig c;
  if (auto it = t.find("d"); it != t.end()) c.d = positive_size(it->second, "d");
  c.schedule = default_staircase(c.d);
  if (auto it = t.find("transform"); it != t.end()) {
    try {
      c.transform = parse_transform(it->second.as_string("transform"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (auto it = t.find("schedule"); it != t.end()) {
    c.schedule.steps.clear();
    for (const auto& step : it->second.as_array("schedule")) {
      const auto& pair = step.as_array("schedule");
      if (pair.size() != 2) throw ConfigError("schedule entries must be [target_mi, iterations]");
      c.schedule.steps.push_back({pair[0].as_number("schedule"), positive_size(pair[1], "schedule")});
    }
  }
  std::uint64_t first_seed = 0;
  std::size_t n_seeds = 10;
  if (auto it = t.find("seed"); it != t.end()) {
    const std::int64_t s = it->second.as_integer("seed");
    if (s < 0) throw ConfigError("seed must be >= 0");
    first_seed = static_cast<std::uint64_t>(s);
  }
  if (auto it = t.find("n_seeds"); it != t.end()) n_seeds = positive_size(it->second, "n_seeds");
  c.seeds.clear();
  for (std::size_t i = 0; i < n_seeds; ++i) c.seeds.push_back(first_seed + i);
  if (auto it = t.find("seeds"); it != t.end()) {
    c.seeds.clear();
    for (const auto& s : it->second.as_array("seeds")) {
      const std::int64_t v = s.as_integer("seeds");
      if (v < 0) throw ConfigError("seeds must be >= 0");
      c.seeds.push_back(static_cast<std::uint64_t>(v));
    }
  }
  if (auto it = t.find("estimators"); it != t.end()) {
    c.estimators.clear();
    for (const auto& e : it->second.as_array("estimators")) {
      try {
        c.estimators.push_back(parse_estimator(e.as_string("estimators")));
      } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
      }
    }
  }
  if (auto it = t.find("batch_size"); it != t.end()) {
    c.batch_size = positive_size(it->second, "batch_size");
  }
  if (auto it = t.find("output"); it != t.end()) c.output = it->second.as_string("output");
  if (auto it = t.find("window_fraction"); it != t.end()) {
    c.window_fraction = it->second.as_number("window_fraction");
  }
  if (auto it = t.find("smile_tau"); it != t.end()) c.smile_tau = it->second.as_number("smile_tau");
  if (auto it = t.find("hidden"); it != t.end()) c.hidden = positive_size(it->second, "hidden");
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return run_config_from_toml(parse_flat_toml(buffer.str()));
}

std::string to_toml(const RunConfig& c) {
  std::ostringstream out;
  out << "d = " << c.d << '\n';
  out << "transform = \"" << to_string(c.transform) << "\"\n";
  out << "schedule = [";
  for (std::size_t i = 0; i < c.schedule.steps.size(); ++i) {
    out << (i ? ", " : "") << '[' << format_number(c.schedule.steps[i].target_mi) << ", "
        << c.schedule.steps[i].iterations << ']';
  }
  out << "]\n";
  out << "seeds = [";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) out << (i ? ", " : "") << c.seeds[i];
  out << "]\n";
  out << "estimators = [";
  for (std::size_t i = 0; i < c.estimators.size(); ++i) {
    out << (i ? ", " : "") << '"' << to_string(c.estimators[i]) << '"';
  }
  out << "]\n";
  out << "batch_size = " << c.batch_size << '\n';
  out << "output = \"" << c.output.generic_string() << "\"\n";
  out << "window_fraction = " << format_number(c.window_fraction) << '\n';
  out << "smile_tau = " << format_number(c.smile_tau) << '\n';
  out << "hidden = " << c.hidden << '\n';
  return out.str();
}

}  // namespace jsdmi
