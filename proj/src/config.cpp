#include "thermo/config.hpp"

#include <fstream>
#include <sstream>

#include "thermo/errors.hpp"
#include "thermo/text.hpp"

namespace thermo::config {

namespace {

std::optional<double> to_number(const std::string& s) { return text::parse_double(text::trim(s)); }

}  // namespace

void Record::error(const std::string& message) const {
  fail(ErrorKind::ConfigError, where() + ": " + message);
}

double Record::number(const std::string& key) const {
  auto it = fields.find(key);
  if (it == fields.end()) error(kind + " is missing '" + key + "'");
  auto v = to_number(it->second);
  if (!v) error("'" + key + "' is not a number: '" + it->second + "'");
  return *v;
}

double Record::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::string Record::string_or(const std::string& key, const std::string& fallback) const {
  auto it = fields.find(key);
  return it == fields.end() ? fallback : it->second;
}

std::vector<std::string> Record::list(const std::string& key) const {
  std::vector<std::string> out;
  auto it = fields.find(key);
  if (it == fields.end()) return out;
  for (auto part : text::split(it->second, ',')) {
    auto t = text::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

double Document::number(const std::string& key) const {
  auto it = settings.find(key);
  if (it == settings.end()) fail(ErrorKind::ConfigError, file + ": missing setting '" + key + "'");
  auto v = to_number(it->second);
  if (!v) {
    fail(ErrorKind::ConfigError, file + ":" + std::to_string(setting_lines.at(key)) + ": '" + key +
                                     "' is not a number: '" + it->second + "'");
  }
  return *v;
}

double Document::number_or(const std::string& key, double fallback) const {
  return settings.count(key) ? number(key) : fallback;
}

std::optional<std::string> Document::get(const std::string& key) const {
  auto it = settings.find(key);
  if (it == settings.end()) return std::nullopt;
  return it->second;
}

std::pair<double, double> Document::range_or(const std::string& key,
                                             std::pair<double, double> fallback) const {
  auto it = settings.find(key);
  if (it == settings.end()) return fallback;
  auto parts = text::split_ws(it->second);
  std::optional<double> lo, hi;
  if (parts.size() == 2) {
    lo = text::parse_double(parts[0]);
    hi = text::parse_double(parts[1]);
  }
  if (!lo || !hi || *lo > *hi) {
    fail(ErrorKind::ConfigError, file + ":" + std::to_string(setting_lines.at(key)) + ": '" + key +
                                     "' must be two ascending numbers");
  }
  return {*lo, *hi};
}

std::vector<const Record*> Document::of_kind(const std::string& kind) const {
  std::vector<const Record*> out;
  for (const auto& r : records) {
    if (r.kind == kind) out.push_back(&r);
  }
  return out;
}

Document parse(const std::string& content, const std::string& file_label) {
  Document doc;
  doc.file = file_label;
  std::istringstream in(content);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;

    auto tokens = text::split_ws(line);
    const bool is_setting = tokens.size() >= 2 && tokens[1] == "=";
    const auto eq = line.find('=');
    if (is_setting || (eq != std::string_view::npos && tokens.size() == 1)) {
      auto key = std::string(text::trim(line.substr(0, eq)));
      auto value = std::string(text::trim(line.substr(eq + 1)));
      if (key.empty() || value.empty()) {
        fail(ErrorKind::ConfigError, file_label + ":" + std::to_string(line_no) +
                                         ": expected 'key = value'");
      }
      doc.settings[key] = value;
      doc.setting_lines[key] = line_no;
      continue;
    }

    Record rec;
    rec.file = file_label;
    rec.line = line_no;
    rec.kind = std::string(tokens.front());
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      auto tok = tokens[i];
      auto pos = tok.find('=');
      if (pos == std::string_view::npos) {
        if (!rec.fields.empty()) rec.error("positional value after key=value fields");
        rec.positional.emplace_back(tok);
      } else {
        auto key = std::string(tok.substr(0, pos));
        if (key.empty() || rec.fields.count(key)) rec.error("bad or duplicate field '" + key + "'");
        rec.fields[key] = std::string(tok.substr(pos + 1));
      }
    }
    doc.records.push_back(std::move(rec));
  }
  return doc;
}

Document load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigError, "cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

}  // namespace thermo::config
