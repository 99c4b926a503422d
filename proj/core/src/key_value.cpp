#include "sdae/key_value.hpp"

#include "sdae/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace sdae::kv {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

Document Document::parse(std::string_view text, std::string source) {
  Document doc;
  doc.source_ = std::move(source);
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = doc.source_ + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorCode::ParseError, where + ": unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) fail(ErrorCode::ParseError, where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorCode::ParseError, where + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) fail(ErrorCode::ParseError, where + ": missing key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (doc.entries_.count(full) != 0) fail(ErrorCode::ParseError, where + ": duplicate key '" + full + "'");
    doc.entries_[full] = Entry{value, line_no, false};
  }
  return doc;
}

Document Document::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

std::vector<std::string> Document::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_) out.push_back(k);
  return out;
}

const Document::Entry& Document::entry(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) fail(ErrorCode::ParseError, source_ + ": missing key '" + key + "'");
  it->second.used = true;
  return it->second;
}

double Document::to_number(const std::string& key, const std::string& value, int line) const {
  double v = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    fail(ErrorCode::ParseError, source_ + ":" + std::to_string(line) + ": '" + key +
                                    "' is not a number: '" + value + "'");
  }
  return v;
}

std::string Document::text(const std::string& key) const { return entry(key).value; }

std::string Document::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : fallback;
}

double Document::number(const std::string& key) const {
  const Entry& e = entry(key);
  return to_number(key, e.value, e.line);
}

double Document::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long Document::integer(const std::string& key) const {
  const Entry& e = entry(key);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc() || ptr != e.value.data() + e.value.size()) {
    fail(ErrorCode::ParseError, source_ + ":" + std::to_string(e.line) + ": '" + key +
                                    "' is not an integer: '" + e.value + "'");
  }
  return v;
}

long Document::integer(const std::string& key, long fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::vector<double> Document::numbers(const std::string& key) const {
  const Entry& e = entry(key);
  std::vector<double> out;
  std::string_view rest = e.value;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string item(trim(rest.substr(0, comma)));
    out.push_back(to_number(key, item, e.line));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

void Document::check_all_used() const {
  for (const auto& [k, e] : entries_) {
    if (!e.used) {
      fail(ErrorCode::ParseError, source_ + ":" + std::to_string(e.line) + ": unknown key '" + k + "'");
    }
  }
}

}  // namespace sdae::kv
