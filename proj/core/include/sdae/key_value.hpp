#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sdae::kv {

/// `key = value` text with `[section]` headers and `#` comments. Keys are
/// addressed as "section.key" (or just "key" before the first section).
/// Every read marks the key as used; check_all_used() turns leftovers into
/// ParseError so that typos never pass silently.
class Document {
 public:
  static Document parse(std::string_view text, std::string source = "<string>");
  static Document load(const std::filesystem::path& path);

  const std::string& source() const { return source_; }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::vector<std::string> keys() const;

  std::string text(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  long integer(const std::string& key) const;
  long integer(const std::string& key, long fallback) const;
  /// Comma-separated list of numbers.
  std::vector<double> numbers(const std::string& key) const;

  void check_all_used() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };
  const Entry& entry(const std::string& key) const;
  double to_number(const std::string& key, const std::string& value, int line) const;

  std::string source_;
  std::map<std::string, Entry> entries_;
};

}  // namespace sdae::kv
