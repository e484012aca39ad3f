#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace netnewton {

/// Ordered `key = value` store. Lines starting with `#` and blank lines are
/// ignored; trailing `# ...` comments are stripped.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in);
  static KeyValueFile load(const std::string& path);

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  /// Typed lookups; throw std::invalid_argument naming the key on bad input.
  std::optional<double> get_double(const std::string& key) const;
  std::optional<long long> get_int(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  void write(std::ostream& out) const;

 private:
  std::map<std::string, std::string> entries_;
};

/// Shortest decimal form that reads back to the same double.
std::string format_exact(double value);

}  // namespace netnewton
