#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace tiledit {

// Plain-text key-value document: one "key = value" per line, keys sorted on
// write so output is deterministic. '#' starts a comment, blank lines are
// allowed. Used for run manifests, model descriptions and config files.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value);
  void set_int(const std::string& key, long long value);
  void set_u64(const std::string& key, std::uint64_t value);
  void set_double(const std::string& key, double value);
  void set_bool(const std::string& key, bool value);

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string serialize() const;
  static Manifest parse(const std::string& text);

  void save(const std::string& path) const;
  static Manifest load(const std::string& path);

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace tiledit
