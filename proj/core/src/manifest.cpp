#include "tiledit/manifest.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tiledit/errors.hpp"

namespace tiledit {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '_' || c == '.' || c == '-';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

void Manifest::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) {
    throw Error(ErrorCode::bad_format, "bad manifest key '" + key + "'");
  }
  if (value.find('\n') != std::string::npos) {
    throw Error(ErrorCode::bad_format, "manifest value for '" + key + "' contains a newline");
  }
  entries_[key] = value;
}

void Manifest::set_int(const std::string& key, long long value) {
  set(key, std::to_string(value));
}

void Manifest::set_u64(const std::string& key, std::uint64_t value) {
  set(key, std::to_string(value));
}

void Manifest::set_double(const std::string& key, double value) {
  // 17 significant digits round-trip any double exactly.
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  set(key, buf);
}

void Manifest::set_bool(const std::string& key, bool value) {
  set(key, value ? "true" : "false");
}

const std::string& Manifest::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw Error(ErrorCode::bad_format, "manifest is missing key '" + key + "'");
  }
  return it->second;
}

std::string Manifest::get_or(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

long long Manifest::get_int(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  long long out = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw Error(ErrorCode::bad_format, "manifest key '" + key + "' is not an integer: " + v);
  }
  return out;
}

std::uint64_t Manifest::get_u64(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  unsigned long long out = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw Error(ErrorCode::bad_format, "manifest key '" + key + "' is not an integer: " + v);
  }
  return out;
}

double Manifest::get_double(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  double out = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    throw Error(ErrorCode::bad_format, "manifest key '" + key + "' is not a number: " + v);
  }
  return out;
}

bool Manifest::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true") return true;
  if (v == "false") return false;
  throw Error(ErrorCode::bad_format, "manifest key '" + key + "' is not a bool: " + v);
}

std::string Manifest::serialize() const {
  std::ostringstream out;
  for (const auto& [key, value] : entries_) {
    out << key << " = " << value << "\n";
  }
  return out.str();
}

Manifest Manifest::parse(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::bad_format,
                  "manifest line " + std::to_string(line_no) + " has no '='");
    }
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (!valid_key(key)) {
      throw Error(ErrorCode::bad_format,
                  "manifest line " + std::to_string(line_no) + " has a bad key");
    }
    m.entries_[key] = value;
  }
  return m;
}

void Manifest::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io_failure, "cannot open '" + path + "' for writing");
  }
  out << serialize();
  if (!out) {
    throw Error(ErrorCode::io_failure, "short write to '" + path + "'");
  }
}

Manifest Manifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::input_not_found, path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace tiledit
