#pragma once
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace grem {

// Line-oriented [section] / key = value configuration.
class Config {
 public:
  Config() = default;

  static Config parse(std::istream& is);
  static Config load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  const std::string& raw(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, const std::string& value);

  double real(const std::string& section, const std::string& key) const;
  double real(const std::string& section, const std::string& key, double dflt) const;
  std::int64_t integer(const std::string& section, const std::string& key) const;
  std::int64_t integer(const std::string& section, const std::string& key, std::int64_t dflt) const;
  bool flag(const std::string& section, const std::string& key, bool dflt) const;
  std::string text(const std::string& section, const std::string& key, const std::string& dflt) const;
  std::vector<double> reals(const std::string& section, const std::string& key) const;

  // FNV-1a over the sorted section.key=value lines
  std::uint64_t hash() const;
  std::string canonical() const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const { return data_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> data_;
};

}  // namespace grem
