#include "grem/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace grem {

namespace pt = boost::property_tree;

Config Config::parse(std::istream& is) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument("config: " + e.message() + " at line " + std::to_string(e.line()));
  }
  Config c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw std::invalid_argument("config: key '" + section + "' outside any [section]");
    for (const auto& [key, value] : body) c.data_[section][key] = boost::trim_copy(value.data());
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  return parse(in);
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  return it != data_.end() && it->second.count(key);
}

const std::string& Config::raw(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  if (it == data_.end() || !it->second.count(key))
    throw std::invalid_argument("config: missing [" + section + "] " + key);
  return it->second.at(key);
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  data_[section][key] = value;
}

namespace {

template <class T>
T convert(const std::string& section, const std::string& key, const std::string& v) {
  try {
    return boost::lexical_cast<T>(v);
  } catch (const boost::bad_lexical_cast&) {
    throw std::invalid_argument("config: [" + section + "] " + key + " = '" + v + "' is not a valid number");
  }
}

}  // namespace

double Config::real(const std::string& s, const std::string& k) const { return convert<double>(s, k, raw(s, k)); }

double Config::real(const std::string& s, const std::string& k, double dflt) const {
  return has(s, k) ? real(s, k) : dflt;
}

std::int64_t Config::integer(const std::string& s, const std::string& k) const {
  return convert<std::int64_t>(s, k, raw(s, k));
}

std::int64_t Config::integer(const std::string& s, const std::string& k, std::int64_t dflt) const {
  return has(s, k) ? integer(s, k) : dflt;
}

bool Config::flag(const std::string& s, const std::string& k, bool dflt) const {
  if (!has(s, k)) return dflt;
  const auto v = boost::to_lower_copy(raw(s, k));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: [" + s + "] " + k + " = '" + v + "' is not a boolean");
}

std::string Config::text(const std::string& s, const std::string& k, const std::string& dflt) const {
  return has(s, k) ? raw(s, k) : dflt;
}

std::vector<double> Config::reals(const std::string& s, const std::string& k) const {
  std::vector<std::string> parts;
  const auto& v = raw(s, k);
  boost::split(parts, v, boost::is_any_of(","));
  std::vector<double> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (!p.empty()) out.push_back(convert<double>(s, k, p));
  }
  if (out.empty()) throw std::invalid_argument("config: [" + s + "] " + k + " is an empty list");
  return out;
}

std::string Config::canonical() const {
  std::ostringstream os;
  for (const auto& [s, body] : data_)
    for (const auto& [k, v] : body) os << s << '.' << k << '=' << v << '\n';
  return os.str();
}

std::uint64_t Config::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace grem
