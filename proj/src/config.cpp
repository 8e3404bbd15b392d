#include "ebwtpc/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ebwtpc {

void save_kv(const std::string& path, const std::map<std::string, std::string>& kv) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::map<std::string, std::string> load_kv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(path + ": expected 'key = value'");
    auto trim = [](std::string s) {
      std::size_t a = s.find_first_not_of(" \t");
      std::size_t b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace ebwtpc
