#include "ssd/cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ssd/error.hpp"

namespace ssd::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigMap parse_config(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError, "config line " + std::to_string(number) + ": expected key = value");
    }
    std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::ParseError, "config line " + std::to_string(number) + ": empty key");
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "config") throw Error(ErrorCode::ParseError, "config files cannot include other config files");
    out[key] = value;
  }
  return out;
}

ConfigMap read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::vector<std::string> config_flags(const ConfigMap& config) {
  std::vector<std::string> flags;
  for (const auto& [key, value] : config) flags.push_back("--" + key + "=" + value);
  return flags;
}

std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  bool found = false;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw Error(ErrorCode::InvalidConfig, "--config needs a path");
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      found = true;
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      found = true;
      break;
    }
  }
  if (!found || args.empty()) return args;
  const std::vector<std::string> flags = config_flags(read_config(path));
  args.insert(args.begin() + 1, flags.begin(), flags.end());
  return args;
}

}  // namespace ssd::cli
