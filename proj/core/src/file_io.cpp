#include "mts/file_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mts {

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << text;
  os.flush();
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

nlohmann::json read_json_file(const std::filesystem::path& path) { return nlohmann::json::parse(read_text_file(path)); }

}  // namespace mts
