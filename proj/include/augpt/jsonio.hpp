#pragma once

#include <cstdio>
#include <filesystem>
#include <span>
#include <string>

namespace augpt {

// %.17g: enough digits to round-trip a double exactly, and stable under
// load -> save cycles.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string json_escape(std::string_view s);

// Minimal append-style JSON builder with deterministic formatting. nlohmann
// handles parsing; writing goes through this so numeric output is canonical.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& key(std::string_view k);
  JsonWriter& value_string(std::string_view v);
  JsonWriter& value_double(double v);
  JsonWriter& value_int(int64_t v);
  JsonWriter& value_uint(uint64_t v);
  JsonWriter& value_bool(bool v);
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& array_of_doubles(std::span<const double> vals);

  const std::string& str() const { return out_; }

 private:
  void comma_if_needed();
  std::string out_;
  bool need_comma_ = false;
};

void write_text_file(const std::filesystem::path& path,
                     const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace augpt
