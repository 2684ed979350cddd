#include "augpt/raster.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>

#include "augpt/errors.hpp"

namespace augpt {

Raster Raster::filled(int w, int h, uint8_t r, uint8_t g, uint8_t b) {
  Raster img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<size_t>(w) * h * 3);
  for (size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = r;
    img.pixels[i + 1] = g;
    img.pixels[i + 2] = b;
  }
  return img;
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comments.
bool next_token(const std::vector<uint8_t>& bytes, size_t& pos,
                std::string& tok) {
  tok.clear();
  while (pos < bytes.size()) {
    char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < bytes.size() &&
         !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
         bytes[pos] != '#') {
    tok.push_back(static_cast<char>(bytes[pos]));
    ++pos;
  }
  return !tok.empty();
}

int parse_dim(const std::string& tok, const char* what) {
  try {
    size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw DataError("");
    return v;
  } catch (...) {
    throw DataError(std::string("ppm: bad ") + what + " '" + tok + "'");
  }
}

}  // namespace

Raster decode_ppm(const std::vector<uint8_t>& bytes) {
  size_t pos = 0;
  std::string tok;
  if (!next_token(bytes, pos, tok) || tok != "P6")
    throw DataError("ppm: missing P6 magic");
  if (!next_token(bytes, pos, tok)) throw DataError("ppm: missing width");
  int w = parse_dim(tok, "width");
  if (!next_token(bytes, pos, tok)) throw DataError("ppm: missing height");
  int h = parse_dim(tok, "height");
  if (!next_token(bytes, pos, tok)) throw DataError("ppm: missing maxval");
  if (tok != "255") throw DataError("ppm: only maxval 255 supported");
  if (pos >= bytes.size()) throw DataError("ppm: truncated header");
  ++pos;  // single whitespace byte after maxval

  Raster img;
  img.width = w;
  img.height = h;
  size_t need = static_cast<size_t>(w) * h * 3;
  if (bytes.size() - pos < need) throw DataError("ppm: truncated pixel data");
  img.pixels.assign(bytes.begin() + pos, bytes.begin() + pos + need);
  return img;
}

std::vector<uint8_t> encode_ppm(const Raster& img) {
  if (!img.valid()) throw DataError("ppm: invalid raster");
  char header[64];
  int n = std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", img.width,
                        img.height);
  std::vector<uint8_t> out(header, header + n);
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

Raster load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return decode_ppm(bytes);
}

void save_ppm(const Raster& img, const std::filesystem::path& path) {
  auto bytes = encode_ppm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace augpt
