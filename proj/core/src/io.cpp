#include "twinsim/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include <nlohmann/json.hpp>

#include "twinsim/errors.hpp"

namespace twinsim::io {

namespace {

constexpr char kMagic[5] = {'F', 'S', 'T', 'K', '1'};
constexpr std::uint8_t kDtypeU32 = 4;

void put_u32_le(std::string& buf, std::uint32_t v) {
  buf.push_back(char(v & 0xff));
  buf.push_back(char((v >> 8) & 0xff));
  buf.push_back(char((v >> 16) & 0xff));
  buf.push_back(char((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open for reading: " + path.string());
  return in;
}

}  // namespace

void write_fstk(const std::filesystem::path& path, const FrameStack& stack) {
  auto out = open_out(path);
  std::string header;
  header.append(kMagic, sizeof(kMagic));
  put_u32_le(header, stack.geometry().width);
  put_u32_le(header, stack.geometry().height);
  put_u32_le(header, stack.geometry().n_frames);
  header.push_back(char(static_cast<std::uint8_t>(stack.arm())));
  header.push_back(char(kDtypeU32));
  out.write(header.data(), std::streamsize(header.size()));

  std::string buf;
  buf.reserve(stack.n_pixels() * 4);
  for (std::size_t f = 0; f < stack.n_frames(); ++f) {
    buf.clear();
    for (std::uint32_t v : stack.frame(f)) put_u32_le(buf, v);
    out.write(buf.data(), std::streamsize(buf.size()));
  }
  if (!out) throw data_error("write failed: " + path.string());
}

FrameStack read_fstk(const std::filesystem::path& path) {
  auto in = open_in(path);
  unsigned char header[19];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::memcmp(header, kMagic, sizeof(kMagic)) != 0) {
    throw data_error("not an FSTK1 file: " + path.string());
  }
  Geometry geom{get_u32_le(header + 5), get_u32_le(header + 9), get_u32_le(header + 13)};
  const std::uint8_t arm_tag = header[17];
  const std::uint8_t dtype = header[18];
  if (dtype != kDtypeU32) throw data_error("FSTK1: unsupported dtype");
  if (arm_tag > 2) throw data_error("FSTK1: unknown arm tag");
  geom.validate();

  FrameStack stack(geom, static_cast<Arm>(arm_tag));
  std::vector<unsigned char> buf(geom.n_pixels() * 4);
  for (std::size_t f = 0; f < geom.n_frames; ++f) {
    in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    if (!in) throw data_error("FSTK1: truncated file: " + path.string());
    auto frame = stack.frame(f);
    for (std::size_t i = 0; i < frame.size(); ++i) frame[i] = get_u32_le(buf.data() + 4 * i);
  }
  return stack;
}

void write_pgm(const std::filesystem::path& path, const PgmImage& image) {
  if (image.maxval == 0) throw data_error("PGM: maxval must be positive");
  if (image.pixels.size() != std::size_t(image.width) * image.height) {
    throw data_error("PGM: pixel count does not match dimensions");
  }
  auto out = open_out(path);
  char header[64];
  const int n = std::snprintf(header, sizeof(header), "P5\n%u %u\n%u\n", image.width,
                              image.height, unsigned(image.maxval));
  out.write(header, n);
  std::string buf;
  if (image.maxval < 256) {
    buf.reserve(image.pixels.size());
    for (std::uint16_t v : image.pixels) buf.push_back(char(v & 0xff));
  } else {
    // Two bytes per sample, most significant byte first.
    buf.reserve(image.pixels.size() * 2);
    for (std::uint16_t v : image.pixels) {
      buf.push_back(char((v >> 8) & 0xff));
      buf.push_back(char(v & 0xff));
    }
  }
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw data_error("write failed: " + path.string());
}

PgmImage read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  // Header tokens may be separated by whitespace and '#' comments.
  auto next_token = [&]() -> std::string {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
      if (c == '#') {
        while ((c = in.get()) != EOF && c != '\n') {
        }
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(char(c));
    }
    if (tok.empty()) throw data_error("PGM: truncated header: " + path.string());
    return tok;
  };

  if (next_token() != "P5") throw data_error("not a binary PGM (P5): " + path.string());
  PgmImage img;
  try {
    img.width = std::uint32_t(std::stoul(next_token()));
    img.height = std::uint32_t(std::stoul(next_token()));
    const unsigned long maxval = std::stoul(next_token());
    if (maxval == 0 || maxval > 65535) throw data_error("PGM: maxval out of range");
    img.maxval = std::uint16_t(maxval);
  } catch (const std::logic_error&) {
    throw data_error("PGM: malformed header: " + path.string());
  }
  if (img.width == 0 || img.height == 0) throw data_error("PGM: empty image");

  const std::size_t n = std::size_t(img.width) * img.height;
  img.pixels.resize(n);
  if (img.maxval < 256) {
    std::vector<unsigned char> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(n));
    if (!in) throw data_error("PGM: truncated data: " + path.string());
    for (std::size_t i = 0; i < n; ++i) img.pixels[i] = buf[i];
  } else {
    std::vector<unsigned char> buf(n * 2);
    in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    if (!in) throw data_error("PGM: truncated data: " + path.string());
    for (std::size_t i = 0; i < n; ++i) {
      img.pixels[i] = std::uint16_t((std::uint16_t(buf[2 * i]) << 8) | buf[2 * i + 1]);
    }
  }
  return img;
}

ObjectMask mask_from_pgm(const PgmImage& image) {
  std::vector<double> alpha(image.pixels.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    alpha[i] = double(image.pixels[i]) / double(image.maxval);
  }
  return ObjectMask::from_values(image.width, image.height, std::move(alpha));
}

ObjectMask load_mask_pgm(const std::filesystem::path& path) {
  return mask_from_pgm(read_pgm(path));
}

AffineScale auto_scale(std::span<const double> values) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (v != v) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo <= hi)) return {0.0, 1.0};
  if (lo == hi) return {lo, lo + 1.0};
  return {lo, hi};
}

PgmImage render_to_pgm(std::span<const double> values, std::uint32_t width, std::uint32_t height,
                       AffineScale scale, std::uint16_t maxval) {
  if (values.size() != std::size_t(width) * height) {
    throw data_error("render: value count does not match dimensions");
  }
  if (!(scale.hi > scale.lo)) throw data_error("render: degenerate scale");
  PgmImage img{width, height, maxval, std::vector<std::uint16_t>(values.size(), 0)};
  const double span = scale.hi - scale.lo;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (v != v) continue;
    const double g = std::round((v - scale.lo) / span * double(maxval));
    img.pixels[i] = std::uint16_t(std::clamp(g, 0.0, double(maxval)));
  }
  return img;
}

void write_values_pgm(const std::filesystem::path& path, std::span<const double> values,
                      std::uint32_t width, std::uint32_t height, AffineScale scale,
                      std::uint16_t maxval, const std::string& kind) {
  write_pgm(path, render_to_pgm(values, width, height, scale, maxval));
  nlohmann::ordered_json sidecar{
      {"image", path.filename().string()},
      {"kind", kind},
      {"width", width},
      {"height", height},
      {"maxval", maxval},
      {"scale", {{"lo", scale.lo}, {"hi", scale.hi}}},
      {"decode", "value = lo + gray / maxval * (hi - lo)"},
  };
  auto out = open_out(path.string() + ".json");
  out << sidecar.dump(2) << '\n';
}

void write_map_pgm(const std::filesystem::path& path, const AlphaMap& map, AffineScale scale,
                   std::uint16_t maxval) {
  write_values_pgm(path, map.values, map.width, map.height, scale, maxval,
                   std::string("alpha_") + scheme_tag(map.scheme));
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
  if (!out_) throw data_error("cannot open for writing: " + path.string());
}

namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += "\"\"";
    else quoted += c;
  }
  quoted += '"';
  return quoted;
}

}  // namespace

void CsvWriter::row(std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_escape(fields[i]);
  }
  out_ << "\r\n";
}

void CsvWriter::row(std::initializer_list<std::string> fields) {
  row(std::span<const std::string>(fields.begin(), fields.size()));
}

void CsvWriter::flush() { out_.flush(); }

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"': in_quotes = true; break;
      case ',': row.push_back(std::move(field)); field.clear(); break;
      case '\r': break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        break;
      default: field.push_back(c);
    }
  }
  if (in_quotes) throw data_error("CSV: unterminated quote: " + path.string());
  if (!field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace twinsim::io
