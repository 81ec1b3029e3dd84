// PLY reader/writer. Only the vertex element is interpreted; any other
// element is skipped.

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string_view>

#include "pcqa/cloud.hpp"

namespace pcqa {
namespace {

enum class Scalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<Scalar> scalar_from_name(const std::string& name) {
  if (name == "char" || name == "int8") return Scalar::Int8;
  if (name == "uchar" || name == "uint8") return Scalar::UInt8;
  if (name == "short" || name == "int16") return Scalar::Int16;
  if (name == "ushort" || name == "uint16") return Scalar::UInt16;
  if (name == "int" || name == "int32") return Scalar::Int32;
  if (name == "uint" || name == "uint32") return Scalar::UInt32;
  if (name == "float" || name == "float32") return Scalar::Float32;
  if (name == "double" || name == "float64") return Scalar::Float64;
  return std::nullopt;
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::Int8:
    case Scalar::UInt8:
      return 1;
    case Scalar::Int16:
    case Scalar::UInt16:
      return 2;
    case Scalar::Int32:
    case Scalar::UInt32:
    case Scalar::Float32:
      return 4;
    case Scalar::Float64:
      return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::Float32;
  bool is_list = false;
  Scalar count_type = Scalar::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

enum class Format { Ascii, BinaryLittleEndian };

struct Header {
  Format format = Format::Ascii;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
  std::size_t end_header_line = 0;
};

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

Header parse_header(const std::string& bytes) {
  Header h;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool seen_format = false;
  auto next_line = [&](std::string& line) {
    if (pos >= bytes.size()) return false;
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string::npos) end = bytes.size();
    line.assign(bytes, pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = std::min(bytes.size(), end + 1);
    ++line_no;
    return true;
  };

  std::string line;
  if (!next_line(line) || line != "ply") throw ParseError(1, "missing 'ply' magic");
  while (true) {
    if (!next_line(line)) throw ParseError(line_no + 1, "missing end_header");
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    const std::string& key = tok[0];
    if (key == "comment" || key == "obj_info") continue;
    if (key == "format") {
      if (tok.size() != 3) throw ParseError(line_no, "malformed format line");
      if (tok[1] == "ascii") {
        h.format = Format::Ascii;
      } else if (tok[1] == "binary_little_endian") {
        h.format = Format::BinaryLittleEndian;
      } else {
        throw ParseError(line_no, "unsupported format '" + tok[1] + "'");
      }
      seen_format = true;
    } else if (key == "element") {
      if (tok.size() != 3) throw ParseError(line_no, "malformed element line");
      Element e;
      e.name = tok[1];
      auto [ptr, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), e.count);
      if (ec != std::errc() || ptr != tok[2].data() + tok[2].size()) {
        throw ParseError(line_no, "bad element count '" + tok[2] + "'");
      }
      h.elements.push_back(std::move(e));
    } else if (key == "property") {
      if (h.elements.empty()) throw ParseError(line_no, "property before any element");
      Property p;
      if (tok.size() == 5 && tok[1] == "list") {
        auto ct = scalar_from_name(tok[2]);
        auto it = scalar_from_name(tok[3]);
        if (!ct || !it) throw ParseError(line_no, "unknown list property type");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
        p.name = tok[4];
      } else if (tok.size() == 3) {
        auto t = scalar_from_name(tok[1]);
        if (!t) throw ParseError(line_no, "unknown property type '" + tok[1] + "'");
        p.type = *t;
        p.name = tok[2];
      } else {
        throw ParseError(line_no, "malformed property line");
      }
      h.elements.back().properties.push_back(std::move(p));
    } else if (key == "end_header") {
      if (!seen_format) throw ParseError(line_no, "missing format line");
      h.body_offset = pos;
      h.end_header_line = line_no;
      return h;
    } else {
      throw ParseError(line_no, "unexpected header keyword '" + key + "'");
    }
  }
}

double read_binary_scalar(const unsigned char* p, Scalar type) {
  std::uint64_t raw = 0;
  const std::size_t n = scalar_size(type);
  for (std::size_t i = 0; i < n; ++i) raw |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  switch (type) {
    case Scalar::Int8:
      return static_cast<std::int8_t>(raw);
    case Scalar::UInt8:
      return static_cast<std::uint8_t>(raw);
    case Scalar::Int16:
      return static_cast<std::int16_t>(raw);
    case Scalar::UInt16:
      return static_cast<std::uint16_t>(raw);
    case Scalar::Int32:
      return static_cast<std::int32_t>(raw);
    case Scalar::UInt32:
      return static_cast<std::uint32_t>(raw);
    case Scalar::Float32:
      return std::bit_cast<float>(static_cast<std::uint32_t>(raw));
    case Scalar::Float64:
      return std::bit_cast<double>(raw);
  }
  return 0.0;
}

std::uint8_t to_channel(double v) {
  if (!std::isfinite(v)) return 0;
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

// Column indices of the interesting vertex properties.
struct VertexLayout {
  int x = -1, y = -1, z = -1, r = -1, g = -1, b = -1;
  bool has_color() const { return r >= 0 && g >= 0 && b >= 0; }
};

VertexLayout vertex_layout(const Element& e, std::size_t line) {
  VertexLayout l;
  for (std::size_t i = 0; i < e.properties.size(); ++i) {
    const auto& n = e.properties[i].name;
    const int idx = static_cast<int>(i);
    if (e.properties[i].is_list) continue;
    if (n == "x") l.x = idx;
    else if (n == "y") l.y = idx;
    else if (n == "z") l.z = idx;
    else if (n == "red" || n == "diffuse_red") l.r = idx;
    else if (n == "green" || n == "diffuse_green") l.g = idx;
    else if (n == "blue" || n == "diffuse_blue") l.b = idx;
  }
  if (l.x < 0 || l.y < 0 || l.z < 0) {
    throw ParseError(line, "vertex element lacks x/y/z properties");
  }
  return l;
}

void store_vertex(PointCloud& cloud, const VertexLayout& l, const std::vector<double>& v) {
  cloud.points.emplace_back(v[l.x], v[l.y], v[l.z]);
  if (l.has_color()) {
    cloud.colors.push_back({to_channel(v[l.r]), to_channel(v[l.g]), to_channel(v[l.b])});
  } else {
    cloud.colors.push_back({128, 128, 128});
  }
}

// Whitespace tokenizer over the ascii body.
class AsciiTokens {
 public:
  AsciiTokens(const std::string& bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

  bool next(std::string_view& tok) {
    while (pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (pos_ >= bytes_.size()) return false;
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    tok = std::string_view(bytes_).substr(start, pos_ - start);
    return true;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_;
};

// float32 properties are parsed as float so ascii and binary encodings of the
// same values agree bit for bit.
bool parse_ascii_scalar(std::string_view tok, Scalar type, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (type == Scalar::Float32) {
    float f = 0.0f;
    auto [ptr, ec] = std::from_chars(first, last, f);
    out = f;
    return ec == std::errc() && ptr == last;
  }
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

void read_ascii(const std::string& bytes, const Header& h, PointCloud& cloud) {
  AsciiTokens tokens(bytes, h.body_offset);
  std::string_view tok;
  for (const Element& e : h.elements) {
    const bool is_vertex = e.name == "vertex";
    std::optional<VertexLayout> layout;
    if (is_vertex) layout = vertex_layout(e, h.end_header_line);
    std::vector<double> values(e.properties.size());
    for (std::size_t i = 0; i < e.count; ++i) {
      for (std::size_t k = 0; k < e.properties.size(); ++k) {
        const Property& p = e.properties[k];
        if (!tokens.next(tok)) {
          throw TruncationError("element '" + e.name + "': expected " + std::to_string(e.count) +
                                " entries, data ends at entry " + std::to_string(i));
        }
        double v = 0.0;
        if (!parse_ascii_scalar(tok, p.is_list ? p.count_type : p.type, v)) {
          throw Error("element '" + e.name + "' entry " + std::to_string(i) +
                      ": bad number '" + std::string(tok) + "'");
        }
        if (p.is_list) {
          const auto n = static_cast<std::size_t>(v);
          for (std::size_t j = 0; j < n; ++j) {
            if (!tokens.next(tok)) throw TruncationError("element '" + e.name + "': truncated list");
          }
        }
        values[k] = v;
      }
      if (is_vertex) store_vertex(cloud, *layout, values);
    }
    if (is_vertex) return;
  }
}

void read_binary(const std::string& bytes, const Header& h, PointCloud& cloud) {
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t pos = h.body_offset;
  const std::size_t end = bytes.size();
  for (const Element& e : h.elements) {
    const bool is_vertex = e.name == "vertex";
    std::optional<VertexLayout> layout;
    if (is_vertex) layout = vertex_layout(e, h.end_header_line);
    std::vector<double> values(e.properties.size());
    for (std::size_t i = 0; i < e.count; ++i) {
      for (std::size_t k = 0; k < e.properties.size(); ++k) {
        const Property& p = e.properties[k];
        const Scalar first = p.is_list ? p.count_type : p.type;
        if (pos + scalar_size(first) > end) {
          throw TruncationError("element '" + e.name + "': expected " + std::to_string(e.count) +
                                " entries, data ends at entry " + std::to_string(i));
        }
        values[k] = read_binary_scalar(data + pos, first);
        pos += scalar_size(first);
        if (p.is_list) {
          const std::size_t skip = static_cast<std::size_t>(values[k]) * scalar_size(p.type);
          if (pos + skip > end) throw TruncationError("element '" + e.name + "': truncated list");
          pos += skip;
        }
      }
      if (is_vertex) store_vertex(cloud, *layout, values);
    }
    if (is_vertex) return;
  }
}

}  // namespace

PointCloud parse_ply(const std::string& bytes, const std::string& id) {
  const Header h = parse_header(bytes);
  auto vertex = std::find_if(h.elements.begin(), h.elements.end(),
                             [](const Element& e) { return e.name == "vertex"; });
  if (vertex == h.elements.end()) throw ParseError(h.end_header_line, "no vertex element");
  if (vertex->count == 0) throw Error("empty cloud");

  PointCloud cloud;
  cloud.id = id;
  cloud.points.reserve(vertex->count);
  cloud.colors.reserve(vertex->count);
  if (h.format == Format::Ascii) {
    read_ascii(bytes, h, cloud);
  } else {
    read_binary(bytes, h, cloud);
  }
  cloud.validate();
  return cloud;
}

PointCloud load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ply(buf.str(), path.stem().string());
}

std::string to_ply_bytes(const PointCloud& cloud) {
  cloud.validate();
  std::string out;
  out += "ply\nformat binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "end_header\n";
  out.reserve(out.size() + cloud.size() * 27);
  auto put_u64 = [&out](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) put_u64(std::bit_cast<std::uint64_t>(cloud.points[i][k]));
    out.push_back(static_cast<char>(cloud.colors[i].r));
    out.push_back(static_cast<char>(cloud.colors[i].g));
    out.push_back(static_cast<char>(cloud.colors[i].b));
  }
  return out;
}

void save_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  const std::string bytes = to_ply_bytes(cloud);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace pcqa
