#include "voxsr/geometry/io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "voxsr/common/error.hpp"

namespace voxsr::geometry {

namespace {

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::I8:
    case PlyType::U8:
      return 1;
    case PlyType::I16:
    case PlyType::U16:
      return 2;
    case PlyType::I32:
    case PlyType::U32:
    case PlyType::F32:
      return 4;
    case PlyType::F64:
      return 8;
  }
  return 0;
}

bool parse_ply_type(const std::string& token, PlyType& out) {
  if (token == "char" || token == "int8") out = PlyType::I8;
  else if (token == "uchar" || token == "uint8") out = PlyType::U8;
  else if (token == "short" || token == "int16") out = PlyType::I16;
  else if (token == "ushort" || token == "uint16") out = PlyType::U16;
  else if (token == "int" || token == "int32") out = PlyType::I32;
  else if (token == "uint" || token == "uint32") out = PlyType::U32;
  else if (token == "float" || token == "float32") out = PlyType::F32;
  else if (token == "double" || token == "float64") out = PlyType::F64;
  else return false;
  return true;
}

bool is_float_type(PlyType t) { return t == PlyType::F32 || t == PlyType::F64; }

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::F32;
  bool is_list = false;
  PlyType count_type = PlyType::U8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

[[noreturn]] void parse_fail(const std::string& path, std::size_t offset, const std::string& msg) {
  fail("parse error in '", path, "' at byte ", offset, ": ", msg);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

// Reads one header line ending in '\n' (tolerating '\r\n'); returns false at
// end of buffer.
bool next_line(const std::string& data, std::size_t& pos, std::string& line,
               std::size_t& line_start) {
  if (pos >= data.size()) return false;
  line_start = pos;
  const auto nl = data.find('\n', pos);
  if (nl == std::string::npos) {
    line = data.substr(pos);
    pos = data.size();
  } else {
    line = data.substr(pos, nl - pos);
    pos = nl + 1;
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

double read_binary_scalar(const std::string& path, const std::string& data, std::size_t& pos,
                          PlyType type) {
  const std::size_t size = ply_type_size(type);
  if (pos + size > data.size()) parse_fail(path, pos, "truncated payload");
  const char* src = data.data() + pos;
  pos += size;
  switch (type) {
    case PlyType::I8: return static_cast<double>(static_cast<std::int8_t>(src[0]));
    case PlyType::U8: return static_cast<double>(static_cast<std::uint8_t>(src[0]));
    case PlyType::I16: { std::int16_t v; std::memcpy(&v, src, 2); return v; }
    case PlyType::U16: { std::uint16_t v; std::memcpy(&v, src, 2); return v; }
    case PlyType::I32: { std::int32_t v; std::memcpy(&v, src, 4); return v; }
    case PlyType::U32: { std::uint32_t v; std::memcpy(&v, src, 4); return v; }
    case PlyType::F32: { float v; std::memcpy(&v, src, 4); return v; }
    case PlyType::F64: { double v; std::memcpy(&v, src, 8); return v; }
  }
  return 0.0;
}

double read_ascii_scalar(const std::string& path, const std::string& data, std::size_t& pos) {
  while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
  if (pos >= data.size()) parse_fail(path, pos, "truncated payload");
  const char* start = data.data() + pos;
  char* end = nullptr;
  const double value = std::strtod(start, &end);
  if (end == start) parse_fail(path, pos, "expected a number");
  pos += static_cast<std::size_t>(end - start);
  return value;
}

PointCloud load_ply(const std::string& path, const std::string& data) {
  std::size_t pos = 0;
  std::size_t line_start = 0;
  std::string line;

  if (!next_line(data, pos, line, line_start) || line != "ply") {
    parse_fail(path, 0, "missing 'ply' magic");
  }

  bool binary = false;
  bool format_seen = false;
  std::vector<PlyElement> elements;

  while (true) {
    if (!next_line(data, pos, line, line_start)) {
      parse_fail(path, data.size(), "header missing end_header");
    }
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    const auto& kw = tokens[0];
    if (kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      if (tokens.size() < 3) parse_fail(path, line_start, "malformed format line");
      if (tokens[1] == "ascii") binary = false;
      else if (tokens[1] == "binary_little_endian") binary = true;
      else parse_fail(path, line_start, "unsupported format '" + tokens[1] + "'");
      format_seen = true;
    } else if (kw == "element") {
      if (tokens.size() != 3) parse_fail(path, line_start, "malformed element line");
      PlyElement el;
      el.name = tokens[1];
      char* end = nullptr;
      el.count = std::strtoull(tokens[2].c_str(), &end, 10);
      if (end == tokens[2].c_str() || *end != '\0') {
        parse_fail(path, line_start, "malformed element count");
      }
      elements.push_back(std::move(el));
    } else if (kw == "property") {
      if (elements.empty()) parse_fail(path, line_start, "property before any element");
      PlyProperty prop;
      if (tokens.size() == 5 && tokens[1] == "list") {
        prop.is_list = true;
        if (!parse_ply_type(tokens[2], prop.count_type) || !parse_ply_type(tokens[3], prop.type)) {
          parse_fail(path, line_start, "unknown property type in list");
        }
        prop.name = tokens[4];
      } else if (tokens.size() == 3) {
        if (!parse_ply_type(tokens[1], prop.type)) {
          parse_fail(path, line_start, "unknown property type '" + tokens[1] + "'");
        }
        prop.name = tokens[2];
      } else {
        parse_fail(path, line_start, "malformed property line");
      }
      elements.back().props.push_back(std::move(prop));
    } else if (kw == "end_header") {
      break;
    } else {
      parse_fail(path, line_start, "unknown header keyword '" + kw + "'");
    }
  }
  if (!format_seen) parse_fail(path, line_start, "header missing format line");

  PointCloud cloud;
  for (const auto& el : elements) {
    const bool is_vertex = el.name == "vertex";
    int ix = -1, iy = -1, iz = -1;
    std::vector<int> attr_props;
    if (is_vertex) {
      for (std::size_t p = 0; p < el.props.size(); ++p) {
        const auto& prop = el.props[p];
        if (prop.is_list) continue;
        if (prop.name == "x") ix = static_cast<int>(p);
        else if (prop.name == "y") iy = static_cast<int>(p);
        else if (prop.name == "z") iz = static_cast<int>(p);
        else if (is_float_type(prop.type)) attr_props.push_back(static_cast<int>(p));
      }
      if (ix < 0 || iy < 0 || iz < 0) {
        parse_fail(path, pos, "vertex element lacks x/y/z properties");
      }
      cloud.points.reserve(el.count);
      for (int p : attr_props) cloud.attrs[el.props[p].name].reserve(el.count);
    }

    std::vector<double> record(el.props.size(), 0.0);
    for (std::size_t r = 0; r < el.count; ++r) {
      for (std::size_t p = 0; p < el.props.size(); ++p) {
        const auto& prop = el.props[p];
        if (prop.is_list) {
          const double count = binary ? read_binary_scalar(path, data, pos, prop.count_type)
                                      : read_ascii_scalar(path, data, pos);
          if (count < 0) parse_fail(path, pos, "negative list count");
          for (std::size_t k = 0; k < static_cast<std::size_t>(count); ++k) {
            if (binary) read_binary_scalar(path, data, pos, prop.type);
            else read_ascii_scalar(path, data, pos);
          }
          record[p] = 0.0;
        } else {
          record[p] = binary ? read_binary_scalar(path, data, pos, prop.type)
                             : read_ascii_scalar(path, data, pos);
        }
      }
      if (is_vertex) {
        cloud.points.emplace_back(record[ix], record[iy], record[iz]);
        for (int p : attr_props) {
          cloud.attrs[el.props[p].name].push_back(static_cast<float>(record[p]));
        }
      }
    }
  }
  return cloud;
}

PointCloud load_xyz(const std::string& path, const std::string& data) {
  PointCloud cloud;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::string line;
  std::size_t line_start = 0;
  while (next_line(data, pos, line, line_start)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (tokens.size() < 3) fail("parse error in '", path, "' at line ", line_no,
                                ": expected 3 coordinates, got ", tokens.size());
    double xyz[3];
    for (int a = 0; a < 3; ++a) {
      char* end = nullptr;
      xyz[a] = std::strtod(tokens[a].c_str(), &end);
      if (end == tokens[a].c_str() || *end != '\0') {
        fail("parse error in '", path, "' at line ", line_no, ": non-numeric token '", tokens[a],
             "'");
      }
    }
    cloud.points.emplace_back(xyz[0], xyz[1], xyz[2]);
  }
  return cloud;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  std::string tail = s.substr(s.size() - suffix.size());
  std::transform(tail.begin(), tail.end(), tail.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return tail == suffix;
}

void append_f32(std::string& out, float v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

}  // namespace

PointCloud load_cloud(const std::string& path, CloudFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '", path, "' for reading");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (format == CloudFormat::Auto) {
    const bool looks_ply = data.size() >= 3 && data.compare(0, 3, "ply") == 0;
    format = looks_ply ? CloudFormat::PlyBinary : CloudFormat::Xyz;
  }
  switch (format) {
    case CloudFormat::PlyBinary:
    case CloudFormat::PlyAscii:
      return load_ply(path, data);
    default:
      return load_xyz(path, data);
  }
}

void save_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format) {
  cloud.check_valid();
  if (format == CloudFormat::Auto) {
    format = has_suffix(path, ".ply") ? CloudFormat::PlyBinary : CloudFormat::Xyz;
  }

  std::string out;
  if (format == CloudFormat::Xyz) {
    char buf[96];
    for (const auto& p : cloud.points) {
      // %.9g round-trips float32 exactly.
      std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", static_cast<double>(float(p.x())),
                    static_cast<double>(float(p.y())), static_cast<double>(float(p.z())));
      out += buf;
    }
  } else {
    const bool binary = format == CloudFormat::PlyBinary;
    out += "ply\n";
    out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
    out += cat("element vertex ", cloud.points.size(), "\n");
    out += "property float x\nproperty float y\nproperty float z\n";
    for (const auto& [name, _] : cloud.attrs) out += cat("property float ", name, "\n");
    out += "end_header\n";
    char buf[64];
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      const auto& p = cloud.points[i];
      if (binary) {
        append_f32(out, static_cast<float>(p.x()));
        append_f32(out, static_cast<float>(p.y()));
        append_f32(out, static_cast<float>(p.z()));
        for (const auto& [_, values] : cloud.attrs) append_f32(out, values[i]);
      } else {
        std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g", static_cast<double>(float(p.x())),
                      static_cast<double>(float(p.y())), static_cast<double>(float(p.z())));
        out += buf;
        for (const auto& [_, values] : cloud.attrs) {
          std::snprintf(buf, sizeof(buf), " %.9g", static_cast<double>(values[i]));
          out += buf;
        }
        out += '\n';
      }
    }
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail("cannot open '", path, "' for writing");
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) fail("write failed for '", path, "'");
}

}  // namespace voxsr::geometry
