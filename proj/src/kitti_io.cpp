#include "ora/kitti_io.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ora {

namespace {

constexpr std::size_t kBytesPerPoint = 16;  // 4 fields x float32

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' ||
                               line[i] == '\r')) {
      ++i;
    }
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' &&
           line[i] != '\r') {
      ++i;
    }
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

double parse_double(std::string_view token, std::size_t line_no,
                    const char* what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(),
                                   value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse " +
                    what + " from '" + std::string(token) + "'");
  }
  return value;
}

int parse_int(std::string_view token, std::size_t line_no, const char* what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(),
                                   value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse " +
                    what + " from '" + std::string(token) + "'");
  }
  return value;
}

RawLabel parse_label_line(std::string_view line, std::size_t line_no,
                          bool has_score) {
  const auto fields = split_ws(line);
  const std::size_t expected = has_score ? 16 : 15;
  if (fields.size() != expected) {
    throw FormatError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(expected) + " fields, got " +
                      std::to_string(fields.size()));
  }

  RawLabel label;
  label.class_name = std::string(fields[0]);
  label.truncation = parse_double(fields[1], line_no, "truncation");
  label.occlusion = parse_int(fields[2], line_no, "occlusion");
  label.alpha = parse_double(fields[3], line_no, "alpha");
  label.bbox2d.left = parse_double(fields[4], line_no, "bbox left");
  label.bbox2d.top = parse_double(fields[5], line_no, "bbox top");
  label.bbox2d.right = parse_double(fields[6], line_no, "bbox right");
  label.bbox2d.bottom = parse_double(fields[7], line_no, "bbox bottom");
  label.height = parse_double(fields[8], line_no, "height");
  label.width = parse_double(fields[9], line_no, "width");
  label.length = parse_double(fields[10], line_no, "length");
  label.location.x() = parse_double(fields[11], line_no, "location x");
  label.location.y() = parse_double(fields[12], line_no, "location y");
  label.location.z() = parse_double(fields[13], line_no, "location z");
  label.rotation_y = parse_double(fields[14], line_no, "rotation_y");
  if (has_score) label.score = parse_double(fields[15], line_no, "score");

  if (!label.is_dont_care()) {
    if (!(label.height > 0.0 && label.width > 0.0 && label.length > 0.0)) {
      throw DataError("line " + std::to_string(line_no) +
                      ": non-positive dimensions for class " +
                      label.class_name);
    }
  }
  if (!(label.bbox2d.left < label.bbox2d.right &&
        label.bbox2d.top < label.bbox2d.bottom)) {
    throw DataError("line " + std::to_string(line_no) +
                    ": degenerate 2D bbox (left<right, top<bottom required)");
  }
  for (double v : {label.truncation, label.alpha, label.height, label.width,
                   label.length, label.location.x(), label.location.y(),
                   label.location.z(), label.rotation_y,
                   label.score.value_or(0.0)}) {
    if (!std::isfinite(v)) {
      throw DataError("line " + std::to_string(line_no) +
                      ": non-finite numeric field");
    }
  }
  return label;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

PointCloud parse_point_cloud(std::span<const std::byte> bytes,
                             CloudParseStats* stats) {
  if (bytes.size() % kBytesPerPoint != 0) {
    throw FormatError("cloud byte length " + std::to_string(bytes.size()) +
                      " is not a multiple of 16");
  }
  const Eigen::Index n =
      static_cast<Eigen::Index>(bytes.size() / kBytesPerPoint);
  PointCloud cloud;
  cloud.points.resize(n, 4);
  if (n > 0) {
    std::memcpy(cloud.points.data(), bytes.data(), bytes.size());
  }
  CloudParseStats local;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < 4; ++c) {
      if (!std::isfinite(cloud.points(i, c))) {
        throw DataError("non-finite value in point record " +
                        std::to_string(i));
      }
    }
    float& r = cloud.points(i, 3);
    if (r < 0.0f || r > 1.0f) {
      r = std::min(1.0f, std::max(0.0f, r));
      ++local.clamped_reflectance;
    }
  }
  if (stats != nullptr) *stats = local;
  return cloud;
}

std::vector<std::byte> write_point_cloud(const PointCloud& cloud) {
  std::vector<std::byte> bytes(
      static_cast<std::size_t>(cloud.size()) * kBytesPerPoint);
  if (!bytes.empty()) {
    std::memcpy(bytes.data(), cloud.points.data(), bytes.size());
  }
  return bytes;
}

std::vector<RawLabel> parse_label_file(std::string_view text, bool has_score) {
  std::vector<RawLabel> labels;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (!split_ws(line).empty()) {
      labels.push_back(parse_label_line(line, line_no, has_score));
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  return labels;
}

std::string write_label_file(const std::vector<RawLabel>& labels,
                             bool with_score) {
  std::string out;
  for (const RawLabel& l : labels) {
    out += l.class_name;
    out += ' ';
    out += format_double(l.truncation);
    out += ' ';
    out += std::to_string(l.occlusion);
    for (double v : {l.alpha, l.bbox2d.left, l.bbox2d.top, l.bbox2d.right,
                     l.bbox2d.bottom, l.height, l.width, l.length,
                     l.location.x(), l.location.y(), l.location.z(),
                     l.rotation_y}) {
      out += ' ';
      out += format_double(v);
    }
    if (with_score) {
      if (!l.score.has_value()) {
        throw DataError("label '" + l.class_name +
                        "' has no score but a detection file was requested");
      }
      out += ' ';
      out += format_double(*l.score);
    }
    out += '\n';
  }
  return out;
}

Calibration parse_calib_file(std::string_view text) {
  bool have_p2 = false, have_r0 = false, have_tr = false;
  Calibration calib;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;

    const std::size_t colon = line.find(':');
    if (colon != std::string_view::npos) {
      std::string_view key = line.substr(0, colon);
      while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) {
        key.remove_suffix(1);
      }
      const auto values = split_ws(line.substr(colon + 1));
      auto fill = [&](double* dst, std::size_t count, const char* name) {
        if (values.size() != count) {
          throw FormatError("line " + std::to_string(line_no) + ": key " +
                            std::string(name) + " expects " +
                            std::to_string(count) + " values, got " +
                            std::to_string(values.size()));
        }
        for (std::size_t i = 0; i < count; ++i) {
          dst[i] = parse_double(values[i], line_no, name);
        }
      };
      // Matrices are stored row-major in the file; Eigen members are
      // column-major, so go through a row-major staging buffer.
      if (key == "P2") {
        double buf[12];
        fill(buf, 12, "P2");
        calib.projection_p2 =
            Eigen::Map<Eigen::Matrix<double, 3, 4, Eigen::RowMajor>>(buf);
        have_p2 = true;
      } else if (key == "R0_rect") {
        double buf[9];
        fill(buf, 9, "R0_rect");
        calib.rect_r0 =
            Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(buf);
        have_r0 = true;
      } else if (key == "Tr_velo_to_cam") {
        double buf[12];
        fill(buf, 12, "Tr_velo_to_cam");
        calib.velo_to_cam =
            Eigen::Map<Eigen::Matrix<double, 3, 4, Eigen::RowMajor>>(buf);
        have_tr = true;
      }
    }
    if (end == text.size()) break;
    pos = end + 1;
  }

  if (!have_p2) throw FormatError("calib file is missing key P2");
  if (!have_r0) throw FormatError("calib file is missing key R0_rect");
  if (!have_tr) throw FormatError("calib file is missing key Tr_velo_to_cam");

  for (double v : calib.projection_p2.reshaped()) {
    if (!std::isfinite(v)) throw DataError("non-finite value in P2");
  }
  for (double v : calib.rect_r0.reshaped()) {
    if (!std::isfinite(v)) throw DataError("non-finite value in R0_rect");
  }
  for (double v : calib.velo_to_cam.reshaped()) {
    if (!std::isfinite(v)) throw DataError("non-finite value in Tr_velo_to_cam");
  }
  if (std::abs(calib.rect_r0.determinant()) < kCalibDeterminantFloor) {
    throw DataError("R0_rect is singular");
  }
  if (std::abs(calib.velo_to_cam_rotation().determinant()) <
      kCalibDeterminantFloor) {
    throw DataError("Tr_velo_to_cam rotation is singular");
  }
  return calib;
}

std::string write_calib_file(const Calibration& calib) {
  std::ostringstream out;
  out.precision(12);
  auto emit = [&out](const char* key, const double* data, int rows, int cols) {
    out << key << ':';
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        out << ' ' << data[r * cols + c];
      }
    }
    out << '\n';
  };
  Eigen::Matrix<double, 3, 4, Eigen::RowMajor> p2 = calib.projection_p2;
  Eigen::Matrix<double, 3, 3, Eigen::RowMajor> r0 = calib.rect_r0;
  Eigen::Matrix<double, 3, 4, Eigen::RowMajor> tr = calib.velo_to_cam;
  emit("P2", p2.data(), 3, 4);
  emit("R0_rect", r0.data(), 3, 3);
  emit("Tr_velo_to_cam", tr.data(), 3, 4);
  return out.str();
}

PointCloud read_point_cloud_file(const std::filesystem::path& path,
                                 CloudParseStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open cloud file " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  return parse_point_cloud(std::as_bytes(std::span(raw)), stats);
}

void write_point_cloud_file(const std::filesystem::path& path,
                            const PointCloud& cloud) {
  const auto bytes = write_point_cloud(cloud);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open cloud file for writing: " +
                              path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

std::vector<RawLabel> read_label_file(const std::filesystem::path& path,
                                      bool has_score) {
  return parse_label_file(read_text_file(path), has_score);
}

void write_label_file(const std::filesystem::path& path,
                      const std::vector<RawLabel>& labels, bool with_score) {
  write_text_file(path, write_label_file(labels, with_score));
}

Calibration read_calib_file(const std::filesystem::path& path) {
  return parse_calib_file(read_text_file(path));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open file for writing: " +
                              path.string());
  out << text;
  if (!out) throw FormatError("short write to " + path.string());
}

std::string frame_name(std::uint64_t number) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06llu",
                static_cast<unsigned long long>(number));
  return buf;
}

FrameId parse_frame_id(std::string_view token) {
  if (token.empty()) throw FormatError("empty frame id");
  std::uint64_t number = 0;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), number);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw FormatError("frame id '" + std::string(token) +
                      "' is not a decimal number");
  }
  return FrameId{std::string(token), number};
}

std::vector<FrameId> read_split_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<FrameId> frames;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line = std::string_view(text).substr(pos, end - pos);
    const auto tokens = split_ws(line);
    if (tokens.size() > 1) {
      throw FormatError("split file line with multiple tokens: '" +
                        std::string(line) + "'");
    }
    if (tokens.size() == 1) frames.push_back(parse_frame_id(tokens[0]));
    if (end == text.size()) break;
    pos = end + 1;
  }
  return frames;
}

}  // namespace ora
