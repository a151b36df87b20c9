/*
 * lfqa : low-field MRI quality assessment and hippocampus atlas toolkit
 *
 * Copyright 2026 The lfqa Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "lfqa/nifti_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "lfqa/error.hpp"

namespace lfqa {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kVoxOffset = 352;

// NIfTI-1 datatype codes.
enum : std::int16_t {
  DT_UINT8 = 2,
  DT_INT16 = 4,
  DT_INT32 = 8,
  DT_FLOAT32 = 16,
  DT_FLOAT64 = 64,
  DT_INT8 = 256,
  DT_UINT16 = 512,
  DT_UINT32 = 768,
  DT_INT64 = 1024,
  DT_UINT64 = 1280,
};

bool ends_with(const std::string &s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<unsigned char> read_file(const std::filesystem::path &path) {
  if (!std::filesystem::exists(path))
    throw IoError("file not found: " + path.string());
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr)
    throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes;
  unsigned char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof buf)) > 0)
    bytes.insert(bytes.end(), buf, buf + n);
  int errnum = Z_OK;
  gzerror(f, &errnum);
  gzclose(f);
  if (n < 0 || (errnum != Z_OK && errnum != Z_STREAM_END))
    throw IoError("truncated or corrupt file: " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path &path,
                const std::vector<unsigned char> &bytes) {
  if (ends_with(path.string(), ".gz")) {
    gzFile f = gzopen(path.c_str(), "wb6");
    if (f == nullptr)
      throw IoError("cannot write " + path.string());
    const int n = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    const int rc = gzclose(f);
    if (n != static_cast<int>(bytes.size()) || rc != Z_OK)
      throw IoError("cannot write " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw IoError("cannot write " + path.string());
}

// Endian-aware field access over a raw byte buffer.
class Reader {
public:
  Reader(const unsigned char *p, bool swap) : p_(p), swap_(swap) {}

  template <typename T> T get(std::size_t offset) const {
    T v;
    std::memcpy(&v, p_ + offset, sizeof(T));
    if (swap_ && sizeof(T) > 1) {
      auto *b = reinterpret_cast<unsigned char *>(&v);
      std::reverse(b, b + sizeof(T));
    }
    return v;
  }

private:
  const unsigned char *p_;
  bool swap_;
};

template <typename T> void put(std::vector<unsigned char> &buf, std::size_t offset, T v) {
  static_assert(std::endian::native == std::endian::little,
                "writer assumes a little-endian host");
  std::memcpy(buf.data() + offset, &v, sizeof(T));
}

std::size_t bytes_per_voxel(std::int16_t datatype) {
  switch (datatype) {
  case DT_UINT8:
  case DT_INT8: return 1;
  case DT_INT16:
  case DT_UINT16: return 2;
  case DT_INT32:
  case DT_UINT32:
  case DT_FLOAT32: return 4;
  case DT_FLOAT64:
  case DT_INT64:
  case DT_UINT64: return 8;
  default: return 0;
  }
}

template <typename T>
double load_as(const Reader &r, std::size_t offset) {
  return static_cast<double>(r.get<T>(offset));
}

double load_voxel(const Reader &r, std::int16_t datatype, std::size_t offset) {
  switch (datatype) {
  case DT_UINT8: return load_as<std::uint8_t>(r, offset);
  case DT_INT8: return load_as<std::int8_t>(r, offset);
  case DT_INT16: return load_as<std::int16_t>(r, offset);
  case DT_UINT16: return load_as<std::uint16_t>(r, offset);
  case DT_INT32: return load_as<std::int32_t>(r, offset);
  case DT_UINT32: return load_as<std::uint32_t>(r, offset);
  case DT_FLOAT32: return load_as<float>(r, offset);
  case DT_FLOAT64: return load_as<double>(r, offset);
  case DT_INT64: return load_as<std::int64_t>(r, offset);
  case DT_UINT64: return load_as<std::uint64_t>(r, offset);
  default: throw ParseError("unsupported voxel type");
  }
}

Mat4 qform_matrix(const Reader &r, const Vec3 &pixdim, float qfac_raw) {
  double b = r.get<float>(256), c = r.get<float>(260), d = r.get<float>(264);
  double a = 1.0 - (b * b + c * c + d * d);
  if (a < 1e-7) {
    a = 1.0 / std::sqrt(b * b + c * c + d * d);
    b *= a;
    c *= a;
    d *= a;
    a = 0.0;
  } else {
    a = std::sqrt(a);
  }
  Eigen::Matrix3d rot;
  rot << a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c),
      2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b),
      2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b;
  const double qfac = qfac_raw < 0 ? -1.0 : 1.0;
  Mat4 m = Mat4::Identity();
  m.block<3, 1>(0, 0) = rot.col(0) * pixdim.x();
  m.block<3, 1>(0, 1) = rot.col(1) * pixdim.y();
  m.block<3, 1>(0, 2) = rot.col(2) * pixdim.z() * qfac;
  m(0, 3) = r.get<float>(268);
  m(1, 3) = r.get<float>(272);
  m(2, 3) = r.get<float>(276);
  return m;
}

struct Decoded {
  Grid grid;
  std::vector<double> data;
};

std::filesystem::path image_path_for(const std::filesystem::path &hdr) {
  std::string s = hdr.string();
  if (ends_with(s, ".hdr.gz"))
    return s.substr(0, s.size() - 7) + ".img.gz";
  if (ends_with(s, ".hdr"))
    return s.substr(0, s.size() - 4) + ".img";
  return s;
}

Decoded decode(const std::filesystem::path &path) {
  const auto bytes = read_file(path);
  if (bytes.size() < kHeaderSize)
    throw IoError("truncated file: " + path.string());

  std::int32_t sizeof_hdr;
  std::memcpy(&sizeof_hdr, bytes.data(), 4);
  bool swap = false;
  if (sizeof_hdr != 348) {
    std::int32_t swapped = static_cast<std::int32_t>(
        __builtin_bswap32(static_cast<std::uint32_t>(sizeof_hdr)));
    if (swapped != 348)
      throw ParseError("not a NIfTI file");
    swap = true;
  }
  const Reader hdr(bytes.data(), swap);
  const char *magic = reinterpret_cast<const char *>(bytes.data() + 344);
  const bool single = std::memcmp(magic, "n+1\0", 4) == 0;
  const bool pair = std::memcmp(magic, "ni1\0", 4) == 0;
  if (!single && !pair)
    throw ParseError("not a NIfTI file");

  const auto ndim = hdr.get<std::int16_t>(40);
  if (ndim < 1 || ndim > 7)
    throw ParseError("invalid dim[0] in NIfTI header");
  Index3 dims{1, 1, 1};
  for (int a = 0; a < std::min<int>(ndim, 3); ++a)
    dims[a] = hdr.get<std::int16_t>(42 + 2 * a);
  for (int a = 3; a < ndim; ++a)
    if (hdr.get<std::int16_t>(42 + 2 * a) > 1)
      throw ParseError("not a 3D volume");
  for (auto d : dims)
    if (d <= 0)
      throw ParseError("invalid dimensions in NIfTI header");

  const auto datatype = hdr.get<std::int16_t>(70);
  const std::size_t bpv = bytes_per_voxel(datatype);
  if (bpv == 0)
    throw ParseError("unsupported voxel type");

  Vec3 pixdim;
  for (int a = 0; a < 3; ++a) {
    const double p = hdr.get<float>(80 + 4 * a);
    pixdim[a] = p > 0 ? p : 1.0;
  }
  const auto qform_code = hdr.get<std::int16_t>(252);
  const auto sform_code = hdr.get<std::int16_t>(254);
  Mat4 orient = Mat4::Identity();
  if (sform_code > 0) {
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 4; ++col)
        orient(row, col) = hdr.get<float>(280 + 16 * row + 4 * col);
  } else if (qform_code > 0) {
    orient = qform_matrix(hdr, pixdim, hdr.get<float>(76));
  } else {
    orient.diagonal().head<3>() = pixdim;
  }

  std::vector<unsigned char> image_bytes;
  std::size_t offset = 0;
  const unsigned char *base = nullptr;
  if (single) {
    offset = static_cast<std::size_t>(hdr.get<float>(108));
    base = bytes.data();
  } else {
    image_bytes = read_file(image_path_for(path));
    offset = static_cast<std::size_t>(std::max(0.0f, hdr.get<float>(108)));
    base = image_bytes.data();
  }
  const std::size_t available = single ? bytes.size() : image_bytes.size();
  const std::size_t n = static_cast<std::size_t>(dims[0] * dims[1] * dims[2]);
  if (offset + n * bpv > available)
    throw IoError("truncated file: " + path.string());

  const double slope = hdr.get<float>(112);
  const double inter = hdr.get<float>(116);
  const bool scaled = slope != 0.0 && std::isfinite(slope) && std::isfinite(inter);

  const Reader data(base, swap);
  std::vector<double> values(n);
  for (std::size_t v = 0; v < n; ++v) {
    double x = load_voxel(data, datatype, offset + v * bpv);
    if (scaled)
      x = x * slope + inter;
    if (!std::isfinite(x))
      throw ParseError("non-finite voxel value in " + path.string());
    values[v] = x;
  }
  return {Grid(dims, orient), std::move(values)};
}

std::vector<unsigned char> encode_header(const Grid &grid, std::int16_t datatype,
                                         std::int16_t bitpix) {
  std::vector<unsigned char> buf(kVoxOffset, 0);
  put<std::int32_t>(buf, 0, 348);
  put<std::int16_t>(buf, 40, 3);
  for (int a = 0; a < 3; ++a)
    put<std::int16_t>(buf, 42 + 2 * a, static_cast<std::int16_t>(grid.dims()[a]));
  for (int a = 3; a < 7; ++a)
    put<std::int16_t>(buf, 42 + 2 * a, 1);
  put<std::int16_t>(buf, 70, datatype);
  put<std::int16_t>(buf, 72, bitpix);
  put<float>(buf, 76, 1.0f);
  for (int a = 0; a < 3; ++a)
    put<float>(buf, 80 + 4 * a, static_cast<float>(grid.spacing()[a]));
  put<float>(buf, 108, static_cast<float>(kVoxOffset));
  put<float>(buf, 112, 1.0f);
  put<float>(buf, 116, 0.0f);
  buf[123] = 2; // NIFTI_UNITS_MM
  put<std::int16_t>(buf, 252, 0);
  put<std::int16_t>(buf, 254, 1); // NIFTI_XFORM_SCANNER_ANAT
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 4; ++col)
      put<float>(buf, 280 + 16 * row + 4 * col,
                 static_cast<float>(grid.orientation()(row, col)));
  std::memcpy(buf.data() + 344, "n+1\0", 4);
  if (grid.nx() > 32767 || grid.ny() > 32767 || grid.nz() > 32767)
    throw InvalidArgument("grid too large for NIfTI-1");
  return buf;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ','))
    fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',')
    fields.emplace_back();
  return fields;
}

} // namespace

Volume read_volume(const std::filesystem::path &path) {
  auto decoded = decode(path);
  return {std::move(decoded.grid), std::move(decoded.data)};
}

void write_volume(const Volume &volume, const std::filesystem::path &path) {
  auto buf = encode_header(volume.grid(), DT_FLOAT32, 32);
  buf.resize(kVoxOffset + volume.size() * 4);
  const auto data = volume.data();
  for (std::size_t v = 0; v < data.size(); ++v)
    put<float>(buf, kVoxOffset + 4 * v, static_cast<float>(data[v]));
  write_file(path, buf);
}

LabelMask read_mask(const std::filesystem::path &path) {
  auto decoded = decode(path);
  std::vector<std::uint16_t> labels(decoded.data.size());
  for (std::size_t v = 0; v < labels.size(); ++v) {
    const double x = decoded.data[v];
    if (x < 0 || x > 65535 || std::round(x) != x)
      throw ParseError("label image holds non-integer or negative values: " +
                       path.string());
    labels[v] = static_cast<std::uint16_t>(x);
  }
  return {std::move(decoded.grid), std::move(labels)};
}

void write_mask(const LabelMask &mask, const std::filesystem::path &path) {
  const auto labels = mask.labels();
  const bool small = std::all_of(labels.begin(), labels.end(),
                                 [](auto l) { return l <= 255; });
  auto buf = encode_header(mask.grid(), small ? DT_UINT8 : DT_UINT16,
                           small ? 8 : 16);
  const std::size_t bpv = small ? 1 : 2;
  buf.resize(kVoxOffset + labels.size() * bpv);
  for (std::size_t v = 0; v < labels.size(); ++v) {
    if (small)
      buf[kVoxOffset + v] = static_cast<unsigned char>(labels[v]);
    else
      put<std::uint16_t>(buf, kVoxOffset + 2 * v, labels[v]);
  }
  write_file(path, buf);
}

std::vector<QAScoreRecord> read_qa_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("file not found: " + path.string());
  std::string line;
  std::size_t row = 0;
  std::vector<std::optional<ArtefactDomain>> columns;
  while (std::getline(in, line)) {
    ++row;
    if (row == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0)
      line.erase(0, 3);
    if (!trim(line).empty())
      break;
  }
  if (trim(line).empty())
    throw ParseError("QA table has no header row: " + path.string());

  const auto header = split_csv(line);
  std::array<int, kNumDomains> seen{};
  for (std::size_t c = 1; c < header.size(); ++c) {
    auto d = parse_domain(header[c]);
    if (!d)
      throw ParseError("row " + std::to_string(row) + ", column " +
                       std::to_string(c + 1) + ": unknown artefact domain '" +
                       header[c] + "'");
    if (++seen[index_of(*d)] > 1)
      throw ParseError("duplicate column '" + header[c] + "'");
    columns.push_back(d);
  }
  if (header.size() != kNumDomains + 1)
    throw ParseError("QA table header must name the sample id and exactly seven domains");

  std::vector<QAScoreRecord> records;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty())
      continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw ParseError("row " + std::to_string(row) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    QAScoreRecord rec;
    rec.sample_id = fields[0];
    if (rec.sample_id.empty())
      throw ParseError("row " + std::to_string(row) + ", column " + header[0] +
                       ": empty sample id");
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const auto &f = fields[c];
      if (f != "0" && f != "1" && f != "2")
        throw ParseError("row " + std::to_string(row) + ", column " +
                         header[c] + ": score '" + f + "' is not 0, 1 or 2");
      rec[*columns[c - 1]] = severity_from_int(f[0] - '0');
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_qa_csv(const std::vector<QAScoreRecord> &records,
                  const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << "sample_id";
  for (auto d : kAllDomains)
    out << ',' << to_string(d);
  out << '\n';
  for (const auto &r : records) {
    if (r.sample_id.find(',') != std::string::npos)
      throw InvalidArgument("sample id contains a comma: " + r.sample_id);
    out << r.sample_id;
    for (auto s : r.scores)
      out << ',' << to_int(s);
    out << '\n';
  }
  if (!out)
    throw IoError("cannot write " + path.string());
}

bool is_nifti_path(const std::filesystem::path &path) {
  const auto s = path.filename().string();
  return ends_with(s, ".nii") || ends_with(s, ".nii.gz") ||
         ends_with(s, ".hdr") || ends_with(s, ".hdr.gz");
}

std::string nifti_stem(const std::filesystem::path &path) {
  std::string s = path.filename().string();
  for (std::string_view ext : {".nii.gz", ".hdr.gz", ".nii", ".hdr"})
    if (ends_with(s, ext))
      return s.substr(0, s.size() - ext.size());
  return s;
}

} // namespace lfqa
