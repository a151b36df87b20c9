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

#include <doctest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <zlib.h>

#include "lfqa/error.hpp"
#include "lfqa/nifti_io.hpp"
#include "lfqa/rng.hpp"

using namespace lfqa;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("lfqa_nifti_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Minimal header writer, independent of the library encoder.
struct RawHeader {
  std::vector<unsigned char> bytes = std::vector<unsigned char>(352, 0);
  bool big = false;

  template <typename T> void put(std::size_t off, T v) {
    unsigned char tmp[sizeof(T)];
    std::memcpy(tmp, &v, sizeof(T));
    if (big)
      std::reverse(tmp, tmp + sizeof(T));
    std::memcpy(bytes.data() + off, tmp, sizeof(T));
  }

  RawHeader(std::vector<std::int16_t> dim, std::int16_t datatype, bool big_endian = false)
      : big(big_endian) {
    put<std::int32_t>(0, 348);
    put<std::int16_t>(40, static_cast<std::int16_t>(dim.size()));
    for (std::size_t a = 0; a < dim.size(); ++a)
      put<std::int16_t>(42 + 2 * a, dim[a]);
    put<std::int16_t>(70, datatype);
    for (int a = 0; a < 3; ++a)
      put<float>(80 + 4 * a, 1.0f);
    put<float>(108, 352.0f);
    std::memcpy(bytes.data() + 344, "n+1\0", 4);
  }
};

void write_raw(const fs::path &p, const std::vector<unsigned char> &b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char *>(b.data()), static_cast<std::streamsize>(b.size()));
}

std::vector<unsigned char> read_raw(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

template <typename T> T get(const std::vector<unsigned char> &b, std::size_t off) {
  T v;
  std::memcpy(&v, b.data() + off, sizeof(T));
  return v;
}

} // namespace

TEST_CASE("volume round trip preserves grid and float32 data") {
  TempDir tmp;
  Mat4 o = Mat4::Identity();
  o.block<3, 3>(0, 0) = Eigen::AngleAxisd(0.2, Vec3(1, 2, 3).normalized()).toRotationMatrix() *
                        Vec3(0.9, 1.1, 2.5).asDiagonal();
  o.block<3, 1>(0, 3) = Vec3(-12.5, 30.0, 4.25);
  const Grid g({7, 5, 3}, o);
  Rng rng(3);
  std::vector<double> v(g.size());
  for (auto &x : v)
    x = rng.normal(0.0, 100.0);
  const Volume vol(g, v);

  for (const char *name : {"a.nii", "b.nii.gz"}) {
    const auto p = tmp.path / name;
    write_volume(vol, p);
    const Volume back = read_volume(p);
    CHECK(back.grid().dims() == g.dims());
    CHECK(back.grid().same_geometry(g, 1e-5));
    for (std::size_t n = 0; n < v.size(); ++n)
      CHECK(back[n] == static_cast<double>(static_cast<float>(v[n])));
  }
  CHECK(fs::file_size(tmp.path / "b.nii.gz") < fs::file_size(tmp.path / "a.nii"));
}

TEST_CASE("written header is valid for an independent parser") {
  TempDir tmp;
  const Grid g({6, 4, 2}, Vec3(1.5, 2.0, 3.0), Vec3(1.0, 2.0, 3.0));
  const auto p = tmp.path / "h.nii";
  write_volume(Volume(g), p);
  const auto b = read_raw(p);
  REQUIRE(b.size() == 352 + 48 * 4);
  CHECK(get<std::int32_t>(b, 0) == 348);
  CHECK(get<std::int16_t>(b, 40) == 3);
  CHECK(get<std::int16_t>(b, 42) == 6);
  CHECK(get<std::int16_t>(b, 44) == 4);
  CHECK(get<std::int16_t>(b, 46) == 2);
  CHECK(get<std::int16_t>(b, 70) == 16);
  CHECK(get<std::int16_t>(b, 72) == 32);
  CHECK(get<float>(b, 80) == 1.5f);
  CHECK(get<float>(b, 84) == 2.0f);
  CHECK(get<float>(b, 88) == 3.0f);
  CHECK(get<float>(b, 108) == 352.0f);
  CHECK(get<std::int16_t>(b, 254) > 0);
  CHECK(get<float>(b, 280) == 1.5f);
  CHECK(get<float>(b, 280 + 12) == 1.0f);
  CHECK(get<float>(b, 296 + 12) == 2.0f);
  CHECK(get<float>(b, 312 + 12) == 3.0f);
  CHECK(std::memcmp(b.data() + 344, "n+1\0", 4) == 0);

  // gzip output decompresses to the same bytes.
  const auto pz = tmp.path / "h.nii.gz";
  write_volume(Volume(g), pz);
  gzFile f = gzopen(pz.c_str(), "rb");
  std::vector<unsigned char> inflated(b.size() + 16);
  const int n = gzread(f, inflated.data(), static_cast<unsigned>(inflated.size()));
  gzclose(f);
  inflated.resize(static_cast<std::size_t>(n));
  CHECK(inflated == b);
}

TEST_CASE("scl_slope and scl_inter are applied") {
  TempDir tmp;
  RawHeader h({1, 1, 1}, 4);
  h.put<float>(112, 2.0f);
  h.put<float>(116, 1.0f);
  h.bytes.resize(354);
  h.put<std::int16_t>(352, 3);
  write_raw(tmp.path / "s.nii", h.bytes);
  CHECK(read_volume(tmp.path / "s.nii")[0] == 7.0);
}

TEST_CASE("big-endian headers are accepted") {
  TempDir tmp;
  RawHeader h({2, 1, 1}, 16, true);
  h.bytes.resize(360);
  h.put<float>(352, 1.25f);
  h.put<float>(356, -4.0f);
  write_raw(tmp.path / "be.nii", h.bytes);
  const Volume v = read_volume(tmp.path / "be.nii");
  CHECK(v.grid().dims() == Index3{2, 1, 1});
  CHECK(v[0] == 1.25);
  CHECK(v[1] == -4.0);
}

TEST_CASE("qform fallback and pixdim fallback") {
  TempDir tmp;
  RawHeader h({2, 2, 2}, 2);
  h.put<float>(80, 2.0f);
  h.put<float>(84, 3.0f);
  h.put<float>(88, 4.0f);
  h.bytes.resize(360);
  write_raw(tmp.path / "p.nii", h.bytes);
  CHECK(read_volume(tmp.path / "p.nii").grid().spacing().isApprox(Vec3(2, 3, 4)));

  // qform: 180 degrees about z (b=c=0, d=1), offsets 5,6,7.
  h.put<std::int16_t>(252, 1);
  h.put<float>(76, 1.0f);
  h.put<float>(256, 0.0f);
  h.put<float>(260, 0.0f);
  h.put<float>(264, 1.0f);
  h.put<float>(268, 5.0f);
  h.put<float>(272, 6.0f);
  h.put<float>(276, 7.0f);
  write_raw(tmp.path / "q.nii", h.bytes);
  const Grid g = read_volume(tmp.path / "q.nii").grid();
  CHECK(g.voxel_to_world(Vec3(1, 1, 1)).isApprox(Vec3(5 - 2, 6 - 3, 7 + 4)));
}

TEST_CASE("masks round trip") {
  TempDir tmp;
  const Grid g({3, 2, 2});
  const LabelMask small(g, {0, 1, 2, 0, 0, 1, 1, 0, 0, 0, 0, 255});
  write_mask(small, tmp.path / "m.nii.gz");
  CHECK(read_mask(tmp.path / "m.nii.gz").labels().size() == 12);
  CHECK(std::ranges::equal(read_mask(tmp.path / "m.nii.gz").labels(), small.labels()));
  const LabelMask big(g, {0, 1, 2, 0, 0, 1, 1, 0, 0, 0, 0, 4000});
  write_mask(big, tmp.path / "b.nii");
  CHECK(std::ranges::equal(read_mask(tmp.path / "b.nii").labels(), big.labels()));
  write_volume(Volume(g, std::vector<double>(12, 0.5)), tmp.path / "f.nii");
  CHECK_THROWS_AS(read_mask(tmp.path / "f.nii"), ParseError);
}

TEST_CASE("read errors") {
  TempDir tmp;
  CHECK_THROWS_AS(read_volume(tmp.path / "missing.nii"), IoError);

  RawHeader good({2, 2, 2}, 2);
  good.bytes.resize(360);
  auto bad_magic = good.bytes;
  std::memcpy(bad_magic.data() + 344, "xyz\0", 4);
  write_raw(tmp.path / "m.nii", bad_magic);
  CHECK_THROWS_WITH_AS(read_volume(tmp.path / "m.nii"), "not a NIfTI file", ParseError);

  auto junk = std::vector<unsigned char>(400, 7);
  write_raw(tmp.path / "j.nii", junk);
  CHECK_THROWS_WITH_AS(read_volume(tmp.path / "j.nii"), "not a NIfTI file", ParseError);

  RawHeader rgb({2, 2, 2}, 128);
  rgb.bytes.resize(352 + 24);
  write_raw(tmp.path / "rgb.nii", rgb.bytes);
  CHECK_THROWS_WITH_AS(read_volume(tmp.path / "rgb.nii"), "unsupported voxel type",
                       ParseError);

  RawHeader four({2, 2, 2, 3}, 2);
  four.bytes.resize(352 + 24);
  write_raw(tmp.path / "4d.nii", four.bytes);
  CHECK_THROWS_WITH_AS(read_volume(tmp.path / "4d.nii"), "not a 3D volume", ParseError);
  RawHeader singleton({2, 2, 2, 1, 1}, 2);
  singleton.bytes.resize(360);
  write_raw(tmp.path / "4s.nii", singleton.bytes);
  CHECK(read_volume(tmp.path / "4s.nii").size() == 8);

  auto truncated = good.bytes;
  truncated.resize(356);
  write_raw(tmp.path / "t.nii", truncated);
  CHECK_THROWS_AS(read_volume(tmp.path / "t.nii"), IoError);
  truncated.resize(100);
  write_raw(tmp.path / "t2.nii", truncated);
  CHECK_THROWS_AS(read_volume(tmp.path / "t2.nii"), IoError);

  CHECK_THROWS_AS(write_volume(Volume(Grid({1, 1, 1})), tmp.path / "no" / "dir" / "x.nii"),
                  IoError);
}

TEST_CASE("path helpers") {
  CHECK(is_nifti_path("a/b.nii"));
  CHECK(is_nifti_path("b.nii.gz"));
  CHECK_FALSE(is_nifti_path("b.json"));
  CHECK(nifti_stem("x/sub-01.nii.gz") == "sub-01");
  CHECK(nifti_stem("sub.nii") == "sub");
}

TEST_CASE("QA score table") {
  TempDir tmp;
  const auto p = tmp.path / "s.csv";
  {
    std::ofstream out(p);
    out << "id,noise,zipper,positioning,banding,motion,contrast,distortion\n"
        << "sub-001,0,0,1,0,2,0,0\n";
  }
  const auto r = read_qa_csv(p);
  REQUIRE(r.size() == 1);
  CHECK(r[0].sample_id == "sub-001");
  CHECK(r[0][ArtefactDomain::Zipper] == Severity::Class0);
  CHECK(r[0][ArtefactDomain::Positioning] == Severity::Class1);
  CHECK(r[0][ArtefactDomain::Motion] == Severity::Class2);

  SUBCASE("header order is free") {
    std::ofstream(p) << "id,Motion,noise,zipper,positioning,banding,contrast,distortion\n"
                     << "a,2,0,0,0,0,0,1\n";
    const auto q = read_qa_csv(p);
    CHECK(q[0][ArtefactDomain::Motion] == Severity::Class2);
    CHECK(q[0][ArtefactDomain::Distortion] == Severity::Class1);
  }
  SUBCASE("round trip is stable") {
    std::vector<QAScoreRecord> recs(20);
    Rng rng(9);
    for (std::size_t n = 0; n < recs.size(); ++n) {
      recs[n].sample_id = "s" + std::to_string(n);
      for (auto &s : recs[n].scores)
        s = severity_from_int(static_cast<int>(rng.below(3)));
    }
    write_qa_csv(recs, p);
    const auto once = read_qa_csv(p);
    CHECK(once == recs);
    write_qa_csv(once, tmp.path / "t.csv");
    CHECK(read_raw(p) == read_raw(tmp.path / "t.csv"));
  }
  SUBCASE("bad score names row and column") {
    std::ofstream(p) << "id,noise,zipper,positioning,banding,motion,contrast,distortion\n"
                     << "a,0,0,0,0,0,0,0\n"
                     << "b,0,0,3,0,0,0,0\n";
    try {
      read_qa_csv(p);
      FAIL("expected a parse error");
    } catch (const ParseError &e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 3") != std::string::npos);
      CHECK(msg.find("positioning") != std::string::npos);
    }
  }
  SUBCASE("header problems") {
    std::ofstream(p) << "id,noise,zipper\n";
    CHECK_THROWS_AS(read_qa_csv(p), ParseError);
    std::ofstream(p) << "id,noise,zipper,positioning,banding,motion,contrast,glare\n";
    CHECK_THROWS_AS(read_qa_csv(p), ParseError);
    std::ofstream(p) << "id,noise,noise,positioning,banding,motion,contrast,distortion\n";
    CHECK_THROWS_AS(read_qa_csv(p), ParseError);
  }
  SUBCASE("short row") {
    std::ofstream(p) << "id,noise,zipper,positioning,banding,motion,contrast,distortion\n"
                     << "a,0,0\n";
    CHECK_THROWS_AS(read_qa_csv(p), ParseError);
  }
}
