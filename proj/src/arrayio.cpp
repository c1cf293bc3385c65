// src/arrayio.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/arrayio.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace musesvs {

namespace {

constexpr char kMagic[8] = {'M', 'S', 'V', 'S', 'A', 'R', 'R', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  check(is.good(), "array file: truncated header");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(os, bits);
}

float get_f32(std::istream& is) {
  const std::uint32_t bits = get_u32(is);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

void write_array(std::ostream& os, const Tensor& t) {
  os.write(kMagic, 8);
  put_u32(os, static_cast<std::uint32_t>(t.shape.size()));
  for (int d : t.shape) put_u32(os, static_cast<std::uint32_t>(d));
  for (double v : t.data) put_f32(os, static_cast<float>(v));
}

Tensor read_array(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  check(is.good() && std::memcmp(magic, kMagic, 8) == 0,
        "array file: bad magic");
  const std::uint32_t rank = get_u32(is);
  check(rank >= 1 && rank <= 4, "array file: unsupported rank");
  std::vector<int> shape;
  for (std::uint32_t i = 0; i < rank; ++i)
    shape.push_back(static_cast<int>(get_u32(is)));
  Tensor t(shape);
  for (auto& v : t.data) v = static_cast<double>(get_f32(is));
  check(is.good(), "array file: truncated payload");
  return t;
}

void save_array(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  check(os.good(), "cannot open for writing: " + path);
  write_array(os, t);
  check(os.good(), "write failed: " + path);
}

Tensor load_array(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  check(is.good(), "cannot open: " + path);
  return read_array(is);
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  check(is.good(), "cannot open: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  check(os.good(), "cannot open for writing: " + path);
  os << content;
  check(os.good(), "write failed: " + path);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace musesvs
