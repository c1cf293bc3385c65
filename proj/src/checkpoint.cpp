// src/checkpoint.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"
#include "musesvs/arrayio.hpp"

namespace musesvs {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'M', 'S', 'V', 'S', 'C', 'K', 'P', '1'};

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
  check(is.good(), "checkpoint: truncated");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_named(std::ostream& os, const std::string& name, const Tensor& t) {
  put_u32(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_array(os, t);
}

std::pair<std::string, Tensor> read_named(std::istream& is) {
  const std::uint32_t len = get_u32(is);
  std::string name(len, '\0');
  is.read(name.data(), len);
  check(is.good(), "checkpoint: truncated name");
  return {name, read_array(is)};
}

json meta_to_json(const CheckpointMeta& m) {
  json j;
  j["step"] = m.step;
  j["seed"] = std::to_string(m.seed);
  j["config_hash"] = std::to_string(m.config_hash);
  j["rng_state"] = {std::to_string(m.rng_state[0]),
                    std::to_string(m.rng_state[1]),
                    std::to_string(m.rng_state[2]),
                    std::to_string(m.rng_state[3])};
  j["adam_g_step"] = m.adam_g_step;
  j["adam_d_step"] = m.adam_d_step;
  j["preset"] = m.preset;
  if (!m.extra_json.empty()) j["extra"] = json::parse(m.extra_json);
  return j;
}

CheckpointMeta meta_from_json(const json& j) {
  CheckpointMeta m;
  m.step = j.at("step").get<int>();
  m.seed = std::stoull(j.at("seed").get<std::string>());
  m.config_hash = std::stoull(j.at("config_hash").get<std::string>());
  const auto& rs = j.at("rng_state");
  for (int i = 0; i < 4; ++i)
    m.rng_state[i] = std::stoull(rs.at(i).get<std::string>());
  m.adam_g_step = j.at("adam_g_step").get<int>();
  m.adam_d_step = j.at("adam_d_step").get<int>();
  m.preset = j.at("preset").get<std::string>();
  if (j.contains("extra")) m.extra_json = j.at("extra").dump();
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& ps,
                     Adam* opt_g, Adam* opt_d, CheckpointMeta meta) {
  // Quantize live state first so continuing == resuming.
  for (const auto& [name, var] : ps.all()) round_tensor_to_f32(var.node()->value);
  if (opt_g) {
    opt_g->round_state_to_f32();
    meta.adam_g_step = opt_g->step_count();
  }
  if (opt_d) {
    opt_d->round_state_to_f32();
    meta.adam_d_step = opt_d->step_count();
  }

  std::ofstream os(path, std::ios::binary);
  check(os.good(), "cannot open for writing: " + path);
  os.write(kMagic, 8);
  const std::string meta_str = meta_to_json(meta).dump();
  put_u32(os, static_cast<std::uint32_t>(meta_str.size()));
  os.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

  std::uint32_t count = static_cast<std::uint32_t>(ps.all().size());
  if (opt_g) count += 2 * static_cast<std::uint32_t>(opt_g->moment1().size());
  if (opt_d) count += 2 * static_cast<std::uint32_t>(opt_d->moment1().size());
  put_u32(os, count);

  for (const auto& [name, var] : ps.all()) write_named(os, name, var.value());
  auto write_opt = [&os](const char* prefix, Adam& opt) {
    for (const auto& [name, t] : opt.moment1())
      write_named(os, std::string(prefix) + ".m." + name, t);
    for (const auto& [name, t] : opt.moment2())
      write_named(os, std::string(prefix) + ".v." + name, t);
  };
  if (opt_g) write_opt("opt_g", *opt_g);
  if (opt_d) write_opt("opt_d", *opt_d);
  check(os.good(), "checkpoint write failed: " + path);
}

CheckpointMeta load_checkpoint(const std::string& path, ParamStore& ps,
                               Adam* opt_g, Adam* opt_d) {
  std::ifstream is(path, std::ios::binary);
  check(is.good(), "cannot open: " + path);
  char magic[8];
  is.read(magic, 8);
  check(is.good() && std::memcmp(magic, kMagic, 8) == 0,
        "checkpoint: bad magic");
  const std::uint32_t meta_len = get_u32(is);
  std::string meta_str(meta_len, '\0');
  is.read(meta_str.data(), meta_len);
  check(is.good(), "checkpoint: truncated metadata");
  CheckpointMeta meta = meta_from_json(json::parse(meta_str));

  const std::uint32_t count = get_u32(is);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, tensor] = read_named(is);
    auto assign = [&](std::map<std::string, Tensor>& dst,
                      const std::string& key) {
      auto it = dst.find(key);
      if (it == dst.end()) return false;
      check(it->second.shape == tensor.shape,
            "checkpoint: shape mismatch for " + name);
      it->second = tensor;
      return true;
    };
    if (name.rfind("opt_g.m.", 0) == 0) {
      if (opt_g) check(assign(opt_g->moment1(), name.substr(8)),
                       "checkpoint: unknown moment " + name);
    } else if (name.rfind("opt_g.v.", 0) == 0) {
      if (opt_g) check(assign(opt_g->moment2(), name.substr(8)),
                       "checkpoint: unknown moment " + name);
    } else if (name.rfind("opt_d.m.", 0) == 0) {
      if (opt_d) check(assign(opt_d->moment1(), name.substr(8)),
                       "checkpoint: unknown moment " + name);
    } else if (name.rfind("opt_d.v.", 0) == 0) {
      if (opt_d) check(assign(opt_d->moment2(), name.substr(8)),
                       "checkpoint: unknown moment " + name);
    } else {
      Var* v = ps.find(name);
      check(v != nullptr, "checkpoint: unknown parameter " + name);
      check(v->value().shape == tensor.shape,
            "checkpoint: shape mismatch for " + name);
      v->node()->value = tensor;
    }
  }
  if (opt_g) opt_g->set_step_count(meta.adam_g_step);
  if (opt_d) opt_d->set_step_count(meta.adam_d_step);
  return meta;
}

CheckpointMeta peek_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  check(is.good(), "cannot open: " + path);
  char magic[8];
  is.read(magic, 8);
  check(is.good() && std::memcmp(magic, kMagic, 8) == 0,
        "checkpoint: bad magic");
  const std::uint32_t meta_len = get_u32(is);
  std::string meta_str(meta_len, '\0');
  is.read(meta_str.data(), meta_len);
  check(is.good(), "checkpoint: truncated metadata");
  return meta_from_json(json::parse(meta_str));
}

}  // namespace musesvs
