#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "leangate/binary_io.hpp"
#include "leangate/errors.hpp"
#include "leangate/gate_regressor.hpp"
#include "leangate/training.hpp"

namespace leangate {

// GREG v1: "GREG", u32 version, u32 d_model, u32 D, u32 K, then named blocks
// (u16 name length, name bytes, u32 count, f32 values) until end of file.
// Trainable blocks use the parameter_layout names; "norm.mean"/"norm.std"
// carry descriptor standardization; "adam.*" and "train.epoch" are optional
// optimizer state for resuming.

inline constexpr std::uint32_t kGregVersion = 1;

struct Checkpoint {
  GateRegressor model;
  std::optional<OptimizerState> optimizer;
};

namespace detail {

inline void write_block(std::ostream& os, const std::string& name, const std::vector<float>& values) {
  io::write_le<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(values.size()));
  for (float v : values) io::write_le<float>(os, v);
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const GateRegressor& model,
                             const OptimizerState* optimizer = nullptr) {
  io::write_magic(os, "GREG");
  io::write_le<std::uint32_t>(os, kGregVersion);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.shape.d_model));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.shape.descriptor_dim));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.shape.iterations));
  for (const auto& b : parameter_layout(model.shape)) {
    detail::write_block(os, b.name,
                        std::vector<float>(model.params.begin() + static_cast<std::ptrdiff_t>(b.offset),
                                           model.params.begin() + static_cast<std::ptrdiff_t>(b.offset + b.count())));
  }
  detail::write_block(os, "norm.mean", model.norm_mean);
  detail::write_block(os, "norm.std", model.norm_std);
  if (optimizer) {
    detail::write_block(os, "adam.m", optimizer->m);
    detail::write_block(os, "adam.v", optimizer->v);
    // Counters are stored as raw u32 bit patterns inside the f32 payload.
    detail::write_block(os, "adam.step", {std::bit_cast<float>(optimizer->step)});
    detail::write_block(os, "train.epoch", {std::bit_cast<float>(optimizer->epoch)});
  }
}

inline Checkpoint read_checkpoint(std::istream& is) {
  io::expect_magic(is, "GREG", "GREG");
  const auto version = io::read_le<std::uint32_t>(is, "GREG");
  if (version != kGregVersion) throw DataError("GREG: unsupported version " + std::to_string(version));
  ModelShape shape;
  shape.d_model = static_cast<int>(io::read_le<std::uint32_t>(is, "GREG"));
  shape.descriptor_dim = static_cast<int>(io::read_le<std::uint32_t>(is, "GREG"));
  shape.iterations = static_cast<int>(io::read_le<std::uint32_t>(is, "GREG"));
  if (shape.d_model < 1 || shape.d_model > 4096 || shape.descriptor_dim < 1 || shape.descriptor_dim > (1 << 20)) {
    throw DataError("GREG: implausible model shape");
  }
  std::map<std::string, std::vector<float>> blocks;
  while (is.peek() != std::char_traits<char>::eof()) {
    const auto len = io::read_le<std::uint16_t>(is, "GREG");
    std::string name(len, '\0');
    is.read(name.data(), len);
    if (is.gcount() != len) throw DataError("GREG: truncated payload");
    const auto count = io::read_le<std::uint32_t>(is, "GREG");
    if (count > (1u << 26)) throw DataError("GREG: implausible block size");
    std::vector<float> values(count);
    for (auto& v : values) v = io::read_le<float>(is, "GREG");
    blocks[name] = std::move(values);
  }
  const auto take = [&](const std::string& name, std::size_t expected) -> const std::vector<float>& {
    const auto it = blocks.find(name);
    if (it == blocks.end()) throw DataError("GREG: missing block " + name);
    if (it->second.size() != expected) throw DataError("GREG: wrong size for block " + name);
    return it->second;
  };
  Checkpoint ck{GateRegressor(shape), std::nullopt};
  for (const auto& b : parameter_layout(shape)) {
    const auto& v = take(b.name, b.count());
    std::copy(v.begin(), v.end(), ck.model.params.begin() + static_cast<std::ptrdiff_t>(b.offset));
  }
  ck.model.norm_mean = take("norm.mean", static_cast<std::size_t>(shape.descriptor_dim));
  ck.model.norm_std = take("norm.std", static_cast<std::size_t>(shape.descriptor_dim));
  if (blocks.count("adam.m")) {
    OptimizerState opt;
    opt.m = take("adam.m", ck.model.params.size());
    opt.v = take("adam.v", ck.model.params.size());
    opt.step = std::bit_cast<std::uint32_t>(take("adam.step", 1)[0]);
    opt.epoch = std::bit_cast<std::uint32_t>(take("train.epoch", 1)[0]);
    ck.optimizer = std::move(opt);
  }
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const GateRegressor& model,
                            const OptimizerState* optimizer = nullptr) {
  std::ostringstream os(std::ios::binary);
  write_checkpoint(os, model, optimizer);
  io::write_file_atomic(path, os.str());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::istringstream is(io::read_file(path), std::ios::binary);
  return read_checkpoint(is);
}

}  // namespace leangate
