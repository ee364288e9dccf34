/*
 * Copyright 2026 The Dualrec Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "dualrec/model_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "dualrec/text.hpp"

namespace dualrec {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary model I/O assumes a little-endian host");

void append_float(std::string& out, float v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw InputError("truncated binary model");
  return v;
}

}  // namespace

void write_model(std::ostream& out, const DualEmbedding& model,
                 ModelFormat format) {
  const std::size_t d = model.dim();
  out << "DUALEMB 1 " << model.size() << ' ' << d;
  if (format == ModelFormat::kBinary) {
    out << " binary\n";
    for (std::uint32_t r = 0; r < model.size(); ++r) {
      const auto& id = model.vocab()[r];
      write_u32(out, static_cast<std::uint32_t>(id.size()));
      out.write(id.data(), static_cast<std::streamsize>(id.size()));
      out.write(reinterpret_cast<const char*>(model.input_row(r).data()),
                static_cast<std::streamsize>(d * sizeof(float)));
      out.write(reinterpret_cast<const char*>(model.output_row(r).data()),
                static_cast<std::streamsize>(d * sizeof(float)));
    }
    return;
  }
  out << '\n';
  std::string line;
  for (std::uint32_t r = 0; r < model.size(); ++r) {
    line.clear();
    line += model.vocab()[r];
    for (float v : model.input_row(r)) {
      line += '\t';
      append_float(line, v);
    }
    for (float v : model.output_row(r)) {
      line += '\t';
      append_float(line, v);
    }
    line += '\n';
    out << line;
  }
}

DualEmbedding read_model(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw InputError("missing model header");
  strip_cr(header);
  const auto parts = split(header, ' ');
  std::size_t n = 0;
  std::size_t d = 0;
  if (parts.size() < 4 || parts.size() > 5 || parts[0] != "DUALEMB" ||
      parts[1] != "1" || !parse_number(parts[2], n) || !parse_number(parts[3], d) ||
      n == 0 || d == 0) {
    throw InputError("bad model header: " + header);
  }
  const bool binary = parts.size() == 5;
  if (binary && parts[4] != "binary") throw InputError("bad model header: " + header);

  std::vector<ItemId> vocab;
  std::vector<float> input;
  std::vector<float> output;
  vocab.reserve(n);
  input.reserve(n * d);
  output.reserve(n * d);
  if (binary) {
    for (std::size_t r = 0; r < n; ++r) {
      const std::uint32_t len = read_u32(in);
      std::string id(len, '\0');
      in.read(id.data(), len);
      std::vector<float> row(2 * d);
      in.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
      if (!in) throw InputError("truncated binary model");
      vocab.push_back(std::move(id));
      input.insert(input.end(), row.begin(), row.begin() + static_cast<std::ptrdiff_t>(d));
      output.insert(output.end(), row.begin() + static_cast<std::ptrdiff_t>(d), row.end());
    }
  } else {
    std::string line;
    for (std::size_t r = 0; r < n; ++r) {
      if (!std::getline(in, line)) throw InputError("truncated text model");
      strip_cr(line);
      const auto fields = split(line, '\t');
      if (fields.size() != 1 + 2 * d || fields[0].empty()) {
        throw InputError(fmt::format("bad model record {}", r + 1));
      }
      vocab.emplace_back(fields[0]);
      for (std::size_t i = 0; i < 2 * d; ++i) {
        float v = 0.0f;
        if (!parse_number(fields[1 + i], v)) {
          throw InputError(fmt::format("bad value in model record {}", r + 1));
        }
        (i < d ? input : output).push_back(v);
      }
    }
  }
  DualEmbedding model;
  try {
    model = DualEmbedding(std::move(vocab), d);
  } catch (const ConfigError& e) {
    throw InputError(std::string("bad model vocabulary: ") + e.what());
  }
  std::copy(input.begin(), input.end(), model.input_matrix().begin());
  std::copy(output.begin(), output.end(), model.output_matrix().begin());
  return model;
}

void save_model(const std::string& path, const DualEmbedding& model,
                ModelFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model file: " + path);
  write_model(out, model, format);
  if (!out) throw Error("failed writing model file: " + path);
}

DualEmbedding load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file: " + path);
  return read_model(in);
}

std::string fingerprint_bytes(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error("SHA-256 failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string fingerprint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return fingerprint_bytes(buf.str());
}

}  // namespace dualrec
