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

#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "dualrec/model_io.hpp"
#include "dualrec/sgns.hpp"
#include "test_util.hpp"

namespace dualrec {
namespace {

DualEmbedding sample_model() {
  auto m = init_model({"bed sheet", "queen", "twin"}, 5, 8);
  float v = -1.0f / 3.0f;
  for (auto& x : m.output_matrix()) {
    x = v;
    v *= -1.7f;
  }
  m.input_row(0)[0] = std::numeric_limits<float>::denorm_min();
  m.input_row(1)[1] = std::numeric_limits<float>::max();
  return m;
}

class ModelRoundTrip : public ::testing::TestWithParam<ModelFormat> {};

TEST_P(ModelRoundTrip, BitIdentical) {
  const auto m = sample_model();
  std::stringstream buf;
  write_model(buf, m, GetParam());
  const auto back = read_model(buf);
  EXPECT_EQ(back, m);
}

INSTANTIATE_TEST_SUITE_P(Formats, ModelRoundTrip,
                         ::testing::Values(ModelFormat::kText, ModelFormat::kBinary));

TEST(ModelIo, TextLayout) {
  DualEmbedding m({"a", "b"}, 2);
  m.input_row(0)[0] = 0.5f;
  m.output_row(1)[1] = -2.0f;
  std::ostringstream out;
  write_model(out, m, ModelFormat::kText);
  EXPECT_EQ(out.str(), "DUALEMB 1 2 2\na\t0.5\t0\t0\t0\nb\t0\t0\t0\t-2\n");
}

TEST(ModelIo, BinaryHeader) {
  std::ostringstream out;
  write_model(out, sample_model(), ModelFormat::kBinary);
  EXPECT_EQ(out.str().rfind("DUALEMB 1 3 5 binary\n", 0), 0u);
}

TEST(ModelIo, RejectsBadInput) {
  for (const char* text : {"", "NOTAMODEL 1 1 1\n", "DUALEMB 1 2 1\na\t1\t2\n",
                           "DUALEMB 1 1 2\na\t1\tx\t2\t3\n", "DUALEMB 1 2 1\nb\t1\t1\na\t1\t1\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(read_model(in), InputError) << text;
  }
  std::ostringstream out;
  write_model(out, sample_model(), ModelFormat::kBinary);
  std::istringstream truncated(out.str().substr(0, out.str().size() - 3));
  EXPECT_THROW(read_model(truncated), InputError);
}

TEST(ModelIo, FileRoundTripAndFingerprint) {
  testing::TempDir dir;
  const auto m = sample_model();
  const auto path = dir.file("m.emb");
  save_model(path, m, ModelFormat::kBinary);
  EXPECT_EQ(load_model(path), m);
  EXPECT_EQ(fingerprint_file(path), fingerprint_bytes(testing::read_file(path)));
  EXPECT_EQ(fingerprint_bytes("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  try {
    load_model(dir.file("missing.emb"));
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.emb"), std::string::npos);
  }
}

}  // namespace
}  // namespace dualrec
