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

// Model files.
//
// Text:   "DUALEMB 1 <n> <d>\n" then one line per item:
//         item_id \t v_1 .. v_d \t v'_1 .. v'_d   (values tab-separated)
// Binary: "DUALEMB 1 <n> <d> binary\n" then per item a little-endian u32
//         id length, the id bytes, d input floats and d output floats
//         (little-endian IEEE-754 binary32).
//
// Text values are written in shortest round-trip form, so both variants
// reload to bit-identical matrices.

#ifndef DUALREC_MODEL_IO_HPP_
#define DUALREC_MODEL_IO_HPP_

#include <iosfwd>
#include <string>
#include <string_view>

#include "dualrec/sgns.hpp"

namespace dualrec {

enum class ModelFormat { kText, kBinary };

void write_model(std::ostream& out, const DualEmbedding& model,
                 ModelFormat format);
/// Detects the variant from the header. Throws InputError on bad data.
DualEmbedding read_model(std::istream& in);

void save_model(const std::string& path, const DualEmbedding& model,
                ModelFormat format);
DualEmbedding load_model(const std::string& path);

/// Hex SHA-256 of a byte string / a file's contents.
std::string fingerprint_bytes(std::string_view bytes);
std::string fingerprint_file(const std::string& path);

}  // namespace dualrec

#endif  // DUALREC_MODEL_IO_HPP_
