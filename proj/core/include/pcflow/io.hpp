// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Point/flow file formats and the training loss log.
//
// Text format: one record per line, three ASCII decimals separated by
// single spaces, printed with 17 significant digits so read-back is
// bit-exact. Binary format: magic "PPWC", u32 version (1), u64 record
// count, then count*3 doubles, row-major little-endian.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcflow/tensor.hpp"

namespace pcflow::io {

void write_rows3_text(const std::string& path, const ad::Tensor& rows);
void write_rows3_binary(const std::string& path, const ad::Tensor& rows);

ad::Tensor read_rows3_text(const std::string& path);
ad::Tensor read_rows3_binary(const std::string& path);

// Reads either format, sniffing the binary magic.
ad::Tensor read_rows3(const std::string& path);

struct LossLogRow {
    std::int64_t step = 0;
    double loss = 0.0;
    double epe3d = 0.0; // NaN when no ground truth is available
};

// Appends rows as "step,loss,epe3d" CSV; writes the header only when the
// file does not exist yet.
void append_loss_log(const std::string& path, const std::vector<LossLogRow>& rows);
std::vector<LossLogRow> read_loss_log(const std::string& path);

std::string format_double(double v); // %.17g, bit-exact round trip

} // namespace pcflow::io
