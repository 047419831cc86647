// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0
//
// Versioned binary container of named tensors.
//
// Layout (all integers little-endian):
//   bytes 0..7   magic "PCFLOWCP"
//   u32          format version (1)
//   u64          tensor count
//   per tensor:  u32 name length, name bytes (UTF-8, no terminator),
//                u32 ndim, u64 dims[ndim], f64 data[numel] row-major
//
// Optimizer state rides along as tensors named "opt.*"; parameter loading
// ignores them.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pcflow/network.hpp"
#include "pcflow/tensor.hpp"

namespace pcflow::io {

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const ad::Tensor*>>& tensors);

std::vector<std::pair<std::string, ad::Tensor>> load_checkpoint(const std::string& path);

// Copies checkpoint entries into the params; a missing, extra, or
// shape-mismatched tensor is an error naming the first offender.
void load_network_params(net::NetworkParams& params,
                         const std::vector<std::pair<std::string, ad::Tensor>>& entries);

} // namespace pcflow::io
