// Copyright (c) 2026 pcflow authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
