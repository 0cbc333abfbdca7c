// Copyright 2026 The para-lora Authors
// SPDX-License-Identifier: Apache-2.0

#include "para/commands.hpp"

int main(int argc, char** argv) { return para::cli::run(argc, argv); }
