// SPDX-License-Identifier: Apache-2.0
#include "hoi/cli.hpp"

int main(int argc, char** argv) { return hoi::run_command(argc, argv); }
