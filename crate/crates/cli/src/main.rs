// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(mubkit_cli::run(std::env::args_os()));
}
