#![no_main]

use clap::ValueEnum;
use kklab::config::{parse_config, Command};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for &command in Command::value_variants() {
        if let Ok((params, _)) = parse_config(command, text) {
            let _ = params.validate();
        }
    }
});
