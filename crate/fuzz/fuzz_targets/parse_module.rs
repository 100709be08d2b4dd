#![no_main]
use libfuzzer_sys::fuzz_target;
use twist_core::io::parse_module;
use twist_core::lie::catalog;

fuzz_target!(|data: &[u8]| {
    let lie = catalog::ax_plus_b().lie;
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_module(text, &lie);
    }
});
