#![no_main]
use libfuzzer_sys::fuzz_target;
use twist_core::io::parse_twist;

// First byte picks the dimension.
fuzz_target!(|data: &[u8]| {
    let Some((&d, rest)) = data.split_first() else { return };
    if let Ok(text) = std::str::from_utf8(rest) {
        let _ = parse_twist(text, 1 + d as usize % 8);
    }
});
