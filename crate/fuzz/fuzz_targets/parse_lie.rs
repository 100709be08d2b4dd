#![no_main]
use libfuzzer_sys::fuzz_target;
use twist_core::io::parse_lie;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_lie(text);
    }
});
