#![no_main]

use ffrtf::algebra::{BiLaurent, Ring};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _: Result<BiLaurent, _> = BiLaurent::parse(Ring::Rational, s);
    }
});
