#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = skintone::formats::decode_rgb(data) {
        assert!(img.width() > 0 && img.height() > 0);
    }
});
