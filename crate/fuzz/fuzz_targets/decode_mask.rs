#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&threshold, rest)) = data.split_first() else { return };
    let polarity = if threshold & 1 == 0 {
        skintone::MaskPolarity::WhiteExcluded
    } else {
        skintone::MaskPolarity::BlackExcluded
    };
    if let Ok(mask) = skintone::formats::decode_mask(rest, threshold, polarity) {
        assert_eq!(mask.data().len(), (mask.width() * mask.height()) as usize);
    }
});
