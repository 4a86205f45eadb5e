#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // anything that parses must survive a write/parse round trip
    if let Ok(rows) = skintone::formats::parse_ita_results(data) {
        let again = skintone::formats::parse_ita_results(skintone::formats::write_ita_results(&rows).as_bytes())
            .expect("written ITA results parse back");
        assert_eq!(again.len(), rows.len());
    }
});
