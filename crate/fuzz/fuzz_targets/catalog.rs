#![no_main]

use libfuzzer_sys::fuzz_target;
use plnc::netcode::MapCatalog;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    // anything accepted must survive a write/read cycle unchanged
    if let Ok(cat) = MapCatalog::parse_text(s) {
        let again = MapCatalog::parse_text(&cat.to_text()).expect("reparse of written catalog");
        assert_eq!(again.to_text(), cat.to_text());
    }
});
