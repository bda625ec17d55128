#![no_main]

use libfuzzer_sys::fuzz_target;
use plnc::engine::read_csv;

fuzz_target!(|data: &[u8]| {
    let _ = read_csv(data);
});
