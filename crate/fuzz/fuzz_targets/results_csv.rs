#![no_main]

use libfuzzer_sys::fuzz_target;
use renyi_harness::decode::decode_results_csv;

fuzz_target!(|data: &[u8]| {
    let _ = decode_results_csv(data);
});
