#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| akd_core::fuzzing::chat_response(data));
