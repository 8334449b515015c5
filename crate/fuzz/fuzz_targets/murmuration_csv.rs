#![no_main]

use libfuzzer_sys::fuzz_target;
use murmurforge::features::{MurmurationTable, Normalization};

fuzz_target!(|data: &[u8]| {
    let _ = MurmurationTable::read_csv(data, Normalization::Atilde);
});
