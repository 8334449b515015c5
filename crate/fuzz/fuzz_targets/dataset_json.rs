#![no_main]

use libfuzzer_sys::fuzz_target;
use murmurforge::io::{read_json, write_json};

fuzz_target!(|data: &[u8]| {
    if let Ok(ds) = read_json(data) {
        let mut out = Vec::new();
        write_json(&ds, &mut out).unwrap();
        assert_eq!(read_json(out.as_slice()).unwrap(), ds);
    }
});
