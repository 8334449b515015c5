#![no_main]

use libfuzzer_sys::fuzz_target;
use murmurforge::io::{read_csv, write_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(ds) = read_csv(data) {
        let mut out = Vec::new();
        write_csv(&ds, &mut out).unwrap();
        assert_eq!(read_csv(out.as_slice()).unwrap(), ds);
    }
});
