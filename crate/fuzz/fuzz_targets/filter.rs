#![no_main]

use libfuzzer_sys::fuzz_target;
use murmurforge::Filter;

fuzz_target!(|s: &str| {
    if let Ok(f) = s.parse::<Filter>() {
        assert_eq!(f.to_string().parse::<Filter>().unwrap(), f);
    }
});
