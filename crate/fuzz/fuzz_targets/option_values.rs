#![no_main]

use libfuzzer_sys::fuzz_target;
use murmurforge::experiments::{FeatureMode, Method, SplitRatio};
use murmurforge::features::Normalization;
use murmurforge::lda::Classifier;
use murmurforge::nn::Loss;
use murmurforge::{Origin, OriginSet};

fuzz_target!(|s: &str| {
    if let Ok(r) = s.parse::<SplitRatio>() {
        assert_eq!(r.to_string().parse::<SplitRatio>().unwrap(), r);
    }
    if let Ok(f) = s.parse::<FeatureMode>() {
        assert_eq!(f.to_string().parse::<FeatureMode>().unwrap(), f);
    }
    let _ = s.parse::<Method>();
    let _ = s.parse::<Normalization>();
    let _ = s.parse::<Classifier>();
    let _ = s.parse::<Loss>();
    let _ = s.parse::<Origin>();
    let _ = s.parse::<OriginSet>();
});
