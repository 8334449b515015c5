#![no_main]

use libfuzzer_sys::fuzz_target;
use murmurforge::experiments::NnPipeline;
use murmurforge::lda::LdaModel;
use murmurforge::nn::NnModel;

fuzz_target!(|s: &str| {
    let _ = NnModel::from_json(s);
    let _ = NnPipeline::from_json(s);
    let _ = LdaModel::from_json(s);
});
