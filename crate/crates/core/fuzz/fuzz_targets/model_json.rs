#![no_main]
use ips_genealogy::formats::{model_to_json, parse_model_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(model) = parse_model_json(data) {
        let again = parse_model_json(&model_to_json(&model).unwrap()).unwrap();
        assert_eq!(model, again);
    }
});
