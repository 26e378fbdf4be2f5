#![no_main]
use ips_genealogy::formats::parse_usize_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(list) = parse_usize_list(data) {
        let text = list.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        assert_eq!(parse_usize_list(&text).unwrap(), list);
    }
});
