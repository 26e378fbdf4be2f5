#![no_main]
use ips_genealogy::genealogy::Partition;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(p) = data.parse::<Partition>() {
        let again: Partition = p.to_string().parse().unwrap();
        assert_eq!(p, again);
    }
});
