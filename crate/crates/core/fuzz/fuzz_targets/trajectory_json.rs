#![no_main]
use ips_genealogy::formats::{parse_trajectory_json, trajectory_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(traj) = parse_trajectory_json(data) {
        let again = parse_trajectory_json(&trajectory_to_json(&traj).unwrap()).unwrap();
        assert_eq!(traj, again);
    }
});
