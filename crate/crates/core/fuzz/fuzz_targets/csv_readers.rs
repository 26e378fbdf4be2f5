#![no_main]
use ips_genealogy::formats::{read_coupling_csv, read_r_curve_csv, read_report_csv};
use libfuzzer_sys::fuzz_target;

// Readers must reject malformed input with an error, never a panic.
fuzz_target!(|data: &[u8]| {
    let _ = read_r_curve_csv(data);
    let _ = read_report_csv(data);
    let _ = read_coupling_csv(data);
});
