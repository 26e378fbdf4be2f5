//! Runs every checked-in fuzz seed through the same checks as the fuzz targets.

use std::fs;
use std::path::PathBuf;

use ips_genealogy::formats::{
    model_to_json, parse_model_json, parse_trajectory_json, parse_usize_list, read_coupling_csv,
    read_r_curve_csv, read_report_csv, trajectory_to_json,
};
use ips_genealogy::genealogy::Partition;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            let bytes = fs::read(&path).unwrap();
            (path, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

fn text_seeds(target: &str) -> Vec<String> {
    seeds(target)
        .into_iter()
        .filter_map(|(_, b)| String::from_utf8(b).ok())
        .collect()
}

#[test]
fn partition_seeds() {
    let mut parsed = 0;
    for s in text_seeds("partition") {
        if let Ok(p) = s.parse::<Partition>() {
            assert_eq!(p.to_string().parse::<Partition>().unwrap(), p);
            parsed += 1;
        }
    }
    assert!(parsed >= 2);
}

#[test]
fn usize_list_seeds() {
    for s in text_seeds("usize_list") {
        if let Ok(list) = parse_usize_list(&s) {
            let text = list
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",");
            assert_eq!(parse_usize_list(&text).unwrap(), list);
        }
    }
}

#[test]
fn model_json_seeds() {
    let mut parsed = 0;
    for s in text_seeds("model_json") {
        if let Ok(model) = parse_model_json(&s) {
            assert_eq!(
                parse_model_json(&model_to_json(&model).unwrap()).unwrap(),
                model
            );
            parsed += 1;
        }
    }
    assert!(parsed >= 2);
}

#[test]
fn trajectory_json_seeds() {
    let mut parsed = 0;
    for s in text_seeds("trajectory_json") {
        if let Ok(traj) = parse_trajectory_json(&s) {
            assert_eq!(
                parse_trajectory_json(&trajectory_to_json(&traj).unwrap()).unwrap(),
                traj
            );
            parsed += 1;
        }
    }
    assert!(parsed >= 2);
}

#[test]
fn csv_seeds() {
    let mut parsed = 0;
    for (_, bytes) in seeds("csv_readers") {
        parsed += usize::from(read_r_curve_csv(bytes.as_slice()).is_ok());
        parsed += usize::from(read_report_csv(bytes.as_slice()).is_ok());
        parsed += usize::from(read_coupling_csv(bytes.as_slice()).is_ok());
    }
    assert_eq!(parsed, 3);
}
