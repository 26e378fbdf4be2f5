//! CSV and JSON readers and writers for every artifact the crate emits.
//!
//! Numbers are rendered with 17 significant digits. CSV files start with a
//! `# ips-genealogy <kind> schema v1` comment line; JSON documents carry a
//! `"schema"` field.

use std::io::{self, Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::counterexample::ReportRow;
use crate::coupling::MismatchRow;
use crate::error::{Error, Result};
use crate::model::RCurveRow;
use crate::simulator::{DiscreteModel, Trajectory};

pub const SCHEMA_VERSION: u32 = 1;
const WEIGHT_TOL: f64 = 1e-9;

pub const R_CURVE_HEADER: [&str; 2] = ["p_b", "R"];
pub const REPORT_HEADER: [&str; 7] = [
    "N",
    "exact",
    "pred_2_over_N",
    "scaled",
    "mc_p_hat",
    "mc_std_err",
    "R",
];
pub const COUPLING_HEADER: [&str; 5] =
    ["N", "tilde_mismatch", "tilde_se", "hat_mismatch", "hat_se"];

/// Renders `x` with 17 significant digits, in positional notation when the
/// decimal exponent lies in `-7..=16` and scientific notation otherwise.
pub fn fmt17(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').expect("exponent marker") + 1..]
        .parse()
        .expect("integer exponent");
    if (-7..=16).contains(&exp) {
        let decimals = (16 - exp) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

/// Comma-separated non-negative integers, e.g. `2,1,0`.
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::Parse("empty integer list".into()));
    }
    text.split(',')
        .map(|item| {
            let item = item.trim();
            item.parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad integer {item:?}: {e}")))
        })
        .collect()
}

fn schema_line(kind: &str) -> String {
    format!("# ips-genealogy {kind} schema v{SCHEMA_VERSION}")
}

fn schema_name(kind: &str) -> String {
    format!("ips-genealogy/{kind}/v{SCHEMA_VERSION}")
}

fn write_csv<W: Write>(
    mut out: W,
    kind: &str,
    header: &[&str],
    rows: Vec<Vec<String>>,
) -> Result<()> {
    writeln!(out, "{}", schema_line(kind))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv<R: Read>(input: R, kind: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut text = String::new();
    let mut input = input;
    input.read_to_string(&mut text)?;
    let first = text.lines().next().unwrap_or_default();
    if first.trim_end() != schema_line(kind) {
        return Err(Error::Parse(format!(
            "missing or wrong schema line, expected {:?}",
            schema_line(kind)
        )));
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let found: Vec<&str> = r.headers()?.iter().collect();
    if found != header {
        return Err(Error::Parse(format!(
            "expected header {header:?}, found {found:?}"
        )));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::Parse(format!(
                    "expected {} fields, found {}",
                    header.len(),
                    rec.len()
                )));
            }
            Ok(rec)
        })
        .collect()
}

fn field_f64(rec: &csv::StringRecord, i: usize) -> Result<f64> {
    let s = rec.get(i).unwrap_or_default().trim();
    s.parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
}

fn field_opt_f64(rec: &csv::StringRecord, i: usize) -> Result<Option<f64>> {
    if rec.get(i).unwrap_or_default().trim().is_empty() {
        Ok(None)
    } else {
        field_f64(rec, i).map(Some)
    }
}

fn field_usize(rec: &csv::StringRecord, i: usize) -> Result<usize> {
    let s = rec.get(i).unwrap_or_default().trim();
    s.parse::<usize>()
        .map_err(|e| Error::Parse(format!("bad integer {s:?}: {e}")))
}

fn opt17(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

pub fn write_r_curve_csv<W: Write>(out: W, rows: &[RCurveRow]) -> Result<()> {
    let rows = rows
        .iter()
        .map(|r| vec![fmt17(r.p_b), fmt17(r.r)])
        .collect();
    write_csv(out, "r-curve", &R_CURVE_HEADER, rows)
}

pub fn read_r_curve_csv<R: Read>(input: R) -> Result<Vec<RCurveRow>> {
    read_csv(input, "r-curve", &R_CURVE_HEADER)?
        .iter()
        .map(|rec| {
            Ok(RCurveRow {
                p_b: field_f64(rec, 0)?,
                r: field_f64(rec, 1)?,
            })
        })
        .collect()
}

pub fn write_report_csv<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.n_particles.to_string(),
                fmt17(r.exact),
                fmt17(r.pred_2_over_n),
                fmt17(r.scaled),
                opt17(r.mc_p_hat),
                opt17(r.mc_std_err),
                fmt17(r.r),
            ]
        })
        .collect();
    write_csv(out, "report", &REPORT_HEADER, rows)
}

pub fn read_report_csv<R: Read>(input: R) -> Result<Vec<ReportRow>> {
    read_csv(input, "report", &REPORT_HEADER)?
        .iter()
        .map(|rec| {
            Ok(ReportRow {
                n_particles: field_usize(rec, 0)?,
                exact: field_f64(rec, 1)?,
                pred_2_over_n: field_f64(rec, 2)?,
                scaled: field_f64(rec, 3)?,
                mc_p_hat: field_opt_f64(rec, 4)?,
                mc_std_err: field_opt_f64(rec, 5)?,
                r: field_f64(rec, 6)?,
            })
        })
        .collect()
}

pub fn write_coupling_csv<W: Write>(out: W, rows: &[MismatchRow]) -> Result<()> {
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.n_particles.to_string(),
                fmt17(r.tilde_mismatch),
                fmt17(r.tilde_se),
                fmt17(r.hat_mismatch),
                fmt17(r.hat_se),
            ]
        })
        .collect();
    write_csv(out, "coupling", &COUPLING_HEADER, rows)
}

pub fn read_coupling_csv<R: Read>(input: R) -> Result<Vec<MismatchRow>> {
    read_csv(input, "coupling", &COUPLING_HEADER)?
        .iter()
        .map(|rec| {
            Ok(MismatchRow {
                n_particles: field_usize(rec, 0)?,
                tilde_mismatch: field_f64(rec, 1)?,
                tilde_se: field_f64(rec, 2)?,
                hat_mismatch: field_f64(rec, 3)?,
                hat_se: field_f64(rec, 4)?,
            })
        })
        .collect()
}

/// Pretty JSON with floats at 17 significant digits.
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

#[derive(Serialize)]
struct StampedRef<'a, T> {
    schema: String,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Deserialize)]
struct Stamped<T> {
    schema: String,
    #[serde(flatten)]
    body: T,
}

/// Serialises `body` as a JSON object tagged with `"schema": "ips-genealogy/<kind>/v1"`.
pub fn write_json<W: Write, T: Serialize>(out: W, kind: &str, body: &T) -> Result<()> {
    let mut out = out;
    let doc = StampedRef {
        schema: schema_name(kind),
        body,
    };
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, Digits17(PrettyFormatter::new()));
    doc.serialize(&mut ser)?;
    writeln!(out)?;
    Ok(())
}

pub fn to_json_string<T: Serialize>(kind: &str, body: &T) -> Result<String> {
    let mut buf = Vec::new();
    write_json(&mut buf, kind, body)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Reads a document written by [`write_json`], checking its schema tag.
pub fn read_json<T: DeserializeOwned>(text: &str, kind: &str) -> Result<T> {
    let doc: Stamped<T> = serde_json::from_str(text)?;
    if doc.schema != schema_name(kind) {
        return Err(Error::Parse(format!(
            "schema {:?} does not match {:?}",
            doc.schema,
            schema_name(kind)
        )));
    }
    Ok(doc.body)
}

/// Parses and validates a model specification. A `"schema"` field is optional.
pub fn parse_model_json(text: &str) -> Result<DiscreteModel> {
    #[derive(Deserialize)]
    struct ModelDoc {
        schema: Option<String>,
        #[serde(flatten)]
        model: DiscreteModel,
    }
    let doc: ModelDoc = serde_json::from_str(text)?;
    if let Some(s) = doc.schema {
        if s != schema_name("model") {
            return Err(Error::Parse(format!(
                "schema {s:?} does not match {:?}",
                schema_name("model")
            )));
        }
    }
    doc.model.validate()?;
    Ok(doc.model)
}

pub fn model_to_json(model: &DiscreteModel) -> Result<String> {
    to_json_string("model", model)
}

/// On-disk trajectory layout: 1-based ancestor indices, rows by generation.
#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryDoc {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "T")]
    t: usize,
    seed: u64,
    labels: Vec<String>,
    positions: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
    ancestors: Vec<Vec<usize>>,
}

pub fn trajectory_to_json(traj: &Trajectory) -> Result<String> {
    let doc = TrajectoryDoc {
        n: traj.n_particles,
        t: traj.steps,
        seed: traj.seed,
        labels: traj.labels.clone(),
        positions: traj.positions.clone(),
        weights: traj.weights.clone(),
        ancestors: traj
            .ancestors
            .iter()
            .map(|row| row.iter().map(|&a| a + 1).collect())
            .collect(),
    };
    to_json_string("trajectory", &doc)
}

/// Parses a trajectory document and checks its shape, index ranges and
/// weight normalisation.
pub fn parse_trajectory_json(text: &str) -> Result<Trajectory> {
    let doc: TrajectoryDoc = read_json(text, "trajectory")?;
    let (n, t) = (doc.n, doc.t);
    let bad = |msg: String| Err(Error::Parse(msg));
    if n == 0 {
        return bad("N must be positive".into());
    }
    let generations = t
        .checked_add(1)
        .ok_or_else(|| Error::Parse("T too large".into()))?;
    if doc.positions.len() != generations
        || doc.weights.len() != generations
        || doc.ancestors.len() != t
    {
        return bad(format!(
            "expected {generations} generations and {t} ancestor rows"
        ));
    }
    for (g, (pos, w)) in doc.positions.iter().zip(&doc.weights).enumerate() {
        if pos.len() != n || w.len() != n {
            return bad(format!("generation {g} does not have {n} particles"));
        }
        if let Some(&x) = pos.iter().find(|&&x| x >= doc.labels.len()) {
            return bad(format!("generation {g} holds unknown state {x}"));
        }
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad(format!("generation {g} has an invalid weight"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOL {
            return bad(format!("generation {g} weights sum to {sum}"));
        }
    }
    let mut ancestors = Vec::with_capacity(t);
    for (g, row) in doc.ancestors.iter().enumerate() {
        if row.len() != n {
            return bad(format!("ancestor row {} does not have {n} entries", g + 1));
        }
        if let Some(&a) = row.iter().find(|&&a| a == 0 || a > n) {
            return bad(format!("ancestor {a} out of range 1..={n}"));
        }
        ancestors.push(row.iter().map(|&a| a - 1).collect());
    }
    Ok(Trajectory {
        n_particles: n,
        steps: t,
        seed: doc.seed,
        labels: doc.labels,
        positions: doc.positions,
        weights: doc.weights,
        ancestors,
    })
}
