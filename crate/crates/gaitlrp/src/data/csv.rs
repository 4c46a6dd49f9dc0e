//! CSV dataset format:
//! `subject_id,age,trial,side,component,v0,v1,...,v{L-1}` with a header row.
//! One curve per row; all six (side, component) rows of a trial must be
//! present. Curves whose length differs from the requested `T` are resampled.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::data::{resample_curve, Component, Dataset, GrfTrial, Side};
use crate::error::{Error, Result};

const HEADER_PREFIX: &str = "subject_id,age,trial,side,component";

fn parse_side(s: &str) -> Option<usize> {
    match s {
        "L" => Some(0),
        "R" => Some(1),
        _ => None,
    }
}

fn parse_component(s: &str) -> Option<usize> {
    match s {
        "AP" => Some(0),
        "ML" => Some(1),
        "V" => Some(2),
        _ => None,
    }
}

pub fn load_dataset(path: impl AsRef<Path>, target_t: usize) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or(Error::EmptyDataset)?;
    if !header.starts_with(HEADER_PREFIX) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header starting with `{HEADER_PREFIX}`"),
        });
    }

    // (subject, trial_no) -> (age, six optional curves)
    type Key = (String, u64);
    let mut pending: BTreeMap<Key, (i64, [[Option<Vec<f64>>; 3]; 2])> = BTreeMap::new();
    let mut order: Vec<Key> = Vec::new();
    let mut width: Option<usize> = None;

    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 7 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected at least 7 fields, got {}", fields.len()),
            });
        }
        match width {
            Some(w) if w != fields.len() => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("inconsistent column count: {} vs {}", fields.len(), w),
                })
            }
            None => width = Some(fields.len()),
            _ => {}
        }
        let subject = fields[0].to_string();
        let age: i64 = fields[1].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad age `{}`", fields[1]),
        })?;
        let trial_no: u64 = fields[2].parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad trial number `{}`", fields[2]),
        })?;
        let side = parse_side(fields[3]).ok_or_else(|| Error::Parse {
            line: lineno,
            msg: format!("bad side `{}` (expected L or R)", fields[3]),
        })?;
        let comp = parse_component(fields[4]).ok_or_else(|| Error::Parse {
            line: lineno,
            msg: format!("bad component `{}` (expected AP, ML or V)", fields[4]),
        })?;
        let mut curve = Vec::with_capacity(fields.len() - 5);
        for f in &fields[5..] {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad sample `{f}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("non-finite sample `{f}`"),
                });
            }
            curve.push(v);
        }
        let curve = resample_curve(&curve, target_t).map_err(|_| Error::Parse {
            line: lineno,
            msg: "curve has fewer than 2 samples".to_string(),
        })?;

        let key = (subject, trial_no);
        if !pending.contains_key(&key) {
            order.push(key.clone());
        }
        let entry = pending.entry(key).or_insert((age, Default::default()));
        if entry.0 != age {
            return Err(Error::Parse {
                line: lineno,
                msg: "age differs between rows of the same subject/trial".to_string(),
            });
        }
        if entry.1[side][comp].replace(curve).is_some() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!(
                    "duplicate row for side {} component {}",
                    fields[3], fields[4]
                ),
            });
        }
    }

    if pending.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut trials = Vec::with_capacity(order.len());
    for key in order {
        let (age, curves) = pending.remove(&key).unwrap();
        let mut out: [[Vec<f64>; 3]; 2] = Default::default();
        for s in 0..2 {
            for c in 0..3 {
                out[s][c] = curves[s][c].clone().ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: format!(
                        "trial {} of subject {} is missing a (side, component) row",
                        key.1, key.0
                    ),
                })?;
            }
        }
        trials.push(GrfTrial {
            subject_id: key.0,
            age_years: age,
            curves: out,
        });
    }
    Dataset::new(trials)
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let t = dataset.samples_per_curve();
    let mut out = String::new();
    out.push_str(HEADER_PREFIX);
    for i in 0..t {
        let _ = write!(out, ",v{i}");
    }
    out.push('\n');

    // Trial numbers restart per subject, in dataset order.
    let mut counters: BTreeMap<&str, u64> = BTreeMap::new();
    for trial in dataset.trials() {
        let n = counters.entry(trial.subject_id.as_str()).or_insert(0);
        *n += 1;
        let trial_no = *n;
        for (s, side) in [(0, Side::Left), (1, Side::Right)] {
            for (c, comp) in [(0, Component::Ap), (1, Component::Ml), (2, Component::V)] {
                let _ = write!(
                    out,
                    "{},{},{},{},{}",
                    trial.subject_id,
                    trial.age_years,
                    trial_no,
                    side.code(),
                    comp.code()
                );
                for v in &trial.curves[s][c] {
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::AgeGroup;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn small_csv(ages: &[i64]) -> String {
        let mut s = String::from("subject_id,age,trial,side,component,v0,v1,v2,v3\n");
        for (i, age) in ages.iter().enumerate() {
            for side in ["L", "R"] {
                for comp in ["AP", "ML", "V"] {
                    s.push_str(&format!("s{i},{age},1,{side},{comp},0.0,1.0,2.0,3.0\n"));
                }
            }
        }
        s
    }

    #[test]
    fn load_counts_and_labels() {
        let f = write_temp(&small_csv(&[25, 70]));
        let ds = load_dataset(f.path(), 4).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.samples_per_curve(), 4);
        assert_eq!(ds.labels(), &[AgeGroup::Young, AgeGroup::Older]);
    }

    #[test]
    fn load_resamples_to_target() {
        let f = write_temp(&small_csv(&[25]));
        let ds = load_dataset(f.path(), 7).unwrap();
        assert_eq!(ds.samples_per_curve(), 7);
        let c = ds.trials()[0].curve(Side::Left, Component::Ap);
        assert_eq!(c[0], 0.0);
        assert_eq!(c[6], 3.0);
    }

    #[test]
    fn load_rejects_nan() {
        let mut csv = small_csv(&[25]);
        csv = csv.replace("s0,25,1,L,V,0.0", "s0,25,1,L,V,NaN");
        let f = write_temp(&csv);
        let err = load_dataset(f.path(), 4).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert!(line > 1),
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_missing_row() {
        let csv = small_csv(&[25]);
        let csv: String = csv.lines().take(6).map(|l| format!("{l}\n")).collect();
        let f = write_temp(&csv);
        assert!(load_dataset(f.path(), 4).is_err());
    }

    #[test]
    fn load_rejects_empty() {
        let f = write_temp("subject_id,age,trial,side,component,v0,v1\n");
        assert!(matches!(load_dataset(f.path(), 4), Err(Error::EmptyDataset)));
    }

    #[test]
    fn roundtrip_preserves_dataset() {
        let f = write_temp(&small_csv(&[25, 45, 70]));
        let ds = load_dataset(f.path(), 4).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        save_dataset(&ds, out.path()).unwrap();
        let ds2 = load_dataset(out.path(), 4).unwrap();
        assert_eq!(ds.trials(), ds2.trials());
    }
}
