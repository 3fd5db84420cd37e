use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CalibrationError, Result, SensorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadType {
    Normal,
    Pitch,
    Yaw,
    /// Simultaneous off-centre press and twist.
    Combined,
    /// Lateral force on a fin.
    Fin,
}

impl fmt::Display for LoadType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LoadType::Normal => "normal",
            LoadType::Pitch => "pitch",
            LoadType::Yaw => "yaw",
            LoadType::Combined => "combined",
            LoadType::Fin => "fin",
        })
    }
}

impl FromStr for LoadType {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "normal" => Ok(LoadType::Normal),
            "pitch" => Ok(LoadType::Pitch),
            "yaw" => Ok(LoadType::Yaw),
            "combined" => Ok(LoadType::Combined),
            "fin" => Ok(LoadType::Fin),
            other => Err(format!("unknown load type {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub cycle_id: u32,
    pub load_type: LoadType,
    pub split: Split,
    /// Magnet location (foot) or location change (flow), mm.
    pub input: Vec<f64>,
    /// Reference loads in the order of [`SensorKind::output_names`].
    pub target: Vec<f64>,
}

/// Labelled samples for one sensor. Every cycle belongs to exactly one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDataset {
    pub kind: SensorKind,
    samples: Vec<CalibrationSample>,
}

impl CalibrationDataset {
    pub fn new(kind: SensorKind, samples: Vec<CalibrationSample>) -> Result<Self> {
        let n_out = kind.output_names().len();
        let mut roles: BTreeMap<u32, Split> = BTreeMap::new();
        let mut mixed = BTreeSet::new();
        for s in &samples {
            if s.input.len() != kind.input_len() {
                return Err(CalibrationError::Shape {
                    expected: kind.input_len(),
                    got: s.input.len(),
                });
            }
            if s.target.len() != n_out {
                return Err(CalibrationError::Shape {
                    expected: n_out,
                    got: s.target.len(),
                });
            }
            if *roles.entry(s.cycle_id).or_insert(s.split) != s.split {
                mixed.insert(s.cycle_id);
            }
        }
        if !mixed.is_empty() {
            return Err(CalibrationError::OverlappingCycles(mixed.into_iter().collect()));
        }
        Ok(Self { kind, samples })
    }

    pub fn samples(&self) -> &[CalibrationSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn cycles(&self) -> BTreeSet<u32> {
        self.samples.iter().map(|s| s.cycle_id).collect()
    }

    fn filtered(&self, split: Split) -> Self {
        Self {
            kind: self.kind,
            samples: self.samples.iter().filter(|s| s.split == split).cloned().collect(),
        }
    }

    pub fn train(&self) -> Self {
        self.filtered(Split::Train)
    }

    pub fn eval(&self) -> Self {
        self.filtered(Split::Eval)
    }

    /// Writes the dataset as CSV with a header row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["cycle_id", "load_type", "split"];
        header.extend(self.kind.input_names());
        header.extend(self.kind.output_names().iter().map(|n| match *n {
            "tau_pitch" => "ref_tau_pitch",
            "tau_yaw" => "ref_tau_yaw",
            "f_x" => "ref_f_x",
            _ => "ref_force",
        }));
        out.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![
                s.cycle_id.to_string(),
                s.load_type.to_string(),
                match s.split {
                    Split::Train => "train".to_string(),
                    Split::Eval => "eval".to_string(),
                },
            ];
            row.extend(s.input.iter().chain(&s.target).map(|v| v.to_string()));
            out.write_record(&row)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(kind: SensorKind, r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let n_in = kind.input_len();
        let n_out = kind.output_names().len();
        let mut samples = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |reason: String| CalibrationError::BadRow { row: i + 1, reason };
            if rec.len() != 3 + n_in + n_out {
                return Err(bad(format!("expected {} columns, got {}", 3 + n_in + n_out, rec.len())));
            }
            let cycle_id = rec[0].parse().map_err(|e| bad(format!("cycle_id: {e}")))?;
            let load_type = rec[1].parse().map_err(bad)?;
            let split = match &rec[2] {
                "train" => Split::Train,
                "eval" => Split::Eval,
                other => return Err(bad(format!("unknown split {other:?}"))),
            };
            let nums = rec
                .iter()
                .skip(3)
                .map(|f| f.parse::<f64>().map_err(|e| bad(format!("{f:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            samples.push(CalibrationSample {
                cycle_id,
                load_type,
                split,
                input: nums[..n_in].to_vec(),
                target: nums[n_in..].to_vec(),
            });
        }
        Self::new(kind, samples)
    }
}
