use std::io::{Read, Write};

use super::PlantError;
use crate::cpg::GaitMode;

/// Column store of a run sampled on a uniform clock. `t` and `mode` are
/// kept apart from the numeric channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub t: Vec<f64>,
    pub mode: Vec<GaitMode>,
    names: Vec<String>,
    data: Vec<Vec<f64>>,
}

impl Trace {
    pub fn new(names: Vec<String>) -> Self {
        let data = vec![Vec::new(); names.len()];
        Self {
            t: Vec::new(),
            mode: Vec::new(),
            names,
            data,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn push(&mut self, t: f64, mode: GaitMode, row: &[f64]) {
        assert_eq!(row.len(), self.names.len(), "row width");
        self.t.push(t);
        self.mode.push(mode);
        for (c, v) in self.data.iter_mut().zip(row) {
            c.push(*v);
        }
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.data[i].as_slice())
    }

    pub fn require(&self, name: &str) -> Result<&[f64], PlantError> {
        self.column(name).ok_or_else(|| PlantError::BadTrace(format!("missing column {name}")))
    }

    /// Mean sample interval (s).
    pub fn sample_period(&self) -> Option<f64> {
        (self.t.len() >= 2).then(|| (self.t[self.t.len() - 1] - self.t[0]) / (self.t.len() - 1) as f64)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), PlantError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string(), "mode".to_string()];
        header.extend(self.names.iter().cloned());
        out.write_record(&header)?;
        let mut rec = Vec::with_capacity(header.len());
        for r in 0..self.len() {
            rec.clear();
            rec.push(format!("{:.3}", self.t[r]));
            rec.push(self.mode[r].as_str().to_string());
            rec.extend(self.data.iter().map(|c| format!("{:.6}", c[r])));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, PlantError> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if header.len() < 2 || header[0] != "t" || header[1] != "mode" {
            return Err(PlantError::BadTrace("header must start with t,mode".into()));
        }
        let mut trace = Trace::new(header[2..].to_vec());
        let mut row = vec![0.0; header.len() - 2];
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let bad = |why: String| PlantError::BadTrace(format!("row {}: {why}", i + 1));
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
            let t = num(&rec[0])?;
            let mode = match &rec[1] {
                "walking" => GaitMode::Walking,
                "swimming" => GaitMode::Swimming,
                m => return Err(bad(format!("unknown mode {m:?}"))),
            };
            for (k, v) in row.iter_mut().enumerate() {
                *v = num(&rec[k + 2])?;
            }
            trace.push(t, mode, &row);
        }
        Ok(trace)
    }
}
