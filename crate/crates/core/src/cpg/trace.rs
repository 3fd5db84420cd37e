use std::io::Write;

use super::{GaitMode, JOINTS};

/// CSV writer for joint-target traces: `t, j0..j15, drive, mode`.
pub struct JointTraceWriter<W: Write> {
    out: csv::Writer<W>,
}

impl<W: Write> JointTraceWriter<W> {
    pub fn new(w: W) -> csv::Result<Self> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((0..JOINTS).map(|k| format!("j{k}")));
        header.push("drive".into());
        header.push("mode".into());
        out.write_record(&header)?;
        Ok(Self { out })
    }

    pub fn write(&mut self, t: f64, angles: &[f64; JOINTS], drive: f64, mode: GaitMode) -> csv::Result<()> {
        let mut row = Vec::with_capacity(JOINTS + 3);
        row.push(t.to_string());
        row.extend(angles.iter().map(|a| a.to_string()));
        row.push(drive.to_string());
        row.push(mode.as_str().to_string());
        self.out.write_record(&row)
    }

    pub fn finish(mut self) -> csv::Result<W> {
        self.out.flush()?;
        self.out.into_inner().map_err(|e| csv::Error::from(e.into_error()))
    }
}
