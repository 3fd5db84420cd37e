use std::io::{self, Read, Write};

use super::frame::{FrameBytes, FRAME_LEN};
use super::Nanos;

/// One frame on the wire, stamped with its end time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub t: Nanos,
    pub bytes: FrameBytes,
    pub valid: bool,
}

const RECORD_LEN: usize = 8 + FRAME_LEN;

/// Binary log: per frame, the u64 little-endian end time in ns followed by
/// the 11 wire bytes.
pub fn write_binary<W: Write>(records: &[TraceRecord], mut w: W) -> io::Result<()> {
    for r in records {
        w.write_all(&r.t.0.to_le_bytes())?;
        w.write_all(&r.bytes)?;
    }
    w.flush()
}

/// Reads a binary log back. Validity is recomputed from the bytes.
pub fn read_binary<R: Read>(mut r: R) -> io::Result<Vec<TraceRecord>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() % RECORD_LEN != 0 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "truncated frame log"));
    }
    Ok(buf
        .chunks_exact(RECORD_LEN)
        .map(|c| {
            let t = Nanos(u64::from_le_bytes(c[..8].try_into().expect("8 bytes")));
            let bytes: FrameBytes = c[8..].try_into().expect("frame bytes");
            let valid = super::frame::decode_frame(&bytes, Default::default(), 0.0).is_ok();
            TraceRecord { t, bytes, valid }
        })
        .collect())
}

/// Human-readable log: `t_ns,module_id,valid,bytes` with the frame in hex.
pub fn write_csv<W: Write>(records: &[TraceRecord], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t_ns", "module_id", "valid", "bytes"])?;
    for r in records {
        let hex: String = r.bytes.iter().map(|b| format!("{b:02x}")).collect();
        out.write_record([r.t.0.to_string(), r.bytes[1].to_string(), r.valid.to_string(), hex])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_and_csv_logs() {
        let frames = {
            let mut sim = super::super::RingSim::new(3, Default::default(), Default::default(), &Default::default())
                .unwrap()
                .with_trace();
            let mut src = |id: u8, t: f64| crate::magnetics::FluxSample {
                b: crate::Vec3::new(0.1, -0.1, 0.2),
                temperature: 21.0,
                timestamp: t,
                module_id: id,
            };
            sim.run_until(Nanos(2_000_000), &mut src, &mut |_| {});
            sim.trace().to_vec()
        };
        assert!(frames.len() > 10);
        let mut bin = Vec::new();
        write_binary(&frames, &mut bin).unwrap();
        assert_eq!(bin.len(), frames.len() * 19);
        assert_eq!(read_binary(bin.as_slice()).unwrap(), frames);
        let mut text = Vec::new();
        write_csv(&frames, &mut text).unwrap();
        let text = String::from_utf8(text).unwrap();
        assert_eq!(text.lines().count(), frames.len() + 1);
        let first = text.lines().nth(1).unwrap();
        assert!(first.starts_with(&format!("{},0,true,aa00", frames[0].t.0)), "{first}");
    }
}
