use serde::{Deserialize, Serialize};

use super::crc8;
use crate::magnetics::FluxSample;
use crate::vec3::Vec3;

pub const SYNC: u8 = 0xAA;
pub const CONTROL_SYNC: u8 = 0x55;
pub const FRAME_LEN: usize = 11;
pub const CONTROL_LEN: usize = 3;
/// °C per temperature LSB.
pub const TEMPERATURE_LSB: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrameError {
    #[error("frame is {0} bytes, expected {FRAME_LEN}")]
    ShortFrame(usize),
    #[error("bad sync byte {0:#04x}")]
    BadSync(u8),
    #[error("crc mismatch: frame carries {carried:#04x}, computed {computed:#04x}")]
    BadCrc { carried: u8, computed: u8 },
    #[error("{field} = {value} does not fit a 16-bit field")]
    Overflow { field: &'static str, value: f64 },
    #[error("unknown control opcode {0:#04x}")]
    BadOpcode(u8),
}

/// Flux resolution of the wire format, mT per LSB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FluxLsb(pub f64);

impl Default for FluxLsb {
    fn default() -> Self {
        FluxLsb(1.0 / 8192.0)
    }
}

/// Sensor frame: sync, module id, flux x/y/z and temperature as
/// little-endian i16, CRC-8 over id and payload.
pub type FrameBytes = [u8; FRAME_LEN];

fn to_i16(field: &'static str, v: f64, lsb: f64, saturate: bool) -> Result<i16, FrameError> {
    let raw = (v / lsb).round();
    if raw >= i16::MIN as f64 && raw <= i16::MAX as f64 {
        Ok(raw as i16)
    } else if saturate && !raw.is_nan() {
        Ok(raw.clamp(i16::MIN as f64, i16::MAX as f64) as i16)
    } else {
        Err(FrameError::Overflow { field, value: v })
    }
}

fn encode(sample: &FluxSample, lsb: FluxLsb, saturate: bool) -> Result<FrameBytes, FrameError> {
    let fields = [
        to_i16("b_x", sample.b.x, lsb.0, saturate)?,
        to_i16("b_y", sample.b.y, lsb.0, saturate)?,
        to_i16("b_z", sample.b.z, lsb.0, saturate)?,
        to_i16("temperature", sample.temperature, TEMPERATURE_LSB, saturate)?,
    ];
    let mut f = [0u8; FRAME_LEN];
    f[0] = SYNC;
    f[1] = sample.module_id;
    for (k, v) in fields.iter().enumerate() {
        f[2 + 2 * k..4 + 2 * k].copy_from_slice(&v.to_le_bytes());
    }
    f[10] = crc8(&f[1..10]);
    Ok(f)
}

pub fn encode_frame(sample: &FluxSample, lsb: FluxLsb) -> Result<FrameBytes, FrameError> {
    encode(sample, lsb, false)
}

/// Like [`encode_frame`] but clips out-of-range fields, as the sensor
/// firmware does.
pub fn encode_frame_saturating(sample: &FluxSample, lsb: FluxLsb) -> FrameBytes {
    encode(sample, lsb, true).expect("saturating encode cannot overflow")
}

/// Validates and unpacks a frame. The wire carries no time, so the caller
/// supplies the receive `timestamp`.
pub fn decode_frame(bytes: &[u8], lsb: FluxLsb, timestamp: f64) -> Result<FluxSample, FrameError> {
    if bytes.len() < FRAME_LEN {
        return Err(FrameError::ShortFrame(bytes.len()));
    }
    if bytes[0] != SYNC {
        return Err(FrameError::BadSync(bytes[0]));
    }
    let computed = crc8(&bytes[1..10]);
    if computed != bytes[10] {
        return Err(FrameError::BadCrc {
            carried: bytes[10],
            computed,
        });
    }
    let field = |k: usize| i16::from_le_bytes([bytes[2 + 2 * k], bytes[3 + 2 * k]]) as f64;
    Ok(FluxSample {
        b: Vec3::new(field(0) * lsb.0, field(1) * lsb.0, field(2) * lsb.0),
        temperature: field(3) * TEMPERATURE_LSB,
        timestamp,
        module_id: bytes[1],
    })
}

/// Host-to-ring configuration message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum ControlOp {
    Start = 0x01,
    Reset = 0x02,
}

pub fn encode_control(op: ControlOp) -> [u8; CONTROL_LEN] {
    [CONTROL_SYNC, op as u8, crc8(&[op as u8])]
}

pub fn decode_control(bytes: &[u8]) -> Result<ControlOp, FrameError> {
    if bytes.len() < CONTROL_LEN {
        return Err(FrameError::ShortFrame(bytes.len()));
    }
    if bytes[0] != CONTROL_SYNC {
        return Err(FrameError::BadSync(bytes[0]));
    }
    let computed = crc8(&bytes[1..2]);
    if computed != bytes[2] {
        return Err(FrameError::BadCrc {
            carried: bytes[2],
            computed,
        });
    }
    match bytes[1] {
        0x01 => Ok(ControlOp::Start),
        0x02 => Ok(ControlOp::Reset),
        op => Err(FrameError::BadOpcode(op)),
    }
}
