//! Modbus-RTU framing for motor speed commands and encoder reads, plus
//! an emulated servo-drive endpoint.
//!
//! Wire format: `[unit address][function][payload...][crc lo][crc hi]`
//! with CRC-16/MODBUS over everything before the CRC. Supported
//! functions: 0x06 (write single register) and 0x03 (read holding
//! registers). The register map is:
//!
//! | register        | meaning                | encoding                      |
//! |-----------------|------------------------|-------------------------------|
//! | 0x0000          | target speed           | i16, units of 0.1 rpm         |
//! | 0x0002          | acceleration limit     | u16, units of 10 (r/min)/s    |
//! | 0x0010..0x0011  | cumulative revolutions | i32, big-endian pair, 1/1000 rev |
//!
//! The drive applies a write on receipt and answers reads from the
//! motor's current encoder count, quantized to the register resolution.

use thiserror::Error;

use crate::kinematics::RigConfig;

/// Write single register.
pub const FN_WRITE_SINGLE: u8 = 0x06;
/// Read holding registers.
pub const FN_READ_HOLDING: u8 = 0x03;
/// Exception-response flagOR'd onto the request function code.
pub const EXCEPTION_FLAG: u8 = 0x80;

/// Target speed register, signed, 0.1 rpm per count.
pub const REG_TARGET_SPEED: u16 = 0x0000;
/// Acceleration limit register, unsigned, 10 (r/min)/s per count.
pub const REG_ACCEL_LIMIT: u16 = 0x0002;
/// First register of the revolution counter pair, 1/1000 rev per count.
pub const REG_REVOLUTIONS: u16 = 0x0010;

/// Modbus exception codes used by the emulator.
pub const EXC_ILLEGAL_FUNCTION: u8 = 0x01;
pub const EXC_ILLEGAL_ADDRESS: u8 = 0x02;
pub const EXC_ILLEGAL_VALUE: u8 = 0x03;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("truncated frame")]
    Truncated,
    #[error("crc mismatch")]
    CrcMismatch,
    #[error("unknown function 0x{0:02x}")]
    UnknownFunction(u8),
}

/// A decoded Modbus-RTU frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ModbusFrame {
    pub unit: u8,
    pub function: u8,
    pub payload: Vec<u8>,
}

impl ModbusFrame {
    pub fn new(unit: u8, function: u8, payload: Vec<u8>) -> Self {
        ModbusFrame { unit, function, payload }
    }

    /// Request: read `count` holding registers starting at `start`.
    pub fn read_holding(unit: u8, start: u16, count: u16) -> Self {
        let mut payload = Vec::with_capacity(4);
        payload.extend_from_slice(&start.to_be_bytes());
        payload.extend_from_slice(&count.to_be_bytes());
        ModbusFrame::new(unit, FN_READ_HOLDING, payload)
    }

    /// Request: write one holding register.
    pub fn write_single(unit: u8, register: u16, value: u16) -> Self {
        let mut payload = Vec::with_capacity(4);
        payload.extend_from_slice(&register.to_be_bytes());
        payload.extend_from_slice(&value.to_be_bytes());
        ModbusFrame::new(unit, FN_WRITE_SINGLE, payload)
    }
}

/// CRC-16/MODBUS: reflected polynomial 0xA001, init 0xFFFF, no final
/// xor. The two CRC bytes go on the wire little-endian, which makes the
/// whole-frame residue 0x0000.
pub fn crc16_modbus(data: &[u8]) -> u16 {
    let mut crc: u16 = 0xFFFF;
    for &byte in data {
        crc ^= byte as u16;
        for _ in 0..8 {
            if crc & 1 != 0 {
                crc = (crc >> 1) ^ 0xA001;
            } else {
                crc >>= 1;
            }
        }
    }
    crc
}

/// Serializes a frame: address, function, payload, CRC little-endian.
pub fn encode_frame(unit: u8, function: u8, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(payload.len() + 4);
    out.push(unit);
    out.push(function);
    out.extend_from_slice(payload);
    let crc = crc16_modbus(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Parses and validates a frame. Rejects short frames, bad CRCs, and
/// function codes outside the supported set (exception responses for the
/// supported functions decode fine).
pub fn decode_frame(bytes: &[u8]) -> Result<ModbusFrame, FrameError> {
    if bytes.len() < 4 {
        return Err(FrameError::Truncated);
    }
    let body = &bytes[..bytes.len() - 2];
    let wire_crc = u16::from_le_bytes([bytes[bytes.len() - 2], bytes[bytes.len() - 1]]);
    if crc16_modbus(body) != wire_crc {
        return Err(FrameError::CrcMismatch);
    }
    let function = body[1];
    match function & !EXCEPTION_FLAG {
        FN_READ_HOLDING | FN_WRITE_SINGLE => {}
        _ => return Err(FrameError::UnknownFunction(function)),
    }
    Ok(ModbusFrame::new(body[0], function, body[2..].to_vec()))
}

/// Speed in rad/s (shaft) → register counts of 0.1 rpm, two's complement.
pub fn encode_speed(shaft_rad_s: f64) -> u16 {
    let tenth_rpm = (shaft_rad_s * 60.0 / std::f64::consts::TAU * 10.0).round();
    (tenth_rpm.clamp(i16::MIN as f64, i16::MAX as f64) as i16) as u16
}

/// Register counts of 0.1 rpm → shaft rad/s.
pub fn decode_speed(raw: u16) -> f64 {
    (raw as i16) as f64 * 0.1 * std::f64::consts::TAU / 60.0
}

/// Surface acceleration limit m/s² → register counts of 10 (r/min)/s.
pub fn encode_accel_limit(surface: f64, cfg: &RigConfig) -> u16 {
    let rpm_per_s = surface / cfg.roller_radius() * cfg.lambda * 60.0 / std::f64::consts::TAU;
    (rpm_per_s / 10.0).round().clamp(0.0, u16::MAX as f64) as u16
}

/// Register counts of 10 (r/min)/s → shaft rad/s².
pub fn decode_accel_limit_shaft(raw: u16) -> f64 {
    raw as f64 * 10.0 * std::f64::consts::TAU / 60.0
}

/// Revolutions → register pair counts (1/1000 rev), and back.
pub fn encode_revolutions(revs: f64) -> i32 {
    (revs * 1000.0).round().clamp(i32::MIN as f64, i32::MAX as f64) as i32
}

pub fn decode_revolutions(raw: i32) -> f64 {
    raw as f64 / 1000.0
}

/// Drive-side register file.
#[derive(Debug, Clone, Copy, Default)]
pub struct DriveRegisters {
    pub target_speed: u16,
    pub accel_limit: u16,
}

/// One emulated servo drive on the bus.
#[derive(Debug, Clone)]
pub struct DriveEmulator {
    pub unit: u8,
    pub registers: DriveRegisters,
}

impl DriveEmulator {
    pub fn new(unit: u8) -> Self {
        DriveEmulator { unit, registers: DriveRegisters::default() }
    }

    /// Commanded shaft speed decoded from the target register, rad/s.
    pub fn commanded_shaft_speed(&self) -> f64 {
        decode_speed(self.registers.target_speed)
    }

    /// Acceleration limit decoded from its register, shaft rad/s².
    pub fn accel_limit_shaft(&self) -> f64 {
        decode_accel_limit_shaft(self.registers.accel_limit)
    }

    /// Processes one request against this drive. `encoder_revs` is the
    /// motor's cumulative encoder count at the time the request is
    /// served. Returns the encoded response, or `None` when the frame is
    /// not addressed to this unit or fails validation (bus silence).
    pub fn handle(&mut self, request: &[u8], encoder_revs: f64) -> Option<Vec<u8>> {
        let frame = decode_frame(request).ok()?;
        if frame.unit != self.unit {
            return None;
        }
        Some(match frame.function {
            FN_WRITE_SINGLE => self.handle_write(&frame),
            FN_READ_HOLDING => self.handle_read(&frame, encoder_revs),
            other => exception(self.unit, other, EXC_ILLEGAL_FUNCTION),
        })
    }

    fn handle_write(&mut self, frame: &ModbusFrame) -> Vec<u8> {
        if frame.payload.len() != 4 {
            return exception(self.unit, frame.function, EXC_ILLEGAL_VALUE);
        }
        let register = u16::from_be_bytes([frame.payload[0], frame.payload[1]]);
        let value = u16::from_be_bytes([frame.payload[2], frame.payload[3]]);
        match register {
            REG_TARGET_SPEED => self.registers.target_speed = value,
            REG_ACCEL_LIMIT => self.registers.accel_limit = value,
            _ => return exception(self.unit, frame.function, EXC_ILLEGAL_ADDRESS),
        }
        // Write-single echoes the request.
        encode_frame(self.unit, frame.function, &frame.payload)
    }

    fn handle_read(&self, frame: &ModbusFrame, encoder_revs: f64) -> Vec<u8> {
        if frame.payload.len() != 4 {
            return exception(self.unit, frame.function, EXC_ILLEGAL_VALUE);
        }
        let start = u16::from_be_bytes([frame.payload[0], frame.payload[1]]);
        let count = u16::from_be_bytes([frame.payload[2], frame.payload[3]]);
        let words: Vec<u16> = match (start, count) {
            (REG_REVOLUTIONS, 2) => {
                let raw = encode_revolutions(encoder_revs);
                let bytes = raw.to_be_bytes();
                vec![
                    u16::from_be_bytes([bytes[0], bytes[1]]),
                    u16::from_be_bytes([bytes[2], bytes[3]]),
                ]
            }
            (REG_TARGET_SPEED, 1) => vec![self.registers.target_speed],
            (REG_ACCEL_LIMIT, 1) => vec![self.registers.accel_limit],
            _ => return exception(self.unit, frame.function, EXC_ILLEGAL_ADDRESS),
        };
        let mut payload = Vec::with_capacity(1 + 2 * words.len());
        payload.push((2 * words.len()) as u8);
        for w in words {
            payload.extend_from_slice(&w.to_be_bytes());
        }
        encode_frame(self.unit, frame.function, &payload)
    }
}

fn exception(unit: u8, function: u8, code: u8) -> Vec<u8> {
    encode_frame(unit, function | EXCEPTION_FLAG, &[code])
}

/// Parses the register pair out of a read-revolutions response.
pub fn parse_revolutions_response(bytes: &[u8]) -> Result<f64, FrameError> {
    let frame = decode_frame(bytes)?;
    if frame.function != FN_READ_HOLDING || frame.payload.len() != 5 || frame.payload[0] != 4 {
        return Err(FrameError::UnknownFunction(frame.function));
    }
    let raw = i32::from_be_bytes([
        frame.payload[1],
        frame.payload[2],
        frame.payload[3],
        frame.payload[4],
    ]);
    Ok(decode_revolutions(raw))
}

/// One request/response transaction timed on the bus: serves the request
/// against the drive at `t_request` and reports the response delivery at
/// `t_request + t_ovf`.
pub fn drive_emulator_step(
    request: &[u8],
    drive: &mut DriveEmulator,
    encoder_revs: f64,
    t_request: f64,
    t_ovf: f64,
) -> Option<(Vec<u8>, f64)> {
    drive.handle(request, encoder_revs).map(|resp| (resp, t_request + t_ovf))
}
