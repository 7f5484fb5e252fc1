//! GRIDTS container.
//!
//! Layout (little-endian):
//!
//! | field        | type                          |
//! |--------------|-------------------------------|
//! | magic        | `b"GTS1"`                     |
//! | variable     | `u32` length + UTF-8 bytes    |
//! | I, J, T      | `u32` each                    |
//! | dates        | `T × i64` days since 1970-01-01 |
//! | values       | `T·I·J × f64`, row-major `[T, I, J]` |
//! | crc          | `u32` CRC-32 of every byte between magic and crc |

use std::path::Path;

use super::series::{date_from_days, days_since_epoch, GridSeries};
use crate::binio::{Reader, Writer};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GTS1";

pub fn encode(series: &GridSeries) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(MAGIC);
    w.str(series.variable());
    w.u32(series.lat() as u32);
    w.u32(series.lon() as u32);
    w.u32(series.len() as u32);
    for d in series.times() {
        w.i64(days_since_epoch(*d));
    }
    w.f64s(series.values());
    w.finish_with_crc(MAGIC.len())
}

pub fn decode(bytes: &[u8]) -> Result<GridSeries> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC)?;
    let variable = r.str("variable id")?;
    let lat = r.u32("lat count")? as usize;
    let lon = r.u32("lon count")? as usize;
    let t = r.u32("time count")? as usize;
    let mut times = Vec::with_capacity(t);
    for _ in 0..t {
        let at = r.offset();
        let days = r.i64("date")?;
        times.push(date_from_days(days).ok_or_else(|| Error::format(at, format!("date {days} out of range")))?);
    }
    let n = t
        .checked_mul(lat)
        .and_then(|v| v.checked_mul(lon))
        .ok_or_else(|| Error::format(r.offset(), "payload size overflows"))?;
    let at = r.offset();
    let values = r.f64s(n, "values")?;
    r.finish_with_crc(MAGIC.len())?;
    GridSeries::new(variable, times, lat, lon, values).map_err(|e| Error::format(at, e))
}

pub fn write_gridts(series: &GridSeries, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode(series))?;
    Ok(())
}

pub fn read_gridts(path: impl AsRef<Path>) -> Result<GridSeries> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn sample() -> GridSeries {
        let times = vec![
            NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(2001, 1, 2).unwrap(),
        ];
        let values = vec![1.5, -0.0, f64::MIN_POSITIVE, 1e300, 3.0, 4.0, 5.0, -6.25];
        GridSeries::new("T2m", times, 2, 2, values).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample();
        let back = decode(&encode(&s)).unwrap();
        assert_eq!(back.times(), s.times());
        assert_eq!(back.variable(), "T2m");
        for (a, b) in back.values().iter().zip(s.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let mut bytes = encode(&sample());
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode(&sample());
        let cut = &bytes[..bytes.len() - 20];
        match decode(cut) {
            Err(Error::Format { offset, .. }) => assert!(offset > 0),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_payload_fails_crc() {
        let mut bytes = encode(&sample());
        let k = bytes.len() - 10;
        bytes[k] ^= 0x40;
        match decode(&bytes) {
            Err(Error::Format { message, .. }) => assert!(message.contains("CRC")),
            other => panic!("expected CRC error, got {other:?}"),
        }
    }
}
