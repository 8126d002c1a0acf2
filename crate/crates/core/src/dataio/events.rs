//! EVT1 binary and CSV event files.
//!
//! EVT1 layout, all little-endian:
//!
//! | offset | size | field                      |
//! |--------|------|----------------------------|
//! | 0      | 4    | magic `EVT1`               |
//! | 4      | 2    | version (1)                |
//! | 6      | 2    | width                      |
//! | 8      | 2    | height                     |
//! | 10     | 8    | event count                |
//! | 18     | 13·n | records: t u64, x u16, y u16, p u8 (0 = negative, 1 = positive) |

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::events::{Event, EventStream};

pub const EVT1_MAGIC: &[u8; 4] = b"EVT1";
pub const EVT1_VERSION: u16 = 1;
pub const EVT1_HEADER_LEN: usize = 18;
pub const EVT1_RECORD_LEN: usize = 13;
pub const EVENTS_CSV_HEADER: &str = "t_us,x,y,p";

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Read an event file, choosing the format by extension (`.csv` or EVT1).
/// CSV carries no sensor size, so `size` is required for it; for EVT1 it
/// is checked against the header when given.
pub fn read_events(path: &Path, size: Option<(u16, u16)>) -> Result<EventStream> {
    if is_csv(path) {
        let (w, h) = size.ok_or_else(|| {
            Error::format(path, "CSV events need the sensor size (width/height)")
        })?;
        read_events_csv(path, w, h)
    } else {
        let s = read_events_evt1(path)?;
        if let Some((w, h)) = size {
            if (w, h) != (s.width(), s.height()) {
                return Err(Error::format(
                    path,
                    format!(
                        "header sensor {}x{} differs from expected {w}x{h}",
                        s.width(),
                        s.height()
                    ),
                ));
            }
        }
        Ok(s)
    }
}

pub fn write_events(path: &Path, stream: &EventStream) -> Result<()> {
    if is_csv(path) {
        write_events_csv(path, stream)
    } else {
        write_events_evt1(path, stream)
    }
}

pub fn encode_evt1(stream: &EventStream) -> Vec<u8> {
    let mut buf = Vec::with_capacity(EVT1_HEADER_LEN + EVT1_RECORD_LEN * stream.len());
    buf.extend_from_slice(EVT1_MAGIC);
    buf.extend_from_slice(&EVT1_VERSION.to_le_bytes());
    buf.extend_from_slice(&stream.width().to_le_bytes());
    buf.extend_from_slice(&stream.height().to_le_bytes());
    buf.extend_from_slice(&(stream.len() as u64).to_le_bytes());
    for e in stream.events() {
        buf.extend_from_slice(&e.t.to_le_bytes());
        buf.extend_from_slice(&e.x.to_le_bytes());
        buf.extend_from_slice(&e.y.to_le_bytes());
        buf.push(u8::from(e.p > 0));
    }
    buf
}

pub fn decode_evt1(path: &Path, bytes: &[u8]) -> Result<EventStream> {
    if bytes.len() < EVT1_HEADER_LEN {
        return Err(Error::format(
            path,
            format!("truncated header: {} of {EVT1_HEADER_LEN} bytes", bytes.len()),
        ));
    }
    if &bytes[0..4] != EVT1_MAGIC {
        return Err(Error::format(path, format!("bad magic {:?}", &bytes[0..4])));
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let version = u16_at(4);
    if version != EVT1_VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let (width, height) = (u16_at(6), u16_at(8));
    let count = u64::from_le_bytes(bytes[10..18].try_into().unwrap());
    let body = bytes.len() - EVT1_HEADER_LEN;
    let full = body / EVT1_RECORD_LEN;
    if (full as u64) < count {
        let offset = EVT1_HEADER_LEN + full * EVT1_RECORD_LEN;
        return Err(Error::format(
            path,
            format!("truncated record {full} of {count} at byte offset {offset}"),
        ));
    }
    let expected = EVT1_HEADER_LEN as u64 + count * EVT1_RECORD_LEN as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::format(
            path,
            format!("{} trailing bytes at byte offset {expected}", bytes.len() as u64 - expected),
        ));
    }
    let mut events = Vec::with_capacity(count as usize);
    for (i, rec) in bytes[EVT1_HEADER_LEN..].chunks_exact(EVT1_RECORD_LEN).enumerate() {
        let t = u64::from_le_bytes(rec[0..8].try_into().unwrap());
        let x = u16::from_le_bytes([rec[8], rec[9]]);
        let y = u16::from_le_bytes([rec[10], rec[11]]);
        let p = match rec[12] {
            0 => -1,
            1 => 1,
            other => {
                let offset = EVT1_HEADER_LEN + i * EVT1_RECORD_LEN + 12;
                return Err(Error::format(
                    path,
                    format!("invalid polarity byte {other} at byte offset {offset}"),
                ));
            }
        };
        events.push(Event::new(t, x, y, p));
    }
    EventStream::build(events, width, height).map_err(|e| Error::format(path, e.to_string()))
}

fn read_events_evt1(path: &Path) -> Result<EventStream> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_evt1(path, &bytes)
}

fn write_events_evt1(path: &Path, stream: &EventStream) -> Result<()> {
    fs::write(path, encode_evt1(stream)).map_err(|e| Error::io(path, e))
}

fn read_events_csv(path: &Path, width: u16, height: u16) -> Result<EventStream> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == EVENTS_CSV_HEADER => {}
        Some(Err(e)) => return Err(Error::io(path, e)),
        _ => {
            return Err(Error::format(
                path,
                format!("line 1: expected header {EVENTS_CSV_HEADER:?}"),
            ))
        }
    }
    let mut events = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::format(path, format!("line {lineno}: {what}: {line:?}"));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let t: u64 = fields[0].parse().map_err(|_| bad("bad t_us"))?;
        let x: u16 = fields[1].parse().map_err(|_| bad("bad x"))?;
        let y: u16 = fields[2].parse().map_err(|_| bad("bad y"))?;
        let p: i8 = match fields[3] {
            "1" | "+1" => 1,
            "-1" => -1,
            _ => return Err(bad("polarity must be -1 or 1")),
        };
        events.push(Event::new(t, x, y, p));
    }
    EventStream::build(events, width, height).map_err(|e| Error::format(path, e.to_string()))
}

fn write_events_csv(path: &Path, stream: &EventStream) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "{EVENTS_CSV_HEADER}")?;
        for e in stream.events() {
            writeln!(w, "{},{},{},{}", e.t, e.x, e.y, e.p)?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> EventStream {
        EventStream::build(
            vec![Event::new(7, 1, 2, 1), Event::new(3, 0, 0, -1), Event::new(7, 2, 0, 1)],
            3,
            3,
        )
        .unwrap()
    }

    #[test]
    fn empty_stream_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.evt");
        let s = EventStream::empty(346, 260);
        write_events(&p, &s).unwrap();
        assert_eq!(fs::metadata(&p).unwrap().len(), EVT1_HEADER_LEN as u64);
        assert_eq!(read_events(&p, None).unwrap(), s);
    }

    #[test]
    fn three_events_size_and_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.evt");
        write_events(&p, &sample()).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(bytes.len(), EVT1_HEADER_LEN + 39);
        assert_eq!(&bytes[..4], b"EVT1");
        assert_eq!(&bytes[4..10], &[1, 0, 3, 0, 3, 0]);
        assert_eq!(u64::from_le_bytes(bytes[10..18].try_into().unwrap()), 3);
        // first record: t=3, x=0, y=0, negative
        assert_eq!(&bytes[18..31], &[3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        let again = read_events(&p, Some((3, 3))).unwrap();
        assert_eq!(encode_evt1(&again), bytes);
    }

    #[test]
    fn csv_and_binary_agree() {
        let dir = tempfile::tempdir().unwrap();
        let (pb, pc) = (dir.path().join("e.evt"), dir.path().join("e.csv"));
        write_events(&pb, &sample()).unwrap();
        write_events(&pc, &sample()).unwrap();
        let text = fs::read_to_string(&pc).unwrap();
        assert!(text.starts_with("t_us,x,y,p\n3,0,0,-1\n"));
        assert_eq!(read_events(&pb, None).unwrap(), read_events(&pc, Some((3, 3))).unwrap());
        assert!(read_events(&pc, None).is_err());
    }

    #[test]
    fn corrupt_files_report_location() {
        let p = Path::new("x.evt");
        let good = encode_evt1(&sample());
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(decode_evt1(p, &bad_magic).unwrap_err().to_string().contains("magic"));
        let mut bad_version = good.clone();
        bad_version[4] = 2;
        assert!(decode_evt1(p, &bad_version).unwrap_err().to_string().contains("version"));
        let truncated = &good[..good.len() - 5];
        let msg = decode_evt1(p, truncated).unwrap_err().to_string();
        assert!(msg.contains("byte offset 44"), "{msg}");
        let msg = decode_evt1(p, &good[..10]).unwrap_err().to_string();
        assert!(msg.contains("truncated header"), "{msg}");
        let mut bad_pol = good.clone();
        bad_pol[18 + 12] = 7;
        assert!(decode_evt1(p, &bad_pol).unwrap_err().to_string().contains("offset 30"));
        let mut out_of_bounds = good;
        out_of_bounds[18 + 8] = 9;
        assert!(matches!(decode_evt1(p, &out_of_bounds), Err(Error::Format { .. })));
    }

    #[test]
    fn csv_errors_name_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "t_us,x,y,p\n1,0,0,1\n2,0,0,0\n").unwrap();
        let msg = read_events(&p, Some((1, 1))).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
        fs::write(&p, "t,x,y,p\n").unwrap();
        assert!(read_events(&p, Some((1, 1))).is_err());
    }

    proptest! {
        #[test]
        fn evt1_round_trip(raw in prop::collection::vec((0u64..u64::MAX, 0u16..50, 0u16..40, prop::bool::ANY), 0..50)) {
            let events = raw.into_iter().map(|(t, x, y, p)| Event::new(t, x, y, if p { 1 } else { -1 })).collect();
            let s = EventStream::build(events, 50, 40).unwrap();
            let bytes = encode_evt1(&s);
            let back = decode_evt1(Path::new("mem"), &bytes).unwrap();
            prop_assert_eq!(encode_evt1(&back), bytes);
            prop_assert_eq!(back, s);
        }
    }
}
