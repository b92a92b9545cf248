//! Trace files and trace averaging.
//!
//! File layout:
//!
//! ```text
//! # slot_duration_s=1 origin_time_s=0
//! slot_index,capacity_bps
//! 0,2000000
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::CapacityTrace;

/// Floats are written in shortest round-trip form, so reading the file back
/// gives the identical trace.
pub fn write_trace<W: Write>(trace: &CapacityTrace, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# slot_duration_s={} origin_time_s={}",
        trace.slot_duration(),
        trace.origin_time()
    )
    .map_err(|source| Error::Io {
        path: "<writer>".into(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot_index", "capacity_bps"])?;
    for (k, c) in trace.capacities().iter().enumerate() {
        w.write_record([k.to_string(), c.to_string()])?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<CapacityTrace> {
    let mut input = BufReader::new(input);
    let mut first = String::new();
    input.read_line(&mut first).map_err(|source| Error::Io {
        path: "<reader>".into(),
        source,
    })?;
    let header = first
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::MalformedRow {
            line: 1,
            message: "expected `# slot_duration_s=...` header".into(),
        })?;
    let mut slot_duration = None;
    let mut origin = 0.0;
    for pair in header.split_whitespace() {
        let (key, value) = pair.split_once('=').ok_or_else(|| Error::MalformedRow {
            line: 1,
            message: format!("`{pair}` is not key=value"),
        })?;
        let value: f64 = value.parse().map_err(|_| Error::MalformedRow {
            line: 1,
            message: format!("`{value}` is not a number"),
        })?;
        match key {
            "slot_duration_s" => slot_duration = Some(value),
            "origin_time_s" => origin = value,
            _ => {}
        }
    }
    let slot_duration =
        slot_duration.ok_or_else(|| Error::MissingColumn("slot_duration_s".into()))?;

    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))
    };
    let (index_col, cap_col) = (col("slot_index")?, col("capacity_bps")?);
    let mut capacities = Vec::new();
    for record in rdr.records() {
        let record = record?;
        // the metadata line is not counted by the csv reader
        let line = record.position().map_or(0, |p| p.line() + 1);
        let bad = |message: String| Error::MalformedRow { line, message };
        let index: usize = record
            .get(index_col)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("slot_index is not an integer".into()))?;
        if index != capacities.len() {
            return Err(bad(format!(
                "expected slot {}, found {index}",
                capacities.len()
            )));
        }
        let capacity: f64 = record
            .get(cap_col)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("capacity_bps is not a number".into()))?;
        capacities.push(capacity);
    }
    Ok(CapacityTrace::new(slot_duration, capacities)?.with_origin(origin))
}

pub fn save_trace(trace: &CapacityTrace, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_trace(trace, file)
}

pub fn load_trace(path: &Path) -> Result<CapacityTrace> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_trace(file)
}

/// Per-slot arithmetic mean of equally slotted traces.
pub fn mean_trace(traces: &[CapacityTrace]) -> Result<CapacityTrace> {
    let Some(first) = traces.first() else {
        return Err(Error::InvalidArgument("no traces to average".into()));
    };
    for (i, t) in traces.iter().enumerate().skip(1) {
        if t.slot_duration() != first.slot_duration() || t.len() != first.len() {
            return Err(Error::MismatchedSlotting(format!(
                "trace {i} has {} slots of {} s, trace 0 has {} slots of {} s",
                t.len(),
                t.slot_duration(),
                first.len(),
                first.slot_duration()
            )));
        }
    }
    let n = traces.len() as f64;
    let capacities = (0..first.len())
        .map(|k| traces.iter().map(|t| t.capacities()[k]).sum::<f64>() / n)
        .collect();
    Ok(CapacityTrace::new(first.slot_duration(), capacities)?.with_origin(first.origin_time()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let trace = CapacityTrace::new(0.1, vec![0.1 + 0.2, 1e-7, 2_000_000.123456789, 1.0 / 3.0])
            .unwrap()
            .with_origin(12.5);
        let mut buf = Vec::new();
        write_trace(&trace, &mut buf).unwrap();
        let back = read_trace(buf.as_slice()).unwrap();
        assert_eq!(back, trace);
        for (a, b) in back.capacities().iter().zip(trace.capacities()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_gaps_and_missing_header() {
        let gap = "# slot_duration_s=1\nslot_index,capacity_bps\n0,1\n2,1\n";
        assert!(matches!(
            read_trace(gap.as_bytes()),
            Err(Error::MalformedRow { line: 4, .. })
        ));
        let bare = "slot_index,capacity_bps\n0,1\n";
        assert!(matches!(
            read_trace(bare.as_bytes()),
            Err(Error::MalformedRow { line: 1, .. })
        ));
    }

    #[test]
    fn mean_of_two() {
        let a = CapacityTrace::new(1.0, vec![1.0, 3.0]).unwrap();
        let b = CapacityTrace::new(1.0, vec![3.0, 1.0]).unwrap();
        assert_eq!(
            mean_trace(&[a.clone(), b]).unwrap().capacities(),
            &[2.0, 2.0]
        );
        assert_eq!(mean_trace(&[a.clone(), a.clone()]).unwrap(), a);
        let c = CapacityTrace::new(0.5, vec![1.0, 3.0]).unwrap();
        assert!(matches!(
            mean_trace(&[a, c]),
            Err(Error::MismatchedSlotting(_))
        ));
    }
}
