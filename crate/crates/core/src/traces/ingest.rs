//! Drive-test bandwidth logs.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandwidthSample {
    pub timestamp_ms: f64,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
    /// Bytes received since the previous sample.
    pub bytes_received: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawBandwidthLog {
    pub samples: Vec<BandwidthSample>,
}

impl RawBandwidthLog {
    pub fn total_bytes(&self) -> u64 {
        self.samples.iter().map(|s| s.bytes_received).sum()
    }

    pub fn has_coordinates(&self) -> bool {
        self.samples
            .iter()
            .all(|s| s.latitude.is_some() && s.longitude.is_some())
    }
}

/// A column by header name or by zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl std::fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnRef::Index(i) => write!(f, "#{i}"),
            ColumnRef::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub timestamp_ms: ColumnRef,
    pub latitude: Option<ColumnRef>,
    pub longitude: Option<ColumnRef>,
    pub bytes_received: ColumnRef,
    #[serde(default = "default_delimiter")]
    pub delimiter: u8,
    #[serde(default = "default_true")]
    pub has_header: bool,
}

fn default_delimiter() -> u8 {
    b','
}

fn default_true() -> bool {
    true
}

impl ColumnMap {
    /// Headed CSV with `timestamp_ms,latitude,longitude,bytes` columns.
    pub fn named() -> Self {
        Self {
            timestamp_ms: ColumnRef::Name("timestamp_ms".into()),
            latitude: Some(ColumnRef::Name("latitude".into())),
            longitude: Some(ColumnRef::Name("longitude".into())),
            bytes_received: ColumnRef::Name("bytes".into()),
            delimiter: b',',
            has_header: true,
        }
    }

    /// Space-separated, headerless HSDPA-style logs: unix time, ms since
    /// start, latitude, longitude, bytes, ms since last sample.
    pub fn hsdpa() -> Self {
        Self {
            timestamp_ms: ColumnRef::Index(1),
            latitude: Some(ColumnRef::Index(2)),
            longitude: Some(ColumnRef::Index(3)),
            bytes_received: ColumnRef::Index(4),
            delimiter: b' ',
            has_header: false,
        }
    }
}

pub fn ingest_csv(path: &Path, columns: &ColumnMap) -> Result<RawBandwidthLog> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ingest_reader(file, columns)
}

pub fn ingest_reader<R: Read>(reader: R, columns: &ColumnMap) -> Result<RawBandwidthLog> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(columns.delimiter)
        .has_headers(columns.has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = if columns.has_header {
        Some(rdr.headers()?.clone())
    } else {
        None
    };
    let resolve = |c: &ColumnRef| -> Result<usize> {
        match (c, &headers) {
            (ColumnRef::Index(i), _) => Ok(*i),
            (ColumnRef::Name(n), Some(h)) => h
                .iter()
                .position(|x| x == n)
                .ok_or_else(|| Error::MissingColumn(n.clone())),
            (ColumnRef::Name(n), None) => Err(Error::MissingColumn(format!(
                "{n} (named column in a headerless file)"
            ))),
        }
    };
    let ts_col = resolve(&columns.timestamp_ms)?;
    let bytes_col = resolve(&columns.bytes_received)?;
    let lat_col = columns.latitude.as_ref().map(&resolve).transpose()?;
    let lon_col = columns.longitude.as_ref().map(&resolve).transpose()?;
    if let Some(h) = &headers {
        for (r, i) in [
            (&columns.timestamp_ms, ts_col),
            (&columns.bytes_received, bytes_col),
        ] {
            if i >= h.len() {
                return Err(Error::MissingColumn(r.to_string()));
            }
        }
    }

    let mut samples: Vec<BandwidthSample> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize, what: &ColumnRef| -> Result<&str> {
            record.get(i).ok_or_else(|| {
                if samples.is_empty() {
                    Error::MissingColumn(what.to_string())
                } else {
                    Error::MalformedRow {
                        line,
                        message: format!("no field for column {what}"),
                    }
                }
            })
        };
        let number = |i: usize, what: &ColumnRef| -> Result<f64> {
            let raw = field(i, what)?;
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::MalformedRow {
                    line,
                    message: format!("column {what}: `{raw}` is not a number"),
                })
        };
        let timestamp_ms = number(ts_col, &columns.timestamp_ms)?;
        let bytes_raw = field(bytes_col, &columns.bytes_received)?;
        let bytes_received = bytes_raw.parse::<u64>().map_err(|_| Error::MalformedRow {
            line,
            message: format!(
                "column {}: `{bytes_raw}` is not a byte count",
                columns.bytes_received
            ),
        })?;
        let latitude = match (lat_col, &columns.latitude) {
            (Some(i), Some(r)) => Some(number(i, r)?),
            _ => None,
        };
        let longitude = match (lon_col, &columns.longitude) {
            (Some(i), Some(r)) => Some(number(i, r)?),
            _ => None,
        };
        if latitude.is_some_and(|v| !(-90.0..=90.0).contains(&v))
            || longitude.is_some_and(|v| !(-180.0..=180.0).contains(&v))
        {
            return Err(Error::MalformedRow {
                line,
                message: "coordinates outside WGS-84 range".into(),
            });
        }
        if samples
            .last()
            .is_some_and(|p| timestamp_ms <= p.timestamp_ms)
        {
            return Err(Error::NonMonotoneTimestamp {
                line,
                timestamp: timestamp_ms,
            });
        }
        samples.push(BandwidthSample {
            timestamp_ms,
            latitude,
            longitude,
            bytes_received,
        });
    }
    Ok(RawBandwidthLog { samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows() {
        let data = "timestamp_ms,latitude,longitude,bytes\n0,59.9,10.7,100\n1000,59.9001,10.7,200\n2000,59.9002,10.7,300\n";
        let log = ingest_reader(data.as_bytes(), &ColumnMap::named()).unwrap();
        assert_eq!(log.samples.len(), 3);
        assert_eq!(log.total_bytes(), 600);
        assert!(log.has_coordinates());
    }

    #[test]
    fn duplicate_timestamp_names_the_line() {
        let data = "timestamp_ms,latitude,longitude,bytes\n0,59.9,10.7,100\n1000,59.9,10.7,1\n1000,59.9,10.7,1\n";
        match ingest_reader(data.as_bytes(), &ColumnMap::named()) {
            Err(Error::NonMonotoneTimestamp { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn distinct_errors() {
        let missing = "time,latitude,longitude,bytes\n0,1,1,1\n";
        assert!(matches!(
            ingest_reader(missing.as_bytes(), &ColumnMap::named()),
            Err(Error::MissingColumn(c)) if c == "timestamp_ms"
        ));
        let garbled = "timestamp_ms,latitude,longitude,bytes\n0,1,1,1\n5,1,1,lots\n";
        assert!(matches!(
            ingest_reader(garbled.as_bytes(), &ColumnMap::named()),
            Err(Error::MalformedRow { line: 3, .. })
        ));
        let off_globe = "timestamp_ms,latitude,longitude,bytes\n0,91,1,1\n";
        assert!(matches!(
            ingest_reader(off_globe.as_bytes(), &ColumnMap::named()),
            Err(Error::MalformedRow { .. })
        ));
        assert!(matches!(
            ingest_csv(Path::new("/nonexistent/log.csv"), &ColumnMap::named()),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn hsdpa_layout() {
        let data = "1289406399 549692 59.851754 10.781778 1052 1000\n1289406400 550692 59.851770 10.781790 48127 1000\n";
        let log = ingest_reader(data.as_bytes(), &ColumnMap::hsdpa()).unwrap();
        assert_eq!(log.samples.len(), 2);
        assert_eq!(log.samples[1].bytes_received, 48127);
        assert_eq!(log.samples[0].timestamp_ms, 549692.0);
    }
}
