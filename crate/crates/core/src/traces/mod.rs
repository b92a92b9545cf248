//! Capacity traces from synthetic draws, drive-test logs, and files.

mod ingest;
mod io;
mod mapping;
mod synthetic;

pub use ingest::{
    ingest_csv, ingest_reader, BandwidthSample, ColumnMap, ColumnRef, RawBandwidthLog,
};
pub use io::{load_trace, mean_trace, read_trace, save_trace, write_trace};
pub use mapping::{haversine_m, temporal_mapping, temporal_mapping_with_grid, time_slotting};
pub use synthetic::{generate_synthetic, SyntheticTraceConfig};
