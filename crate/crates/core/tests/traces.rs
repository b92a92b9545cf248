use std::io::Write;

use lookahead_abr::traces::{
    generate_synthetic, haversine_m, ingest_csv, ingest_reader, load_trace, mean_trace, save_trace,
    temporal_mapping, time_slotting, BandwidthSample, ColumnMap, RawBandwidthLog,
    SyntheticTraceConfig,
};
use lookahead_abr::CapacityTrace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A drive around a circle of `radius_m`, one sample per second.
fn circular_log(radius_m: f64, samples: usize, seed: u64) -> RawBandwidthLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lat0, lon0) = (59.91f64, 10.75f64);
    let deg_per_m_lat = 1.0 / 111_195.0;
    let deg_per_m_lon = deg_per_m_lat / lat0.to_radians().cos();
    RawBandwidthLog {
        samples: (0..samples)
            .map(|i| {
                let t = i as f64 / samples as f64 * std::f64::consts::TAU * 0.9;
                BandwidthSample {
                    timestamp_ms: i as f64 * 1000.0,
                    latitude: Some(lat0 + radius_m * t.sin() * deg_per_m_lat),
                    longitude: Some(lon0 + radius_m * t.cos() * deg_per_m_lon),
                    bytes_received: rng.gen_range(50_000..400_000),
                }
            })
            .collect(),
    }
}

/// Cumulative bits along the route, piecewise linear between samples.
fn cumulative_bits(log: &RawBandwidthLog) -> (Vec<f64>, Vec<f64>) {
    let mut dist = vec![0.0];
    let mut bits = vec![log.samples[0].bytes_received as f64 * 8.0];
    for w in log.samples.windows(2) {
        let d = haversine_m(
            w[0].latitude.unwrap(),
            w[0].longitude.unwrap(),
            w[1].latitude.unwrap(),
            w[1].longitude.unwrap(),
        );
        dist.push(dist.last().unwrap() + d);
        bits.push(bits.last().unwrap() + w[1].bytes_received as f64 * 8.0);
    }
    (dist, bits)
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x >= *xs.last().unwrap() {
        return *ys.last().unwrap();
    }
    let i = xs.partition_point(|&v| v <= x);
    let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[test]
fn circular_drive_matches_an_independent_resampler() {
    let log = circular_log(800.0, 300, 1);
    let speed_kmph = 50.0;
    let trace = temporal_mapping(&log, speed_kmph, 1.0).unwrap();
    let (dist, bits) = cumulative_bits(&log);
    let v = speed_kmph / 3.6;
    for (k, &c) in trace.capacities().iter().enumerate() {
        let lo = if k == 0 {
            0.0
        } else {
            interpolate(&dist, &bits, k as f64 * v)
        };
        let hi = interpolate(&dist, &bits, (k + 1) as f64 * v);
        let expected = hi - lo;
        assert!(
            (c - expected).abs() <= 0.01 * expected,
            "slot {k}: {c} vs {expected}"
        );
    }
    let total: f64 = trace.capacities().iter().sum();
    assert!((total - bits.last().unwrap()).abs() < 1e-6 * total);
}

#[test]
fn doubling_speed_halves_the_window_and_keeps_the_bits() {
    let log = circular_log(1500.0, 400, 2);
    let slow = temporal_mapping(&log, 40.0, 1.0).unwrap();
    let fast = temporal_mapping(&log, 80.0, 1.0).unwrap();
    let ratio = slow.window_duration() / fast.window_duration();
    assert!(
        (ratio - 2.0).abs() < 2.0 / fast.len() as f64 + 1e-9,
        "ratio {ratio}"
    );
    assert!((slow.total_volume() - fast.total_volume()).abs() < 1e-6 * slow.total_volume());
}

#[test]
fn half_hour_log_ingests_every_byte() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut file = tempfile::NamedTempFile::new().unwrap();
    let mut checksum = 0u64;
    let mut t = 0.0f64;
    let mut rows = 0;
    while t < 30.0 * 60.0 * 1000.0 {
        let bytes: u64 = rng.gen_range(0..500_000);
        checksum += bytes;
        let lat = 59.9 + rows as f64 * 1e-4;
        writeln!(
            file,
            "{} {t} {lat:.6} 10.750000 {bytes} 1000",
            1_200_000_000 + rows
        )
        .unwrap();
        t += rng.gen_range(900.0..1100.0);
        rows += 1;
    }
    file.flush().unwrap();
    let log = ingest_csv(file.path(), &ColumnMap::hsdpa()).unwrap();
    assert_eq!(log.samples.len(), rows);
    assert_eq!(log.total_bytes(), checksum);
    assert!(log.has_coordinates());

    let by_time = time_slotting(&log, 1.0).unwrap();
    assert!((by_time.total_volume() - checksum as f64 * 8.0).abs() < 1e-3);
    assert!((1790..=1810).contains(&by_time.len()));
}

#[test]
fn named_columns_in_any_order() {
    let text = "bytes,longitude,timestamp_ms,latitude\n10,10.0,0,59.0\n20,10.001,1000,59.0\n";
    let log = ingest_reader(text.as_bytes(), &ColumnMap::named()).unwrap();
    assert_eq!(log.samples[1].bytes_received, 20);
    assert_eq!(log.samples[1].timestamp_ms, 1000.0);
    assert_eq!(log.samples[1].longitude, Some(10.001));
}

#[test]
fn mean_of_twenty_realizations_is_the_slotwise_average() {
    let traces: Vec<CapacityTrace> = (0..20)
        .map(|seed| generate_synthetic(&SyntheticTraceConfig::reference(seed)).unwrap())
        .collect();
    let mean = mean_trace(&traces).unwrap();
    for k in 0..mean.len() {
        let direct = traces.iter().map(|t| t.capacities()[k]).sum::<f64>() / 20.0;
        assert!((mean.capacities()[k] - direct).abs() <= 1e-9 * direct);
    }
}

#[test]
fn saved_traces_reload_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let trace = generate_synthetic(&SyntheticTraceConfig::reference(9))
        .unwrap()
        .with_origin(12.5);
    save_trace(&trace, &path).unwrap();
    assert_eq!(load_trace(&path).unwrap(), trace);
}
