//! Seeded runs and parameter sweeps.
//!
//! Sample `i` of a run always uses random stream `i` of the run's seed and
//! samples are reduced in fixed-size chunks merged in index order, so the
//! statistics are the same for any number of worker threads.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keyrate::{Moments, RunStatistics};
use crate::noise::{output_state, qber, MemoryModel};
use crate::protocol::{self, PatchMode, Protocol, ProtocolConfig, SampleOutcome, SamplerParams};

const CHUNK: u64 = 1024;

/// Runs `f` on every sample index and reduces the results in index order.
fn reduce_samples<F>(samples: u64, f: F) -> Result<Moments>
where
    F: Fn(u64) -> Result<[f64; 3]> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let x = f(i).map_err(|e| Error::Sample {
                    index: i,
                    source: Box::new(e),
                })?;
                m.push(x);
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let mut total = Moments::default();
    for m in &partial {
        total.merge(m);
    }
    Ok(total)
}

/// `(rounds, e_x, e_z)` of one protocol run.
pub fn evaluate(outcome: &SampleOutcome, memory: &MemoryModel) -> Result<[f64; 3]> {
    let state = output_state(&outcome.trace, &outcome.ledger, memory)?;
    let (e_x, e_z) = qber(&state);
    Ok([outcome.rounds as f64, e_x, e_z])
}

pub fn run_moments(cfg: &ProtocolConfig) -> Result<Moments> {
    let params = cfg.sampler_params()?;
    let memory = cfg.memory_model()?;
    let segments = cfg.segments();
    reduce_samples(cfg.samples, |i| {
        let outcome = protocol::sample(cfg.protocol, segments, &params, cfg.seed, i)?;
        evaluate(&outcome, &memory)
    })
}

/// Samples the configured protocol and aggregates waiting times, QBERs and
/// key rates.
pub fn run(cfg: &ProtocolConfig) -> Result<RunStatistics> {
    RunStatistics::from_moments(&run_moments(cfg)?, cfg.segment_length_km())
}

/// Waiting-time mean and standard error only (no noise evaluation).
pub fn waiting_time(
    protocol: Protocol,
    segments: u32,
    params: &SamplerParams,
    samples: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    let m = reduce_samples(samples, |i| {
        let outcome = protocol::sample(protocol, segments, params, seed, i)?;
        Ok([outcome.rounds as f64, 0.0, 0.0])
    })?;
    Ok((m.mean[0], m.standard_errors()[0]))
}

/// Waiting times of samples `0..samples`, in index order.
pub fn sample_rounds(
    protocol: Protocol,
    segments: u32,
    params: &SamplerParams,
    samples: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    (0..samples)
        .into_par_iter()
        .map(|i| protocol::sample(protocol, segments, params, seed, i).map(|o| o.rounds))
        .collect()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    TotalDistance,
    DephasingTime,
    MergeProbability,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::TotalDistance => "total_distance",
            SweepAxis::DephasingTime => "dephasing_time",
            SweepAxis::MergeProbability => "merge_probability",
        }
    }

    fn apply(self, cfg: &mut ProtocolConfig, value: f64) {
        match self {
            SweepAxis::TotalDistance => {
                cfg.total_distance_km = Some(value);
                cfg.segment_length_km = None;
            }
            SweepAxis::DephasingTime => cfg.dephasing_time_s = value,
            SweepAxis::MergeProbability => cfg.merge_probability = value,
        }
    }
}

/// Growth limit and patch mode of one merging-based series.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub growth_limit: u32,
    pub patching: PatchMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub fixed: ProtocolConfig,
    pub protocols: Vec<Protocol>,
    /// Merging-based series; defaults to the fixed config's own settings.
    #[serde(default)]
    pub variants: Vec<Variant>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::param("values", "at least one value is required"));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("values", "must be strictly increasing"));
        }
        if self.protocols.is_empty() {
            return Err(Error::param("protocols", "at least one protocol is required"));
        }
        Ok(())
    }

    /// Every point of the sweep with its fully resolved configuration.
    pub fn points(&self) -> Result<Vec<(f64, ProtocolConfig)>> {
        self.validate()?;
        let variants = if self.variants.is_empty() {
            vec![Variant {
                growth_limit: self.fixed.growth_limit,
                patching: self.fixed.patching,
            }]
        } else {
            self.variants.clone()
        };
        let mut points = Vec::new();
        for &value in &self.values {
            for &protocol in &self.protocols {
                let series: &[Variant] = if protocol == Protocol::Mb {
                    &variants
                } else {
                    &variants[..1]
                };
                for v in series {
                    let mut cfg = self.fixed.clone();
                    cfg.protocol = protocol;
                    cfg.growth_limit = v.growth_limit;
                    cfg.patching = v.patching;
                    self.axis.apply(&mut cfg, value);
                    cfg.validate()?;
                    points.push((value, cfg));
                }
            }
        }
        Ok(points)
    }
}

/// One CSV row: the resolved parameters of a point and its statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub axis_value: f64,
    pub protocol: String,
    pub k: u32,
    #[serde(rename = "L_T")]
    pub total_distance_km: f64,
    #[serde(rename = "L0")]
    pub segment_length_km: f64,
    pub p: f64,
    pub p_gen: f64,
    #[serde(rename = "T")]
    pub dephasing_time_s: f64,
    /// `na` for the swapping-based protocol.
    pub g_l: String,
    pub patch_mode: String,
    pub mean_rounds: f64,
    #[serde(rename = "SE_rounds")]
    pub se_rounds: f64,
    pub e_x: f64,
    #[serde(rename = "SE_e_x")]
    pub se_e_x: f64,
    pub e_z: f64,
    #[serde(rename = "SE_e_z")]
    pub se_e_z: f64,
    #[serde(rename = "R")]
    pub raw_rate: f64,
    pub r: f64,
    #[serde(rename = "S")]
    pub secret_key_rate: f64,
    #[serde(rename = "SE_S_estimate")]
    pub se_secret_key_rate: f64,
    pub samples: u64,
    pub seed: u64,
}

impl SweepRow {
    pub fn new(axis: &str, axis_value: f64, cfg: &ProtocolConfig, stats: &RunStatistics) -> Self {
        let (g_l, patch_mode) = match cfg.protocol {
            Protocol::Mb => (cfg.growth_limit.to_string(), cfg.patching.as_str().to_owned()),
            Protocol::Sb => ("na".to_owned(), "na".to_owned()),
        };
        SweepRow {
            axis: axis.to_owned(),
            axis_value,
            protocol: cfg.protocol.as_str().to_owned(),
            k: cfg.levels,
            total_distance_km: cfg.total_distance_km(),
            segment_length_km: cfg.segment_length_km(),
            p: cfg.merge_probability,
            p_gen: cfg.generation_probability(),
            dephasing_time_s: cfg.dephasing_time_s,
            g_l,
            patch_mode,
            mean_rounds: stats.mean_rounds,
            se_rounds: stats.se_rounds,
            e_x: stats.mean_e_x,
            se_e_x: stats.se_e_x,
            e_z: stats.mean_e_z,
            se_e_z: stats.se_e_z,
            raw_rate: stats.raw_rate,
            r: stats.secret_key_fraction,
            secret_key_rate: stats.secret_key_rate,
            se_secret_key_rate: stats.se_secret_key_rate,
            samples: stats.samples,
            seed: cfg.seed,
        }
    }
}

/// Runs every point of a sweep. `progress` is called after each point.
pub fn sweep_with(spec: &SweepSpec, mut progress: impl FnMut(&SweepRow)) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for (value, cfg) in spec.points()? {
        let stats = run(&cfg)?;
        let row = SweepRow::new(spec.axis.as_str(), value, &cfg, &stats);
        progress(&row);
        rows.push(row);
    }
    Ok(rows)
}

pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    sweep_with(spec, |_| {})
}

pub const CSV_UNITS_LINE: &str =
    "# units: L_T and L0 in km, T in s, R S and SE_S_estimate in Hz, rounds in units of 2 L0 / (2e8 m/s), others dimensionless";

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_UNITS_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// JSON document written next to a single run's CSV row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ProtocolConfig,
    pub statistics: RunStatistics,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> ProtocolConfig {
        ProtocolConfig {
            levels: 2,
            total_distance_km: Some(40.0),
            samples: 3000,
            seed: 5,
            ..ProtocolConfig::default()
        }
    }

    #[test]
    fn noiseless_single_level_run() {
        let c = ProtocolConfig {
            levels: 1,
            total_distance_km: Some(2.0),
            merge_probability: 1.0,
            generation_probability: Some(1.0),
            samples: 10,
            ..ProtocolConfig::default()
        };
        let s = run(&c).unwrap();
        assert_eq!(s.mean_rounds, 1.0);
        assert_eq!(s.secret_key_fraction, 1.0);
        assert_relative_eq!(s.secret_key_rate, 1e5, max_relative = 1e-12);
    }

    #[test]
    fn results_do_not_depend_on_the_worker_count() {
        let c = cfg();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run(&c).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run(&c).unwrap());
        assert_eq!(one, four);
    }

    #[test]
    fn sweep_rows_are_self_describing() {
        let spec = SweepSpec {
            axis: SweepAxis::MergeProbability,
            values: vec![0.5, 0.9],
            fixed: ProtocolConfig { samples: 200, ..cfg() },
            protocols: vec![Protocol::Mb, Protocol::Sb],
            variants: vec![
                Variant {
                    growth_limit: 1,
                    patching: PatchMode::Limited,
                },
                Variant {
                    growth_limit: 1,
                    patching: PatchMode::Unlimited,
                },
            ],
        };
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows.len(), 2 * 3);
        assert_eq!(rows[2].protocol, "sb");
        assert_eq!(rows[2].g_l, "na");
        assert_eq!(rows[1].patch_mode, "unlimited");
        assert_eq!(rows[3].p, 0.9);

        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# units:"));
        let header = text.lines().nth(1).unwrap();
        assert!(header.starts_with("axis,axis_value,protocol,k,L_T,L0,p,p_gen,T,g_l,patch_mode,mean_rounds,SE_rounds"));
        assert_eq!(read_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn sweep_values_must_increase() {
        let spec = SweepSpec {
            axis: SweepAxis::DephasingTime,
            values: vec![10.0, 1.0],
            fixed: cfg(),
            protocols: vec![Protocol::Mb],
            variants: vec![],
        };
        assert!(spec.points().is_err());
    }

    #[test]
    fn sample_errors_carry_the_index() {
        let c = ProtocolConfig {
            generation_probability: Some(0.01),
            max_rounds: 5,
            samples: 4,
            ..cfg()
        };
        match run(&c) {
            Err(Error::Sample { index, source }) => {
                assert_eq!(index, 0);
                assert!(matches!(*source, Error::RoundCapExceeded { cap: 5 }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
