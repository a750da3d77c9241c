//! Monte-Carlo experiment harness: simulate, estimate with every method on
//! the same paths, score against the truth and aggregate.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier2::Symmetrization;
use crate::metrics::{error_report, format_scaled, mean_stderr, ErrorReport};
use crate::method::{KernelChoice, MethodSpec, PathEstimator};
use crate::sample::SpotMatrixSeries;
use crate::sim::{simulate_heston, GroundTruth, HestonSpec, JumpSpec};

pub const PRESET_BENCHMARK_HESTON: &str = "benchmark-heston";

/// Model section of a spec: a named preset or an explicit parameter set.
/// The grid size of an explicit model is ignored; it comes from
/// `grid_sizes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelConfig {
    Preset { preset: String },
    Explicit(HestonSpec),
}

impl ModelConfig {
    pub fn spec_for(&self, grid_size: usize) -> Result<HestonSpec> {
        match self {
            ModelConfig::Preset { preset } if preset == PRESET_BENCHMARK_HESTON => {
                Ok(HestonSpec::benchmark(grid_size))
            }
            ModelConfig::Preset { preset } => Err(Error::Config(format!("unknown model preset `{preset}`"))),
            ModelConfig::Explicit(spec) => Ok(HestonSpec {
                grid_size,
                ..spec.clone()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Replications {
    Uniform(usize),
    PerGrid(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub model: ModelConfig,
    #[serde(default)]
    pub jumps: Option<JumpSpec>,
    pub methods: Vec<MethodSpec>,
    pub grid_sizes: Vec<usize>,
    pub replications: Replications,
    pub seed: u64,
    #[serde(default)]
    pub trim_fraction: f64,
    /// Worker threads; defaults to the number of available cores.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Write a per-time eigenvalue trace for the first replication.
    #[serde(default = "yes")]
    pub trace: bool,
}

fn yes() -> bool {
    true
}

impl ExperimentSpec {
    /// The benchmark study: QV and the fifteen Fourier variants (Fejér
    /// plus four ladder rungs for each scheme) at `N₀ ∈ {10², 10³, 10⁴}`.
    pub fn benchmark_heston() -> Self {
        let mut methods = vec![MethodSpec::qv()];
        let kernels = [
            KernelChoice::Fejer,
            KernelChoice::Ladder(1),
            KernelChoice::Ladder(2),
            KernelChoice::Ladder(3),
            KernelChoice::Ladder(4),
        ];
        methods.extend(kernels.iter().map(|k| MethodSpec::fourier1(*k)));
        for sym in [Symmetrization::PostHoc, Symmetrization::Convolution] {
            methods.extend(kernels.iter().map(|k| MethodSpec::fourier2(*k, sym)));
        }
        Self {
            model: ModelConfig::Preset {
                preset: PRESET_BENCHMARK_HESTON.into(),
            },
            jumps: None,
            methods,
            grid_sizes: vec![100, 1000, 10_000],
            replications: Replications::PerGrid(vec![100, 100, 20]),
            seed: 20_240_601,
            trim_fraction: 0.1,
            workers: None,
            trace: true,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            PRESET_BENCHMARK_HESTON => Ok(Self::benchmark_heston()),
            _ => Err(Error::Config(format!("unknown preset `{name}`"))),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn replications_for(&self, index: usize) -> usize {
        match &self.replications {
            Replications::Uniform(r) => *r,
            Replications::PerGrid(v) => v[index],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.grid_sizes.is_empty() {
            return bad("grid_sizes must not be empty".into());
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        match &self.replications {
            Replications::Uniform(0) => return bad("replications must be at least 1".into()),
            Replications::PerGrid(v) if v.len() != self.grid_sizes.len() => {
                return bad(format!(
                    "{} replication counts given for {} grid sizes",
                    v.len(),
                    self.grid_sizes.len()
                ))
            }
            Replications::PerGrid(v) if v.contains(&0) => {
                return bad("replications must be at least 1".into())
            }
            _ => {}
        }
        if !(0.0..0.5).contains(&self.trim_fraction) {
            return bad(format!("trim_fraction {} must lie in [0, 0.5)", self.trim_fraction));
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        for &n0 in &self.grid_sizes {
            if n0 < 4 {
                return bad(format!("grid size {n0} is too small"));
            }
            let model = self.model.spec_for(n0)?;
            model.validate().map_err(|e| Error::Config(e.to_string()))?;
            if let Some(j) = &self.jumps {
                j.validate(model.d).map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        for m in &self.methods {
            m.validate()?;
        }
        let mut labels: Vec<String> = self.methods.iter().map(MethodSpec::label).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("method `{}` listed twice", w[0]));
        }
        Ok(())
    }
}

/// Seed of replication `rep` at grid size `n0`: a SplitMix64 finaliser
/// over the master seed and both indices.
pub fn replication_seed(seed: u64, n0: usize, rep: usize) -> u64 {
    let mut z = seed
        .wrapping_add((n0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((rep as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Scores of one method on one replication. `error` is non-empty when the
/// method failed on that path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub method: String,
    #[serde(rename = "N0")]
    pub n0: usize,
    pub rep: usize,
    pub seed: u64,
    pub mse: f64,
    pub mse_min: f64,
    pub evaluated: usize,
    pub negative: usize,
    pub mean_l1: f64,
    pub sup_l1: f64,
    pub wall_ms: f64,
    pub error: String,
}

impl ReplicationRecord {
    pub fn failed(&self) -> bool {
        !self.error.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    #[serde(rename = "N0")]
    pub n0: usize,
    pub mean_mse: f64,
    pub mean_mse_min: f64,
    pub stderr_mse: f64,
    pub stderr_mse_min: f64,
    pub wall_ms: f64,
    /// Share of evaluated times whose smallest eigenvalue estimate is
    /// negative.
    pub negative_fraction: f64,
    /// Mean over replications of the time-averaged spectrum `ℓ₁` error.
    pub mean_l1: f64,
    pub replications: usize,
    pub failures: usize,
}

/// `(largest, smallest)` eigenvalue at one time.
pub type Extremes = (f64, f64);

/// Per-time eigenvalue trace of one replication: the truth and each
/// method's largest and smallest eigenvalue. Missing estimates are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub n0: usize,
    pub times: Vec<f64>,
    pub true_max: Vec<f64>,
    pub true_min: Vec<f64>,
    pub methods: Vec<(String, Vec<Option<Extremes>>)>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub summary: Vec<SummaryRow>,
    pub records: Vec<ReplicationRecord>,
    pub traces: Vec<Trace>,
}

impl ExperimentResult {
    pub fn row(&self, method: &str, n0: usize) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.method == method && r.n0 == n0)
    }

    /// Per-replication records of one method at one grid size, in
    /// replication order.
    pub fn records_for<'a>(&'a self, method: &'a str, n0: usize) -> impl Iterator<Item = &'a ReplicationRecord> {
        self.records.iter().filter(move |r| r.method == method && r.n0 == n0)
    }
}

struct RepOutput {
    records: Vec<ReplicationRecord>,
    trace: Option<Trace>,
}

fn run_replication(
    spec: &ExperimentSpec,
    model: &HestonSpec,
    n0: usize,
    rep: usize,
) -> Result<RepOutput> {
    let seed = replication_seed(spec.seed, n0, rep);
    let (path, truth) = simulate_heston(model, spec.jumps.as_ref(), seed)?;
    let mut estimator = PathEstimator::new(&path);
    let mut records = Vec::with_capacity(spec.methods.len());
    let mut series_kept: Vec<Option<SpotMatrixSeries>> = Vec::new();
    for method in &spec.methods {
        let label = method.label();
        let start = Instant::now();
        let outcome = estimator
            .estimate(method, None)
            .and_then(|s| error_report(&label, &s, &truth, spec.trim_fraction).map(|r| (s, r)));
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let record = match &outcome {
            Ok((_, r)) => record_from(r, n0, rep, seed, wall_ms),
            Err(e) => ReplicationRecord {
                method: label,
                n0,
                rep,
                seed,
                mse: f64::NAN,
                mse_min: f64::NAN,
                evaluated: 0,
                negative: 0,
                mean_l1: f64::NAN,
                sup_l1: f64::NAN,
                wall_ms,
                error: e.to_string(),
            },
        };
        records.push(record);
        if spec.trace && rep == 0 {
            series_kept.push(outcome.ok().map(|(s, _)| s));
        }
    }
    let trace = (spec.trace && rep == 0).then(|| build_trace(spec, n0, &truth, series_kept));
    Ok(RepOutput { records, trace })
}

fn record_from(r: &ErrorReport, n0: usize, rep: usize, seed: u64, wall_ms: f64) -> ReplicationRecord {
    ReplicationRecord {
        method: r.method.clone(),
        n0,
        rep,
        seed,
        mse: r.mse,
        mse_min: r.mse_min,
        evaluated: r.evaluated_count,
        negative: r.negative_count,
        mean_l1: r.mean_spectrum_l1,
        sup_l1: r.sup_spectrum_l1,
        wall_ms,
        error: String::new(),
    }
}

fn build_trace(
    spec: &ExperimentSpec,
    n0: usize,
    truth: &GroundTruth,
    series: Vec<Option<SpotMatrixSeries>>,
) -> Trace {
    let spectra = truth.sigma.spectra();
    let methods = spec
        .methods
        .iter()
        .zip(series)
        .map(|(m, s)| {
            let mut col = vec![None; truth.times.len()];
            if let Some(s) = s {
                for (t, _, sp) in s.iter() {
                    if let Ok(k) = truth.index_of(t) {
                        col[k] = Some((sp.max(), sp.min()));
                    }
                }
            }
            (m.label(), col)
        })
        .collect();
    Trace {
        n0,
        times: truth.times.clone(),
        true_max: spectra.iter().map(|s| s.max()).collect(),
        true_min: spectra.iter().map(|s| s.min()).collect(),
        methods,
    }
}

fn summarize(spec: &ExperimentSpec, n0: usize, records: &[ReplicationRecord]) -> Vec<SummaryRow> {
    spec.methods
        .iter()
        .map(|m| {
            let label = m.label();
            let mine: Vec<&ReplicationRecord> =
                records.iter().filter(|r| r.method == label && r.n0 == n0).collect();
            let ok: Vec<&&ReplicationRecord> = mine.iter().filter(|r| !r.failed()).collect();
            let mse = mean_stderr(&ok.iter().map(|r| r.mse).collect::<Vec<_>>());
            let mse_min = mean_stderr(&ok.iter().map(|r| r.mse_min).collect::<Vec<_>>());
            let evaluated: usize = ok.iter().map(|r| r.evaluated).sum();
            let negative: usize = ok.iter().map(|r| r.negative).sum();
            let l1 = mean_stderr(&ok.iter().map(|r| r.mean_l1).collect::<Vec<_>>());
            let wall = mean_stderr(&mine.iter().map(|r| r.wall_ms).collect::<Vec<_>>());
            SummaryRow {
                method: label,
                n0,
                mean_mse: mse.mean,
                mean_mse_min: mse_min.mean,
                stderr_mse: mse.stderr,
                stderr_mse_min: mse_min.stderr,
                wall_ms: wall.mean,
                negative_fraction: if evaluated == 0 {
                    f64::NAN
                } else {
                    negative as f64 / evaluated as f64
                },
                mean_l1: l1.mean,
                replications: mine.len(),
                failures: mine.len() - ok.len(),
            }
        })
        .collect()
}

/// Runs every method on every replication at every grid size. Methods
/// that fail on a path are recorded as failed; other methods continue.
/// Results do not depend on the number of workers, apart from timings.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = spec.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let mut summary = Vec::new();
    let mut records = Vec::new();
    let mut traces = Vec::new();
    for (gi, &n0) in spec.grid_sizes.iter().enumerate() {
        let model = spec.model.spec_for(n0)?;
        let reps = spec.replications_for(gi);
        let outputs: Vec<Result<RepOutput>> = pool.install(|| {
            (0..reps)
                .into_par_iter()
                .map(|rep| run_replication(spec, &model, n0, rep))
                .collect()
        });
        let mut these = Vec::new();
        for out in outputs {
            let out = out?;
            these.extend(out.records);
            traces.extend(out.trace);
        }
        summary.extend(summarize(spec, n0, &these));
        records.extend(these);
    }
    Ok(ExperimentResult {
        summary,
        records,
        traces,
    })
}

/// Writes `summary.csv`, `replications.csv`, `trace_<N0>.csv` and
/// `run.toml` into `dir`.
pub fn write_outputs(spec: &ExperimentSpec, result: &ExperimentResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_rows(&result.summary, File::create(dir.join("summary.csv"))?)?;
    write_rows(&result.records, File::create(dir.join("replications.csv"))?)?;
    for trace in &result.traces {
        write_trace(trace, File::create(dir.join(format!("trace_{}.csv", trace.n0)))?)?;
    }
    let mut meta = String::new();
    meta.push_str(&format!("# spotvol {}\n", env!("CARGO_PKG_VERSION")));
    meta.push_str("# Fourier cutoffs follow N = N0/4 unless a method sets one.\n");
    meta.push_str(&spec.to_toml()?);
    std::fs::write(dir.join("run.toml"), meta)?;
    Ok(())
}

fn csv_writer<W: Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink)
}

pub fn write_rows<T: Serialize, W: Write>(rows: &[T], sink: W) -> Result<()> {
    let mut w = csv_writer(BufWriter::new(sink));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(trace: &Trace, sink: W) -> Result<()> {
    use crate::io::format_f64;
    let mut w = csv_writer(BufWriter::new(sink));
    let mut header = vec!["t".to_string(), "true_max".into(), "true_min".into()];
    for (label, _) in &trace.methods {
        header.push(format!("{label}_max"));
        header.push(format!("{label}_min"));
    }
    w.write_record(&header)?;
    for k in 0..trace.times.len() {
        let mut row = vec![
            format_f64(trace.times[k]),
            format_f64(trace.true_max[k]),
            format_f64(trace.true_min[k]),
        ];
        for (_, col) in &trace.methods {
            match col[k] {
                Some((hi, lo)) => {
                    row.push(format_f64(hi));
                    row.push(format_f64(lo));
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv<R: Read>(source: R) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_reader(source);
    rdr.deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Median-of-3 wall-clock time of one estimation per method and grid size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: String,
    #[serde(rename = "N0")]
    pub n0: usize,
    pub median_ms: f64,
}

/// Times each method on one simulated path per grid size. Fourier fits
/// are not shared, so every timing includes the full fit.
pub fn timing_report(spec: &ExperimentSpec) -> Result<Vec<TimingRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &n0 in &spec.grid_sizes {
        let model = spec.model.spec_for(n0)?;
        let (path, _) = simulate_heston(&model, spec.jumps.as_ref(), replication_seed(spec.seed, n0, 0))?;
        for method in &spec.methods {
            let mut times = [0.0; 3];
            for slot in times.iter_mut() {
                let start = Instant::now();
                PathEstimator::new(&path).estimate(method, None)?;
                *slot = start.elapsed().as_secs_f64() * 1e3;
            }
            times.sort_by(f64::total_cmp);
            rows.push(TimingRow {
                method: method.label(),
                n0,
                median_ms: times[1],
            });
        }
    }
    Ok(rows)
}

/// Plain-text table of mean MSE and mSE in units of `10⁻⁴`, one row per
/// method and one column pair per grid size.
pub fn render_table(rows: &[SummaryRow]) -> String {
    let mut grids: Vec<usize> = rows.iter().map(|r| r.n0).collect();
    grids.sort_unstable();
    grids.dedup();
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let cells: BTreeMap<(&str, usize), &SummaryRow> =
        rows.iter().map(|r| ((r.method.as_str(), r.n0), r)).collect();
    let width = methods.iter().map(|m| m.chars().count()).max().unwrap_or(6).max(6);
    let mut out = String::new();
    out.push_str(&format!("{:<width$}", "method"));
    for n0 in &grids {
        out.push_str(&format!(" | {:>21}", format!("N0={n0}")));
    }
    out.push('\n');
    out.push_str(&format!("{:<width$}", ""));
    for _ in &grids {
        out.push_str(&format!(" | {:>10} {:>10}", "MSE", "mSE"));
    }
    out.push('\n');
    for m in methods {
        out.push_str(&format!("{m:<width$}"));
        for &n0 in &grids {
            match cells.get(&(m, n0)) {
                Some(r) => out.push_str(&format!(
                    " | {:>10} {:>10}",
                    format_scaled(r.mean_mse),
                    format_scaled(r.mean_mse_min)
                )),
                None => out.push_str(&format!(" | {:>10} {:>10}", "-", "-")),
            }
        }
        out.push('\n');
    }
    out.push_str("(x 1e-4; ε < 1e-10)\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            methods: vec![
                MethodSpec::qv(),
                MethodSpec::fourier1(KernelChoice::Fejer),
                MethodSpec::fourier2(KernelChoice::Ladder(2), Symmetrization::Convolution),
            ],
            grid_sizes: vec![64, 128],
            replications: Replications::Uniform(3),
            workers: Some(1),
            ..ExperimentSpec::benchmark_heston()
        }
    }

    #[test]
    fn preset_is_valid_and_round_trips() {
        let spec = ExperimentSpec::benchmark_heston();
        spec.validate().unwrap();
        assert_eq!(spec.methods.len(), 16);
        let back = ExperimentSpec::from_toml(&spec.to_toml().unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn validation_catches_bad_specs() {
        let mut s = small_spec();
        s.replications = Replications::PerGrid(vec![1]);
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = small_spec();
        s.grid_sizes.clear();
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.methods.push(MethodSpec::qv());
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.model = ModelConfig::Preset { preset: "nope".into() };
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.replications = Replications::Uniform(0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn explicit_model_from_toml() {
        let text = r#"
            seed = 5
            grid_sizes = [50]
            replications = 2
            [model]
            d = 1
            d1 = 1
            drift = [0.0]
            loadings = [[1.0]]
            mean_reversion = [2.0]
            long_run = [0.01]
            vol_of_vol = [0.2]
            v0 = [0.01]
            x0 = [1.0]
            horizon = 1.0
            [[methods]]
            kind = "bipower"
        "#;
        let spec = ExperimentSpec::from_toml(text).unwrap();
        assert_eq!(spec.model.spec_for(50).unwrap().grid_size, 50);
        let res = run_experiment(&spec).unwrap();
        assert_eq!(res.summary.len(), 1);
        assert_eq!(res.summary[0].replications, 2);
    }

    #[test]
    fn deterministic_and_worker_independent() {
        let spec = small_spec();
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&ExperimentSpec {
            workers: Some(3),
            ..spec.clone()
        })
        .unwrap();
        let strip = |r: &ExperimentResult| {
            r.summary
                .iter()
                .map(|s| SummaryRow { wall_ms: 0.0, ..s.clone() })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.traces, b.traces);
        assert_eq!(a.summary.len(), 6);
        assert!(a.summary.iter().all(|r| r.failures == 0 && r.mean_mse.is_finite()));
    }

    #[test]
    fn failing_method_does_not_abort_others() {
        let mut spec = small_spec();
        // n0 = 20 passes config checks but exceeds the Nyquist cutoff 16.
        spec.methods.push(MethodSpec::Fourier1 {
            kernel: KernelChoice::Fejer,
            n0: 20,
            cutoff: None,
        });
        spec.grid_sizes = vec![64];
        let res = run_experiment(&spec).unwrap();
        let bad = res.row("F1-FS/n20", 64).unwrap();
        assert_eq!(bad.failures, 3);
        assert!(res.row("QV", 64).unwrap().mean_mse.is_finite());
    }

    #[test]
    fn outputs_and_summary_round_trip() {
        let spec = small_spec();
        let res = run_experiment(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&spec, &res, dir.path()).unwrap();
        let rows = read_summary_csv(File::open(dir.path().join("summary.csv")).unwrap()).unwrap();
        assert_eq!(rows, res.summary);
        let header = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(header.starts_with(
            "method,N0,mean_mse,mean_mse_min,stderr_mse,stderr_mse_min,wall_ms,"
        ));
        let trace = std::fs::read_to_string(dir.path().join("trace_64.csv")).unwrap();
        assert_eq!(trace.lines().count(), 66);
        assert!(dir.path().join("run.toml").exists());
        let table = render_table(&rows);
        assert!(table.contains("F2C-FS2"));
    }

    #[test]
    fn seeds_differ_across_reps_and_grids() {
        let s: Vec<u64> = (0..100).map(|r| replication_seed(1, 100, r)).collect();
        let mut u = s.clone();
        u.sort_unstable();
        u.dedup();
        assert_eq!(u.len(), 100);
        assert_ne!(replication_seed(1, 100, 0), replication_seed(1, 1000, 0));
    }

    #[test]
    fn zero_volatility_model_scores_zero() {
        let mut model = HestonSpec::benchmark(64);
        model.loadings = vec![vec![0.0; 3]; 5];
        model.drift = vec![0.0; 5];
        let mut spec = small_spec();
        spec.model = ModelConfig::Explicit(model);
        spec.methods.push(MethodSpec::bipower());
        spec.methods.push(MethodSpec::fourier2(KernelChoice::Fejer, Symmetrization::PostHoc));
        let res = run_experiment(&spec).unwrap();
        for r in &res.summary {
            assert!(r.mean_mse.abs() < 1e-24 && r.mean_mse_min.abs() < 1e-24, "{r:?}");
        }
    }
}
