//! Labeled run collections: synthetic sweeps, histogram import, JSONL
//! persistence and summary tables.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{decode, is_recoverable, DecodeResult};
use crate::error::{Error, Result};
use crate::features::{features_from_decode, FeatureVector};
use crate::numtheory::{mod_pow, Instance};
use crate::rng::derive_seed;
use crate::spectrum::{
    default_sectors, sample_counts, Counts, KernelFamily, MixtureComponents, NoiseConfig, Sector,
    SpectrumData,
};

pub const SCHEMA_NAME: &str = "order-recovery-dataset";
pub const SCHEMA_VERSION: u32 = 1;

/// Stored features must be reproducible from the stored spectrum to this
/// tolerance.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// One labeled run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: Instance,
    /// Absent for imported runs.
    pub noise: Option<NoiseConfig>,
    /// `None` for exact (infinite-shot) distributions.
    pub shots: Option<u64>,
    pub seed: u64,
    pub spectrum: SpectrumData,
    pub decode: DecodeResult,
    pub features: FeatureVector,
    pub r_true: u64,
    pub recoverable: bool,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl RunRecord {
    /// Decodes, extracts features and labels `spectrum` for `instance`.
    pub fn label(
        instance: Instance,
        spectrum: SpectrumData,
        noise: Option<NoiseConfig>,
        seed: u64,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let spec = spectrum.to_spectrum();
        let decoded = decode(&spec, &instance)?;
        let features = features_from_decode(&spec, &decoded);
        let shots = match &spectrum {
            SpectrumData::Counts(c) => Some(c.shots()),
            SpectrumData::Probs(_) => None,
        };
        Ok(RunRecord {
            instance,
            noise,
            shots,
            seed,
            recoverable: is_recoverable(&decoded, instance.order()),
            r_true: instance.order(),
            decode: decoded,
            features,
            spectrum,
            metadata,
        })
    }

    /// Re-derives decode, features and label from the stored spectrum and
    /// checks them against the stored values.
    pub fn check_consistency(&self) -> Result<()> {
        let fresh = RunRecord::label(
            self.instance,
            self.spectrum.clone(),
            None,
            self.seed,
            BTreeMap::new(),
        )?;
        let close = |a: f64, b: f64| (a - b).abs() <= CONSISTENCY_TOL;
        let fa = fresh.features.to_array();
        let fb = self.features.to_array();
        let ok = fresh.r_true == self.r_true
            && fresh.recoverable == self.recoverable
            && fresh.decode.r_calc == self.decode.r_calc
            && fa.iter().zip(&fb).all(|(a, b)| close(*a, *b))
            && close(fresh.decode.m_ver, self.decode.m_ver)
            && self.recoverable == (self.decode.r_calc == Some(self.r_true));
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "record for {} is inconsistent with its spectrum",
                self.instance
            )))
        }
    }
}

/// How competing sectors are chosen for each sweep cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectorPolicy {
    /// Every other cyclic shift, equal weights.
    #[default]
    AllShifts,
    /// Only the two neighbouring shifts `s - 1` and `s + 1` (mod the shift
    /// period), equal weights.
    Adjacent,
}

fn default_shots() -> Vec<u64> {
    vec![4000]
}

fn default_replicates() -> usize {
    1
}

/// Cartesian sweep over instances and noise parameters.
///
/// `shots = 0` in the shots list means an exact (infinite-shot) spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub moduli: Vec<u64>,
    /// Shift exponents; the base is `a = 2^s mod N`.
    pub shifts: Vec<u32>,
    pub precisions: Vec<u32>,
    pub epsilon: Vec<f64>,
    /// Broadening widths; competing sectors share the cell's width.
    pub sigma: Vec<f64>,
    pub lambda: Vec<f64>,
    #[serde(default = "default_shots")]
    pub shots: Vec<u64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub kernel: KernelFamily,
    #[serde(default)]
    pub sector_policy: SectorPolicy,
    /// Keep instances with `a = 1 (mod N)`.
    #[serde(default)]
    pub include_degenerate: bool,
}

impl Default for SweepConfig {
    /// The benchmark grid: `N in {3,7,15,31,63,127}`, `a in {2,4,8,16}`,
    /// `t in {8,10}`, four leakage levels, three widths, three uniform
    /// floors, 4000 shots, five replicates.
    fn default() -> Self {
        SweepConfig {
            moduli: vec![3, 7, 15, 31, 63, 127],
            shifts: vec![1, 2, 3, 4],
            precisions: vec![8, 10],
            epsilon: vec![0.0, 0.2, 0.5, 0.8],
            sigma: vec![0.0, 2.0, 6.0],
            lambda: vec![0.0, 0.3, 0.7],
            shots: vec![4000],
            replicates: 5,
            seed: 2024,
            kernel: KernelFamily::Gaussian,
            sector_policy: SectorPolicy::AllShifts,
            include_degenerate: false,
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::domain(format!("invalid sweep config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sweep config serializes")
    }

    fn validate(&self) -> Result<()> {
        let grids = [
            ("moduli", self.moduli.is_empty()),
            ("shifts", self.shifts.is_empty()),
            ("precisions", self.precisions.is_empty()),
            ("epsilon", self.epsilon.is_empty()),
            ("sigma", self.sigma.is_empty()),
            ("lambda", self.lambda.is_empty()),
            ("shots", self.shots.is_empty()),
        ];
        if let Some((name, _)) = grids.iter().find(|(_, empty)| *empty) {
            return Err(Error::domain(format!("sweep grid `{name}` is empty")));
        }
        if self.replicates == 0 {
            return Err(Error::domain("replicates must be positive"));
        }
        Ok(())
    }
}

fn sectors_for(
    policy: SectorPolicy,
    instance: &Instance,
    shift: u32,
    sigma: f64,
) -> Result<Vec<Sector>> {
    match policy {
        SectorPolicy::AllShifts => default_sectors(instance, sigma),
        SectorPolicy::Adjacent => {
            let n = instance.modulus();
            let period = crate::numtheory::multiplicative_order(2, n)? as u32;
            let s = shift % period;
            let mut hs: Vec<u32> = [(s + period - 1) % period, (s + 1) % period]
                .into_iter()
                .filter(|&h| mod_pow(2, h as u64, n).is_ok_and(|b| b != instance.base()))
                .collect();
            hs.sort_unstable();
            hs.dedup();
            let nu = 1.0 / hs.len().max(1) as f64;
            Ok(hs.into_iter().map(|h| Sector { h, nu, sigma }).collect())
        }
    }
}

/// Instance-level cell shared by every noise setting of one `(N, s, t, sigma)`.
struct BaseCell {
    instance: Instance,
    shift: u32,
    nominal_a: u64,
    sigma: f64,
    /// Index of the first noise cell of this group in the full grid.
    first_cell: u64,
}

/// Generates every record of the sweep. Record seeds are
/// `derive_seed(seed, [cell, replicate])`, with cells numbered over the full
/// grid in `N, s, t, sigma, epsilon, lambda, shots` order; the output order
/// follows the same numbering, whatever the thread count.
pub fn generate_sweep(cfg: &SweepConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let per_sigma = (cfg.epsilon.len() * cfg.lambda.len() * cfg.shots.len()) as u64;
    let mut groups = Vec::new();
    let mut cell = 0u64;
    for &n in &cfg.moduli {
        for &s in &cfg.shifts {
            for &t in &cfg.precisions {
                let nominal_a = mod_pow(2, s as u64, n.max(2)).unwrap_or(0);
                let instance = Instance::new(n, nominal_a, t);
                for &sigma in &cfg.sigma {
                    let first_cell = cell;
                    cell += per_sigma;
                    let instance = match &instance {
                        Ok(i) if i.is_degenerate() && !cfg.include_degenerate => continue,
                        Ok(i) => *i,
                        Err(e) => return Err(Error::domain(format!("N={n}, s={s}: {e}"))),
                    };
                    groups.push(BaseCell {
                        instance,
                        shift: s,
                        nominal_a: 1u64.checked_shl(s).unwrap_or(0),
                        sigma,
                        first_cell,
                    });
                }
            }
        }
    }
    if groups.is_empty() {
        return Err(Error::domain("sweep has no non-degenerate cells"));
    }
    let batches = groups
        .par_iter()
        .map(|g| generate_group(cfg, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(batches.into_iter().flatten().collect())
}

fn generate_group(cfg: &SweepConfig, g: &BaseCell) -> Result<Vec<RunRecord>> {
    let sectors = sectors_for(cfg.sector_policy, &g.instance, g.shift, g.sigma)?;
    let components = MixtureComponents::new(&g.instance, g.sigma, &sectors, cfg.kernel)?;
    let mut out = Vec::new();
    let mut cell = g.first_cell;
    for &epsilon in &cfg.epsilon {
        for &lambda in &cfg.lambda {
            let exact = components.mix(epsilon, lambda)?;
            for &shots in &cfg.shots {
                for rep in 0..cfg.replicates as u64 {
                    let seed = derive_seed(cfg.seed, &[cell, rep]);
                    let noise = NoiseConfig {
                        epsilon,
                        sectors: sectors.clone(),
                        sigma0: g.sigma,
                        lambda_uniform: lambda,
                        kernel: cfg.kernel,
                        shots: (shots > 0).then_some(shots),
                        seed,
                    };
                    let data = if shots == 0 {
                        SpectrumData::Probs(exact.clone())
                    } else {
                        SpectrumData::Counts(sample_counts(&exact, shots, seed)?)
                    };
                    let metadata = BTreeMap::from([
                        ("shift".to_string(), g.shift.to_string()),
                        ("a_nominal".to_string(), g.nominal_a.to_string()),
                        ("replicate".to_string(), rep.to_string()),
                    ]);
                    out.push(RunRecord::label(
                        g.instance,
                        data,
                        Some(noise),
                        seed,
                        metadata,
                    )?);
                }
                cell += 1;
            }
        }
    }
    Ok(out)
}

/// Reads a `y,count` histogram for `instance`.
///
/// Blank lines are skipped. Lines starting with `#` are comments, except
/// `# key=value`, which is stored as metadata. A non-numeric first data row
/// is taken as a header. Repeated outcomes are summed.
pub fn import_histogram(path: &Path, instance: Instance) -> Result<RunRecord> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let q = instance.q();
    let mut counts = vec![0u64; q as usize];
    let mut metadata = BTreeMap::new();
    let mut seen_data = false;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                metadata.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(parse_err(
                lineno,
                format!("expected 2 columns `y,count`, found {}", fields.len()),
            ));
        }
        let (y, c) = match (fields[0].parse::<u64>(), fields[1].parse::<u64>()) {
            (Ok(y), Ok(c)) => (y, c),
            _ if !seen_data && fields[0].parse::<f64>().is_err() => {
                seen_data = true;
                continue;
            }
            _ => {
                return Err(parse_err(
                    lineno,
                    format!("malformed row {line:?}, expected non-negative integers"),
                ))
            }
        };
        seen_data = true;
        if y >= q {
            return Err(parse_err(lineno, format!("outcome {y} ≥ Q={q}")));
        }
        counts[y as usize] += c;
    }
    let counts = Counts::new(instance.precision(), counts)
        .map_err(|_| parse_err(0, "histogram has zero total counts".into()))?;
    metadata
        .entry("source".to_string())
        .or_insert_with(|| path.display().to_string());
    RunRecord::label(instance, SpectrumData::Counts(counts), None, 0, metadata)
}

pub fn import_histograms(inputs: &[(&Path, Instance)]) -> Result<Vec<RunRecord>> {
    inputs
        .iter()
        .map(|(p, i)| import_histogram(p, *i))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: String,
    version: u32,
}

/// Writes a schema header line followed by one JSON record per line.
pub fn write_dataset<W: Write>(records: &[RunRecord], mut w: W) -> Result<()> {
    let header = Header {
        schema: SCHEMA_NAME.to_string(),
        version: SCHEMA_VERSION,
    };
    let io = |e| Error::io("<dataset>", e);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n").map_err(io)?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn save_dataset(records: &[RunRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(records, BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parses a dataset stream. An empty stream is an empty dataset.
pub fn read_dataset<R: BufRead>(reader: R, path: &Path) -> Result<Vec<RunRecord>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut records = Vec::new();
    let mut header_seen = false;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            let h: Header = serde_json::from_str(&line)
                .map_err(|e| parse_err(lineno, format!("missing or invalid header: {e}")))?;
            if h.schema != SCHEMA_NAME {
                return Err(parse_err(lineno, format!("unknown schema {:?}", h.schema)));
            }
            if h.version != SCHEMA_VERSION {
                return Err(Error::SchemaVersion {
                    expected: SCHEMA_VERSION,
                    found: h.version,
                });
            }
            header_seen = true;
            continue;
        }
        let record: RunRecord = serde_json::from_str(&line)
            .map_err(|e| parse_err(lineno, format!("invalid record: {e}")))?;
        records.push(record);
    }
    Ok(records)
}

pub fn load_dataset(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file), path)
}

/// Count of runs and recoverable runs for one group value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCount {
    pub value: String,
    pub total: usize,
    pub recoverable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub recoverable: usize,
    pub non_recoverable: usize,
    /// Breakdown per grouping key (`N`, `a`, `t`, `shots`, then metadata
    /// keys), values in ascending order.
    pub groups: BTreeMap<String, Vec<GroupCount>>,
}

pub fn percent(k: usize, n: usize) -> String {
    format!("{:.1}%", 100.0 * k as f64 / n as f64)
}

impl Summary {
    /// `"<total> total, <rec> (<pct>), <non> (<pct>)"`.
    pub fn headline(&self) -> String {
        format!(
            "{} total, {} ({}), {} ({})",
            self.total,
            self.recoverable,
            percent(self.recoverable, self.total),
            self.non_recoverable,
            percent(self.non_recoverable, self.total)
        )
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24}{}", "Total runs", self.total)?;
        writeln!(
            f,
            "{:<24}{} ({})",
            "Recoverable runs",
            self.recoverable,
            percent(self.recoverable, self.total)
        )?;
        writeln!(
            f,
            "{:<24}{} ({})",
            "Non-recoverable runs",
            self.non_recoverable,
            percent(self.non_recoverable, self.total)
        )?;
        for (key, rows) in &self.groups {
            let cells: Vec<String> = rows
                .iter()
                .map(|g| format!("{} ({}, {} rec.)", g.value, g.total, g.recoverable))
                .collect();
            writeln!(f, "{:<24}{}", format!("By {key}"), cells.join(", "))?;
        }
        Ok(())
    }
}

/// Sort key placing integers numerically before other strings.
fn value_order(v: &str) -> (u8, u64, String) {
    match v.parse::<u64>() {
        Ok(n) => (0, n, String::new()),
        Err(_) => (1, 0, v.to_string()),
    }
}

pub fn summarize(records: &[RunRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::domain("cannot summarize an empty dataset"));
    }
    let mut groups: BTreeMap<String, BTreeMap<String, (usize, usize)>> = BTreeMap::new();
    for r in records {
        let mut keys = vec![
            ("N".to_string(), r.instance.modulus().to_string()),
            ("a".to_string(), r.instance.base().to_string()),
            ("t".to_string(), r.instance.precision().to_string()),
            (
                "shots".to_string(),
                r.shots
                    .map_or_else(|| "exact".to_string(), |s| s.to_string()),
            ),
        ];
        keys.extend(
            r.metadata
                .iter()
                .map(|(k, v)| (format!("meta.{k}"), v.clone())),
        );
        for (k, v) in keys {
            let e = groups.entry(k).or_default().entry(v).or_default();
            e.0 += 1;
            e.1 += r.recoverable as usize;
        }
    }
    let groups = groups
        .into_iter()
        .map(|(k, vals)| {
            let mut rows: Vec<GroupCount> = vals
                .into_iter()
                .map(|(value, (total, recoverable))| GroupCount {
                    value,
                    total,
                    recoverable,
                })
                .collect();
            rows.sort_by_key(|g| value_order(&g.value));
            (k, rows)
        })
        .collect();
    let recoverable = records.iter().filter(|r| r.recoverable).count();
    Ok(Summary {
        total: records.len(),
        recoverable,
        non_recoverable: records.len() - recoverable,
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn tiny_sweep() -> SweepConfig {
        SweepConfig {
            moduli: vec![15],
            shifts: vec![1],
            precisions: vec![8],
            epsilon: vec![0.0],
            sigma: vec![0.0],
            lambda: vec![0.0],
            shots: vec![0],
            replicates: 1,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn noiseless_cell() {
        let recs = generate_sweep(&tiny_sweep()).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert!(r.recoverable);
        assert_eq!(r.shots, None);
        assert!(matches!(r.spectrum, SpectrumData::Probs(_)));
        let f = r.features.to_array();
        let expect = [1.0, 0.25, 1.0, 1.0];
        for (a, b) in f.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{f:?}");
        }
    }

    #[test]
    fn degenerate_cells_are_skipped_by_default() {
        let cfg = SweepConfig {
            moduli: vec![3],
            shifts: vec![1, 2],
            ..tiny_sweep()
        };
        let recs = generate_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].instance.base(), 2);
        let with = generate_sweep(&SweepConfig {
            include_degenerate: true,
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(with.len(), 2);
        let only_degenerate = SweepConfig {
            shifts: vec![2],
            ..cfg
        };
        assert!(generate_sweep(&only_degenerate).is_err());
    }

    #[test]
    fn empty_grid_is_rejected() {
        let cfg = SweepConfig {
            lambda: vec![],
            ..tiny_sweep()
        };
        assert!(generate_sweep(&cfg).is_err());
    }

    #[test]
    fn sampled_records_store_counts_and_are_consistent() {
        let cfg = SweepConfig {
            moduli: vec![7, 31],
            shifts: vec![1, 2],
            epsilon: vec![0.0, 0.5],
            sigma: vec![0.0, 2.0],
            lambda: vec![0.3],
            shots: vec![4000],
            replicates: 2,
            seed: 5,
            ..tiny_sweep()
        };
        let recs = generate_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 2 * 2 * 2 * 2 * 2);
        for r in &recs {
            assert!(matches!(r.spectrum, SpectrumData::Counts(_)));
            assert_eq!(r.shots, Some(4000));
            r.check_consistency().unwrap();
        }
        assert_eq!(recs, generate_sweep(&cfg).unwrap());
    }

    #[test]
    fn adjacent_policy() {
        let i = Instance::new(31, 4, 8).unwrap();
        let s = sectors_for(SectorPolicy::Adjacent, &i, 2, 1.0).unwrap();
        assert_eq!(s.iter().map(|s| s.h).collect::<Vec<_>>(), vec![1, 3]);
        let i = Instance::new(3, 2, 8).unwrap();
        let s = sectors_for(SectorPolicy::Adjacent, &i, 1, 1.0).unwrap();
        assert_eq!(s.iter().map(|s| s.h).collect::<Vec<_>>(), vec![0]);
        assert_eq!(s[0].nu, 1.0);
    }

    #[test]
    fn toml_config() {
        let text = r#"
            moduli = [15, 31]
            shifts = [1]
            precisions = [8]
            epsilon = [0.0, 0.2]
            sigma = [1.5]
            lambda = [0.0]
            shots = [4000]
            replicates = 3
            seed = 11
            kernel = "box"
            sector_policy = "adjacent"
        "#;
        let cfg = SweepConfig::from_toml(text).unwrap();
        assert_eq!(cfg.kernel, KernelFamily::Box);
        assert_eq!(cfg.sector_policy, SectorPolicy::Adjacent);
        assert_eq!(SweepConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert!(SweepConfig::from_toml("moduli = [15]\nbogus = 1").is_err());
    }

    #[test]
    fn jsonl_round_trip_and_errors() {
        let cfg = SweepConfig {
            moduli: vec![7, 15],
            shifts: vec![1, 2],
            epsilon: vec![0.2],
            sigma: vec![2.0],
            lambda: vec![0.3],
            shots: vec![4000, 0],
            ..tiny_sweep()
        };
        let recs = generate_sweep(&cfg).unwrap();
        let mut buf = Vec::new();
        write_dataset(&recs, &mut buf).unwrap();
        let path = Path::new("mem");
        assert_eq!(read_dataset(Cursor::new(&buf), path).unwrap(), recs);

        let mut empty = Vec::new();
        write_dataset(&[], &mut empty).unwrap();
        assert!(read_dataset(Cursor::new(&empty), path).unwrap().is_empty());
        assert!(read_dataset(Cursor::new(b""), path).unwrap().is_empty());

        let text = String::from_utf8(buf).unwrap();
        let lines = text.lines().count();
        let truncated = &text[..text.len() - 20];
        match read_dataset(Cursor::new(truncated), path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, lines),
            other => panic!("expected parse error, got {other:?}"),
        }

        let v2 = r#"{"schema":"order-recovery-dataset","version":2}"#;
        assert!(matches!(
            read_dataset(Cursor::new(v2), path),
            Err(Error::SchemaVersion {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn summary_counts() {
        let mut recs = generate_sweep(&tiny_sweep()).unwrap();
        let mut bad = recs[0].clone();
        bad.recoverable = false;
        recs = vec![recs[0].clone(), recs[0].clone(), bad.clone(), bad];
        let s = summarize(&recs).unwrap();
        assert_eq!(s.headline(), "4 total, 2 (50.0%), 2 (50.0%)");
        for rows in s.groups.values() {
            assert_eq!(rows.iter().map(|g| g.total).sum::<usize>(), 4);
        }
        assert!(summarize(&[]).is_err());
        assert_eq!(percent(310, 680), "45.6%");
        assert_eq!(percent(370, 680), "54.4%");
    }
}
