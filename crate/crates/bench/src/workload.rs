//! Benchmark inputs: CSV columns and synthetic data matching published
//! summary statistics.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal as StdNormal};
use streche_core::radix::{parse_decimal, DecimalValue};
use streche_core::rng::RngMode;

use crate::error::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Integer,
    /// Fixed-point with this many decimal digits.
    Float {
        decimals: usize,
    },
}

impl ValueKind {
    pub fn decimals(self) -> usize {
        match self {
            ValueKind::Integer => 0,
            ValueKind::Float { decimals } => decimals,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkloadSource {
    Csv { path: PathBuf, column: usize },
    Synthetic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub name: String,
    pub count: usize,
    pub kind: ValueKind,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub stddev: f64,
    pub source: WorkloadSource,
}

/// Record count used for desk-scale runs unless full scale is requested.
pub const DESK_SCALE_COUNT: usize = 10_000;

/// Summary statistics of the seven reference data sets.
const PRESETS: [(&str, usize, ValueKind, f64, f64, f64, f64); 7] = [
    ("Covid19", 341, ValueKind::Integer, 123_021.0, 2_309_884.0, 1_063_465.029, 570_009.089),
    ("Bitcoin", 1_086, ValueKind::Float { decimals: 3 }, 274_252.698, 9_999_999.999, 7_412_197.895, 3_472_109.034),
    ("hg38", 34_424, ValueKind::Integer, 1.0, 360.0, 10.915, 9.891),
    ("P_Size", 200_000, ValueKind::Integer, 1.0, 50.0, 25.427, 14.441),
    ("P_RetailPrice", 200_000, ValueKind::Float { decimals: 2 }, 901.00, 2_098.99, 1_499.49, 294.673),
    ("O_TotalPrice", 1_500_000, ValueKind::Float { decimals: 2 }, 857.71, 555_285.16, 151_219.537, 88_621.401),
    ("L_ExtendedPrice", 6_001_215, ValueKind::Float { decimals: 2 }, 901.00, 104_949.50, 38_255.138, 23_300.436),
];

impl WorkloadSpec {
    /// A named preset at its full record count.
    pub fn preset(name: &str) -> Option<Self> {
        PRESETS.iter().find(|p| p.0.eq_ignore_ascii_case(name)).map(|&(name, count, kind, min, max, mean, stddev)| {
            WorkloadSpec { name: name.into(), count, kind, min, max, mean, stddev, source: WorkloadSource::Synthetic }
        })
    }

    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|p| p.0)
    }

    /// The preset capped at [`DESK_SCALE_COUNT`] records.
    pub fn desk_scale(mut self) -> Self {
        self.count = self.count.min(DESK_SCALE_COUNT);
        self
    }

    pub fn with_count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::InvalidSpec(format!("{}: {m}", self.name)));
        if self.count < 1 {
            return bad("count must be at least 1".into());
        }
        if !(self.min <= self.mean && self.mean <= self.max) {
            return bad(format!("need min <= mean <= max, got {} / {} / {}", self.min, self.mean, self.max));
        }
        if !self.stddev.is_finite() || self.stddev < 0.0 {
            return bad(format!("stddev {} must be finite and non-negative", self.stddev));
        }
        if self.stddev > 0.0 && self.min == self.max {
            return bad("positive stddev needs max > min".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub stddev: f64,
}

impl WorkloadStats {
    pub fn of(values: &[DecimalValue]) -> Self {
        let xs: Vec<f64> = values.iter().map(DecimalValue::to_f64).collect();
        let count = xs.len();
        let mean = xs.iter().sum::<f64>() / count.max(1) as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / count.max(1) as f64;
        WorkloadStats {
            count,
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean,
            stddev: var.sqrt(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Workload {
    pub name: String,
    pub values: Vec<DecimalValue>,
    pub stats: WorkloadStats,
}

impl Workload {
    pub fn new(name: impl Into<String>, values: Vec<DecimalValue>) -> Self {
        let stats = WorkloadStats::of(&values);
        Workload { name: name.into(), values, stats }
    }

    /// True when every value is a non-negative integer.
    pub fn is_unsigned_integer(&self) -> bool {
        self.values.iter().all(|v| v.is_integer() && !v.is_negative())
    }

    /// Largest number of significant fractional digits in the data.
    pub fn decimals(&self) -> usize {
        self.values
            .iter()
            .map(|v| {
                let mut f = v.frac_scaled();
                let mut digits = v.precision();
                while digits > 0 && f % 10 == 0 {
                    f /= 10;
                    digits -= 1;
                }
                digits
            })
            .max()
            .unwrap_or(0)
    }
}

/// Read one numeric column (0-based) of a CSV file, keeping up to
/// `decimals` fractional digits. A first row that does not parse is taken
/// as a header.
pub fn load_csv(path: &Path, column: usize, decimals: usize) -> Result<Workload> {
    let io = |source| BenchError::Io { path: path.display().to_string(), source };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(file);
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| BenchError::Parse {
            line: e.position().map_or(row as u64 + 1, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(row as u64 + 1, |p| p.line());
        let Some(field) = record.get(column) else {
            return Err(BenchError::Parse { line, message: format!("no column {column}") });
        };
        match parse_decimal(field, decimals) {
            Ok(v) => values.push(v),
            Err(_) if row == 0 => continue,
            Err(e) => return Err(BenchError::Parse { line, message: format!("{field:?}: {e}") }),
        }
    }
    if values.is_empty() {
        return Err(BenchError::InvalidSpec(format!("{} has no values in column {column}", path.display())));
    }
    let name = path.file_stem().map_or_else(|| "csv".into(), |s| s.to_string_lossy().into_owned());
    Ok(Workload::new(name, values))
}

/// Draw `spec.count` values from a normal distribution truncated to
/// `[min, max]`, rounded to the workload's precision.
///
/// The normal keeps `stddev` as its scale; its location is solved so that
/// the truncated distribution's mean equals `spec.mean`.
pub fn gen_synthetic(spec: &WorkloadSpec, seed: u64) -> Result<Workload> {
    spec.validate()?;
    let decimals = spec.kind.decimals();
    let mut rng = RngMode::Seeded(seed).rng();
    let values = if spec.stddev == 0.0 {
        vec![to_decimal(spec.mean, decimals)?; spec.count]
    } else {
        let loc = solve_location(spec);
        let normal = Normal::new(loc, spec.stddev).expect("validated scale");
        (0..spec.count)
            .map(|_| to_decimal(sample_truncated(&normal, spec.min, spec.max, &mut rng), decimals))
            .collect::<Result<_>>()?
    };
    Ok(Workload::new(spec.name.clone(), values))
}

fn sample_truncated<R: Rng + ?Sized>(normal: &Normal<f64>, lo: f64, hi: f64, rng: &mut R) -> f64 {
    for _ in 0..10_000 {
        let x = normal.sample(rng);
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
    // Acceptance is vanishingly small; fall back to uniform on the support.
    rng.random_range(lo..=hi)
}

/// Mean of `N(loc, sd)` truncated to `[lo, hi]`.
fn truncated_mean(loc: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    let z = StdNormal::standard();
    let (a, b) = ((lo - loc) / sd, (hi - loc) / sd);
    let mass = z.cdf(b) - z.cdf(a);
    if mass <= 1e-300 {
        return if loc < lo { lo } else { hi };
    }
    loc + sd * (z.pdf(a) - z.pdf(b)) / mass
}

/// Location whose truncation has the target mean; the truncated mean is
/// increasing in the location, so bisection converges.
fn solve_location(spec: &WorkloadSpec) -> f64 {
    let span = spec.max - spec.min;
    let (mut lo, mut hi) = (spec.min - 10.0 * spec.stddev - span, spec.max + 10.0 * spec.stddev + span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if truncated_mean(mid, spec.stddev, spec.min, spec.max) < spec.mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn to_decimal(x: f64, decimals: usize) -> Result<DecimalValue> {
    Ok(parse_decimal(&format!("{x:.decimals$}"), decimals)?)
}
