//! Sweeps over primes: estimate `A_V(p -> r)` for each `q`, fit the growth
//! exponent of the lower bound in `q`, and emit the rows as CSV or JSON.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::{
    estimate_norm, InputFamily, NormMethod, OutputNorm, RestrictedAveragingOperator, SearchOptions,
};
use crate::error::{Error, Result};
use crate::field::Prime;
use crate::regions::{region_main1, region_main2, ExponentPair, Membership};
use crate::varieties::{make_cone, make_paraboloid, make_sphere, Variety};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_CAP: u64 = 2_000_000;
pub const DEFAULT_THRESHOLD: f64 = 0.15;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarietySpec {
    Sphere { j: i64 },
    Paraboloid,
    Cone,
}

impl VarietySpec {
    pub fn build(&self, q: Prime, d: usize) -> Result<Variety> {
        match self {
            VarietySpec::Sphere { j } => make_sphere(q, d, q.element(*j)),
            VarietySpec::Paraboloid => make_paraboloid(q, d),
            VarietySpec::Cone => make_cone(q, d),
        }
    }
}

impl fmt::Display for VarietySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarietySpec::Sphere { j: 1 } => write!(f, "sphere"),
            VarietySpec::Sphere { j } => write!(f, "sphere:{j}"),
            VarietySpec::Paraboloid => write!(f, "paraboloid"),
            VarietySpec::Cone => write!(f, "cone"),
        }
    }
}

impl FromStr for VarietySpec {
    type Err = Error;

    /// `sphere`, `sphere:<j>`, `circle` (the unit sphere), `paraboloid`, `cone`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "sphere" | "circle" => return Ok(VarietySpec::Sphere { j: 1 }),
            "paraboloid" => return Ok(VarietySpec::Paraboloid),
            "cone" => return Ok(VarietySpec::Cone),
            _ => {}
        }
        if let Some(j) = s.strip_prefix("sphere:") {
            let j = j
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad sphere radius in {s}")))?;
            return Ok(VarietySpec::Sphere { j });
        }
        Err(Error::InvalidParameter(format!("unknown variety {s}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variety: VarietySpec,
    pub d: usize,
    pub point: ExponentPair,
    pub primes: Vec<u64>,
    pub method: NormMethod,
    pub budget: usize,
    pub seed: u64,
    pub family: InputFamily,
    pub output: OutputNorm,
    /// Largest admissible `q^d`.
    pub cap: u64,
    /// Slopes at or below this count as bounded.
    pub threshold: f64,
    /// Admit `q = 3 mod 4` for the even-dimensional cone.
    pub allow_minus_one_nonsquare: bool,
}

impl SweepSpec {
    pub fn new(variety: VarietySpec, d: usize, point: ExponentPair, primes: Vec<u64>) -> Self {
        SweepSpec {
            variety,
            d,
            point,
            primes,
            method: NormMethod::Auto,
            budget: 512,
            seed: 0,
            family: InputFamily::General,
            output: OutputNorm::Strong,
            cap: DEFAULT_CAP,
            threshold: DEFAULT_THRESHOLD,
            allow_minus_one_nonsquare: false,
        }
    }

    fn is_even_cone(&self) -> bool {
        self.variety == VarietySpec::Cone && self.d >= 4 && self.d % 2 == 0
    }

    /// True when some prime falls where necessity of the cone region is
    /// not known.
    pub fn in_open_regime(&self) -> bool {
        self.is_even_cone() && self.primes.iter().any(|&q| q % 4 == 3)
    }

    pub fn validate(&self) -> Result<Vec<Prime>> {
        if self.primes.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "a sweep needs at least 3 primes, got {}",
                self.primes.len()
            )));
        }
        if self.primes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("primes must be strictly increasing".into()));
        }
        if !self.threshold.is_finite() {
            return Err(Error::InvalidParameter("threshold must be finite".into()));
        }
        let primes = self
            .primes
            .iter()
            .map(|&q| Prime::new(q))
            .collect::<Result<Vec<_>>>()?;
        for &q in &self.primes {
            let size = (q as u128).checked_pow(self.d as u32).unwrap_or(u128::MAX);
            if size > self.cap as u128 {
                return Err(Error::CapExceeded {
                    q,
                    d: self.d,
                    size,
                    cap: self.cap as u128,
                });
            }
        }
        if self.is_even_cone() && !self.allow_minus_one_nonsquare {
            if let Some(q) = self.primes.iter().find(|&&q| q % 4 == 3) {
                return Err(Error::InvalidParameter(format!(
                    "q = {q} is 3 mod 4, where -1 is not a square; pass the override to sweep it anyway"
                )));
            }
        }
        self.point.exponents()?;
        Ok(primes)
    }

    fn search_options(&self) -> SearchOptions {
        SearchOptions {
            budget: self.budget,
            seed: self.seed,
            family: self.family,
            output: self.output,
            ..SearchOptions::default()
        }
    }
}

/// One prime of a sweep, in CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q: u64,
    pub d: usize,
    pub variety: String,
    pub inv_p: String,
    pub inv_r: String,
    pub lower: f64,
    pub upper: Option<f64>,
    pub method: String,
    pub witness_hash: Option<String>,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual in log space.
    pub max_residual: f64,
    /// Standard error of the slope from the residuals; zero for an exact fit.
    pub slope_stderr: f64,
}

impl SlopeFit {
    /// `slope +- 2 stderr`.
    pub fn slope_ci(&self) -> (f64, f64) {
        (self.slope - 2.0 * self.slope_stderr, self.slope + 2.0 * self.slope_stderr)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Bounded,
    Growing,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Bounded => "bounded",
            Verdict::Growing => "growing",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    pub fit: SlopeFit,
    pub verdict: Verdict,
    /// Set for the even cone at `q = 3 mod 4`; the verdict there is data,
    /// not a resolution of the necessity question.
    pub open_regime: bool,
}

/// Ordinary least squares of `log value` against `log q`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(q, v)) = points.iter().find(|&&(q, v)| !(q > 0.0 && v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "slope fit needs positive finite data, got ({q}, {v})"
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(q, v)| (q.ln(), v.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("slope fit needs distinct q".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = logs.iter().map(|p| p.1 - intercept - slope * p.0).collect();
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    let slope_stderr = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        max_residual,
        slope_stderr,
    })
}

fn estimate_row(spec: &SweepSpec, q: Prime) -> Result<SweepRow> {
    let variety = Arc::new(spec.variety.build(q, spec.d)?);
    let op = RestrictedAveragingOperator::new(variety);
    let (p, r) = spec.point.exponents()?;
    let estimate = estimate_norm(&op, p, r, spec.method, &spec.search_options())?;
    Ok(SweepRow {
        q: q.get(),
        d: spec.d,
        variety: spec.variety.to_string(),
        inv_p: p.inv().to_string(),
        inv_r: r.inv().to_string(),
        lower: estimate.lower_bound,
        upper: estimate.upper_bound,
        method: estimate.method.as_str().to_string(),
        witness_hash: estimate.witness_hash,
        seed: spec.seed,
    })
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let primes = spec.validate()?;
    let rows = primes
        .par_iter()
        .map(|&q| estimate_row(spec, q))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.q as f64, r.lower)).collect();
    let fit = fit_slope(&points)?;
    let verdict = if fit.slope <= spec.threshold {
        Verdict::Bounded
    } else {
        Verdict::Growing
    };
    Ok(SweepResult {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
        rows,
        fit,
        verdict,
        open_regime: spec.in_open_regime(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidParameter(format!("unknown format {other}"))),
        }
    }
}

pub fn to_csv(result: &SweepResult) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in &result.rows {
        writer
            .serialize(row)
            .map_err(|e| Error::Serialization(e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn to_json(result: &SweepResult) -> Result<String> {
    let mut s = serde_json::to_string_pretty(result).map_err(|e| Error::Serialization(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(s: &str) -> Result<SweepResult> {
    let result: SweepResult = serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
    if result.schema_version != SCHEMA_VERSION {
        return Err(Error::Serialization(format!(
            "schema version {} is not {SCHEMA_VERSION}",
            result.schema_version
        )));
    }
    Ok(result)
}

pub fn render(result: &SweepResult, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => to_csv(result),
        OutputFormat::Json => to_json(result),
    }
}

pub fn emit(result: &SweepResult, format: OutputFormat, path: &Path) -> Result<()> {
    let text = render(result, format)?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One exponent pair of a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub point: ExponentPair,
    pub slope: f64,
    pub verdict: Verdict,
    /// Classification by the proved sufficient region.
    pub region: Membership,
}

/// Sweeps every point `(i/n, j/n)` with `1/p <= 1`, reusing `template` for
/// all settings except the point. The region column uses the even-cone
/// region for the even cone and the regular-variety region otherwise.
pub fn scan(template: &SweepSpec, n: u32) -> Result<Vec<ScanCell>> {
    let d = u32::try_from(template.d).map_err(|_| Error::DimensionOutOfRange(template.d))?;
    let region = if template.is_even_cone() {
        region_main2(d)?
    } else {
        region_main1(d)?
    };
    let mut base = template.clone();
    base.point = ExponentPair::from_ratios(0, 1, 0, 1)?;
    base.validate()?;
    let cells = region.classify_grid(n)?;
    cells
        .into_iter()
        .map(|(point, membership)| {
            let mut spec = template.clone();
            spec.point = point.clone();
            let result = run_sweep(&spec)?;
            Ok(ScanCell {
                point,
                slope: result.fit.slope,
                verdict: result.verdict,
                region: membership,
            })
        })
        .collect()
}

pub fn scan_to_csv(cells: &[ScanCell]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["inv_p", "inv_r", "slope", "verdict", "region"])
        .map_err(|e| Error::Serialization(e.to_string()))?;
    for cell in cells {
        let (inv_p, inv_r) = (cell.point.inv_p().to_string(), cell.point.inv_r().to_string());
        writer
            .write_record([
                inv_p.as_str(),
                inv_r.as_str(),
                &cell.slope.to_string(),
                cell.verdict.as_str(),
                cell.region.as_str(),
            ])
            .map_err(|e| Error::Serialization(e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn circle_spec(point: &str) -> SweepSpec {
        SweepSpec::new(
            VarietySpec::Sphere { j: 1 },
            2,
            point.parse().unwrap(),
            vec![3, 5, 7, 11, 13],
        )
    }

    #[test]
    fn slope_of_exact_power_laws() {
        let flat: Vec<(f64, f64)> = [3.0, 5.0, 7.0].iter().map(|&q| (q, 2.5)).collect();
        let fit = fit_slope(&flat).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        let root: Vec<(f64, f64)> = [3.0, 5.0, 7.0, 11.0].iter().map(|&q: &f64| (q, q.sqrt())).collect();
        let fit = fit_slope(&root).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!(fit.max_residual < 1e-12);
    }

    #[test]
    fn slope_of_perturbed_data() {
        let data: Vec<(f64, f64)> = [3.0f64, 5.0, 7.0, 11.0, 13.0]
            .iter()
            .enumerate()
            .map(|(i, &q)| (q, 1.7 * q.sqrt() * (1.0 + if i % 2 == 0 { 0.05 } else { -0.05 })))
            .collect();
        let fit = fit_slope(&data).unwrap();
        assert!((0.4..=0.6).contains(&fit.slope));
        let (lo, hi) = fit.slope_ci();
        assert!(lo <= fit.slope && fit.slope <= hi);
    }

    #[test]
    fn slope_rejects_bad_data() {
        assert!(fit_slope(&[(3.0, 1.0), (5.0, 1.0)]).is_err());
        assert!(fit_slope(&[(3.0, 1.0), (5.0, 0.0), (7.0, 1.0)]).is_err());
        assert!(fit_slope(&[(3.0, 1.0), (5.0, -1.0), (7.0, 1.0)]).is_err());
    }

    #[test]
    fn spec_validation() {
        let mut spec = circle_spec("1/2,1/2");
        spec.primes = vec![3, 5];
        assert!(spec.validate().is_err());
        spec.primes = vec![5, 3, 7];
        assert!(spec.validate().is_err());
        spec.primes = vec![3, 9, 11];
        assert!(spec.validate().is_err());
        spec.primes = vec![3, 5, 1499];
        assert!(matches!(spec.validate(), Err(Error::CapExceeded { q: 1499, .. })));
        let mut cone = SweepSpec::new(VarietySpec::Cone, 4, "3/4,1/2".parse().unwrap(), vec![5, 7, 13]);
        assert!(cone.validate().is_err());
        cone.allow_minus_one_nonsquare = true;
        assert!(cone.validate().is_ok());
        assert!(cone.in_open_regime());
    }

    #[test]
    fn variety_names() {
        for s in ["sphere", "sphere:2", "paraboloid", "cone"] {
            assert_eq!(s.parse::<VarietySpec>().unwrap().to_string(), s);
        }
        assert_eq!("circle".parse::<VarietySpec>().unwrap(), VarietySpec::Sphere { j: 1 });
        assert!("torus".parse::<VarietySpec>().is_err());
    }

    fn eta(a: i64, q: i64) -> i64 {
        let a = a.rem_euclid(q);
        let mut x = 1;
        for _ in 0..(q - 1) / 2 {
            x = x * a % q;
        }
        if x == 1 { 1 } else { -1 }
    }

    /// Classical count of `x_1^2 + ... + x_d^2 = 1`.
    fn unit_sphere_size(q: i64, d: u32) -> f64 {
        let qf = q as f64;
        if d % 2 == 1 {
            qf.powi(d as i32 - 1) + qf.powi((d as i32 - 1) / 2) * eta((-1i64).pow((d - 1) / 2), q) as f64
        } else {
            qf.powi(d as i32 - 1) - qf.powi((d as i32 - 2) / 2) * eta((-1i64).pow(d / 2), q) as f64
        }
    }

    #[test]
    fn delta_slope_matches_the_counting_oracle() {
        for (d, point, primes) in [
            (2u32, "3/4,1/2", vec![3u64, 5, 7, 11, 13]),
            (3, "1,1/2", vec![3, 5, 7, 11]),
        ] {
            let mut spec =
                SweepSpec::new(VarietySpec::Sphere { j: 1 }, d as usize, point.parse().unwrap(), primes.clone());
            spec.method = NormMethod::Delta;
            let result = run_sweep(&spec).unwrap();
            let (p, _) = spec.point.exponents().unwrap();
            let oracle: Vec<(f64, f64)> = primes
                .iter()
                .map(|&q| {
                    let qf = q as f64;
                    (qf, qf.powf(d as f64 * p.inv_f64()) / unit_sphere_size(q as i64, d))
                })
                .collect();
            for (row, (_, value)) in result.rows.iter().zip(&oracle) {
                assert!((row.lower - value).abs() < 1e-10 * value);
                assert_eq!(row.method, "delta");
            }
            let expected = fit_slope(&oracle).unwrap().slope;
            assert!((result.fit.slope - expected).abs() < 1e-9);
            assert_eq!(result.verdict, Verdict::Growing);
        }
    }

    #[test]
    fn sweep_rows_and_round_trip() {
        let result = run_sweep(&circle_spec("1,1/2")).unwrap();
        assert_eq!(result.rows.len(), 5);
        assert!(result.rows.iter().all(|r| r.method == "endpoint-exact"));
        let csv = to_csv(&result).unwrap();
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("q,d,variety,inv_p,inv_r,lower,upper,method,witness_hash,seed\n"));
        let json = to_json(&result).unwrap();
        assert_eq!(from_json(&json).unwrap(), result);
        assert_eq!(to_json(&run_sweep(&circle_spec("1,1/2")).unwrap()).unwrap(), json);
    }

    #[test]
    fn emit_reports_the_path() {
        let result = run_sweep(&circle_spec("1/2,1/2")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("out.csv");
        emit(&result, OutputFormat::Csv, &good).unwrap();
        assert_eq!(fs::read_to_string(&good).unwrap(), to_csv(&result).unwrap());
        let bad = dir.path().join("missing").join("out.json");
        match emit(&result, OutputFormat::Json, &bad) {
            Err(Error::Io { path, .. }) => assert_eq!(path, bad),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scan_covers_the_grid() {
        let mut spec = circle_spec("0,0");
        spec.primes = vec![3, 5, 7];
        spec.budget = 16;
        let cells = scan(&spec, 2).unwrap();
        assert_eq!(cells.len(), 9);
        let csv = scan_to_csv(&cells).unwrap();
        assert_eq!(csv.lines().count(), 10);
    }

    proptest! {
        #[test]
        fn fitted_slope_recovers_power_laws(s in -2.0f64..2.0, c in 0.1f64..10.0) {
            let data: Vec<(f64, f64)> = [3.0f64, 5.0, 7.0, 11.0].iter().map(|&q| (q, c * q.powf(s))).collect();
            let fit = fit_slope(&data).unwrap();
            prop_assert!((fit.slope - s).abs() < 1e-9);
            prop_assert!((fit.intercept - c.ln()).abs() < 1e-9);
        }
    }
}
