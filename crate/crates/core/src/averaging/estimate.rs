use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::operator::{OutputNorm, RestrictedAveragingOperator};
use crate::error::{Error, Result};
use crate::exponent::{Exponent, Rational};
use crate::fourier::{GridFunction, MeasureSide};

/// How a bound was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Delta,
    AdjointDelta,
    Subspace,
    Exhaustive,
    Random,
    PowerIteration,
    Svd,
    EndpointExact,
    Interpolation,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Delta => "delta",
            Method::AdjointDelta => "adjoint-delta",
            Method::Subspace => "subspace",
            Method::Exhaustive => "exhaustive",
            Method::Random => "random",
            Method::PowerIteration => "power-iteration",
            Method::Svd => "svd",
            Method::EndpointExact => "endpoint-exact",
            Method::Interpolation => "interpolation",
        }
    }
}

/// Which inputs the supremum ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFamily {
    /// All functions: the operator norm.
    General,
    /// Characteristic functions only: the restricted-type constant.
    Indicators,
}

/// An interval `[lower_bound, upper_bound]` for `A_V(p -> r)`.
#[derive(Clone, Debug, Serialize)]
pub struct NormEstimate {
    pub p: Exponent,
    pub r: Exponent,
    pub lower_bound: f64,
    pub upper_bound: Option<f64>,
    pub method: Method,
    pub family: InputFamily,
    pub output_norm: OutputNorm,
    pub witness_hash: Option<String>,
    #[serde(skip)]
    pub witness: Option<GridFunction>,
}

impl NormEstimate {
    pub(crate) fn from_witness(
        p: Exponent,
        r: Exponent,
        ratio: f64,
        upper_bound: Option<f64>,
        method: Method,
        family: InputFamily,
        output_norm: OutputNorm,
        witness: GridFunction,
    ) -> Self {
        NormEstimate {
            p,
            r,
            lower_bound: ratio,
            upper_bound,
            method,
            family,
            output_norm,
            witness_hash: Some(witness_hash(&witness)),
            witness: Some(witness),
        }
    }

    /// Recomputes `||A_V w||_r / ||w||_p` from the stored witness.
    pub fn reproduce(&self, op: &RestrictedAveragingOperator) -> Result<f64> {
        let witness = self
            .witness
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("estimate has no witness".into()))?;
        op.ratio(witness, self.p, self.r, self.output_norm)
    }

    /// True when lower and upper bounds coincide.
    pub fn is_exact(&self) -> bool {
        self.upper_bound
            .is_some_and(|u| (u - self.lower_bound).abs() <= 1e-9 * u.max(1.0))
    }
}

/// First 16 hex digits of the SHA-256 of the witness values.
pub fn witness_hash(f: &GridFunction) -> String {
    let mut hasher = Sha256::new();
    for v in f.values() {
        hasher.update(v.re.to_le_bytes());
        hasher.update(v.im.to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub(crate) fn real_function(op: &RestrictedAveragingOperator, values: &[f64]) -> GridFunction {
    GridFunction::from_real(op.grid(), MeasureSide::SpaceDx, values).expect("grid-sized")
}

fn check(p: Exponent, r: Exponent) -> Result<()> {
    p.require_admissible()?;
    r.require_admissible()?;
    Ok(())
}

/// `A_V(1 -> r) = q^d max_z ||A_V 1_{z}||_r`, attained at a point mass.
pub fn norm_exact_p1(op: &RestrictedAveragingOperator, r: Exponent) -> Result<NormEstimate> {
    check(Exponent::ONE, r)?;
    let counts = op.overlap_counts();
    let (z, &c) = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("nonempty grid");
    let n = op.size() as f64;
    let value = op.grid_len() as f64 / n * (f64::from(c) / n).powf(r.inv_f64());
    let witness = GridFunction::delta(op.grid(), MeasureSide::SpaceDx, z, 1.0);
    Ok(NormEstimate::from_witness(
        Exponent::ONE,
        r,
        value,
        Some(value),
        Method::EndpointExact,
        InputFamily::General,
        OutputNorm::Strong,
        witness,
    ))
}

/// `A_V(p -> inf) = max_y ||sigma(y - .)||_{L^{p'}(dx)} = (q^d/|V|)^{1/p}`.
pub fn norm_exact_rinf(op: &RestrictedAveragingOperator, p: Exponent) -> Result<NormEstimate> {
    check(p, Exponent::INFINITY)?;
    let grid = op.grid();
    let v = op.variety();
    let n = v.len() as f64;
    let y = v.points()[0];
    // Every row is a translate of the density, so the first row is the max.
    let row: Vec<f64> = (0..grid.len())
        .map(|x| {
            if v.contains_index(grid.sub_index(y, x)) {
                grid.len() as f64 / n
            } else {
                0.0
            }
        })
        .collect();
    let row_norm = crate::fourier::lp_norm_of_magnitudes(
        row.iter().copied(),
        1.0 / grid.len() as f64,
        p.conjugate()?,
    );
    // Equality in Holder: the row raised to p' - 1, an indicator of y - V
    // (a point mass when p = 1).
    let witness = if p == Exponent::ONE {
        GridFunction::delta(grid, MeasureSide::SpaceDx, 0, 1.0)
    } else {
        let support: Vec<f64> = row.iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect();
        real_function(op, &support)
    };
    Ok(NormEstimate::from_witness(
        p,
        Exponent::INFINITY,
        row_norm,
        Some(row_norm),
        Method::EndpointExact,
        InputFamily::General,
        OutputNorm::Strong,
        witness,
    ))
}

/// Largest size `|V| q^d` handled by a dense SVD.
pub const SVD_ENTRY_LIMIT: usize = 4_000_000;
/// Largest `|V|` handled by a dense eigendecomposition of the Gram matrix.
pub const GRAM_SIZE_LIMIT: usize = 2_000;

/// `A_V(2 -> 2)`, the top singular value of `sqrt(q^d/|V|) K` with
/// `K[y, z] = |V|^{-1} [y - z in V]`.
pub fn norm_svd_22(op: &RestrictedAveragingOperator) -> Result<NormEstimate> {
    let v = op.variety();
    let grid = op.grid();
    let n = v.len();
    let big_n = grid.len();
    let scale = (big_n as f64 / n as f64).sqrt() / n as f64;
    let (sigma_max, witness) = if n * big_n <= SVD_ENTRY_LIMIT {
        let mut m = DMatrix::<f64>::zeros(n, big_n);
        for (ky, &y) in v.points().iter().enumerate() {
            for &x in v.points() {
                m[(ky, grid.sub_index(y, x))] = scale;
            }
        }
        let svd = m.svd(false, true);
        let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
        let top: Vec<f64> = v_t.row(0).iter().map(|x| x.abs()).collect();
        (svd.singular_values[0], top)
    } else if n <= GRAM_SIZE_LIMIT {
        // M M^T [y, y'] = (q^d / |V|) |V|^{-2} |V cap (y - y' + V)|.
        let counts = op.overlap_counts();
        let factor = big_n as f64 / (n as f64).powi(3);
        let gram = DMatrix::<f64>::from_fn(n, n, |a, b| {
            f64::from(counts[grid.sub_index(v.points()[a], v.points()[b])]) * factor
        });
        let eig = SymmetricEigen::new(gram);
        let (k, &lambda) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let u: Vec<f64> = eig.eigenvectors.column(k).iter().map(|x| x.abs()).collect();
        (lambda.max(0.0).sqrt(), op.adjoint_real(&u))
    } else {
        return Err(Error::InvalidParameter(format!(
            "|V| = {n} is too large for a dense (2,2) computation; use power iteration"
        )));
    };
    let witness = real_function(op, &witness);
    Ok(NormEstimate::from_witness(
        Exponent::TWO,
        Exponent::TWO,
        sigma_max,
        Some(sigma_max),
        Method::Svd,
        InputFamily::General,
        OutputNorm::Strong,
        witness,
    ))
}

#[derive(Clone, Copy, Debug)]
pub struct BoydOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for BoydOptions {
    fn default() -> Self {
        BoydOptions {
            max_iterations: 200,
            tolerance: 1e-10,
        }
    }
}

/// Duality map of `L^s` applied to a nonnegative vector: `u^{s-1}`, the
/// support for `s = 1`, and one maximizing point for `s = inf`.
fn duality_map(u: &[f64], s: Exponent) -> Vec<f64> {
    if s.is_infinite() {
        let (k, _) = u
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("nonempty");
        let mut out = vec![0.0; u.len()];
        out[k] = 1.0;
        return out;
    }
    if s == Exponent::ONE {
        return u.iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect();
    }
    let peak = u.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return u.to_vec();
    }
    let e = s.value() - 1.0;
    u.iter().map(|&x| (x.max(0.0) / peak).powf(e)).collect()
}

/// Nonlinear power iteration `f <- J_{p'}(A^* J_r(A f))` from a nonnegative
/// start. Returns the best ratio seen and its input.
pub fn boyd_iteration(
    op: &RestrictedAveragingOperator,
    p: Exponent,
    r: Exponent,
    start: Vec<f64>,
    options: BoydOptions,
) -> Result<(f64, Vec<f64>)> {
    check(p, r)?;
    let p_dual = p.conjugate()?;
    let mut f = start;
    let mut best = (op.ratio_real(&f, p, r, OutputNorm::Strong), f.clone());
    let mut previous = best.0;
    for _ in 0..options.max_iterations {
        let u = op.apply_real(&f);
        let g = duality_map(&u, r);
        let h = op.adjoint_real(&g);
        let next = duality_map(&h, p_dual);
        let norm = op.input_norm(&next, p);
        if norm == 0.0 {
            break;
        }
        f = next.iter().map(|x| x / norm).collect();
        let ratio = op.ratio_real(&f, p, r, OutputNorm::Strong);
        if ratio > best.0 {
            best = (ratio, f.clone());
        }
        if (ratio - previous).abs() <= options.tolerance * ratio.max(1.0) {
            break;
        }
        previous = ratio;
    }
    Ok(best)
}

/// `A_V(2 -> 2)` by power iteration from the constant function.
pub fn norm_power_22(op: &RestrictedAveragingOperator) -> Result<NormEstimate> {
    let start = vec![1.0; op.grid_len()];
    let options = BoydOptions {
        max_iterations: 5_000,
        tolerance: 1e-14,
    };
    let (ratio, f) = boyd_iteration(op, Exponent::TWO, Exponent::TWO, start, options)?;
    Ok(NormEstimate::from_witness(
        Exponent::TWO,
        Exponent::TWO,
        ratio,
        None,
        Method::PowerIteration,
        InputFamily::General,
        OutputNorm::Strong,
        real_function(op, &f),
    ))
}

/// Largest grid for the exhaustive indicator oracle.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Maximum of the ratio over all nonempty indicators: the exact
/// restricted-type constant.
pub fn norm_exhaustive_indicators(
    op: &RestrictedAveragingOperator,
    p: Exponent,
    r: Exponent,
    output: OutputNorm,
) -> Result<NormEstimate> {
    check(p, r)?;
    let n = op.grid_len();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "exhaustive search needs q^d <= {EXHAUSTIVE_LIMIT}, got {n}"
        )));
    }
    let mut best = (f64::NEG_INFINITY, 0u64);
    let mut f = vec![0.0; n];
    for mask in 1u64..(1 << n) {
        for (i, slot) in f.iter_mut().enumerate() {
            *slot = if mask >> i & 1 == 1 { 1.0 } else { 0.0 };
        }
        let ratio = op.ratio_real(&f, p, r, output);
        if ratio > best.0 {
            best = (ratio, mask);
        }
    }
    let witness: Vec<f64> = (0..n)
        .map(|i| if best.1 >> i & 1 == 1 { 1.0 } else { 0.0 })
        .collect();
    Ok(NormEstimate::from_witness(
        p,
        r,
        best.0,
        Some(best.0),
        Method::Exhaustive,
        InputFamily::Indicators,
        output,
        real_function(op, &witness),
    ))
}

/// Riesz-Thorin upper bound on a segment between two exact anchors:
/// `N(theta) <= N_0^{1-theta} N_1^theta` along `(1/p, 1/r)`.
pub fn norm_upper_interp(
    p: Exponent,
    r: Exponent,
    anchors: &[NormEstimate],
) -> Result<NormEstimate> {
    check(p, r)?;
    let exact: Vec<&NormEstimate> = anchors
        .iter()
        .filter(|a| {
            matches!(a.method, Method::Svd | Method::EndpointExact)
                && a.family == InputFamily::General
                && a.output_norm == OutputNorm::Strong
                && a.upper_bound.is_some()
        })
        .collect();
    let target = (p.inv(), r.inv());
    let mut best: Option<f64> = None;
    for (i, a) in exact.iter().enumerate() {
        for b in &exact[i..] {
            if let Some(theta) = segment_parameter((a.p.inv(), a.r.inv()), (b.p.inv(), b.r.inv()), target) {
                let t = num_traits::ToPrimitive::to_f64(&theta).unwrap_or(f64::NAN);
                let (na, nb) = (a.upper_bound.unwrap(), b.upper_bound.unwrap());
                let bound = na.powf(1.0 - t) * nb.powf(t);
                best = Some(best.map_or(bound, |x: f64| x.min(bound)));
            }
        }
    }
    let upper = best.ok_or_else(|| {
        Error::InvalidParameter(format!(
            "({}, {}) is not on a segment between exact anchors",
            p.inv(),
            r.inv()
        ))
    })?;
    Ok(NormEstimate {
        p,
        r,
        lower_bound: 0.0,
        upper_bound: Some(upper),
        method: Method::Interpolation,
        family: InputFamily::General,
        output_norm: OutputNorm::Strong,
        witness_hash: None,
        witness: None,
    })
}

/// `theta in [0, 1]` with `target = (1 - theta) a + theta b`, exactly.
fn segment_parameter(
    a: (Rational, Rational),
    b: (Rational, Rational),
    target: (Rational, Rational),
) -> Option<Rational> {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let (tx, ty) = (target.0 - a.0, target.1 - a.1);
    if dx.is_zero() && dy.is_zero() {
        return (tx.is_zero() && ty.is_zero()).then(Rational::zero);
    }
    if dx * ty != dy * tx {
        return None;
    }
    let theta = if !dx.is_zero() { tx / dx } else { ty / dy };
    (theta >= Rational::zero() && theta <= Rational::one()).then_some(theta)
}
