//! Empirical constants for the inequalities that split the averaging
//! operator into a constant part and an oscillatory part.

use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::operator::{OutputNorm, RestrictedAveragingOperator};
use super::search::random_set_sizes;
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::fourier::{
    fourier_transform, inverse_fourier_transform, GridFunction, MeasureSide, SurfaceFunction,
};
use crate::varieties::{isotropic_subspace, Variety, VarietyKind};

/// One inequality of the splitting argument, named by what it bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditCase {
    /// `||f * 1||_{L^d(V)} <= ||f||_{L^{d/(d-1)}}`.
    ConstantPart,
    /// `||f * K^||_{L^inf(V)} <= C q ||f||_{L^1}`.
    OscillatoryL1ToLinf,
    /// `||f * K^||_{L^2(V)} <= C q^{(2-d)/2} ||f||_{L^2}`.
    OscillatoryL2,
    /// Cone, even d: `||E^v K||^2_{L^2(dm)} <= C |E|^{(d+2)/d} q^{1-2d}`.
    ConeSetEnergy,
    /// Cone, even d, `F` inside `C`: `||F^v H||^2_{L^2(dm)} <= C |F|^{(d+2)/d} q^{-2d-1}`.
    ConeSubsetEnergy,
}

impl AuditCase {
    fn needs_even_cone(self) -> bool {
        matches!(self, AuditCase::ConeSetEnergy | AuditCase::ConeSubsetEnergy)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub case: AuditCase,
    /// Largest measured LHS/RHS.
    pub constant: f64,
    /// Largest ratio over sets with `|E| <= q^{d/2}`.
    pub small_sets: Option<f64>,
    /// Largest ratio over sets with `|E| >= q^{d/2}`.
    pub large_sets: Option<f64>,
    /// Size of the set attaining `constant`.
    pub witness_size: usize,
    pub candidates: usize,
}

/// Sets used by the audit: a point, `Pi` when available, the whole domain,
/// and random sets at geometric sizes.
fn audit_sets(
    op: &RestrictedAveragingOperator,
    inside_variety: bool,
    draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>> {
    let v = op.variety();
    let grid = op.grid();
    let domain: Vec<usize> = if inside_variety {
        v.points().to_vec()
    } else {
        (0..grid.len()).collect()
    };
    let mut sets = vec![vec![domain[0]], domain.clone()];
    if *v.kind() == VarietyKind::Cone && grid.d() >= 4 && grid.d() % 2 == 0 {
        if let Some(pi) = isotropic_subspace(grid.q(), grid.d())? {
            sets.push(pi.points().to_vec());
        }
    }
    let n = domain.len();
    let mut sizes: Vec<usize> = random_set_sizes(grid.q().get(), grid.d())
        .into_iter()
        .map(|s| s.min(n))
        .collect();
    sizes.dedup();
    for size in sizes {
        if size == n {
            continue;
        }
        for _ in 0..draws {
            let mut set: Vec<usize> = sample(rng, n, size).into_iter().map(|k| domain[k]).collect();
            set.sort_unstable();
            sets.push(set);
        }
    }
    Ok(sets)
}

pub fn split_estimate_audit(
    op: &RestrictedAveragingOperator,
    case: AuditCase,
    draws: usize,
    seed: u64,
) -> Result<AuditResult> {
    let v = op.variety();
    let grid = op.grid();
    let d = grid.d();
    if case.needs_even_cone() && (*v.kind() != VarietyKind::Cone || d % 2 == 1 || d < 4) {
        return Err(Error::InvalidParameter(format!(
            "{case:?} applies to the cone in even dimension d >= 4"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets = audit_sets(op, case == AuditCase::ConeSubsetEnergy, draws, &mut rng)?;
    let q = grid.q().get() as f64;
    let df = d as f64;
    let n = grid.len();
    let sigma = v.sigma_check();
    let density = v.len() as f64 / n as f64;
    let threshold = q.powf(df / 2.0);

    let ratio_of = |set: &[usize]| -> Result<f64> {
        let size = set.len() as f64;
        let f = GridFunction::indicator(grid, MeasureSide::SpaceDx, set);
        let real: Vec<f64> = f.real_parts();
        let mass = size / n as f64;
        Ok(match case {
            AuditCase::ConstantPart => {
                let p = Exponent::finite(d as i64, d as i64 - 1)?;
                // f * 1 is the constant mass of f, and ||1||_{L^d(V)} = 1.
                mass / op.input_norm(&real, p)
            }
            AuditCase::OscillatoryL1ToLinf | AuditCase::OscillatoryL2 => {
                // f * K^ = A_V f - (integral of f).
                let out: Vec<f64> = op.apply_real(&real).into_iter().map(|x| x - mass).collect();
                if case == AuditCase::OscillatoryL1ToLinf {
                    op.output_norm(&out, Exponent::INFINITY, OutputNorm::Strong) / (q * mass)
                } else {
                    op.output_norm(&out, Exponent::TWO, OutputNorm::Strong)
                        / (q.powf((2.0 - df) / 2.0) * op.input_norm(&real, Exponent::TWO))
                }
            }
            AuditCase::ConeSetEnergy | AuditCase::ConeSubsetEnergy => {
                let ev = inverse_fourier_transform(&f)?;
                let scale = if case == AuditCase::ConeSetEnergy { 1.0 } else { density };
                let energy: f64 = ev.values()[1..]
                    .iter()
                    .zip(&sigma.values()[1..])
                    .map(|(e, s)| e.norm_sqr() * (s * scale).norm_sqr())
                    .sum();
                let exponent = if case == AuditCase::ConeSetEnergy { 1.0 - 2.0 * df } else { -2.0 * df - 1.0 };
                energy / (size.powf((df + 2.0) / df) * q.powf(exponent))
            }
        })
    };

    let mut constant = f64::NEG_INFINITY;
    let mut witness_size = 0;
    let mut small: Option<f64> = None;
    let mut large: Option<f64> = None;
    for set in &sets {
        let ratio = ratio_of(set)?;
        let size = set.len() as f64;
        if ratio > constant {
            constant = ratio;
            witness_size = set.len();
        }
        if size <= threshold {
            small = Some(small.map_or(ratio, |x| x.max(ratio)));
        }
        if size >= threshold {
            large = Some(large.map_or(ratio, |x| x.max(ratio)));
        }
    }
    Ok(AuditResult {
        case,
        constant,
        small_sets: small,
        large_sets: large,
        witness_size,
        candidates: sets.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictionAudit {
    /// `(q^{d-1} / |V|)^{1/2}`, the exact constant.
    pub bound: f64,
    /// Largest `||g^||_{L^2(V)} / (q^{1/2} ||g||_{L^2(dm)})` over random `g`.
    pub max_random_ratio: f64,
    /// The same ratio at `g = (f sigma)^v`.
    pub attained_ratio: f64,
    /// Largest relative error of `||(f sigma)^v||_{dm} = q^{d/2} |V|^{-1/2} ||f||_{L^2(V)}`.
    pub extension_identity_error: f64,
}

/// Restriction of `g^` to `V` from `L^2(dm)` to `L^2(V, sigma)`.
pub fn restriction_l2_audit(variety: &Arc<Variety>, draws: usize, seed: u64) -> Result<RestrictionAudit> {
    let grid = variety.grid();
    let q = grid.q().get() as f64;
    let n = grid.len() as f64;
    let size = variety.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random_complex = |len: usize| -> Vec<Complex64> {
        (0..len)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    };
    let ratio = |g: &GridFunction| -> Result<f64> {
        let hat = fourier_transform(g)?;
        let restricted = SurfaceFunction::restrict(variety.clone(), &hat)?;
        Ok(restricted.lp_norm(Exponent::TWO)? / (q.sqrt() * g.lp_norm(Exponent::TWO)?))
    };

    let mut max_random_ratio: f64 = 0.0;
    for _ in 0..draws {
        let g = GridFunction::new(grid, MeasureSide::FreqDm, random_complex(grid.len()))?;
        max_random_ratio = max_random_ratio.max(ratio(&g)?);
    }

    let mut extension_identity_error: f64 = 0.0;
    let mut attained_ratio: f64 = 0.0;
    for _ in 0..draws.max(1) {
        let f = SurfaceFunction::new(variety.clone(), random_complex(variety.len()))?;
        let f_sigma = f.extend_by_zero().scale(n / size);
        let ext = inverse_fourier_transform(&f_sigma)?;
        let lhs = ext.lp_norm(Exponent::TWO)?;
        let rhs = n.sqrt() / size.sqrt() * f.lp_norm(Exponent::TWO)?;
        extension_identity_error = extension_identity_error.max((lhs - rhs).abs() / rhs);
        attained_ratio = attained_ratio.max(ratio(&ext)?);
    }
    Ok(RestrictionAudit {
        bound: (n / q / size).sqrt(),
        max_random_ratio,
        attained_ratio,
        extension_identity_error,
    })
}
