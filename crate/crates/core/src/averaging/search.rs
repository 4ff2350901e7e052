//! Lower bounds for `A_V(p -> r)` from a family of structured and random
//! test functions.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::estimate::{boyd_iteration, real_function, BoydOptions, InputFamily, Method, NormEstimate};
use super::operator::{OutputNorm, RestrictedAveragingOperator};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::varieties::{isotropic_subspace, VarietyKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    /// Maximum number of candidates evaluated; a power-iteration run counts
    /// as one.
    pub budget: usize,
    pub seed: u64,
    pub family: InputFamily,
    pub output: OutputNorm,
    /// Draws per random-set size.
    pub draws: usize,
    pub boyd_starts: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: 512,
            seed: 0,
            family: InputFamily::General,
            output: OutputNorm::Strong,
            draws: 32,
            boyd_starts: 8,
        }
    }
}

/// Largest grid on which single-point flips refine the best indicator.
pub const HILL_CLIMB_LIMIT: usize = 1024;

#[derive(Clone, Debug)]
enum Shape {
    Indicator(Vec<usize>),
    Dense(Vec<f64>),
}

#[derive(Clone, Debug)]
struct Candidate {
    method: Method,
    shape: Shape,
}

impl Candidate {
    fn indicator(method: Method, support: Vec<usize>) -> Self {
        Candidate {
            method,
            shape: Shape::Indicator(support),
        }
    }

    fn values(&self, n: usize) -> Vec<f64> {
        match &self.shape {
            Shape::Indicator(support) => {
                let mut f = vec![0.0; n];
                for &i in support {
                    f[i] = 1.0;
                }
                f
            }
            Shape::Dense(f) => f.clone(),
        }
    }
}

/// Which structured candidates to include.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidateClass {
    Delta,
    AdjointDelta,
    Subspace,
    All,
}

fn delta_candidates(op: &RestrictedAveragingOperator, p: Exponent, r: Exponent) -> Vec<Candidate> {
    // ||A_V 1_{z}||_r / ||1_{z}||_p = q^{d/p} |V|^{-1} (c_z / |V|)^{1/r}, and
    // A_V 1_{z} is constant on its support, so weak and strong norms agree.
    let counts = op.overlap_counts();
    let n = op.size() as f64;
    let score = |c: u32| (op.grid_len() as f64).powf(p.inv_f64()) / n * (f64::from(c) / n).powf(r.inv_f64());
    let (z, _) = counts
        .iter()
        .enumerate()
        .map(|(z, &c)| (z, score(c)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .expect("nonempty grid");
    vec![Candidate::indicator(Method::Delta, vec![z])]
}

fn adjoint_delta_candidates(op: &RestrictedAveragingOperator) -> Vec<Candidate> {
    // A_V^* of a point mass at a in V is a multiple of 1_{a - V}.
    let grid = op.grid();
    let v = op.variety();
    let a = v.points()[0];
    let translate: Vec<usize> = v.points().iter().map(|&w| grid.sub_index(a, w)).collect();
    let negated: Vec<usize> = v.points().iter().map(|&w| grid.neg_index(w)).collect();
    let mut with_origin = v.points().to_vec();
    with_origin.push(0);
    with_origin.sort_unstable();
    with_origin.dedup();
    vec![
        Candidate::indicator(Method::AdjointDelta, translate),
        Candidate::indicator(Method::AdjointDelta, negated),
        Candidate::indicator(Method::AdjointDelta, v.points().to_vec()),
        Candidate::indicator(Method::AdjointDelta, with_origin),
    ]
}

fn subspace_candidates(
    op: &RestrictedAveragingOperator,
    p: Exponent,
    family: InputFamily,
) -> Result<Vec<Candidate>> {
    let grid = op.grid();
    let v = op.variety();
    let d = grid.d();
    let n = grid.len();
    let mut out = vec![Candidate::indicator(Method::Subspace, (0..n).collect())];
    // Coordinate subspaces {x_{k+1} = ... = x_d = 0} and {x_1 = ... = x_k = 0}.
    for k in 1..d {
        let low: Vec<usize> = (0..n).filter(|&i| grid.coords(i)[k..].iter().all(|&c| c == 0)).collect();
        let high: Vec<usize> = (0..n).filter(|&i| grid.coords(i)[..k].iter().all(|&c| c == 0)).collect();
        out.push(Candidate::indicator(Method::Subspace, low));
        out.push(Candidate::indicator(Method::Subspace, high));
    }
    if *v.kind() == VarietyKind::Cone && d >= 4 && d % 2 == 0 {
        if let Some(pi) = isotropic_subspace(grid.q(), d)? {
            out.push(Candidate::indicator(Method::Subspace, pi.points().to_vec()));
            // Dual witness: (A_V^* 1_Pi)^{p'-1}, Pi seen as a subset of V.
            let h: Vec<f64> = v
                .points()
                .iter()
                .map(|&i| if pi.contains_index(i) { 1.0 } else { 0.0 })
                .collect();
            let adj = op.adjoint_real(&h);
            let dual = match family {
                InputFamily::General => vec![dual_power(&adj, p)],
                InputFamily::Indicators => Vec::new(),
            };
            for f in dual {
                out.push(Candidate {
                    method: Method::Subspace,
                    shape: Shape::Dense(f),
                });
            }
            for set in level_sets(&adj) {
                out.push(Candidate::indicator(Method::Subspace, set));
            }
        }
    }
    Ok(out)
}

/// `h^{p'-1}` for nonnegative `h`; the support for `p = inf` and the
/// maximizing points for `p = 1`.
fn dual_power(h: &[f64], p: Exponent) -> Vec<f64> {
    let peak = h.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return h.to_vec();
    }
    if p == Exponent::ONE {
        return h
            .iter()
            .map(|&x| if x >= peak * (1.0 - 1e-12) { 1.0 } else { 0.0 })
            .collect();
    }
    let e = p.conjugate().expect("admissible").value() - 1.0;
    if !e.is_finite() {
        return h.iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect();
    }
    h.iter().map(|&x| (x.max(0.0) / peak).powf(e)).collect()
}

const LEVELS: [f64; 8] = [1.0 - 1e-9, 0.9, 0.75, 0.5, 0.25, 0.1, 0.01, 1e-9];

/// Superlevel sets `{f >= t max f}` at a few relative heights.
fn level_sets(f: &[f64]) -> Vec<Vec<usize>> {
    let peak = f.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Vec::new();
    }
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for t in LEVELS {
        let set: Vec<usize> = (0..f.len()).filter(|&i| f[i] >= t * peak).collect();
        if !set.is_empty() && sets.last() != Some(&set) {
            sets.push(set);
        }
    }
    sets
}

/// Random-set sizes `1, q^{ceil(d/4)}, q^{d/2}, q^{round(3d/4)}, q^d`.
pub fn random_set_sizes(q: u64, d: usize) -> Vec<usize> {
    let qf = q as f64;
    let n = q.pow(d as u32) as usize;
    let mut sizes = vec![
        1,
        q.pow(d.div_ceil(4) as u32) as usize,
        qf.powf(d as f64 / 2.0).round() as usize,
        q.pow((3.0 * d as f64 / 4.0).round() as u32) as usize,
        n,
    ];
    sizes.iter_mut().for_each(|s| *s = (*s).clamp(1, n));
    sizes.dedup();
    sizes
}

fn random_candidates(op: &RestrictedAveragingOperator, draws: usize, rng: &mut ChaCha8Rng) -> Vec<Candidate> {
    let grid = op.grid();
    let n = grid.len();
    let mut out = Vec::new();
    for size in random_set_sizes(grid.q().get(), grid.d()) {
        // Every full-size draw is the whole space.
        let count = if size == n { 1 } else { draws };
        for _ in 0..count {
            let mut set = sample(rng, n, size).into_vec();
            set.sort_unstable();
            out.push(Candidate::indicator(Method::Random, set));
        }
    }
    out
}

fn boyd_starts(op: &RestrictedAveragingOperator, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = op.grid_len();
    let mut starts = Vec::with_capacity(count);
    let mut delta = vec![0.0; n];
    delta[0] = 1.0;
    starts.push(delta);
    starts.push(vec![1.0; n]);
    while starts.len() < count {
        starts.push((0..n).map(|_| rng.gen_range(0.0..1.0)).collect());
    }
    starts.truncate(count);
    starts
}

/// Evaluates candidates in parallel; ties go to the earliest candidate.
fn best_of(
    op: &RestrictedAveragingOperator,
    candidates: &[Candidate],
    p: Exponent,
    r: Exponent,
    output: OutputNorm,
) -> Option<(f64, usize)> {
    let n = op.grid_len();
    let ratios: Vec<f64> = candidates
        .par_iter()
        .map(|c| op.ratio_real(&c.values(n), p, r, output))
        .collect();
    ratios
        .iter()
        .enumerate()
        .fold(None, |best: Option<(f64, usize)>, (i, &x)| match best {
            Some((b, _)) if b >= x => best,
            _ => Some((x, i)),
        })
}

/// Best ratio over the chosen candidate class.
pub fn norm_search(
    op: &RestrictedAveragingOperator,
    p: Exponent,
    r: Exponent,
    options: &SearchOptions,
) -> Result<NormEstimate> {
    norm_search_class(op, p, r, options, CandidateClass::All)
}

pub fn norm_search_class(
    op: &RestrictedAveragingOperator,
    p: Exponent,
    r: Exponent,
    options: &SearchOptions,
    class: CandidateClass,
) -> Result<NormEstimate> {
    p.require_admissible()?;
    r.require_admissible()?;
    if options.budget == 0 {
        return Err(Error::InvalidParameter("search budget must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut candidates = Vec::new();
    if matches!(class, CandidateClass::Delta | CandidateClass::All) {
        candidates.extend(delta_candidates(op, p, r));
    }
    if matches!(class, CandidateClass::AdjointDelta | CandidateClass::All) {
        candidates.extend(adjoint_delta_candidates(op));
    }
    if matches!(class, CandidateClass::Subspace | CandidateClass::All) {
        candidates.extend(subspace_candidates(op, p, options.family)?);
    }
    if class == CandidateClass::All {
        candidates.extend(random_candidates(op, options.draws, &mut rng));
    }
    candidates.truncate(options.budget);
    let mut used = candidates.len();

    if class == CandidateClass::All {
        let starts = boyd_starts(op, options.boyd_starts.min(options.budget - used), &mut rng);
        used += starts.len();
        for start in starts {
            let (_, f) = boyd_iteration(op, p, r, start, BoydOptions::default())?;
            match options.family {
                InputFamily::General => candidates.push(Candidate {
                    method: Method::PowerIteration,
                    shape: Shape::Dense(f),
                }),
                InputFamily::Indicators => {
                    for set in level_sets(&f) {
                        if used >= options.budget {
                            break;
                        }
                        used += 1;
                        candidates.push(Candidate::indicator(Method::PowerIteration, set));
                    }
                }
            }
        }
    }

    let (mut ratio, index) = best_of(op, &candidates, p, r, options.output)
        .ok_or_else(|| Error::InvalidParameter("no candidates within the budget".into()))?;
    let mut method = candidates[index].method;
    let mut f = candidates[index].values(op.grid_len());

    if options.family == InputFamily::Indicators && class == CandidateClass::All {
        let before = ratio;
        (ratio, f) = hill_climb(op, p, r, options, ratio, f, used);
        if ratio > before {
            method = Method::Random;
        }
    }
    Ok(NormEstimate::from_witness(
        p,
        r,
        ratio,
        None,
        method,
        options.family,
        options.output,
        real_function(op, &f),
    ))
}

/// Single-point flips of an indicator, keeping strict improvements.
fn hill_climb(
    op: &RestrictedAveragingOperator,
    p: Exponent,
    r: Exponent,
    options: &SearchOptions,
    mut ratio: f64,
    mut f: Vec<f64>,
    mut used: usize,
) -> (f64, Vec<f64>) {
    let n = op.grid_len();
    if n > HILL_CLIMB_LIMIT {
        return (ratio, f);
    }
    let mut improved = true;
    while improved && used < options.budget {
        improved = false;
        for i in 0..n {
            if used >= options.budget {
                break;
            }
            f[i] = 1.0 - f[i];
            used += 1;
            let trial = op.ratio_real(&f, p, r, options.output);
            if trial > ratio * (1.0 + 1e-12) {
                ratio = trial;
                improved = true;
            } else {
                f[i] = 1.0 - f[i];
            }
        }
    }
    (ratio, f)
}
