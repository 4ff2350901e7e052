//! Exact geometry on the exponent square `(1/p, 1/r) in [0, 1]^2`.
//!
//! Regions are convex polygons with arbitrary-precision rational vertices.
//! Membership is decided exactly. Boundary points belong to a region unless
//! they are flagged markers, which carry their own classification.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{Exponent, Rational};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn from_small(r: Rational) -> BigRational {
    rat(*r.numer(), *r.denom())
}

fn parse_big(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidParameter(format!("not a rational: {s}"));
    let (n, d) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

fn show(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A point `(1/p, 1/r)` of the exponent square.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExponentPair {
    inv_p: BigRational,
    inv_r: BigRational,
}

impl ExponentPair {
    pub fn new(inv_p: BigRational, inv_r: BigRational) -> Result<Self> {
        let inside = |x: &BigRational| !x.is_negative() && *x <= BigRational::one();
        if !inside(&inv_p) || !inside(&inv_r) {
            return Err(Error::InvalidParameter(format!(
                "({}, {}) is outside [0, 1]^2",
                show(&inv_p),
                show(&inv_r)
            )));
        }
        Ok(ExponentPair { inv_p, inv_r })
    }

    /// `(a/b, c/e)` from small integers.
    pub fn from_ratios(a: i64, b: i64, c: i64, e: i64) -> Result<Self> {
        if b == 0 || e == 0 {
            return Err(Error::InvalidParameter("zero denominator".into()));
        }
        Self::new(rat(a, b), rat(c, e))
    }

    pub fn from_exponents(p: Exponent, r: Exponent) -> Result<Self> {
        Self::new(from_small(p.inv()), from_small(r.inv()))
    }

    pub fn inv_p(&self) -> &BigRational {
        &self.inv_p
    }

    pub fn inv_r(&self) -> &BigRational {
        &self.inv_r
    }

    /// The exponents `(p, r)`; fails when a coordinate does not fit in `i64`.
    pub fn exponents(&self) -> Result<(Exponent, Exponent)> {
        let small = |x: &BigRational| -> Result<Exponent> {
            let n = i64::try_from(x.numer()).ok();
            let d = i64::try_from(x.denom()).ok();
            match (n, d) {
                (Some(n), Some(d)) => Exponent::from_inv(Rational::new(n, d)),
                _ => Err(Error::InvalidParameter(format!("{} is too large", show(x)))),
            }
        };
        Ok((small(&self.inv_p)?, small(&self.inv_r)?))
    }

    pub fn to_f64(&self) -> (f64, f64) {
        use num_traits::ToPrimitive;
        (
            self.inv_p.to_f64().unwrap_or(f64::NAN),
            self.inv_r.to_f64().unwrap_or(f64::NAN),
        )
    }
}

impl fmt::Display for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", show(&self.inv_p), show(&self.inv_r))
    }
}

impl FromStr for ExponentPair {
    type Err = Error;

    /// Accepts `a/b,c/e`, optionally wrapped in parentheses.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let (a, b) = t
            .split_once(',')
            .ok_or_else(|| Error::InvalidParameter(format!("expected 1/p,1/r: {s}")))?;
        Self::new(parse_big(a)?, parse_big(b)?)
    }
}

impl Serialize for ExponentPair {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExponentPair {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Twice the signed area of `(a, b, c)`; positive for a left turn.
fn orient(a: &ExponentPair, b: &ExponentPair, c: &ExponentPair) -> BigRational {
    (&b.inv_p - &a.inv_p) * (&c.inv_r - &a.inv_r) - (&b.inv_r - &a.inv_r) * (&c.inv_p - &a.inv_p)
}

/// Counter-clockwise hull without repeated or collinear vertices, starting
/// from the smallest point in `(inv_p, inv_r)` order.
fn convex_hull(mut points: Vec<ExponentPair>) -> Vec<ExponentPair> {
    points.sort();
    points.dedup();
    if points.len() < 3 {
        return points;
    }
    let mut lower: Vec<ExponentPair> = Vec::new();
    for p in &points {
        while lower.len() >= 2 && !orient(&lower[lower.len() - 2], &lower[lower.len() - 1], p).is_positive() {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<ExponentPair> = Vec::new();
    for p in points.iter().rev() {
        while upper.len() >= 2 && !orient(&upper[upper.len() - 2], &upper[upper.len() - 1], p).is_positive() {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// How a region treats a flagged point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarkerStatus {
    /// Only the estimate for indicator inputs is known.
    RestrictedType,
    /// Only the weak-type estimate is known.
    WeakType,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marker {
    pub name: String,
    pub point: ExponentPair,
    pub status: MarkerStatus,
}

/// Which construction produced a region.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RegionKind {
    /// Sufficient region for regular varieties.
    Regular { d: u32 },
    /// Sufficient region for the cone in even dimension.
    EvenCone { d: u32 },
    /// Intersection of the necessary-condition half-planes.
    Necessary { d: u32, alpha: Option<String> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    Interior,
    Boundary,
    ExcludedMarker(MarkerStatus),
    Outside,
}

impl Membership {
    pub fn as_str(self) -> &'static str {
        match self {
            Membership::Interior => "interior",
            Membership::Boundary => "boundary",
            Membership::ExcludedMarker(MarkerStatus::RestrictedType) => "excluded-restricted",
            Membership::ExcludedMarker(MarkerStatus::WeakType) => "excluded-weak",
            Membership::Outside => "outside",
        }
    }
}

/// A closed convex polygon in the exponent square.
///
/// Equality compares the vertex sets and markers, so two regions built
/// differently are equal exactly when they are the same polygon.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Region {
    kind: RegionKind,
    vertices: Vec<ExponentPair>,
    markers: Vec<Marker>,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.markers == other.markers
    }
}

impl Region {
    fn from_points(kind: RegionKind, points: Vec<ExponentPair>, markers: Vec<Marker>) -> Result<Self> {
        let vertices = convex_hull(points);
        if vertices.len() < 3 {
            return Err(Error::InvalidParameter("degenerate region".into()));
        }
        Ok(Region {
            kind,
            vertices,
            markers,
        })
    }

    pub fn kind(&self) -> &RegionKind {
        &self.kind
    }

    /// Counter-clockwise vertices.
    pub fn vertices(&self) -> &[ExponentPair] {
        &self.vertices
    }

    pub fn markers(&self) -> &[Marker] {
        &self.markers
    }

    pub fn marker(&self, name: &str) -> Option<&Marker> {
        self.markers.iter().find(|m| m.name == name)
    }

    /// Same polygon, markers ignored.
    pub fn same_polygon(&self, other: &Region) -> bool {
        self.vertices == other.vertices
    }

    /// Position of `e` relative to the closed polygon, ignoring markers.
    fn locate(&self, e: &ExponentPair) -> Membership {
        let n = self.vertices.len();
        let mut on_edge = false;
        for i in 0..n {
            let o = orient(&self.vertices[i], &self.vertices[(i + 1) % n], e);
            if o.is_negative() {
                return Membership::Outside;
            }
            on_edge |= o.is_zero();
        }
        if on_edge {
            Membership::Boundary
        } else {
            Membership::Interior
        }
    }

    pub fn classify(&self, e: &ExponentPair) -> Membership {
        if let Some(m) = self.markers.iter().find(|m| m.point == *e) {
            return Membership::ExcludedMarker(m.status);
        }
        self.locate(e)
    }

    /// Membership in the closed polygon minus the markers.
    pub fn contains(&self, e: &ExponentPair) -> bool {
        matches!(self.classify(e), Membership::Interior | Membership::Boundary)
    }

    /// True when every vertex of `self` lies in the closed polygon `other`.
    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.vertices.iter().all(|v| other.locate(v) != Membership::Outside)
    }

    /// True when the whole segment `a b` lies on the boundary.
    pub fn segment_on_boundary(&self, a: &ExponentPair, b: &ExponentPair) -> bool {
        let n = self.vertices.len();
        (0..n).any(|i| {
            let (u, v) = (&self.vertices[i], &self.vertices[(i + 1) % n]);
            orient(u, v, a).is_zero()
                && orient(u, v, b).is_zero()
                && self.locate(a) == Membership::Boundary
                && self.locate(b) == Membership::Boundary
        })
    }

    /// Classifies the `(n + 1)^2` points `(i/n, j/n)`.
    pub fn classify_grid(&self, n: u32) -> Result<Vec<(ExponentPair, Membership)>> {
        if n == 0 {
            return Err(Error::InvalidParameter("grid size must be positive".into()));
        }
        let n = n as i64;
        let mut out = Vec::with_capacity(((n + 1) * (n + 1)) as usize);
        for i in 0..=n {
            for j in 0..=n {
                let e = ExponentPair::from_ratios(i, n, j, n)?;
                let m = self.classify(&e);
                out.push((e, m));
            }
        }
        Ok(out)
    }

    /// Intersection with `a x + b y <= c`, where `(x, y) = (1/p, 1/r)`.
    fn clip(self, a: &BigRational, b: &BigRational, c: &BigRational) -> Result<Region> {
        let value = |e: &ExponentPair| a * &e.inv_p + b * &e.inv_r - c;
        let n = self.vertices.len();
        let mut points = Vec::new();
        for i in 0..n {
            let (u, v) = (&self.vertices[i], &self.vertices[(i + 1) % n]);
            let (fu, fv) = (value(u), value(v));
            if !fu.is_positive() {
                points.push(u.clone());
            }
            if (fu.is_negative() && fv.is_positive()) || (fu.is_positive() && fv.is_negative()) {
                let t = &fu / (&fu - &fv);
                points.push(ExponentPair {
                    inv_p: &u.inv_p + &t * (&v.inv_p - &u.inv_p),
                    inv_r: &u.inv_r + &t * (&v.inv_r - &u.inv_r),
                });
            }
        }
        Region::from_points(self.kind, points, self.markers)
    }
}

fn require_dimension(d: u32) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("region needs d >= 2, got {d}")));
    }
    Ok(())
}

/// Hull of `(0,0), (0,1), ((d-1)/d, 1), ((d-1)/d, 1/d)`: where a regular
/// variety has `A_V(p -> r)` bounded independently of `q`.
pub fn region_main1(d: u32) -> Result<Region> {
    require_dimension(d)?;
    let d = d as i64;
    let points = vec![
        ExponentPair::from_ratios(0, 1, 0, 1)?,
        ExponentPair::from_ratios(0, 1, 1, 1)?,
        ExponentPair::from_ratios(d - 1, d, 1, 1)?,
        ExponentPair::from_ratios(d - 1, d, 1, d)?,
    ];
    Region::from_points(RegionKind::Regular { d: d as u32 }, points, Vec::new())
}

/// `P1 = ((d-1)/d, 1/(d-2))`.
pub fn cone_p1(d: u32) -> Result<ExponentPair> {
    require_even_cone(d)?;
    let d = d as i64;
    ExponentPair::from_ratios(d - 1, d, 1, d - 2)
}

/// `P2 = ((d^2-3d+2)/(d^2-2d+2), (d-2)/(d^2-2d+2))`.
pub fn cone_p2(d: u32) -> Result<ExponentPair> {
    require_even_cone(d)?;
    let d = d as i64;
    let den = d * d - 2 * d + 2;
    ExponentPair::from_ratios(d * d - 3 * d + 2, den, d - 2, den)
}

fn require_even_cone(d: u32) -> Result<()> {
    if d < 4 || d % 2 == 1 {
        return Err(Error::InvalidParameter(format!(
            "the cone region needs even d >= 4, got {d}; odd d uses region_main1"
        )));
    }
    Ok(())
}

/// Hull of `(0,0), (0,1), ((d-1)/d, 1), P1, P2` for the cone in even
/// dimension, with `P1` (restricted type) and `P2` (weak type) flagged.
pub fn region_main2(d: u32) -> Result<Region> {
    require_even_cone(d)?;
    let p1 = cone_p1(d)?;
    let p2 = cone_p2(d)?;
    let di = d as i64;
    let points = vec![
        ExponentPair::from_ratios(0, 1, 0, 1)?,
        ExponentPair::from_ratios(0, 1, 1, 1)?,
        ExponentPair::from_ratios(di - 1, di, 1, 1)?,
        p1.clone(),
        p2.clone(),
    ];
    let markers = vec![
        Marker {
            name: "P1".into(),
            point: p1,
            status: MarkerStatus::RestrictedType,
        },
        Marker {
            name: "P2".into(),
            point: p2,
            status: MarkerStatus::WeakType,
        },
    ];
    Region::from_points(RegionKind::EvenCone { d }, points, markers)
}

/// The part of `[0,1]^2` where `1/p <= (d-1)/d` and `1/(p(d-1)) <= 1/r`,
/// further cut by `(d-alpha)/(p(d-1-alpha)) <= 1/r + 1` when `alpha` is
/// given (the variety contains an affine subspace of dimension `alpha`).
pub fn necessary_region(d: u32, alpha: Option<&BigRational>) -> Result<Region> {
    require_dimension(d)?;
    let di = BigRational::from_integer(BigInt::from(d));
    let one = BigRational::one();
    let zero = BigRational::zero();
    let square = vec![
        ExponentPair::from_ratios(0, 1, 0, 1)?,
        ExponentPair::from_ratios(1, 1, 0, 1)?,
        ExponentPair::from_ratios(1, 1, 1, 1)?,
        ExponentPair::from_ratios(0, 1, 1, 1)?,
    ];
    let kind = RegionKind::Necessary {
        d,
        alpha: alpha.map(show),
    };
    let mut region = Region::from_points(kind, square, Vec::new())?;
    // x <= (d-1)/d
    region = region.clip(&one, &zero, &((&di - &one) / &di))?;
    // x / (d-1) - y <= 0
    region = region.clip(&(&one / (&di - &one)), &(-&one), &zero)?;
    if let Some(alpha) = alpha {
        if alpha.is_negative() || *alpha > &di - BigRational::from_integer(BigInt::from(2)) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} must lie in [0, d-2]",
                show(alpha)
            )));
        }
        // (d-alpha)/(d-1-alpha) x - y <= 1
        let slope = (&di - alpha) / (&di - &one - alpha);
        region = region.clip(&slope, &(-&one), &one)?;
    }
    Ok(region)
}

/// True when `e` satisfies `(d-alpha)/(d-1-alpha) * (1/p) = 1/r + 1`.
pub fn on_affine_line(d: u32, alpha: &BigRational, e: &ExponentPair) -> bool {
    let di = BigRational::from_integer(BigInt::from(d));
    let one = BigRational::one();
    let denom = &di - &one - alpha;
    if denom.is_zero() {
        return false;
    }
    (&di - alpha) / denom * &e.inv_p == &e.inv_r + one
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(a: i64, b: i64, c: i64, e: i64) -> ExponentPair {
        ExponentPair::from_ratios(a, b, c, e).unwrap()
    }

    fn half(d: u32) -> BigRational {
        rat(d as i64, 2)
    }

    #[test]
    fn main1_small_dimensions() {
        let r = region_main1(2).unwrap();
        let expected = vec![pt(0, 1, 0, 1), pt(1, 2, 1, 2), pt(1, 2, 1, 1), pt(0, 1, 1, 1)];
        assert_eq!(r.vertices(), expected.as_slice());
        assert!(region_main1(3).unwrap().vertices().contains(&pt(2, 3, 1, 3)));
        for d in 2..=6 {
            assert_eq!(region_main1(d).unwrap().classify(&pt(1, 1, 1, 1)), Membership::Outside);
        }
        assert!(region_main1(1).is_err());
        assert_eq!(r.classify(&pt(1, 2, 1, 2)), Membership::Boundary);
        assert_eq!(r.classify(&pt(1, 4, 1, 2)), Membership::Interior);
    }

    #[test]
    fn main2_markers() {
        let r = region_main2(4).unwrap();
        assert_eq!(r.marker("P1").unwrap().point, pt(3, 4, 1, 2));
        assert_eq!(r.marker("P2").unwrap().point, pt(3, 5, 1, 5));
        assert_eq!(cone_p1(6).unwrap(), pt(5, 6, 1, 4));
        assert_eq!(
            r.classify(&pt(3, 4, 1, 2)),
            Membership::ExcludedMarker(MarkerStatus::RestrictedType)
        );
        assert_eq!(
            r.classify(&pt(3, 5, 1, 5)),
            Membership::ExcludedMarker(MarkerStatus::WeakType)
        );
        assert!(!r.contains(&pt(3, 4, 1, 2)));
        assert!(r.contains(&pt(0, 1, 0, 1)));
        assert!(region_main2(5).is_err());
        assert!(region_main2(2).is_err());
    }

    #[test]
    fn main2_is_strictly_inside_main1() {
        for d in [4, 6] {
            let inner = region_main2(d).unwrap();
            let outer = region_main1(d).unwrap();
            assert!(inner.is_subset_of(&outer));
            assert!(!outer.is_subset_of(&inner));
        }
    }

    #[test]
    fn markers_span_a_boundary_edge() {
        for d in [4, 6] {
            let r = region_main2(d).unwrap();
            let (p1, p2) = (cone_p1(d).unwrap(), cone_p2(d).unwrap());
            assert!(r.segment_on_boundary(&p1, &p2));
            assert!(r.vertices().contains(&p1) && r.vertices().contains(&p2));
        }
    }

    #[test]
    fn necessary_geometry() {
        for d in 2..=6 {
            assert!(region_main1(d).unwrap().same_polygon(&necessary_region(d, None).unwrap()));
            let r = necessary_region(d, None).unwrap();
            assert_ne!(r.classify(&pt(0, 1, 0, 1)), Membership::Outside);
        }
        for d in [4, 6] {
            let alpha = half(d);
            assert!(on_affine_line(d, &alpha, &cone_p2(d).unwrap()));
            assert!(on_affine_line(d, &alpha, &cone_p1(d).unwrap()));
            let r = necessary_region(d, Some(&alpha)).unwrap();
            assert_eq!(r.classify(&cone_p2(d).unwrap()), Membership::Boundary);
            assert!(r.same_polygon(&region_main2(d).unwrap()));
        }
        // 2 * (3/5) - 1 = 1/5
        assert!(on_affine_line(4, &rat(2, 1), &pt(3, 5, 1, 5)));
        assert!(necessary_region(4, Some(&rat(3, 1))).is_err());
        assert!(necessary_region(4, Some(&rat(-1, 1))).is_err());
    }

    #[test]
    fn exterior_point_across_the_marker_edge() {
        let r = region_main2(4).unwrap();
        assert_eq!(r.classify(&pt(3, 4, 1, 4)), Membership::Outside);
        assert_eq!(region_main1(4).unwrap().classify(&pt(3, 4, 1, 4)), Membership::Boundary);
    }

    #[test]
    fn parse_and_serde() {
        let e: ExponentPair = "(3/4, 1/2)".parse().unwrap();
        assert_eq!(e, pt(3, 4, 1, 2));
        assert_eq!(e.to_string(), "3/4,1/2");
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(serde_json::from_str::<ExponentPair>(&json).unwrap(), e);
        assert!("3/2,1/2".parse::<ExponentPair>().is_err());
        let (p, r) = e.exponents().unwrap();
        assert_eq!(p.to_string(), "4/3");
        assert_eq!(r, Exponent::TWO);
        assert_eq!(ExponentPair::from_exponents(p, r).unwrap(), e);
    }

    #[test]
    fn grid_classification_size() {
        let cells = region_main1(2).unwrap().classify_grid(4).unwrap();
        assert_eq!(cells.len(), 25);
        assert!(cells.iter().any(|(_, m)| *m == Membership::Outside));
    }

    proptest! {
        // Oracle: the defining inequalities evaluated directly.
        #[test]
        fn main1_matches_inequalities(d in 2u32..=6, a in 0i64..=60, c in 0i64..=60) {
            let e = pt(a, 60, c, 60);
            let x = rat(a, 60);
            let y = rat(c, 60);
            let di = rat(d as i64, 1);
            let one = BigRational::one();
            let inside = x <= (&di - &one) / &di && &x / (&di - &one) <= y;
            prop_assert_eq!(region_main1(d).unwrap().contains(&e), inside);
        }

        #[test]
        fn main2_matches_inequalities(half_d in 2u32..=3, a in 0i64..=60, c in 0i64..=60) {
            let d = 2 * half_d;
            let e = pt(a, 60, c, 60);
            let x = rat(a, 60);
            let y = rat(c, 60);
            let di = rat(d as i64, 1);
            let one = BigRational::one();
            let alpha = half(d);
            let inside = x <= (&di - &one) / &di
                && &x / (&di - &one) <= y
                && (&di - &alpha) / (&di - &one - &alpha) * &x <= &y + &one;
            let r = region_main2(d).unwrap();
            let marker = e == cone_p1(d).unwrap() || e == cone_p2(d).unwrap();
            prop_assert_eq!(r.contains(&e), inside && !marker);
        }
    }
}
