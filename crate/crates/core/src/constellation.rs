//! Finite equiprobable input alphabets.
//!
//! A [`Constellation`] is a set of at least two distinct complex points
//! normalized to unit average energy. Construction also classifies the
//! geometry (all points on a line, a rotated rectangular grid, or general
//! position); the information-theoretic routines exploit that structure.

use crate::error::{Error, Result};
use num_complex::Complex64;

const GEOM_TOL: f64 = 1e-9;

/// Geometric structure of a constellation, detected at construction.
///
/// Mutual information and MMSE over circularly symmetric noise are
/// invariant under rotation, so a rotated grid reduces exactly to two
/// independent one-dimensional alphabets.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Structure {
    /// All points lie on one line: `point = origin + level * axis`.
    Collinear {
        origin: Complex64,
        axis: Complex64,
        levels: Vec<f64>,
    },
    /// After rotation by `-rotation`, the points form the full Cartesian
    /// product `re_levels x im_levels`.
    Product {
        rotation: f64,
        re_levels: Vec<f64>,
        im_levels: Vec<f64>,
    },
    General,
}

/// Finite complex alphabet with equiprobable points and unit average energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    label: String,
    d_min: f64,
    pub(crate) structure: Structure,
}

impl Constellation {
    /// Square M-QAM (M in {4, 16, 64, 256}) scaled to unit average energy.
    ///
    /// The minimum distance of the normalized grid is `sqrt(6 / (M - 1))`.
    pub fn qam(m: usize) -> Result<Self> {
        if ![4, 16, 64, 256].contains(&m) {
            return Err(Error::argument(format!(
                "square QAM size must be one of 4, 16, 64, 256, got {m}"
            )));
        }
        let side = (m as f64).sqrt() as i64;
        let mut points = Vec::with_capacity(m);
        for i in 0..side {
            for q in 0..side {
                points.push(Complex64::new(
                    (2 * i - side + 1) as f64,
                    (2 * q - side + 1) as f64,
                ));
            }
        }
        Self::build(points, format!("qam{m}"))
    }

    /// M-ary phase-shift keying: the M-th roots of unity.
    pub fn psk(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::argument(format!("PSK size must be >= 2, got {m}")));
        }
        let points = (0..m)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64))
            .collect();
        Self::build(points, format!("psk{m}"))
    }

    /// Arbitrary alphabet, rescaled to unit average energy.
    ///
    /// Fails if fewer than two points are given or if two points coincide
    /// within 1e-12 after normalization (a zero minimum distance breaks the
    /// high-SNR behavior of every downstream quantity).
    pub fn custom(points: &[Complex64], label: impl Into<String>) -> Result<Self> {
        Self::build(points.to_vec(), label.into())
    }

    fn build(mut points: Vec<Complex64>, label: String) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::argument("constellation needs at least 2 points"));
        }
        if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::argument("constellation points must be finite"));
        }
        let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        if energy <= 0.0 {
            return Err(Error::argument("constellation has zero average energy"));
        }
        let scale = energy.sqrt().recip();
        for p in &mut points {
            *p *= scale;
        }
        let mut d_min = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                d_min = d_min.min((points[i] - points[j]).norm());
            }
        }
        if d_min < 1e-12 {
            return Err(Error::argument(
                "constellation has (near-)duplicate points; minimum distance must be positive",
            ));
        }
        let structure = detect_structure(&points);
        Ok(Constellation {
            points,
            label,
            d_min,
            structure,
        })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Minimum pairwise distance of the unit-energy alphabet.
    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    /// `log2` of the alphabet size, the mutual-information ceiling in bits.
    pub fn max_bits(&self) -> f64 {
        (self.size() as f64).log2()
    }
}

/// Collects the sorted distinct values of `vals` under the geometry
/// tolerance, or returns `None` if any two values are closer than the
/// tolerance but not identical clusters.
fn cluster(vals: &mut [f64]) -> Vec<f64> {
    vals.sort_unstable_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for &v in vals.iter() {
        match out.last() {
            Some(&last) if (v - last).abs() <= GEOM_TOL => {}
            _ => out.push(v),
        }
    }
    out
}

fn detect_structure(points: &[Complex64]) -> Structure {
    if let Some(s) = detect_collinear(points) {
        return s;
    }
    // Candidate grid orientations come from pairwise directions folded into
    // [0, pi/2); the identity rotation is always tried first.
    let mut angles = vec![0.0];
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = points[j] - points[i];
            let mut a = d.im.atan2(d.re).rem_euclid(std::f64::consts::FRAC_PI_2);
            if a > std::f64::consts::FRAC_PI_2 - 1e-12 {
                a = 0.0;
            }
            if angles.iter().all(|&b| (a - b).abs() > 1e-9) {
                angles.push(a);
            }
        }
    }
    for angle in angles {
        if let Some(s) = detect_product(points, angle) {
            return s;
        }
    }
    Structure::General
}

fn detect_collinear(points: &[Complex64]) -> Option<Structure> {
    let origin = points[0];
    let axis = points
        .iter()
        .map(|p| p - origin)
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))?;
    let axis = axis / axis.norm();
    let mut levels = Vec::with_capacity(points.len());
    for p in points {
        let rel = (p - origin) * axis.conj();
        if rel.im.abs() > GEOM_TOL {
            return None;
        }
        levels.push(rel.re);
    }
    Some(Structure::Collinear {
        origin,
        axis,
        levels,
    })
}

fn detect_product(points: &[Complex64], angle: f64) -> Option<Structure> {
    let rot = Complex64::from_polar(1.0, -angle);
    let rotated: Vec<Complex64> = points.iter().map(|p| p * rot).collect();
    let mut res: Vec<f64> = rotated.iter().map(|p| p.re).collect();
    let mut ims: Vec<f64> = rotated.iter().map(|p| p.im).collect();
    let re_levels = cluster(&mut res);
    let im_levels = cluster(&mut ims);
    if re_levels.len() * im_levels.len() != points.len() {
        return None;
    }
    // every grid combination must be occupied exactly once
    let mut seen = vec![false; points.len()];
    for p in &rotated {
        let i = re_levels
            .iter()
            .position(|&r| (r - p.re).abs() <= GEOM_TOL)?;
        let j = im_levels
            .iter()
            .position(|&r| (r - p.im).abs() <= GEOM_TOL)?;
        let slot = i * im_levels.len() + j;
        if seen[slot] {
            return None;
        }
        seen[slot] = true;
    }
    Some(Structure::Product {
        rotation: angle,
        re_levels,
        im_levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn qam4_geometry() {
        let c = Constellation::qam(4).unwrap();
        assert_eq!(c.size(), 4);
        let inv_sqrt2 = 0.5f64.sqrt();
        for p in c.points() {
            assert_abs_diff_eq!(p.re.abs(), inv_sqrt2, epsilon = 1e-14);
            assert_abs_diff_eq!(p.im.abs(), inv_sqrt2, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(c.d_min(), 2.0f64.sqrt(), epsilon = 1e-12);
        let energy = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 4.0;
        assert_abs_diff_eq!(energy, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn qam16_min_distance() {
        let c = Constellation::qam(16).unwrap();
        assert_abs_diff_eq!(c.d_min(), (6.0f64 / 15.0).sqrt(), epsilon = 1e-12);
        // independent pairwise scan
        let mut scan = f64::INFINITY;
        for i in 0..16 {
            for j in i + 1..16 {
                scan = scan.min((c.points()[i] - c.points()[j]).norm());
            }
        }
        assert_abs_diff_eq!(c.d_min(), scan, epsilon = 0.0);
    }

    #[test]
    fn unsupported_qam_rejected() {
        assert!(Constellation::qam(8).is_err());
        assert!(Constellation::qam(32).is_err());
        assert!(Constellation::qam(2).is_err());
    }

    #[test]
    fn psk_geometry() {
        let bpsk = Constellation::psk(2).unwrap();
        assert_abs_diff_eq!(bpsk.d_min(), 2.0, epsilon = 1e-14);
        let qpsk = Constellation::psk(4).unwrap();
        assert_abs_diff_eq!(qpsk.d_min(), 2.0f64.sqrt(), epsilon = 1e-12);
        let p8 = Constellation::psk(8).unwrap();
        // oracle: direct pairwise scan equals 2 sin(pi/8)
        let mut scan = f64::INFINITY;
        for i in 0..8 {
            for j in i + 1..8 {
                scan = scan.min((p8.points()[i] - p8.points()[j]).norm());
            }
        }
        assert_abs_diff_eq!(p8.d_min(), scan, epsilon = 0.0);
        assert_abs_diff_eq!(scan, 2.0 * (std::f64::consts::PI / 8.0).sin(), epsilon = 1e-12);
        assert!(Constellation::psk(1).is_err());
    }

    #[test]
    fn custom_roundtrip_matches_qam4() {
        let q = Constellation::qam(4).unwrap();
        let c = Constellation::custom(q.points(), "copy").unwrap();
        for (a, b) in q.points().iter().zip(c.points()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(q.d_min(), c.d_min(), epsilon = 1e-12);
    }

    #[test]
    fn duplicate_points_rejected() {
        let pts = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 1e-14)];
        assert!(Constellation::custom(&pts, "dup").is_err());
        assert!(Constellation::custom(&[Complex64::new(1.0, 0.0)], "single").is_err());
    }

    #[test]
    fn structure_detection() {
        assert!(matches!(
            Constellation::psk(2).unwrap().structure,
            Structure::Collinear { .. }
        ));
        assert!(matches!(
            Constellation::qam(16).unwrap().structure,
            Structure::Product { .. }
        ));
        // 4-PSK is a grid rotated by 45 degrees
        match Constellation::psk(4).unwrap().structure {
            Structure::Product { rotation, .. } => {
                assert_abs_diff_eq!(rotation, std::f64::consts::FRAC_PI_4, epsilon = 1e-12)
            }
            s => panic!("expected rotated product, got {s:?}"),
        }
        assert!(matches!(
            Constellation::psk(8).unwrap().structure,
            Structure::General
        ));
        // offset PAM line at an angle
        let line: Vec<Complex64> = (0..4)
            .map(|k| Complex64::new(0.3, 0.1) + Complex64::new(0.5, 0.25) * k as f64)
            .collect();
        assert!(matches!(
            Constellation::custom(&line, "line").unwrap().structure,
            Structure::Collinear { .. }
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn custom_always_unit_energy(
                pts in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..12)
            ) {
                let points: Vec<Complex64> =
                    pts.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
                if let Ok(c) = Constellation::custom(&points, "prop") {
                    let energy = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>()
                        / c.size() as f64;
                    prop_assert!((energy - 1.0).abs() < 1e-12);
                    let mut scan = f64::INFINITY;
                    for i in 0..c.size() {
                        for j in i + 1..c.size() {
                            scan = scan.min((c.points()[i] - c.points()[j]).norm());
                        }
                    }
                    prop_assert!((c.d_min() - scan).abs() < 1e-12 && scan > 0.0);
                }
            }
        }
    }
}
