use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::basis::{eval_expansion, harmonic_degree_order, harmonic_index, num_harmonics, SphereBasis};
use crate::error::{DropletError, Result};

/// Radial-graph perturbation `φ = Σ a_{ℓ,k} Y_{ℓ,k}` of the unit sphere.
///
/// Construction rejects shapes whose sampled sup norm is not below 1/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawShape")]
pub struct ShapeCoeffs {
    n: usize,
    #[serde(rename = "L_max")]
    l_max: usize,
    coeffs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawShape {
    n: usize,
    #[serde(rename = "L_max")]
    l_max: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<RawShape> for ShapeCoeffs {
    type Error = DropletError;

    fn try_from(raw: RawShape) -> Result<Self> {
        ShapeCoeffs::new(raw.n, raw.l_max, raw.coeffs)
    }
}

impl ShapeCoeffs {
    pub fn new(n: usize, l_max: usize, coeffs: Vec<f64>) -> Result<Self> {
        if n != 3 {
            return Err(DropletError::UnsupportedDimension(n));
        }
        if coeffs.len() != num_harmonics(l_max) {
            return Err(DropletError::InvalidParams(format!(
                "expected {} coefficients for L_max={}, got {}",
                num_harmonics(l_max),
                l_max,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(DropletError::InvalidParams("non-finite shape coefficient".into()));
        }
        let shape = Self { n, l_max, coeffs };
        let sup = shape.sup_norm();
        if sup >= 0.5 {
            return Err(DropletError::ShapeTooLarge { sup });
        }
        Ok(shape)
    }

    pub fn zero(l_max: usize) -> Self {
        Self { n: 3, l_max, coeffs: vec![0.0; num_harmonics(l_max)] }
    }

    /// `φ = eps · Y_{ℓ,k}` inside a degree-`l_max` expansion.
    pub fn single_mode(l_max: usize, l: usize, k: i64, eps: f64) -> Result<Self> {
        let mut c = vec![0.0; num_harmonics(l_max.max(l))];
        c[harmonic_index(l, k)] = eps;
        Self::new(3, l_max.max(l), c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zonal(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(j, &c)| c == 0.0 || harmonic_degree_order(j).1 == 0)
    }

    /// Replace the coefficient vector, re-validating the sup norm.
    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(self.n, self.l_max, coeffs)
    }

    /// Same function expressed in a degree-`l_max` expansion (truncating above it).
    pub fn resized(&self, l_max: usize) -> Result<Self> {
        let mut c = vec![0.0; num_harmonics(l_max)];
        let m = c.len().min(self.coeffs.len());
        c[..m].copy_from_slice(&self.coeffs[..m]);
        Self::new(self.n, l_max, c)
    }

    /// Maximum of `|φ|` over a 10× oversampled grid.
    pub fn sup_norm(&self) -> f64 {
        let b = SphereBasis::oversampled(self.l_max);
        let mut v = vec![0.0; b.num_nodes()];
        b.synthesize(&self.coeffs, &mut v, None);
        v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Value of `φ` at a unit vector.
    pub fn eval(&self, point: [f64; 3]) -> f64 {
        eval_expansion(&self.coeffs, point)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

/// Order `s` of a spectral Sobolev norm on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevSpec {
    pub s: f64,
}

impl SobolevSpec {
    pub const L2: SobolevSpec = SobolevSpec { s: 0.0 };
    pub const H_HALF: SobolevSpec = SobolevSpec { s: 0.5 };
    pub const H1: SobolevSpec = SobolevSpec { s: 1.0 };
}

/// `‖φ‖_{H^s} = (Σ (1 + ℓ(ℓ+n−2))^s a²)^{1/2}`.
pub fn sobolev_norm(shape: &ShapeCoeffs, spec: SobolevSpec) -> Result<f64> {
    if ![0.0, 0.5, 1.0].contains(&spec.s) {
        return Err(DropletError::UnsupportedOrder(spec.s));
    }
    let n = shape.n as f64;
    let sum: f64 = shape
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let l = harmonic_degree_order(j).0 as f64;
            (1.0 + l * (l + n - 2.0)).powf(spec.s) * a * a
        })
        .sum();
    Ok(sum.sqrt())
}

/// Deterministic random perturbation with sampled sup norm equal to `amplitude`.
/// Coefficients decay like `(1+ℓ)^{-2}`; constraints are not projected.
pub fn random_shape(seed: u64, l_max: usize, amplitude: f64) -> Result<ShapeCoeffs> {
    if !(0.0..0.5).contains(&amplitude) {
        return Err(DropletError::InvalidParams(format!("amplitude {amplitude} not in [0, 1/2)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c: Vec<f64> = (0..num_harmonics(l_max))
        .map(|j| {
            let l = harmonic_degree_order(j).0 as f64;
            rng.gen_range(-1.0..1.0) / ((1.0 + l) * (1.0 + l))
        })
        .collect();
    let raw = ShapeCoeffs { n: 3, l_max, coeffs: c.clone() };
    let sup = raw.sup_norm();
    let scale = if sup > 0.0 { amplitude / sup } else { 0.0 };
    c.iter_mut().for_each(|v| *v *= scale);
    ShapeCoeffs::new(3, l_max, c)
}

/// Proper rotation of R³ stored as a row-major matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(pub [[f64; 3]; 3]);

impl Rotation {
    /// `(x, y, z) ↦ (y, x, −z)`.
    pub fn swap_xy() -> Self {
        Rotation([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]])
    }

    /// `(x, y, z) ↦ (z, x, y)`.
    pub fn cyclic() -> Self {
        Rotation([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    }

    /// `(x, y, z) ↦ (−z, y, x)`, a quarter turn about the y axis.
    pub fn swap_xz() -> Self {
        Rotation([[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
    }

    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Rotation([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }
}

/// Coefficients of `φ ∘ Rᵀ`, the shape rotated by `rot`.
pub fn rotate_shape(shape: &ShapeCoeffs, rot: &Rotation) -> Result<ShapeCoeffs> {
    rotate_coeffs(shape.coeffs(), rot).and_then(|c| shape.with_coeffs(c))
}

/// Rotate any full-ordering coefficient vector (e.g. a gradient) by `rot`.
pub fn rotate_coeffs(coeffs: &[f64], rot: &Rotation) -> Result<Vec<f64>> {
    let l_max = (coeffs.len() as f64).sqrt() as usize - 1;
    let basis = SphereBasis::new(l_max, 3)?;
    let inv = rot.transpose();
    let vals: Vec<f64> = basis.points.iter().map(|&p| eval_expansion(coeffs, inv.apply(p))).collect();
    Ok(basis.analyze(&vals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip() {
        let s = random_shape(3, 3, 0.1).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"L_max\":3"));
        let back: ShapeCoeffs = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn rejects_large_shapes() {
        let err = ShapeCoeffs::single_mode(2, 2, 0, 2.0).unwrap_err();
        assert!(matches!(err, DropletError::ShapeTooLarge { .. }));
        let bad = r#"{"n":3,"L_max":0,"coeffs":[2.0]}"#;
        assert!(serde_json::from_str::<ShapeCoeffs>(bad).is_err());
    }

    #[test]
    fn rotation_of_degree_one_mode() {
        // Y_{1,0} ∝ z; rotating by swap_xz sends the z axis to -x.
        let s = ShapeCoeffs::single_mode(1, 1, 0, 0.1).unwrap();
        let r = rotate_shape(&s, &Rotation::swap_xz()).unwrap();
        let c = r.coeffs();
        assert!((c[harmonic_index(1, 1)] + 0.1).abs() < 1e-14);
        assert!(c[harmonic_index(1, 0)].abs() < 1e-14);
    }
}
