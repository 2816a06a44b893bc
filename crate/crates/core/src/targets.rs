//! Randomly generated Gaussian and twisted-Gaussian test densities with
//! closed-form moments.
//!
//! A standard-normal `d × r` matrix `A` gives `B = A Aᵀ`; the Gaussian
//! targets are `N(0, C)` with `C` built from `B`, and the twisted targets
//! warp the first `d/10` eigen-coordinates of the `pi1` covariance by a
//! quadratic map with unit Jacobian.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::binio::{read_exact, read_f64s, write_f64s};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{
    gram, quadratic_form, spd_invert, sym_eigen, weighted_gram, DenseMatrix, SymEigen,
};
use crate::rng::{make_rng_stream, StreamPurpose};

/// Anything that can be sampled: an unnormalized log density on `R^d`.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Unnormalized log density; `x.len()` must equal `dim()`.
    fn log_density(&self, x: &[f64]) -> f64;

    /// Exact mean and covariance, when known.
    fn analytic_moments(&self) -> Option<AnalyticMoments> {
        None
    }

    /// Ordered eigendecomposition of the reference covariance, when known.
    fn eigen(&self) -> Option<&SymEigen> {
        None
    }
}

/// Which of the six test densities to build.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TargetKind {
    /// `N(0, (B + I)⁻¹)`, full rank.
    Pi1,
    /// `N(0, (B/d + I)⁻¹)`, well conditioned.
    Pi2,
    /// `N(0, (B + I)⁻¹)` with `r = d/10`.
    Pi3,
    /// Decaying spectrum `(σ⁻² n⁻⁴ + 1)⁻¹` in the `pi1` eigenbasis; `None` means `σ² = 1/d`.
    Pi4 { sigma2: Option<f64> },
    /// Mildly twisted `pi1`.
    Pi5 { b: f64 },
    /// Strongly twisted `pi1`.
    Pi6 { b: f64 },
}

impl TargetKind {
    pub const PI5_DEFAULT_TWIST: f64 = 0.3;
    pub const PI6_DEFAULT_TWIST: f64 = 2.0;

    pub fn tag(&self) -> &'static str {
        match self {
            TargetKind::Pi1 => "pi1",
            TargetKind::Pi2 => "pi2",
            TargetKind::Pi3 => "pi3",
            TargetKind::Pi4 { .. } => "pi4",
            TargetKind::Pi5 { .. } => "pi5",
            TargetKind::Pi6 { .. } => "pi6",
        }
    }

    pub fn is_twisted(&self) -> bool {
        matches!(self, TargetKind::Pi5 { .. } | TargetKind::Pi6 { .. })
    }

    fn code(&self) -> u8 {
        match self {
            TargetKind::Pi1 => 1,
            TargetKind::Pi2 => 2,
            TargetKind::Pi3 => 3,
            TargetKind::Pi4 { .. } => 4,
            TargetKind::Pi5 { .. } => 5,
            TargetKind::Pi6 { .. } => 6,
        }
    }

    fn param(&self) -> f64 {
        match *self {
            TargetKind::Pi4 { sigma2 } => sigma2.unwrap_or(f64::NAN),
            TargetKind::Pi5 { b } | TargetKind::Pi6 { b } => b,
            _ => f64::NAN,
        }
    }

    fn from_code(code: u8, param: f64) -> Result<Self> {
        Ok(match code {
            1 => TargetKind::Pi1,
            2 => TargetKind::Pi2,
            3 => TargetKind::Pi3,
            4 => TargetKind::Pi4 {
                sigma2: (!param.is_nan()).then_some(param),
            },
            5 => TargetKind::Pi5 { b: param },
            6 => TargetKind::Pi6 { b: param },
            other => return Err(Error::Format(format!("unknown target kind code {other}"))),
        })
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for TargetKind {
    type Err = Error;

    /// Parses `pi1`..`pi6` with default parameters.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "pi1" => TargetKind::Pi1,
            "pi2" => TargetKind::Pi2,
            "pi3" => TargetKind::Pi3,
            "pi4" => TargetKind::Pi4 { sigma2: None },
            "pi5" => TargetKind::Pi5 {
                b: Self::PI5_DEFAULT_TWIST,
            },
            "pi6" => TargetKind::Pi6 {
                b: Self::PI6_DEFAULT_TWIST,
            },
            other => return Err(Error::InvalidConfig(format!("unknown target '{other}'"))),
        })
    }
}

/// Exact moments of a target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticMoments {
    pub mean: Vec<f64>,
    pub covariance: DenseMatrix,
    /// Means of the eigen-coordinates `Vᵀx`.
    pub eigen_mean: Vec<f64>,
    /// Variances of the eigen-coordinates `Vᵀx`.
    pub eigen_variance: Vec<f64>,
}

/// `N(0, C)` with its precision and ordered eigendecomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianTarget {
    precision: DenseMatrix,
    covariance: DenseMatrix,
    eigen: SymEigen,
}

impl GaussianTarget {
    /// Builds a zero-mean Gaussian from its covariance.
    pub fn from_covariance(covariance: DenseMatrix) -> Result<Self> {
        let precision = spd_invert(&covariance)?;
        let eigen = sym_eigen(&covariance)?;
        Ok(Self {
            precision,
            covariance,
            eigen,
        })
    }

    /// Builds a zero-mean Gaussian from its precision.
    pub fn from_precision(precision: DenseMatrix) -> Result<Self> {
        let covariance = spd_invert(&precision)?;
        let eigen = sym_eigen(&covariance)?;
        Ok(Self {
            precision,
            covariance,
            eigen,
        })
    }

    pub fn precision(&self) -> &DenseMatrix {
        &self.precision
    }

    pub fn covariance(&self) -> &DenseMatrix {
        &self.covariance
    }

    pub fn eigen_decomposition(&self) -> &SymEigen {
        &self.eigen
    }

    pub fn condition_number(&self) -> f64 {
        self.eigen.condition_number()
    }
}

impl LogDensity for GaussianTarget {
    fn dim(&self) -> usize {
        self.covariance.rows()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        -0.5 * quadratic_form(&self.precision, x).expect("dimension checked by caller")
    }

    fn analytic_moments(&self) -> Option<AnalyticMoments> {
        Some(AnalyticMoments {
            mean: vec![0.0; self.dim()],
            covariance: self.covariance.clone(),
            eigen_mean: vec![0.0; self.dim()],
            eigen_variance: self.eigen.values.clone(),
        })
    }

    fn eigen(&self) -> Option<&SymEigen> {
        Some(&self.eigen)
    }
}

/// Quadratic warp of eigen-coordinates: `φ(z)_i = z_i + b_{i-1} z_{i-1}²` for
/// even 1-based `i ≤ d/10`, identity elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Twist {
    pub b: f64,
    /// `b_i = b σ_i⁻² / √d` at odd 1-based `i < d/10`, zero elsewhere (0-based storage).
    pub coeffs: Vec<f64>,
}

impl Twist {
    /// Coefficients from the ascending eigenvalues `sigma2` of the base covariance.
    pub fn new(b: f64, sigma2: &[f64]) -> Result<Self> {
        let d = sigma2.len();
        check_twist_dim(d)?;
        let mut coeffs = vec![0.0; d];
        let root_d = (d as f64).sqrt();
        // 1-based odd indices 1, 3, …, d/10 − 1 are 0-based 0, 2, …
        for i in (0..d / 10).step_by(2) {
            coeffs[i] = b / sigma2[i] / root_d;
        }
        Ok(Self { b, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn twisted_len(&self) -> usize {
        self.dim() / 10
    }

    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), z.len())?;
        let mut out = z.to_vec();
        for i in (0..self.twisted_len()).step_by(2) {
            out[i + 1] = z[i + 1] + self.coeffs[i] * z[i] * z[i];
        }
        Ok(out)
    }

    pub fn invert(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), y.len())?;
        let mut out = y.to_vec();
        for i in (0..self.twisted_len()).step_by(2) {
            out[i + 1] = y[i + 1] - self.coeffs[i] * y[i] * y[i];
        }
        Ok(out)
    }
}

fn check_twist_dim(d: usize) -> Result<()> {
    if d == 0 || d % 20 != 0 {
        return Err(Error::InvalidDimension {
            dim: d,
            reason: "twisted targets need d divisible by 20".into(),
        });
    }
    Ok(())
}

/// One of the six test densities, immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Target {
    kind: TargetKind,
    seed: u64,
    gaussian: GaussianTarget,
    twist: Option<Twist>,
}

impl Target {
    pub fn kind(&self) -> TargetKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The Gaussian part: the target itself, or the base of a twisted target.
    pub fn gaussian(&self) -> &GaussianTarget {
        &self.gaussian
    }

    pub fn twist(&self) -> Option<&Twist> {
        self.twist.as_ref()
    }

    pub fn condition_number(&self) -> f64 {
        self.gaussian.condition_number()
    }

    /// `φ` in eigen-coordinates; identity for Gaussian targets.
    pub fn twist_map(&self, z: &[f64]) -> Result<Vec<f64>> {
        match &self.twist {
            Some(t) => t.apply(z),
            None => {
                check_dim(self.dim(), z.len())?;
                Ok(z.to_vec())
            }
        }
    }

    pub fn untwist_map(&self, y: &[f64]) -> Result<Vec<f64>> {
        match &self.twist {
            Some(t) => t.invert(y),
            None => {
                check_dim(self.dim(), y.len())?;
                Ok(y.to_vec())
            }
        }
    }

    /// Checked log density.
    pub fn try_log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.log_density(x))
    }
}

impl LogDensity for Target {
    fn dim(&self) -> usize {
        self.gaussian.dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        match &self.twist {
            None => self.gaussian.log_density(x),
            Some(t) => {
                // base density at V φ(Vᵀx) equals -½ Σ φ(Vᵀx)_i² / σ_i²
                let eig = &self.gaussian.eigen;
                let z = eig.vectors.matvec_transpose(x).expect("dimension checked by caller");
                let y = t.apply(&z).expect("dimension checked by caller");
                -0.5 * y
                    .iter()
                    .zip(&eig.values)
                    .fold(0.0, |acc, (yi, s)| acc + yi * yi / s)
            }
        }
    }

    fn analytic_moments(&self) -> Option<AnalyticMoments> {
        let eig = &self.gaussian.eigen;
        let Some(t) = &self.twist else {
            return self.gaussian.analytic_moments();
        };
        let d = self.dim();
        let mut eigen_mean = vec![0.0; d];
        let mut eigen_variance = eig.values.clone();
        for i in (0..d / 10).step_by(2) {
            let b = t.coeffs[i];
            let s = eig.values[i];
            eigen_mean[i + 1] = -b * s;
            eigen_variance[i + 1] = eig.values[i + 1] + 2.0 * b * b * s * s;
        }
        // E[z_i z_j] has no cross terms: Cov(y_{i-1}, y_i - b y_{i-1}²) = -b E[y³] = 0.
        let mean = eig.vectors.matvec(&eigen_mean).expect("square");
        let covariance = weighted_gram(&eig.vectors, &eigen_variance).expect("square");
        Some(AnalyticMoments {
            mean,
            covariance,
            eigen_mean,
            eigen_variance,
        })
    }

    fn eigen(&self) -> Option<&SymEigen> {
        Some(&self.gaussian.eigen)
    }
}

fn invalid(d: usize, reason: &str) -> Error {
    Error::InvalidDimension {
        dim: d,
        reason: reason.into(),
    }
}

fn standard_normal_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = make_rng_stream(seed, 0, StreamPurpose::Target);
    let data = (0..rows * cols)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    DenseMatrix::from_vec(rows, cols, data).expect("sized by construction")
}

fn wishart_precision(d: usize, r: usize, seed: u64, scale: f64) -> DenseMatrix {
    let a = standard_normal_matrix(d, r, seed);
    let mut p = gram(&a);
    if scale != 1.0 {
        p.scale(scale);
    }
    p.add_to_diagonal(1.0);
    p
}

/// Builds target `kind` in dimension `d`; deterministic in `seed`.
pub fn build_target(kind: TargetKind, d: usize, seed: u64) -> Result<Target> {
    if d < 2 {
        return Err(invalid(d, "targets need d >= 2"));
    }
    let (gaussian, twist) = match kind {
        TargetKind::Pi1 => (
            GaussianTarget::from_precision(wishart_precision(d, d, seed, 1.0))?,
            None,
        ),
        TargetKind::Pi2 => (
            GaussianTarget::from_precision(wishart_precision(d, d, seed, 1.0 / d as f64))?,
            None,
        ),
        TargetKind::Pi3 => {
            let r = d / 10;
            if r == 0 {
                return Err(invalid(d, "pi3 needs r = d/10 >= 1"));
            }
            (
                GaussianTarget::from_precision(wishart_precision(d, r, seed, 1.0))?,
                None,
            )
        }
        TargetKind::Pi4 { sigma2 } => {
            let sigma2 = sigma2.unwrap_or(1.0 / d as f64);
            if !(sigma2 > 0.0 && sigma2.is_finite()) {
                return Err(Error::InvalidConfig(format!("pi4 needs sigma2 > 0, got {sigma2}")));
            }
            let base = GaussianTarget::from_precision(wishart_precision(d, d, seed, 1.0))?;
            let vectors = base.eigen.vectors.clone();
            let values: Vec<f64> = (1..=d)
                .map(|n| 1.0 / (1.0 / (sigma2 * (n as f64).powi(4)) + 1.0))
                .collect();
            let inv: Vec<f64> = values.iter().map(|v| 1.0 / v).collect();
            let covariance = weighted_gram(&vectors, &values)?;
            let precision = weighted_gram(&vectors, &inv)?;
            (
                GaussianTarget {
                    precision,
                    covariance,
                    eigen: SymEigen { vectors, values },
                },
                None,
            )
        }
        TargetKind::Pi5 { b } | TargetKind::Pi6 { b } => {
            check_twist_dim(d)?;
            let base = GaussianTarget::from_precision(wishart_precision(d, d, seed, 1.0))?;
            let twist = Twist::new(b, &base.eigen.values)?;
            (base, Some(twist))
        }
    };
    Ok(Target {
        kind,
        seed,
        gaussian,
        twist,
    })
}

/// Magic bytes of the binary target file.
pub const TARGET_MAGIC: &[u8; 8] = b"DIAMTGT\0";
pub const TARGET_FORMAT_VERSION: u32 = 1;

impl Target {
    /// Writes the little-endian binary form: magic, version, kind code, kind
    /// parameter, `d`, seed, then precision, covariance, eigenvalues,
    /// eigenvectors and twist coefficients as raw `f64`.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let d = self.dim();
        w.write_all(TARGET_MAGIC)?;
        w.write_all(&TARGET_FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&[self.kind.code()])?;
        w.write_all(&self.kind.param().to_le_bytes())?;
        w.write_all(&(d as u64).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        write_f64s(w, self.gaussian.precision.as_slice())?;
        write_f64s(w, self.gaussian.covariance.as_slice())?;
        write_f64s(w, &self.gaussian.eigen.values)?;
        write_f64s(w, self.gaussian.eigen.vectors.as_slice())?;
        match &self.twist {
            Some(t) => {
                w.write_all(&[1])?;
                write_f64s(w, &t.coeffs)?;
            }
            None => w.write_all(&[0])?,
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let magic = read_exact::<8, _>(r)?;
        if &magic != TARGET_MAGIC {
            return Err(Error::Format("not a target file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(read_exact::<4, _>(r)?);
        if version != TARGET_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported target file version {version}")));
        }
        let [code] = read_exact::<1, _>(r)?;
        let param = f64::from_le_bytes(read_exact::<8, _>(r)?);
        let kind = TargetKind::from_code(code, param)?;
        let d = u64::from_le_bytes(read_exact::<8, _>(r)?) as usize;
        if d < 2 || d > 1 << 16 {
            return Err(Error::Format(format!("implausible dimension {d}")));
        }
        let seed = u64::from_le_bytes(read_exact::<8, _>(r)?);
        let precision = DenseMatrix::from_vec(d, d, read_f64s(r, d * d)?)?;
        let covariance = DenseMatrix::from_vec(d, d, read_f64s(r, d * d)?)?;
        let values = read_f64s(r, d)?;
        let vectors = DenseMatrix::from_vec(d, d, read_f64s(r, d * d)?)?;
        let [has_twist] = read_exact::<1, _>(r)?;
        let twist = match has_twist {
            0 => None,
            1 => Some(Twist {
                b: param,
                coeffs: read_f64s(r, d)?,
            }),
            other => return Err(Error::Format(format!("bad twist flag {other}"))),
        };
        Ok(Target {
            kind,
            seed,
            gaussian: GaussianTarget {
                precision,
                covariance,
                eigen: SymEigen { vectors, values },
            },
            twist,
        })
    }
}

/// Projection of `x` onto eigenvector `k` of `eigen`.
pub fn eigen_projection(eigen: &SymEigen, k: usize, x: &[f64]) -> f64 {
    let n = eigen.vectors.rows();
    (0..n).fold(0.0, |acc, i| acc + eigen.vectors.get(i, k) * x[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spd_invert;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_per_seed() {
        let a = build_target(TargetKind::Pi1, 4, 7).unwrap();
        let b = build_target(TargetKind::Pi1, 4, 7).unwrap();
        assert_eq!(a.gaussian().covariance(), b.gaussian().covariance());
        let c = build_target(TargetKind::Pi1, 4, 8).unwrap();
        assert_ne!(a.gaussian().covariance(), c.gaussian().covariance());
    }

    #[test]
    fn pi2_is_well_conditioned() {
        let t = build_target(TargetKind::Pi2, 40, 1).unwrap();
        assert!(t.condition_number() < 20.0, "{}", t.condition_number());
    }

    #[test]
    fn pi3_has_low_rank_likelihood() {
        let t = build_target(TargetKind::Pi3, 40, 3).unwrap();
        let mut b = t.gaussian().precision().clone();
        b.add_to_diagonal(-1.0);
        let e = sym_eigen(&b).unwrap();
        let scale = e.values.last().unwrap().abs();
        let nonzero = e.values.iter().filter(|v| v.abs() > 1e-9 * scale).count();
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn pi4_spectrum_and_conditioning() {
        let d = 30;
        let t = build_target(TargetKind::Pi4 { sigma2: None }, d, 2).unwrap();
        let e = sym_eigen(t.gaussian().covariance()).unwrap();
        let sigma2 = 1.0 / d as f64;
        for (n, v) in e.values.iter().enumerate() {
            let expected = 1.0 / (1.0 / (sigma2 * ((n + 1) as f64).powi(4)) + 1.0);
            assert!((v - expected).abs() < 1e-10 * expected.max(1e-3), "{n}: {v} vs {expected}");
        }
        let tighter = build_target(
            TargetKind::Pi4 {
                sigma2: Some(1.0 / (d * d) as f64),
            },
            d,
            2,
        )
        .unwrap();
        assert!(tighter.condition_number() > t.condition_number());
        // π4 shares π1's eigenvectors for the same seed
        let base = build_target(TargetKind::Pi1, d, 2).unwrap();
        assert_eq!(
            base.gaussian().eigen_decomposition().vectors,
            t.gaussian().eigen_decomposition().vectors
        );
    }

    #[test]
    fn log_density_maximized_at_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in [
            TargetKind::Pi1,
            TargetKind::Pi2,
            TargetKind::Pi3,
            TargetKind::Pi4 { sigma2: None },
        ] {
            let t = build_target(kind, 20, 5).unwrap();
            assert_eq!(t.log_density(&[0.0; 20]), 0.0);
            for _ in 0..100 {
                let x: Vec<f64> = (0..20).map(|_| rng.random_range(-3.0..3.0)).collect();
                assert!(t.log_density(&x) <= 0.0);
            }
        }
    }

    #[test]
    fn log_density_matches_hand_inverse() {
        let t = build_target(TargetKind::Pi1, 2, 11).unwrap();
        let c = t.gaussian().covariance();
        let (a, b, d) = (c.get(0, 0), c.get(0, 1), c.get(1, 1));
        let det = a * d - b * b;
        let x = [0.7, -1.3];
        // [[a b][b d]]⁻¹ = [[d -b][-b a]] / det
        let q = (d * x[0] * x[0] - 2.0 * b * x[0] * x[1] + a * x[1] * x[1]) / det;
        assert_abs_diff_eq!(t.log_density(&x), -0.5 * q, epsilon = 1e-10 * q.abs().max(1.0));
        assert!(matches!(
            t.try_log_density(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_twist_is_pi1() {
        let base = build_target(TargetKind::Pi1, 20, 4).unwrap();
        let flat = build_target(TargetKind::Pi5 { b: 0.0 }, 20, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let x: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = base.log_density(&x);
            let b = flat.log_density(&x);
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }
        let m0 = base.analytic_moments().unwrap();
        let m1 = flat.analytic_moments().unwrap();
        assert_eq!(m1.eigen_mean, vec![0.0; 20]);
        assert_eq!(m0.eigen_variance, m1.eigen_variance);
        let diff = m0.covariance.sub(&m1.covariance).unwrap().frobenius_norm();
        assert!(diff < 1e-12 * m0.covariance.frobenius_norm());
    }

    #[test]
    fn twisted_log_density_matches_composition() {
        let t = build_target(TargetKind::Pi6 { b: 2.0 }, 20, 4).unwrap();
        let eig = t.gaussian().eigen_decomposition();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x: Vec<f64> = (0..20).map(|_| rng.random_range(-0.5..0.5)).collect();
            let z = eig.vectors.matvec_transpose(&x).unwrap();
            let y = eig.vectors.matvec(&t.twist_map(&z).unwrap()).unwrap();
            let expected = t.gaussian().log_density(&y);
            let got = t.log_density(&x);
            assert!((got - expected).abs() < 1e-9 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn twist_map_examples() {
        let mut sigma2 = vec![1.0; 20];
        sigma2[0] = 1.0;
        let t = Twist::new(20f64.sqrt(), &sigma2).unwrap();
        assert_abs_diff_eq!(t.coeffs[0], 1.0, epsilon = 1e-15);
        let mut z = vec![0.0; 20];
        z[0] = 2.0;
        let y = t.apply(&z).unwrap();
        assert_eq!(y[1], 4.0);
        assert_eq!(t.invert(&y).unwrap(), z);
        // only the pair (1, 2) is twisted when d = 20
        assert!(t.coeffs[2..].iter().all(|&c| c == 0.0));

        let flat = Twist::new(0.0, &sigma2).unwrap();
        assert_eq!(flat.apply(&z).unwrap(), z);
        assert!(matches!(
            t.apply(&[1.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn twist_roundtrip() {
        let t = build_target(TargetKind::Pi6 { b: 2.0 }, 40, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let z: Vec<f64> = (0..40).map(|_| rng.random_range(-5.0..5.0)).collect();
            let y = t.twist_map(&z).unwrap();
            let back = t.untwist_map(&y).unwrap();
            // exact up to the rounding of one add and one subtract
            for i in 0..40 {
                let tol = 2.0 * f64::EPSILON * (z[i].abs() + (y[i] - z[i]).abs());
                assert!((back[i] - z[i]).abs() <= tol, "{i}: {} vs {}", back[i], z[i]);
            }
            let untwisted = [1, 3];
            for i in (0..40).filter(|i| !untwisted.contains(i)) {
                assert_eq!(back[i], z[i]);
            }
        }
    }

    #[test]
    fn twisted_requires_multiple_of_twenty() {
        for d in [30, 10, 25] {
            assert!(matches!(
                build_target(TargetKind::Pi5 { b: 0.3 }, d, 1),
                Err(Error::InvalidDimension { .. })
            ));
        }
        assert!(matches!(
            build_target(TargetKind::Pi3, 9, 1),
            Err(Error::InvalidDimension { .. })
        ));
        assert!(matches!(
            build_target(TargetKind::Pi1, 1, 1),
            Err(Error::InvalidDimension { .. })
        ));
    }

    #[test]
    fn gaussian_moments_are_covariance() {
        let t = build_target(TargetKind::Pi1, 6, 1).unwrap();
        let m = t.analytic_moments().unwrap();
        assert_eq!(m.mean, vec![0.0; 6]);
        assert_eq!(&m.covariance, t.gaussian().covariance());
        let prod = t
            .gaussian()
            .precision()
            .matmul(t.gaussian().covariance())
            .unwrap();
        let err = prod.sub(&DenseMatrix::identity(6)).unwrap().frobenius_norm();
        assert!(err < 1e-8);
        assert!(spd_invert(t.gaussian().covariance()).is_ok());
    }

    #[test]
    fn file_roundtrip() {
        for kind in [TargetKind::Pi1, TargetKind::Pi4 { sigma2: Some(0.01) }, TargetKind::Pi5 { b: 0.3 }] {
            let t = build_target(kind, 20, 12).unwrap();
            let mut buf = Vec::new();
            t.write_to(&mut buf).unwrap();
            let back = Target::read_from(&mut buf.as_slice()).unwrap();
            assert_eq!(back, t);
        }
        let mut bad = b"NOTATGT\0".to_vec();
        bad.extend([0u8; 64]);
        assert!(matches!(
            Target::read_from(&mut bad.as_slice()),
            Err(Error::Format(_))
        ));
    }
}
