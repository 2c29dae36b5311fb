//! On-site potentials, the bump family, generating functions H_j and their
//! partial derivatives, and grid estimation of Hölder norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the smooth bump used by the compactly supported potentials.
///
/// `Mollifier` is exp(1 - 1/(1-t^2)) on |t| < 1 and exactly 0 outside,
/// normalized so the peak value is 1 at t = 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BumpProfile {
    Mollifier,
}

impl BumpProfile {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            BumpProfile::Mollifier => {
                if t.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - t * t)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn deriv(self, t: f64) -> f64 {
        match self {
            BumpProfile::Mollifier => {
                if t.abs() < 1.0 {
                    let s = 1.0 - t * t;
                    self.eval(t) * (-2.0 * t / (s * s))
                } else {
                    0.0
                }
            }
        }
    }
}

/// A 1-periodic on-site potential. The bump variant has peak value 1/n at
/// x0 and support radius R = n^{-1/r}; it vanishes exactly outside the
/// support. `Zero` and `Constant` cover the integrable and degenerate cases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    Zero,
    Constant(f64),
    Bump {
        n: u64,
        r: f64,
        x0: f64,
        radius: f64,
        profile: BumpProfile,
    },
}

/// Signed offset from x0 to x on the circle, reduced into [-1/2, 1/2).
pub fn periodic_offset(x: f64, x0: f64) -> f64 {
    let mut d = (x - x0).rem_euclid(1.0);
    if d >= 0.5 {
        d -= 1.0;
    }
    d
}

impl Potential {
    /// Bump potential with peak 1/n at x0 and support radius n^{-1/r}.
    pub fn bump(n: u64, r: f64, x0: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("bump requires n >= 1".into()));
        }
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::InvalidParameter(format!("bump requires r > 0, got {r}")));
        }
        if !(0.0..1.0).contains(&x0) {
            return Err(Error::InvalidParameter(format!("bump center x0 = {x0} outside [0,1)")));
        }
        let radius = (1.0 / n as f64).powf(1.0 / r);
        if radius >= 0.5 {
            return Err(Error::DegenerateSupport { n, r, radius });
        }
        Ok(Potential::Bump {
            n,
            r,
            x0,
            radius,
            profile: BumpProfile::Mollifier,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant(c) => *c,
            Potential::Bump {
                n, x0, radius, profile, ..
            } => {
                let d = periodic_offset(x, *x0);
                if d.abs() >= *radius {
                    0.0
                } else {
                    profile.eval(d / radius) / *n as f64
                }
            }
        }
    }

    /// Analytic derivative of the potential; zero outside the support.
    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            Potential::Zero | Potential::Constant(_) => 0.0,
            Potential::Bump {
                n, x0, radius, profile, ..
            } => {
                let d = periodic_offset(x, *x0);
                if d.abs() >= *radius {
                    0.0
                } else {
                    profile.deriv(d / radius) / (*n as f64 * radius)
                }
            }
        }
    }

    pub fn support_radius(&self) -> Option<f64> {
        match self {
            Potential::Bump { radius, .. } => Some(*radius),
            _ => None,
        }
    }

    pub fn center(&self) -> Option<f64> {
        match self {
            Potential::Bump { x0, .. } => Some(*x0),
            _ => None,
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant(c) => *c,
            Potential::Bump { n, .. } => 1.0 / *n as f64,
        }
    }
}

/// Construct a member of the bump family; alias kept close to the math.
pub fn make_bump_potential(n: u64, r: f64, x0: f64) -> Result<Potential> {
    Potential::bump(n, r, x0)
}

/// Grid estimate of the C^alpha Hölder norm sup|v| + [v]_alpha.
///
/// The sample set is a uniform grid over the period plus 257 points across
/// the bump support (the support shrinks like n^{-1/r}; without the refined
/// samples a uniform grid misses it entirely). The estimate converges from
/// below as `grid_size` grows.
pub fn holder_norm(v: &Potential, alpha: f64, grid_size: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "holder_norm requires alpha in (0,1), got {alpha}"
        )));
    }
    if grid_size == 0 {
        return Err(Error::InvalidParameter("holder_norm requires grid_size >= 1".into()));
    }

    let mut xs: Vec<f64> = (0..grid_size).map(|i| i as f64 / grid_size as f64).collect();
    if let Potential::Bump { x0, radius, .. } = v {
        let m = 256usize;
        for i in 0..=m {
            xs.push(x0 - radius + 2.0 * radius * i as f64 / m as f64);
        }
    }
    let vals: Vec<f64> = xs.iter().map(|&x| v.eval(x)).collect();
    let sup = vals.iter().cloned().fold(0.0_f64, |a, b| a.max(b.abs()));

    // Only pairs with at least one non-zero value contribute to the seminorm.
    let active: Vec<usize> = (0..xs.len()).filter(|&i| vals[i] != 0.0).collect();
    let mut semi = 0.0_f64;
    for &i in &active {
        for jdx in 0..xs.len() {
            if jdx == i {
                continue;
            }
            let num = (vals[i] - vals[jdx]).abs();
            if num == 0.0 {
                continue;
            }
            let d = periodic_offset(xs[i], xs[jdx]).abs();
            if d == 0.0 {
                continue;
            }
            let ratio = num / d.powf(alpha);
            if ratio > semi {
                semi = ratio;
            }
        }
    }
    Ok(sup + semi)
}

/// A d-dimensional model: one generating function
/// H_j(x, x') = (x - x')^2 / 2 + v_j(x) per lattice direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    potentials: Vec<Potential>,
}

impl Model {
    pub fn new(potentials: Vec<Potential>) -> Result<Self> {
        if potentials.is_empty() {
            return Err(Error::InvalidParameter("model requires at least one direction".into()));
        }
        Ok(Model { potentials })
    }

    /// The integrable model: v_j = 0 in every direction.
    pub fn integrable(d: usize) -> Self {
        Model {
            potentials: vec![Potential::Zero; d],
        }
    }

    /// Same bump potential in every direction.
    pub fn uniform_bump(d: usize, n: u64, r: f64, x0: f64) -> Result<Self> {
        let v = Potential::bump(n, r, x0)?;
        Ok(Model {
            potentials: vec![v; d],
        })
    }

    pub fn dim(&self) -> usize {
        self.potentials.len()
    }

    pub fn potential(&self, j: usize) -> &Potential {
        &self.potentials[j]
    }

    pub fn potentials(&self) -> &[Potential] {
        &self.potentials
    }

    pub fn eval_h(&self, j: usize, x: f64, xp: f64) -> f64 {
        0.5 * (x - xp) * (x - xp) + self.potentials[j].eval(x)
    }

    /// Partial derivative of H_j in the first slot.
    pub fn d1_h(&self, j: usize, x: f64, xp: f64) -> f64 {
        (x - xp) + self.potentials[j].deriv(x)
    }

    /// Partial derivative of H_j in the second slot. Independent of j for
    /// this family; the slot keeps the call sites uniform.
    pub fn d2_h(&self, _j: usize, x: f64, xp: f64) -> f64 {
        -(x - xp)
    }
}

/// Rotation vector with every component in (0,1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationVector(Vec<f64>);

impl RotationVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("rotation vector must be non-empty".into()));
        }
        for (j, w) in components.iter().enumerate() {
            if !w.is_finite() || !(0.0 < *w && *w < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "rotation component omega[{j}] = {w} outside (0,1)"
                )));
            }
        }
        Ok(RotationVector(components))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn component(&self, j: usize) -> f64 {
        self.0[j]
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    /// (sqrt(5)-1)/2 and sqrt(2)-1 cycled over d directions: badly
    /// approximable frequencies that avoid grid resonances.
    pub fn quadratic_irrationals(d: usize) -> Self {
        let base = [(5.0_f64.sqrt() - 1.0) / 2.0, 2.0_f64.sqrt() - 1.0];
        RotationVector((0..d).map(|j| base[j % 2]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_radius_and_peak() {
        // n=16, r=1/2 gives R = (1/16)^2 = 1/256 and peak 1/16 at x0.
        let v = Potential::bump(16, 0.5, 0.5).unwrap();
        assert_eq!(v.support_radius().unwrap(), (1.0f64 / 16.0).powi(2));
        assert_eq!(v.eval(0.5), 1.0 / 16.0);
        assert_eq!(v.eval(0.25), 0.0);
        assert_eq!(v.eval(1.5), 1.0 / 16.0); // periodicity
    }

    #[test]
    fn degenerate_support_rejected() {
        // (1/2)^{1/2} ~ 0.707 > 1/2
        match Potential::bump(2, 2.0, 0.5) {
            Err(Error::DegenerateSupport { .. }) => {}
            other => panic!("expected DegenerateSupport, got {other:?}"),
        }
    }

    #[test]
    fn bump_profile_value_inside_support() {
        let v = Potential::bump(16, 0.5, 0.5).unwrap();
        let r = v.support_radius().unwrap();
        let expected = BumpProfile::Mollifier.eval(0.5) / 16.0;
        assert!((v.eval(0.5 + r / 2.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn bump_bounded_and_supported() {
        let v = Potential::bump(64, 0.7, 0.5).unwrap();
        let r = v.support_radius().unwrap();
        for i in 0..10_000 {
            let x = i as f64 / 10_000.0;
            let val = v.eval(x);
            assert!((0.0..=1.0 / 64.0 + 1e-15).contains(&val));
            if periodic_offset(x, 0.5).abs() >= r {
                assert_eq!(val, 0.0);
            }
        }
    }

    #[test]
    fn generating_function_integrable_values() {
        let m = Model::integrable(1);
        assert_eq!(m.eval_h(0, 0.0, 1.0), 0.5);
        assert_eq!(m.d1_h(0, 0.0, 0.5), -0.5);
        assert_eq!(m.d2_h(0, 0.0, 0.5), 0.5);
    }

    #[test]
    fn partials_match_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let m = Model::uniform_bump(2, 16, 0.5, 0.5).unwrap();
        let step = 1e-5;
        for _ in 0..100 {
            let x: f64 = rng.gen_range(-1.0..2.0);
            let xp: f64 = rng.gen_range(-1.0..2.0);
            let j = rng.gen_range(0..2);
            let fd1 = (m.eval_h(j, x + step, xp) - m.eval_h(j, x - step, xp)) / (2.0 * step);
            let fd2 = (m.eval_h(j, x, xp + step) - m.eval_h(j, x, xp - step)) / (2.0 * step);
            let scale1 = m.d1_h(j, x, xp).abs().max(1.0);
            let scale2 = m.d2_h(j, x, xp).abs().max(1.0);
            assert!((m.d1_h(j, x, xp) - fd1).abs() / scale1 < 1e-6, "d1 mismatch at ({x},{xp})");
            assert!((m.d2_h(j, x, xp) - fd2).abs() / scale2 < 1e-6, "d2 mismatch at ({x},{xp})");
        }
    }

    #[test]
    fn holder_norm_trivial_cases() {
        assert_eq!(holder_norm(&Potential::Zero, 0.5, 128).unwrap(), 0.0);
        assert_eq!(holder_norm(&Potential::Constant(0.3), 0.5, 128).unwrap(), 0.3);
    }

    #[test]
    fn holder_norm_rejects_bad_alpha() {
        let v = Potential::bump(16, 0.5, 0.5).unwrap();
        assert!(holder_norm(&v, 0.0, 128).is_err());
        assert!(holder_norm(&v, 1.0, 128).is_err());
    }

    #[test]
    fn holder_norm_monotone_in_grid_size() {
        let v = Potential::bump(32, 0.5, 0.5).unwrap();
        let mut prev = 0.0;
        for g in [512usize, 1024, 2048, 4096] {
            let h = holder_norm(&v, 0.4, g).unwrap();
            assert!(h >= prev - 1e-12, "grid {g}: {h} < {prev}");
            prev = h;
        }
    }

    #[test]
    fn holder_norm_decay_below_r_growth_above() {
        // alpha < r: strictly decreasing in n; alpha > r: non-decreasing.
        let ns: Vec<u64> = (4..=12).map(|k| 1u64 << k).collect();
        let mut prev_low = f64::INFINITY;
        let mut prev_high = 0.0;
        for &n in &ns {
            let v = Potential::bump(n, 0.5, 0.5).unwrap();
            let low = holder_norm(&v, 0.4, 4096).unwrap();
            let high = holder_norm(&v, 0.6, 4096).unwrap();
            assert!(low < prev_low, "n={n}: {low} not < {prev_low}");
            assert!(high >= prev_high - 1e-12, "n={n}: {high} < {prev_high}");
            prev_low = low;
            prev_high = high;
        }
    }

    #[test]
    fn rotation_vector_validation() {
        assert!(RotationVector::new(vec![0.5, 0.3]).is_ok());
        assert!(RotationVector::new(vec![0.0]).is_err());
        assert!(RotationVector::new(vec![1.0]).is_err());
        assert!(RotationVector::new(vec![]).is_err());
    }
}
