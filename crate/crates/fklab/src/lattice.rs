//! Finite-box configurations on the d-dimensional integer lattice:
//! hull-induced configurations, lattice Euler-Lagrange residuals, energy
//! differences under compact perturbations, and sampled ground-state checks.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hull::HullFunction;
use crate::model::{Model, RotationVector};

/// Hypercube box {i : |i|_inf <= radius} in Z^d.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeBox {
    pub dim: usize,
    pub radius: i64,
}

impl LatticeBox {
    pub fn new(dim: usize, radius: i64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("box dimension must be >= 1".into()));
        }
        if radius < 2 {
            return Err(Error::InvalidParameter(format!(
                "box radius must be >= 2, got {radius}"
            )));
        }
        Ok(LatticeBox { dim, radius })
    }

    pub fn side(&self) -> usize {
        (2 * self.radius + 1) as usize
    }

    pub fn site_count(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    /// Row-major index of a site, offset so the box corner maps to 0.
    pub fn index(&self, site: &[i64]) -> usize {
        debug_assert_eq!(site.len(), self.dim);
        let side = self.side();
        let mut idx = 0usize;
        for &c in site {
            debug_assert!(c.unsigned_abs() <= self.radius as u64);
            idx = idx * side + (c + self.radius) as usize;
        }
        idx
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        site.iter().all(|c| c.abs() <= self.radius)
    }

    /// Derived boxes (interiors, halos) may be smaller than the user-facing
    /// minimum radius of 2.
    pub(crate) fn unchecked(dim: usize, radius: i64) -> Self {
        debug_assert!(dim >= 1 && radius >= 0);
        LatticeBox { dim, radius }
    }

    /// All sites in row-major order.
    pub fn sites(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::with_capacity(self.site_count());
        let mut cur = vec![-self.radius; self.dim];
        loop {
            out.push(cur.clone());
            let mut k = self.dim;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if cur[k] < self.radius {
                    cur[k] += 1;
                    for c in cur.iter_mut().skip(k + 1) {
                        *c = -self.radius;
                    }
                    break;
                }
            }
        }
    }
}

/// Real-valued field over a box.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    pub lattice_box: LatticeBox,
    values: Vec<f64>,
}

impl Configuration {
    pub fn new(lattice_box: LatticeBox, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice_box.site_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                lattice_box.site_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("configuration values must be finite".into()));
        }
        Ok(Configuration {
            lattice_box,
            values,
        })
    }

    /// The linear (integrable ground state) configuration u_i = omega . i.
    pub fn linear(lattice_box: LatticeBox, omega: &RotationVector) -> Result<Self> {
        if omega.dim() != lattice_box.dim {
            return Err(Error::DimensionMismatch {
                expected: lattice_box.dim,
                got: omega.dim(),
            });
        }
        let values = lattice_box
            .sites()
            .iter()
            .map(|i| dot(omega.components(), i))
            .collect();
        Ok(Configuration {
            lattice_box,
            values,
        })
    }

    pub fn value(&self, site: &[i64]) -> f64 {
        self.values[self.lattice_box.index(site)]
    }

    pub fn value_mut(&mut self, site: &[i64]) -> &mut f64 {
        let idx = self.lattice_box.index(site);
        &mut self.values[idx]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let d = self.lattice_box.dim;
        let header: Vec<String> = (1..=d).map(|j| format!("i_{j}")).collect();
        writeln!(out, "{},u", header.join(","))?;
        for site in self.lattice_box.sites() {
            let coords: Vec<String> = site.iter().map(|c| c.to_string()).collect();
            writeln!(out, "{},{}", coords.join(","), self.value(&site))?;
        }
        Ok(())
    }
}

fn dot(omega: &[f64], site: &[i64]) -> f64 {
    omega.iter().zip(site).map(|(w, &i)| w * i as f64).sum()
}

/// Compactly supported perturbation: values vanish exactly for
/// |i|_inf >= support_radius.
#[derive(Clone, Debug)]
pub struct Perturbation {
    pub lattice_box: LatticeBox,
    pub support_radius: i64,
    values: Vec<f64>,
}

impl Perturbation {
    pub fn new(lattice_box: LatticeBox, support_radius: i64, values: Vec<f64>) -> Result<Self> {
        if support_radius < 1 || support_radius >= lattice_box.radius - 1 {
            return Err(Error::SupportTooLarge {
                support: support_radius,
                box_radius: lattice_box.radius,
            });
        }
        if values.len() != lattice_box.site_count() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                lattice_box.site_count(),
                values.len()
            )));
        }
        let p = Perturbation {
            lattice_box,
            support_radius,
            values,
        };
        for site in lattice_box.sites() {
            if site.iter().any(|c| c.abs() >= support_radius) && p.value(&site) != 0.0 {
                return Err(Error::InvalidParameter(
                    "perturbation non-zero outside its support".into(),
                ));
            }
        }
        Ok(p)
    }

    pub fn zero(lattice_box: LatticeBox, support_radius: i64) -> Result<Self> {
        let n = lattice_box.site_count();
        Perturbation::new(lattice_box, support_radius, vec![0.0; n])
    }

    pub fn value(&self, site: &[i64]) -> f64 {
        self.values[self.lattice_box.index(site)]
    }

    pub fn value_mut(&mut self, site: &[i64]) -> &mut f64 {
        let idx = self.lattice_box.index(site);
        &mut self.values[idx]
    }
}

/// Samples the hull along the rotation direction: u_i = h(omega . i),
/// through the continuous interpolant so the identity hull gives exactly
/// the linear configuration.
pub fn configuration_from_hull(
    h: &HullFunction,
    omega: &RotationVector,
    lattice_box: LatticeBox,
) -> Result<Configuration> {
    if omega.dim() != lattice_box.dim {
        return Err(Error::DimensionMismatch {
            expected: lattice_box.dim,
            got: omega.dim(),
        });
    }
    let values = lattice_box
        .sites()
        .iter()
        .map(|i| h.evaluate_linear(dot(omega.components(), i)))
        .collect();
    Configuration::new(lattice_box, values)
}

/// Euler-Lagrange residual at every interior site (|i|_inf <= radius - 1):
/// sum_j [d1 H_j(u_i, u_{i+e_j}) + d2 H_j(u_{i-e_j}, u_i)].
/// Returned as a field over the shrunk box.
pub fn lattice_el_residual(u: &Configuration, model: &Model) -> Result<Configuration> {
    let b = u.lattice_box;
    if model.dim() != b.dim {
        return Err(Error::DimensionMismatch {
            expected: b.dim,
            got: model.dim(),
        });
    }
    let inner = LatticeBox::unchecked(b.dim, b.radius - 1);
    let mut values = Vec::with_capacity(inner.site_count());
    for site in inner.sites() {
        let ui = u.value(&site);
        let mut res = 0.0;
        let mut fwd = site.clone();
        let mut bwd = site.clone();
        for j in 0..b.dim {
            fwd[j] += 1;
            bwd[j] -= 1;
            res += model.d1_h(j, ui, u.value(&fwd)) + model.d2_h(j, u.value(&bwd), ui);
            fwd[j] -= 1;
            bwd[j] += 1;
        }
        values.push(res);
    }
    Configuration::new(inner, values)
}

/// Energy change of `u` under the compact perturbation `phi`: the sum over
/// every bond with at least one endpoint in the support halo of
/// H_j(u + phi, .) - H_j(u, .). Exact for compactly supported phi.
pub fn energy_difference(u: &Configuration, phi: &Perturbation, model: &Model) -> Result<f64> {
    let b = u.lattice_box;
    if phi.lattice_box != b {
        return Err(Error::InvalidParameter("perturbation box differs from configuration box".into()));
    }
    if model.dim() != b.dim {
        return Err(Error::DimensionMismatch {
            expected: b.dim,
            got: model.dim(),
        });
    }
    if phi.support_radius + 1 >= b.radius {
        return Err(Error::SupportTooLarge {
            support: phi.support_radius,
            box_radius: b.radius,
        });
    }
    // Every bond with a perturbed endpoint starts at |i|_inf <= support, so
    // iterating forward bonds from the halo covers each such bond once.
    let halo = LatticeBox::unchecked(b.dim, phi.support_radius + 1);
    let mut delta = 0.0;
    for site in halo.sites() {
        let ui = u.value(&site);
        let pi = phi.value(&site);
        let mut fwd = site.clone();
        for j in 0..b.dim {
            fwd[j] += 1;
            let un = u.value(&fwd);
            let pn = phi.value(&fwd);
            if pi != 0.0 || pn != 0.0 {
                delta += model.eval_h(j, ui + pi, un + pn) - model.eval_h(j, ui, un);
            }
            fwd[j] -= 1;
        }
    }
    Ok(delta)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClassAReport {
    pub trials: usize,
    pub violations: usize,
    pub min_delta: f64,
}

/// Energy decrease below this threshold counts as a ground-state violation;
/// strictly below the quadrature/rounding noise floor.
pub const VIOLATION_TOLERANCE: f64 = 1e-10;

/// Draws seeded random compact perturbations and counts energy decreases.
/// A positive count certifies non-minimality; zero is evidence (not proof)
/// of ground-state behavior. `amplitude` defaults to twice the largest bump
/// support radius of the model, the competitor jump scale.
pub fn sampled_class_a_check(
    u: &Configuration,
    model: &Model,
    trials: usize,
    seed: u64,
    amplitude: Option<f64>,
) -> Result<ClassAReport> {
    if trials < 1 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let b = u.lattice_box;
    let max_support = 4.min(b.radius - 2).max(1);
    let amp = amplitude.unwrap_or_else(|| {
        model
            .potentials()
            .iter()
            .filter_map(|v| v.support_radius())
            .fold(0.0_f64, f64::max)
            .max(0.05)
            * 2.0
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    let mut min_delta = f64::INFINITY;
    for _ in 0..trials {
        let support = rng.gen_range(1..=max_support);
        let mut phi = Perturbation::zero(b, support)?;
        let interior = LatticeBox::unchecked(b.dim, support - 1);
        for site in interior.sites() {
            *phi.value_mut(&site) = rng.gen_range(-amp..amp);
        }
        let delta = energy_difference(u, &phi, model)?;
        min_delta = min_delta.min(delta);
        if delta < -VIOLATION_TOLERANCE {
            violations += 1;
        }
    }
    Ok(ClassAReport {
        trials,
        violations,
        min_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::random_hull;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn omega2() -> RotationVector {
        RotationVector::quadratic_irrationals(2)
    }

    #[test]
    fn identity_hull_gives_linear_configuration() {
        let b = LatticeBox::new(2, 8).unwrap();
        let h = HullFunction::identity(1024);
        let u = configuration_from_hull(&h, &omega2(), b).unwrap();
        let lin = Configuration::linear(b, &omega2()).unwrap();
        for (a, c) in u.values().iter().zip(lin.values()) {
            assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn hull_lift_shifts_configuration() {
        let b = LatticeBox::new(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_hull(128, &mut rng);
        let up = HullFunction::new(h.values().iter().map(|v| v + 1.0).collect()).unwrap();
        let u = configuration_from_hull(&h, &omega2(), b).unwrap();
        let u_up = configuration_from_hull(&up, &omega2(), b).unwrap();
        for (a, c) in u.values().iter().zip(u_up.values()) {
            // interpolation arithmetic reassociates under the shift; the
            // lift holds to rounding error
            assert!((c - a - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn step_hull_floor_configuration() {
        let omega = RotationVector::new(vec![0.4]).unwrap();
        let b = LatticeBox::new(1, 8).unwrap();
        let h = HullFunction::step(1000);
        let u = configuration_from_hull(&h, &omega, b).unwrap();
        let expect = [0.0, 0.0, 0.0, 1.0, 1.0];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(u.value(&[i as i64]), *e, "site {i}");
        }
    }

    #[test]
    fn linear_configuration_solves_integrable_el() {
        let b = LatticeBox::new(2, 8).unwrap();
        let model = Model::integrable(2);
        let u = Configuration::linear(b, &omega2()).unwrap();
        let res = lattice_el_residual(&u, &model).unwrap();
        for v in res.values() {
            // 2 w.i - w.(i+e) - w.(i-e) cancels up to dot-product rounding
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn linear_configuration_residual_is_vprime() {
        let b = LatticeBox::new(2, 8).unwrap();
        let model = Model::uniform_bump(2, 16, 0.5, 0.5).unwrap();
        let u = Configuration::linear(b, &omega2()).unwrap();
        let res = lattice_el_residual(&u, &model).unwrap();
        for site in res.lattice_box.sites() {
            let ui = u.value(&site);
            let expected: f64 = (0..2).map(|j| model.potential(j).deriv(ui)).sum();
            assert!((res.value(&site) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn hull_and_lattice_residuals_agree() {
        let b = LatticeBox::new(2, 8).unwrap();
        let model = Model::uniform_bump(2, 16, 0.5, 0.5).unwrap();
        let family = crate::criterion::smooth_hull_family(2048, 2, 3);
        let h = &family[1];
        let u = configuration_from_hull(h, &omega2(), b).unwrap();
        let res = lattice_el_residual(&u, &model).unwrap();
        for site in res.lattice_box.sites() {
            let theta: f64 = omega2()
                .components()
                .iter()
                .zip(&site)
                .map(|(w, &i)| w * i as f64)
                .sum();
            let hr = crate::percival::el_residual(h, &omega2(), &model, theta).unwrap();
            assert!(
                (res.value(&site) - hr).abs() < 1e-10,
                "site {site:?}: {} vs {hr}",
                res.value(&site)
            );
        }
    }

    #[test]
    fn energy_difference_zero_perturbation() {
        let b = LatticeBox::new(2, 8).unwrap();
        let model = Model::uniform_bump(2, 16, 0.5, 0.5).unwrap();
        let u = Configuration::linear(b, &omega2()).unwrap();
        let phi = Perturbation::zero(b, 3).unwrap();
        assert_eq!(energy_difference(&u, &phi, &model).unwrap(), 0.0);
    }

    #[test]
    fn energy_difference_integrable_is_dirichlet_energy() {
        // v = 0, u linear: Delta E = sum over bonds of (phi_i - phi_{i+e})^2/2.
        let b = LatticeBox::new(2, 8).unwrap();
        let model = Model::integrable(2);
        let u = Configuration::linear(b, &omega2()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let mut phi = Perturbation::zero(b, 3).unwrap();
            let inner = LatticeBox::new(2, 2).unwrap();
            for site in inner.sites() {
                *phi.value_mut(&site) = rng.gen_range(-1.0..1.0);
            }
            let de = energy_difference(&u, &phi, &model).unwrap();
            // direct summation oracle over all bonds of the box
            let mut oracle = 0.0;
            let whole = LatticeBox::new(2, 7).unwrap();
            for site in whole.sites() {
                let mut fwd = site.clone();
                for j in 0..2 {
                    fwd[j] += 1;
                    let d = phi.value(&site) - phi.value(&fwd);
                    oracle += 0.5 * d * d;
                    fwd[j] -= 1;
                }
            }
            assert!((de - oracle).abs() < 1e-10, "{de} vs {oracle}");
            assert!(de >= -1e-12);
        }
    }

    #[test]
    fn single_site_bump_energy_is_positive_quadratic() {
        let b = LatticeBox::new(2, 8).unwrap();
        let model = Model::integrable(2);
        let u = Configuration::linear(b, &omega2()).unwrap();
        let mut prev = 0.0;
        for k in 1..=4 {
            let t = k as f64 * 0.25;
            let mut phi = Perturbation::zero(b, 2).unwrap();
            *phi.value_mut(&[0, 0]) = t;
            let de = energy_difference(&u, &phi, &model).unwrap();
            // 2d bonds touch the site: de = 2d * t^2 / 2
            assert!((de - 2.0 * t * t).abs() < 1e-12, "de {de} at t {t}");
            assert!(de > prev);
            prev = de;
        }
    }

    #[test]
    fn class_a_check_linear_integrable_clean() {
        let b = LatticeBox::new(2, 8).unwrap();
        let model = Model::integrable(2);
        let u = Configuration::linear(b, &omega2()).unwrap();
        let rep = sampled_class_a_check(&u, &model, 1000, 9, None).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.min_delta >= -VIOLATION_TOLERANCE);
    }

    #[test]
    fn class_a_check_detects_spike() {
        let b = LatticeBox::new(2, 8).unwrap();
        let model = Model::integrable(2);
        let mut u = Configuration::linear(b, &omega2()).unwrap();
        *u.value_mut(&[0, 0]) += 5.0;
        let rep = sampled_class_a_check(&u, &model, 1000, 9, None).unwrap();
        assert!(rep.violations > 0);
        assert!(rep.min_delta < -VIOLATION_TOLERANCE);
        // explicit improving perturbation: remove the spike
        let mut phi = Perturbation::zero(b, 2).unwrap();
        *phi.value_mut(&[0, 0]) = -5.0;
        assert!(energy_difference(&u, &phi, &model).unwrap() < 0.0);
    }

    #[test]
    fn support_too_large_rejected() {
        let b = LatticeBox::new(2, 4).unwrap();
        assert!(matches!(
            Perturbation::zero(b, 3),
            Err(Error::SupportTooLarge { .. })
        ));
    }
}
