//! The Percival Lagrangian on discretized hull functions: quadrature value,
//! Euler-Lagrange residual, exact gradient of the discretized functional,
//! and a spectral projected-gradient minimizer over the monotone cone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hull::{project_monotone, HullFunction};
use crate::model::{Model, RotationVector};

#[derive(Clone, Debug, PartialEq)]
pub struct MinimizeParams {
    pub max_iters: usize,
    pub step_size: f64,
    pub tol_grad: f64,
    pub tol_obj: f64,
    pub seed: u64,
}

impl MinimizeParams {
    /// Defaults scaled for an N-node grid in d dimensions: the discrete
    /// Hessian has largest eigenvalue O(d/N), so the natural step is O(N/d).
    pub fn for_resolution(n: usize, d: usize) -> Self {
        MinimizeParams {
            max_iters: 50_000,
            step_size: n as f64 / (4.0 * d as f64),
            tol_grad: 1e-8,
            tol_obj: 1e-12,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        for (name, v) in [
            ("step_size", self.step_size),
            ("tol_grad", self.tol_grad),
            ("tol_obj", self.tol_obj),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizeResult {
    #[serde(skip)]
    pub minimizer: HullFunction,
    pub objective: f64,
    pub el_residual_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    /// max_gap of the minimizer, reported alongside the objective.
    pub gap: f64,
}

fn check_dims(h_dim: usize, omega: &RotationVector, model: &Model) -> Result<()> {
    let _ = h_dim;
    if omega.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: omega.dim(),
        });
    }
    Ok(())
}

/// Rectangle-rule quadrature of sum_j \int_0^1 H_j(h(t), h(t+w_j)) dt on the
/// N-node grid. The shifted value h(t+w_j) is taken from the continuous
/// monotone interpolant so that rigid rotations score exactly w^2/2.
pub fn percival_value(h: &HullFunction, omega: &RotationVector, model: &Model) -> Result<f64> {
    check_dims(h.resolution(), omega, model)?;
    let n = h.resolution();
    let nf = n as f64;
    let mut total = 0.0;
    for j in 0..model.dim() {
        let w = omega.component(j);
        let v = model.potential(j);
        for (k, &x) in h.values().iter().enumerate() {
            let xs = h.evaluate_linear(k as f64 / nf + w);
            let d = x - xs;
            total += 0.5 * d * d + v.eval(x);
        }
    }
    Ok(total / nf)
}

/// Pointwise Euler-Lagrange residual
/// sum_j [d1 H_j(h(t), h(t+w_j)) + d2 H_j(h(t-w_j), h(t))].
pub fn el_residual(
    h: &HullFunction,
    omega: &RotationVector,
    model: &Model,
    theta: f64,
) -> Result<f64> {
    check_dims(h.resolution(), omega, model)?;
    let x = h.evaluate_linear(theta);
    let mut total = 0.0;
    for j in 0..model.dim() {
        let w = omega.component(j);
        let fwd = h.evaluate_linear(theta + w);
        let bwd = h.evaluate_linear(theta - w);
        total += model.d1_h(j, x, fwd) + model.d2_h(j, bwd, x);
    }
    Ok(total)
}

/// Exact gradient of the quadrature-discretized Percival value with respect
/// to the N node values. The interpolation weights depend only on the grid
/// and omega, so the kinetic part is globally quadratic and the gradient is
/// exact, not approximate.
pub fn percival_gradient(
    h: &HullFunction,
    omega: &RotationVector,
    model: &Model,
) -> Result<Vec<f64>> {
    check_dims(h.resolution(), omega, model)?;
    let n = h.resolution();
    let nf = n as f64;
    let vals = h.values();
    let mut grad = vec![0.0; n];
    for j in 0..model.dim() {
        let w = omega.component(j);
        let v = model.potential(j);
        for (k, &x) in vals.iter().enumerate() {
            let theta = k as f64 / nf + w;
            let base = theta.floor();
            let frac = theta - base;
            let pos = frac * nf;
            let mut m = pos.floor() as usize;
            if m >= n {
                m = n - 1;
            }
            let mu = pos - m as f64;
            let m1 = if m + 1 == n { 0 } else { m + 1 };
            let hi = if m + 1 == n { vals[0] + 1.0 } else { vals[m + 1] };
            let xs = vals[m] + mu * (hi - vals[m]) + base;
            let d = x - xs;
            grad[k] += d + v.deriv(x);
            grad[m] -= (1.0 - mu) * d;
            grad[m1] -= mu * d;
        }
    }
    for g in &mut grad {
        *g /= nf;
    }
    Ok(grad)
}

/// One projected-gradient descent from `start`. Returns (hull, objective,
/// iterations, converged).
fn descend(
    start: &HullFunction,
    omega: &RotationVector,
    model: &Model,
    params: &MinimizeParams,
) -> Result<(HullFunction, f64, usize, bool)> {
    let mut h = start.clone();
    h.canonicalize();
    let mut f = percival_value(&h, omega, model)?;
    if !f.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut grad = percival_gradient(&h, omega, model)?;
    let mut alpha = params.step_size;
    let alpha_max = params.step_size * 64.0;
    let alpha_min = params.step_size * 1e-12;
    let mut stagnant = 0usize;
    let mut converged = false;
    let mut iters = 0usize;

    for it in 0..params.max_iters {
        iters = it + 1;
        let mut accepted = None;
        let mut step = alpha;
        // Backtracking: halve until the objective does not increase.
        for _ in 0..60 {
            let trial: Vec<f64> = h
                .values()
                .iter()
                .zip(&grad)
                .map(|(x, g)| x - step * g)
                .collect();
            let cand = project_monotone(&trial);
            let fc = percival_value(&cand, omega, model)?;
            if !fc.is_finite() {
                return Err(Error::NonFiniteObjective);
            }
            if fc <= f {
                accepted = Some((cand, fc, step));
                break;
            }
            step *= 0.5;
            if step < alpha_min {
                break;
            }
        }
        let Some((cand, fc, used)) = accepted else {
            // No descent direction at floating-point resolution.
            converged = true;
            break;
        };

        let s: Vec<f64> = cand
            .values()
            .iter()
            .zip(h.values())
            .map(|(a, b)| a - b)
            .collect();
        let pg_res = s.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / used;
        let decrease = f - fc;

        let new_grad = percival_gradient(&cand, omega, model)?;
        // Barzilai-Borwein step with safeguards.
        let ss: f64 = s.iter().map(|v| v * v).sum();
        let sy: f64 = s
            .iter()
            .zip(new_grad.iter().zip(&grad))
            .map(|(si, (gn, go))| si * (gn - go))
            .sum();
        alpha = if sy > 0.0 {
            (ss / sy).clamp(alpha_min, alpha_max)
        } else {
            alpha_max
        };

        h = cand;
        h.canonicalize();
        f = fc;
        grad = new_grad;

        if pg_res <= params.tol_grad {
            converged = true;
            break;
        }
        if decrease <= params.tol_obj {
            stagnant += 1;
            if stagnant >= 50 {
                converged = true;
                break;
            }
        } else {
            stagnant = 0;
        }
    }
    Ok((h, f, iters, converged))
}

/// Sup of |EL residual| over grid nodes, excluding nodes adjacent to
/// detected gaps (the EL equation need not hold pointwise at a jump).
pub fn el_residual_sup(
    h: &HullFunction,
    omega: &RotationVector,
    model: &Model,
) -> Result<f64> {
    let n = h.resolution();
    let nf = n as f64;
    let gap_threshold = 4.0 / nf;
    let incs: Vec<f64> = h.increments().collect();
    let mut sup = 0.0_f64;
    for k in 0..n {
        let prev = if k == 0 { n - 1 } else { k - 1 };
        if incs[k] > gap_threshold || incs[prev] > gap_threshold {
            continue;
        }
        let r = el_residual(h, omega, model, k as f64 / nf)?;
        sup = sup.max(r.abs());
    }
    Ok(sup)
}

/// Projected-gradient minimization of the Percival value over the discrete
/// monotone cone, with seeded randomized restarts around the best iterate.
pub fn minimize_percival(
    omega: &RotationVector,
    model: &Model,
    init: &HullFunction,
    params: &MinimizeParams,
) -> Result<MinimizeResult> {
    params.validate()?;
    check_dims(init.resolution(), omega, model)?;

    let (mut best_h, mut best_f, mut total_iters, mut converged) =
        descend(init, omega, model, params)?;

    // Two seeded restarts from perturbations of the best iterate; keeps the
    // better minimizer. Escapes shallow local minima created by the bumps.
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let scale = 8.0 / init.resolution() as f64;
    for _ in 0..2 {
        let noisy: Vec<f64> = best_h
            .values()
            .iter()
            .map(|v| v + rng.gen_range(-scale..scale))
            .collect();
        let start = project_monotone(&noisy);
        let restart_params = MinimizeParams {
            max_iters: params.max_iters / 2 + 1,
            ..params.clone()
        };
        let (h, f, iters, conv) = descend(&start, omega, model, &restart_params)?;
        total_iters += iters;
        if f < best_f {
            best_h = h;
            best_f = f;
            converged = conv;
        }
    }

    let el_sup = el_residual_sup(&best_h, omega, model)?;
    let gap = best_h.max_gap();
    Ok(MinimizeResult {
        objective: best_f,
        el_residual_sup: el_sup,
        iterations: total_iters,
        converged,
        gap,
        minimizer: best_h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::random_hull;
    use crate::model::Potential;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn golden() -> f64 {
        (5.0_f64.sqrt() - 1.0) / 2.0
    }

    #[test]
    fn value_identity_integrable() {
        let omega = RotationVector::new(vec![0.6180, 0.4142]).unwrap();
        let model = Model::integrable(2);
        let h = HullFunction::identity(512);
        let p = percival_value(&h, &omega, &model).unwrap();
        let expected = (0.6180_f64.powi(2) + 0.4142_f64.powi(2)) / 2.0;
        assert!((p - expected).abs() < 1e-12, "p = {p}, expected {expected}");
    }

    #[test]
    fn value_step_hull_integrable() {
        // h(t+w) - h(t) is 0 or 1 with measure w of ones: value w/2.
        let omega = RotationVector::new(vec![0.4]).unwrap();
        let model = Model::integrable(1);
        let h = HullFunction::step(4000);
        let p = percival_value(&h, &omega, &model).unwrap();
        assert!((p - 0.2).abs() < 2e-3, "p = {p}");
    }

    #[test]
    fn value_identity_with_bump_adds_potential_integral() {
        let omega = RotationVector::new(vec![golden()]).unwrap();
        let v = Potential::bump(16, 0.5, 0.5).unwrap();
        // fine-grid quadrature oracle for the potential integral
        let k = 2_000_000;
        let int_v: f64 = (0..k).map(|i| v.eval((i as f64 + 0.5) / k as f64)).sum::<f64>() / k as f64;
        let model = Model::new(vec![v]).unwrap();
        let n = 8192;
        let h = HullFunction::identity(n);
        let p = percival_value(&h, &omega, &model).unwrap();
        let expected = golden().powi(2) / 2.0 + int_v;
        assert!((p - expected).abs() < 1e-6, "p = {p}, expected {expected}");
    }

    #[test]
    fn value_dimension_mismatch() {
        let omega = RotationVector::new(vec![0.5]).unwrap();
        let model = Model::integrable(2);
        let h = HullFunction::identity(64);
        assert!(matches!(
            percival_value(&h, &omega, &model),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn el_residual_identity_integrable_zero() {
        let omega = RotationVector::new(vec![golden(), 2.0_f64.sqrt() - 1.0]).unwrap();
        let model = Model::integrable(2);
        let h = HullFunction::identity(256);
        for theta in [0.0, 0.123, 0.777, 1.5, -0.25] {
            let r = el_residual(&h, &omega, &model, theta).unwrap();
            assert!(r.abs() < 1e-12, "residual {r} at {theta}");
        }
    }

    #[test]
    fn el_residual_identity_with_potential_is_vprime() {
        let omega = RotationVector::new(vec![golden(), 2.0_f64.sqrt() - 1.0]).unwrap();
        let model = Model::uniform_bump(2, 16, 0.5, 0.5).unwrap();
        let h = HullFunction::identity(4096);
        for theta in [0.5, 0.5 + 1.0 / 512.0, 0.499, 0.25] {
            let r = el_residual(&h, &omega, &model, theta).unwrap();
            let expected: f64 = (0..2).map(|j| model.potential(j).deriv(theta)).sum();
            assert!(
                (r - expected).abs() < 1e-9,
                "residual {r} vs {expected} at {theta}"
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let omega = RotationVector::new(vec![golden(), 2.0_f64.sqrt() - 1.0]).unwrap();
        let model = Model::uniform_bump(2, 16, 0.5, 0.5).unwrap();
        let n = 128;
        for _ in 0..20 {
            let h = random_hull(n, &mut rng);
            let grad = percival_gradient(&h, &omega, &model).unwrap();
            let step = 1e-6;
            let mut sup_err = 0.0_f64;
            let mut sup_g = 0.0_f64;
            for k in 0..n {
                let mut up = h.values().to_vec();
                let mut dn = h.values().to_vec();
                up[k] += step;
                dn[k] -= step;
                let fu = percival_value_raw(&up, &omega, &model);
                let fd = percival_value_raw(&dn, &omega, &model);
                let fd_grad = (fu - fd) / (2.0 * step);
                sup_err = sup_err.max((grad[k] - fd_grad).abs());
                sup_g = sup_g.max(grad[k].abs());
            }
            assert!(sup_err / sup_g < 1e-5, "rel err {}", sup_err / sup_g);
        }
    }

    // Quadrature on raw (possibly non-monotone) node values, for FD checks.
    fn percival_value_raw(vals: &[f64], omega: &RotationVector, model: &Model) -> f64 {
        let n = vals.len();
        let nf = n as f64;
        let eval = |theta: f64| -> f64 {
            let base = theta.floor();
            let frac = theta - base;
            let pos = frac * nf;
            let mut m = pos.floor() as usize;
            if m >= n {
                m = n - 1;
            }
            let mu = pos - m as f64;
            let hi = if m + 1 == n { vals[0] + 1.0 } else { vals[m + 1] };
            vals[m] + mu * (hi - vals[m]) + base
        };
        let mut total = 0.0;
        for j in 0..model.dim() {
            let w = omega.component(j);
            for (k, &x) in vals.iter().enumerate() {
                let d = x - eval(k as f64 / nf + w);
                total += 0.5 * d * d + model.potential(j).eval(x);
            }
        }
        total / nf
    }

    #[test]
    fn gradient_potential_term_scales_linearly() {
        let omega = RotationVector::new(vec![golden()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hull(64, &mut rng);
        let v = Potential::bump(16, 0.5, 0.5).unwrap();
        let m0 = Model::integrable(1);
        let m1 = Model::new(vec![v]).unwrap();
        let g0 = percival_gradient(&h, &omega, &m0).unwrap();
        let g1 = percival_gradient(&h, &omega, &m1).unwrap();
        // potential contribution = g1 - g0 = v'(h_k)/N, linear in v
        for k in 0..64 {
            let pot = g1[k] - g0[k];
            let expected = m1.potential(0).deriv(h.values()[k]) / 64.0;
            assert!((pot - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn gauge_invariance_of_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let omega = RotationVector::new(vec![golden()]).unwrap();
        let model = Model::uniform_bump(1, 16, 0.5, 0.5).unwrap();
        let h = random_hull(256, &mut rng);
        let f = percival_value(&h, &omega, &model).unwrap();
        let shifted =
            HullFunction::new(h.values().iter().map(|v| v + 1.0).collect()).unwrap();
        let fs = percival_value(&shifted, &omega, &model).unwrap();
        assert!((f - fs).abs() < 1e-12);
        // phase shifts: invariant within quadrature tolerance 1/N
        let n = h.resolution();
        for _ in 0..20 {
            let s: f64 = rng.gen_range(0.0..1.0);
            let rotated = HullFunction::new(
                (0..n)
                    .map(|k| h.evaluate_linear(k as f64 / n as f64 + s))
                    .collect(),
            )
            .unwrap();
            let fr = percival_value(&rotated, &omega, &model).unwrap();
            assert!((fr - f).abs() < 1.0 / n as f64, "|{fr} - {f}|");
        }
    }

    #[test]
    fn minimize_integrable_reaches_ground_truth() {
        let omega = RotationVector::quadratic_irrationals(2);
        let model = Model::integrable(2);
        let n = 256;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let init = random_hull(n, &mut rng);
        let params = MinimizeParams::for_resolution(n, 2);
        let res = minimize_percival(&omega, &model, &init, &params).unwrap();
        let expected: f64 = omega.components().iter().map(|w| w * w / 2.0).sum();
        assert!(
            (res.objective - expected).abs() < 1e-6,
            "objective {} vs {expected}",
            res.objective
        );
        assert!(res.gap <= 4.0 / n as f64, "gap {}", res.gap);
        // comparison principle
        let f_init = percival_value(&init, &omega, &model).unwrap();
        assert!(res.objective <= f_init);
    }

    #[test]
    fn minimize_fixed_point_converges_fast() {
        let omega = RotationVector::quadratic_irrationals(2);
        let model = Model::integrable(2);
        let n = 256;
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let init = random_hull(n, &mut rng);
        let params = MinimizeParams::for_resolution(n, 2);
        let res = minimize_percival(&omega, &model, &init, &params).unwrap();
        // re-minimize from the minimizer: objective unchanged within tol
        let res2 = minimize_percival(&omega, &model, &res.minimizer, &params).unwrap();
        assert!(res2.objective <= res.objective + params.tol_obj);
        assert!((res2.objective - res.objective).abs() < 1e-9);
    }

    #[test]
    fn minimize_result_consistency() {
        let omega = RotationVector::quadratic_irrationals(2);
        let model = Model::uniform_bump(2, 16, 0.5, 0.5).unwrap();
        let n = 256;
        let init = HullFunction::identity(n);
        let params = MinimizeParams::for_resolution(n, 2);
        let res = minimize_percival(&omega, &model, &init, &params).unwrap();
        let recomputed = percival_value(&res.minimizer, &omega, &model).unwrap();
        assert_eq!(res.objective, recomputed);
        assert_eq!(res.gap, res.minimizer.max_gap());
    }
}
