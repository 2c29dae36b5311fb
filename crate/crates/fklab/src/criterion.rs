//! Torus-destruction machinery: the increment-energy estimate, the plateau
//! competitor construction, destruction margins, and the exponent comparison
//! that certifies destruction exactly for support exponents r < 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hull::{sup_deviation_from_identity, HullFunction};
use crate::model::{Model, Potential};

/// Switch points of the plateau competitor built from a continuous hull h1:
/// h2 = h1 outside (A, B] and h2 = x0 - R (the `plateau`) on (A, B].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CompetitorSpec {
    pub a: f64,
    pub b: f64,
    pub plateau: f64,
}

/// Both sides of the destruction inequality for one direction, with the
/// plain margin (lhs - rhs) and the conservative factor-2 margin
/// (lhs - 2 rhs). Destruction is claimed only on the conservative margin.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CriterionReport {
    pub direction: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub margin_factor2: f64,
    pub destroys: bool,
}

impl CriterionReport {
    fn new(direction: usize, lhs: f64, rhs: f64) -> Self {
        let margin = lhs - rhs;
        let margin_factor2 = lhs - 2.0 * rhs;
        CriterionReport {
            direction,
            lhs,
            rhs,
            margin,
            margin_factor2,
            destroys: margin_factor2 > 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EstimateLemmaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Range of the proof intermediate Delta(theta); contained in [0,2]
    /// for monotone degree-one hulls.
    pub delta_min: f64,
    pub delta_max: f64,
}

/// Checks |int (h1(t+w)-h1(t))^2 - (h2(t+w)-h2(t))^2 dt|
///        <= 2 int |h1 - h2| dt
/// by node quadrature with the left-continuous evaluation. `holds` allows
/// quadrature slack 8/N on top of the right-hand side.
pub fn check_estimate_lemma(
    h1: &HullFunction,
    h2: &HullFunction,
    omega_j: f64,
) -> EstimateLemmaCheck {
    let n = h1.resolution().max(h2.resolution());
    let nf = n as f64;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut delta_min = f64::INFINITY;
    let mut delta_max = f64::NEG_INFINITY;
    for k in 0..n {
        let t = k as f64 / nf;
        let a1 = h1.evaluate(t + omega_j) - h1.evaluate(t);
        let a2 = h2.evaluate(t + omega_j) - h2.evaluate(t);
        lhs += a1 * a1 - a2 * a2;
        rhs += (h1.evaluate(t) - h2.evaluate(t)).abs();
        let delta = a1 + a2;
        delta_min = delta_min.min(delta);
        delta_max = delta_max.max(delta);
    }
    let lhs = (lhs / nf).abs();
    let rhs = 2.0 * rhs / nf;
    EstimateLemmaCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 8.0 / nf,
        delta_min,
        delta_max,
    }
}

/// Locates the competitor switch points on the continuous interpolant of h1
/// by bisection: A is the leftmost crossing of level x0 - R, B the rightmost
/// crossing of x0 + R, both resolved modulo the integer lift gauge of h1.
pub fn competitor_switch_points(h1: &HullFunction, v: &Potential) -> Result<CompetitorSpec> {
    let (x0, radius) = match v {
        Potential::Bump { x0, radius, .. } => (*x0, *radius),
        _ => {
            return Err(Error::InvalidParameter(
                "competitor construction requires a bump potential".into(),
            ))
        }
    };
    let h_at = |t: f64| h1.evaluate_linear(t);
    let h0 = h_at(0.0);
    // integer lift putting the level x0 - R inside [h(0), h(0)+1)
    let lift = (h0 - (x0 - radius)).ceil();
    let lev_a = x0 - radius + lift;
    let lev_b = x0 + radius + lift;

    let crossing = |lev: f64, leftmost: bool| -> f64 {
        // monotone continuous h on [0,1] with h(1) = h(0)+1
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let hv = h_at(mid);
            let go_left = if leftmost { hv >= lev } else { hv > lev };
            if go_left {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let a = crossing(lev_a, true);
    let b = crossing(lev_b, false);
    if a >= b {
        return Err(Error::PreimageNotFound {
            nr: h1.resolution() as f64 * radius,
        });
    }
    Ok(CompetitorSpec {
        a,
        b,
        plateau: lev_a,
    })
}

/// Grid realization of the plateau competitor: node values equal h1 outside
/// the support preimage and the constant x0 - R across it, giving a jump of
/// about 2R at theta = B. Requires the grid to resolve the support
/// (N * R >= 4).
pub fn construct_competitor(
    h1: &HullFunction,
    v: &Potential,
) -> Result<(HullFunction, CompetitorSpec)> {
    let radius = v.support_radius().ok_or_else(|| {
        Error::InvalidParameter("competitor construction requires a bump potential".into())
    })?;
    let n = h1.resolution();
    let nf = n as f64;
    if nf * radius < 4.0 {
        return Err(Error::PreimageNotFound { nr: nf * radius });
    }
    let spec = competitor_switch_points(h1, v)?;
    let lev_b = spec.plateau + 2.0 * radius;
    // A = min{k/N : h1_k >= x0 - R}, B = max{k/N : h1_k <= x0 + R}
    let vals = h1.values();
    let ka = (0..n)
        .find(|&k| vals[k] >= spec.plateau)
        .ok_or(Error::PreimageNotFound { nr: nf * radius })?;
    let kb = (0..n)
        .rev()
        .find(|&k| vals[k] <= lev_b)
        .ok_or(Error::PreimageNotFound { nr: nf * radius })?;
    if kb < ka {
        return Err(Error::PreimageNotFound { nr: nf * radius });
    }
    let mut out = vals.to_vec();
    for item in out.iter_mut().take(kb + 1).skip(ka) {
        *item = spec.plateau;
    }
    let h2 = HullFunction::new(out)?;
    Ok((h2, spec))
}

/// Destruction margin by node quadrature on the common grid:
/// lhs = int v(h1) - v(h2), rhs = int |h1 - h2|. For the plateau competitor
/// the h2 term vanishes exactly (its values never enter the open support).
pub fn destruction_margin(
    h1: &HullFunction,
    h2: &HullFunction,
    v: &Potential,
    direction: usize,
) -> CriterionReport {
    let n = h1.resolution().max(h2.resolution());
    let nf = n as f64;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for k in 0..n {
        let t = k as f64 / nf;
        let a = h1.evaluate(t);
        let b = h2.evaluate(t);
        lhs += v.eval(a) - v.eval(b);
        rhs += (a - b).abs();
    }
    CriterionReport::new(direction, lhs / nf, rhs / nf)
}

/// Destruction margin computed semi-analytically from the switch points:
/// both integrands vanish outside [A, B], so the integrals are evaluated by
/// midpoint quadrature on a dense sub-grid of [A, B] alone. This stays
/// accurate when the support radius is far below the hull grid spacing,
/// where the grid competitor is not representable.
pub fn destruction_margin_spec(
    h1: &HullFunction,
    spec: &CompetitorSpec,
    v: &Potential,
    direction: usize,
) -> CriterionReport {
    let k = 8192;
    let width = spec.b - spec.a;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..k {
        let t = spec.a + width * (i as f64 + 0.5) / k as f64;
        let hv = h1.evaluate_linear(t);
        lhs += v.eval(hv);
        rhs += (hv - spec.plateau).abs();
    }
    lhs *= width / k as f64;
    rhs *= width / k as f64;
    CriterionReport::new(direction, lhs, rhs)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalingExponents {
    pub potential_exp: f64,
    pub distance_exp: f64,
    pub destroys_asymptotically: bool,
}

/// The exponent comparison: the potential integral scales like
/// n^-(1 + 1/r), the distance integral like n^-(2/r); the competitor wins
/// asymptotically iff 2/r > 1 + 1/r, i.e. r < 1.
pub fn scaling_exponents(r: f64) -> Result<ScalingExponents> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::InvalidParameter(format!("scaling_exponents requires r > 0, got {r}")));
    }
    let potential_exp = 1.0 + 1.0 / r;
    let distance_exp = 2.0 / r;
    Ok(ScalingExponents {
        potential_exp,
        distance_exp,
        destroys_asymptotically: distance_exp > potential_exp,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SurveyEntry {
    pub report: CriterionReport,
    /// Sup deviation of h1 from a rigid rotation off the support preimage.
    pub sup_deviation: f64,
    pub spec: CompetitorSpec,
}

/// For each continuous hull in the family, builds the plateau competitor in
/// direction `j` and reports the destruction margin. A positive conservative
/// margin certifies (at this resolution) that the hull cannot be the profile
/// of a continuous minimizer near the support.
pub fn necessary_condition_survey(
    model: &Model,
    family: &[HullFunction],
    j: usize,
) -> Result<Vec<SurveyEntry>> {
    let v = model.potential(j);
    let kappa = 4.0;
    let mut out = Vec::with_capacity(family.len());
    for h1 in family {
        let n = h1.resolution() as f64;
        if h1.max_gap() > kappa / n {
            return Err(Error::InvalidParameter(format!(
                "survey hull not continuous at resolution: max_gap {} > {}",
                h1.max_gap(),
                kappa / n
            )));
        }
        let spec = competitor_switch_points(h1, v)?;
        let report = destruction_margin_spec(h1, &spec, v, j);
        let sup_deviation = sup_deviation_from_identity(h1, Some((spec.a, spec.b)));
        out.push(SurveyEntry {
            report,
            sup_deviation,
            spec,
        });
    }
    Ok(out)
}

/// Identity plus `count - 1` seeded smooth monotone perturbations
/// theta + sum a_k sin(2 pi k theta) / (2 pi k) with sum |a_k| < 1,
/// sampled on an N-node grid. Brackets the near-rigid-rotation regime where
/// continuous minimizer candidates live.
pub fn smooth_hull_family(n: usize, count: usize, seed: u64) -> Vec<HullFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut family = vec![HullFunction::identity(n)];
    while family.len() < count {
        let modes = 8;
        let mut a: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let total: f64 = a.iter().map(|x| x.abs()).sum();
        let target: f64 = rng.gen_range(0.2..0.8);
        for x in &mut a {
            *x *= target / total;
        }
        let values: Vec<f64> = (0..n)
            .map(|kidx| {
                let t = kidx as f64 / n as f64;
                let mut v = t;
                for (m, &coef) in a.iter().enumerate() {
                    let k = (m + 1) as f64;
                    v += coef * (2.0 * std::f64::consts::PI * k * t).sin()
                        / (2.0 * std::f64::consts::PI * k);
                }
                v
            })
            .collect();
        family.push(HullFunction::new(values).expect("perturbation preserves monotonicity"));
    }
    family
}
