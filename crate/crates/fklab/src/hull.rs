//! Discretized monotone hull functions: the space Y of monotone degree-one
//! circle maps, evaluation conventions, gap detection, graph (Hausdorff)
//! distance, and Euclidean projection onto the monotone cone.

use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};

/// Slack for validating monotonicity of floating-point node values.
const MONOTONE_EPS: f64 = 1e-9;

/// Grid hull function: node values h_k = h(k/N), non-decreasing with
/// h_{N-1} <= h_0 + 1, extended to the line by h(theta+1) = h(theta)+1.
///
/// Two evaluation conventions are provided. `evaluate` is the
/// piecewise-constant left-continuous extension matching the convention of
/// the space Y (jumps are representable exactly between nodes).
/// `evaluate_linear` is the continuous monotone interpolant through the
/// nodes; quadrature and lattice sampling use it so that rigid rotations
/// are represented exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct HullFunction {
    values: Vec<f64>,
}

impl HullFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("hull requires at least one node".into()));
        }
        for v in &values {
            if !v.is_finite() {
                return Err(Error::InvalidParameter("hull values must be finite".into()));
            }
        }
        for k in 0..values.len() - 1 {
            if values[k + 1] < values[k] - MONOTONE_EPS {
                return Err(Error::InvalidParameter(format!(
                    "hull not monotone at node {k}: {} > {}",
                    values[k],
                    values[k + 1]
                )));
            }
        }
        let n = values.len();
        if values[n - 1] > values[0] + 1.0 + MONOTONE_EPS {
            return Err(Error::InvalidParameter(format!(
                "hull wrap violated: h[N-1] = {} > h[0] + 1 = {}",
                values[n - 1],
                values[0] + 1.0
            )));
        }
        Ok(HullFunction { values })
    }

    /// The identity hull h_k = k/N (rigid rotation).
    pub fn identity(n: usize) -> Self {
        HullFunction {
            values: (0..n).map(|k| k as f64 / n as f64).collect(),
        }
    }

    /// The pure step hull h_k = 0: a single unit jump per period.
    pub fn step(n: usize) -> Self {
        HullFunction {
            values: vec![0.0; n],
        }
    }

    pub fn resolution(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node_theta(&self, k: usize) -> f64 {
        k as f64 / self.values.len() as f64
    }

    /// Left-continuous piecewise-constant evaluation with the integer lift:
    /// the value on ((k-1)/N, k/N] is h_k, and h(theta+1) = h(theta) + 1.
    pub fn evaluate(&self, theta: f64) -> f64 {
        let n = self.values.len();
        let base = theta.floor();
        let frac = theta - base;
        let mut k = (frac * n as f64).ceil() as usize;
        if k > n {
            k = n;
        }
        let v = if k == n {
            self.values[0] + 1.0
        } else {
            self.values[k]
        };
        v + base
    }

    /// Continuous monotone piecewise-linear interpolant through the nodes,
    /// with the same integer lift. Exact for rigid rotations.
    pub fn evaluate_linear(&self, theta: f64) -> f64 {
        let n = self.values.len();
        let base = theta.floor();
        let frac = theta - base;
        let pos = frac * n as f64;
        let mut m = pos.floor() as usize;
        if m >= n {
            m = n - 1;
        }
        let mu = pos - m as f64;
        let lo = self.values[m];
        let hi = if m + 1 == n {
            self.values[0] + 1.0
        } else {
            self.values[m + 1]
        };
        lo + mu * (hi - lo) + base
    }

    /// Node increments h_{k+1} - h_k including the wrap increment
    /// h_0 + 1 - h_{N-1}.
    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.values.len();
        (0..n).map(move |k| {
            let next = if k + 1 == n {
                self.values[0] + 1.0
            } else {
                self.values[k + 1]
            };
            next - self.values[k]
        })
    }

    /// Largest node increment minus the resolution-forced 1/N, floored at 0.
    /// Zero (up to tolerance) for the discretization of a continuous hull.
    pub fn max_gap(&self) -> f64 {
        let n = self.values.len() as f64;
        let max_inc = self.increments().fold(0.0_f64, f64::max);
        (max_inc - 1.0 / n).max(0.0)
    }

    /// Shift by an integer so that h_0 lands in [0,1). The Percival value is
    /// exactly invariant under this gauge move.
    pub fn canonicalize(&mut self) {
        let shift = self.values[0].floor();
        if shift != 0.0 {
            for v in &mut self.values {
                *v -= shift;
            }
        }
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let n = self.values.len();
        writeln!(out, "k,theta,h")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{},{}", k, k as f64 / n as f64, v)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut values = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (idx == 0 && line.starts_with('k')) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::HullCsv {
                    line: idx + 1,
                    reason: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let v: f64 = fields[2].trim().parse().map_err(|e| Error::HullCsv {
                line: idx + 1,
                reason: format!("bad value: {e}"),
            })?;
            values.push(v);
        }
        HullFunction::new(values).map_err(|e| Error::HullCsv {
            line: 0,
            reason: e.to_string(),
        })
    }
}

/// Plain pool-adjacent-violators pass: Euclidean projection onto the
/// non-decreasing cone (equal weights).
fn pava(y: &[f64]) -> Vec<f64> {
    let mut means: Vec<f64> = Vec::with_capacity(y.len());
    let mut counts: Vec<usize> = Vec::with_capacity(y.len());
    for &v in y {
        means.push(v);
        counts.push(1);
        while means.len() > 1 && means[means.len() - 1] < means[means.len() - 2] {
            let (m2, c2) = (means.pop().unwrap(), counts.pop().unwrap());
            let last = means.len() - 1;
            let c1 = counts[last];
            means[last] = (means[last] * c1 as f64 + m2 * c2 as f64) / (c1 + c2) as f64;
            counts[last] = c1 + c2;
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (m, c) in means.iter().zip(&counts) {
        out.extend(std::iter::repeat_n(*m, *c));
    }
    out
}

/// Euclidean projection onto {h_0 <= ... <= h_{N-1} <= h_0 + 1}.
///
/// The chain part is PAVA; the wrap constraint couples the endpoints, so it
/// is handled through its Lagrange multiplier: the projection equals
/// PAVA(raw - lambda(e_{N-1} - e_0)) where lambda >= 0 is fixed by
/// complementary slackness and found by bisection (the wrap excess is
/// continuous and non-increasing in lambda).
pub fn project_monotone(raw: &[f64]) -> HullFunction {
    assert!(!raw.is_empty(), "project_monotone on empty input");
    let n = raw.len();
    if n == 1 {
        return HullFunction {
            values: raw.to_vec(),
        };
    }
    let solve = |lambda: f64| -> Vec<f64> {
        let mut z = raw.to_vec();
        z[0] += lambda;
        z[n - 1] -= lambda;
        pava(&z)
    };
    let excess = |x: &[f64]| x[n - 1] - x[0] - 1.0;

    let base = solve(0.0);
    if excess(&base) <= 0.0 {
        return HullFunction { values: base };
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while excess(&solve(hi)) > 0.0 {
        hi *= 2.0;
        if hi > 1e18 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(&solve(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    let mut values = solve(hi);
    // Squash any residual floating-point wrap excess.
    let e = excess(&values);
    if e > 0.0 {
        values[0] += 0.5 * e;
        values[n - 1] -= 0.5 * e;
        values = pava(&values);
    }
    HullFunction { values }
}

/// Segments of the completed graph of `h` over one period [0,1]:
/// horizontal runs at each node value plus vertical segments at jumps.
fn completed_segments(h: &HullFunction) -> Vec<[f64; 4]> {
    let n = h.values.len();
    let nf = n as f64;
    let val = |k: usize| -> f64 {
        if k >= n {
            h.values[k - n] + 1.0
        } else {
            h.values[k]
        }
    };
    let mut segs = Vec::with_capacity(2 * n);
    for k in 1..=n {
        segs.push([(k - 1) as f64 / nf, val(k), k as f64 / nf, val(k)]);
    }
    for k in 0..n {
        if val(k + 1) > val(k) {
            segs.push([k as f64 / nf, val(k), k as f64 / nf, val(k + 1)]);
        }
    }
    segs
}

fn point_segment_dist2(px: f64, py: f64, s: &[f64; 4]) -> f64 {
    let (ax, ay, bx, by) = (s[0], s[1], s[2], s[3]);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (ax + t * dx, ay + t * dy);
    (px - cx) * (px - cx) + (py - cy) * (py - cy)
}

fn sample_segments(segs: &[[f64; 4]], max_step: f64) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for s in segs {
        let len = ((s[2] - s[0]).powi(2) + (s[3] - s[1]).powi(2)).sqrt();
        let m = (len / max_step).ceil().max(1.0) as usize;
        for i in 0..=m {
            let t = i as f64 / m as f64;
            pts.push((s[0] + t * (s[2] - s[0]), s[1] + t * (s[3] - s[1])));
        }
    }
    pts
}

fn directed_hausdorff(points: &[(f64, f64)], segs: &[[f64; 4]]) -> f64 {
    let mut sup = 0.0_f64;
    for &(px, py) in points {
        let mut best = f64::INFINITY;
        // Lift-aware wraparound: compare against the previous and next
        // period copies, shifted diagonally by (1,1).
        for shift in [-1.0, 0.0, 1.0] {
            for s in segs {
                let d2 = point_segment_dist2(px - shift, py - shift, s);
                if d2 < best {
                    best = d2;
                }
            }
        }
        sup = sup.max(best);
    }
    sup.sqrt()
}

/// Hausdorff distance between the completed graphs of two hulls over one
/// fundamental period, with lift-aware wraparound. Brute force over
/// node-segment pairs; O(N^2), intended as a diagnostic.
pub fn graph_distance(h1: &HullFunction, h2: &HullFunction) -> f64 {
    let s1 = completed_segments(h1);
    let s2 = completed_segments(h2);
    let step1 = 0.25 / h1.resolution() as f64;
    let step2 = 0.25 / h2.resolution() as f64;
    let p1 = sample_segments(&s1, step1.min(step2));
    let p2 = sample_segments(&s2, step1.min(step2));
    directed_hausdorff(&p1, &s2).max(directed_hausdorff(&p2, &s1))
}

/// Sup over grid nodes outside `excluded` of |h(theta) - (theta + c)|,
/// minimized over the free phase c. Measures deviation from rigid rotation
/// away from the potential support.
pub fn sup_deviation_from_identity(h: &HullFunction, excluded: Option<(f64, f64)>) -> f64 {
    let n = h.values.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (k, &v) in h.values.iter().enumerate() {
        let theta = k as f64 / n as f64;
        if let Some((a, b)) = excluded {
            if theta >= a && theta <= b {
                continue;
            }
        }
        let d = v - theta;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if lo > hi {
        return 0.0;
    }
    0.5 * (hi - lo)
}

/// Random element of the discretized Y: Dirichlet-like increments with an
/// occasional macroscopic jump. Used by property tests and surveys.
pub fn random_hull<R: Rng>(n: usize, rng: &mut R) -> HullFunction {
    let mut inc: Vec<f64> = (0..n)
        .map(|_| -(rng.gen::<f64>().max(1e-300)).ln())
        .collect();
    if rng.gen::<f64>() < 0.5 {
        let j = rng.gen_range(0..n);
        let total: f64 = inc.iter().sum();
        inc[j] += rng.gen_range(0.0..3.0) * total;
    }
    let total: f64 = inc.iter().sum();
    let h0: f64 = rng.gen_range(0.0..1.0);
    let mut values = Vec::with_capacity(n);
    let mut acc = 0.0;
    for item in inc.iter().take(n) {
        values.push(h0 + acc / total);
        acc += item;
    }
    HullFunction { values }
}
