//! The monotonicity-formula suite: the ACF product functional J, Almgren's
//! frequency N = rD/H with its almost-monotonicity defect, and the Monneau
//! shell potential M with its growth check, together with the two-phase
//! combination v = h(Q) u+ - u-.
//!
//! Grid sampling with centered differences plays the role of the mollified
//! fields: every derivative-of-trace quantity carries a declared
//! discretization slack delta(h) and the limits are replaced by
//! grid-refinement studies.

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::grid::{HarmonicPair, ScalarField};
use crate::optim;
use crate::trace::RadialTrace;

/// Integral of 1/|y| over the unit cube centered at the origin; scaled by
/// h^2 it is the exact cell integral of the ACF kernel over the singular
/// node's dual cell in 3D.
const CUBE_KERNEL_INTEGRAL: f64 = 2.380077511109949;

/// The two-phase field v(x) = h(Q) u+(x) - u-(x) anchored at a boundary
/// point Q.
#[derive(Debug, Clone)]
pub struct VField {
    pub q: Point,
    pub h_q: f64,
    pub field: ScalarField,
}

/// v = h(Q) u+ - u-, with h(Q) = K^-(Q)/K^+(Q) looked up from the pair's
/// boundary tables. `q` snaps to the nearest boundary sample.
pub fn build_v(pair: &HarmonicPair, q: &[f64]) -> Result<VField> {
    let idx = pair.boundary.nearest(q);
    let q_snap = pair.boundary.points[idx].clone();
    let h_q = pair.boundary.density_minus[idx] / pair.boundary.density_plus[idx];
    if !(h_q.is_finite() && h_q > 0.0) {
        return Err(Error::Degenerate(format!("h(Q) = {h_q} must be positive")));
    }
    let mut field = ScalarField::zeros(pair.spec.clone());
    for i in 0..field.values.len() {
        field.values[i] = h_q * pair.u_plus.values[i] - pair.u_minus.values[i];
    }
    Ok(VField {
        q: q_snap,
        h_q,
        field,
    })
}

/// Partial-volume weight of a node's dual cell against the ball boundary:
/// 1 deep inside, 0 outside, linear ramp across the rim layer.
fn ball_weight(dist: f64, r: f64, h: f64) -> f64 {
    ((r - dist + 0.5 * h) / h).clamp(0.0, 1.0)
}

/// ACF product functional
/// J(x, r) = r^-2 (int |grad f+|^2 w)^(1/2) (int |grad f-|^2 w)^(1/2),
/// weight w = |x-y|^(2-n). The cell containing the singularity uses the
/// exact cell average of the kernel; elsewhere the node value.
pub fn acf_j(f: &ScalarField, x: &[f64], r: f64) -> Result<f64> {
    let spec = &f.spec;
    let h = spec.h();
    if r < 8.0 * h {
        return Err(Error::UnderResolved(format!("r = {r} below 8h")));
    }
    let nodes = spec.nodes_in_ball(x, r);
    let scale = nodes
        .iter()
        .map(|&i| f.values[i].abs())
        .fold(0.0f64, f64::max);
    if f.eval(x).abs() > 1e-3 * scale.max(1e-300) {
        return Err(Error::validation(format!(
            "x is not a zero of f: f(x) = {}",
            f.eval(x)
        )));
    }
    let dim = spec.dimension;
    let cell = h.powi(dim as i32);
    let mut plus = 0.0;
    let mut minus = 0.0;
    for &flat in &nodes {
        let idx = spec.unflat(flat);
        let y = spec.node_coord(&idx);
        let value = f.values[flat];
        let dist = geom::dist(&y, x);
        let w = match dim {
            2 => 1.0,
            _ => {
                if dist < 0.5 * h {
                    // singular node: exact kernel integral over the dual
                    // cell, divided by the cell volume
                    CUBE_KERNEL_INTEGRAL * h * h / cell
                } else {
                    1.0 / dist
                }
            }
        };
        let base = w * ball_weight(dist, r, h) * cell;
        if value > 0.0 {
            let grad = f.grad_at_node(&idx);
            plus += geom::dot(&grad, &grad) * base;
        } else if value < 0.0 {
            let grad = f.grad_at_node(&idx);
            minus += geom::dot(&grad, &grad) * base;
        } else {
            // node exactly on the interface: its dual cell is split half
            // and half, with per-phase one-sided gradients so that a
            // vanishing phase contributes nothing
            let gp = one_sided_phase_grad(f, &idx, 1.0);
            let gm = one_sided_phase_grad(f, &idx, -1.0);
            plus += geom::dot(&gp, &gp) * 0.5 * base;
            minus += geom::dot(&gm, &gm) * 0.5 * base;
        }
    }
    Ok((plus * minus).sqrt() / (r * r))
}

/// One-sided gradient at an interface node, restricted to the phase of the
/// given sign: per axis, the difference toward a neighbor carrying that
/// sign (zero when neither neighbor does).
fn one_sided_phase_grad(f: &ScalarField, idx: &[usize], sign: f64) -> Point {
    let spec = &f.spec;
    let h = spec.h();
    let center = f.values[spec.flat(idx)];
    (0..spec.dimension)
        .map(|k| {
            let mut best = 0.0f64;
            if idx[k] + 1 < spec.n_nodes(k) {
                let mut ip = idx.to_vec();
                ip[k] += 1;
                let v = f.values[spec.flat(&ip)];
                if v * sign > 0.0 {
                    best = (v - center) / h;
                }
            }
            if idx[k] > 0 {
                let mut im = idx.to_vec();
                im[k] -= 1;
                let v = f.values[spec.flat(&im)];
                if v * sign > 0.0 {
                    let cand = (center - v) / h;
                    if cand.abs() > best.abs() {
                        best = cand;
                    }
                }
            }
            best
        })
        .collect()
}

/// Trace of r -> J(x, r) along decreasing radii. Slack: the phase masses
/// carry an O(h/r) interface-band error, scaled by the trace magnitude.
pub fn j_trace(f: &ScalarField, x: &[f64], radii: &[f64]) -> Result<RadialTrace> {
    let values: Result<Vec<f64>> = radii.iter().map(|&r| acf_j(f, x, r)).collect();
    let values = values?;
    let h = f.spec.h();
    let r_min = radii.last().copied().unwrap_or(1.0);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let slack = 4.0 * (h / r_min) * mean.abs().max(1e-300);
    RadialTrace::new(x.to_vec(), radii.to_vec(), values, "J", slack)
}

/// Points and weights of the quadrature on the sphere of radius r:
/// 512-point trapezoid on the circle in 2D, 64 x 128 latitude-longitude in
/// 3D.
fn sphere_quadrature(dim: usize, center: &[f64], r: f64) -> Vec<(Point, f64)> {
    match dim {
        2 => {
            let n = 512;
            let w = std::f64::consts::TAU * r / n as f64;
            (0..n)
                .map(|i| {
                    let t = std::f64::consts::TAU * i as f64 / n as f64;
                    (
                        vec![center[0] + r * t.cos(), center[1] + r * t.sin()],
                        w,
                    )
                })
                .collect()
        }
        3 => {
            let (nt, np) = (64, 128);
            let dt = std::f64::consts::PI / nt as f64;
            let dp = std::f64::consts::TAU / np as f64;
            let mut out = Vec::with_capacity(nt * np);
            for j in 0..nt {
                let theta = (j as f64 + 0.5) * dt;
                let w = r * r * theta.sin() * dt * dp;
                for k in 0..np {
                    let phi = k as f64 * dp;
                    out.push((
                        vec![
                            center[0] + r * theta.sin() * phi.cos(),
                            center[1] + r * theta.sin() * phi.sin(),
                            center[2] + r * theta.cos(),
                        ],
                        w,
                    ));
                }
            }
            out
        }
        _ => unreachable!(),
    }
}

fn check_vanishes_at(f: &ScalarField, x0: &[f64], r: f64) -> Result<()> {
    let h = f.spec.h();
    if r < 8.0 * h {
        return Err(Error::UnderResolved(format!("r = {r} below 8h = {}", 8.0 * h)));
    }
    let scale = f.max_abs();
    if f.eval(x0).abs() > 1e-3 * scale.max(1e-300) {
        return Err(Error::validation(format!(
            "x0 is not a zero of f: f(x0) = {}",
            f.eval(x0)
        )));
    }
    Ok(())
}

/// H(r) = integral of f^2 over the sphere of radius r around x0.
pub fn almgren_h(f: &ScalarField, x0: &[f64], r: f64) -> Result<f64> {
    check_vanishes_at(f, x0, r)?;
    let quad = sphere_quadrature(f.spec.dimension, x0, r);
    Ok(quad
        .iter()
        .map(|(p, w)| {
            let v = f.eval(p);
            v * v * w
        })
        .sum())
}

/// D(r) = integral of |grad f|^2 over the ball of radius r around x0,
/// centered differences at nodes, partial-volume rim weights.
pub fn almgren_d(f: &ScalarField, x0: &[f64], r: f64) -> Result<f64> {
    check_vanishes_at(f, x0, r)?;
    let spec = &f.spec;
    let h = spec.h();
    let cell = h.powi(spec.dimension as i32);
    let mut total = 0.0;
    for flat in spec.nodes_in_ball(x0, r) {
        let idx = spec.unflat(flat);
        let y = spec.node_coord(&idx);
        let grad = f.grad_at_node(&idx);
        total += geom::dot(&grad, &grad) * ball_weight(geom::dist(&y, x0), r, h) * cell;
    }
    Ok(total)
}

/// Almgren frequency N(r) = r D(r) / H(r).
pub fn almgren_n(f: &ScalarField, x0: &[f64], r: f64) -> Result<f64> {
    let h_val = almgren_h(f, x0, r)?;
    let scale = f.max_abs();
    if h_val <= 1e-14 * scale * scale {
        return Err(Error::Degenerate(format!(
            "degenerate shell: H(r) = {h_val:.3e}"
        )));
    }
    let d_val = almgren_d(f, x0, r)?;
    Ok(r * d_val / h_val)
}

/// Trace of r -> N(r, x0, f) along decreasing radii. Slack: H and D are
/// second-order accurate away from kinks, so N carries O((h/r)^2) noise.
pub fn frequency_trace(f: &ScalarField, x0: &[f64], radii: &[f64]) -> Result<RadialTrace> {
    let values: Result<Vec<f64>> = radii.iter().map(|&r| almgren_n(f, x0, r)).collect();
    let h = f.spec.h();
    let r_min = radii.last().copied().unwrap_or(1.0);
    let slack = 2.0 * (h / r_min) * (h / r_min);
    RadialTrace::new(x0.to_vec(), radii.to_vec(), values?, "N", slack)
}

/// A 1-homogeneous polynomial p(x) = coeffs . x.
#[derive(Debug, Clone)]
pub struct LinearForm {
    pub coeffs: Point,
}

impl LinearForm {
    pub fn new(coeffs: &[f64]) -> LinearForm {
        LinearForm {
            coeffs: coeffs.to_vec(),
        }
    }

    /// c * (x . nu) for a unit direction nu and slope c.
    pub fn from_direction(nu: &[f64], c: f64) -> LinearForm {
        LinearForm {
            coeffs: geom::scale(nu, c),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        geom::dot(&self.coeffs, x)
    }

    /// sup over the unit sphere, i.e. the Euclidean norm of the coefficients.
    pub fn sup_norm_unit_sphere(&self) -> f64 {
        geom::norm(&self.coeffs)
    }
}

/// Monneau potential M(r) = r^-(n+1) int_{sphere r} (f(x0 + x) - p(x))^2.
pub fn monneau_m(f: &ScalarField, p: &LinearForm, x0: &[f64], r: f64) -> Result<f64> {
    check_vanishes_at(f, x0, r)?;
    let dim = f.spec.dimension;
    let quad = sphere_quadrature(dim, x0, r);
    let total: f64 = quad
        .iter()
        .map(|(y, w)| {
            let rel = geom::sub(y, x0);
            let d = f.eval(y) - p.eval(&rel);
            d * d * w
        })
        .sum();
    Ok(total / r.powi(dim as i32 + 1))
}

/// Trace of r -> M(r, p) along decreasing radii. Slack: shell interpolation
/// noise, O((h/r)^2) relative to the trace magnitude.
pub fn monneau_trace(
    f: &ScalarField,
    p: &LinearForm,
    x0: &[f64],
    radii: &[f64],
) -> Result<RadialTrace> {
    let values: Result<Vec<f64>> = radii.iter().map(|&r| monneau_m(f, p, x0, r)).collect();
    let values = values?;
    let h = f.spec.h();
    let r_min = radii.last().copied().unwrap_or(1.0);
    let peak = values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let slack = 8.0 * (h / r_min) * (h / r_min) * peak.max(1e-300);
    RadialTrace::new(x0.to_vec(), radii.to_vec(), values, "M", slack)
}

/// Almost-monotonicity defect of the frequency over one window [R/4, R]:
/// the sup of the negative part of N'(r), estimated by finite differences
/// on log-spaced radii.
#[derive(Debug, Clone)]
pub struct DefectWindow {
    pub r_lo: f64,
    pub r_hi: f64,
    /// sup over the window of (N')^-
    pub sup_neg_slope: f64,
    /// sup_neg_slope * R, the quantity bounded by k R^(alpha/2)
    pub defect: f64,
    /// declared discretization slack for `defect`
    pub slack: f64,
    pub trace: RadialTrace,
    pub under_resolved: bool,
}

/// Declared slack for a defect window: the O((h/r)^2) frequency noise at the
/// inner radius, amplified by the finite-difference spacing and scaled by
/// the outer radius. Quarters under grid halving.
pub fn defect_slack(h: f64, r_outer: f64, n_sub: usize) -> f64 {
    let spacing = 4.0f64.powf(1.0 / n_sub as f64) - 1.0;
    128.0 * h * h / (r_outer * r_outer * spacing)
}

pub fn almgren_defect(v: &VField, r_outer: f64, n_sub: usize) -> Result<DefectWindow> {
    if n_sub < 8 {
        return Err(Error::validation("n_sub must be >= 8"));
    }
    let r_lo = r_outer / 4.0;
    let radii: Vec<f64> = (0..=n_sub)
        .map(|i| {
            let t = i as f64 / n_sub as f64;
            // log-spaced, decreasing from r_outer to r_outer/4
            r_outer * (r_lo / r_outer).powf(t)
        })
        .collect();
    let trace = frequency_trace(&v.field, &v.q, &radii)?;
    let mut sup_neg = 0.0f64;
    for (_, slope) in trace.derivative() {
        // slope is dN/dr; its negative part drives the defect
        sup_neg = sup_neg.max((-slope).max(0.0));
    }
    // noise heuristic: adjacent oscillation much larger than the overall trend
    let osc = trace
        .values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0f64, f64::max);
    let trend = (trace.values.first().unwrap() - trace.values.last().unwrap()).abs();
    let under_resolved = osc > 10.0 * trend.max(trace.slack);
    let h = v.field.spec.h();
    Ok(DefectWindow {
        r_lo,
        r_hi: r_outer,
        sup_neg_slope: sup_neg,
        defect: sup_neg * r_outer,
        slack: defect_slack(h, r_outer, n_sub),
        trace,
        under_resolved,
    })
}

/// Defect windows across several outer radii plus the log-log regression of
/// defect against R (the theoretical bound is k R^(alpha/2)).
#[derive(Debug, Clone)]
pub struct DefectRegression {
    pub windows: Vec<DefectWindow>,
    /// fitted (k, exponent) of defect ~ k R^e over windows with real signal
    pub fit: Option<(f64, f64)>,
    /// true when every window's defect sits below its declared slack
    pub monotone_within_slack: bool,
}

pub fn defect_regression(v: &VField, r_outers: &[f64], n_sub: usize) -> Result<DefectRegression> {
    let mut windows = Vec::with_capacity(r_outers.len());
    for &r in r_outers {
        windows.push(almgren_defect(v, r, n_sub)?);
    }
    let signal: Vec<&DefectWindow> = windows
        .iter()
        .filter(|w| w.defect > w.slack)
        .collect();
    let monotone_within_slack = signal.is_empty();
    let fit = if signal.len() >= 2 {
        let rs: Vec<f64> = signal.iter().map(|w| w.r_hi).collect();
        let ds: Vec<f64> = signal.iter().map(|w| w.defect).collect();
        Some(optim::power_fit(&rs, &ds))
    } else {
        None
    };
    Ok(DefectRegression {
        windows,
        fit,
        monotone_within_slack,
    })
}

/// One adjacent-pair record of the Monneau growth check.
#[derive(Debug, Clone)]
pub struct MonneauDrop {
    pub r_small: f64,
    pub r_big: f64,
    /// M(R) - M(r); negative values are the "drops" the growth lemma bounds
    pub drop: f64,
}

/// Growth check for the Monneau potential: records M(R) - M(r) for adjacent
/// radius pairs and fits the negative drops against R^e.
#[derive(Debug, Clone)]
pub struct MonneauGrowthReport {
    pub drops: Vec<MonneauDrop>,
    pub trace: RadialTrace,
    /// fitted (C, exponent) over pairs with a genuine negative drop
    pub fit: Option<(f64, f64)>,
    pub monotone_within_slack: bool,
    pub p_sup_norm: f64,
}

pub fn monneau_growth_check(
    v: &VField,
    p: &LinearForm,
    radii: &[f64],
) -> Result<MonneauGrowthReport> {
    if radii.len() < 2 {
        return Err(Error::validation("need at least two radii"));
    }
    let span = radii.first().unwrap() / radii.last().unwrap();
    if span < 10.0 - 1e-9 {
        return Err(Error::validation(
            "radius list must span at least one decade",
        ));
    }
    let trace = monneau_trace(&v.field, p, &v.q, radii)?;
    let mut drops = Vec::new();
    for i in 0..radii.len() - 1 {
        let (r_big, r_small) = (radii[i], radii[i + 1]);
        if r_small < r_big / 4.0 - 1e-12 {
            continue; // growth lemma window is [R/4, R]
        }
        drops.push(MonneauDrop {
            r_small,
            r_big,
            drop: trace.values[i] - trace.values[i + 1],
        });
    }
    let m_scale = trace.values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let slack = trace.slack * m_scale.max(1e-300);
    let negatives: Vec<&MonneauDrop> = drops
        .iter()
        .filter(|d| d.drop < -slack)
        .collect();
    let monotone_within_slack = negatives.is_empty();
    let fit = if negatives.len() >= 2 {
        let rs: Vec<f64> = negatives.iter().map(|d| d.r_big).collect();
        let ds: Vec<f64> = negatives.iter().map(|d| -d.drop).collect();
        Some(optim::power_fit(&rs, &ds))
    } else {
        None
    };
    Ok(MonneauGrowthReport {
        drops,
        trace,
        fit,
        monotone_within_slack,
        p_sup_norm: p.sup_norm_unit_sphere(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use std::f64::consts::PI;

    fn spec2(n: usize) -> GridSpec {
        GridSpec::square(&[-1.0, -1.0], &[1.0, 1.0], n).unwrap()
    }

    fn spec2_fine(n: usize) -> GridSpec {
        GridSpec::square(&[-0.6, -0.6], &[0.6, 0.6], n).unwrap()
    }

    #[test]
    fn acf_j_of_linear_two_phase_is_half_pi() {
        // f = x2: each phase integral is pi r^2 / 2, J = pi/2, for every r
        let f = ScalarField::from_fn(spec2(256), |x| x[1]);
        for r in [0.2, 0.35, 0.5] {
            let j = acf_j(&f, &[0.0, 0.0], r).unwrap();
            assert!(
                (j - PI / 2.0).abs() / (PI / 2.0) < 0.03,
                "J({r}) = {j}, expected {}",
                PI / 2.0
            );
        }
        // tilted interface: same value
        let nu = geom::normalized(&[0.3, 0.95]);
        let g = ScalarField::from_fn(spec2(256), |x| geom::dot(x, &nu));
        let j = acf_j(&g, &[0.0, 0.0], 0.4).unwrap();
        assert!((j - PI / 2.0).abs() / (PI / 2.0) < 0.03, "tilted J = {j}");
    }

    #[test]
    fn acf_j_one_phase_is_zero() {
        let f = ScalarField::from_fn(spec2(128), |x| (x[1]).max(0.0));
        let j = acf_j(&f, &[0.0, 0.0], 0.4).unwrap();
        assert_eq!(j, 0.0);
    }

    #[test]
    fn acf_j_linear_3d_is_pi() {
        // f = x3 in 3D: int over half ball of |y|^-1 = pi r^2 per phase
        let spec = GridSpec::square(&[-1.0; 3], &[1.0; 3], 96).unwrap();
        let f = ScalarField::from_fn(spec, |x| x[2]);
        let j = acf_j(&f, &[0.0; 3], 0.5).unwrap();
        assert!((j - PI).abs() / PI < 0.05, "J = {j}, expected {PI}");
    }

    #[test]
    fn acf_rejects_non_zero_center() {
        let f = ScalarField::from_fn(spec2(64), |x| x[1] + 0.5);
        assert!(acf_j(&f, &[0.0, 0.0], 0.3).is_err());
    }

    #[test]
    fn almgren_h_of_x2_is_pi_r_cubed() {
        let f = ScalarField::from_fn(spec2(256), |x| x[1]);
        for r in [0.2, 0.4] {
            let h = almgren_h(&f, &[0.0, 0.0], r).unwrap();
            let exact = PI * r.powi(3);
            assert!((h - exact).abs() / exact < 0.02, "H({r}) = {h} vs {exact}");
        }
    }

    #[test]
    fn frequency_of_homogeneous_harmonics() {
        // N(r) = k for Re((x1 + i x2)^k), k = 1, 2, 3
        let spec = spec2_fine(512);
        let polys: [(f64, Box<dyn Fn(&[f64]) -> f64>); 3] = [
            (1.0, Box::new(|x: &[f64]| x[1])),
            (2.0, Box::new(|x: &[f64]| x[0] * x[0] - x[1] * x[1])),
            (3.0, Box::new(|x: &[f64]| x[0].powi(3) - 3.0 * x[0] * x[1] * x[1])),
        ];
        for (k, poly) in &polys {
            let f = ScalarField::from_fn(spec.clone(), poly);
            for r in [0.1, 0.2, 0.3, 0.5] {
                let n = almgren_n(&f, &[0.0, 0.0], r).unwrap();
                assert!(
                    (n - k).abs() / k < 0.02,
                    "N({r}) = {n} for degree {k} polynomial"
                );
            }
        }
    }

    #[test]
    fn degenerate_shell_rejected() {
        let f = ScalarField::from_fn(spec2(64), |x| if x[0] > 0.9 { 1.0 } else { 0.0 });
        // f vanishes on the whole shell r = 0.5
        assert!(matches!(
            almgren_n(&f, &[0.0, 0.0], 0.5),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn monneau_matches_closed_forms() {
        let spec = spec2(256);
        // f = p: M = 0
        let p = LinearForm::new(&[0.0, 2.0]);
        let f = ScalarField::from_fn(spec.clone(), |x| 2.0 * x[1]);
        let m = monneau_m(&f, &p, &[0.0, 0.0], 0.4).unwrap();
        assert!(m < 1e-10, "M = {m}");
        // f = x2, p = 2 x2: M(r) = r^-3 int (x2)^2 = pi
        let f2 = ScalarField::from_fn(spec.clone(), |x| x[1]);
        for r in [0.2, 0.4, 0.7] {
            let m = monneau_m(&f2, &p, &[0.0, 0.0], r).unwrap();
            assert!((m - PI).abs() / PI < 0.02, "M({r}) = {m}");
        }
        // harmonic degree-2 with p = 0: M = c r^2, decreasing to 0
        let f3 = ScalarField::from_fn(spec, |x| x[0] * x[0] - x[1] * x[1]);
        let p0 = LinearForm::new(&[0.0, 0.0]);
        let m1 = monneau_m(&f3, &p0, &[0.0, 0.0], 0.2).unwrap();
        let m2 = monneau_m(&f3, &p0, &[0.0, 0.0], 0.4).unwrap();
        assert!((m2 / m1 - 4.0).abs() < 0.1, "ratio {}", m2 / m1);
    }

    #[test]
    fn monneau_almgren_identity_for_harmonic_polynomial() {
        // for harmonic v: (H/r^{n+1})(N - 1) = r M'/2
        let spec = spec2(512);
        let f = ScalarField::from_fn(spec, |x| x[0] * x[0] - x[1] * x[1]);
        let p = LinearForm::new(&[0.4, 0.3]);
        let x0 = [0.0, 0.0];
        let r = 0.35;
        let h_val = almgren_h(&f, &x0, r).unwrap();
        let n_val = almgren_n(&f, &x0, r).unwrap();
        let lhs = h_val / r.powi(3) * (n_val - 1.0);
        let dr = 0.01 * r;
        let m_plus = monneau_m(&f, &p, &x0, r + dr).unwrap();
        let m_minus = monneau_m(&f, &p, &x0, r - dr).unwrap();
        let rhs = r * (m_plus - m_minus) / (2.0 * dr) / 2.0;
        assert!(
            (lhs - rhs).abs() / lhs.abs() < 0.03,
            "identity mismatch: lhs {lhs} rhs {rhs}"
        );
    }

    #[test]
    fn defect_of_exact_harmonic_is_within_slack() {
        // N of a harmonic polynomial is truly monotone; the measured
        // negative slope must sit inside the declared slack
        let spec = GridSpec::square(&[-0.8, -0.8], &[0.8, 0.8], 512).unwrap();
        let f = ScalarField::from_fn(spec, |x| x[1] + 0.3 * (x[0] * x[0] - x[1] * x[1]));
        let v = VField {
            q: vec![0.0, 0.0],
            h_q: 1.0,
            field: f,
        };
        let reg = defect_regression(&v, &[0.4, 0.2, 0.1], 8).unwrap();
        assert!(
            reg.monotone_within_slack,
            "windows: {:?}",
            reg.windows
                .iter()
                .map(|w| (w.r_hi, w.defect, w.slack))
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn monneau_growth_monotone_for_harmonic() {
        let spec = spec2(512);
        let f = ScalarField::from_fn(spec, |x| 0.8 * x[1] + 0.2 * (x[0] * x[0] - x[1] * x[1]));
        let v = VField {
            q: vec![0.0, 0.0],
            h_q: 1.0,
            field: f,
        };
        let p = LinearForm::new(&[0.0, 0.8]);
        let radii = [0.8, 0.6, 0.45, 0.34, 0.25, 0.19, 0.14, 0.106, 0.08];
        let report = monneau_growth_check(&v, &p, &radii).unwrap();
        assert!(
            report.monotone_within_slack,
            "drops: {:?}",
            report.drops
        );
    }
}
