//! Blowup rescaling of Green's functions and two-phase fields, density
//! estimation through tangent fits, Jones-style beta numbers, and the
//! modulus-of-flatness trace feeding the C^1 analysis.

use crate::domains::{self, Domain};
use crate::error::{Error, Result};
use crate::functionals::{monneau_m, LinearForm, VField};
use crate::geom::{self, Point};
use crate::grid::{harmonic_measure_of_ball, GridSpec, HarmonicPair, ScalarField, Side};
use crate::optim;
use crate::trace::RadialTrace;

/// Cells per axis of the unit-box grid blowup fields are resampled on.
const RESAMPLE_CELLS: usize = 128;

/// Rescaled fields u_j(x) = u(r_j x + Q) r_j^{n-2} / omega(B(Q, r_j)) on the
/// unit box, one per radius.
#[derive(Debug, Clone)]
pub struct BlowupSequence {
    pub q: Point,
    pub radii: Vec<f64>,
    pub fields: Vec<ScalarField>,
    /// the measures omega(B(Q, r_j)) used for the normalization
    pub measures: Vec<f64>,
}

/// Resample field(r x + q) * r^(n-2) / norm onto the unit-box grid.
fn rescale_field(field: &ScalarField, q: &[f64], r: f64, norm: f64) -> ScalarField {
    let dim = field.spec.dimension;
    let unit = GridSpec::square(&vec![-1.0; dim], &vec![1.0; dim], RESAMPLE_CELLS)
        .expect("unit grid spec");
    let scale = r.powi(dim as i32 - 2) / norm;
    ScalarField::from_fn(unit, |x| {
        let y = geom::axpy(q, 1.0, &geom::scale(x, r));
        field.eval(&y) * scale
    })
}

/// Blowup of one side's Green's function along decreasing radii (the
/// normalization is that side's measure of B(Q, r_j)).
pub fn rescale(
    pair: &HarmonicPair,
    side: Side,
    q: &[f64],
    radii: &[f64],
) -> Result<BlowupSequence> {
    rescale_with(pair, pair.field(side), side, q, radii)
}

/// Blowup of the two-phase field v along decreasing radii, normalized by
/// the minus-phase measure.
pub fn rescale_v(pair: &HarmonicPair, v: &VField, radii: &[f64]) -> Result<BlowupSequence> {
    rescale_with(pair, &v.field, Side::Minus, &v.q, radii)
}

fn rescale_with(
    pair: &HarmonicPair,
    field: &ScalarField,
    measure_side: Side,
    q: &[f64],
    radii: &[f64],
) -> Result<BlowupSequence> {
    let h = pair.spec.h();
    let mut fields = Vec::with_capacity(radii.len());
    let mut measures = Vec::with_capacity(radii.len());
    for &r in radii {
        if r < 8.0 * h {
            return Err(Error::UnderResolved(format!(
                "blowup radius {r} below 8h = {}",
                8.0 * h
            )));
        }
        let omega = harmonic_measure_of_ball(pair, measure_side, q, r)?;
        if omega < 1e-14 {
            return Err(Error::Degenerate(format!(
                "vanishing measure omega(B(Q, {r})) = {omega:.3e}"
            )));
        }
        let rescaled = rescale_field(field, q, r, omega);
        let at_zero = rescaled.eval(&vec![0.0; pair.spec.dimension]);
        let scale = rescaled.max_abs().max(1e-300);
        if at_zero.abs() > 0.05 * scale {
            return Err(Error::Degenerate(format!(
                "rescaled field does not vanish at the origin: {at_zero:.3e} vs scale {scale:.3e}"
            )));
        }
        fields.push(rescaled);
        measures.push(omega);
    }
    Ok(BlowupSequence {
        q: q.to_vec(),
        radii: radii.to_vec(),
        fields,
        measures,
    })
}

/// The unique tangent data at a boundary point: direction, densities of both
/// phases, and the Monneau residual of the linear fit.
#[derive(Debug, Clone)]
pub struct TangentFit {
    pub q: Point,
    pub nu: Point,
    pub theta_plus: f64,
    pub theta_minus: f64,
    pub l2_residual: f64,
}

impl TangentFit {
    /// The fitted blowup limit theta_minus * (x . nu) as a linear form.
    pub fn linear_form(&self) -> LinearForm {
        LinearForm::from_direction(&self.nu, self.theta_minus)
    }
}

/// Closed-form slope of the best c (x . nu) fit on the shell of radius r:
/// the ratio of shell inner products <v, x.nu> / <x.nu, x.nu>.
fn best_slope(v: &ScalarField, q: &[f64], nu: &[f64], r: f64) -> f64 {
    let n = 512;
    let dim = v.spec.dimension;
    let mut num = 0.0;
    let mut den = 0.0;
    if dim == 2 {
        for i in 0..n {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            let x = [r * t.cos(), r * t.sin()];
            let xdotnu = x[0] * nu[0] + x[1] * nu[1];
            let val = v.eval(&[q[0] + x[0], q[1] + x[1]]);
            num += val * xdotnu;
            den += xdotnu * xdotnu;
        }
    } else {
        unreachable!("tangent fits run on 2D pairs");
    }
    num / den
}

/// Fit the tangent plane at Q by minimizing the Monneau residual over
/// linear forms c (x . nu), c > 0. The direction search is a lattice scan
/// plus Nelder-Mead refinement; c is closed-form given nu.
pub fn fit_tangent(pair: &HarmonicPair, v: &VField, r: f64) -> Result<TangentFit> {
    let dim = pair.spec.dimension;
    if dim != 2 {
        return Err(Error::UnsupportedDimension {
            dim,
            context: "tangent fitting is implemented for planar pairs".into(),
        });
    }
    let h = pair.spec.h();
    if r < 8.0 * h {
        return Err(Error::UnderResolved(format!("fit radius {r} below 8h")));
    }
    let q = v.q.clone();
    let residual_for = |nu: &[f64]| -> (f64, f64) {
        let c = best_slope(&v.field, &q, nu, r);
        let p = LinearForm::from_direction(nu, c);
        let m = monneau_m(&v.field, &p, &q, r).unwrap_or(f64::INFINITY);
        (m, c)
    };

    // lattice scan; keep the two best isolated minima for the ambiguity flag
    let lattice = geom::direction_lattice(dim, 128);
    let mut scored: Vec<(f64, f64, Point)> = lattice
        .iter()
        .map(|nu| {
            let (m, c) = residual_for(nu);
            (m, c, nu.clone())
        })
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let best_seed = scored[0].clone();
    // second isolated candidate: far from the best direction (or its negation)
    let second_seed = scored
        .iter()
        .find(|(_, _, nu)| {
            let cosang = geom::dot(nu, &best_seed.2).abs();
            cosang < 0.9
        })
        .cloned();

    let refine = |seed: &Point| -> (f64, f64, Point) {
        let basis = geom::tangent_basis(seed);
        let seed = seed.clone();
        let chart = move |u: &[f64]| -> Point {
            let mut v = seed.clone();
            for (coef, b) in u.iter().zip(&basis) {
                v = geom::axpy(&v, *coef, b);
            }
            geom::normalized(&v)
        };
        let (u_best, m) = optim::nelder_mead(
            |u| residual_for(&chart(u)).0,
            &vec![0.0; dim - 1],
            0.05,
            200,
            1e-13,
        );
        let nu = chart(&u_best);
        let (_, c) = residual_for(&nu);
        (m, c, nu)
    };

    let (m_best, c_best, nu_best) = refine(&best_seed.2);
    if let Some(sec) = second_seed {
        let (m_sec, _, nu_sec) = refine(&sec.2);
        let separated = geom::dot(&nu_sec, &nu_best).abs() < 0.94; // > ~20 degrees
        if separated && m_sec <= 1.1 * m_best && m_sec.is_finite() {
            return Err(Error::AmbiguousFit(format!(
                "two residual minima within 10%: {m_best:.3e} at {nu_best:?}, {m_sec:.3e} at {nu_sec:?}"
            )));
        }
    }

    // orient nu so the slope is positive (v > 0 on the plus side of nu)
    let (nu, c) = if c_best >= 0.0 {
        (nu_best, c_best)
    } else {
        (geom::scale(&nu_best, -1.0), -c_best)
    };
    if c <= 0.0 {
        return Err(Error::Degenerate("fitted slope is not positive".into()));
    }
    Ok(TangentFit {
        q,
        nu,
        theta_plus: c / v.h_q,
        theta_minus: c,
        l2_residual: m_best,
    })
}

/// Flux route to the density: the boundary-density value at a single radius
/// (the Monneau-slope route must agree with this within 10% on resolved
/// configurations).
pub fn theta_flux(pair: &HarmonicPair, side: Side, q: &[f64], r: f64) -> Result<f64> {
    let dim = pair.spec.dimension;
    let omega = harmonic_measure_of_ball(pair, side, q, r)?;
    Ok(omega / (geom::unit_ball_volume(dim - 1) * r.powi(dim as i32 - 1)))
}

/// Continuity modulus of Q -> Theta^{n-1}(omega^-, Q): the maximal adjacent
/// jump of the fitted density across `n_samples` boundary points centered on
/// the boundary window of the pair.
pub fn density_continuity(pair: &HarmonicPair, n_samples: usize, r: f64) -> Result<f64> {
    if n_samples < 16 {
        return Err(Error::validation("need at least 16 boundary samples"));
    }
    let thetas = density_profile(pair, n_samples, r)?;
    let mut worst: f64 = 0.0;
    for w in thetas.windows(2) {
        worst = worst.max((w[1].1 - w[0].1).abs());
    }
    Ok(worst)
}

/// (parameter, fitted theta_minus) along the pair's boundary window; the
/// window shrinks by the fit radius so every shell stays inside the box.
pub fn density_profile(
    pair: &HarmonicPair,
    n_samples: usize,
    r: f64,
) -> Result<Vec<(f64, f64)>> {
    let bd = &pair.boundary;
    let m = bd.points.len();
    let margin_steps = {
        // skip boundary samples whose shell would leave the sampled window
        let mut k = 0;
        let mut arc = 0.0;
        while k < m / 4 && arc < r {
            arc += geom::dist(&bd.points[k], &bd.points[k + 1]);
            k += 1;
        }
        k
    };
    let lo = margin_steps;
    let hi = m - 1 - margin_steps;
    if hi <= lo {
        return Err(Error::Degenerate("boundary window too small for fits".into()));
    }
    let mut out = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let j = lo + (hi - lo) * i / (n_samples - 1);
        let q = bd.points[j].clone();
        let v = crate::functionals::build_v(pair, &q)?;
        let fit = fit_tangent(pair, &v, r)?;
        out.push((bd.params[j], fit.theta_minus));
    }
    Ok(out)
}

/// Jones-style one-sided beta number: the smallest normalized sup distance
/// from the boundary inside B(Q, r) to a hyperplane through Q.
pub fn beta_number(domain: &Domain, q: &[f64], r: f64) -> Result<f64> {
    let samples = domain.boundary_samples_in_ball(q, r, 1024);
    if samples.len() < 2 {
        return Err(Error::validation(format!(
            "no boundary samples of {} in B(Q, {r})",
            domain.label
        )));
    }
    let (_, beta) = domains::best_plane(domain.dimension, 128, &[], |nu| {
        domains::one_sided_plane_deficit(&samples, q, nu, r)
    });
    Ok(beta)
}

/// Trace of sup_{|x| = r} |v(Q + x) - p(x)| / r along decreasing radii,
/// measuring how fast v approaches its fitted tangent plane.
pub fn modulus_of_flatness(
    v: &VField,
    fit: &TangentFit,
    radii: &[f64],
) -> Result<RadialTrace> {
    let p = fit.linear_form();
    let dim = v.field.spec.dimension;
    if dim != 2 {
        return Err(Error::UnsupportedDimension {
            dim,
            context: "modulus trace runs on planar fields".into(),
        });
    }
    let n = 512;
    let mut values = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut sup: f64 = 0.0;
        for i in 0..n {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            let x = [r * t.cos(), r * t.sin()];
            let val = v.field.eval(&[v.q[0] + x[0], v.q[1] + x[1]]);
            sup = sup.max((val - p.eval(&x)).abs());
        }
        values.push(sup / r);
    }
    let h = v.field.spec.h();
    let r_min = radii.last().copied().unwrap_or(1.0);
    RadialTrace::new(
        v.q.clone(),
        radii.to_vec(),
        values,
        "flatness-modulus",
        2.0 * h / r_min,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{make_disk, make_halfplane, make_power_graph};
    use crate::functionals::build_v;
    use crate::grid::SolverParams;

    fn halfplane_pair() -> HarmonicPair {
        let d = make_halfplane();
        let spec = GridSpec::new(&[-2.0, -2.0], &[2.0, 2.0], &[512, 512]).unwrap();
        HarmonicPair::compute(&d, &spec, &[0.0, 1.0], &[0.0, -1.0], &SolverParams::default())
            .unwrap()
    }

    #[test]
    fn halfplane_blowup_profile_and_measure_normalization() {
        let pair = halfplane_pair();
        let seq = rescale(&pair, Side::Plus, &[0.0, 0.0], &[0.15, 0.1]).unwrap();
        // Eq-3.1 normalization forces unit measure of the unit ball, hence
        // the limit profile (x . nu)^+ / |B_1 cap plane| = x2^+ / 2 in 2D
        for field in &seq.fields {
            for probe in [[0.0, 0.5], [0.3, 0.4], [-0.2, 0.7], [0.0, 0.9]] {
                let expect = probe[1] / 2.0;
                let got = field.eval(&probe);
                assert!(
                    (got - expect).abs() / expect < 0.03,
                    "rescaled field {got} vs {expect} at {probe:?}"
                );
            }
            // minus phase of u+ blowup vanishes
            assert!(field.eval(&[0.0, -0.5]).abs() < 1e-6);
        }
    }

    #[test]
    fn blowup_scale_consistency() {
        // rescaling by r then s equals rescaling by r s once
        let pair = halfplane_pair();
        let q = [0.0, 0.0];
        let (r, s) = (0.5, 0.4);
        let omega_r = harmonic_measure_of_ball(&pair, Side::Plus, &q, r).unwrap();
        let omega_rs = harmonic_measure_of_ball(&pair, Side::Plus, &q, r * s).unwrap();
        let one_step = rescale_field(&pair.u_plus, &q, r * s, omega_rs);
        let intermediate = rescale_field(&pair.u_plus, &q, r, omega_r);
        // measure of B(0, s) under the rescaled measure = omega_rs / omega_r
        let two_step = rescale_field(&intermediate, &[0.0, 0.0], s, omega_rs / omega_r);
        for probe in [[0.2, 0.3], [0.0, 0.6], [-0.4, 0.2]] {
            let a = one_step.eval(&probe);
            let b = two_step.eval(&probe);
            assert!(
                (a - b).abs() <= 0.02 * a.abs().max(b.abs()).max(1e-12),
                "one-step {a} vs two-step {b} at {probe:?}"
            );
        }
    }

    #[test]
    fn tangent_fit_recovers_exact_linear_field() {
        let spec = GridSpec::square(&[-1.0, -1.0], &[1.0, 1.0], 128).unwrap();
        let field = ScalarField::from_fn(spec.clone(), |x| 2.0 * x[1]);
        let v = VField {
            q: vec![0.0, 0.0],
            h_q: 1.0,
            field,
        };
        // minimal pair stub is unnecessary: call the direction search through
        // a synthetic pair is overkill; exercise best_slope + residual path
        let c = best_slope(&v.field, &[0.0, 0.0], &[0.0, 1.0], 0.5);
        assert!((c - 2.0).abs() < 1e-6);
        let p = LinearForm::from_direction(&[0.0, 1.0], c);
        let m = monneau_m(&v.field, &p, &[0.0, 0.0], 0.5).unwrap();
        assert!(m < 1e-10);
    }

    #[test]
    fn halfplane_tangent_fit_matches_poisson_density() {
        let pair = halfplane_pair();
        let v = build_v(&pair, &[0.0, 0.0]).unwrap();
        let fit = fit_tangent(&pair, &v, 0.25).unwrap();
        // direction is the inward normal e2 up to sign convention
        assert!(fit.nu[1].abs() > 0.999, "nu = {:?}", fit.nu);
        // theta_minus ~ K^-(0); the box-truncated kernel differs from the
        // ideal 1/pi by the truncation, so compare against the pair's table
        let k_minus = pair.boundary.density_minus[pair.boundary.nearest(&[0.0, 0.0])];
        assert!(
            (fit.theta_minus - k_minus).abs() / k_minus < 0.05,
            "theta_minus {} vs flux {}",
            fit.theta_minus,
            k_minus
        );
        // and the ideal Poisson value within 5%
        let ideal = 1.0 / std::f64::consts::PI;
        assert!(
            (fit.theta_minus - ideal).abs() / ideal < 0.05,
            "theta_minus {} vs 1/pi {}",
            fit.theta_minus,
            ideal
        );
        // flux route and Monneau route agree within 10%
        let flux = theta_flux(&pair, Side::Minus, &[0.0, 0.0], 0.1).unwrap();
        assert!((fit.theta_minus - flux).abs() / flux < 0.1);
    }

    #[test]
    fn beta_numbers_of_zoo_domains() {
        let hp = make_halfplane();
        assert!(beta_number(&hp, &[0.0, 0.0], 0.5).unwrap() < 1e-6);
        // circle: sagitta geometry gives ~ r/2
        let disk = make_disk();
        let beta = beta_number(&disk, &[1.0, 0.0], 0.2).unwrap();
        assert!((beta - 0.1).abs() < 0.01, "beta = {beta}");
        // beta <= theta on assorted probes
        let graph = make_power_graph(0.1).unwrap();
        for (q, r) in [
            (vec![0.0, 0.0], 0.3),
            (vec![0.5, 0.1f64.mul_add(0.5f64.powf(1.5), 0.0)], 0.2),
        ] {
            let b = beta_number(&graph, &q, r).unwrap();
            let t = domains::reifenberg_theta(&graph, &q, r, 64).unwrap().theta;
            assert!(b <= t + 1e-9, "beta {b} > theta {t}");
        }
    }

    #[test]
    fn power_graph_beta_decays_with_half_exponent() {
        let graph = make_power_graph(0.1).unwrap();
        let radii = [0.4, 0.2, 0.1, 0.05, 0.025];
        let betas: Vec<f64> = radii
            .iter()
            .map(|&r| beta_number(&graph, &[0.0, 0.0], r).unwrap())
            .collect();
        let (_, s) = optim::power_fit(&radii, &betas);
        assert!(s > 0.0, "beta exponent {s} should be positive");
        assert!((s - 0.5).abs() < 0.15, "beta exponent {s}, betas {betas:?}");
    }

    #[test]
    fn modulus_of_flatness_vanishes_for_linear_field() {
        let spec = GridSpec::square(&[-1.0, -1.0], &[1.0, 1.0], 128).unwrap();
        let field = ScalarField::from_fn(spec, |x| 1.3 * x[1]);
        let v = VField {
            q: vec![0.0, 0.0],
            h_q: 1.0,
            field,
        };
        let fit = TangentFit {
            q: vec![0.0, 0.0],
            nu: vec![0.0, 1.0],
            theta_plus: 1.3,
            theta_minus: 1.3,
            l2_residual: 0.0,
        };
        let trace = modulus_of_flatness(&v, &fit, &[0.4, 0.2, 0.1]).unwrap();
        for v in &trace.values {
            assert!(*v < 1e-9, "modulus {v}");
        }
    }
}
