//! The domain zoo: analytic two-sided domains (half-plane, disk, C^{1,alpha}
//! graphs, the degree-3 nodal cone in R^3, the quadratic cone in R^4) together
//! with Reifenberg flatness measurement.
//!
//! A `Domain` is a geometric description only: a signed distance callback
//! (positive on the plus phase), a boundary parameterization with outward
//! normals, and a ball sampler used by the flatness estimators. Solvers
//! consume domains through these callbacks.

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::optim;
use std::sync::Arc;

type SdFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type ParamFn = dyn Fn(&[f64]) -> BoundaryPoint + Send + Sync;
type SamplerFn = dyn Fn(&[f64], f64, usize) -> Vec<Point> + Send + Sync;
type TangentFn = dyn Fn(&[f64]) -> Point + Send + Sync;

/// A boundary point with its outward unit normal (outward = pointing out of
/// the plus phase).
#[derive(Debug, Clone)]
pub struct BoundaryPoint {
    pub point: Point,
    pub outward_normal: Point,
}

/// Hölder data carried by graph-type boundaries: the graph function is
/// C^{1,alpha} with the given seminorm for its derivative.
#[derive(Debug, Clone, Copy)]
pub struct HolderData {
    pub alpha: f64,
    pub seminorm: f64,
}

/// Geometric description of a two-sided region.
#[derive(Clone)]
pub struct Domain {
    pub dimension: usize,
    pub label: String,
    signed_distance: Arc<SdFn>,
    boundary_param: Arc<ParamFn>,
    pub param_dim: usize,
    pub param_range: Vec<(f64, f64)>,
    ball_sampler: Arc<SamplerFn>,
    known_tangent: Option<Arc<TangentFn>>,
    pub holder: Option<HolderData>,
    pub reference_diameter: f64,
}

impl std::fmt::Debug for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Domain")
            .field("dimension", &self.dimension)
            .field("label", &self.label)
            .finish()
    }
}

impl Domain {
    /// Signed distance proxy: positive in the plus phase, negative in the
    /// minus phase, zero on the boundary. Exact distance for the half-plane,
    /// disk and R^4 cone; first-order accurate near the boundary otherwise.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        (self.signed_distance)(x)
    }

    pub fn boundary_point(&self, t: &[f64]) -> BoundaryPoint {
        (self.boundary_param)(t)
    }

    /// Boundary points inside B(Q, r); at least a covering with spacing on
    /// the order of r/64 when `n` is left at the callers' defaults.
    pub fn boundary_samples_in_ball(&self, q: &[f64], r: f64, n: usize) -> Vec<Point> {
        (self.ball_sampler)(q, r, n)
    }

    pub fn known_tangent(&self, q: &[f64]) -> Option<Point> {
        self.known_tangent.as_ref().map(|f| f(q))
    }

    /// The same region with the roles of the two phases exchanged.
    pub fn flipped(&self) -> Domain {
        let sd = self.signed_distance.clone();
        let bp = self.boundary_param.clone();
        Domain {
            dimension: self.dimension,
            label: format!("{}(flipped)", self.label),
            signed_distance: Arc::new(move |x| -sd(x)),
            boundary_param: Arc::new(move |t| {
                let mut b = bp(t);
                b.outward_normal = geom::scale(&b.outward_normal, -1.0);
                b
            }),
            param_dim: self.param_dim,
            param_range: self.param_range.clone(),
            ball_sampler: self.ball_sampler.clone(),
            known_tangent: self.known_tangent.clone(),
            holder: self.holder,
            reference_diameter: self.reference_diameter,
        }
    }
}

/// Reifenberg flatness of the boundary inside B(Q, r): the two-sided
/// Hausdorff distance to the best hyperplane through Q, normalized by r.
#[derive(Debug, Clone)]
pub struct FlatnessReport {
    pub q: Point,
    pub r: f64,
    pub theta: f64,
    pub best_plane_normal: Point,
}

pub fn make_halfplane() -> Domain {
    let sampler = move |q: &[f64], r: f64, n: usize| -> Vec<Point> {
        let q0 = q[0];
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let t = q0 - r + 2.0 * r * (i as f64 + 0.5) / n as f64;
            let p = vec![t, 0.0];
            if geom::dist(&p, q) <= r {
                out.push(p);
            }
        }
        out
    };
    Domain {
        dimension: 2,
        label: "halfplane".to_string(),
        signed_distance: Arc::new(|x| x[1]),
        boundary_param: Arc::new(|t| BoundaryPoint {
            point: vec![t[0], 0.0],
            outward_normal: vec![0.0, -1.0],
        }),
        param_dim: 1,
        param_range: vec![(-16.0, 16.0)],
        ball_sampler: Arc::new(sampler),
        known_tangent: Some(Arc::new(|_q| vec![1.0, 0.0])),
        holder: Some(HolderData {
            alpha: 1.0,
            seminorm: 0.0,
        }),
        reference_diameter: 32.0,
    }
}

pub fn make_disk() -> Domain {
    let sampler = move |q: &[f64], r: f64, n: usize| -> Vec<Point> {
        let phi0 = q[1].atan2(q[0]);
        // chord window: points on the unit circle within r of q
        let half = if geom::norm(q) > 1e-12 {
            (r / 1.0).min(2.0) * 1.2
        } else {
            std::f64::consts::PI
        };
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let phi = phi0 - half + 2.0 * half * (i as f64 + 0.5) / n as f64;
            let p = vec![phi.cos(), phi.sin()];
            if geom::dist(&p, q) <= r {
                out.push(p);
            }
        }
        out
    };
    Domain {
        dimension: 2,
        label: "disk".to_string(),
        signed_distance: Arc::new(|x| 1.0 - geom::norm(x)),
        boundary_param: Arc::new(|t| BoundaryPoint {
            point: vec![t[0].cos(), t[0].sin()],
            outward_normal: vec![t[0].cos(), t[0].sin()],
        }),
        param_dim: 1,
        param_range: vec![(0.0, std::f64::consts::TAU)],
        ball_sampler: Arc::new(sampler),
        known_tangent: Some(Arc::new(|q: &[f64]| {
            let n = geom::normalized(q);
            vec![-n[1], n[0]]
        })),
        holder: Some(HolderData {
            alpha: 1.0,
            seminorm: 1.0,
        }),
        reference_diameter: 2.0,
    }
}

/// Domain above the graph of `f`: the plus phase is {x_2 > f(x_1)}.
/// `f` must be finite on the reference window; `alpha`/`seminorm` are the
/// Hölder data of f'.
pub fn make_graph_domain<F>(f: F, alpha: f64, seminorm: f64) -> Result<Domain>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let half_width = 16.0;
    for i in 0..=256 {
        let t = -half_width + 2.0 * half_width * (i as f64) / 256.0;
        if !f(t).is_finite() {
            return Err(Error::validation(format!(
                "graph function not finite at x' = {t}"
            )));
        }
    }
    if !(0.0 < alpha && alpha <= 1.0) {
        return Err(Error::validation("alpha must lie in (0, 1]"));
    }
    let f = Arc::new(f);
    let fd = f.clone();
    let deriv = move |t: f64| -> f64 {
        let s = 1e-6;
        (fd(t + s) - fd(t - s)) / (2.0 * s)
    };
    let f_sd = f.clone();
    let f_bp = f.clone();
    let deriv_bp = deriv.clone();
    let f_sample = f.clone();
    let sampler = move |q: &[f64], r: f64, n: usize| -> Vec<Point> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let t = q[0] - r + 2.0 * r * (i as f64 + 0.5) / n as f64;
            let p = vec![t, f_sample(t)];
            if geom::dist(&p, q) <= r {
                out.push(p);
            }
        }
        out
    };
    Ok(Domain {
        dimension: 2,
        label: "graph".to_string(),
        signed_distance: Arc::new(move |x| x[1] - f_sd(x[0])),
        boundary_param: Arc::new(move |t| {
            let d = deriv_bp(t[0]);
            let norm = (1.0 + d * d).sqrt();
            BoundaryPoint {
                point: vec![t[0], f_bp(t[0])],
                outward_normal: vec![d / norm, -1.0 / norm],
            }
        }),
        param_dim: 1,
        param_range: vec![(-half_width, half_width)],
        ball_sampler: Arc::new(sampler),
        known_tangent: None,
        holder: Some(HolderData { alpha, seminorm }),
        reference_diameter: 2.0 * half_width,
    })
}

/// The standard C^{1,1/2} test boundary f(x') = amp * |x'|^{3/2}.
pub fn make_power_graph(amp: f64) -> Result<Domain> {
    let mut d = make_graph_domain(move |t: f64| amp * t.abs().powf(1.5), 0.5, 1.5 * amp)?;
    d.label = format!("graph-pow(amp={amp})");
    Ok(d)
}

// ---------------------------------------------------------------------------
// Lewy cone (dimension 3)
// ---------------------------------------------------------------------------

/// Degree-3 harmonic polynomial whose nodal set on S^2 has exactly two
/// components: zonal + sectoral mix. The mixing weight is fixed; the
/// two-component property is verified by `nodal_domain_count`.
pub const LEWY3_LAMBDA: f64 = 1.0;

pub fn lewy3_poly(x: &[f64]) -> f64 {
    let (a, b, c) = (x[0], x[1], x[2]);
    c.powi(3) - 1.5 * c * (a * a + b * b) + LEWY3_LAMBDA * (a.powi(3) - 3.0 * a * b * b)
}

pub fn lewy3_grad(x: &[f64]) -> Point {
    let (a, b, c) = (x[0], x[1], x[2]);
    vec![
        -3.0 * c * a + LEWY3_LAMBDA * (3.0 * a * a - 3.0 * b * b),
        -3.0 * c * b + LEWY3_LAMBDA * (-6.0 * a * b),
        3.0 * c * c - 1.5 * (a * a + b * b),
    ]
}

/// Count the sign components of `poly` on a triangulated sphere by flood
/// fill over the lat-long vertex graph (poles included). This is the build
/// oracle for the two-component property.
pub fn nodal_domain_count<F: Fn(&[f64]) -> f64>(poly: F, n_theta: usize, n_phi: usize) -> usize {
    let mut verts: Vec<Point> = Vec::new();
    verts.push(vec![0.0, 0.0, 1.0]);
    for i in 1..n_theta {
        let theta = std::f64::consts::PI * i as f64 / n_theta as f64;
        for j in 0..n_phi {
            let phi = std::f64::consts::TAU * j as f64 / n_phi as f64;
            verts.push(vec![
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ]);
        }
    }
    verts.push(vec![0.0, 0.0, -1.0]);
    let idx = |i: usize, j: usize| 1 + (i - 1) * n_phi + (j % n_phi);
    let north = 0usize;
    let south = verts.len() - 1;

    let mut edges: Vec<(usize, usize)> = Vec::new();
    for j in 0..n_phi {
        edges.push((north, idx(1, j)));
        edges.push((south, idx(n_theta - 1, j)));
    }
    for i in 1..n_theta {
        for j in 0..n_phi {
            edges.push((idx(i, j), idx(i, j + 1)));
            if i + 1 < n_theta {
                edges.push((idx(i, j), idx(i + 1, j)));
                // diagonal keeps the two triangle fans connected
                edges.push((idx(i, j), idx(i + 1, j + 1)));
            }
        }
    }

    let sign: Vec<i8> = verts
        .iter()
        .map(|v| if poly(v) > 0.0 { 1 } else { -1 })
        .collect();
    let mut parent: Vec<usize> = (0..verts.len()).collect();
    fn find(parent: &mut Vec<usize>, mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for &(a, b) in &edges {
        if sign[a] == sign[b] {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    let mut roots = std::collections::HashSet::new();
    for v in 0..verts.len() {
        roots.insert(find(&mut parent, v));
    }
    roots.len()
}

/// Nodal directions of the Lewy polynomial: for each azimuth in the lattice,
/// all polar roots of F(theta, phi) = 0 by scan + bisection.
fn lewy3_nodal_directions(n_phi: usize) -> Vec<Point> {
    let f_dir = |theta: f64, phi: f64| -> f64 {
        lewy3_poly(&[
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            theta.cos(),
        ])
    };
    let mut dirs = Vec::new();
    let n_scan = 400;
    for j in 0..n_phi {
        let phi = std::f64::consts::TAU * j as f64 / n_phi as f64;
        let mut prev_t = 1e-9;
        let mut prev_v = f_dir(prev_t, phi);
        for i in 1..=n_scan {
            let t = std::f64::consts::PI * i as f64 / n_scan as f64;
            let v = f_dir(t, phi);
            if prev_v == 0.0 || prev_v.signum() != v.signum() {
                let (mut lo, mut hi) = (prev_t, t);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if f_dir(lo, phi).signum() == f_dir(mid, phi).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let theta = 0.5 * (lo + hi);
                dirs.push(vec![
                    theta.sin() * phi.cos(),
                    theta.sin() * phi.sin(),
                    theta.cos(),
                ]);
            }
            prev_t = t;
            prev_v = v;
        }
    }
    dirs
}

/// Cone over a two-component nodal set of a degree-k harmonic polynomial.
/// Only k = 3 is tabulated. The label records the pole-at-infinity
/// expectation log h = 0 that finite-pole runs only approximate.
pub fn make_lewy_cone(k: usize) -> Result<Domain> {
    if k % 2 == 0 {
        return Err(Error::validation("Lewy cones require odd degree"));
    }
    if k != 3 {
        return Err(Error::validation(format!(
            "no tabulated two-component harmonic polynomial for degree {k}"
        )));
    }
    let domains = nodal_domain_count(lewy3_poly, 160, 320);
    if domains != 2 {
        return Err(Error::Internal(format!(
            "tabulated degree-3 polynomial has {domains} nodal domains on S^2, expected 2"
        )));
    }
    let nodal = Arc::new(lewy3_nodal_directions(720));
    let nodal_s = nodal.clone();
    let sampler = move |q: &[f64], r: f64, n: usize| -> Vec<Point> {
        let rq = geom::norm(q);
        let (rho_min, rho_max) = if rq < 1e-12 {
            (r / 64.0, r)
        } else {
            ((rq - r).max(1e-6), rq + r)
        };
        let n_rho = ((n / 64).max(8)).min(64);
        let mut out = Vec::new();
        for i in 0..n_rho {
            let rho = rho_min + (rho_max - rho_min) * (i as f64 + 0.5) / n_rho as f64;
            for d in nodal_s.iter() {
                let p = geom::scale(d, rho);
                if geom::dist(&p, q) <= r {
                    out.push(p);
                }
            }
        }
        out
    };
    // parameter: (azimuth index in [0,1), radial in (0, 16])
    let nodal_p = nodal.clone();
    Ok(Domain {
        dimension: 3,
        label: "lewy3 (log h = 0 expected for poles at infinity)".to_string(),
        signed_distance: Arc::new(|x| {
            let g = geom::norm(&lewy3_grad(x));
            if g < 1e-14 {
                lewy3_poly(x)
            } else {
                lewy3_poly(x) / g
            }
        }),
        boundary_param: Arc::new(move |t| {
            let m = nodal_p.len();
            let i = (((t[0].rem_euclid(1.0)) * m as f64) as usize).min(m - 1);
            let dir = &nodal_p[i];
            let point = geom::scale(dir, t[1].max(1e-9));
            let g = lewy3_grad(&point);
            BoundaryPoint {
                point,
                outward_normal: geom::scale(&geom::normalized(&g), -1.0),
            }
        }),
        param_dim: 2,
        param_range: vec![(0.0, 1.0), (1e-6, 16.0)],
        ball_sampler: Arc::new(sampler),
        known_tangent: None,
        holder: None,
        reference_diameter: 32.0,
    })
}

// ---------------------------------------------------------------------------
// Quadratic cone in R^4
// ---------------------------------------------------------------------------

/// {x1^2 + x2^2 > x3^2 + x4^2}: a two-sided NTA cone whose boundary is not a
/// graph near the origin. Geometric operations only; solves reject it.
pub fn make_quadratic_cone_r4() -> Domain {
    let sampler = move |q: &[f64], r: f64, n: usize| -> Vec<Point> {
        let rq = geom::norm(q);
        let (rho_min, rho_max) = if rq < 1e-12 {
            (r / 16.0, r)
        } else {
            ((rq - r).max(1e-6), rq + r)
        };
        let n_ang = ((n as f64).sqrt() as usize).clamp(12, 48);
        let n_rho = 8;
        let mut out = Vec::new();
        for i in 0..n_rho {
            let rho = rho_min + (rho_max - rho_min) * (i as f64 + 0.5) / n_rho as f64;
            let s = rho / 2.0_f64.sqrt();
            for ia in 0..n_ang {
                let a = std::f64::consts::TAU * ia as f64 / n_ang as f64;
                for ib in 0..n_ang {
                    let b = std::f64::consts::TAU * ib as f64 / n_ang as f64;
                    let p = vec![s * a.cos(), s * a.sin(), s * b.cos(), s * b.sin()];
                    if geom::dist(&p, q) <= r {
                        out.push(p);
                    }
                }
            }
        }
        out
    };
    Domain {
        dimension: 4,
        label: "cone4".to_string(),
        signed_distance: Arc::new(|x| {
            let a = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let b = (x[2] * x[2] + x[3] * x[3]).sqrt();
            (a - b) / 2.0_f64.sqrt()
        }),
        boundary_param: Arc::new(|t| {
            let (a, b, rho) = (t[0], t[1], t[2].max(1e-9));
            let s = rho / 2.0_f64.sqrt();
            let point = vec![s * a.cos(), s * a.sin(), s * b.cos(), s * b.sin()];
            let inv = 1.0 / 2.0_f64.sqrt();
            // gradient of (|a| - |b|)/sqrt(2)
            let normal = vec![
                -inv * a.cos(),
                -inv * a.sin(),
                inv * b.cos(),
                inv * b.sin(),
            ];
            BoundaryPoint {
                point,
                outward_normal: normal,
            }
        }),
        param_dim: 3,
        param_range: vec![
            (0.0, std::f64::consts::TAU),
            (0.0, std::f64::consts::TAU),
            (1e-6, 16.0),
        ],
        ball_sampler: Arc::new(sampler),
        known_tangent: None,
        holder: None,
        reference_diameter: 32.0,
    }
}

/// Ad-hoc implicit region described by a signed-distance callback alone.
/// Supports the solver operations; it has no boundary parameterization, so
/// pair construction and flatness estimators reject it.
pub fn make_implicit<F>(dimension: usize, label: &str, sd: F) -> Domain
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
{
    Domain {
        dimension,
        label: label.to_string(),
        signed_distance: Arc::new(sd),
        boundary_param: Arc::new(|_| panic!("implicit domain has no boundary parameterization")),
        param_dim: 0,
        param_range: vec![],
        ball_sampler: Arc::new(|_, _, _| Vec::new()),
        known_tangent: None,
        holder: None,
        reference_diameter: 1.0,
    }
}

/// Look up a zoo domain by its CLI name.
pub fn by_name(name: &str) -> Result<Domain> {
    match name {
        "halfplane" => Ok(make_halfplane()),
        "disk" => Ok(make_disk()),
        "lewy3" => make_lewy_cone(3),
        "cone4" => Ok(make_quadratic_cone_r4()),
        _ => Err(Error::validation(format!(
            "unknown domain '{name}' (try --list-domains)"
        ))),
    }
}

pub const ZOO_NAMES: [&str; 5] = ["halfplane", "disk", "graph:<file>", "lewy3", "cone4"];

// ---------------------------------------------------------------------------
// Flatness measurement
// ---------------------------------------------------------------------------

/// Sample points of the disk {P + Q} ∩ B(Q,r) for a hyperplane P ⟂ nu.
fn plane_disk_samples(q: &[f64], nu: &[f64], r: f64, n: usize) -> Vec<Point> {
    let basis = geom::tangent_basis(nu);
    match basis.len() {
        1 => (0..n)
            .map(|i| {
                let t = -r + 2.0 * r * (i as f64 + 0.5) / n as f64;
                geom::axpy(q, t, &basis[0])
            })
            .collect(),
        2 => {
            let m = ((n as f64).sqrt().ceil() as usize).max(8);
            let mut out = Vec::new();
            for i in 0..m {
                let rad = r * ((i as f64 + 0.5) / m as f64).sqrt();
                let n_ang = (8.max(m)).min(64);
                for j in 0..n_ang {
                    let a = std::f64::consts::TAU * j as f64 / n_ang as f64;
                    let mut p = geom::axpy(q, rad * a.cos(), &basis[0]);
                    p = geom::axpy(&p, rad * a.sin(), &basis[1]);
                    out.push(p);
                }
            }
            out
        }
        3 => {
            let m = ((n as f64).cbrt().ceil() as usize).clamp(5, 12);
            let mut out = Vec::new();
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        let u = [
                            -1.0 + 2.0 * (i as f64 + 0.5) / m as f64,
                            -1.0 + 2.0 * (j as f64 + 0.5) / m as f64,
                            -1.0 + 2.0 * (k as f64 + 0.5) / m as f64,
                        ];
                        if u.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                            let mut p = q.to_vec();
                            for (c, b) in u.iter().zip(&basis) {
                                p = geom::axpy(&p, c * r, b);
                            }
                            out.push(p);
                        }
                    }
                }
            }
            out
        }
        _ => unreachable!(),
    }
}

/// dist(a, {P+Q} ∩ B(Q,r)) where P ⟂ nu passes through Q.
fn dist_to_plane_disk(a: &[f64], q: &[f64], nu: &[f64], r: f64) -> f64 {
    let w = geom::sub(a, q);
    let d_plane = geom::dot(&w, nu);
    let proj = geom::axpy(&w, -d_plane, nu);
    let rho = geom::norm(&proj);
    let excess = (rho - r).max(0.0);
    (d_plane * d_plane + excess * excess).sqrt()
}

/// One-sided sup distance (used by the beta number): sup over boundary
/// samples of distance to the hyperplane through Q, normalized by r.
pub(crate) fn one_sided_plane_deficit(samples: &[Point], q: &[f64], nu: &[f64], r: f64) -> f64 {
    samples
        .iter()
        .map(|a| (geom::dot(&geom::sub(a, q), nu)).abs())
        .fold(0.0, f64::max)
        / r
}

/// Two-sided normalized Hausdorff deficit for a fixed plane normal.
/// Distances from plane points to the boundary use |signed_distance|, which
/// matches the true distance to first order near the boundary.
fn two_sided_plane_deficit(
    domain: &Domain,
    samples: &[Point],
    q: &[f64],
    nu: &[f64],
    r: f64,
) -> f64 {
    let sup_boundary = samples
        .iter()
        .map(|a| dist_to_plane_disk(a, q, nu, r))
        .fold(0.0, f64::max);
    let sup_plane = plane_disk_samples(q, nu, r, 256)
        .iter()
        .map(|b| domain.signed_distance(b).abs())
        .fold(0.0, f64::max);
    sup_boundary.max(sup_plane) / r
}

/// Minimize a plane deficit over unit normals: lattice scan then Nelder-Mead
/// refinement in a tangent chart at the best candidate; lexicographic
/// tiebreak on the canonical direction.
pub(crate) fn best_plane<F: Fn(&[f64]) -> f64>(
    dim: usize,
    n_lattice: usize,
    seeds: &[Point],
    deficit: F,
) -> (Point, f64) {
    let mut candidates = geom::direction_lattice(dim, n_lattice);
    candidates.extend_from_slice(seeds);
    let mut best_nu = candidates[0].clone();
    let mut best_val = f64::INFINITY;
    for nu in &candidates {
        let v = deficit(nu);
        if v < best_val - 1e-15 || (v < best_val + 1e-15 && geom::lex_less(nu, &best_nu)) {
            best_val = v;
            best_nu = nu.clone();
        }
    }
    let basis = geom::tangent_basis(&best_nu);
    let nu0 = best_nu.clone();
    let chart = move |u: &[f64]| -> Point {
        let mut v = nu0.clone();
        for (c, b) in u.iter().zip(&basis) {
            v = geom::axpy(&v, *c, b);
        }
        geom::normalized(&v)
    };
    let (u_best, val) = optim::nelder_mead(
        |u| deficit(&chart(u)),
        &vec![0.0; dim - 1],
        0.05,
        200,
        1e-12,
    );
    if val < best_val {
        best_val = val;
        best_nu = chart(&u_best);
    }
    (geom::canonical_direction(&best_nu), best_val)
}

/// Reifenberg flatness theta(Q, r), Def-style: infimum over hyperplanes
/// through Q of the normalized two-sided Hausdorff distance between
/// boundary and plane inside B(Q, r).
pub fn reifenberg_theta(
    domain: &Domain,
    q: &[f64],
    r: f64,
    n_plane_samples: usize,
) -> Result<FlatnessReport> {
    if n_plane_samples < 64 {
        return Err(Error::validation("n_plane_samples must be >= 64"));
    }
    let samples = domain.boundary_samples_in_ball(q, r, 1024.max(4 * 256));
    if samples.is_empty() {
        return Err(Error::validation(format!(
            "no boundary points of {} in B(Q, {r})",
            domain.label
        )));
    }
    let mut seeds = Vec::new();
    if let Some(t) = domain.known_tangent(q) {
        // seed with the plane spanned by the known tangent
        if domain.dimension == 2 {
            seeds.push(geom::canonical_direction(&[t[1], -t[0]]));
        }
    }
    let (nu, theta) = best_plane(domain.dimension, n_plane_samples, &seeds, |nu| {
        two_sided_plane_deficit(domain, &samples, q, nu, r)
    });
    Ok(FlatnessReport {
        q: q.to_vec(),
        r,
        theta,
        best_plane_normal: nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halfplane_signed_distance_is_height() {
        let d = make_halfplane();
        assert!((d.signed_distance(&[0.0, 0.3]) - 0.3).abs() < 1e-15);
        assert!(d.signed_distance(&[2.0, -0.25]) < 0.0);
    }

    #[test]
    fn graph_of_zero_matches_halfplane_at_probes() {
        let hp = make_halfplane();
        let g = make_graph_domain(|_| 0.0, 1.0, 0.0).unwrap();
        for i in 0..100 {
            let x = -2.0 + 4.0 * (i as f64) / 99.0;
            let y = -1.5 + 3.0 * ((i * 37) % 100) as f64 / 99.0;
            let p = [x, y];
            assert!((hp.signed_distance(&p) - g.signed_distance(&p)).abs() < 1e-12);
        }
    }

    #[test]
    fn graph_rejects_non_finite() {
        let err = make_graph_domain(|t| 1.0 / t, 0.5, 1.0);
        assert!(err.is_err());
    }

    #[test]
    fn boundary_normals_unit_and_boundary_on_zero_set() {
        for d in [
            make_halfplane(),
            make_disk(),
            make_power_graph(0.1).unwrap(),
        ] {
            for i in 0..32 {
                let t = -1.0 + 2.0 * i as f64 / 31.0;
                let b = d.boundary_point(&[t]);
                assert!((geom::norm(&b.outward_normal) - 1.0).abs() < 1e-12);
                assert!(
                    d.signed_distance(&b.point).abs() <= 1e-8 * d.reference_diameter,
                    "sd at boundary of {} = {}",
                    d.label,
                    d.signed_distance(&b.point)
                );
            }
        }
    }

    #[test]
    fn halfplane_theta_is_zero() {
        let d = make_halfplane();
        for (q, r) in [(vec![0.0, 0.0], 0.5), (vec![1.2, 0.0], 0.07)] {
            let rep = reifenberg_theta(&d, &q, r, 64).unwrap();
            assert!(rep.theta < 1e-6, "theta = {}", rep.theta);
        }
    }

    #[test]
    fn circle_theta_matches_sagitta() {
        // chord geometry: theta(Q, 0.2) ~ r/2 = 0.1 for the unit circle
        let d = make_disk();
        let rep = reifenberg_theta(&d, &[1.0, 0.0], 0.2, 64).unwrap();
        assert!(
            (rep.theta - 0.1).abs() < 0.01,
            "theta = {} expected ~0.1",
            rep.theta
        );
    }

    #[test]
    fn power_graph_theta_scale_invariant_exponent() {
        // theta(0, r) ~ C r^{1/2} for f = 0.1 |x|^{3/2}
        let d = make_power_graph(0.1).unwrap();
        let radii = [0.4, 0.2, 0.1, 0.05];
        let thetas: Vec<f64> = radii
            .iter()
            .map(|&r| reifenberg_theta(&d, &[0.0, 0.0], r, 64).unwrap().theta)
            .collect();
        let (_, s) = optim::power_fit(&radii, &thetas);
        assert!(
            (s - 0.5).abs() < 0.1,
            "fitted theta exponent {s}, thetas {thetas:?}"
        );
        // ratio theta / r^{1/2} stays bounded
        for (&r, &t) in radii.iter().zip(&thetas) {
            assert!(t / r.sqrt() < 0.2);
        }
    }

    #[test]
    fn lewy_cone_requires_odd_tabulated_degree() {
        assert!(make_lewy_cone(4).is_err());
        assert!(make_lewy_cone(5).is_err());
        assert!(make_lewy_cone(3).is_ok());
    }

    #[test]
    fn lewy_polynomial_is_harmonic_and_two_component() {
        // harmonic: Laplacian vanishes identically for the tabulated entry
        for p in [
            [0.3, -0.8, 0.52],
            [1.0, 2.0, -0.7],
            [-0.4, 0.1, 0.9],
            [0.0, 1.3, 0.4],
        ] {
            let h = 1e-4;
            let mut lap = 0.0;
            for k in 0..3 {
                let mut pp = p;
                let mut pm = p;
                pp[k] += h;
                pm[k] -= h;
                lap += (lewy3_poly(&pp) - 2.0 * lewy3_poly(&p) + lewy3_poly(&pm)) / (h * h);
            }
            assert!(lap.abs() < 1e-4, "laplacian {lap} at {p:?}");
        }
        assert_eq!(nodal_domain_count(lewy3_poly, 160, 320), 2);
    }

    #[test]
    fn lewy_cone_scale_invariance_and_flatness_floor() {
        let d = make_lewy_cone(3).unwrap();
        for p in [[0.3, -0.8, 0.52], [-0.4, 0.1, 0.9]] {
            let s1 = d.signed_distance(&p);
            let s2 = d.signed_distance(&geom::scale(&p, 3.7));
            assert_eq!(s1.signum(), s2.signum());
        }
        let t1 = reifenberg_theta(&d, &[0.0, 0.0, 0.0], 0.4, 64).unwrap().theta;
        let t2 = reifenberg_theta(&d, &[0.0, 0.0, 0.0], 0.1, 64).unwrap().theta;
        assert!(t1 > 0.1, "cone flatness should be bounded below, got {t1}");
        assert!(
            (t1 - t2).abs() < 0.15 * t1.max(t2),
            "cone theta should be near-constant in r: {t1} vs {t2}"
        );
    }

    #[test]
    fn cone4_basics() {
        let d = make_quadratic_cone_r4();
        assert!(d.signed_distance(&[1.0, 0.0, 0.0, 0.0]) > 0.0);
        let t1 = reifenberg_theta(&d, &[0.0; 4], 0.5, 96).unwrap().theta;
        let t2 = reifenberg_theta(&d, &[0.0; 4], 0.05, 96).unwrap().theta;
        assert!(t1 > 0.3, "cone4 theta bounded away from 0, got {t1}");
        assert!((t1 - t2).abs() < 0.15 * t1.max(t2));
    }
}
