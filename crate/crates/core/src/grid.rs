//! Discretization substrate: uniform Cartesian grids, sampled scalar fields
//! with multilinear interpolation, a cut-cell (Shortley-Weller) Dirichlet
//! Laplace solver, Green's functions with finite poles, and harmonic-measure
//! extraction through boundary flux.
//!
//! The solver enforces the boundary on the zero set of the domain's signed
//! distance: regular nodes get the 5-point (7-point in 3D) stencil, nodes
//! whose stencil arm crosses the boundary get the one-sided linear
//! (Shortley-Weller) correction. The system is solved with Jacobi-
//! preconditioned BiCGStab to a 1e-10 relative residual; node order is the
//! flat grid order, so runs are bit-reproducible.

use crate::domains::Domain;
use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::trace::RadialTrace;

/// Uniform grid over a box: per-axis cell counts, equal spacing on all axes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub box_min: Point,
    pub box_max: Point,
    pub n_cells: Vec<usize>,
    pub dimension: usize,
}

impl GridSpec {
    pub fn new(box_min: &[f64], box_max: &[f64], n_cells: &[usize]) -> Result<GridSpec> {
        let dimension = box_min.len();
        if dimension != box_max.len() || dimension != n_cells.len() {
            return Err(Error::validation("box/n_cells dimension mismatch"));
        }
        if !(dimension == 2 || dimension == 3) {
            return Err(Error::UnsupportedDimension {
                dim: dimension,
                context: "grids support dimension 2 or 3".into(),
            });
        }
        if n_cells.iter().any(|&n| n < 8) {
            return Err(Error::validation("n_cells must be >= 8 on every axis"));
        }
        let h0 = (box_max[0] - box_min[0]) / n_cells[0] as f64;
        if h0 <= 0.0 {
            return Err(Error::validation("box_max must exceed box_min"));
        }
        for k in 1..dimension {
            let hk = (box_max[k] - box_min[k]) / n_cells[k] as f64;
            if ((hk - h0) / h0).abs() > 1e-12 {
                return Err(Error::validation(
                    "grid spacing must be equal on all axes (isotropic grid)",
                ));
            }
        }
        Ok(GridSpec {
            box_min: box_min.to_vec(),
            box_max: box_max.to_vec(),
            n_cells: n_cells.to_vec(),
            dimension,
        })
    }

    /// Square box with the same cell count per axis.
    pub fn square(box_min: &[f64], box_max: &[f64], n: usize) -> Result<GridSpec> {
        let cells = vec![n; box_min.len()];
        GridSpec::new(box_min, box_max, &cells)
    }

    /// Spacing h, identical on all axes.
    pub fn h(&self) -> f64 {
        (self.box_max[0] - self.box_min[0]) / self.n_cells[0] as f64
    }

    /// Nodes along axis k.
    pub fn n_nodes(&self, k: usize) -> usize {
        self.n_cells[k] + 1
    }

    pub fn total_nodes(&self) -> usize {
        (0..self.dimension).map(|k| self.n_nodes(k)).product()
    }

    pub fn node_coord(&self, idx: &[usize]) -> Point {
        idx.iter()
            .enumerate()
            .map(|(k, &i)| self.box_min[k] + self.h() * i as f64)
            .collect()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        match self.dimension {
            2 => idx[1] * self.n_nodes(0) + idx[0],
            3 => (idx[2] * self.n_nodes(1) + idx[1]) * self.n_nodes(0) + idx[0],
            _ => unreachable!(),
        }
    }

    pub fn unflat(&self, mut flat: usize) -> Vec<usize> {
        let nx = self.n_nodes(0);
        match self.dimension {
            2 => vec![flat % nx, flat / nx],
            3 => {
                let ix = flat % nx;
                flat /= nx;
                let ny = self.n_nodes(1);
                vec![ix, flat % ny, flat / ny]
            }
            _ => unreachable!(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(k, &v)| v >= self.box_min[k] - 1e-12 && v <= self.box_max[k] + 1e-12)
    }

    fn on_rim(&self, idx: &[usize]) -> bool {
        idx.iter()
            .enumerate()
            .any(|(k, &i)| i == 0 || i == self.n_cells[k])
    }

    /// Flat indices of nodes inside the closed ball B(center, r).
    pub fn nodes_in_ball(&self, center: &[f64], r: f64) -> Vec<usize> {
        let h = self.h();
        let lo: Vec<usize> = (0..self.dimension)
            .map(|k| (((center[k] - r - self.box_min[k]) / h).floor().max(0.0)) as usize)
            .collect();
        let hi: Vec<usize> = (0..self.dimension)
            .map(|k| {
                (((center[k] + r - self.box_min[k]) / h).ceil().max(0.0) as usize)
                    .min(self.n_nodes(k) - 1)
            })
            .collect();
        let mut out = Vec::new();
        let mut idx = lo.clone();
        'outer: loop {
            let p = self.node_coord(&idx);
            if geom::dist(&p, center) <= r {
                out.push(self.flat(&idx));
            }
            for k in 0..self.dimension {
                idx[k] += 1;
                if idx[k] <= hi[k] {
                    continue 'outer;
                }
                idx[k] = lo[k];
            }
            break;
        }
        out
    }
}

/// Scalar function sampled on the grid nodes with multilinear interpolation.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(spec: GridSpec) -> ScalarField {
        let n = spec.total_nodes();
        ScalarField {
            spec,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(spec: GridSpec, f: F) -> ScalarField {
        let mut field = ScalarField::zeros(spec);
        for flat in 0..field.spec.total_nodes() {
            let idx = field.spec.unflat(flat);
            let x = field.spec.node_coord(&idx);
            field.values[flat] = f(&x);
        }
        field
    }

    pub fn validate_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Degenerate("field has non-finite node values".into()))
        }
    }

    /// Multilinear interpolation. Points are clamped to the box, so the
    /// evaluation is defined and continuous everywhere callers probe.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let spec = &self.spec;
        let h = spec.h();
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for k in 0..spec.dimension {
            let n = spec.n_nodes(k);
            let t = ((x[k] - spec.box_min[k]) / h).clamp(0.0, (n - 1) as f64);
            let i = (t.floor() as usize).min(n - 2);
            base[k] = i;
            frac[k] = t - i as f64;
        }
        match spec.dimension {
            2 => {
                let v =
                    |dx: usize, dy: usize| self.values[spec.flat(&[base[0] + dx, base[1] + dy])];
                let (fx, fy) = (frac[0], frac[1]);
                v(0, 0) * (1.0 - fx) * (1.0 - fy)
                    + v(1, 0) * fx * (1.0 - fy)
                    + v(0, 1) * (1.0 - fx) * fy
                    + v(1, 1) * fx * fy
            }
            3 => {
                let v = |dx: usize, dy: usize, dz: usize| {
                    self.values[spec.flat(&[base[0] + dx, base[1] + dy, base[2] + dz])]
                };
                let (fx, fy, fz) = (frac[0], frac[1], frac[2]);
                let c00 = v(0, 0, 0) * (1.0 - fx) + v(1, 0, 0) * fx;
                let c10 = v(0, 1, 0) * (1.0 - fx) + v(1, 1, 0) * fx;
                let c01 = v(0, 0, 1) * (1.0 - fx) + v(1, 0, 1) * fx;
                let c11 = v(0, 1, 1) * (1.0 - fx) + v(1, 1, 1) * fx;
                (c00 * (1.0 - fy) + c10 * fy) * (1.0 - fz) + (c01 * (1.0 - fy) + c11 * fy) * fz
            }
            _ => unreachable!(),
        }
    }

    /// Gradient at an arbitrary point by centered differences of the
    /// interpolant with step h.
    pub fn grad_eval(&self, x: &[f64]) -> Point {
        let h = self.spec.h();
        (0..self.spec.dimension)
            .map(|k| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += h;
                xm[k] -= h;
                (self.eval(&xp) - self.eval(&xm)) / (2.0 * h)
            })
            .collect()
    }

    /// Gradient at a node by centered differences (one-sided on the rim).
    pub fn grad_at_node(&self, idx: &[usize]) -> Point {
        let spec = &self.spec;
        let h = spec.h();
        (0..spec.dimension)
            .map(|k| {
                let n = spec.n_nodes(k);
                let mut ip = idx.to_vec();
                let mut im = idx.to_vec();
                if idx[k] == 0 {
                    ip[k] = 1;
                    (self.values[spec.flat(&ip)] - self.values[spec.flat(idx)]) / h
                } else if idx[k] == n - 1 {
                    im[k] = n - 2;
                    (self.values[spec.flat(idx)] - self.values[spec.flat(&im)]) / h
                } else {
                    ip[k] += 1;
                    im[k] -= 1;
                    (self.values[spec.flat(&ip)] - self.values[spec.flat(&im)]) / (2.0 * h)
                }
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

/// Iteration limits and tolerance for the linear solver.
#[derive(Debug, Clone, Copy)]
pub struct SolverParams {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol: 1e-10,
            max_iter: 1_000_000,
        }
    }
}

// Node roles during assembly.
const OUTSIDE: u32 = u32::MAX;
const DIRICHLET: u32 = u32::MAX - 1;
const PROVISIONAL: u32 = u32::MAX - 2;

struct CutSystem {
    role: Vec<u32>,
    fixed: Vec<f64>,
    diag: Vec<f64>,
    // CSR off-diagonal storage
    row_ptr: Vec<u32>,
    col: Vec<u32>,
    val: Vec<f64>,
    rhs: Vec<f64>,
}

/// Assemble -Laplace u = source on {sd > 0} within the box: Dirichlet data
/// `g_cut` on the zero set (Shortley-Weller arms) and `g_rim` on the box rim
/// (truncation closure for unbounded domains). Nodes essentially on the
/// boundary snap to it; otherwise arbitrarily short arms keep their exact
/// coefficients, preserving second-order accuracy of the linear solution.
fn assemble(
    domain: &Domain,
    spec: &GridSpec,
    g_cut: &dyn Fn(&[f64]) -> f64,
    g_rim: &dyn Fn(&[f64]) -> f64,
    source: &dyn Fn(usize) -> f64,
) -> Result<CutSystem> {
    let dim = spec.dimension;
    if domain.dimension != dim {
        return Err(Error::UnsupportedDimension {
            dim: domain.dimension,
            context: format!("domain dimension != grid dimension {dim}"),
        });
    }
    let total = spec.total_nodes();
    let h = spec.h();
    let snap = 1e-9 * h;
    let arm_floor = 1e-12 * h;

    let mut sd = vec![0.0f64; total];
    for (flat, s) in sd.iter_mut().enumerate() {
        let x = spec.node_coord(&spec.unflat(flat));
        *s = domain.signed_distance(&x);
    }

    let mut role = vec![OUTSIDE; total];
    let mut fixed = vec![0.0f64; total];
    for flat in 0..total {
        if sd[flat] <= 0.0 {
            continue;
        }
        let idx = spec.unflat(flat);
        if spec.on_rim(&idx) {
            role[flat] = DIRICHLET;
            fixed[flat] = g_rim(&spec.node_coord(&idx));
        } else {
            role[flat] = PROVISIONAL;
        }
    }

    // crossing point between an inside node and an outside neighbor by
    // bisection on the signed distance
    let crossing = |x_in: &Point, x_out: &Point| -> (f64, Point) {
        let step = geom::sub(x_out, x_in);
        let mut lo = 0.0;
        let mut hi = 1.0;
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            let p = geom::axpy(x_in, mid, &step);
            if domain.signed_distance(&p) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        (t, geom::axpy(x_in, t, &step))
    };

    // snap pass
    let mut snapped = Vec::new();
    for flat in 0..total {
        if role[flat] != PROVISIONAL {
            continue;
        }
        let idx = spec.unflat(flat);
        let x = spec.node_coord(&idx);
        'dirs: for k in 0..dim {
            for dir in [-1isize, 1isize] {
                let mut nidx = idx.clone();
                nidx[k] = (idx[k] as isize + dir) as usize;
                let nflat = spec.flat(&nidx);
                if sd[nflat] <= 0.0 {
                    let xn = spec.node_coord(&nidx);
                    let (t, p) = crossing(&x, &xn);
                    if t * h < snap {
                        snapped.push((flat, g_cut(&p)));
                        break 'dirs;
                    }
                }
            }
        }
    }
    for (flat, v) in snapped {
        role[flat] = DIRICHLET;
        fixed[flat] = v;
    }

    let mut unknown_nodes = Vec::new();
    for flat in 0..total {
        if role[flat] == PROVISIONAL {
            role[flat] = unknown_nodes.len() as u32;
            unknown_nodes.push(flat);
        }
    }
    if unknown_nodes.is_empty() {
        return Err(Error::Degenerate(
            "no interior nodes: domain does not intersect the grid".into(),
        ));
    }

    let m = unknown_nodes.len();
    let mut diag = vec![0.0f64; m];
    let mut row_ptr: Vec<u32> = Vec::with_capacity(m + 1);
    let mut col: Vec<u32> = Vec::with_capacity(2 * dim * m);
    let mut val: Vec<f64> = Vec::with_capacity(2 * dim * m);
    let mut rhs = vec![0.0f64; m];
    row_ptr.push(0);
    for (row, &flat) in unknown_nodes.iter().enumerate() {
        let idx = spec.unflat(flat);
        let x = spec.node_coord(&idx);
        rhs[row] = source(flat);
        for k in 0..dim {
            let mut arm = [h, h];
            let mut entry: [(u32, f64); 2] = [(OUTSIDE, 0.0); 2];
            for (a, dir) in [-1isize, 1isize].iter().enumerate() {
                let mut nidx = idx.clone();
                nidx[k] = (idx[k] as isize + dir) as usize;
                let nflat = spec.flat(&nidx);
                match role[nflat] {
                    OUTSIDE => {
                        let xn = spec.node_coord(&nidx);
                        let (t, p) = crossing(&x, &xn);
                        arm[a] = (t * h).max(arm_floor);
                        entry[a] = (DIRICHLET, g_cut(&p));
                    }
                    DIRICHLET => {
                        entry[a] = (DIRICHLET, fixed[nflat]);
                    }
                    u => {
                        entry[a] = (u, 0.0);
                    }
                }
            }
            let (am, ap) = (arm[0], arm[1]);
            diag[row] += 2.0 / (am * ap);
            for (a, &arm_a) in arm.iter().enumerate() {
                let coef = 2.0 / (arm_a * (am + ap));
                match entry[a] {
                    (DIRICHLET, v) => rhs[row] += coef * v,
                    (u, _) => {
                        col.push(u);
                        val.push(-coef);
                    }
                }
            }
        }
        row_ptr.push(col.len() as u32);
    }

    Ok(CutSystem {
        role,
        fixed,
        diag,
        row_ptr,
        col,
        val,
        rhs,
    })
}

impl CutSystem {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for row in 0..x.len() {
            let mut v = self.diag[row] * x[row];
            let (lo, hi) = (self.row_ptr[row] as usize, self.row_ptr[row + 1] as usize);
            for e in lo..hi {
                v += self.val[e] * x[self.col[e] as usize];
            }
            out[row] = v;
        }
    }

    /// Jacobi-preconditioned BiCGStab; deterministic.
    fn solve(&self, params: &SolverParams) -> Result<Vec<f64>> {
        let m = self.rhs.len();
        let b_norm = self.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if b_norm == 0.0 {
            return Ok(vec![0.0; m]);
        }
        let inv_d: Vec<f64> = self.diag.iter().map(|d| 1.0 / d).collect();
        let mut x = vec![0.0f64; m];
        let mut r = self.rhs.clone();
        let r0 = r.clone();
        let mut rho = 1.0f64;
        let mut alpha = 1.0f64;
        let mut omega = 1.0f64;
        let mut v = vec![0.0f64; m];
        let mut p = vec![0.0f64; m];
        let mut t = vec![0.0f64; m];
        let mut phat = vec![0.0f64; m];
        let mut s = vec![0.0f64; m];
        let mut shat = vec![0.0f64; m];
        let mut iterations = 0;
        let mut res = b_norm;
        for it in 0..params.max_iter {
            iterations = it + 1;
            let rho_new: f64 = r0.iter().zip(&r).map(|(a, b)| a * b).sum();
            if rho_new.abs() < 1e-300 {
                break;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..m {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
                phat[i] = p[i] * inv_d[i];
            }
            self.apply(&phat, &mut v);
            let r0v: f64 = r0.iter().zip(&v).map(|(a, b)| a * b).sum();
            alpha = rho / r0v;
            let mut s_norm2 = 0.0;
            for i in 0..m {
                s[i] = r[i] - alpha * v[i];
                s_norm2 += s[i] * s[i];
                shat[i] = s[i] * inv_d[i];
            }
            if s_norm2.sqrt() / b_norm < params.tol {
                for i in 0..m {
                    x[i] += alpha * phat[i];
                }
                res = s_norm2.sqrt();
                break;
            }
            self.apply(&shat, &mut t);
            let mut tt = 0.0;
            let mut ts = 0.0;
            for i in 0..m {
                tt += t[i] * t[i];
                ts += t[i] * s[i];
            }
            omega = ts / tt;
            let mut res2 = 0.0;
            for i in 0..m {
                x[i] += alpha * phat[i] + omega * shat[i];
                r[i] = s[i] - omega * t[i];
                res2 += r[i] * r[i];
            }
            res = res2.sqrt();
            if res / b_norm < params.tol {
                break;
            }
        }
        let rel = res / b_norm;
        if std::env::var("FREEBND_SOLVER_STATS").is_ok() {
            eprintln!("solver: {} unknowns, {} iterations, rel residual {rel:.3e}", m, iterations);
        }
        if rel > params.tol * 10.0 {
            return Err(Error::NonConvergence {
                residual: rel,
                iterations,
            });
        }
        Ok(x)
    }

    fn into_field(self, spec: &GridSpec, x: &[f64]) -> ScalarField {
        let mut field = ScalarField::zeros(spec.clone());
        for (flat, &role) in self.role.iter().enumerate() {
            field.values[flat] = match role {
                OUTSIDE => 0.0,
                DIRICHLET => self.fixed[flat],
                u => x[u as usize],
            };
        }
        field
    }
}

/// Solve the Dirichlet problem for the Laplacian on the plus phase of
/// `domain` intersected with the grid box. `boundary_values` is evaluated on
/// the zero set and on the box rim (truncation data for unbounded domains).
pub fn solve_dirichlet<G: Fn(&[f64]) -> f64>(
    domain: &Domain,
    boundary_values: G,
    spec: &GridSpec,
    params: &SolverParams,
) -> Result<ScalarField> {
    let sys = assemble(domain, spec, &boundary_values, &boundary_values, &|_| 0.0)?;
    let x = sys.solve(params)?;
    let field = sys.into_field(spec, &x);
    field.validate_finite()?;
    Ok(field)
}

/// Far-field closure for Green's functions on truncated unbounded phases:
/// the free-space kernel pair of the pole and its reflection across the
/// tangent plane at the nearest boundary point. Exact for the half-plane,
/// first-order for curved boundaries; evaluated only on rim nodes that lie
/// inside the solving phase.
fn image_closure(domain: &Domain, pole: &[f64], dim: usize) -> impl Fn(&[f64]) -> f64 {
    let d0 = domain.signed_distance(pole);
    // normal direction from the gradient of the signed distance at the pole
    let step = 1e-6;
    let mut grad: Point = (0..dim)
        .map(|k| {
            let mut xp = pole.to_vec();
            let mut xm = pole.to_vec();
            xp[k] += step;
            xm[k] -= step;
            (domain.signed_distance(&xp) - domain.signed_distance(&xm)) / (2.0 * step)
        })
        .collect();
    let g = geom::norm(&grad);
    if g > 1e-12 {
        grad = geom::scale(&grad, 1.0 / g);
    }
    let mirror = geom::axpy(pole, -2.0 * d0, &grad);
    let pole = pole.to_vec();
    move |x: &[f64]| {
        let dp = geom::dist(x, &pole).max(1e-300);
        let dm = geom::dist(x, &mirror).max(1e-300);
        let v = match dim {
            2 => (dm / dp).ln() / std::f64::consts::TAU,
            _ => (1.0 / dp - 1.0 / dm) / (4.0 * std::f64::consts::PI),
        };
        v.max(0.0)
    }
}

/// Green's function of the phase containing `pole`: vanishes on the boundary,
/// discrete Laplacian is minus the unit discrete delta at the pole (mass
/// 1/h^n on the nearest node). Rim nodes inside the phase carry the
/// reflected-pole far-field closure.
pub fn greens_function(
    domain: &Domain,
    pole: &[f64],
    spec: &GridSpec,
    params: &SolverParams,
) -> Result<ScalarField> {
    let h = spec.h();
    let side = domain.signed_distance(pole);
    if side == 0.0 {
        return Err(Error::validation("pole lies on the boundary"));
    }
    let oriented;
    let dom = if side > 0.0 {
        domain
    } else {
        oriented = domain.flipped();
        &oriented
    };
    if dom.signed_distance(pole).abs() < 4.0 * h {
        return Err(Error::validation(format!(
            "pole must be at least 4h = {} from the boundary (flux extraction would be unreliable)",
            4.0 * h
        )));
    }
    for k in 0..spec.dimension {
        if pole[k] - spec.box_min[k] < 4.0 * h || spec.box_max[k] - pole[k] < 4.0 * h {
            return Err(Error::validation(
                "pole must be at least 4h from the box rim",
            ));
        }
    }
    let pole_idx: Vec<usize> = (0..spec.dimension)
        .map(|k| ((pole[k] - spec.box_min[k]) / h).round() as usize)
        .collect();
    let pole_flat = spec.flat(&pole_idx);
    let mass = 1.0 / h.powi(spec.dimension as i32);
    let rim = image_closure(dom, pole, spec.dimension);
    let sys = assemble(dom, spec, &|_| 0.0, &rim, &|flat| {
        if flat == pole_flat {
            mass
        } else {
            0.0
        }
    })?;
    let x = sys.solve(params)?;
    let field = sys.into_field(spec, &x);
    field.validate_finite()?;
    let floor = -1e-9 * field.max_abs();
    if field.values.iter().any(|&v| v < floor) {
        return Err(Error::Internal(
            "Green's function has negative node values".into(),
        ));
    }
    Ok(field)
}

// ---------------------------------------------------------------------------
// Harmonic pairs and boundary flux
// ---------------------------------------------------------------------------

/// Boundary tables sampled along the parameterization: points, outward
/// normals, and the Poisson-kernel densities of both phases.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub params: Vec<f64>,
    pub points: Vec<Point>,
    pub normals: Vec<Point>,
    pub density_plus: Vec<f64>,
    pub density_minus: Vec<f64>,
}

impl BoundaryData {
    /// h = K^- / K^+ per sample.
    pub fn h_values(&self) -> Vec<f64> {
        self.density_minus
            .iter()
            .zip(&self.density_plus)
            .map(|(m, p)| m / p)
            .collect()
    }

    pub fn nearest(&self, q: &[f64]) -> usize {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = geom::dist(p, q);
            if d < bd {
                bd = d;
                best = i;
            }
        }
        best
    }
}

/// The pair (u+, u-) with pole locations and sampled boundary densities.
#[derive(Debug, Clone)]
pub struct HarmonicPair {
    pub domain: Domain,
    pub spec: GridSpec,
    pub u_plus: ScalarField,
    pub u_minus: ScalarField,
    pub pole_plus: Point,
    pub pole_minus: Point,
    pub boundary: BoundaryData,
}

/// Which phase of a pair an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// One-sided second-order flux (inward normal derivative) of a field that
/// vanishes at `q`, probed along `dir_in` at distances s and 2s.
pub fn one_sided_flux(field: &ScalarField, q: &[f64], dir_in: &[f64], s: f64) -> f64 {
    let d1 = field.eval(&geom::axpy(q, s, dir_in));
    let d2 = field.eval(&geom::axpy(q, 2.0 * s, dir_in));
    (4.0 * d1 - d2) / (2.0 * s)
}

impl HarmonicPair {
    /// Solve both Green's functions and sample the boundary densities.
    /// Boundary samples cover the parameterized boundary inside the box
    /// (with a 4h safety margin), spaced roughly h/2 apart.
    pub fn compute(
        domain: &Domain,
        spec: &GridSpec,
        pole_plus: &[f64],
        pole_minus: &[f64],
        params: &SolverParams,
    ) -> Result<HarmonicPair> {
        if domain.param_dim != 1 {
            return Err(Error::UnsupportedDimension {
                dim: domain.param_dim,
                context: "harmonic pairs need a curve-parameterized boundary".into(),
            });
        }
        if domain.signed_distance(pole_plus) <= 0.0 {
            return Err(Error::validation("pole_plus must lie in the plus phase"));
        }
        if domain.signed_distance(pole_minus) >= 0.0 {
            return Err(Error::validation("pole_minus must lie in the minus phase"));
        }
        let u_plus = greens_function(domain, pole_plus, spec, params)?;
        let u_minus = greens_function(domain, pole_minus, spec, params)?;

        let h = spec.h();
        let margin = 4.0 * h;
        let probe = 1.5 * h;
        let (t0, t1) = (domain.param_range[0].0, domain.param_range[0].1);
        let coarse = 4096;
        let mut params_in: Vec<f64> = Vec::new();
        for i in 0..=coarse {
            let t = t0 + (t1 - t0) * i as f64 / coarse as f64;
            let bp = domain.boundary_point(&[t]);
            let inside = (0..spec.dimension).all(|k| {
                bp.point[k] >= spec.box_min[k] + margin && bp.point[k] <= spec.box_max[k] - margin
            });
            if inside {
                params_in.push(t);
            }
        }
        if params_in.len() < 16 {
            return Err(Error::Degenerate(
                "boundary parameterization barely intersects the box".into(),
            ));
        }
        let (w0, w1) = (params_in[0], *params_in.last().unwrap());
        let mut arc = 0.0;
        let mut prev = domain.boundary_point(&[w0]).point;
        for i in 1..=256 {
            let t = w0 + (w1 - w0) * i as f64 / 256.0;
            let p = domain.boundary_point(&[t]).point;
            arc += geom::dist(&prev, &p);
            prev = p;
        }
        let n_samples = ((arc / (0.5 * h)).ceil() as usize).clamp(64, 20000);

        let mut bd = BoundaryData {
            params: Vec::with_capacity(n_samples + 1),
            points: Vec::with_capacity(n_samples + 1),
            normals: Vec::with_capacity(n_samples + 1),
            density_plus: Vec::with_capacity(n_samples + 1),
            density_minus: Vec::with_capacity(n_samples + 1),
        };
        for i in 0..=n_samples {
            let t = w0 + (w1 - w0) * i as f64 / n_samples as f64;
            let bp = domain.boundary_point(&[t]);
            let inward_plus = geom::scale(&bp.outward_normal, -1.0);
            let kp = one_sided_flux(&u_plus, &bp.point, &inward_plus, probe);
            let km = one_sided_flux(&u_minus, &bp.point, &bp.outward_normal, probe);
            if !(kp > 0.0 && km > 0.0) {
                return Err(Error::Degenerate(format!(
                    "non-positive boundary density at t = {t} (K+ = {kp:.3e}, K- = {km:.3e})"
                )));
            }
            bd.params.push(t);
            bd.points.push(bp.point);
            bd.normals.push(bp.outward_normal);
            bd.density_plus.push(kp);
            bd.density_minus.push(km);
        }
        Ok(HarmonicPair {
            domain: domain.clone(),
            spec: spec.clone(),
            u_plus,
            u_minus,
            pole_plus: pole_plus.to_vec(),
            pole_minus: pole_minus.to_vec(),
            boundary: bd,
        })
    }

    pub fn field(&self, side: Side) -> &ScalarField {
        match side {
            Side::Plus => &self.u_plus,
            Side::Minus => &self.u_minus,
        }
    }

    pub fn density(&self, side: Side) -> &[f64] {
        match side {
            Side::Plus => &self.boundary.density_plus,
            Side::Minus => &self.boundary.density_minus,
        }
    }

    pub fn pole(&self, side: Side) -> &[f64] {
        match side {
            Side::Plus => &self.pole_plus,
            Side::Minus => &self.pole_minus,
        }
    }

    /// h(Q) = K^-(Q)/K^+(Q) at the boundary sample nearest to q.
    pub fn h_at(&self, q: &[f64]) -> f64 {
        let i = self.boundary.nearest(q);
        self.boundary.density_minus[i] / self.boundary.density_plus[i]
    }

    pub fn boundary_point_near(&self, q: &[f64]) -> Point {
        self.boundary.points[self.boundary.nearest(q)].clone()
    }
}

/// Harmonic measure of B(Q, r): integral of the boundary density over the
/// parameterized boundary inside the ball, trapezoid rule with fractional
/// end segments at the sphere crossings.
pub fn harmonic_measure_of_ball(pair: &HarmonicPair, side: Side, q: &[f64], r: f64) -> Result<f64> {
    let h = pair.spec.h();
    if r < 4.0 * h {
        return Err(Error::UnderResolved(format!(
            "ball radius {r} below 4h = {}",
            4.0 * h
        )));
    }
    if geom::dist(pair.pole(side), q) <= r {
        return Err(Error::validation("ball contains the pole"));
    }
    let bd = &pair.boundary;
    let dens = pair.density(side);
    let m = bd.points.len();
    let dist_q: Vec<f64> = bd.points.iter().map(|p| geom::dist(p, q)).collect();

    let mut total = 0.0;
    for i in 0..m - 1 {
        let (a, b) = (dist_q[i] <= r, dist_q[i + 1] <= r);
        if !a && !b {
            continue;
        }
        let seg_len = geom::dist(&bd.points[i], &bd.points[i + 1]);
        if a && b {
            total += 0.5 * (dens[i] + dens[i + 1]) * seg_len;
        } else {
            let frac = ((r - dist_q[i]) / (dist_q[i + 1] - dist_q[i])).clamp(0.0, 1.0);
            let dens_cross = dens[i] + frac * (dens[i + 1] - dens[i]);
            if a {
                total += 0.5 * (dens[i] + dens_cross) * seg_len * frac;
            } else {
                total += 0.5 * (dens_cross + dens[i + 1]) * seg_len * (1.0 - frac);
            }
        }
    }
    Ok(total)
}

/// Trace of the harmonic-measure surface density: omega(B(Q,r)) normalized
/// by the flat-disk measure vol_{n-1} r^{n-1} so it converges to the
/// Poisson-kernel value at Q as r -> 0.
pub fn boundary_density(
    pair: &HarmonicPair,
    side: Side,
    q: &[f64],
    r_list: &[f64],
) -> Result<RadialTrace> {
    if r_list.is_empty() {
        return Err(Error::validation("empty radius list"));
    }
    for w in r_list.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::validation("r_list must be strictly decreasing"));
        }
    }
    let dim = pair.spec.dimension;
    let norm = geom::unit_ball_volume(dim - 1);
    let mut values = Vec::with_capacity(r_list.len());
    for &r in r_list {
        let omega = harmonic_measure_of_ball(pair, side, q, r)?;
        values.push(omega / (norm * r.powi(dim as i32 - 1)));
    }
    RadialTrace::new(
        q.to_vec(),
        r_list.to_vec(),
        values,
        "density",
        2.0 * pair.spec.h() / r_list.last().unwrap(),
    )
}

/// Total flux of a Green's function through the parameterized boundary
/// (flux-conservation diagnostic; equals 1 on bounded domains).
pub fn total_boundary_flux(pair: &HarmonicPair, side: Side) -> f64 {
    let bd = &pair.boundary;
    let dens = pair.density(side);
    let mut total = 0.0;
    for i in 0..bd.points.len() - 1 {
        let seg = geom::dist(&bd.points[i], &bd.points[i + 1]);
        total += 0.5 * (dens[i] + dens[i + 1]) * seg;
    }
    total
}


#[cfg(test)]
mod bench_probe {
    use super::*;
    use crate::domains;

    #[test]
    #[ignore]
    fn time_one_512_solve() {
        let d = domains::make_disk();
        let spec = GridSpec::square(&[-1.25, -1.25], &[1.25, 1.25], 512).unwrap();
        let t0 = std::time::Instant::now();
        let g = greens_function(&d, &[0.0, 0.0], &spec, &SolverParams::default()).unwrap();
        println!("512^2 disk greens: {:?}, max {}", t0.elapsed(), g.max_abs());
    }
}
