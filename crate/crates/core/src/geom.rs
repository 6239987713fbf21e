//! Small-vector helpers for points in dimension 2..4, kept as slices so the
//! whole crate works with a single point representation.

pub type Point = Vec<f64>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn add(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Point {
    a.iter().map(|x| x * s).collect()
}

/// a + s*b
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn normalized(a: &[f64]) -> Point {
    let n = norm(a);
    assert!(n > 0.0, "cannot normalize zero vector");
    scale(a, 1.0 / n)
}

/// Volume of the unit ball in dimension d (d = 0 gives 1).
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        4 => std::f64::consts::PI * std::f64::consts::PI / 2.0,
        _ => unreachable!("dimension > 4 not used"),
    }
}

/// Surface area of the unit sphere S^{d-1} in R^d.
pub fn unit_sphere_area(d: usize) -> f64 {
    (d as f64) * unit_ball_volume(d)
}

/// Lexicographic comparison used to break ties between candidate normals.
pub fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Canonical representative of a direction: flip sign so the vector is
/// lexicographically smallest among {v, -v}.
pub fn canonical_direction(v: &[f64]) -> Point {
    let neg = scale(v, -1.0);
    if lex_less(&neg, v) {
        neg
    } else {
        v.to_vec()
    }
}

/// Uniform-ish lattice of unit directions. In 2D these are equispaced angles
/// on the half-circle; in 3D a Fibonacci sphere lattice.
pub fn direction_lattice(dim: usize, n: usize) -> Vec<Point> {
    match dim {
        2 => (0..n)
            .map(|i| {
                let t = std::f64::consts::PI * (i as f64) / (n as f64);
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => fibonacci_sphere(n),
        4 => lattice_s3(n),
        _ => unreachable!("dimension > 4 not used"),
    }
}

/// Fibonacci lattice on S^2.
pub fn fibonacci_sphere(n: usize) -> Vec<Point> {
    let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / (n as f64);
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * std::f64::consts::PI * (i as f64) / golden;
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Crude covering lattice on S^3 (only needed for the R^4 cone's plane
/// searches, where percent accuracy suffices before local refinement).
fn lattice_s3(n: usize) -> Vec<Point> {
    // Spherical product: latitudes in psi, Fibonacci points on the S^2 slice.
    let n_psi = ((n as f64).powf(1.0 / 3.0).ceil() as usize).max(4);
    let per_slice = (n / n_psi).max(8);
    let mut out = Vec::new();
    for i in 0..n_psi {
        let psi = std::f64::consts::PI * (i as f64 + 0.5) / (n_psi as f64);
        let (s, c) = psi.sin_cos();
        for p in fibonacci_sphere(per_slice) {
            out.push(vec![c, s * p[0], s * p[1], s * p[2]]);
        }
    }
    out
}

/// Embed an angle-parameterized direction for optimization:
/// 2D uses one angle, 3D two spherical angles.
pub fn direction_from_angles(dim: usize, ang: &[f64]) -> Point {
    match dim {
        2 => vec![ang[0].cos(), ang[0].sin()],
        3 => {
            let (st, ct) = ang[0].sin_cos();
            let (sp, cp) = ang[1].sin_cos();
            vec![st * cp, st * sp, ct]
        }
        _ => unreachable!("angle charts only used in 2D/3D"),
    }
}

pub fn angles_from_direction(v: &[f64]) -> Vec<f64> {
    match v.len() {
        2 => vec![v[1].atan2(v[0])],
        3 => {
            let theta = v[2].clamp(-1.0, 1.0).acos();
            vec![theta, v[1].atan2(v[0])]
        }
        _ => unreachable!(),
    }
}

/// An orthonormal basis of the hyperplane orthogonal to `nu`.
pub fn tangent_basis(nu: &[f64]) -> Vec<Point> {
    let dim = nu.len();
    let mut basis: Vec<Point> = Vec::new();
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        // Gram-Schmidt against nu and the basis collected so far.
        let mut v = axpy(&e, -dot(&e, nu), nu);
        for b in &basis {
            v = axpy(&v, -dot(&v, b), b);
        }
        let n = norm(&v);
        if n > 1e-8 {
            basis.push(scale(&v, 1.0 / n));
        }
        if basis.len() == dim - 1 {
            break;
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tangent_basis_is_orthonormal() {
        let nu = normalized(&[0.3, -0.2, 0.93]);
        let basis = tangent_basis(&nu);
        assert_eq!(basis.len(), 2);
        for b in &basis {
            assert!(dot(b, &nu).abs() < 1e-12);
            assert!((norm(b) - 1.0).abs() < 1e-12);
        }
        assert!(dot(&basis[0], &basis[1]).abs() < 1e-12);
    }

    #[test]
    fn fibonacci_sphere_covers() {
        let pts = fibonacci_sphere(200);
        for p in &pts {
            assert!((norm(p) - 1.0).abs() < 1e-12);
        }
        // every octant gets a point
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    assert!(pts
                        .iter()
                        .any(|p| p[0] * sx > 0.0 && p[1] * sy > 0.0 && p[2] * sz > 0.0));
                }
            }
        }
    }
}
