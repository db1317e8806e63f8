//! Dirichlet problems on bounded domains: meshes, P1 solvers, norms, local
//! averages and solution dumps.

mod dump;
mod mesh;
mod solve;
mod sparse;

use std::sync::Arc;

pub use dump::{read_grid_function, write_grid_function, DumpFormat};
pub use mesh::{Mesh, NodeKind, Shape};
pub use solve::{cells_for, closed_form_1d, solve_dirichlet, CoefficientSource, DirichletProblem, ScalarFn, Solution, SolverOptions};
pub use sparse::{Csr, Ilu};

use crate::{Error, Result};

/// Nodal P1 field on a mesh. Exterior nodes hold zero.
#[derive(Clone, Debug)]
pub struct GridFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

/// Sub-elements per axis when an element straddles a region boundary.
const REGION_SUBDIVISION: usize = 8;

impl GridFunction {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mesh.num_nodes(), "one value per node");
        GridFunction { mesh, values }
    }

    /// Nodal interpolant of `f`; exterior nodes get zero.
    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..mesh.num_nodes())
            .map(|v| match mesh.node_kind(v) {
                NodeKind::Exterior => 0.0,
                _ => f(mesh.point(v)),
            })
            .collect();
        GridFunction { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn check_same_mesh(&self, other: &GridFunction) -> Result<()> {
        if self.mesh.same_as(&other.mesh) {
            Ok(())
        } else {
            Err(Error::Geometry("grid functions live on different meshes".into()))
        }
    }

    /// Pointwise `self - other`.
    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_same_mesh(other)?;
        Ok(self.zip_map(other, |a, b| a - b))
    }

    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        GridFunction {
            mesh: self.mesh.clone(),
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    /// Constant gradient on element `t`.
    pub fn element_gradient(&self, t: usize) -> [f64; 2] {
        let nodes = self.mesh.element_nodes(t);
        let g = self.mesh.basis_gradients(t);
        let mut out = [0.0; 2];
        for a in 0..self.mesh.dim() + 1 {
            out[0] += self.values[nodes[a]] * g[a][0];
            out[1] += self.values[nodes[a]] * g[a][1];
        }
        out
    }

    /// P1 value at `x` inside element `t`.
    pub fn value_in(&self, t: usize, x: [f64; 2]) -> f64 {
        let nodes = self.mesh.element_nodes(t);
        let g = self.element_gradient(t);
        let p = self.mesh.point(nodes[0]);
        self.values[nodes[0]] + g[0] * (x[0] - p[0]) + g[1] * (x[1] - p[1])
    }

    pub fn value_at(&self, x: [f64; 2]) -> Option<f64> {
        self.mesh.locate(x).map(|t| self.value_in(t, x))
    }

    /// `||u||_{L2}`, exact for P1.
    pub fn l2_norm(&self) -> f64 {
        let mesh = &self.mesh;
        let meas = mesh.element_measure();
        let mut s = 0.0;
        for t in 0..mesh.num_elements() {
            if !mesh.is_active(t) {
                continue;
            }
            let n = mesh.element_nodes(t);
            let u: Vec<f64> = n.iter().map(|&v| self.values[v]).collect();
            s += if mesh.dim() == 1 {
                meas / 3.0 * (u[0] * u[0] + u[0] * u[1] + u[1] * u[1])
            } else {
                meas / 6.0 * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2] + u[0] * u[1] + u[1] * u[2] + u[0] * u[2])
            };
        }
        s.sqrt()
    }

    /// `||grad u||_{L2}`.
    pub fn h1_seminorm(&self) -> f64 {
        self.gradient_energy(|_| 1.0).sqrt()
    }

    /// `sum_t w(t) |grad u_t|^2 |t|`.
    fn gradient_energy(&self, weight: impl Fn(usize) -> f64) -> f64 {
        let meas = self.mesh.element_measure();
        (0..self.mesh.num_elements())
            .filter(|&t| self.mesh.is_active(t))
            .map(|t| {
                let g = self.element_gradient(t);
                weight(t) * (g[0] * g[0] + g[1] * g[1]) * meas
            })
            .sum()
    }

    /// Nodal gradient component: mean of the gradients of the active
    /// elements sharing each node.
    pub fn nodal_gradient(&self, axis: usize) -> GridFunction {
        let mesh = &self.mesh;
        let values = (0..mesh.num_nodes())
            .map(|v| {
                let (mut s, mut c) = (0.0, 0);
                for (t, _) in mesh.node_elements(v) {
                    if mesh.is_active(t) {
                        s += self.element_gradient(t)[axis];
                        c += 1;
                    }
                }
                if c == 0 {
                    0.0
                } else {
                    s / c as f64
                }
            })
            .collect();
        GridFunction {
            mesh: mesh.clone(),
            values,
        }
    }

    /// `(mean_{B(x0, rho)} |grad u|^2)^{1/2}`, elements weighted by the area
    /// of their intersection with the ball.
    pub fn local_gradient_average(&self, x0: [f64; 2], rho: f64) -> Result<f64> {
        check_ball(&self.mesh, x0, rho)?;
        let mut e = 0.0;
        let mut area = 0.0;
        for_each_in_region(&self.mesh, &|x| dist(x, x0, self.mesh.dim()) - rho, |t, _, w| {
            let g = self.element_gradient(t);
            e += w * (g[0] * g[0] + g[1] * g[1]);
            area += w;
        });
        Ok((e / area).sqrt())
    }

    /// `||grad u||_{L2(Omega \ Sigma_width)}`, the gradient on the boundary
    /// layer of the exact shape.
    pub fn boundary_layer_norm(&self, width: f64) -> f64 {
        let shape = self.mesh.shape;
        let mut e = 0.0;
        for_each_in_region(&self.mesh, &|x| shape.boundary_distance(x) - width, |t, _, w| {
            let g = self.element_gradient(t);
            e += w * (g[0] * g[0] + g[1] * g[1]);
        });
        e.sqrt()
    }
}

fn dist(x: [f64; 2], y: [f64; 2], dim: usize) -> f64 {
    if dim == 1 {
        (x[0] - y[0]).abs()
    } else {
        (x[0] - y[0]).hypot(x[1] - y[1])
    }
}

/// Errors unless `B(x0, rho)` lies in the domain.
pub fn check_ball(mesh: &Mesh, x0: [f64; 2], rho: f64) -> Result<()> {
    if !(rho > 0.0) {
        return Err(Error::Geometry(format!("ball radius {rho} must be positive")));
    }
    let x = if mesh.dim() == 1 { [x0[0], 0.0] } else { x0 };
    if mesh.shape.contains_ball(x, rho) {
        Ok(())
    } else {
        Err(Error::Geometry(format!("ball B({x0:?}, {rho}) escapes the domain")))
    }
}

/// Visit `(element, point, weight)` for a quadrature of the region
/// `{level < 0}` intersected with the active elements. `level` must be
/// 1-Lipschitz. Elements inside the region use a rule exact for quadratics;
/// straddling elements are subdivided.
pub fn for_each_in_region(mesh: &Mesh, level: &dyn Fn([f64; 2]) -> f64, mut visit: impl FnMut(usize, [f64; 2], f64)) {
    let meas = mesh.element_measure();
    let reach = if mesh.dim() == 1 { 0.5 * mesh.h } else { mesh.h * std::f64::consts::SQRT_2 * 2.0 / 3.0 };
    let s = REGION_SUBDIVISION;
    for t in 0..mesh.num_elements() {
        if !mesh.is_active(t) {
            continue;
        }
        let c = mesh.centroid(t);
        let phi = level(c);
        if phi > reach {
            continue;
        }
        let nodes = mesh.element_nodes(t);
        let p0 = mesh.point(nodes[0]);
        if mesh.dim() == 1 {
            if phi < -reach {
                for (xi, w) in [(0.112_701_665_379_258_3, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.887_298_334_620_741_7, 5.0 / 18.0)] {
                    visit(t, [p0[0] + xi * mesh.h, 0.0], w * meas);
                }
            } else {
                for k in 0..s {
                    let x = [p0[0] + (k as f64 + 0.5) / s as f64 * mesh.h, 0.0];
                    if level(x) < 0.0 {
                        visit(t, x, meas / s as f64);
                    }
                }
            }
            continue;
        }
        let p: Vec<[f64; 2]> = nodes.iter().map(|&v| mesh.point(v)).collect();
        let at = |a: f64, b: f64| {
            [
                p[0][0] + a * (p[1][0] - p[0][0]) + b * (p[2][0] - p[0][0]),
                p[0][1] + a * (p[1][1] - p[0][1]) + b * (p[2][1] - p[0][1]),
            ]
        };
        if phi < -reach {
            for (a, b) in [(0.5, 0.0), (0.5, 0.5), (0.0, 0.5)] {
                visit(t, at(a, b), meas / 3.0);
            }
            continue;
        }
        let w = meas / (s * s) as f64;
        let sf = s as f64;
        for i in 0..s {
            for j in 0..s - i {
                // Upright sub-triangle with barycentric corner (i, j).
                let x = at((i as f64 + 1.0 / 3.0) / sf, (j as f64 + 1.0 / 3.0) / sf);
                if level(x) < 0.0 {
                    visit(t, x, w);
                }
                if i + j + 1 < s {
                    let x = at((i as f64 + 2.0 / 3.0) / sf, (j as f64 + 2.0 / 3.0) / sf);
                    if level(x) < 0.0 {
                        visit(t, x, w);
                    }
                }
            }
        }
    }
}

/// Norms of a constant-coefficient solution by second differences.
#[derive(Clone, Debug, PartialEq)]
pub struct H2Report {
    pub grad_norm: f64,
    pub hess_norm: f64,
    /// `||f||_{L2}` by nodal quadrature.
    pub load_norm: f64,
    /// `||grad u0|| / (r0 ||f||)`.
    pub grad_ratio: f64,
    /// `||grad^2 u0|| / ||f||`.
    pub hess_ratio: f64,
}

/// `||grad u0||` and `||grad^2 u0||`, the latter from centred second
/// differences at nodes whose full stencil lies in the domain.
pub fn h2_oracle(u0: &GridFunction, load: &ScalarFn) -> H2Report {
    let mesh = u0.mesh();
    let h = mesh.h;
    let u = u0.values();
    let inside = |v: usize| mesh.node_kind(v) != NodeKind::Exterior;
    let mut hess = 0.0;
    let mut load2 = 0.0;
    let cell = h.powi(mesh.dim() as i32);
    if mesh.dim() == 1 {
        for v in 1..mesh.n {
            let d2 = (u[v + 1] - 2.0 * u[v] + u[v - 1]) / (h * h);
            hess += d2 * d2 * cell;
        }
    } else {
        let m = mesh.side();
        for i0 in 1..mesh.n {
            for i1 in 1..mesh.n {
                let v = i0 * m + i1;
                let stencil = [v - m - 1, v - m, v - m + 1, v - 1, v, v + 1, v + m - 1, v + m, v + m + 1];
                if !stencil.iter().all(|&w| inside(w)) {
                    continue;
                }
                let d00 = (u[v + m] - 2.0 * u[v] + u[v - m]) / (h * h);
                let d11 = (u[v + 1] - 2.0 * u[v] + u[v - 1]) / (h * h);
                let d01 = (u[v + m + 1] - u[v + m - 1] - u[v - m + 1] + u[v - m - 1]) / (4.0 * h * h);
                hess += (d00 * d00 + 2.0 * d01 * d01 + d11 * d11) * cell;
            }
        }
    }
    for v in 0..mesh.num_nodes() {
        if mesh.node_kind(v) == NodeKind::Interior {
            load2 += load(mesh.point(v)).powi(2) * cell;
        }
    }
    let grad_norm = u0.h1_seminorm();
    let hess_norm = hess.sqrt();
    let load_norm = load2.sqrt();
    let r0 = mesh.shape.diameter();
    let ratio = |x: f64, d: f64| if d > 0.0 { x / d } else { f64::NAN };
    H2Report {
        grad_norm,
        hess_norm,
        load_norm,
        grad_ratio: ratio(grad_norm, r0 * load_norm),
        hess_ratio: ratio(hess_norm, load_norm),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::new(Shape::Square, n).unwrap())
    }

    #[test]
    fn norms_of_simple_fields() {
        let mesh = square(16);
        assert_eq!(GridFunction::from_fn(mesh.clone(), |_| 3.0).h1_seminorm(), 0.0);
        let x1 = GridFunction::from_fn(mesh.clone(), |x| x[0]);
        assert!((x1.h1_seminorm() - 1.0).abs() < 1e-13);
        // int_0^1 x^2 = 1/3 is exact for the P1 interpolant up to h^2 / 6.
        assert!((x1.l2_norm().powi(2) - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn sine_gradient_energy() {
        let mesh = Arc::new(Mesh::new(Shape::Interval { a: 0.0, b: 1.0 }, 2000).unwrap());
        let u = GridFunction::from_fn(mesh, |x| (2.0 * PI * x[0]).sin());
        assert!((u.h1_seminorm().powi(2) - 2.0 * PI * PI).abs() < 1e-4);
    }

    #[test]
    fn local_average_of_linear_field() {
        let mesh = square(64);
        let u = GridFunction::from_fn(mesh, |x| 3.0 * x[0] + 4.0 * x[1]);
        let avg = u.local_gradient_average([0.5, 0.5], 0.2).unwrap();
        assert!((avg - 5.0).abs() < 1e-12);
        assert!(u.local_gradient_average([0.1, 0.5], 0.2).is_err());
    }

    #[test]
    fn region_quadrature_measures_disk() {
        let mesh = square(64);
        let mut area = 0.0;
        for_each_in_region(&mesh, &|x| (x[0] - 0.5).hypot(x[1] - 0.5) - 0.3, |_, _, w| area += w);
        assert!((area - PI * 0.09).abs() < 1e-4);
    }

    #[test]
    fn layer_norm_of_linear_field() {
        // |grad u| = 1 and the layer of width w has area 1 - (1 - 2w)^2.
        let mesh = square(64);
        let u = GridFunction::from_fn(mesh, |x| x[1]);
        let w = 0.125;
        let exact = 1.0 - (1.0 - 2.0 * w) * (1.0 - 2.0 * w);
        assert!((u.boundary_layer_norm(w).powi(2) - exact).abs() < 1e-12);
        assert!(u.boundary_layer_norm(0.0625) < u.boundary_layer_norm(w));
    }

    #[test]
    fn h2_norm_of_sine_product() {
        // ||grad^2 u||^2 = 16 pi^4 for u = sin(2 pi x1) sin(2 pi x2) on the unit square.
        let mesh = square(256);
        let u = GridFunction::from_fn(mesh, |x| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
        let load: ScalarFn = Arc::new(|_| 1.0);
        let r = h2_oracle(&u, &load);
        assert!((r.hess_norm - 4.0 * PI * PI).abs() / (4.0 * PI * PI) < 0.02);
        let lin = GridFunction::from_fn(u.mesh().clone(), |x| x[0] - 2.0 * x[1]);
        assert!(h2_oracle(&lin, &load).hess_norm < 1e-9);
    }
}
