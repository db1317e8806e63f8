//! Uniform meshes on an interval, the unit square and a staircase disk.
//!
//! Two-dimensional meshes split every square cell along its `(+1, +1)`
//! diagonal into a lower and an upper triangle. A disk is the union of the
//! triangles of its bounding-square mesh whose three vertices lie in the
//! closed disk.

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Interval { a: f64, b: f64 },
    /// The unit square `(0, 1)^2`.
    Square,
    Ball { center: [f64; 2], radius: f64 },
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Diameter `r0`.
    pub fn diameter(&self) -> f64 {
        match *self {
            Shape::Interval { a, b } => b - a,
            Shape::Square => std::f64::consts::SQRT_2,
            Shape::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Radius of the largest inscribed ball.
    pub fn inradius(&self) -> f64 {
        match *self {
            Shape::Interval { a, b } => 0.5 * (b - a),
            Shape::Square => 0.5,
            Shape::Ball { radius, .. } => radius,
        }
    }

    /// Distance to the boundary of the exact shape, negative outside.
    pub fn boundary_distance(&self, x: [f64; 2]) -> f64 {
        match *self {
            Shape::Interval { a, b } => (x[0] - a).min(b - x[0]),
            Shape::Square => x[0].min(1.0 - x[0]).min(x[1]).min(1.0 - x[1]),
            Shape::Ball { center, radius } => radius - ((x[0] - center[0]).hypot(x[1] - center[1])),
        }
    }

    /// Whether the closed ball `B(x0, r)` lies in the closed shape.
    pub fn contains_ball(&self, x0: [f64; 2], r: f64) -> bool {
        self.boundary_distance(x0) >= r * (1.0 - 1e-12)
    }

    fn origin_and_side(&self) -> ([f64; 2], f64) {
        match *self {
            Shape::Interval { a, b } => ([a, 0.0], b - a),
            Shape::Square => ([0.0, 0.0], 1.0),
            Shape::Ball { center, radius } => ([center[0] - radius, center[1] - radius], 2.0 * radius),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Interval { a, b } => a.is_finite() && b.is_finite() && b > a,
            Shape::Square => true,
            Shape::Ball { center, radius } => center.iter().all(|c| c.is_finite()) && radius.is_finite() && radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Geometry(format!("degenerate domain {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    /// Dirichlet node: carries the boundary data.
    Boundary,
    /// Outside the meshed domain; holds zero.
    Exterior,
}

/// A uniform mesh with `n` cells per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub shape: Shape,
    pub n: usize,
    pub h: f64,
    origin: [f64; 2],
    kinds: Vec<NodeKind>,
    active: Vec<bool>,
}

impl Mesh {
    pub fn new(shape: Shape, n: usize) -> Result<Self> {
        shape.validate()?;
        if n < 2 {
            return Err(Error::Geometry(format!("mesh needs at least 2 cells per axis, got {n}")));
        }
        let (origin, side) = shape.origin_and_side();
        let h = side / n as f64;
        let dim = shape.dim();
        let mut mesh = Mesh {
            shape,
            n,
            h,
            origin,
            kinds: Vec::new(),
            active: Vec::new(),
        };
        if dim == 1 {
            mesh.active = vec![true; n];
            mesh.kinds = (0..=n)
                .map(|i| if i == 0 || i == n { NodeKind::Boundary } else { NodeKind::Interior })
                .collect();
            return Ok(mesh);
        }
        let inside = |p: [f64; 2]| match shape {
            Shape::Ball { center, radius } => (p[0] - center[0]).hypot(p[1] - center[1]) <= radius * (1.0 + 1e-12),
            _ => true,
        };
        mesh.active = (0..2 * n * n).map(|t| mesh.triangle(t).iter().all(|&v| inside(mesh.point(v)))).collect();
        let m = n + 1;
        let mut count = vec![0u8; m * m];
        for t in 0..2 * n * n {
            if mesh.active[t] {
                for v in mesh.triangle(t) {
                    count[v] += 1;
                }
            }
        }
        mesh.kinds = (0..m * m)
            .map(|v| {
                let (i0, i1) = (v / m, v % m);
                let edge = i0 == 0 || i1 == 0 || i0 == n || i1 == n;
                match count[v] {
                    0 => NodeKind::Exterior,
                    6 if !edge => NodeKind::Interior,
                    _ => NodeKind::Boundary,
                }
            })
            .collect();
        if !mesh.kinds.contains(&NodeKind::Interior) {
            return Err(Error::Geometry("mesh has no interior nodes".into()));
        }
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    /// Nodes per axis.
    pub fn side(&self) -> usize {
        self.n + 1
    }

    pub fn num_nodes(&self) -> usize {
        self.side().pow(self.dim() as u32)
    }

    pub fn num_elements(&self) -> usize {
        if self.dim() == 1 {
            self.n
        } else {
            2 * self.n * self.n
        }
    }

    pub fn node_kind(&self, v: usize) -> NodeKind {
        self.kinds[v]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn point(&self, v: usize) -> [f64; 2] {
        if self.dim() == 1 {
            [self.origin[0] + v as f64 * self.h, 0.0]
        } else {
            let m = self.side();
            [
                self.origin[0] + (v / m) as f64 * self.h,
                self.origin[1] + (v % m) as f64 * self.h,
            ]
        }
    }

    pub fn node_index(&self, i0: usize, i1: usize) -> usize {
        i0 * self.side() + i1
    }

    pub fn is_active(&self, t: usize) -> bool {
        self.active[t]
    }

    /// Element measure: length in 1-D, area in 2-D.
    pub fn element_measure(&self) -> f64 {
        if self.dim() == 1 {
            self.h
        } else {
            0.5 * self.h * self.h
        }
    }

    /// Vertices of 2-D triangle `t`, counterclockwise.
    pub fn triangle(&self, t: usize) -> [usize; 3] {
        let cell = t / 2;
        let (i0, i1) = (cell / self.n, cell % self.n);
        let v = |a: usize, b: usize| self.node_index(i0 + a, i1 + b);
        if t % 2 == 0 {
            [v(0, 0), v(1, 0), v(1, 1)]
        } else {
            [v(0, 0), v(1, 1), v(0, 1)]
        }
    }

    /// Vertices of element `t` padded to three entries (1-D repeats the last).
    pub fn element_nodes(&self, t: usize) -> [usize; 3] {
        if self.dim() == 1 {
            [t, t + 1, t + 1]
        } else {
            self.triangle(t)
        }
    }

    /// Gradients of the element's nodal basis functions.
    pub fn basis_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let r = 1.0 / self.h;
        if self.dim() == 1 {
            [[-r, 0.0], [r, 0.0], [0.0, 0.0]]
        } else if t % 2 == 0 {
            [[-r, 0.0], [r, -r], [0.0, r]]
        } else {
            [[0.0, -r], [r, 0.0], [-r, r]]
        }
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let nodes = self.element_nodes(t);
        if self.dim() == 1 {
            let a = self.point(nodes[0]);
            [a[0] + 0.5 * self.h, 0.0]
        } else {
            let p: Vec<[f64; 2]> = nodes.iter().map(|&v| self.point(v)).collect();
            [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
        }
    }

    /// Elements (as `(element, local index)`) sharing node `v`.
    pub fn node_elements(&self, v: usize) -> Vec<(usize, usize)> {
        if self.dim() == 1 {
            let mut out = Vec::with_capacity(2);
            if v > 0 {
                out.push((v - 1, 1));
            }
            if v < self.n {
                out.push((v, 0));
            }
            return out;
        }
        let m = self.side();
        let (i0, i1) = (v / m, v % m);
        let mut out = Vec::with_capacity(6);
        for (d0, d1) in [(0usize, 0usize), (1, 0), (0, 1), (1, 1)] {
            if i0 < d0 || i1 < d1 || i0 - d0 >= self.n || i1 - d1 >= self.n {
                continue;
            }
            let cell = (i0 - d0) * self.n + (i1 - d1);
            for t in [2 * cell, 2 * cell + 1] {
                if let Some(local) = self.triangle(t).iter().position(|&w| w == v) {
                    out.push((t, local));
                }
            }
        }
        out
    }

    /// Element containing `x`, if any active one does.
    pub fn locate(&self, x: [f64; 2]) -> Option<usize> {
        let rel = |axis: usize| (x[axis] - self.origin[axis]) / self.h;
        let clamp = |s: f64| -> Option<(usize, f64)> {
            if !(-1e-12..=self.n as f64 + 1e-12).contains(&s) {
                return None;
            }
            let i = (s.floor().max(0.0) as usize).min(self.n - 1);
            Some((i, s - i as f64))
        };
        let (i0, f0) = clamp(rel(0))?;
        if self.dim() == 1 {
            return Some(i0);
        }
        let (i1, f1) = clamp(rel(1))?;
        let cell = i0 * self.n + i1;
        let t = if f1 <= f0 { 2 * cell } else { 2 * cell + 1 };
        self.active[t].then_some(t)
    }

    /// Whether two meshes describe the same nodes and elements.
    pub fn same_as(&self, other: &Mesh) -> bool {
        self.shape == other.shape && self.n == other.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_boundary_nodes_lie_on_edges() {
        let mesh = Mesh::new(Shape::Square, 4).unwrap();
        let boundary = mesh.kinds().iter().filter(|k| **k == NodeKind::Boundary).count();
        assert_eq!(boundary, 16);
        assert_eq!(mesh.num_elements(), 32);
    }

    #[test]
    fn basis_gradients_reproduce_linear_functions() {
        let mesh = Mesh::new(Shape::Square, 3).unwrap();
        for t in 0..mesh.num_elements() {
            let g = mesh.basis_gradients(t);
            let nodes = mesh.triangle(t);
            let u: Vec<f64> = nodes.iter().map(|&v| 2.0 * mesh.point(v)[0] - 3.0 * mesh.point(v)[1]).collect();
            let gx: f64 = (0..3).map(|a| u[a] * g[a][0]).sum();
            let gy: f64 = (0..3).map(|a| u[a] * g[a][1]).sum();
            assert!((gx - 2.0).abs() < 1e-12 && (gy + 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn disk_mesh_is_inside_the_disk() {
        let shape = Shape::Ball {
            center: [0.5, 0.5],
            radius: 0.5,
        };
        let mesh = Mesh::new(shape, 16).unwrap();
        for v in 0..mesh.num_nodes() {
            if mesh.node_kind(v) != NodeKind::Exterior {
                assert!(shape.boundary_distance(mesh.point(v)) >= -1e-12);
            }
        }
        assert!(mesh.locate([0.5, 0.5]).is_some());
        assert!(mesh.locate([0.01, 0.01]).is_none());
    }

    #[test]
    fn node_elements_cover_interior_star() {
        let mesh = Mesh::new(Shape::Square, 4).unwrap();
        assert_eq!(mesh.node_elements(mesh.node_index(2, 2)).len(), 6);
        assert_eq!(mesh.node_elements(mesh.node_index(0, 0)).len(), 2);
        assert_eq!(mesh.node_elements(mesh.node_index(4, 0)).len(), 1);
    }
}
