//! Uniform simplicial meshes of intervals and rectangles.

use crate::error::{Error, Result};
use crate::problem::{BoxDomain, Facet};
use crate::sampling::gauss_on;

/// P1 mesh of a box. In two dimensions every cell is split along its
/// `(0,0)-(1,1)` diagonal, so meshes with divisible counts are nested.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub bounds: Vec<(f64, f64)>,
    pub divisions: Vec<usize>,
    pub nodes: Vec<Vec<f64>>,
    /// Simplices as node indices: 2 per element in 1D, 3 in 2D.
    pub elements: Vec<Vec<usize>>,
    pub on_boundary: Vec<bool>,
    /// Boundary simplices: a node in 1D, an edge in 2D.
    pub facets: Vec<(Facet, Vec<usize>)>,
}

impl Mesh {
    pub fn uniform(omega: &BoxDomain<f64>, divisions: &[usize]) -> Result<Self> {
        let bounds = omega.bounds_f64();
        if divisions.len() != bounds.len() {
            return Err(Error::Dimension(format!("{} divisions for a {}-dimensional box", divisions.len(), bounds.len())));
        }
        if divisions.iter().any(|&d| d == 0) {
            return Err(Error::Invalid("mesh divisions must be positive".into()));
        }
        match bounds.len() {
            1 => Ok(Self::interval(bounds[0], divisions[0])),
            2 => Ok(Self::rectangle(&bounds, divisions)),
            n => Err(Error::Invalid(format!("finite elements support n = 1 or 2, got {n}"))),
        }
    }

    fn interval((a, b): (f64, f64), k: usize) -> Self {
        let h = (b - a) / k as f64;
        let nodes: Vec<Vec<f64>> = (0..=k).map(|i| vec![if i == k { b } else { a + h * i as f64 }]).collect();
        let elements = (0..k).map(|i| vec![i, i + 1]).collect();
        let mut on_boundary = vec![false; k + 1];
        on_boundary[0] = true;
        on_boundary[k] = true;
        let facets = vec![(Facet { axis: 0, upper: false }, vec![0]), (Facet { axis: 0, upper: true }, vec![k])];
        Mesh { bounds: vec![(a, b)], divisions: vec![k], nodes, elements, on_boundary, facets }
    }

    fn rectangle(bounds: &[(f64, f64)], divisions: &[usize]) -> Self {
        let (kx, ky) = (divisions[0], divisions[1]);
        let coord = |axis: usize, i: usize| {
            let (lo, hi) = bounds[axis];
            let k = divisions[axis];
            if i == k {
                hi
            } else {
                lo + (hi - lo) * i as f64 / k as f64
            }
        };
        let id = |i: usize, j: usize| i * (ky + 1) + j;
        let mut nodes = Vec::with_capacity((kx + 1) * (ky + 1));
        let mut on_boundary = Vec::with_capacity(nodes.capacity());
        for i in 0..=kx {
            for j in 0..=ky {
                nodes.push(vec![coord(0, i), coord(1, j)]);
                on_boundary.push(i == 0 || i == kx || j == 0 || j == ky);
            }
        }
        let mut elements = Vec::with_capacity(2 * kx * ky);
        for i in 0..kx {
            for j in 0..ky {
                elements.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                elements.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mut facets = Vec::new();
        for j in 0..ky {
            facets.push((Facet { axis: 0, upper: false }, vec![id(0, j), id(0, j + 1)]));
            facets.push((Facet { axis: 0, upper: true }, vec![id(kx, j), id(kx, j + 1)]));
        }
        for i in 0..kx {
            facets.push((Facet { axis: 1, upper: false }, vec![id(i, 0), id(i + 1, 0)]));
            facets.push((Facet { axis: 1, upper: true }, vec![id(i, ky), id(i + 1, ky)]));
        }
        Mesh { bounds: bounds.to_vec(), divisions: divisions.to_vec(), nodes, elements, on_boundary, facets }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Largest cell width.
    pub fn h(&self) -> f64 {
        self.bounds.iter().zip(&self.divisions).map(|((a, b), k)| (b - a) / *k as f64).fold(0.0, f64::max)
    }

    /// Element containing `x` (clamped into the box) and its barycentric coordinates.
    pub fn locate(&self, x: &[f64]) -> (usize, Vec<f64>) {
        let cell = |axis: usize| {
            let (a, b) = self.bounds[axis];
            let k = self.divisions[axis];
            let t = ((x[axis] - a) / (b - a) * k as f64).clamp(0.0, k as f64);
            let i = (t.floor() as usize).min(k - 1);
            (i, t - i as f64)
        };
        match self.dim() {
            1 => {
                let (i, t) = cell(0);
                (i, vec![1.0 - t, t])
            }
            _ => {
                let (i, s) = cell(0);
                let (j, t) = cell(1);
                let base = 2 * (i * self.divisions[1] + j);
                if s >= t {
                    (base, vec![1.0 - s, s - t, t])
                } else {
                    (base + 1, vec![1.0 - t, s, t - s])
                }
            }
        }
    }

    /// Piecewise-linear interpolation of nodal values with `m` components.
    pub fn interpolate(&self, nodal: &[f64], m: usize, x: &[f64]) -> Vec<f64> {
        let (e, bary) = self.locate(x);
        let mut out = vec![0.0; m];
        for (&node, &w) in self.elements[e].iter().zip(&bary) {
            for (j, o) in out.iter_mut().enumerate() {
                *o += w * nodal[node * m + j];
            }
        }
        out
    }
}

/// Quadrature point of an element: position, weight and P1 basis values.
#[derive(Clone, Debug)]
pub(crate) struct QuadPoint {
    pub x: Vec<f64>,
    pub w: f64,
    pub basis: Vec<f64>,
}

/// Per-element quadrature and constant basis gradients.
#[derive(Clone, Debug)]
pub(crate) struct ElementRule {
    pub nodes: Vec<usize>,
    pub points: Vec<QuadPoint>,
    /// `grads[a][i]` is `d N_a / d x_i`.
    pub grads: Vec<Vec<f64>>,
}

/// Rule exact for polynomials of degree `degree` on the element.
pub(crate) fn element_rules(mesh: &Mesh, degree: u32) -> Vec<ElementRule> {
    let d = degree as usize;
    mesh.elements
        .iter()
        .map(|el| match mesh.dim() {
            1 => {
                let (a, b) = (mesh.nodes[el[0]][0], mesh.nodes[el[1]][0]);
                let points = gauss_on(d / 2 + 1, a, b)
                    .into_iter()
                    .map(|(x, w)| {
                        let t = (x - a) / (b - a);
                        QuadPoint { x: vec![x], w, basis: vec![1.0 - t, t] }
                    })
                    .collect();
                ElementRule { nodes: el.clone(), points, grads: vec![vec![-1.0 / (b - a)], vec![1.0 / (b - a)]] }
            }
            _ => triangle_rule(mesh, el, d),
        })
        .collect()
}

fn triangle_rule(mesh: &Mesh, el: &[usize], d: usize) -> ElementRule {
    let p: Vec<&Vec<f64>> = el.iter().map(|&i| &mesh.nodes[i]).collect();
    let e1 = [p[1][0] - p[0][0], p[1][1] - p[0][1]];
    let e2 = [p[2][0] - p[0][0], p[2][1] - p[0][1]];
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    // Collapsed tensor rule: (xi, eta) = (s, t (1 - s)) with Jacobian (1 - s).
    let mut points = Vec::new();
    for (s, ws) in gauss_on((d + 1) / 2 + 1, 0.0, 1.0) {
        for (t, wt) in gauss_on(d / 2 + 1, 0.0, 1.0) {
            let xi = s;
            let eta = t * (1.0 - s);
            let x = vec![p[0][0] + xi * e1[0] + eta * e2[0], p[0][1] + xi * e1[1] + eta * e2[1]];
            points.push(QuadPoint { x, w: ws * wt * (1.0 - s) * det.abs(), basis: vec![1.0 - xi - eta, xi, eta] });
        }
    }
    // Gradients of the barycentric coordinates.
    let g1 = [e2[1] / det, -e2[0] / det];
    let g2 = [-e1[1] / det, e1[0] / det];
    let grads = vec![vec![-g1[0] - g2[0], -g1[1] - g2[1]], g1.to_vec(), g2.to_vec()];
    ElementRule { nodes: el.to_vec(), points, grads }
}

/// Boundary quadrature: point evaluations in 1D, Gauss rules on edges in 2D.
pub(crate) fn facet_rules(mesh: &Mesh, degree: u32) -> Vec<(Facet, ElementRule)> {
    mesh.facets
        .iter()
        .map(|(facet, nodes)| {
            let rule = if nodes.len() == 1 {
                let x = mesh.nodes[nodes[0]].clone();
                ElementRule { nodes: nodes.clone(), points: vec![QuadPoint { x, w: 1.0, basis: vec![1.0] }], grads: vec![] }
            } else {
                let (p0, p1) = (&mesh.nodes[nodes[0]], &mesh.nodes[nodes[1]]);
                let len = ((p1[0] - p0[0]).powi(2) + (p1[1] - p0[1]).powi(2)).sqrt();
                let points = gauss_on(degree as usize / 2 + 1, 0.0, 1.0)
                    .into_iter()
                    .map(|(t, w)| QuadPoint {
                        x: vec![p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])],
                        w: w * len,
                        basis: vec![1.0 - t, t],
                    })
                    .collect();
                ElementRule { nodes: nodes.clone(), points, grads: vec![] }
            };
            (*facet, rule)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_counts_and_area() {
        let omega = BoxDomain::new(vec![(0.0, 2.0), (0.0, 1.0)]).unwrap();
        let mesh = Mesh::uniform(&omega, &[4, 3]).unwrap();
        assert_eq!(mesh.num_nodes(), 20);
        assert_eq!(mesh.elements.len(), 24);
        assert_eq!(mesh.facets.len(), 14);
        let rules = element_rules(&mesh, 3);
        let area: f64 = rules.iter().flat_map(|r| r.points.iter().map(|q| q.w)).sum();
        assert!((area - 2.0).abs() < 1e-13);
        // x^2 y over the rectangle is 8/3 * 1/2.
        let m: f64 = rules.iter().flat_map(|r| r.points.iter().map(|q| q.w * q.x[0] * q.x[0] * q.x[1])).sum();
        assert!((m - 4.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn interpolation_is_exact_for_affine_data() {
        let omega = BoxDomain::new(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let mesh = Mesh::uniform(&omega, &[3, 3]).unwrap();
        let nodal: Vec<f64> = mesh.nodes.iter().map(|p| 2.0 * p[0] - p[1] + 0.5).collect();
        for x in [[0.1, 0.7], [0.5, 0.5], [0.99, 0.01], [0.34, 0.2]] {
            let v = mesh.interpolate(&nodal, 1, &x)[0];
            assert!((v - (2.0 * x[0] - x[1] + 0.5)).abs() < 1e-12);
        }
    }
}
