//! Point observations on a uniform covering of the torus and the
//! piecewise-constant interpolant built from them.

use std::sync::Arc;

use num_complex::Complex64;

use super::field::{ScalarField, VectorField};
use super::grid::Grid;
use crate::error::{Error, Result};

/// `N = s²` nodes, exactly one inside each square of the `s × s` covering of
/// `(0, L)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    length: f64,
    per_side: usize,
    points: Vec<(f64, f64)>,
    /// Common fractional position inside every square, when the set has one.
    offset: Option<(f64, f64)>,
}

impl NodeSet {
    /// One node at the center of each square.
    pub fn centers(length: f64, per_side: usize) -> Result<Self> {
        Self::with_offset(length, per_side, (0.5, 0.5))
    }

    /// One node per square at the same relative position `offset ∈ [0,1)²`.
    pub fn with_offset(length: f64, per_side: usize, offset: (f64, f64)) -> Result<Self> {
        if per_side == 0 {
            return Err(Error::InvalidNodeSet("covering needs at least one square".into()));
        }
        let ok = |o: f64| (0.0..1.0).contains(&o);
        if !(ok(offset.0) && ok(offset.1)) {
            return Err(Error::InvalidNodeSet(format!(
                "offset {offset:?} is not inside the unit square"
            )));
        }
        let h = length / per_side as f64;
        let mut points = Vec::with_capacity(per_side * per_side);
        for j1 in 0..per_side {
            for j2 in 0..per_side {
                points.push(((j1 as f64 + offset.0) * h, (j2 as f64 + offset.1) * h));
            }
        }
        Ok(Self {
            length,
            per_side,
            points,
            offset: Some(offset),
        })
    }

    /// Arbitrary placement; checked to put exactly one node in each square.
    /// Points are reordered by square.
    pub fn from_points(length: f64, per_side: usize, points: &[(f64, f64)]) -> Result<Self> {
        if per_side == 0 || points.len() != per_side * per_side {
            return Err(Error::InvalidNodeSet(format!(
                "{} points cannot fill a {per_side}×{per_side} covering",
                points.len()
            )));
        }
        let h = length / per_side as f64;
        let mut slots: Vec<Option<(f64, f64)>> = vec![None; points.len()];
        for &(x1, x2) in points {
            if !(0.0..length).contains(&x1) || !(0.0..length).contains(&x2) {
                return Err(Error::InvalidNodeSet(format!(
                    "node ({x1}, {x2}) lies outside the domain"
                )));
            }
            let j1 = ((x1 / h) as usize).min(per_side - 1);
            let j2 = ((x2 / h) as usize).min(per_side - 1);
            let slot = &mut slots[j1 * per_side + j2];
            if slot.is_some() {
                return Err(Error::InvalidNodeSet(format!(
                    "square ({j1}, {j2}) holds more than one node"
                )));
            }
            *slot = Some((x1, x2));
        }
        Ok(Self {
            length,
            per_side,
            points: slots.into_iter().map(|p| p.expect("all slots filled")).collect(),
            offset: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn per_side(&self) -> usize {
        self.per_side
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }
}

/// Node set bound to a grid with its evaluation tables precomputed.
#[derive(Clone)]
pub struct NodalObserver {
    grid: Arc<Grid>,
    nodes: NodeSet,
    /// `e^{iκ k x}` tables for the tensor-product fast path.
    tables: Option<(Vec<Complex64>, Vec<Complex64>)>,
    square_of_point: Vec<usize>,
}

impl NodalObserver {
    pub fn new(grid: &Arc<Grid>, nodes: NodeSet) -> Result<Self> {
        if (nodes.length - grid.length()).abs() > 1e-12 * grid.length() {
            return Err(Error::GridMismatch("node set and grid"));
        }
        let n = grid.n();
        let s = nodes.per_side;
        let kappa = grid.base_wavenumber();
        let tables = nodes.offset.map(|(o1, o2)| {
            let h = grid.length() / s as f64;
            let build = |o: f64| {
                let mut t = Vec::with_capacity(s * n);
                for j in 0..s {
                    let x = (j as f64 + o) * h;
                    for i in 0..n {
                        let k = grid.wavevector(i * n).0;
                        t.push(Complex64::from_polar(1.0, kappa * k as f64 * x));
                    }
                }
                t
            };
            (build(o1), build(o2))
        });
        // grid point (i₁, i₂) lies in square (⌊i₁ s / n⌋, ⌊i₂ s / n⌋)
        let mut square_of_point = Vec::with_capacity(n * n);
        for i1 in 0..n {
            for i2 in 0..n {
                square_of_point.push((i1 * s / n) * s + i2 * s / n);
            }
        }
        Ok(Self {
            grid: Arc::clone(grid),
            nodes,
            tables,
            square_of_point,
        })
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Exact trigonometric-interpolant values `w(x^j)`.
    pub fn sample(&self, w: &ScalarField) -> Vec<f64> {
        let n = self.grid.n();
        let s = self.nodes.per_side;
        let c = w.coeffs();
        match &self.tables {
            Some((e1, e2)) => {
                let mut partial = vec![Complex64::new(0.0, 0.0); n * s];
                for i1 in 0..n {
                    let row = &c[i1 * n..(i1 + 1) * n];
                    if row.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                        continue;
                    }
                    for j2 in 0..s {
                        let e = &e2[j2 * n..(j2 + 1) * n];
                        partial[i1 * s + j2] = row.iter().zip(e).map(|(a, b)| a * b).sum();
                    }
                }
                let mut out = Vec::with_capacity(s * s);
                for j1 in 0..s {
                    let e = &e1[j1 * n..(j1 + 1) * n];
                    for j2 in 0..s {
                        let mut acc = 0.0;
                        for i1 in 0..n {
                            let p = partial[i1 * s + j2];
                            acc += (e[i1] * p).re;
                        }
                        out.push(acc);
                    }
                }
                out
            }
            None => {
                let kappa = self.grid.base_wavenumber();
                let live: Vec<(usize, Complex64)> = c
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| z.norm_sqr() > 0.0)
                    .map(|(i, z)| (i, *z))
                    .collect();
                self.nodes
                    .points
                    .iter()
                    .map(|&(x1, x2)| {
                        live.iter()
                            .map(|&(i, z)| {
                                let (k1, k2) = self.grid.wavevector(i);
                                let ph = kappa * (k1 as f64 * x1 + k2 as f64 * x2);
                                (z * Complex64::from_polar(1.0, ph)).re
                            })
                            .sum()
                    })
                    .collect()
            }
        }
    }

    /// Velocity samples as `(u₁, u₂)` per node.
    pub fn sample_vector(&self, u: &VectorField) -> Vec<(f64, f64)> {
        self.sample(&u.x).into_iter().zip(self.sample(&u.y)).collect()
    }

    /// Piecewise-constant field equal to `values[j]` on square `Q_j`, resolved
    /// on the grid, with its mean removed.
    pub fn interpolant(&self, values: &[f64]) -> Result<ScalarField> {
        if values.len() != self.nodes.len() {
            return Err(Error::InvalidNodeSet(format!(
                "expected {} nodal values, got {}",
                self.nodes.len(),
                values.len()
            )));
        }
        let samples: Vec<f64> = self.square_of_point.iter().map(|&j| values[j]).collect();
        Ok(ScalarField::from_samples_unchecked(&self.grid, &samples))
    }

    /// `I_h(w)` composed with sampling.
    pub fn interpolate(&self, w: &ScalarField) -> ScalarField {
        self.interpolant(&self.sample(w)).expect("sample count matches")
    }

    pub fn interpolate_vector(&self, u: &VectorField) -> VectorField {
        VectorField {
            x: self.interpolate(&u.x),
            y: self.interpolate(&u.y),
        }
    }

    /// `η(w) = max_j |w(x^j)|`.
    pub fn eta(&self, w: &ScalarField) -> f64 {
        self.sample(w).into_iter().map(f64::abs).fold(0.0, f64::max)
    }

    pub fn eta_vector(&self, u: &VectorField) -> f64 {
        self.sample_vector(u)
            .into_iter()
            .map(|(a, b)| (a * a + b * b).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Field values at the nodes.
pub fn nodal_sample(w: &ScalarField, nodes: &NodeSet) -> Result<Vec<f64>> {
    Ok(NodalObserver::new(w.grid(), nodes.clone())?.sample(w))
}

/// Piecewise-constant interpolant of nodal values.
pub fn nodal_interpolant(values: &[f64], nodes: &NodeSet, grid: &Arc<Grid>) -> Result<ScalarField> {
    NodalObserver::new(grid, nodes.clone())?.interpolant(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_grid, norm, NormKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_field() {
        let g = make_grid(16, 1.0).unwrap();
        let nodes = NodeSet::centers(1.0, 4).unwrap();
        let z = ScalarField::zeros(&g);
        assert!(nodal_sample(&z, &nodes).unwrap().iter().all(|&v| v == 0.0));
        let i = nodal_interpolant(&vec![0.0; 16], &nodes, &g).unwrap();
        assert_eq!(i.max_abs_coeff(), 0.0);
    }

    #[test]
    fn fast_path_matches_direct_evaluation() {
        let g = make_grid(16, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = ScalarField::random(&g, 5, &mut rng);
        let tensor = NodeSet::with_offset(1.5, 3, (0.3, 0.8)).unwrap();
        let scattered = NodeSet::from_points(1.5, 3, tensor.points()).unwrap();
        let a = nodal_sample(&w, &tensor).unwrap();
        let b = nodal_sample(&w, &scattered).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn center_nodes_on_grid_points_match_samples() {
        let g = make_grid(16, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = ScalarField::random(&g, 5, &mut rng);
        let s = w.to_physical().unwrap();
        // s = 8 squares of 2×2 cells: centers sit on odd grid points
        let obs = NodalObserver::new(&g, NodeSet::centers(1.0, 8).unwrap()).unwrap();
        let v = obs.sample(&w);
        for j1 in 0..8 {
            for j2 in 0..8 {
                let i = (2 * j1 + 1) * 16 + 2 * j2 + 1;
                assert!((v[j1 * 8 + j2] - s[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eta_is_bounded_by_sup_norm() {
        let g = make_grid(16, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = ScalarField::random(&g, 5, &mut rng);
        let obs = NodalObserver::new(&g, NodeSet::centers(1.0, 8).unwrap()).unwrap();
        // sup over a 4x refined grid bounds the sup over the nodes
        let sup = w.padded_samples().into_iter().map(f64::abs).fold(0.0, f64::max);
        assert!(obs.eta(&w) <= sup + 1e-12);
    }

    #[test]
    fn one_per_square_is_enforced() {
        assert!(NodeSet::from_points(1.0, 2, &[(0.1, 0.1), (0.2, 0.2), (0.6, 0.1), (0.6, 0.6)]).is_err());
        assert!(NodeSet::from_points(1.0, 2, &[(0.1, 0.1)]).is_err());
        assert!(NodeSet::from_points(1.0, 2, &[(0.1, 0.1), (0.1, 0.6), (0.6, 0.1), (0.6, 0.6)]).is_ok());
        assert!(NodeSet::with_offset(1.0, 2, (1.0, 0.0)).is_err());
    }

    #[test]
    fn interpolation_error_scales_with_node_spacing() {
        // |w - I_h w|² ≤ c |Δw|² / (λ₁ N) with c independent of N
        let g = make_grid(64, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut fitted = Vec::new();
        for s in [4usize, 8, 16, 32] {
            let obs = NodalObserver::new(&g, NodeSet::centers(1.0, s).unwrap()).unwrap();
            let mut c: f64 = 0.0;
            for _ in 0..5 {
                let w = ScalarField::random(&g, 6, &mut rng);
                let e = &w - &obs.interpolate(&w);
                let ratio = norm(&e, NormKind::L2).powi(2) * g.lambda1() * (s * s) as f64
                    / norm(&w, NormKind::DA).powi(2);
                c = c.max(ratio);
            }
            fitted.push(c);
        }
        let max = fitted.iter().cloned().fold(0.0, f64::max);
        let min = fitted.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 20.0, "fitted constants {fitted:?}");
    }
}
