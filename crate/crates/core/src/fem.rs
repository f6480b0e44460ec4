//! Piecewise-linear finite elements on the unit interval and the unit square.
//!
//! Only what the reduced-order experiments need: mass and stiffness matrices on
//! the free nodes of a uniform mesh, the discrete Poincaré constant and a
//! Crank–Nicolson integrator for the semidiscrete heat equation.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, numeric, Error, Result};
use crate::grids::{TimeGrid, Trajectory};
use crate::space::{GramKind, HilbertSpace};

/// Default Crank–Nicolson substeps per snapshot interval.
pub const DEFAULT_SUBSTEPS: usize = 32;

/// Residual tolerance of the smallest generalized eigenpair.
pub const EIGEN_TOL: f64 = 1e-10;

const MAX_INVERSE_ITERATIONS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshKind {
    Interval,
    Square,
}

/// Which boundary nodes carry a homogeneous Dirichlet condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dirichlet {
    /// The whole boundary.
    All,
    /// Right endpoint of the interval, or the sides `x = 1` and `y = 1` of
    /// the square. The remaining boundary is natural.
    Mixed,
}

/// Assembled P1 problem on the free nodes of a uniform mesh.
#[derive(Clone, Debug)]
pub struct FeProblem {
    mesh: MeshKind,
    cells: usize,
    dirichlet: Dirichlet,
    nu: f64,
    points: Vec<[f64; 2]>,
    mass: HilbertSpace,
    stiffness: HilbertSpace,
}

/// Builds mass and stiffness matrices for `cells` cells per side.
pub fn assemble_fe(
    mesh: MeshKind,
    cells: usize,
    dirichlet: Dirichlet,
    nu: f64,
) -> Result<FeProblem> {
    if cells < 2 {
        return invalid(format!("need at least 2 cells per side, got {cells}"));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return invalid(format!("diffusivity must be positive, got {nu}"));
    }
    let (coords, elements, ids) = match mesh {
        MeshKind::Interval => interval_mesh(cells, dirichlet),
        MeshKind::Square => square_mesh(cells, dirichlet),
    };
    let n = ids.iter().filter(|i| i.is_some()).count();
    let mut mass = DMatrix::zeros(n, n);
    let mut stiff = DMatrix::zeros(n, n);
    for el in &elements {
        let (m_loc, k_loc) = match mesh {
            MeshKind::Interval => interval_local(&coords, el),
            MeshKind::Square => triangle_local(&coords, el),
        };
        for (a, &ga) in el.iter().enumerate() {
            let Some(ia) = ids[ga] else { continue };
            for (b, &gb) in el.iter().enumerate() {
                let Some(ib) = ids[gb] else { continue };
                mass[(ia, ib)] += m_loc[(a, b)];
                stiff[(ia, ib)] += k_loc[(a, b)];
            }
        }
    }
    let mut points = vec![[0.0; 2]; n];
    for (g, id) in ids.iter().enumerate() {
        if let Some(i) = id {
            points[*i] = coords[g];
        }
    }
    symmetrize(&mut mass);
    symmetrize(&mut stiff);
    Ok(FeProblem {
        mesh,
        cells,
        dirichlet,
        nu,
        points,
        mass: HilbertSpace::with_gram(GramKind::Mass, mass)?,
        stiffness: HilbertSpace::with_gram(GramKind::Stiffness, stiff)?,
    })
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

type Mesh = (Vec<[f64; 2]>, Vec<Vec<usize>>, Vec<Option<usize>>);

fn number_free(fixed: &[bool]) -> Vec<Option<usize>> {
    let mut next = 0;
    fixed
        .iter()
        .map(|&f| {
            if f {
                None
            } else {
                next += 1;
                Some(next - 1)
            }
        })
        .collect()
}

fn interval_mesh(cells: usize, dirichlet: Dirichlet) -> Mesh {
    let h = 1.0 / cells as f64;
    let coords: Vec<[f64; 2]> = (0..=cells).map(|i| [i as f64 * h, 0.0]).collect();
    let elements = (0..cells).map(|i| vec![i, i + 1]).collect();
    let fixed: Vec<bool> = (0..=cells)
        .map(|i| match dirichlet {
            Dirichlet::All => i == 0 || i == cells,
            Dirichlet::Mixed => i == cells,
        })
        .collect();
    (coords, elements, number_free(&fixed))
}

fn square_mesh(cells: usize, dirichlet: Dirichlet) -> Mesh {
    let h = 1.0 / cells as f64;
    let side = cells + 1;
    let node = |i: usize, j: usize| j * side + i;
    let mut coords = Vec::with_capacity(side * side);
    let mut fixed = Vec::with_capacity(side * side);
    for j in 0..side {
        for i in 0..side {
            coords.push([i as f64 * h, j as f64 * h]);
            fixed.push(match dirichlet {
                Dirichlet::All => i == 0 || j == 0 || i == cells || j == cells,
                Dirichlet::Mixed => i == cells || j == cells,
            });
        }
    }
    let mut elements = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let (sw, se, ne, nw) = (
                node(i, j),
                node(i + 1, j),
                node(i + 1, j + 1),
                node(i, j + 1),
            );
            elements.push(vec![sw, se, ne]);
            elements.push(vec![sw, ne, nw]);
        }
    }
    (coords, elements, number_free(&fixed))
}

fn interval_local(coords: &[[f64; 2]], el: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let h = coords[el[1]][0] - coords[el[0]][0];
    let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]) * (h / 6.0);
    let k = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]) / h;
    (m, k)
}

fn triangle_local(coords: &[[f64; 2]], el: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let [x0, y0] = coords[el[0]];
    let [x1, y1] = coords[el[1]];
    let [x2, y2] = coords[el[2]];
    let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    let area = 0.5 * det.abs();
    // Gradients of the barycentric coordinates.
    let g = [
        [(y1 - y2) / det, (x2 - x1) / det],
        [(y2 - y0) / det, (x0 - x2) / det],
        [(y0 - y1) / det, (x1 - x0) / det],
    ];
    let k = DMatrix::from_fn(3, 3, |a, b| area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
    let m = DMatrix::from_fn(3, 3, |a, b| if a == b { area / 6.0 } else { area / 12.0 });
    (m, k)
}

impl FeProblem {
    pub fn mesh(&self) -> MeshKind {
        self.mesh
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dirichlet(&self) -> Dirichlet {
        self.dirichlet
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Number of free nodes.
    pub fn dofs(&self) -> usize {
        self.points.len()
    }

    /// Coordinates of the free nodes, `y = 0` on the interval.
    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        self.mass.gram().expect("mass space stores its gram")
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        self.stiffness
            .gram()
            .expect("stiffness space stores its gram")
    }

    /// The discrete L² space.
    pub fn mass_space(&self) -> &HilbertSpace {
        &self.mass
    }

    /// The discrete H¹₀ space.
    pub fn stiffness_space(&self) -> &HilbertSpace {
        &self.stiffness
    }

    /// Space for a Gram kind; identity uses the free-node count.
    pub fn space(&self, kind: GramKind) -> HilbertSpace {
        match kind {
            GramKind::Identity => HilbertSpace::identity(self.dofs()),
            GramKind::Mass => self.mass.clone(),
            GramKind::Stiffness => self.stiffness.clone(),
        }
    }

    /// Nodal interpolant of `f(x, y)`.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> DVector<f64> {
        DVector::from_iterator(self.dofs(), self.points.iter().map(|p| f(p[0], p[1])))
    }

    /// Load vector `ν K u` that keeps `u` stationary.
    pub fn diffusion(&self, u: &DVector<f64>) -> DVector<f64> {
        self.stiffness() * u * self.nu
    }
}

/// Smallest eigenpair of `K v = λ M v`, with `v` normalized in the mass norm.
pub fn smallest_eigenpair(p: &FeProblem) -> Result<(f64, DVector<f64>)> {
    let k = p.stiffness();
    let m = p.mass();
    let chol = Cholesky::new(k.clone())
        .ok_or_else(|| Error::NumericFailure("stiffness is not positive definite".into()))?;
    let mut v = DVector::from_element(p.dofs(), 1.0);
    let mut lambda = f64::NAN;
    for _ in 0..MAX_INVERSE_ITERATIONS {
        let mv = m * &v;
        v = chol.solve(&mv);
        let mv = m * &v;
        let scale = v.dot(&mv).sqrt();
        v /= scale;
        let mv = mv / scale;
        let kv = k * &v;
        lambda = v.dot(&kv);
        let res = (&kv - &mv * lambda).norm();
        if res <= EIGEN_TOL * lambda * mv.norm() {
            return Ok((lambda, v));
        }
    }
    numeric(format!(
        "inverse iteration did not reach tolerance {EIGEN_TOL} (last λ = {lambda})"
    ))
}

/// `C_P = λ_min^{−1/2}` for the generalized problem `K v = λ M v`.
pub fn poincare_constant(p: &FeProblem) -> Result<f64> {
    let (lambda, _) = smallest_eigenpair(p)?;
    Ok(lambda.powf(-0.5))
}

/// Integrates `M u' + ν K u = F(t)` with Crank–Nicolson, `substeps` steps per
/// snapshot interval, and returns the snapshots in the mass space.
///
/// `load(t)` returns the load vector `((f(t), φ_i))_i`.
pub fn heat_semidiscrete<F>(
    p: &FeProblem,
    load: F,
    u0: &DVector<f64>,
    grid: &TimeGrid,
    substeps: usize,
) -> Result<Trajectory>
where
    F: Fn(f64) -> DVector<f64>,
{
    if substeps == 0 {
        return invalid("substeps must be at least 1");
    }
    p.mass.check_dim(u0.len(), "initial data")?;
    let tau = grid.step() / substeps as f64;
    let m = p.mass();
    let k = p.stiffness();
    let lhs = m + k * (0.5 * tau * p.nu);
    let rhs_op = m - k * (0.5 * tau * p.nu);
    let chol: Cholesky<f64, Dyn> = Cholesky::new(lhs)
        .ok_or_else(|| Error::NumericFailure("Crank–Nicolson matrix is not SPD".into()))?;
    let mut values = DMatrix::zeros(p.dofs(), grid.intervals() + 1);
    values.column_mut(0).copy_from(u0);
    let mut u = u0.clone();
    let mut t = 0.0;
    let mut f_prev = load(t);
    p.mass.check_dim(f_prev.len(), "load")?;
    for n in 1..grid.intervals() + 1 {
        let t0 = grid.node(n - 1);
        for s in 1..=substeps {
            t = if s == substeps {
                grid.node(n)
            } else {
                t0 + s as f64 * tau
            };
            let f_next = load(t);
            let rhs = &rhs_op * &u + (&f_prev + &f_next) * (0.5 * tau);
            u = chol.solve(&rhs);
            f_prev = f_next;
        }
        if !u.iter().all(|x| x.is_finite()) {
            return numeric(format!("non-finite heat solution at snapshot {n}"));
        }
        values.column_mut(n).copy_from(&u);
    }
    Trajectory::new(*grid, p.mass.clone(), values, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn interval_matrices_match_textbook() {
        let p = assemble_fe(MeshKind::Interval, 4, Dirichlet::All, 1.0).unwrap();
        assert_eq!(p.dofs(), 3);
        let h = 0.25;
        let expected =
            DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]) / h;
        assert!((p.stiffness() - expected).amax() < 1e-12);
        let mexp = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 4.0, 1.0, 0.0, 1.0, 4.0])
            * (h / 6.0);
        assert!((p.mass() - mexp).amax() < 1e-14);
    }

    #[test]
    fn mass_is_a_partition_of_unity() {
        for (mesh, cells) in [
            (MeshKind::Interval, 4),
            (MeshKind::Interval, 9),
            (MeshKind::Square, 5),
        ] {
            // Without Dirichlet nodes the mass entries sum to the domain size.
            let p = assemble_fe(mesh, cells, Dirichlet::Mixed, 1.0).unwrap();
            let (coords, elements, _) = match mesh {
                MeshKind::Interval => interval_mesh(cells, Dirichlet::Mixed),
                MeshKind::Square => square_mesh(cells, Dirichlet::Mixed),
            };
            let total: f64 = elements
                .iter()
                .map(|el| match mesh {
                    MeshKind::Interval => interval_local(&coords, el).0.sum(),
                    MeshKind::Square => triangle_local(&coords, el).0.sum(),
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(p.mass().sum() < total);
        }
    }

    #[test]
    fn free_node_counts() {
        assert_eq!(
            assemble_fe(MeshKind::Square, 4, Dirichlet::All, 1.0)
                .unwrap()
                .dofs(),
            9
        );
        assert_eq!(
            assemble_fe(MeshKind::Square, 4, Dirichlet::Mixed, 1.0)
                .unwrap()
                .dofs(),
            16
        );
        assert_eq!(
            assemble_fe(MeshKind::Interval, 4, Dirichlet::Mixed, 1.0)
                .unwrap()
                .dofs(),
            4
        );
        assert!(assemble_fe(MeshKind::Interval, 1, Dirichlet::All, 1.0).is_err());
        assert!(assemble_fe(MeshKind::Interval, 4, Dirichlet::All, 0.0).is_err());
    }

    #[test]
    fn square_stiffness_is_five_point_stencil() {
        let p = assemble_fe(MeshKind::Square, 4, Dirichlet::All, 1.0).unwrap();
        // Centre node of the 3x3 interior grid.
        let k = p.stiffness();
        assert!((k[(4, 4)] - 4.0).abs() < 1e-12);
        for nb in [1, 3, 5, 7] {
            assert!((k[(4, nb)] + 1.0).abs() < 1e-12);
        }
        for diag in [0, 2, 6, 8] {
            assert!(k[(4, diag)].abs() < 1e-12);
        }
    }

    #[test]
    fn poincare_constants() {
        let p = assemble_fe(MeshKind::Interval, 128, Dirichlet::All, 1.0).unwrap();
        let cp = poincare_constant(&p).unwrap();
        assert!((cp * PI - 1.0).abs() < 0.01);
        let p = assemble_fe(MeshKind::Interval, 64, Dirichlet::Mixed, 1.0).unwrap();
        assert!((poincare_constant(&p).unwrap() * PI / 2.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn poincare_error_decreases_under_refinement() {
        let exact = 1.0 / PI;
        let errs: Vec<f64> = [8, 16, 32, 64]
            .iter()
            .map(|&c| {
                let p = assemble_fe(MeshKind::Interval, c, Dirichlet::All, 1.0).unwrap();
                (poincare_constant(&p).unwrap() - exact).abs()
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn eigenpair_matches_dense_solver() {
        let p = assemble_fe(MeshKind::Square, 6, Dirichlet::Mixed, 1.0).unwrap();
        let (lambda, _) = smallest_eigenpair(&p).unwrap();
        let l = Cholesky::new(p.mass().clone()).unwrap().l();
        let linv = l.clone().try_inverse().unwrap();
        let a = &linv * p.stiffness() * linv.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let eig = a.symmetric_eigen();
        let min = eig
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!((lambda - min).abs() < 1e-8 * min);
    }

    #[test]
    fn zero_data_stays_zero() {
        let p = assemble_fe(MeshKind::Interval, 8, Dirichlet::All, 1.0).unwrap();
        let grid = TimeGrid::new(1.0, 5).unwrap();
        let n = p.dofs();
        let traj =
            heat_semidiscrete(&p, |_| DVector::zeros(n), &DVector::zeros(n), &grid, 4).unwrap();
        assert_eq!(traj.values().amax(), 0.0);
    }

    #[test]
    fn first_mode_decays_exponentially() {
        let nu = 0.7;
        let p = assemble_fe(MeshKind::Interval, 16, Dirichlet::All, nu).unwrap();
        let (lambda, v) = smallest_eigenpair(&p).unwrap();
        let grid = TimeGrid::new(0.1, 10).unwrap();
        let n = p.dofs();
        let traj = heat_semidiscrete(&p, |_| DVector::zeros(n), &v, &grid, 64).unwrap();
        for (i, t) in grid.nodes().into_iter().enumerate() {
            let exact = &v * (-nu * lambda * t).exp();
            let err = (traj.snapshot(i) - &exact).norm() / exact.norm();
            assert!(err <= 1e-6, "n = {i}: {err}");
        }
    }

    #[test]
    fn linear_in_time_solution_is_reproduced() {
        let p = assemble_fe(MeshKind::Interval, 16, Dirichlet::All, 1.0).unwrap();
        let s = p.interpolate(|x, _| (PI * x).sin());
        let ms = p.mass() * &s;
        let ks = p.diffusion(&s);
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let load = |t: f64| &ms + &ks * (1.0 + t);
        let traj = heat_semidiscrete(&p, load, &s, &grid, 8).unwrap();
        let target = &s * 2.0;
        assert!((traj.snapshot(4) - target).amax() < 1e-12);
    }

    #[test]
    fn substeps_must_be_positive() {
        let p = assemble_fe(MeshKind::Interval, 4, Dirichlet::All, 1.0).unwrap();
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let z = DVector::zeros(3);
        assert!(heat_semidiscrete(&p, |_| DVector::zeros(3), &z, &grid, 0).is_err());
    }
}
