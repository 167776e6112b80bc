//! Assembly and the field solution.

use serde::Serialize;

use super::solver::{solve_spd, SolveStats, SolverOptions, SymCsc};
use super::space::{bary_gradients, shape_gradients, shape_values, DofMap, QUAD3, QUAD7};
use super::{FemError, EPS0};
use crate::geometry::{BoundaryTag, Material, Point};
use crate::mesh::Mesh;

/// Boundary conditions of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryConditions {
    pub v_pad: f64,
    pub v_ground: f64,
}

/// Potentials and element energies of one electrostatic solve.
#[derive(Clone, Debug)]
pub struct FieldSolution<'m> {
    pub mesh: &'m Mesh,
    pub order: u8,
    pub dofs: DofMap,
    /// Potential per dof, V; the first `mesh.nodes.len()` are nodal values.
    pub phi: Vec<f64>,
    /// Stored energy per element, J/m.
    pub element_energy: Vec<f64>,
    pub bc: BoundaryConditions,
    pub stats: SolveStats,
}

fn quadrature(order: u8) -> &'static [([f64; 3], f64)] {
    if order == 1 {
        &QUAD3
    } else {
        &QUAD7
    }
}

/// Element stiffness for unit permittivity.
fn element_matrix(order: u8, p: [Point; 3]) -> ([[f64; 6]; 6], usize) {
    let (gl, area) = bary_gradients(p);
    let mut k = [[0.0; 6]; 6];
    let mut n = 3;
    for &(l, w) in quadrature(order) {
        let (g, m) = shape_gradients(order, &gl, l);
        n = m;
        for i in 0..m {
            for j in 0..m {
                k[i][j] += w * area * g[i].dot(g[j]);
            }
        }
    }
    (k, n)
}

/// Solves ∇·(ε∇φ) = 0 with φ = `v_pad` on pad edges, 0 on ground edges and
/// zero normal flux on the outer box, with P1 or P2 elements.
pub fn solve_potential(mesh: &Mesh, v_pad: f64, order: u8) -> Result<FieldSolution<'_>, FemError> {
    solve_potential_with(mesh, v_pad, order, &SolverOptions::default())
}

pub fn solve_potential_with<'m>(mesh: &'m Mesh, v_pad: f64, order: u8, opts: &SolverOptions) -> Result<FieldSolution<'m>, FemError> {
    if order != 1 && order != 2 {
        return Err(FemError::InvalidOrder(order));
    }
    if v_pad == 0.0 || !v_pad.is_finite() {
        return Err(FemError::ZeroVoltage);
    }
    let n_nodes = mesh.nodes.len();
    let dofs = DofMap::new(mesh, order);
    // Dirichlet values
    let mut fixed: Vec<Option<f64>> = vec![None; dofs.n_dofs];
    for e in &mesh.boundary_edges {
        let v = match e.tag {
            BoundaryTag::ElectrodePad => v_pad,
            BoundaryTag::ElectrodeGround => 0.0,
            BoundaryTag::Outer => continue,
        };
        let [a, b] = e.nodes;
        fixed[a as usize] = Some(v);
        fixed[b as usize] = Some(v);
        if order == 2 {
            if let Some(d) = dofs.edge_dof(a, b, n_nodes) {
                fixed[d as usize] = Some(v);
            }
        }
    }
    if fixed.iter().all(Option::is_none) {
        return Err(FemError::SingularSystem("no electrode edges carry a Dirichlet condition".into()));
    }
    let mut free_index = vec![u32::MAX; dofs.n_dofs];
    let mut n_free = 0usize;
    for (d, f) in fixed.iter().enumerate() {
        if f.is_none() {
            free_index[d] = n_free as u32;
            n_free += 1;
        }
    }
    let used: Vec<bool> = {
        let mut u = vec![false; dofs.n_dofs];
        for e in &dofs.elements {
            for &d in &e[..dofs.local()] {
                u[d as usize] = true;
            }
        }
        u
    };
    if (0..dofs.n_dofs).any(|d| !used[d] && fixed[d].is_none()) {
        return Err(FemError::SingularSystem("mesh has nodes outside every element".into()));
    }

    let mut a = pattern(&dofs, &free_index, n_free);
    let mut rhs = vec![0.0; n_free];
    let nl = dofs.local();
    for (t, e) in dofs.elements.iter().enumerate() {
        let (k, _) = element_matrix(order, mesh.corners(t));
        let eps = mesh.eps(t);
        for i in 0..nl {
            let fi = free_index[e[i] as usize];
            if fi == u32::MAX {
                continue;
            }
            for j in 0..nl {
                let kij = eps * k[i][j];
                match fixed[e[j] as usize] {
                    Some(v) => rhs[fi as usize] -= kij * v,
                    None => {
                        let fj = free_index[e[j] as usize];
                        if fj <= fi {
                            a.add(fi as usize, fj as usize, kij);
                        }
                    }
                }
            }
        }
    }
    let (x, stats) = solve_spd(&a, &rhs, opts)?;
    let phi: Vec<f64> = (0..dofs.n_dofs).map(|d| fixed[d].unwrap_or_else(|| x[free_index[d] as usize])).collect();
    let mut sol = FieldSolution {
        mesh,
        order,
        dofs,
        phi,
        element_energy: Vec::new(),
        bc: BoundaryConditions { v_pad, v_ground: 0.0 },
        stats,
    };
    sol.element_energy = (0..mesh.triangles.len()).map(|t| sol.compute_element_energy(t)).collect();
    Ok(sol)
}

/// Lower-triangular sparsity of the free-free block.
fn pattern(dofs: &DofMap, free_index: &[u32], n_free: usize) -> SymCsc {
    let nl = dofs.local();
    // dof → elements incidence
    let mut start = vec![0usize; dofs.n_dofs + 1];
    for e in &dofs.elements {
        for &d in &e[..nl] {
            start[d as usize + 1] += 1;
        }
    }
    for i in 0..dofs.n_dofs {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut inc = vec![0u32; start[dofs.n_dofs]];
    for (t, e) in dofs.elements.iter().enumerate() {
        for &d in &e[..nl] {
            inc[fill[d as usize]] = t as u32;
            fill[d as usize] += 1;
        }
    }
    let mut col_of: Vec<usize> = vec![0; n_free];
    for (d, &f) in free_index.iter().enumerate() {
        if f != u32::MAX {
            col_of[f as usize] = d;
        }
    }
    let mut marker = vec![usize::MAX; n_free];
    let mut col_ptr = Vec::with_capacity(n_free + 1);
    col_ptr.push(0);
    let mut row_idx = Vec::new();
    for c in 0..n_free {
        let d = col_of[c];
        let begin = row_idx.len();
        for &t in &inc[start[d]..start[d + 1]] {
            for &o in &dofs.elements[t as usize][..nl] {
                let r = free_index[o as usize];
                if r != u32::MAX && r as usize >= c && marker[r as usize] != c {
                    marker[r as usize] = c;
                    row_idx.push(r as usize);
                }
            }
        }
        row_idx[begin..].sort_unstable();
        col_ptr.push(row_idx.len());
    }
    let nnz = row_idx.len();
    SymCsc { n: n_free, col_ptr, row_idx, values: vec![0.0; nnz] }
}

impl FieldSolution<'_> {
    fn local_phi(&self, t: usize) -> [f64; 6] {
        let e = &self.dofs.elements[t];
        let mut v = [0.0; 6];
        for i in 0..self.dofs.local() {
            v[i] = self.phi[e[i] as usize];
        }
        v
    }

    /// ∇φ in element `t` at barycentric point `l`, V/nm.
    pub fn gradient(&self, t: usize, l: [f64; 3]) -> Point {
        let (gl, _) = bary_gradients(self.mesh.corners(t));
        let (g, n) = shape_gradients(self.order, &gl, l);
        let v = self.local_phi(t);
        (0..n).fold(Point::new(0.0, 0.0), |acc, i| acc + g[i] * v[i])
    }

    /// φ in element `t` at barycentric point `l`, V.
    pub fn value(&self, t: usize, l: [f64; 3]) -> f64 {
        let (s, n) = shape_values(self.order, l);
        let v = self.local_phi(t);
        (0..n).map(|i| s[i] * v[i]).sum()
    }

    fn compute_element_energy(&self, t: usize) -> f64 {
        let (_, area) = bary_gradients(self.mesh.corners(t));
        let integral: f64 = quadrature(self.order).iter().map(|&(l, w)| w * self.gradient(t, l).norm2()).sum::<f64>() * area;
        0.5 * EPS0 * self.mesh.eps(t) * integral
    }

    /// Element energy over element area, J/m³.
    pub fn energy_density(&self, t: usize) -> f64 {
        self.element_energy[t] / (self.mesh.area(t) * 1e-18)
    }

    /// Total stored energy, J/m.
    pub fn total_energy(&self) -> f64 {
        self.element_energy.iter().sum()
    }

    /// Energy stored in `material`, J/m; zero when it is absent.
    pub fn material_energy(&self, material: Material) -> f64 {
        (0..self.element_energy.len()).filter(|&t| self.mesh.material(t) == material).map(|t| self.element_energy[t]).sum()
    }

    /// Energy stored in the material named `tag`, J/m.
    pub fn region_energy(&self, tag: &str) -> Result<f64, FemError> {
        let m: Material = tag.parse().map_err(|_| FemError::UnknownMaterial(tag.to_string()))?;
        Ok(self.material_energy(m))
    }

    pub fn nodal_potentials(&self) -> &[f64] {
        &self.phi[..self.mesh.nodes.len()]
    }

    /// Area-weighted nodal average of the element gradients.
    pub fn recovered_gradients(&self) -> Vec<Point> {
        let mesh = self.mesh;
        let mut g = vec![Point::new(0.0, 0.0); mesh.nodes.len()];
        let mut w = vec![0.0; mesh.nodes.len()];
        for t in 0..mesh.triangles.len() {
            let a = mesh.area(t);
            for (i, &v) in mesh.triangles[t].iter().enumerate() {
                let mut l = [0.0; 3];
                l[i] = 1.0;
                g[v as usize] = g[v as usize] + self.gradient(t, l) * a;
                w[v as usize] += a;
            }
        }
        g.iter().zip(&w).map(|(&g, &w)| g * (1.0 / w)).collect()
    }

    /// Legacy-VTK export with φ, energy density and region id.
    pub fn to_vtk(&self) -> String {
        let density: Vec<f64> = (0..self.mesh.triangles.len()).map(|t| self.energy_density(t)).collect();
        self.mesh.to_vtk(&[("phi", self.nodal_potentials())], &[("energy_density", &density)])
    }
}

/// Barycentric coordinates of `p` in triangle `c`.
pub(crate) fn barycentric(c: [Point; 3], p: Point) -> [f64; 3] {
    let d = (c[1] - c[0]).cross(c[2] - c[0]);
    let l1 = (p - c[0]).cross(c[2] - c[0]) / d;
    let l2 = (c[1] - c[0]).cross(p - c[0]) / d;
    [1.0 - l1 - l2, l1, l2]
}

/// Walks from `start` to the element containing `p`; `None` when the walk
/// leaves the mesh.
pub(crate) fn locate(mesh: &Mesh, nbr: &[[u32; 3]], start: usize, p: Point) -> Option<usize> {
    let mut t = start;
    for _ in 0..mesh.triangles.len() + 4 {
        let l = barycentric(mesh.corners(t), p);
        let (i, &m) = l.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        if m >= -1e-12 {
            return Some(t);
        }
        let u = nbr[t][i];
        if u == u32::MAX {
            return None;
        }
        t = u as usize;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p1_and_p2_element_matrices_have_zero_row_sums() {
        let p = [Point::new(0.0, 0.0), Point::new(3.0, 0.5), Point::new(1.0, 2.0)];
        for order in [1, 2] {
            let (k, n) = element_matrix(order, p);
            for row in k.iter().take(n) {
                assert!(row[..n].iter().sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn barycentric_round_trip() {
        let c = [Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(0.0, 1.0)];
        let l = barycentric(c, Point::new(0.5, 0.25));
        assert!((l[0] - 0.5).abs() < 1e-15 && (l[1] - 0.25).abs() < 1e-15 && (l[2] - 0.25).abs() < 1e-15);
    }
}
