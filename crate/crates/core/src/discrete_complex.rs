//! Staggered grad/curl/div complex on the unit cube with a conducting sub-region.
//!
//! `n` cells per axis, `h = 1/n`. Nodal and edge unknowns carry the tangential
//! (Dirichlet) boundary condition: only interior nodes and edges not lying on
//! the boundary are degrees of freedom. Faces and cells are unconstrained.
//! All entity measures are uniform, so operators are integer incidence matrices
//! divided by `h` and Euclidean transposes are the L² adjoints.
//!
//! Entities are ordered by their base node `(k, j, i)` with the direction
//! fastest, which keeps elimination on the incidence matrices banded.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_rank::{rank, IntMatrix};
use crate::scalar::{ModPrime, Real};
use crate::subspaces::{distance, intersect, kernel, Subspace};

/// Half-open range of cell indices `lo ≤ idx < hi` on each axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl CellBox {
    pub fn new(lo: [usize; 3], hi: [usize; 3]) -> Self {
        Self { lo, hi }
    }

    /// Central box of `w` cells per axis on an `n`-mesh.
    pub fn centered(n: usize, w: usize) -> Self {
        let lo = n.saturating_sub(w) / 2;
        Self { lo: [lo; 3], hi: [lo + w; 3] }
    }

    pub fn contains(&self, c: [usize; 3]) -> bool {
        (0..3).all(|a| self.lo[a] <= c[a] && c[a] < self.hi[a])
    }
}

/// Edge or face: direction `dir` and base node `base`.
///
/// An edge joins `base` and `base + e_dir`. A face has normal `dir` and spans
/// the other two axes from `base`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Entity {
    pub dir: usize,
    pub base: [usize; 3],
}

fn unit(dir: usize) -> [usize; 3] {
    let mut u = [0; 3];
    u[dir] = 1;
    u
}

fn add(a: [usize; 3], b: [usize; 3]) -> [usize; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[derive(Clone, Debug)]
pub struct StaggeredMesh {
    n: usize,
    boxes: Vec<CellBox>,
    cell_conducting: Vec<bool>,
    /// Grid node `(i,j,k)` → interior node id.
    node_id: Vec<Option<usize>>,
    interior_nodes: Vec<[usize; 3]>,
    edges: Vec<Entity>,
    edge_interior_id: Vec<Option<usize>>,
    interior_edges: Vec<usize>,
    faces: Vec<Entity>,
    edge_conducting: Vec<bool>,
    conducting_edges: Vec<usize>,
    node_cluster: Vec<Option<usize>>,
    clusters: usize,
    cell_components: usize,
}

impl StaggeredMesh {
    /// Builds index maps and conductivity masks. Every conducting box must keep
    /// at least one cell of margin to the boundary.
    pub fn new(n: usize, boxes: &[CellBox]) -> Result<Self> {
        if n < 2 {
            return Err(Error::Argument("mesh needs at least 2 cells per axis".into()));
        }
        for b in boxes {
            if (0..3).any(|a| b.lo[a] >= b.hi[a]) {
                return Err(Error::Argument(format!("empty conducting box {b:?}")));
            }
            if (0..3).any(|a| b.lo[a] < 1 || b.hi[a] + 1 > n) {
                return Err(Error::Hypothesis(format!(
                    "conductor closure is not strictly inside the domain: box {b:?} on an n = {n} mesh"
                )));
            }
        }
        let np = n + 1;
        let nid = |p: [usize; 3]| (p[2] * np + p[1]) * np + p[0];
        let cid = |c: [usize; 3]| (c[2] * n + c[1]) * n + c[0];
        let mut cell_conducting = vec![false; n * n * n];
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    cell_conducting[cid([i, j, k])] = boxes.iter().any(|b| b.contains([i, j, k]));
                }
            }
        }
        let interior = |p: [usize; 3]| p.iter().all(|&x| x >= 1 && x < n);
        let mut node_id = vec![None; np * np * np];
        let mut interior_nodes = Vec::new();
        let mut edges = Vec::new();
        let mut edge_interior_id = Vec::new();
        let mut interior_edges = Vec::new();
        let mut faces = Vec::new();
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    let p = [i, j, k];
                    if interior(p) {
                        node_id[nid(p)] = Some(interior_nodes.len());
                        interior_nodes.push(p);
                    }
                    for dir in 0..3 {
                        if p[dir] < n {
                            // interior iff both transverse coordinates are interior
                            let inner = (0..3).filter(|&a| a != dir).all(|a| p[a] >= 1 && p[a] < n);
                            edge_interior_id.push(if inner {
                                interior_edges.push(edges.len());
                                Some(interior_edges.len() - 1)
                            } else {
                                None
                            });
                            edges.push(Entity { dir, base: p });
                        }
                        if (0..3).filter(|&a| a != dir).all(|a| p[a] < n) {
                            faces.push(Entity { dir, base: p });
                        }
                    }
                }
            }
        }
        let mut mesh = Self {
            n,
            boxes: boxes.to_vec(),
            cell_conducting,
            node_id,
            interior_nodes,
            edges,
            edge_interior_id,
            interior_edges,
            faces,
            edge_conducting: Vec::new(),
            conducting_edges: Vec::new(),
            node_cluster: Vec::new(),
            clusters: 0,
            cell_components: 0,
        };
        mesh.classify_conductor();
        Ok(mesh)
    }

    fn classify_conductor(&mut self) {
        let mut edge_conducting = vec![false; self.interior_edges.len()];
        let mut conducting_edges = Vec::new();
        for (id, &e) in self.interior_edges.iter().enumerate() {
            let cells = self.edge_cells(self.edges[e]);
            if cells.len() == 4 && cells.iter().all(|&c| self.cell_is_conducting(c)) {
                edge_conducting[id] = true;
                conducting_edges.push(id);
            }
        }
        // clusters: connected components of the graph of conducting edges
        let mut parent: Vec<usize> = (0..self.interior_nodes.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut touched = vec![false; self.interior_nodes.len()];
        for &id in &conducting_edges {
            let (a, b) = self.edge_endpoints(self.edges[self.interior_edges[id]]);
            let (a, b) = (self.node_index(a).unwrap(), self.node_index(b).unwrap());
            touched[a] = true;
            touched[b] = true;
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        let mut label = std::collections::HashMap::new();
        let mut node_cluster = vec![None; self.interior_nodes.len()];
        for v in 0..self.interior_nodes.len() {
            if touched[v] {
                let r = find(&mut parent, v);
                let next = label.len();
                node_cluster[v] = Some(*label.entry(r).or_insert(next));
            }
        }
        self.clusters = label.len();
        self.node_cluster = node_cluster;
        self.edge_conducting = edge_conducting;
        self.conducting_edges = conducting_edges;
        self.cell_components = self.count_cell_components();
    }

    /// Components of the conducting cells under vertex adjacency, so that
    /// cells whose closures touch belong to one component.
    fn count_cell_components(&self) -> usize {
        let n = self.n;
        let mut seen = vec![false; n * n * n];
        let mut count = 0;
        for start in 0..n * n * n {
            if !self.cell_conducting[start] || seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(c) = stack.pop() {
                let (i, j, k) = (c % n, (c / n) % n, c / (n * n));
                for dk in -1i64..=1 {
                    for dj in -1i64..=1 {
                        for di in -1i64..=1 {
                            let (a, b, cc) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                            if [a, b, cc].iter().any(|&x| x < 0 || x >= n as i64) {
                                continue;
                            }
                            let q = (cc as usize * n + b as usize) * n + a as usize;
                            if self.cell_conducting[q] && !seen[q] {
                                seen[q] = true;
                                stack.push(q);
                            }
                        }
                    }
                }
            }
        }
        count
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn boxes(&self) -> &[CellBox] {
        &self.boxes
    }

    pub fn cell_is_conducting(&self, c: [usize; 3]) -> bool {
        self.cell_conducting[(c[2] * self.n + c[1]) * self.n + c[0]]
    }

    pub fn node_index(&self, p: [usize; 3]) -> Option<usize> {
        let np = self.n + 1;
        self.node_id[(p[2] * np + p[1]) * np + p[0]]
    }

    pub fn num_interior_nodes(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_interior_edges(&self) -> usize {
        self.interior_edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_cells(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn interior_node(&self, id: usize) -> [usize; 3] {
        self.interior_nodes[id]
    }

    /// Interior edge `id` as an entity.
    pub fn interior_edge(&self, id: usize) -> Entity {
        self.edges[self.interior_edges[id]]
    }

    pub fn face(&self, id: usize) -> Entity {
        self.faces[id]
    }

    fn edge_endpoints(&self, e: Entity) -> ([usize; 3], [usize; 3]) {
        (e.base, add(e.base, unit(e.dir)))
    }

    /// Cells adjacent to an edge (up to four).
    fn edge_cells(&self, e: Entity) -> Vec<[usize; 3]> {
        let others: Vec<usize> = (0..3).filter(|&a| a != e.dir).collect();
        let mut out = Vec::new();
        for da in [0usize, 1] {
            for db in [0usize, 1] {
                let mut c = e.base;
                let (a, b) = (others[0], others[1]);
                if c[a] < da || c[b] < db {
                    continue;
                }
                c[a] -= da;
                c[b] -= db;
                if c[a] < self.n && c[b] < self.n {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Interior-edge mask: all four adjacent cells conduct.
    pub fn edge_conducting_mask(&self) -> &[bool] {
        &self.edge_conducting
    }

    /// Interior-edge ids of conducting edges, increasing.
    pub fn conducting_edges(&self) -> &[usize] {
        &self.conducting_edges
    }

    pub fn nonconducting_edges(&self) -> Vec<usize> {
        (0..self.num_interior_edges()).filter(|&e| !self.edge_conducting[e]).collect()
    }

    /// Interior node ids touched by conducting edges.
    pub fn conducting_nodes(&self) -> Vec<usize> {
        (0..self.num_interior_nodes()).filter(|&v| self.node_cluster[v].is_some()).collect()
    }

    /// Cluster label of a conducting node.
    pub fn node_cluster(&self, id: usize) -> Option<usize> {
        self.node_cluster[id]
    }

    /// Connected clusters of conducting edges; one tied potential each.
    pub fn num_clusters(&self) -> usize {
        self.clusters
    }

    /// Connected components of the conducting cells (closure adjacency).
    pub fn num_cell_components(&self) -> usize {
        self.cell_components
    }

    /// Midpoint of an interior edge.
    pub fn edge_midpoint(&self, id: usize) -> [f64; 3] {
        let e = self.interior_edge(id);
        let h = self.h();
        let mut x = [e.base[0] as f64 * h, e.base[1] as f64 * h, e.base[2] as f64 * h];
        x[e.dir] += 0.5 * h;
        x
    }

    pub fn face_center(&self, id: usize) -> [f64; 3] {
        let f = self.faces[id];
        let h = self.h();
        let mut x = [(f.base[0] as f64 + 0.5) * h, (f.base[1] as f64 + 0.5) * h, (f.base[2] as f64 + 0.5) * h];
        x[f.dir] = f.base[f.dir] as f64 * h;
        x
    }

    fn face_index_map(&self) -> std::collections::HashMap<(usize, [usize; 3]), usize> {
        self.faces.iter().enumerate().map(|(i, f)| ((f.dir, f.base), i)).collect()
    }

    fn edge_index_map(&self) -> std::collections::HashMap<(usize, [usize; 3]), usize> {
        self.edges.iter().enumerate().map(|(i, e)| ((e.dir, e.base), i)).collect()
    }

    /// Interior nodes → interior edges, `+1` at the head and `−1` at the tail.
    pub fn grad_incidence(&self) -> IntMatrix {
        let mut entries = Vec::new();
        for (id, &e) in self.interior_edges.iter().enumerate() {
            let (a, b) = self.edge_endpoints(self.edges[e]);
            if let Some(t) = self.node_index(a) {
                entries.push((id, t, -1));
            }
            if let Some(hd) = self.node_index(b) {
                entries.push((id, hd, 1));
            }
        }
        IntMatrix::new(self.num_interior_edges(), self.num_interior_nodes(), entries)
    }

    /// All edges → faces (circulation with the right-hand orientation).
    pub fn curl_full_incidence(&self) -> IntMatrix {
        let emap = self.edge_index_map();
        let mut entries = Vec::new();
        for (fid, f) in self.faces.iter().enumerate() {
            // (a, b) cyclic after the normal: curl_d = ∂_a E_b − ∂_b E_a
            let a = (f.dir + 1) % 3;
            let b = (f.dir + 2) % 3;
            let p = f.base;
            entries.push((fid, emap[&(b, add(p, unit(a)))], 1));
            entries.push((fid, emap[&(b, p)], -1));
            entries.push((fid, emap[&(a, add(p, unit(b)))], -1));
            entries.push((fid, emap[&(a, p)], 1));
        }
        IntMatrix::new(self.num_faces(), self.num_edges(), entries)
    }

    /// Interior edges → faces.
    pub fn curl_incidence(&self) -> IntMatrix {
        let full = self.curl_full_incidence();
        let entries = full
            .entries
            .into_iter()
            .filter_map(|(f, e, v)| self.edge_interior_id[e].map(|id| (f, id, v)))
            .collect();
        IntMatrix::new(self.num_faces(), self.num_interior_edges(), entries)
    }

    /// Faces → cells (outward flux).
    pub fn div_incidence(&self) -> IntMatrix {
        let fmap = self.face_index_map();
        let n = self.n;
        let mut entries = Vec::new();
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let c = (k * n + j) * n + i;
                    for d in 0..3 {
                        let p = [i, j, k];
                        entries.push((c, fmap[&(d, add(p, unit(d)))], 1));
                        entries.push((c, fmap[&(d, p)], -1));
                    }
                }
            }
        }
        IntMatrix::new(self.num_cells(), self.num_faces(), entries)
    }

    /// Full edge index → interior edge id.
    pub fn interior_edge_id(&self, full: usize) -> Option<usize> {
        self.edge_interior_id[full]
    }
}

fn to_csr<T: Real>(m: &IntMatrix, scale: T) -> CsrMatrix<T> {
    let mut coo = CooMatrix::new(m.rows, m.cols);
    for &(r, c, v) in &m.entries {
        coo.push(r, c, T::lit(v as f64) * scale);
    }
    CsrMatrix::from(&coo)
}

/// Dense copy of a CSR matrix.
pub fn dense<T: Real>(m: &CsrMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (r, c, v) in m.triplet_iter() {
        out[(r, c)] += *v;
    }
    out
}

/// Sparse matrix-vector product.
pub fn apply<T: Real>(m: &CsrMatrix<T>, x: &DVector<T>) -> DVector<T> {
    let mut y = DVector::zeros(m.nrows());
    for (r, row) in m.row_iter().enumerate() {
        let mut acc = T::zero();
        for (c, v) in row.col_indices().iter().zip(row.values()) {
            acc += *v * x[*c];
        }
        y[r] = acc;
    }
    y
}

/// Scaled operators of the complex.
#[derive(Clone, Debug)]
pub struct ComplexOperators<T: Real> {
    pub grad0: CsrMatrix<T>,
    pub curl0: CsrMatrix<T>,
    pub curl_full: CsrMatrix<T>,
    pub div: CsrMatrix<T>,
    /// Integer incidence before scaling.
    pub grad_int: IntMatrix,
    pub curl_int: IntMatrix,
    pub curl_full_int: IntMatrix,
    pub div_int: IntMatrix,
    pub h: T,
}

impl<T: Real> ComplexOperators<T> {
    pub fn new(mesh: &StaggeredMesh) -> Self {
        let h = T::lit(mesh.h());
        let inv = T::one() / h;
        let grad_int = mesh.grad_incidence();
        let curl_int = mesh.curl_incidence();
        let curl_full_int = mesh.curl_full_incidence();
        let div_int = mesh.div_incidence();
        Self {
            grad0: to_csr(&grad_int, inv),
            curl0: to_csr(&curl_int, inv),
            curl_full: to_csr(&curl_full_int, inv),
            div: to_csr(&div_int, inv),
            grad_int,
            curl_int,
            curl_full_int,
            div_int,
            h,
        }
    }

    pub fn grad0_dense(&self) -> DMatrix<T> {
        dense(&self.grad0)
    }

    pub fn curl0_dense(&self) -> DMatrix<T> {
        dense(&self.curl0)
    }

    /// `max |curl0·grad0|` after scaling.
    pub fn curl_grad_defect(&self) -> T {
        let p = &self.curl0 * &self.grad0;
        p.values().iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `max |div·curl_full|` after scaling.
    pub fn div_curl_defect(&self) -> T {
        let p = &self.div * &self.curl_full;
        p.values().iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Exactness data computed with exact arithmetic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactnessReport {
    pub n: usize,
    pub interior_nodes: usize,
    pub interior_edges: usize,
    pub rank_grad: usize,
    pub rank_curl: usize,
    pub dim_kernel_curl: usize,
    /// Integer product `curl·grad` has no nonzero entry.
    pub curl_grad_exact_zero: bool,
    /// Ranks are full where needed, which certifies the equality over ℚ.
    pub certified: bool,
}

impl ExactnessReport {
    pub fn exact(&self) -> bool {
        self.curl_grad_exact_zero && self.certified && self.dim_kernel_curl == self.rank_grad
    }
}

/// Ranks over the prime field. Since the prime rank never exceeds the rational
/// rank and `curl·grad = 0` caps `rank(curl) ≤ #edges − rank(grad)`, full
/// prime ranks `rank(grad) = #nodes` and `rank(curl) = #edges − #nodes` force
/// the same values over ℚ.
pub fn exactness(mesh: &StaggeredMesh) -> ExactnessReport {
    let g = mesh.grad_incidence();
    let c = mesh.curl_incidence();
    let zero = c.mul(&g).entries.is_empty();
    let rg = rank::<ModPrime>(&g);
    let rc = rank::<ModPrime>(&c);
    let (nv, ne) = (mesh.num_interior_nodes(), mesh.num_interior_edges());
    ExactnessReport {
        n: mesh.n(),
        interior_nodes: nv,
        interior_edges: ne,
        rank_grad: rg,
        rank_curl: rc,
        dim_kernel_curl: ne - rc,
        curl_grad_exact_zero: zero,
        certified: zero && rg == nv && rc + nv == ne,
    }
}

/// Discrete localization of curl kernels and the nodal extension property.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalizationReport {
    pub cell_components: usize,
    pub clusters: usize,
    /// `max` principal-angle sine between `N(curl0) ∩ {E = 0 on conductor}` and
    /// the kernel of the curl restricted to non-conducting edges.
    pub outside_defect: f64,
    /// Same with the roles of the two regions swapped.
    pub inside_defect: f64,
    /// Restriction of interior nodal functions onto conducting nodes is onto.
    pub extension_surjective: bool,
    pub pass: bool,
}

/// Kernel of the curl with columns limited to `cols`, embedded in edge space.
pub fn restricted_kernel<T: Real>(curl: &DMatrix<T>, cols: &[usize], tol: T) -> Result<Subspace<T>> {
    let d = curl.ncols();
    if cols.is_empty() {
        return Ok(Subspace::zero(d));
    }
    let sub = curl.select_columns(cols);
    let k = kernel(&sub, tol)?;
    let mut basis = DMatrix::zeros(d, k.dim());
    for (r, &c) in cols.iter().enumerate() {
        basis.set_row(c, &k.basis().row(r));
    }
    Ok(Subspace::from_basis_unchecked(basis))
}

pub fn check_kernel_localization<T: Real>(mesh: &StaggeredMesh, ops: &ComplexOperators<T>) -> Result<LocalizationReport> {
    let tol = T::lit(1e-10);
    let curl = ops.curl0_dense();
    let d = mesh.num_interior_edges();
    let nkc = kernel(&curl, tol)?;
    let cond = mesh.conducting_edges().to_vec();
    let noncond = mesh.nonconducting_edges();
    let outside = intersect(&nkc, &Subspace::coordinates(d, &noncond))?;
    let inside = intersect(&nkc, &Subspace::coordinates(d, &cond))?;
    let outside_defect = distance(&outside, &restricted_kernel(&curl, &noncond, tol)?)?.to_f64_lossy();
    let inside_defect = distance(&inside, &restricted_kernel(&curl, &cond, tol)?)?.to_f64_lossy();
    // restriction map is a coordinate selection; its rank is the number of
    // selected nodes that are degrees of freedom
    let cn = mesh.conducting_nodes();
    let restriction = IntMatrix::new(cn.len(), mesh.num_interior_nodes(), cn.iter().enumerate().map(|(r, &v)| (r, v, 1)).collect());
    let extension_surjective = rank::<ModPrime>(&restriction) == cn.len();
    let pass = outside_defect <= 1e-10 && inside_defect <= 1e-10 && extension_surjective;
    Ok(LocalizationReport {
        cell_components: mesh.num_cell_components(),
        clusters: mesh.num_clusters(),
        outside_defect,
        inside_defect,
        extension_surjective,
        pass,
    })
}

/// Multiplier parametrization: free interior nodes off the conductor, then one
/// tied potential per conducting cluster.
#[derive(Clone, Debug)]
pub struct DiamondGrad<T: Real> {
    /// `grad0 · Ext`, interior edges × multipliers.
    pub g: DMatrix<T>,
    pub free_nodes: Vec<usize>,
    pub clusters: usize,
}

impl<T: Real> DiamondGrad<T> {
    pub fn dim(&self) -> usize {
        self.g.ncols()
    }
}

/// Gradient of nodal functions that are constant on each conducting cluster.
pub fn build_diamond_grad<T: Real>(mesh: &StaggeredMesh, ops: &ComplexOperators<T>) -> Result<DiamondGrad<T>> {
    let nv = mesh.num_interior_nodes();
    let free_nodes: Vec<usize> = (0..nv).filter(|&v| mesh.node_cluster(v).is_none()).collect();
    let clusters = mesh.num_clusters();
    let m = free_nodes.len() + clusters;
    let mut ext = IntMatrix::new(nv, m, Vec::with_capacity(nv));
    for (j, &v) in free_nodes.iter().enumerate() {
        ext.entries.push((v, j, 1));
    }
    for v in 0..nv {
        if let Some(c) = mesh.node_cluster(v) {
            ext.entries.push((v, free_nodes.len() + c, 1));
        }
    }
    let g_int = ops.grad_int.mul(&ext);
    if rank::<ModPrime>(&g_int) != m {
        return Err(Error::Internal("diamond gradient is not injective".into()));
    }
    let inv_h = T::one() / ops.h;
    let mut g = DMatrix::zeros(g_int.rows, m);
    for &(r, c, v) in &g_int.entries {
        g[(r, c)] = T::lit(v as f64) * inv_h;
    }
    Ok(DiamondGrad { g, free_nodes, clusters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_vector, singular_values};
    use num_rational::BigRational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn counts_match_enumeration() {
        for n in 2..=6 {
            let m = StaggeredMesh::new(n, &[]).unwrap();
            assert_eq!(m.num_interior_nodes(), (n - 1).pow(3));
            assert_eq!(m.num_interior_edges(), 3 * n * (n - 1).pow(2));
            assert_eq!(m.num_faces(), 3 * n * n * (n + 1));
            assert_eq!(m.num_edges(), 3 * n * (n + 1).pow(2));
        }
        let m = StaggeredMesh::new(2, &[]).unwrap();
        assert_eq!((m.num_interior_nodes(), m.num_interior_edges()), (1, 6));
    }

    #[test]
    fn central_cell_has_no_conducting_edges() {
        let m = StaggeredMesh::new(3, &[CellBox::centered(3, 1)]).unwrap();
        assert!(m.cell_is_conducting([1, 1, 1]));
        assert!(m.conducting_edges().is_empty());
        assert_eq!(m.num_cell_components(), 1);
        assert_eq!(m.num_clusters(), 0);
    }

    #[test]
    fn central_box_masks() {
        let m = StaggeredMesh::new(6, &[CellBox::centered(6, 2)]).unwrap();
        // a 2^3 box has one interior vertex with six conducting edges
        assert_eq!(m.conducting_edges().len(), 6);
        assert_eq!(m.conducting_nodes().len(), 7);
        assert_eq!(m.num_clusters(), 1);
        for &e in m.conducting_edges() {
            let ent = m.interior_edge(e);
            let (a, b) = m.edge_endpoints(ent);
            assert!(m.node_index(a).is_some() && m.node_index(b).is_some());
            assert!([a, b].iter().all(|p| (0..3).all(|ax| (2..=4).contains(&p[ax]))));
        }
    }

    #[test]
    fn boundary_box_rejected() {
        let err = StaggeredMesh::new(4, &[CellBox::new([0, 1, 1], [2, 2, 2])]).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(_)));
        assert!(StaggeredMesh::new(4, &[CellBox::new([1, 1, 1], [4, 2, 2])]).is_err());
        assert!(matches!(StaggeredMesh::new(4, &[CellBox::new([2, 1, 1], [2, 2, 2])]), Err(Error::Argument(_))));
    }

    #[test]
    fn two_components() {
        let boxes = [CellBox::new([1, 1, 1], [3, 3, 3]), CellBox::new([4, 1, 1], [6, 3, 3])];
        let m = StaggeredMesh::new(7, &boxes).unwrap();
        assert_eq!(m.num_cell_components(), 2);
        assert_eq!(m.num_clusters(), 2);
        let ops = ComplexOperators::<f64>::new(&m);
        assert!(check_kernel_localization(&m, &ops).unwrap().pass);
        let touching = [CellBox::new([1, 1, 1], [3, 3, 3]), CellBox::new([3, 3, 3], [5, 5, 5])];
        assert_eq!(StaggeredMesh::new(6, &touching).unwrap().num_cell_components(), 1);
    }

    #[test]
    fn complex_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 3..=5 {
            let m = StaggeredMesh::new(n, &[]).unwrap();
            let ops = ComplexOperators::<f64>::new(&m);
            assert!(ops.curl_grad_defect() <= 1e-14);
            assert_eq!(ops.div_curl_defect(), 0.0);
            for _ in 0..100 {
                let phi = random_vector::<f64, _>(&mut rng, m.num_interior_nodes());
                assert!(apply(&ops.curl0, &apply(&ops.grad0, &phi)).amax() <= 1e-14 * n as f64);
            }
            let e = random_vector::<f64, _>(&mut rng, m.num_interior_edges());
            let g = random_vector::<f64, _>(&mut rng, m.num_faces());
            let lhs = apply(&ops.curl0, &e).dot(&g);
            let rhs = e.dot(&apply(&ops.curl0.transpose(), &g));
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn grad_transpose_is_negative_divergence_of_edge_fields() {
        // for a constant edge field along x, −gradᵀ sums to the outflow through the
        // boundary layers: zero at nodes away from the x-boundary
        let n = 5;
        let m = StaggeredMesh::new(n, &[]).unwrap();
        let ops = ComplexOperators::<f64>::new(&m);
        let e = DVector::from_fn(m.num_interior_edges(), |id, _| if m.interior_edge(id).dir == 0 { 1.0 } else { 0.0 });
        let d = apply(&ops.grad0.transpose(), &e);
        for v in 0..m.num_interior_nodes() {
            let p = m.interior_node(v);
            if p[0] >= 2 && p[0] <= n - 2 {
                assert_eq!(d[v], 0.0);
            }
        }
    }

    #[test]
    fn exactness_prime_rational_and_float_agree() {
        for n in 3..=4 {
            let m = StaggeredMesh::new(n, &[]).unwrap();
            let rep = exactness(&m);
            assert!(rep.exact(), "{rep:?}");
            assert_eq!(rank::<BigRational>(&m.grad_incidence()), rep.rank_grad);
            assert_eq!(rank::<BigRational>(&m.curl_incidence()), rep.rank_curl);
            let ops = ComplexOperators::<f64>::new(&m);
            let sv = singular_values(&ops.curl0_dense());
            let numeric = sv.iter().filter(|s| **s > 1e-10 * sv[0]).count();
            assert_eq!(numeric, rep.rank_curl);
        }
    }

    #[test]
    fn diamond_grad_dimensions() {
        let m = StaggeredMesh::new(4, &[]).unwrap();
        let ops = ComplexOperators::<f64>::new(&m);
        let g = build_diamond_grad(&m, &ops).unwrap();
        assert_eq!(g.dim(), 27);
        assert_eq!(g.g, ops.grad0_dense());
        let m = StaggeredMesh::new(6, &[CellBox::centered(6, 2)]).unwrap();
        let ops = ComplexOperators::<f64>::new(&m);
        let g = build_diamond_grad(&m, &ops).unwrap();
        assert_eq!(g.dim(), 125 - 7 + 1);
    }

    #[test]
    fn localization_empty_and_single_box() {
        let m = StaggeredMesh::new(4, &[]).unwrap();
        let rep = check_kernel_localization(&m, &ComplexOperators::<f64>::new(&m)).unwrap();
        assert!(rep.pass && rep.cell_components == 0);
        let m = StaggeredMesh::new(6, &[CellBox::centered(6, 2)]).unwrap();
        let rep = check_kernel_localization(&m, &ComplexOperators::<f64>::new(&m)).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}
