//! P1 finite elements: DOF maps, mass and stiffness assembly for Dirichlet,
//! Neumann and Robin conditions, L² projection, norms and point evaluation.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{cg_solve, CsrMatrix, FieldVector, DEFAULT_CG_TOL};
use crate::mesh::{Mesh, PointLocator};

/// Robin coefficient `κ` on the boundary.
#[derive(Clone)]
pub enum Kappa {
    Constant(f64),
    Function(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl Kappa {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Kappa::Constant(k) => *k,
            Kappa::Function(f) => f(x),
        }
    }
}

impl fmt::Debug for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kappa::Constant(k) => write!(f, "Constant({k})"),
            Kappa::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// Homogeneous boundary operator applied on the whole of ∂Ω.
#[derive(Debug, Clone)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    /// `κ u + ∂u/∂ν = 0` with `κ > 0`.
    Robin(Kappa),
}

impl BoundaryCondition {
    pub fn robin(kappa: f64) -> Self {
        BoundaryCondition::Robin(Kappa::Constant(kappa))
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
            BoundaryCondition::Robin(_) => "robin",
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryCondition::Dirichlet)
    }

    pub fn is_neumann(&self) -> bool {
        matches!(self, BoundaryCondition::Neumann)
    }
}

/// A quadrature point handed to [`ScalarField::value_at`].
pub struct QuadPoint<'a> {
    pub mesh: &'a Mesh,
    pub element: usize,
    pub bary: [f64; 3],
    pub x: &'a [f64],
}

/// Anything that can be evaluated pointwise on the closure of the domain.
///
/// Finite-element functions override [`value_at`](ScalarField::value_at) to
/// interpolate from barycentric coordinates instead of searching the mesh.
pub trait ScalarField {
    fn value(&self, x: &[f64]) -> f64;

    fn value_at(&self, q: &QuadPoint<'_>) -> f64 {
        self.value(q.x)
    }
}

impl<F: Fn(&[f64]) -> f64> ScalarField for F {
    fn value(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// `Σ cᵢ fᵢ` of borrowed fields.
pub struct LinearCombination<'a> {
    terms: Vec<(f64, &'a dyn ScalarField)>,
}

impl<'a> LinearCombination<'a> {
    pub fn new(terms: Vec<(f64, &'a dyn ScalarField)>) -> Self {
        LinearCombination { terms }
    }
}

impl ScalarField for LinearCombination<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.value(x)).sum()
    }

    fn value_at(&self, q: &QuadPoint<'_>) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.value_at(q)).sum()
    }
}

/// Gauss–Legendre 5-point rule on [0, 1]: (abscissa, weight), weights sum to 1.
pub fn gauss_legendre_5() -> [(f64, f64); 5] {
    let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let wa = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
    let wb = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
    let map = |x: f64, w: f64| (0.5 * (1.0 + x), 0.5 * w);
    [map(-b, wb), map(-a, wa), map(0.0, 128.0 / 225.0), map(a, wa), map(b, wb)]
}

/// Seven-point degree-5 triangle rule: (barycentric point, weight), weights sum to 1.
pub fn triangle_rule_7() -> [([f64; 3], f64); 7] {
    let r15 = 15f64.sqrt();
    let (a1, b1) = ((9.0 - 2.0 * r15) / 21.0, (6.0 + r15) / 21.0);
    let (a2, b2) = ((9.0 + 2.0 * r15) / 21.0, (6.0 - r15) / 21.0);
    let (w1, w2) = ((155.0 + r15) / 1200.0, (155.0 - r15) / 1200.0);
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 9.0 / 40.0),
        ([a1, b1, b1], w1),
        ([b1, a1, b1], w1),
        ([b1, b1, a1], w1),
        ([a2, b2, b2], w2),
        ([b2, a2, b2], w2),
        ([b2, b2, a2], w2),
    ]
}

/// Calls `f(element, bary, x, weight)` for every element quadrature point;
/// `weight` already includes the element measure.
pub fn for_each_quad_point(mesh: &Mesh, mut f: impl FnMut(usize, [f64; 3], &[f64], f64)) {
    let rule: Vec<([f64; 3], f64)> = if mesh.dim() == 1 {
        gauss_legendre_5().iter().map(|&(t, w)| ([1.0 - t, t, 0.0], w)).collect()
    } else {
        triangle_rule_7().to_vec()
    };
    let mut x = [0.0; 2];
    for k in 0..mesh.n_elements() {
        let e = mesh.element(k);
        let meas = mesh.element_measure(k);
        for &(bary, w) in &rule {
            for d in 0..mesh.dim() {
                x[d] = e.iter().enumerate().map(|(a, &i)| bary[a] * mesh.node(i)[d]).sum();
            }
            f(k, bary, &x[..mesh.dim()], w * meas);
        }
    }
}

/// P1 space on a mesh with a homogeneous boundary condition.
///
/// Dirichlet nodes are eliminated from the DOF numbering; Neumann and Robin
/// spaces keep every node. DOFs are numbered in node order.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    bc: BoundaryCondition,
    dof_of_node: Vec<Option<usize>>,
    node_of_dof: Vec<usize>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, bc: BoundaryCondition) -> Result<Self> {
        if let BoundaryCondition::Robin(kappa) = &bc {
            for &i in mesh.boundary_nodes() {
                let k = kappa.eval(mesh.node(i));
                if !(k > 0.0) || !k.is_finite() {
                    return Err(Error::InvalidArgument(format!("Robin coefficient must be positive, got {k} at node {i}")));
                }
            }
        }
        let mask = mesh.boundary_mask();
        let mut dof_of_node = vec![None; mesh.n_nodes()];
        let mut node_of_dof = Vec::with_capacity(mesh.n_nodes());
        for (i, slot) in dof_of_node.iter_mut().enumerate() {
            if bc.is_dirichlet() && mask[i] {
                continue;
            }
            *slot = Some(node_of_dof.len());
            node_of_dof.push(i);
        }
        Ok(FeSpace { mesh, bc, dof_of_node, node_of_dof })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn bc(&self) -> &BoundaryCondition {
        &self.bc
    }

    pub fn n_dofs(&self) -> usize {
        self.node_of_dof.len()
    }

    pub fn dof(&self, node: usize) -> Option<usize> {
        self.dof_of_node[node]
    }

    pub fn node_of_dof(&self) -> &[usize] {
        &self.node_of_dof
    }

    /// Expands DOF coefficients to one value per mesh node (eliminated
    /// Dirichlet nodes get 0).
    pub fn to_nodal(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(coeffs)?;
        Ok(self.dof_of_node.iter().map(|d| d.map_or(0.0, |d| coeffs[d])).collect())
    }

    /// Restricts per-node values to the DOFs of this space.
    pub fn from_nodal(&self, nodal: &[f64]) -> Result<FieldVector> {
        if nodal.len() != self.mesh.n_nodes() {
            return Err(Error::DimensionMismatch { expected: self.mesh.n_nodes(), got: nodal.len() });
        }
        Ok(self.node_of_dof.iter().map(|&i| nodal[i]).collect::<Vec<_>>().into())
    }

    /// Nodal interpolant of `u` (DOF nodes only).
    pub fn interpolate(&self, u: &dyn ScalarField) -> FieldVector {
        self.node_of_dof.iter().map(|&i| u.value(self.mesh.node(i))).collect::<Vec<_>>().into()
    }

    pub(crate) fn check_len(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.n_dofs() {
            return Err(Error::DimensionMismatch { expected: self.n_dofs(), got: coeffs.len() });
        }
        Ok(())
    }

    fn element_dofs(&self, k: usize) -> [Option<usize>; 3] {
        let mut out = [None; 3];
        for (a, &i) in self.mesh.element(k).iter().enumerate() {
            out[a] = self.dof_of_node[i];
        }
        out
    }

    fn assemble(&self, local: impl Fn(usize) -> [[f64; 3]; 3], extra: &[(usize, usize, f64)]) -> Result<CsrMatrix> {
        let npe = self.mesh.dim() + 1;
        let mut triplets = Vec::with_capacity(self.mesh.n_elements() * npe * npe + extra.len());
        for k in 0..self.mesh.n_elements() {
            if self.mesh.element_measure(k) <= 0.0 {
                return Err(Error::InvalidMesh(format!("element {k} is degenerate")));
            }
            let dofs = self.element_dofs(k);
            let m = local(k);
            for a in 0..npe {
                let Some(i) = dofs[a] else { continue };
                for b in 0..npe {
                    if let Some(j) = dofs[b] {
                        triplets.push((i, j, m[a][b]));
                    }
                }
            }
        }
        triplets.extend_from_slice(extra);
        CsrMatrix::from_triplets(self.n_dofs(), self.n_dofs(), &triplets)
    }
}

/// Gradients of the barycentric coordinates of triangle `k`.
fn p1_gradients(mesh: &Mesh, k: usize) -> [[f64; 2]; 3] {
    let e = mesh.element(k);
    let (a, b, c) = (mesh.node(e[0]), mesh.node(e[1]), mesh.node(e[2]));
    let two_area = 2.0 * mesh.element_measure(k);
    [
        [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area],
        [(c[1] - a[1]) / two_area, (a[0] - c[0]) / two_area],
        [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area],
    ]
}

/// Consistent P1 mass matrix `M_ij = ⟨φ_i, φ_j⟩`.
pub fn assemble_mass(sp: &FeSpace) -> Result<CsrMatrix> {
    let mesh = sp.mesh.clone();
    sp.assemble(
        |k| {
            let meas = mesh.element_measure(k);
            let mut m = [[0.0; 3]; 3];
            if mesh.dim() == 1 {
                m[0][0] = meas / 3.0;
                m[1][1] = meas / 3.0;
                m[0][1] = meas / 6.0;
                m[1][0] = meas / 6.0;
            } else {
                for (a, row) in m.iter_mut().enumerate() {
                    for (b, v) in row.iter_mut().enumerate() {
                        *v = meas * if a == b { 2.0 } else { 1.0 } / 12.0;
                    }
                }
            }
            m
        },
        &[],
    )
}

/// Stiffness matrix of `a(w, v) = ∫ ∇w·∇v (+ ∫_∂Ω κ w v for Robin)`.
pub fn assemble_stiffness(sp: &FeSpace) -> Result<CsrMatrix> {
    let mesh = sp.mesh.clone();
    let mut boundary = Vec::new();
    if let BoundaryCondition::Robin(kappa) = &sp.bc {
        let check = |k: f64, x: &[f64]| -> Result<f64> {
            if !(k > 0.0) || !k.is_finite() {
                return Err(Error::InvalidArgument(format!("Robin coefficient {k} is not positive at {x:?}")));
            }
            Ok(k)
        };
        if mesh.dim() == 1 {
            // The boundary measure in 1D is counting measure at the endpoints.
            for &i in mesh.boundary_nodes() {
                let d = sp.dof_of_node[i].expect("Robin spaces keep boundary nodes");
                boundary.push((d, d, check(kappa.eval(mesh.node(i)), mesh.node(i))?));
            }
        } else {
            let g = 0.5 / 3f64.sqrt();
            let gauss = [0.5 - g, 0.5 + g];
            for edge in mesh.boundary_edges() {
                let (p, q) = (mesh.node(edge.nodes[0]), mesh.node(edge.nodes[1]));
                let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
                let mut local = [[0.0; 2]; 2];
                for &t in &gauss {
                    let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                    let k = check(kappa.eval(&x), &x)?;
                    let phi = [1.0 - t, t];
                    for a in 0..2 {
                        for b in 0..2 {
                            local[a][b] += 0.5 * len * k * phi[a] * phi[b];
                        }
                    }
                }
                let dofs = [sp.dof_of_node[edge.nodes[0]].unwrap(), sp.dof_of_node[edge.nodes[1]].unwrap()];
                for a in 0..2 {
                    for b in 0..2 {
                        boundary.push((dofs[a], dofs[b], local[a][b]));
                    }
                }
            }
        }
    }
    sp.assemble(
        |k| {
            let mut m = [[0.0; 3]; 3];
            if mesh.dim() == 1 {
                let inv = 1.0 / mesh.element_measure(k);
                m[0][0] = inv;
                m[1][1] = inv;
                m[0][1] = -inv;
                m[1][0] = -inv;
            } else {
                let g = p1_gradients(&mesh, k);
                let area = mesh.element_measure(k);
                for a in 0..3 {
                    for b in 0..3 {
                        m[a][b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    }
                }
            }
            m
        },
        &boundary,
    )
}

/// Load vector `b_i = ∫ u φ_i` by element quadrature.
pub fn assemble_load(sp: &FeSpace, u: &dyn ScalarField) -> FieldVector {
    let mesh = sp.mesh.clone();
    let mut b = FieldVector::zeros(sp.n_dofs());
    for_each_quad_point(&mesh, |k, bary, x, w| {
        let val = u.value_at(&QuadPoint { mesh: &mesh, element: k, bary, x });
        for (a, &i) in mesh.element(k).iter().enumerate() {
            if let Some(d) = sp.dof_of_node[i] {
                b[d] += w * val * bary[a];
            }
        }
    });
    b
}

/// Maximum CG iterations used for mass-matrix and elliptic solves.
pub(crate) fn default_max_iter(n: usize) -> usize {
    (10 * n).max(10)
}

/// L² projection onto the space: solves `M c = b` with `b_i = ∫ u φ_i`.
pub fn l2_project(sp: &FeSpace, u: &dyn ScalarField) -> Result<FieldVector> {
    let mass = assemble_mass(sp)?;
    l2_project_with(sp, &mass, u, DEFAULT_CG_TOL)
}

/// L² projection with a pre-assembled mass matrix.
pub fn l2_project_with(sp: &FeSpace, mass: &CsrMatrix, u: &dyn ScalarField, tol: f64) -> Result<FieldVector> {
    let b = assemble_load(sp, u);
    Ok(cg_solve(mass, &b, tol, default_max_iter(sp.n_dofs()))?.x)
}

/// `‖u_exact − u_h‖₀` by element quadrature.
pub fn l2_norm_error(sp: &FeSpace, coeffs: &[f64], u_exact: &dyn ScalarField) -> Result<f64> {
    let nodal = sp.to_nodal(coeffs)?;
    let mesh = sp.mesh.clone();
    let mut acc = 0.0;
    for_each_quad_point(&mesh, |k, bary, x, w| {
        let uh: f64 = mesh.element(k).iter().enumerate().map(|(a, &i)| bary[a] * nodal[i]).sum();
        let d = u_exact.value_at(&QuadPoint { mesh: &mesh, element: k, bary, x }) - uh;
        acc += w * d * d;
    });
    Ok(acc.sqrt())
}

/// `‖u_h‖₀` of an FE function.
pub fn l2_norm(sp: &FeSpace, coeffs: &[f64]) -> Result<f64> {
    l2_norm_error(sp, coeffs, &|_: &[f64]| 0.0)
}

/// Evaluates an FE function at points given as a flat coordinate list
/// (`dim` values per point).
pub fn evaluate(sp: &FeSpace, coeffs: &[f64], points: &[f64]) -> Result<Vec<f64>> {
    let f = FeFunction::new(sp.clone(), coeffs)?;
    let dim = sp.mesh.dim();
    if points.len() % dim != 0 {
        return Err(Error::InvalidArgument("point list length is not a multiple of the dimension".into()));
    }
    points.chunks(dim).map(|p| f.try_value(p)).collect()
}

/// An FE function that can be evaluated anywhere in Ω̄.
#[derive(Debug, Clone)]
pub struct FeFunction {
    mesh: Arc<Mesh>,
    nodal: Vec<f64>,
    locator: PointLocator,
}

impl FeFunction {
    pub fn new(sp: FeSpace, coeffs: &[f64]) -> Result<Self> {
        let nodal = sp.to_nodal(coeffs)?;
        FeFunction::from_nodal(sp.mesh.clone(), nodal)
    }

    /// P1 function with the given value at every mesh node.
    pub fn from_nodal(mesh: Arc<Mesh>, nodal: Vec<f64>) -> Result<Self> {
        if nodal.len() != mesh.n_nodes() {
            return Err(Error::DimensionMismatch { expected: mesh.n_nodes(), got: nodal.len() });
        }
        let locator = PointLocator::new(&mesh);
        Ok(FeFunction { mesh, nodal, locator })
    }

    pub fn nodal(&self) -> &[f64] {
        &self.nodal
    }

    pub fn try_value(&self, x: &[f64]) -> Result<f64> {
        let (k, bary) = self.locator.locate(&self.mesh, x).ok_or_else(|| Error::OutsideDomain(x.to_vec()))?;
        Ok(self.interpolate(k, &bary))
    }

    fn interpolate(&self, k: usize, bary: &[f64; 3]) -> f64 {
        self.mesh.element(k).iter().enumerate().map(|(a, &i)| bary[a] * self.nodal[i]).sum()
    }
}

impl ScalarField for FeFunction {
    /// NaN outside the domain.
    fn value(&self, x: &[f64]) -> f64 {
        self.try_value(x).unwrap_or(f64::NAN)
    }

    fn value_at(&self, q: &QuadPoint<'_>) -> f64 {
        if std::ptr::eq(q.mesh, Arc::as_ptr(&self.mesh)) {
            self.interpolate(q.element, &q.bary)
        } else {
            self.value(q.x)
        }
    }
}
