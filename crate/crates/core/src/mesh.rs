//! Quasi-uniform P1 meshes of intervals and convex polygons.
//!
//! Intervals are split into equal cells. Convex polygons are fanned from
//! their centroid and then uniformly red-refined, which keeps every triangle
//! similar to one of the fan triangles.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Relative tolerance used when deciding whether a point lies inside an element.
const LOCATE_TOL: f64 = 1e-10;

/// A boundary edge of a 2D mesh.
///
/// `nodes` follow the counterclockwise orientation of the owning `element`,
/// so the domain lies to the left and the outward normal points right.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub element: usize,
}

/// Measured constants of the quasi-uniformity assumption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiUniformity {
    /// `max_K h_K / rho_K` with `rho_K` the inscribed-ball diameter.
    pub sigma: f64,
    /// `min_K h_K / h_max`.
    pub tau: f64,
}

/// An immutable conforming P1 mesh in one or two dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    coords: Vec<f64>,
    elements: Vec<usize>,
    boundary_nodes: Vec<usize>,
    boundary_edges: Vec<BoundaryEdge>,
    h_max: f64,
}

impl Mesh {
    /// Builds a mesh from raw node coordinates (`dim` values per node) and
    /// element connectivity (`dim + 1` node indices per element).
    ///
    /// Boundary entities and `h_max` are derived from the topology; the
    /// connectivity is validated for index range, orientation and conformity.
    pub fn from_parts(dim: usize, coords: Vec<f64>, elements: Vec<usize>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidMesh(format!("unsupported dimension {dim}")));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidMesh("coordinate array length is not a multiple of dim".into()));
        }
        let npe = dim + 1;
        if elements.is_empty() || elements.len() % npe != 0 {
            return Err(Error::InvalidMesh("element array is empty or ragged".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMesh("non-finite node coordinate".into()));
        }
        let n_nodes = coords.len() / dim;
        let mut referenced = vec![false; n_nodes];
        for &i in &elements {
            if i >= n_nodes {
                return Err(Error::InvalidMesh(format!("element references node {i} of {n_nodes}")));
            }
            referenced[i] = true;
        }
        if let Some(i) = referenced.iter().position(|r| !r) {
            return Err(Error::InvalidMesh(format!("node {i} belongs to no element")));
        }

        let mut mesh = Mesh {
            dim,
            coords,
            elements,
            boundary_nodes: Vec::new(),
            boundary_edges: Vec::new(),
            h_max: 0.0,
        };
        for k in 0..mesh.n_elements() {
            if mesh.element_measure(k) <= 0.0 {
                return Err(Error::InvalidMesh(format!("element {k} is degenerate or clockwise")));
            }
        }
        mesh.h_max = (0..mesh.n_elements()).map(|k| mesh.element_diameter(k)).fold(0.0, f64::max);
        mesh.build_boundary()?;
        Ok(mesh)
    }

    fn build_boundary(&mut self) -> Result<()> {
        if self.dim == 1 {
            let mut count = vec![0u8; self.n_nodes()];
            for k in 0..self.n_elements() {
                for &i in self.element(k) {
                    count[i] += 1;
                }
            }
            if let Some(i) = count.iter().position(|&c| c > 2) {
                return Err(Error::InvalidMesh(format!("node {i} shared by more than two cells")));
            }
            self.boundary_nodes = (0..self.n_nodes()).filter(|&i| count[i] == 1).collect();
            if self.boundary_nodes.len() != 2 {
                return Err(Error::InvalidMesh("1D mesh is not a single interval".into()));
            }
            return Ok(());
        }

        // 2D: an edge seen once is on the boundary, twice is interior.
        let mut seen: HashMap<(usize, usize), (u8, usize)> = HashMap::new();
        let mut order = Vec::new();
        for k in 0..self.n_elements() {
            let e = self.element(k);
            for l in 0..3 {
                let (a, b) = (e[l], e[(l + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let entry = seen.entry(key).or_insert_with(|| {
                    order.push((a, b, k));
                    (0, k)
                });
                entry.0 += 1;
                if entry.0 > 2 {
                    return Err(Error::InvalidMesh(format!("edge ({a}, {b}) shared by more than two triangles")));
                }
            }
        }
        self.boundary_edges = order
            .into_iter()
            .filter(|&(a, b, _)| seen[&(a.min(b), a.max(b))].0 == 1)
            .map(|(a, b, k)| BoundaryEdge { nodes: [a, b], element: k })
            .collect();

        // The boundary of a conforming triangulation of a polygon is one
        // closed loop; hanging nodes show up as extra loops.
        let mut next = HashMap::new();
        for e in &self.boundary_edges {
            if next.insert(e.nodes[0], e.nodes[1]).is_some() {
                return Err(Error::InvalidMesh(format!("boundary node {} has two outgoing edges", e.nodes[0])));
            }
        }
        let start = self.boundary_edges[0].nodes[0];
        let mut cur = start;
        let mut steps = 0;
        loop {
            cur = *next
                .get(&cur)
                .ok_or_else(|| Error::InvalidMesh("boundary is not a closed loop".into()))?;
            steps += 1;
            if cur == start || steps > self.boundary_edges.len() {
                break;
            }
        }
        if cur != start || steps != self.boundary_edges.len() {
            return Err(Error::InvalidMesh("boundary is not a single closed loop (non-conforming mesh?)".into()));
        }
        let mut nodes: Vec<usize> = self.boundary_edges.iter().map(|e| e.nodes[0]).collect();
        nodes.sort_unstable();
        self.boundary_nodes = nodes;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len() / (self.dim + 1)
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn element(&self, k: usize) -> &[usize] {
        let npe = self.dim + 1;
        &self.elements[k * npe..(k + 1) * npe]
    }

    /// Sorted indices of boundary nodes.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Boundary edges (empty in 1D).
    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_nodes()];
        for &i in &self.boundary_nodes {
            mask[i] = true;
        }
        mask
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Length (1D) or signed area (2D) of element `k`.
    pub fn element_measure(&self, k: usize) -> f64 {
        let e = self.element(k);
        if self.dim == 1 {
            self.node(e[1])[0] - self.node(e[0])[0]
        } else {
            let (a, b, c) = (self.node(e[0]), self.node(e[1]), self.node(e[2]));
            0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
        }
    }

    /// Diameter `h_K` of element `k`.
    pub fn element_diameter(&self, k: usize) -> f64 {
        let e = self.element(k);
        if self.dim == 1 {
            return (self.node(e[1])[0] - self.node(e[0])[0]).abs();
        }
        (0..3)
            .map(|l| dist(self.node(e[l]), self.node(e[(l + 1) % 3])))
            .fold(0.0, f64::max)
    }

    /// Diameter `rho_K` of the largest ball inscribed in element `k`.
    pub fn element_inball_diameter(&self, k: usize) -> f64 {
        if self.dim == 1 {
            return self.element_diameter(k);
        }
        let e = self.element(k);
        let perimeter: f64 = (0..3).map(|l| dist(self.node(e[l]), self.node(e[(l + 1) % 3]))).sum();
        4.0 * self.element_measure(k) / perimeter
    }

    /// Total length or area of the mesh.
    pub fn measure(&self) -> f64 {
        (0..self.n_elements()).map(|k| self.element_measure(k)).sum()
    }

    /// Barycentric coordinates of `x` with respect to element `k`.
    pub fn barycentric(&self, k: usize, x: &[f64]) -> [f64; 3] {
        let e = self.element(k);
        if self.dim == 1 {
            let (a, b) = (self.node(e[0])[0], self.node(e[1])[0]);
            let t = (x[0] - a) / (b - a);
            return [1.0 - t, t, 0.0];
        }
        let (a, b, c) = (self.node(e[0]), self.node(e[1]), self.node(e[2]));
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Verifies the shared-face rule and positive orientation of every element.
    pub fn check_conformity(&self) -> Result<()> {
        let mut copy = Mesh::from_parts(self.dim, self.coords.clone(), self.elements.clone())?;
        copy.h_max = self.h_max;
        if copy != *self {
            return Err(Error::InvalidMesh("stored boundary data disagree with topology".into()));
        }
        Ok(())
    }

    /// Measured quasi-uniformity constants.
    pub fn quasi_uniformity(&self) -> QuasiUniformity {
        let mut sigma: f64 = 0.0;
        let mut h_min = f64::INFINITY;
        for k in 0..self.n_elements() {
            let h = self.element_diameter(k);
            sigma = sigma.max(h / self.element_inball_diameter(k));
            h_min = h_min.min(h);
        }
        QuasiUniformity { sigma, tau: h_min / self.h_max }
    }

    pub fn to_flm_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_flm(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("flm output is ASCII")
    }

    /// Writes the native `.flm` text format.
    ///
    /// Coordinates use the shortest decimal form that parses back to the same
    /// `f64`, so a write/read cycle reproduces the mesh exactly.
    pub fn write_flm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "flm {} {} {}", self.dim, self.n_nodes(), self.n_elements())?;
        for i in 0..self.n_nodes() {
            let line: Vec<String> = self.node(i).iter().map(|c| format!("{c:?}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        for k in 0..self.n_elements() {
            let line: Vec<String> = self.element(k).iter().map(|i| i.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        writeln!(w, "boundary")?;
        if self.dim == 1 {
            for i in &self.boundary_nodes {
                writeln!(w, "{i}")?;
            }
        } else {
            for e in &self.boundary_edges {
                writeln!(w, "{} {}", e.nodes[0], e.nodes[1])?;
            }
        }
        Ok(())
    }

    pub fn from_flm_str(text: &str) -> Result<Mesh> {
        Mesh::read_flm(text.as_bytes())
    }

    /// Parses the native `.flm` format; the boundary section must agree with
    /// the boundary derived from the element connectivity.
    pub fn read_flm<R: BufRead>(r: R) -> Result<Mesh> {
        let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next_line = |what: &str| -> Result<(usize, String)> {
            loop {
                match lines.next() {
                    Some((_, Ok(l))) if l.trim().is_empty() => continue,
                    Some((n, Ok(l))) => return Ok((n, l)),
                    Some((_, Err(e))) => return Err(e.into()),
                    None => return Err(Error::Parse { line: 0, msg: format!("unexpected end of file, expected {what}") }),
                }
            }
        };
        let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };

        let (n, header) = next_line("header")?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "flm" {
            return Err(perr(n, "expected `flm <dim> <n_nodes> <n_elems>`"));
        }
        let dim: usize = parts[1].parse().map_err(|_| perr(n, "bad dimension"))?;
        let n_nodes: usize = parts[2].parse().map_err(|_| perr(n, "bad node count"))?;
        let n_elems: usize = parts[3].parse().map_err(|_| perr(n, "bad element count"))?;
        if dim != 1 && dim != 2 {
            return Err(perr(n, "dimension must be 1 or 2"));
        }

        let mut coords = Vec::with_capacity(n_nodes * dim);
        for _ in 0..n_nodes {
            let (n, l) = next_line("node")?;
            let vals: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| perr(n, "bad coordinate"))?;
            if vals.len() != dim {
                return Err(perr(n, "wrong number of coordinates"));
            }
            coords.extend(vals);
        }
        let mut elements = Vec::with_capacity(n_elems * (dim + 1));
        for _ in 0..n_elems {
            let (n, l) = next_line("element")?;
            let idx: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| perr(n, "bad node index"))?;
            if idx.len() != dim + 1 {
                return Err(perr(n, "wrong number of element nodes"));
            }
            elements.extend(idx);
        }
        let (n, l) = next_line("`boundary`")?;
        if l.trim() != "boundary" {
            return Err(perr(n, "expected `boundary`"));
        }
        let mesh = Mesh::from_parts(dim, coords, elements)?;

        let mut listed = Vec::new();
        for (n, l) in lines {
            let l = l?;
            if l.trim().is_empty() {
                continue;
            }
            let idx: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| perr(n, "bad boundary index"))?;
            if idx.len() != dim {
                return Err(perr(n, "wrong number of boundary indices"));
            }
            listed.push(idx);
        }
        let expected: Vec<Vec<usize>> = if dim == 1 {
            mesh.boundary_nodes.iter().map(|&i| vec![i]).collect()
        } else {
            mesh.boundary_edges.iter().map(|e| e.nodes.to_vec()).collect()
        };
        if listed != expected {
            return Err(Error::InvalidMesh("boundary section disagrees with element topology".into()));
        }
        Ok(mesh)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Uniform partition of `[a, b]` into `n_cells` cells.
pub fn generate_interval(a: f64, b: f64, n_cells: usize) -> Result<Mesh> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument("interval bounds must be finite".into()));
    }
    if a >= b {
        return Err(Error::InvalidArgument(format!("empty interval [{a}, {b}]")));
    }
    if n_cells == 0 {
        return Err(Error::InvalidArgument("need at least one cell".into()));
    }
    let len = b - a;
    let mut coords: Vec<f64> = (0..=n_cells).map(|i| a + len * (i as f64) / (n_cells as f64)).collect();
    coords[n_cells] = b;
    let elements = (0..n_cells).flat_map(|k| [k, k + 1]).collect();
    Mesh::from_parts(1, coords, elements)
}

fn polygon_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1]).sum::<f64>()
}

/// Checks that `vertices` describe a strictly convex, counterclockwise,
/// simple polygon.
pub fn validate_convex_polygon(vertices: &[[f64; 2]]) -> Result<()> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::InvalidArgument("a polygon needs at least 3 vertices".into()));
    }
    if vertices.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("non-finite polygon vertex".into()));
    }
    let scale = vertices
        .iter()
        .flat_map(|p| vertices.iter().map(move |q| dist(p, q)))
        .fold(0.0, f64::max);
    let mut turning = 0.0;
    for i in 0..n {
        let (p, q, r) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
        let (u, w) = ([q[0] - p[0], q[1] - p[1]], [r[0] - q[0], r[1] - q[1]]);
        let cross = u[0] * w[1] - u[1] * w[0];
        if cross <= 1e-12 * scale * scale {
            return Err(Error::InvalidArgument(format!(
                "polygon is not strictly convex and counterclockwise at vertex {}",
                (i + 1) % n
            )));
        }
        turning += cross.atan2(u[0] * w[0] + u[1] * w[1]);
    }
    // All left turns but winding twice or more means self-intersection.
    if (turning - 2.0 * std::f64::consts::PI).abs() > 1e-9 {
        return Err(Error::InvalidArgument("polygon is self-intersecting".into()));
    }
    Ok(())
}

/// Fan triangulation of a convex polygon from its centroid followed by
/// `refinements` rounds of uniform red refinement.
pub fn generate_convex_polygon(vertices: &[[f64; 2]], refinements: usize) -> Result<Mesh> {
    validate_convex_polygon(vertices)?;
    let n = vertices.len();
    let area = polygon_area(vertices);
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (p, q) = (vertices[i], vertices[(i + 1) % n]);
        let cross = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    let centroid = [cx / (6.0 * area), cy / (6.0 * area)];

    let mut coords: Vec<f64> = vertices.iter().flatten().copied().collect();
    coords.extend(centroid);
    let elements = (0..n).flat_map(|i| [i, (i + 1) % n, n]).collect();
    let mut mesh = Mesh::from_parts(2, coords, elements)?;
    for _ in 0..refinements {
        mesh = refine_red(&mesh)?;
    }
    Ok(mesh)
}

/// The unit square `(0,1)^2` as a counterclockwise vertex list.
pub const UNIT_SQUARE: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

/// Splits every triangle into four congruent children through its edge
/// midpoints. Existing nodes keep their indices; midpoints are appended in
/// order of first encounter.
pub fn refine_red(mesh: &Mesh) -> Result<Mesh> {
    if mesh.dim() != 2 {
        return Err(Error::InvalidArgument("red refinement applies to triangle meshes".into()));
    }
    let mut coords = mesh.coords.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, coords: &mut Vec<f64>| -> usize {
        *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
            let idx = coords.len() / 2;
            let (pa, pb) = ([coords[2 * a], coords[2 * a + 1]], [coords[2 * b], coords[2 * b + 1]]);
            coords.push(0.5 * (pa[0] + pb[0]));
            coords.push(0.5 * (pa[1] + pb[1]));
            idx
        })
    };
    let mut elements = Vec::with_capacity(mesh.elements.len() * 4);
    for k in 0..mesh.n_elements() {
        let e = mesh.element(k);
        let (a, b, c) = (e[0], e[1], e[2]);
        let ab = mid(a, b, &mut coords);
        let bc = mid(b, c, &mut coords);
        let ca = mid(c, a, &mut coords);
        elements.extend([a, ab, ca, ab, b, bc, ca, bc, c, ab, bc, ca]);
    }
    Mesh::from_parts(2, coords, elements)
}

/// Locates points in a mesh: binary search in 1D, bucket grid in 2D.
#[derive(Debug, Clone)]
pub struct PointLocator {
    // 1D: (left coordinate, element) sorted by coordinate.
    sorted: Vec<(f64, usize)>,
    // 2D bucket grid.
    origin: [f64; 2],
    cell: [f64; 2],
    shape: [usize; 2],
    buckets: Vec<Vec<usize>>,
    scale: f64,
}

impl PointLocator {
    pub fn new(mesh: &Mesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for i in 0..mesh.n_nodes() {
            for (d, &c) in mesh.node(i).iter().enumerate() {
                lo[d] = lo[d].min(c);
                hi[d] = hi[d].max(c);
            }
        }
        let scale = (0..mesh.dim()).map(|d| hi[d] - lo[d]).fold(0.0, f64::max);
        if mesh.dim() == 1 {
            let mut sorted: Vec<(f64, usize)> = (0..mesh.n_elements()).map(|k| (mesh.node(mesh.element(k)[0])[0], k)).collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            return PointLocator { sorted, origin: [lo[0], 0.0], cell: [1.0; 2], shape: [0; 2], buckets: Vec::new(), scale };
        }
        let side = ((mesh.n_elements() as f64).sqrt().ceil() as usize).max(1);
        let shape = [side, side];
        let cell = [((hi[0] - lo[0]) / side as f64).max(f64::MIN_POSITIVE), ((hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE)];
        let mut buckets = vec![Vec::new(); side * side];
        for k in 0..mesh.n_elements() {
            let e = mesh.element(k);
            let mut blo = [f64::INFINITY; 2];
            let mut bhi = [f64::NEG_INFINITY; 2];
            for &i in e {
                for d in 0..2 {
                    blo[d] = blo[d].min(mesh.node(i)[d]);
                    bhi[d] = bhi[d].max(mesh.node(i)[d]);
                }
            }
            let i0 = Self::clamp_index((blo[0] - lo[0]) / cell[0], side);
            let i1 = Self::clamp_index((bhi[0] - lo[0]) / cell[0], side);
            let j0 = Self::clamp_index((blo[1] - lo[1]) / cell[1], side);
            let j1 = Self::clamp_index((bhi[1] - lo[1]) / cell[1], side);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * side + i].push(k);
                }
            }
        }
        PointLocator { sorted: Vec::new(), origin: lo, cell, shape, buckets, scale }
    }

    fn clamp_index(t: f64, n: usize) -> usize {
        if t <= 0.0 {
            0
        } else {
            (t.floor() as usize).min(n - 1)
        }
    }

    /// Element containing `x` and the barycentric coordinates of `x` in it.
    pub fn locate(&self, mesh: &Mesh, x: &[f64]) -> Option<(usize, [f64; 3])> {
        if mesh.dim() == 1 {
            let tol = LOCATE_TOL * self.scale;
            let pos = self.sorted.partition_point(|&(left, _)| left <= x[0]);
            let candidates = [pos.saturating_sub(1), pos.min(self.sorted.len() - 1), pos.saturating_sub(2)];
            let mut best: Option<(usize, [f64; 3], f64)> = None;
            for &c in &candidates {
                let k = self.sorted[c].1;
                let e = mesh.element(k);
                let (a, b) = (mesh.node(e[0])[0], mesh.node(e[1])[0]);
                let slack = (a - x[0]).max(x[0] - b);
                if slack <= tol && best.as_ref().map_or(true, |bst| slack < bst.2) {
                    best = Some((k, mesh.barycentric(k, x), slack));
                }
            }
            return best.map(|(k, l, _)| (k, clamp_bary(l, 2)));
        }
        let i = ((x[0] - self.origin[0]) / self.cell[0]).floor();
        let j = ((x[1] - self.origin[1]) / self.cell[1]).floor();
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        // Neighbouring buckets cover points sitting on bucket borders.
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii < 0 || jj < 0 || ii >= self.shape[0] as i64 || jj >= self.shape[1] as i64 {
                    continue;
                }
                for &k in &self.buckets[jj as usize * self.shape[0] + ii as usize] {
                    let l = mesh.barycentric(k, x);
                    let m = l[0].min(l[1]).min(l[2]);
                    if m >= -LOCATE_TOL && best.as_ref().map_or(true, |b| m > b.2) {
                        best = Some((k, l, m));
                    }
                }
            }
        }
        best.map(|(k, l, _)| (k, clamp_bary(l, 3)))
    }
}

fn clamp_bary(mut l: [f64; 3], n: usize) -> [f64; 3] {
    let mut sum = 0.0;
    for v in l.iter_mut().take(n) {
        *v = v.max(0.0);
        sum += *v;
    }
    for v in l.iter_mut().take(n) {
        *v /= sum;
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pentagon() -> Vec<[f64; 2]> {
        // Irregular convex pentagon.
        vec![[0.0, 0.0], [1.2, 0.1], [1.5, 0.9], [0.7, 1.4], [-0.2, 0.8]]
    }

    #[test]
    fn interval_nodes_and_h() {
        let m = generate_interval(0.0, 1.0, 4).unwrap();
        assert_eq!(m.n_nodes(), 5);
        let xs: Vec<f64> = (0..5).map(|i| m.node(i)[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(m.h_max(), 0.25);
        assert_eq!(m.boundary_nodes(), &[0, 4]);

        let m = generate_interval(0.0, 1.0, 1).unwrap();
        assert_eq!((m.n_nodes(), m.n_elements()), (2, 1));

        let m = generate_interval(-1.0, 1.0, 1000).unwrap();
        assert_eq!(m.n_nodes(), 1001);
        assert!((m.h_max() - 0.002).abs() < 1e-15);
    }

    #[test]
    fn interval_rejects_bad_bounds() {
        assert!(generate_interval(1.0, 1.0, 3).is_err());
        assert!(generate_interval(2.0, 1.0, 3).is_err());
        assert!(generate_interval(f64::NAN, 1.0, 3).is_err());
        assert!(generate_interval(0.0, f64::INFINITY, 3).is_err());
        assert!(generate_interval(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn interval_lengths_sum() {
        let m = generate_interval(-0.3, 2.7, 77).unwrap();
        let total: f64 = (0..m.n_elements()).map(|k| m.element_measure(k)).sum();
        assert!((total - 3.0).abs() <= 1e-12 * 3.0);
    }

    #[test]
    fn square_fan_and_refinement() {
        let m0 = generate_convex_polygon(&UNIT_SQUARE, 0).unwrap();
        assert_eq!(m0.n_elements(), 4);
        assert_eq!(m0.n_nodes(), 5);
        assert_eq!(m0.node(4), &[0.5, 0.5]);
        assert_eq!(m0.h_max(), 1.0);
        assert_eq!(m0.boundary_edges().len(), 4);

        let m3 = generate_convex_polygon(&UNIT_SQUARE, 3).unwrap();
        assert_eq!(m3.n_elements(), 256);
        assert!((m3.h_max() - m0.h_max() / 8.0).abs() < 1e-15);
        assert!((m3.measure() - 1.0).abs() < 1e-12);
        m3.check_conformity().unwrap();
        assert_eq!(m3.boundary_edges().len(), 32);
    }

    #[test]
    fn red_refinement_quadruples_and_halves() {
        let mut m = generate_convex_polygon(&pentagon(), 0).unwrap();
        let area = polygon_area(&pentagon());
        for _ in 0..4 {
            let r = refine_red(&m).unwrap();
            assert_eq!(r.n_elements(), 4 * m.n_elements());
            assert!((r.h_max() - 0.5 * m.h_max()).abs() <= 1e-14 * m.h_max());
            assert!((r.measure() - area).abs() <= 1e-12 * area);
            r.check_conformity().unwrap();
            m = r;
        }
    }

    #[test]
    fn quasi_uniformity_values() {
        let q = generate_interval(0.0, 1.0, 10).unwrap().quasi_uniformity();
        assert!((q.sigma - 1.0).abs() < 1e-12 && (q.tau - 1.0).abs() < 1e-12);

        // Fan triangle of the unit square: legs sqrt(1/2), hypotenuse 1,
        // area 1/4, so rho = 4A/P = 1/(1 + sqrt 2) and sigma = 1 + sqrt 2.
        let fan = generate_convex_polygon(&UNIT_SQUARE, 0).unwrap();
        let q = fan.quasi_uniformity();
        assert!((q.sigma - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!((q.tau - 1.0).abs() < 1e-12);

        let refined = refine_red(&fan).unwrap().quasi_uniformity();
        assert!((refined.sigma - q.sigma).abs() < 1e-10);

        let p0 = generate_convex_polygon(&pentagon(), 0).unwrap().quasi_uniformity();
        let p3 = generate_convex_polygon(&pentagon(), 3).unwrap().quasi_uniformity();
        assert!(p3.sigma <= 2.0 * p0.sigma);
        assert!((p3.sigma - p0.sigma).abs() < 1e-9);
    }

    #[test]
    fn polygon_validation() {
        // clockwise
        let cw: Vec<[f64; 2]> = UNIT_SQUARE.iter().rev().copied().collect();
        assert!(generate_convex_polygon(&cw, 0).is_err());
        // non-convex
        let dart = [[0.0, 0.0], [1.0, 0.0], [0.3, 0.3], [0.0, 1.0]];
        assert!(generate_convex_polygon(&dart, 0).is_err());
        // collinear vertex
        let flat = [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(generate_convex_polygon(&flat, 0).is_err());
        // pentagram: all left turns, winds twice
        let star: Vec<[f64; 2]> = (0..5)
            .map(|i| {
                let t = std::f64::consts::FRAC_PI_2 + 4.0 * std::f64::consts::PI * i as f64 / 5.0;
                [t.cos(), t.sin()]
            })
            .collect();
        assert!(generate_convex_polygon(&star, 0).is_err());
        assert!(generate_convex_polygon(&[[0.0, 0.0], [1.0, 0.0]], 0).is_err());
    }

    #[test]
    fn nonconforming_mesh_rejected() {
        // Two triangles on the left of x = 1, one large on the right sharing
        // the edge (1,0)-(1,2) only through a hanging node at (1,1).
        let coords = vec![0.0, 0.0, 1.0, 0.0, 1.0, 2.0, 0.0, 2.0, 1.0, 1.0, 2.0, 1.0];
        let elements = vec![0, 1, 4, 0, 4, 3, 4, 2, 3, 1, 5, 2];
        assert!(Mesh::from_parts(2, coords, elements).is_err());
    }

    #[test]
    fn flm_round_trip_exact() {
        for m in [
            generate_interval(-1.0, 1.0, 7).unwrap(),
            generate_convex_polygon(&pentagon(), 2).unwrap(),
        ] {
            let text = m.to_flm_string();
            let back = Mesh::from_flm_str(&text).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.to_flm_string(), text);
        }
    }

    #[test]
    fn flm_header_format() {
        let text = generate_interval(0.0, 1.0, 2).unwrap().to_flm_string();
        assert_eq!(text, "flm 1 3 2\n0.0\n0.5\n1.0\n0 1\n1 2\nboundary\n0\n2\n");
    }

    #[test]
    fn flm_rejects_garbage() {
        assert!(Mesh::from_flm_str("flm 3 1 1\n").is_err());
        assert!(Mesh::from_flm_str("flm 1 2 1\n0\n1\n0 1\n").is_err());
        assert!(Mesh::from_flm_str("flm 1 2 1\n0\nx\n0 1\nboundary\n0\n1\n").is_err());
        assert!(Mesh::from_flm_str("flm 1 2 1\n0\n1\n0 1\nboundary\n0\n").is_err());
    }

    #[test]
    fn locate_points() {
        let m = generate_convex_polygon(&UNIT_SQUARE, 3).unwrap();
        let loc = PointLocator::new(&m);
        for &p in &[[0.0, 0.0], [1.0, 1.0], [0.3, 0.7], [0.5, 0.5], [1.0, 0.123]] {
            let (k, l) = loc.locate(&m, &p).unwrap();
            let e = m.element(k);
            let x: f64 = (0..3).map(|a| l[a] * m.node(e[a])[0]).sum();
            let y: f64 = (0..3).map(|a| l[a] * m.node(e[a])[1]).sum();
            assert!((x - p[0]).abs() < 1e-12 && (y - p[1]).abs() < 1e-12);
        }
        assert!(loc.locate(&m, &[1.1, 0.5]).is_none());

        let m = generate_interval(0.0, 1.0, 8).unwrap();
        let loc = PointLocator::new(&m);
        assert_eq!(loc.locate(&m, &[0.0]).unwrap().0, 0);
        assert_eq!(loc.locate(&m, &[1.0]).unwrap().0, 7);
        let (k, l) = loc.locate(&m, &[0.3]).unwrap();
        assert_eq!(k, 2);
        assert!((l[1] - 0.4).abs() < 1e-12);
        assert!(loc.locate(&m, &[-0.01]).is_none());
    }
}
