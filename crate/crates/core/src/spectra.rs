//! Block spectra, planar regions, polynomial hulls and Berezin probes.
//!
//! For a boundary-continuous symbol the spectrum of `T_j` is the closure of
//! the union of block spectra together with the boundary image
//! `c(∂B^{k_j})`, and its polynomially convex hull is the union of the point
//! spectrum with the filled-in boundary image. Regions are rasterized on a
//! square grid; the hull of a region is the complement of the grid component
//! of its complement that touches the border.

use std::collections::VecDeque;
use std::sync::Arc;

use nalgebra::linalg::Schur;
use serde::{Deserialize, Serialize};

use crate::assembly::{spectral_norm, Assembler, BlockMatrix};
use crate::lattice::{enumerate_block_indices, ln_monomial_norm_sq, MultiIndex, PartitionConfig};
use crate::par::map_collect;
use crate::special::ln_factorial;
use crate::symbols::PseudoHomogeneousSymbol;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Default relative clustering tolerance: eigenvalues closer than
/// `CLUSTER_REL · (1 + ‖B‖)` are merged.
pub const CLUSTER_REL: f64 = 1e-8;

/// Eigenvalues of one block, clustered, with algebraic multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub group: usize,
    pub degree: u32,
    /// `(eigenvalue, multiplicity)`, sorted by real then imaginary part.
    pub eigenvalues: Vec<(C64, usize)>,
    pub tol: f64,
    pub norm: f64,
}

impl EigenData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.1).sum()
    }

    pub fn distinct(&self) -> Vec<C64> {
        self.eigenvalues.iter().map(|e| e.0).collect()
    }
}

/// Raw eigenvalues of a dense matrix by complex Schur decomposition.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(vec![]);
    }
    let max_iter = 1000 * n.max(10);
    let schur = Schur::try_new(m.clone(), f64::EPSILON, max_iter).ok_or(Error::NoConvergence { iterations: max_iter })?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Groups values closer than `tol` (single linkage) and returns cluster
/// means with sizes, sorted by `(re, im)`.
pub fn cluster(values: &[C64], tol: f64) -> Vec<(C64, usize)> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut i = i;
        while p[i] != r {
            let next = p[i];
            p[i] = r;
            i = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, C64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => {
                g.1 += values[i];
                g.2 += 1;
            }
            None => groups.push((r, values[i], 1)),
        }
    }
    let mut out: Vec<(C64, usize)> = groups.into_iter().map(|(_, s, k)| (s / k as f64, k)).collect();
    out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    out
}

/// Eigenvalues of `m` clustered at `tol`, or at `CLUSTER_REL · (1 + ‖m‖)`
/// when `tol` is `None`.
pub fn matrix_eigen_data(m: &CMatrix, group: usize, degree: u32, tol: Option<f64>) -> Result<EigenData> {
    if m.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite { context: "block entries".into() });
    }
    let norm = spectral_norm(m);
    let tol = tol.unwrap_or(CLUSTER_REL * (1.0 + norm));
    let raw = eigenvalues(m)?;
    Ok(EigenData { group, degree, eigenvalues: cluster(&raw, tol), tol, norm })
}

pub fn block_eigenvalues(b: &BlockMatrix, tol: Option<f64>) -> Result<EigenData> {
    matrix_eigen_data(&b.matrix, b.group, b.degree, tol)
}

/// A unit vector `v` minimizing `‖(m - zeta) v‖`, with that residual.
pub fn eigenvector(m: &CMatrix, zeta: C64) -> (CVector, f64) {
    let n = m.nrows();
    let shifted = m - CMatrix::identity(n, n) * zeta;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (imin, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let v: CVector = v_t.row(imin).adjoint().into_owned();
    (v, smin)
}

/// Block spectra of `T_j` for `d = 0..=dmax`, one entry per degree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointSpectrum {
    pub group: usize,
    pub per_degree: Vec<EigenData>,
}

impl PointSpectrum {
    /// All distinct eigenvalues with the degree they came from.
    pub fn points(&self) -> Vec<(C64, u32, usize)> {
        self.per_degree
            .iter()
            .flat_map(|e| e.eigenvalues.iter().map(move |&(z, k)| (z, e.degree, k)))
            .collect()
    }
}

pub fn point_spectrum(asm: &Assembler, c: &PseudoHomogeneousSymbol, dmax: u32, tol: Option<f64>) -> Result<PointSpectrum> {
    let blocks = asm.blocks(c, dmax)?;
    let per_degree = map_collect(&blocks, |b| block_eigenvalues(b, tol)).into_iter().collect::<Result<_>>()?;
    Ok(PointSpectrum { group: c.group(), per_degree })
}

/// Square window of the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub xmin: f64,
    pub ymin: f64,
    pub extent: f64,
}

impl Window {
    /// Smallest square containing `points`, enlarged by `margin` of its side
    /// on every edge and never thinner than `min_extent`.
    pub fn around(points: &[C64], margin: f64, min_extent: f64) -> Window {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            x0 = x0.min(p.re);
            x1 = x1.max(p.re);
            y0 = y0.min(p.im);
            y1 = y1.max(p.im);
        }
        if points.is_empty() {
            (x0, x1, y0, y1) = (0.0, 0.0, 0.0, 0.0);
        }
        let side = (x1 - x0).max(y1 - y0).max(min_extent);
        let extent = side * (1.0 + 2.0 * margin);
        Window { xmin: 0.5 * (x0 + x1) - 0.5 * extent, ymin: 0.5 * (y0 + y1) - 0.5 * extent, extent }
    }
}

/// Occupancy grid over a [`Window`]. Cell `(ix, iy)` covers
/// `[xmin + ix h, xmin + (ix+1) h) × [ymin + iy h, ymin + (iy+1) h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarRegion {
    pub window: Window,
    pub res: usize,
    pub cells: Vec<bool>,
    pub provenance: String,
}

/// Run-length encoding of a region, row-major from the bottom row; runs
/// alternate starting with empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRle {
    pub window: Window,
    pub res: usize,
    pub provenance: String,
    pub runs: Vec<u32>,
}

impl PlanarRegion {
    pub fn empty(window: Window, res: usize, provenance: impl Into<String>) -> Self {
        assert!(res >= 2, "grid resolution must be at least 2");
        PlanarRegion { window, res, cells: vec![false; res * res], provenance: provenance.into() }
    }

    pub fn cell_size(&self) -> f64 {
        self.window.extent / self.res as f64
    }

    fn cell_of(&self, z: C64) -> Option<(usize, usize)> {
        let h = self.cell_size();
        let fx = ((z.re - self.window.xmin) / h).floor();
        let fy = ((z.im - self.window.ymin) / h).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.res as f64 || fy >= self.res as f64 || !fx.is_finite() || !fy.is_finite() {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn center(&self, ix: usize, iy: usize) -> C64 {
        let h = self.cell_size();
        C64::new(self.window.xmin + (ix as f64 + 0.5) * h, self.window.ymin + (iy as f64 + 0.5) * h)
    }

    pub fn get(&self, ix: usize, iy: usize) -> bool {
        self.cells[iy * self.res + ix]
    }

    fn set(&mut self, ix: usize, iy: usize) {
        self.cells[iy * self.res + ix] = true;
    }

    pub fn add_point(&mut self, z: C64) {
        if let Some((ix, iy)) = self.cell_of(z) {
            self.set(ix, iy);
        }
    }

    /// Marks an 8-connected digital segment between the cells of `a` and `b`.
    pub fn add_segment(&mut self, a: C64, b: C64) {
        let h = self.cell_size();
        let to_cell = |z: C64| (((z.re - self.window.xmin) / h).floor() as i64, ((z.im - self.window.ymin) / h).floor() as i64);
        let (mut x0, mut y0) = to_cell(a);
        let (x1, y1) = to_cell(b);
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        let r = self.res as i64;
        loop {
            if (0..r).contains(&x0) && (0..r).contains(&y0) {
                self.set(x0 as usize, y0 as usize);
            }
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }

    /// Marks the cells whose centers lie in the triangle, plus its edges.
    pub fn add_triangle(&mut self, a: C64, b: C64, c: C64) {
        self.add_segment(a, b);
        self.add_segment(b, c);
        self.add_segment(c, a);
        let area = (b - a).re * (c - a).im - (b - a).im * (c - a).re;
        if area.abs() < 1e-300 {
            return;
        }
        let h = self.cell_size();
        let lo = |v: f64, o: f64| (((v - o) / h).floor().max(0.0) as usize).min(self.res - 1);
        let (x0, x1) = (lo(a.re.min(b.re).min(c.re), self.window.xmin), lo(a.re.max(b.re).max(c.re), self.window.xmin));
        let (y0, y1) = (lo(a.im.min(b.im).min(c.im), self.window.ymin), lo(a.im.max(b.im).max(c.im), self.window.ymin));
        let edge = |p: C64, q: C64, z: C64| (q - p).re * (z - p).im - (q - p).im * (z - p).re;
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                let z = self.center(ix, iy);
                let (e1, e2, e3) = (edge(a, b, z), edge(b, c, z), edge(c, a, z));
                if (e1 >= 0.0 && e2 >= 0.0 && e3 >= 0.0) || (e1 <= 0.0 && e2 <= 0.0 && e3 <= 0.0) {
                    self.set(ix, iy);
                }
            }
        }
    }

    pub fn from_points(points: &[C64], window: Window, res: usize, provenance: impl Into<String>) -> Self {
        let mut r = Self::empty(window, res, provenance);
        for &p in points {
            r.add_point(p);
        }
        r
    }

    /// Closed polyline through `points`.
    pub fn from_closed_curve(points: &[C64], window: Window, res: usize) -> Self {
        let mut r = Self::empty(window, res, "curve samples");
        for i in 0..points.len() {
            r.add_segment(points[i], points[(i + 1) % points.len()]);
        }
        r
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.cell_size().powi(2)
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.window == other.window && self.res == other.res
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::OutOfRange("regions live on different grids".into()));
        }
        Ok(PlanarRegion {
            window: self.window,
            res: self.res,
            cells: self.cells.iter().zip(&other.cells).map(|(&a, &b)| a || b).collect(),
            provenance: format!("{} ∪ {}", self.provenance, other.provenance),
        })
    }

    /// Number of cells in `self` but not in `other`.
    pub fn count_minus(&self, other: &Self) -> Result<usize> {
        if !self.same_grid(other) {
            return Err(Error::OutOfRange("regions live on different grids".into()));
        }
        Ok(self.cells.iter().zip(&other.cells).filter(|(&a, &b)| a && !b).count())
    }

    pub fn contains_region(&self, other: &Self) -> Result<bool> {
        Ok(other.count_minus(self)? == 0)
    }

    /// Occupied cell centers.
    pub fn occupied_centers(&self) -> Vec<C64> {
        let mut out = Vec::new();
        for iy in 0..self.res {
            for ix in 0..self.res {
                if self.get(ix, iy) {
                    out.push(self.center(ix, iy));
                }
            }
        }
        out
    }

    /// Distance from `z` to the nearest occupied cell center.
    pub fn distance_to(&self, z: C64) -> f64 {
        self.occupied_centers().iter().map(|c| (c - z).norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn to_rle(&self) -> RegionRle {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len: u32 = 0;
        for &c in &self.cells {
            if c == current {
                len += 1;
            } else {
                runs.push(len);
                current = c;
                len = 1;
            }
        }
        runs.push(len);
        RegionRle { window: self.window, res: self.res, provenance: self.provenance.clone(), runs }
    }

    pub fn from_rle(rle: &RegionRle) -> Result<Self> {
        let mut cells = Vec::with_capacity(rle.res * rle.res);
        let mut current = false;
        for &r in &rle.runs {
            cells.extend(std::iter::repeat_n(current, r as usize));
            current = !current;
        }
        if cells.len() != rle.res * rle.res {
            return Err(Error::OutOfRange("run lengths do not cover the grid".into()));
        }
        Ok(PlanarRegion { window: rle.window, res: rle.res, cells, provenance: rle.provenance.clone() })
    }

    /// SVG document drawing every horizontal run of occupied cells as a
    /// rectangle in complex-plane coordinates (imaginary axis up).
    pub fn to_svg(&self, fill: &str) -> String {
        let h = self.cell_size();
        let w = self.window;
        let mut path = String::new();
        for iy in 0..self.res {
            let mut ix = 0;
            while ix < self.res {
                if !self.get(ix, iy) {
                    ix += 1;
                    continue;
                }
                let start = ix;
                while ix < self.res && self.get(ix, iy) {
                    ix += 1;
                }
                let x = w.xmin + start as f64 * h;
                let y = -(w.ymin + (iy + 1) as f64 * h);
                path.push_str(&format!("M{x:.6} {y:.6}h{:.6}v{h:.6}h{:.6}z", (ix - start) as f64 * h, -((ix - start) as f64 * h)));
            }
        }
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\">\n<path fill=\"{fill}\" d=\"{path}\"/>\n</svg>\n",
            w.xmin,
            -(w.ymin + w.extent),
            w.extent,
            w.extent
        )
    }
}

/// Polynomially convex hull at grid level: the region together with every
/// cell not reachable from the border through empty cells (4-connectivity).
pub fn polynomial_hull_2d(region: &PlanarRegion) -> PlanarRegion {
    let r = region.res;
    let mut outside = vec![false; r * r];
    let mut queue = VecDeque::new();
    let push = |ix: usize, iy: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<(usize, usize)>| {
        let i = iy * r + ix;
        if !region.cells[i] && !outside[i] {
            outside[i] = true;
            queue.push_back((ix, iy));
        }
    };
    for k in 0..r {
        push(k, 0, &mut outside, &mut queue);
        push(k, r - 1, &mut outside, &mut queue);
        push(0, k, &mut outside, &mut queue);
        push(r - 1, k, &mut outside, &mut queue);
    }
    while let Some((ix, iy)) = queue.pop_front() {
        if ix > 0 {
            push(ix - 1, iy, &mut outside, &mut queue);
        }
        if ix + 1 < r {
            push(ix + 1, iy, &mut outside, &mut queue);
        }
        if iy > 0 {
            push(ix, iy - 1, &mut outside, &mut queue);
        }
        if iy + 1 < r {
            push(ix, iy + 1, &mut outside, &mut queue);
        }
    }
    PlanarRegion {
        window: region.window,
        res: r,
        cells: outside.iter().map(|&o| !o).collect(),
        provenance: format!("hull({})", region.provenance),
    }
}

/// Samples of the boundary image `c(∂B^k)`, on a grid in hyperspherical
/// angles for `s` and phases `t_2..t_k` (with `t_1 = 1` by invariance).
#[derive(Debug, Clone)]
pub struct BoundaryImage {
    pub axes: Vec<usize>,
    pub periodic: Vec<bool>,
    pub values: Vec<C64>,
}

impl BoundaryImage {
    pub fn sample(c: &PseudoHomogeneousSymbol, per_axis: usize) -> Result<Self> {
        let k = c.kj();
        if k == 1 {
            return Ok(BoundaryImage { axes: vec![], periodic: vec![], values: vec![c.eval(&[1.0], &[C64::new(1.0, 0.0)])?] });
        }
        let n = per_axis.max(2);
        let mut axes = vec![n; k - 1];
        axes.extend(vec![n; k - 1]);
        let mut periodic = vec![false; k - 1];
        periodic.extend(vec![true; k - 1]);
        let total: usize = axes.iter().product();
        let indices: Vec<usize> = (0..total).collect();
        let values = map_collect(&indices, |&flat| {
            let mut idx = vec![0usize; axes.len()];
            let mut rest = flat;
            for a in (0..axes.len()).rev() {
                idx[a] = rest % axes[a];
                rest /= axes[a];
            }
            // s_1 = cos φ_1, s_2 = sin φ_1 cos φ_2, ..., s_k = ∏ sin φ_i.
            let mut s = vec![0.0; k];
            let mut prod = 1.0;
            for i in 0..k - 1 {
                let phi = std::f64::consts::FRAC_PI_2 * idx[i] as f64 / (n - 1) as f64;
                s[i] = prod * phi.cos();
                prod *= phi.sin();
            }
            s[k - 1] = prod;
            let mut t = vec![C64::new(1.0, 0.0); k];
            for i in 0..k - 1 {
                t[i + 1] = C64::from_polar(1.0, std::f64::consts::TAU * idx[k - 1 + i] as f64 / n as f64);
            }
            c.eval(&s, &t)
        });
        Ok(BoundaryImage { axes, periodic, values: values.into_iter().collect::<Result<_>>()? })
    }

    /// Rasterizes the image: every 2-face of the parameter grid is filled as
    /// two triangles, so rank-two parts of the map come out solid and
    /// rank-one parts come out as connected curves.
    pub fn rasterize(&self, window: Window, res: usize) -> PlanarRegion {
        let mut region = PlanarRegion::empty(window, res, "boundary image");
        if self.axes.is_empty() {
            region.add_point(self.values[0]);
            return region;
        }
        let dims = self.axes.len();
        let strides: Vec<usize> = (0..dims).map(|a| self.axes[a + 1..].iter().product()).collect();
        let total = self.values.len();
        let step = |flat: usize, a: usize| -> Option<usize> {
            let i = (flat / strides[a]) % self.axes[a];
            if i + 1 < self.axes[a] {
                Some(flat + strides[a])
            } else if self.periodic[a] {
                Some(flat - i * strides[a])
            } else {
                None
            }
        };
        for flat in 0..total {
            let z = self.values[flat];
            for a in 0..dims {
                let Some(fa) = step(flat, a) else { continue };
                region.add_segment(z, self.values[fa]);
                for b in a + 1..dims {
                    let (Some(fb), Some(fab)) = (step(flat, b), step(fa, b)) else { continue };
                    region.add_triangle(z, self.values[fa], self.values[fab]);
                    region.add_triangle(z, self.values[fab], self.values[fb]);
                }
            }
        }
        region
    }
}

/// Boundary image of `c` rasterized on its own window.
pub fn essential_spectrum_estimate(c: &PseudoHomogeneousSymbol, per_axis: usize, res: usize) -> Result<PlanarRegion> {
    require_boundary_flag(c)?;
    let image = BoundaryImage::sample(c, per_axis)?;
    Ok(image.rasterize(Window::around(&image.values, 0.1, 1e-3), res))
}

fn require_boundary_flag(c: &PseudoHomogeneousSymbol) -> Result<()> {
    if !c.boundary_continuous() {
        return Err(Error::InvalidSymbol(format!(
            "symbol on group {} is not flagged boundary-continuous; its essential spectrum is not estimated",
            c.group() + 1
        )));
    }
    Ok(())
}

/// Spectrum and hull of `T_j` on a common grid.
#[derive(Debug, Clone)]
pub struct SpectrumHull {
    pub point: PointSpectrum,
    pub essential: PlanarRegion,
    pub spectrum: PlanarRegion,
    pub hull: PlanarRegion,
}

/// Parameters for region construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    /// Grid cells per side.
    pub resolution: usize,
    /// Parameter samples per axis of the boundary image.
    pub boundary_samples: usize,
    /// Minimum number of hull cells outside the spectrum that counts as a
    /// failure of polynomial convexity.
    pub cell_tolerance: usize,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig { resolution: 512, boundary_samples: 96, cell_tolerance: 100 }
    }
}

pub fn spectrum_with_hull(
    asm: &Assembler,
    c: &PseudoHomogeneousSymbol,
    dmax: u32,
    rc: &RegionConfig,
) -> Result<SpectrumHull> {
    require_boundary_flag(c)?;
    let point = point_spectrum(asm, c, dmax, None)?;
    let image = BoundaryImage::sample(c, rc.boundary_samples)?;
    let pts: Vec<C64> = point.points().iter().map(|p| p.0).collect();
    let mut all = image.values.clone();
    all.extend(&pts);
    let window = Window::around(&all, 0.1, 1e-3);
    let essential = image.rasterize(window, rc.resolution);
    let points_region = PlanarRegion::from_points(&pts, window, rc.resolution, "point spectrum");
    let spectrum = points_region.union(&essential)?;
    let hull = points_region.union(&polynomial_hull_2d(&essential))?;
    Ok(SpectrumHull { point, essential, spectrum, hull })
}

/// Per-group result of [`is_inverse_closed`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseClosedGroup {
    pub group: usize,
    pub hull_minus_spectrum_cells: usize,
    pub hull_minus_spectrum_area: f64,
    pub polynomially_convex: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseClosedReport {
    pub inverse_closed: bool,
    pub cell_tolerance: usize,
    pub groups: Vec<InverseClosedGroup>,
}

/// The algebra is inverse closed when every `sp(T_j)` is polynomially
/// convex; decided at grid level with `rc.cell_tolerance`.
pub fn is_inverse_closed(
    asm: &Assembler,
    cs: &[&PseudoHomogeneousSymbol],
    dmax: u32,
    rc: &RegionConfig,
) -> Result<InverseClosedReport> {
    let mut groups = Vec::new();
    for c in cs {
        let sh = spectrum_with_hull(asm, c, dmax, rc)?;
        let cells = sh.hull.count_minus(&sh.spectrum)?;
        groups.push(InverseClosedGroup {
            group: c.group(),
            hull_minus_spectrum_cells: cells,
            hull_minus_spectrum_area: cells as f64 * sh.hull.cell_size().powi(2),
            polynomially_convex: cells <= rc.cell_tolerance,
        });
    }
    Ok(InverseClosedReport {
        inverse_closed: groups.iter().all(|g| g.polynomially_convex),
        cell_tolerance: rc.cell_tolerance,
        groups,
    })
}

/// Result of [`accumulation_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccumulationReport {
    pub radius: f64,
    pub min_degrees: usize,
    pub candidates: Vec<C64>,
    pub distances: Vec<f64>,
    pub violations: Vec<C64>,
}

/// Points of the point spectrum near which eigenvalues from at least
/// `min_degrees` distinct degrees cluster within `radius`; each must lie
/// within `tol` of the essential spectrum estimate.
pub fn accumulation_check(
    point: &PointSpectrum,
    essential: &PlanarRegion,
    radius: f64,
    min_degrees: usize,
    tol: f64,
) -> AccumulationReport {
    let pts = point.points();
    let mut candidates: Vec<C64> = Vec::new();
    for &(z, _, _) in &pts {
        let mut degrees: Vec<u32> = pts.iter().filter(|p| (p.0 - z).norm() <= radius).map(|p| p.1).collect();
        degrees.sort_unstable();
        degrees.dedup();
        if degrees.len() >= min_degrees && !candidates.iter().any(|c| (c - z).norm() <= radius) {
            candidates.push(z);
        }
    }
    let slack = essential.cell_size() * std::f64::consts::SQRT_2;
    let distances: Vec<f64> = candidates.iter().map(|&z| essential.distance_to(z)).collect();
    let violations = candidates
        .iter()
        .zip(&distances)
        .filter(|(_, &d)| d > tol + slack)
        .map(|(&z, _)| z)
        .collect();
    AccumulationReport { radius, min_degrees, candidates, distances, violations }
}

/// Berezin-type probe of `T_j` at `w` along a list of degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelProbe {
    pub group: usize,
    pub w: Vec<C64>,
    pub degrees: Vec<u32>,
    pub values: Vec<C64>,
    /// Norm of the normalized kernel as reconstructed from its coefficients.
    pub kernel_norms: Vec<f64>,
    /// `c(w / |w|)`.
    pub limit: C64,
}

/// Coefficients of the normalized degree-`d` kernel `k_d(·, w)` in the
/// orthonormal monomial basis of the unweighted space on `B^k`, in block
/// order, together with `‖k_d‖` recomputed from them.
///
/// `K_d(z, w) = (k+d)!/(k! d!) <z, w>^d` has norm squared
/// `(k+d)!/(k! d!) |w|^{2d}`; the coefficient of `e_alpha` is
/// `(k+d)!/(k! d!) · d!/alpha! · conj(w)^alpha · ‖z^alpha‖`.
pub fn normalized_kernel(w: &[C64], d: u32) -> Result<(CVector, f64)> {
    let k = w.len() as u32;
    let wn: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if wn == 0.0 || wn >= 1.0 {
        return Err(Error::OutOfRange("base point must satisfy 0 < |w| < 1".into()));
    }
    let cfg = PartitionConfig::new(vec![k], 0.0)?;
    let basis = enumerate_block_indices(k, d);
    let ln_front = ln_factorial(k + d) - ln_factorial(k) - ln_factorial(d);
    let ln_kernel_norm = 0.5 * (ln_front + 2.0 * d as f64 * wn.ln());
    let mut v = CVector::zeros(basis.len());
    for (i, alpha) in basis.indices().iter().enumerate() {
        let mut phase = C64::new(1.0, 0.0);
        let mut ln_mod = ln_front + ln_factorial(d);
        let mut zero = false;
        for (l, &a) in alpha.iter().enumerate() {
            ln_mod -= ln_factorial(a);
            if a > 0 {
                if w[l].norm() == 0.0 {
                    zero = true;
                    break;
                }
                ln_mod += a as f64 * w[l].norm().ln();
                phase *= C64::from_polar(1.0, -w[l].arg()).powi(a as i32);
            }
        }
        if zero {
            continue;
        }
        ln_mod += 0.5 * ln_monomial_norm_sq(&MultiIndex(alpha.clone()), &cfg)?;
        v[i] = phase * (ln_mod - ln_kernel_norm).exp();
    }
    let norm = v.norm();
    Ok((v, norm))
}

/// `<T_c k_d(·,w), k_d(·,w)>` for each degree in `degrees`.
pub fn berezin_sequence(
    asm: &Assembler,
    c: &PseudoHomogeneousSymbol,
    w: &[C64],
    degrees: &[u32],
) -> Result<KernelProbe> {
    if w.len() != c.kj() {
        return Err(Error::OutOfRange(format!("base point must have {} coordinates", c.kj())));
    }
    let results: Vec<Result<(C64, f64)>> = map_collect(degrees, |&d| {
        let (v, norm) = normalized_kernel(w, d)?;
        let b = asm.block(c, d)?;
        let value = (v.adjoint() * &b.matrix * &v)[(0, 0)];
        Ok((value, norm))
    });
    let mut values = Vec::new();
    let mut kernel_norms = Vec::new();
    for r in results {
        let (v, n) = r?;
        values.push(v);
        kernel_norms.push(n);
    }
    let wn: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let s: Vec<f64> = w.iter().map(|z| z.norm() / wn).collect();
    let t: Vec<C64> = w.iter().map(|z| if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) }).collect();
    let limit = c.eval(&s, &t)?;
    Ok(KernelProbe { group: c.group(), w: w.to_vec(), degrees: degrees.to_vec(), values, kernel_norms, limit })
}

/// Builds the global vector `U*(v_1 ⊗ ... ⊗ v_m)` on `H_kappa` inside the
/// truncation.
pub fn tensor_vector(basis: &crate::lattice::GlobalBasis, kappa: &[u32], factors: &[CVector]) -> Result<CVector> {
    let pos = basis
        .kappa_index(kappa)
        .ok_or_else(|| Error::OutOfRange(format!("kappa {kappa:?} is not in the truncation")))?;
    let mut t = CVector::from_element(1, C64::new(1.0, 0.0));
    for f in factors {
        t = t.kronecker(f);
    }
    let range = basis.range(pos);
    if t.len() != range.len() {
        return Err(Error::OutOfRange("tensor factors do not match the block dimensions".into()));
    }
    let mut g = CVector::zeros(basis.dim());
    g.rows_mut(range.start, range.len()).copy_from(&t);
    Ok(g)
}

/// Shared handle for region outputs.
pub type SharedRegion = Arc<PlanarRegion>;
