//! Vector measures on `T = [0,1]` with values in `R^n`.
//!
//! A measure is a finite set of atoms plus a piecewise-constant density at a
//! single master resolution `N`: cell `j` covers `[j/N, (j+1)/N)` and its
//! mass is spread uniformly. This class is closed under pushforward by
//! affine maps (atoms go to atoms, cells are re-binned onto the master grid,
//! constant maps collapse everything to one atom) and under linear maps of
//! the values, so a Markov-type operator acts on it as a finite linear map.
//!
//! All sums run in a fixed order (atoms by ascending location, then cells by
//! index, coordinates in order) so results are bit-reproducible.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::borel::BorelSet;
use crate::error::{Error, Result};
use crate::function::{dot, norm, TestFunction};
use crate::linalg::LinearOperator;

/// Locations closer than this are the same point.
pub const LOC_EPS: f64 = 1e-12;

/// Default master resolution, `3^7`, so the triadic maps send cells into cells.
pub const DEFAULT_RESOLUTION: usize = 2187;

/// A validated location in `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Point(f64);

impl Point {
    pub fn new(t: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&t) {
            Ok(Self(t))
        } else {
            Err(Error::InvalidMeasure(format!("point {t} outside [0,1]")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `d(x, y) = |x - y|`
    pub fn distance(self, other: Point) -> f64 {
        (self.0 - other.0).abs()
    }
}

impl TryFrom<f64> for Point {
    type Error = Error;

    fn try_from(t: f64) -> Result<Self> {
        Self::new(t)
    }
}

impl From<Point> for f64 {
    fn from(p: Point) -> f64 {
        p.0
    }
}

/// Affine self-map `t -> slope * t + intercept` of `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapRepr", into = "MapRepr")]
pub struct LipMap {
    slope: f64,
    intercept: f64,
}

#[derive(Serialize, Deserialize)]
struct MapRepr {
    a: f64,
    b: f64,
}

impl TryFrom<MapRepr> for LipMap {
    type Error = Error;

    fn try_from(r: MapRepr) -> Result<Self> {
        LipMap::new(r.a, r.b)
    }
}

impl From<LipMap> for MapRepr {
    fn from(m: LipMap) -> Self {
        MapRepr {
            a: m.slope,
            b: m.intercept,
        }
    }
}

impl LipMap {
    pub fn new(slope: f64, intercept: f64) -> Result<Self> {
        let err = |reason| Error::InvalidMap {
            slope,
            intercept,
            reason,
        };
        if !slope.is_finite() || !intercept.is_finite() {
            return Err(err("non-finite coefficient"));
        }
        if slope.abs() > 1.0 {
            return Err(err("Lipschitz factor exceeds 1"));
        }
        let (lo, hi) = if slope >= 0.0 {
            (intercept, slope + intercept)
        } else {
            (slope + intercept, intercept)
        };
        if lo < -LOC_EPS || hi > 1.0 + LOC_EPS {
            return Err(err("image leaves [0,1]"));
        }
        Ok(Self { slope, intercept })
    }

    pub fn constant(t: f64) -> Result<Self> {
        Self::new(0.0, t)
    }

    pub fn identity() -> Self {
        Self {
            slope: 1.0,
            intercept: 0.0,
        }
    }

    /// The two triadic Cantor maps `t/3` and `(t+2)/3`.
    pub fn cantor() -> [Self; 2] {
        [
            Self {
                slope: 1.0 / 3.0,
                intercept: 0.0,
            },
            Self {
                slope: 1.0 / 3.0,
                intercept: 2.0 / 3.0,
            },
        ]
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    /// Lipschitz constant, exact for affine maps.
    pub fn factor(&self) -> f64 {
        self.slope.abs()
    }

    pub fn is_constant(&self) -> bool {
        self.slope == 0.0
    }

    pub fn apply(&self, t: f64) -> f64 {
        (self.slope * t + self.intercept).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(rename = "t")]
    pub at: f64,
    #[serde(rename = "v")]
    pub value: Vec<f64>,
}

/// Errors introduced by [`VectorMeasure::prune`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PruneReport {
    /// Total variation of the atoms that were dropped.
    pub dropped_variation: f64,
    /// Variation mass that was moved by coalescing.
    pub moved_variation: f64,
    /// Transport bound of the coalescing step: sum of moved mass times
    /// displacement. Bounds the MK and MK* change.
    pub coalesce_mk: f64,
}

impl PruneReport {
    /// Bound on the change in variation norm.
    pub fn variation_bound(&self) -> f64 {
        self.dropped_variation + 2.0 * self.moved_variation
    }

    /// Bound on the change in either MK norm.
    pub fn mk_bound(&self) -> f64 {
        self.dropped_variation + self.coalesce_mk
    }

    pub fn accumulate(&mut self, other: &PruneReport) {
        self.dropped_variation += other.dropped_variation;
        self.moved_variation += other.moved_variation;
        self.coalesce_mk += other.coalesce_mk;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct VectorMeasure {
    dim: usize,
    atoms: Vec<Atom>,
    resolution: usize,
    /// `resolution * dim` cell masses, row-major by cell.
    cells: Vec<f64>,
}

impl VectorMeasure {
    pub fn zero(dim: usize) -> Self {
        Self::zero_with_resolution(dim, 1)
    }

    pub fn zero_with_resolution(dim: usize, resolution: usize) -> Self {
        assert!(dim >= 1 && resolution >= 1);
        Self {
            dim,
            atoms: Vec::new(),
            resolution,
            cells: vec![0.0; dim * resolution],
        }
    }

    /// `delta_t * v`
    pub fn dirac(t: f64, v: Vec<f64>) -> Result<Self> {
        let dim = v.len();
        Self::from_parts(dim, vec![Atom { at: t, value: v }], 1, vec![0.0; dim])
    }

    /// Lebesgue measure times `v`, at resolution `n`.
    pub fn uniform(v: &[f64], resolution: usize) -> Result<Self> {
        let dim = v.len();
        let per_cell: Vec<f64> = v.iter().map(|x| x / resolution as f64).collect();
        let cells = (0..resolution)
            .flat_map(|_| per_cell.iter().copied())
            .collect();
        Self::from_parts(dim, vec![], resolution, cells)
    }

    pub fn from_parts(
        dim: usize,
        atoms: Vec<Atom>,
        resolution: usize,
        cells: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be >= 1".into()));
        }
        if resolution == 0 {
            return Err(Error::InvalidMeasure("resolution must be >= 1".into()));
        }
        if cells.len() != dim * resolution {
            return Err(Error::InvalidMeasure(format!(
                "expected {} cell entries, got {}",
                dim * resolution,
                cells.len()
            )));
        }
        for a in &atoms {
            if a.value.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: a.value.len(),
                });
            }
            if !(0.0..=1.0).contains(&a.at) {
                return Err(Error::InvalidMeasure(format!(
                    "atom location {} outside [0,1]",
                    a.at
                )));
            }
        }
        if atoms
            .iter()
            .flat_map(|a| a.value.iter())
            .chain(&cells)
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidMeasure("non-finite value".into()));
        }
        let mut m = Self {
            dim,
            atoms,
            resolution,
            cells,
        };
        m.normalize_atoms();
        Ok(m)
    }

    /// Sort atoms, merge coincident locations and drop exact zeros.
    fn normalize_atoms(&mut self) {
        self.atoms.sort_by(|a, b| a.at.total_cmp(&b.at));
        let mut merged: Vec<Atom> = Vec::with_capacity(self.atoms.len());
        for atom in self.atoms.drain(..) {
            match merged.last_mut() {
                Some(last) if (atom.at - last.at).abs() <= LOC_EPS => {
                    for (x, y) in last.value.iter_mut().zip(&atom.value) {
                        *x += y;
                    }
                }
                _ => merged.push(atom),
            }
        }
        merged.retain(|a| a.value.iter().any(|&x| x != 0.0));
        self.atoms = merged;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cell(&self, j: usize) -> &[f64] {
        &self.cells[j * self.dim..(j + 1) * self.dim]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[f64]> {
        self.cells.chunks(self.dim)
    }

    pub fn has_density(&self) -> bool {
        self.cells.iter().any(|&x| x != 0.0)
    }

    pub fn is_atomic(&self) -> bool {
        !self.has_density()
    }

    /// Atom value at `t`, zero if there is none.
    pub fn atom_at(&self, t: f64) -> Vec<f64> {
        self.atoms
            .iter()
            .find(|a| (a.at - t).abs() <= LOC_EPS)
            .map(|a| a.value.clone())
            .unwrap_or_else(|| vec![0.0; self.dim])
    }

    /// `mu(B)`
    pub fn eval(&self, set: &BorelSet) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for atom in self.atoms.iter().filter(|a| set.contains(a.at)) {
            add_assign(&mut out, &atom.value);
        }
        self.for_each_overlapping_cell(set, |frac, mass| {
            for (o, m) in out.iter_mut().zip(mass) {
                *o += frac * m;
            }
        });
        out
    }

    /// `mu(T)`
    pub fn total_mass(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for atom in &self.atoms {
            add_assign(&mut out, &atom.value);
        }
        for cell in self.cells() {
            add_assign(&mut out, cell);
        }
        out
    }

    /// `|mu|(T)`, exact for this representation.
    pub fn total_variation(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| norm(&a.value)).sum();
        let cells: f64 = self.cells().map(norm).sum();
        atoms + cells
    }

    /// `|mu|(B)`
    pub fn variation_on(&self, set: &BorelSet) -> f64 {
        let mut total: f64 = self
            .atoms
            .iter()
            .filter(|a| set.contains(a.at))
            .map(|a| norm(&a.value))
            .sum();
        self.for_each_overlapping_cell(set, |frac, mass| total += frac * norm(mass));
        total
    }

    fn for_each_overlapping_cell(&self, set: &BorelSet, mut f: impl FnMut(f64, &[f64])) {
        let n = self.resolution as f64;
        for iv in set.intervals() {
            let first = cell_index(iv.lo, self.resolution);
            let last = cell_index(iv.hi, self.resolution);
            for j in first..=last {
                let a = j as f64 / n;
                let b = (j + 1) as f64 / n;
                let frac = iv.overlap(a, b) * n;
                if frac > 0.0 {
                    f(frac.min(1.0), self.cell(j));
                }
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_values(|v| v.iter().map(|x| s * x).collect())
    }

    /// Applies a linear operator to every atom value and cell mass.
    pub fn apply_operator(&self, r: &LinearOperator) -> Result<Self> {
        if r.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: r.dim(),
            });
        }
        Ok(self.map_values(|v| r.apply(v)))
    }

    fn map_values(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let mut atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| Atom {
                at: a.at,
                value: f(&a.value),
            })
            .collect();
        atoms.retain(|a| a.value.iter().any(|&x| x != 0.0));
        let cells = self.cells().flat_map(&f).collect();
        Self {
            dim: self.dim,
            atoms,
            resolution: self.resolution,
            cells,
        }
    }

    /// Refines the density to resolution `target`, a multiple of the current one.
    pub fn refined(&self, target: usize) -> Self {
        assert!(
            target.is_multiple_of(self.resolution),
            "target must be a multiple"
        );
        let k = target / self.resolution;
        if k == 1 {
            return self.clone();
        }
        let mut cells = Vec::with_capacity(target * self.dim);
        for cell in self.cells() {
            for _ in 0..k {
                cells.extend(cell.iter().map(|x| x / k as f64));
            }
        }
        Self {
            dim: self.dim,
            atoms: self.atoms.clone(),
            resolution: target,
            cells,
        }
    }

    /// `alpha * mu + beta * nu`, on the lcm of the two resolutions.
    pub fn linear_combine(alpha: f64, mu: &Self, beta: f64, nu: &Self) -> Result<Self> {
        if mu.dim != nu.dim {
            return Err(Error::DimensionMismatch {
                expected: mu.dim,
                got: nu.dim,
            });
        }
        let res = lcm(mu.resolution, nu.resolution);
        let (a, b) = (mu.refined(res), nu.refined(res));
        let mut atoms: Vec<Atom> = a
            .atoms
            .iter()
            .map(|x| Atom {
                at: x.at,
                value: x.value.iter().map(|v| alpha * v).collect(),
            })
            .collect();
        atoms.extend(b.atoms.iter().map(|x| Atom {
            at: x.at,
            value: x.value.iter().map(|v| beta * v).collect(),
        }));
        let cells = a
            .cells
            .iter()
            .zip(&b.cells)
            .map(|(x, y)| alpha * x + beta * y)
            .collect();
        let mut out = Self {
            dim: mu.dim,
            atoms,
            resolution: res,
            cells,
        };
        out.normalize_atoms();
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Self::linear_combine(1.0, self, 1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Self::linear_combine(1.0, self, -1.0, other)
    }

    /// Transported measure `omega(mu)(B) = mu(omega^{-1}(B))`.
    pub fn pushforward(&self, map: &LipMap) -> Self {
        if map.is_constant() {
            let mass = self.total_mass();
            let mut out = Self::zero_with_resolution(self.dim, self.resolution);
            if mass.iter().any(|&x| x != 0.0) {
                out.atoms.push(Atom {
                    at: map.apply(0.0),
                    value: mass,
                });
            }
            return out;
        }
        let mut atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| Atom {
                at: map.apply(a.at),
                value: a.value.clone(),
            })
            .collect();
        atoms.sort_by(|a, b| a.at.total_cmp(&b.at));
        let n = self.resolution;
        let mut cells = vec![0.0; self.cells.len()];
        for (j, mass) in self.cells().enumerate() {
            if mass.iter().all(|&x| x == 0.0) {
                continue;
            }
            let x0 = map.apply(j as f64 / n as f64);
            let x1 = map.apply((j + 1) as f64 / n as f64);
            deposit(&mut cells, self.dim, n, x0.min(x1), x0.max(x1), mass);
        }
        let mut out = Self {
            dim: self.dim,
            atoms,
            resolution: n,
            cells,
        };
        out.normalize_atoms();
        out
    }

    /// `∫ f dmu`: exact on atoms, midpoint rule on cells.
    pub fn integrate(&self, f: &dyn TestFunction) -> Result<f64> {
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: f.dim(),
            });
        }
        let mut total = 0.0;
        for atom in &self.atoms {
            total += dot(&f.value(atom.at)?, &atom.value);
        }
        let n = self.resolution as f64;
        for (j, mass) in self.cells().enumerate() {
            if mass.iter().all(|&x| x == 0.0) {
                continue;
            }
            total += dot(&f.value((j as f64 + 0.5) / n)?, mass);
        }
        Ok(total)
    }

    /// Support points with their masses: atoms and nonzero cells (at their
    /// midpoints), sorted by location, coincident locations merged.
    pub fn support(&self) -> Vec<(f64, Vec<f64>)> {
        let n = self.resolution as f64;
        let mut pts: Vec<(f64, Vec<f64>)> = self
            .atoms
            .iter()
            .map(|a| (a.at, a.value.clone()))
            .chain(
                self.cells()
                    .enumerate()
                    .filter(|(_, m)| m.iter().any(|&x| x != 0.0))
                    .map(|(j, m)| ((j as f64 + 0.5) / n, m.to_vec())),
            )
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(pts.len());
        for (t, v) in pts {
            match out.last_mut() {
                Some((s, w)) if (t - *s).abs() <= LOC_EPS => add_assign(w, &v),
                _ => out.push((t, v)),
            }
        }
        out
    }

    /// Drops atoms with `|v| < eps`; if more than `budget` atoms remain,
    /// coalesces the atoms of each master cell into one atom at their
    /// variation-weighted mean location.
    pub fn prune(&self, eps: f64, budget: usize) -> (Self, PruneReport) {
        let mut report = PruneReport::default();
        let mut atoms: Vec<Atom> = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            let w = norm(&a.value);
            if w < eps {
                report.dropped_variation += w;
            } else {
                atoms.push(a.clone());
            }
        }
        if atoms.len() > budget.max(1) {
            // Bins are master cells unless there are more cells than the budget allows.
            let bins = self.resolution.min(budget.max(1));
            let mut out: Vec<Atom> = Vec::new();
            let mut group: Vec<Atom> = Vec::new();
            let mut current = usize::MAX;
            for a in atoms.drain(..) {
                let bin = cell_index(a.at, bins);
                if bin != current && !group.is_empty() {
                    out.push(coalesce(&mut group, &mut report));
                }
                current = bin;
                group.push(a);
            }
            if !group.is_empty() {
                out.push(coalesce(&mut group, &mut report));
            }
            atoms = out;
        }
        let mut m = Self {
            dim: self.dim,
            atoms,
            resolution: self.resolution,
            cells: self.cells.clone(),
        };
        m.normalize_atoms();
        (m, report)
    }

    /// JSON form `{"n", "atoms": [{"t","v"}], "density": {"N","cells"}}`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// CSV rows `kind, index, v_1..v_n`; `index` is the location for atoms
    /// and the cell number for density cells. Zero cells are skipped.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["kind".to_string(), "index".to_string()];
        header.extend((1..=self.dim).map(|i| format!("v_{i}")));
        wtr.write_record(&header)?;
        for a in &self.atoms {
            let mut row = vec!["atom".to_string(), a.at.to_string()];
            row.extend(a.value.iter().map(|x| x.to_string()));
            wtr.write_record(&row)?;
        }
        for (j, cell) in self.cells().enumerate() {
            if cell.iter().all(|&x| x == 0.0) {
                continue;
            }
            let mut row = vec!["cell".to_string(), j.to_string()];
            row.extend(cell.iter().map(|x| x.to_string()));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn coalesce(group: &mut Vec<Atom>, report: &mut PruneReport) -> Atom {
    if group.len() == 1 {
        return group.pop().expect("one atom");
    }
    let dim = group[0].value.len();
    let weights: Vec<f64> = group.iter().map(|a| norm(&a.value)).collect();
    let wsum: f64 = weights.iter().sum();
    let at = if wsum > 0.0 {
        group
            .iter()
            .zip(&weights)
            .map(|(a, w)| a.at * w)
            .sum::<f64>()
            / wsum
    } else {
        group.iter().map(|a| a.at).sum::<f64>() / group.len() as f64
    };
    let mut value = vec![0.0; dim];
    for (a, w) in group.iter().zip(&weights) {
        add_assign(&mut value, &a.value);
        let moved = (a.at - at).abs();
        if moved > 0.0 {
            report.moved_variation += w;
            report.coalesce_mk += w * moved;
        }
    }
    group.clear();
    Atom { at, value }
}

/// Spreads `mass` uniformly over `[lo, hi)` onto the cells of a grid of
/// resolution `n`. Grid coordinates within `1e-9` of an integer snap to it,
/// so images that are unions of cells up to rounding stay cell-aligned.
fn deposit(cells: &mut [f64], dim: usize, n: usize, lo: f64, hi: f64, mass: &[f64]) {
    let snap = |x: f64| {
        let r = x.round();
        if (x - r).abs() <= 1e-9 {
            r
        } else {
            x
        }
    };
    let x0 = snap(lo * n as f64).clamp(0.0, n as f64);
    let x1 = snap(hi * n as f64).clamp(0.0, n as f64);
    let k0 = (x0.floor() as usize).min(n - 1);
    let k1 = ((x1.ceil() as usize).max(1) - 1).min(n - 1).max(k0);
    if k0 == k1 || x1 <= x0 {
        add_assign(&mut cells[k0 * dim..(k0 + 1) * dim], mass);
        return;
    }
    let len = x1 - x0;
    for k in k0..=k1 {
        let frac = ((x1.min((k + 1) as f64) - x0.max(k as f64)) / len).max(0.0);
        if frac > 0.0 {
            for (c, m) in cells[k * dim..(k + 1) * dim].iter_mut().zip(mass) {
                *c += frac * m;
            }
        }
    }
}

/// Cell of a grid with `n` cells containing `t`, with the same snapping as
/// [`deposit`]; `t = 1` belongs to the last cell.
pub(crate) fn cell_index(t: f64, n: usize) -> usize {
    let x = t * n as f64;
    let r = x.round();
    let x = if (x - r).abs() <= 1e-9 { r } else { x.floor() };
    (x.max(0.0) as usize).min(n - 1)
}

fn add_assign(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

#[derive(Serialize, Deserialize)]
struct DensityRepr {
    #[serde(rename = "N")]
    resolution: usize,
    cells: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    n: usize,
    #[serde(default)]
    atoms: Vec<Atom>,
    #[serde(default)]
    density: Option<DensityRepr>,
}

impl TryFrom<MeasureRepr> for VectorMeasure {
    type Error = Error;

    fn try_from(r: MeasureRepr) -> Result<Self> {
        let (resolution, cells) = match r.density {
            Some(d) => {
                if d.cells.len() != d.resolution {
                    return Err(Error::InvalidMeasure(format!(
                        "density declares N = {} but lists {} cells",
                        d.resolution,
                        d.cells.len()
                    )));
                }
                if let Some(bad) = d.cells.iter().find(|c| c.len() != r.n) {
                    return Err(Error::DimensionMismatch {
                        expected: r.n,
                        got: bad.len(),
                    });
                }
                (d.resolution, d.cells.into_iter().flatten().collect())
            }
            None => (1, vec![0.0; r.n]),
        };
        VectorMeasure::from_parts(r.n, r.atoms, resolution, cells)
    }
}

impl From<VectorMeasure> for MeasureRepr {
    fn from(m: VectorMeasure) -> Self {
        MeasureRepr {
            n: m.dim,
            density: Some(DensityRepr {
                resolution: m.resolution,
                cells: m.cells.chunks(m.dim).map(<[f64]>::to_vec).collect(),
            }),
            atoms: m.atoms,
        }
    }
}
