//! Finite discretizations of Radon measures on `R^N`.
//!
//! A [`DiscreteMeasure`] is a weighted point cloud. Each point is either a
//! genuine atom or a cell of a density discretization; density cells carry
//! weight `w(x_cell) * h^N` on a lattice of spacing `h`.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dist, lex_cmp, Real};

/// A point of `R^N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point<T>(pub Vec<T>);

impl<T: Real> Point<T> {
    pub fn coords(&self) -> &[T] {
        &self.0
    }
}

/// Which part of a measure to keep in [`project_function`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Continuous,
    Atomic,
}

/// Immutable weighted point set. Coordinates are stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure<T> {
    dimension: usize,
    coords: Vec<T>,
    weights: Vec<T>,
    atomic: Vec<bool>,
    cell_size: Option<T>,
}

/// On-disk layout of a measure file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MeasureFile<T> {
    pub dimension: usize,
    pub points: Vec<Vec<T>>,
    pub weights: Vec<T>,
    pub atomic: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_size: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomDecomposition<T> {
    pub continuous_part: DiscreteMeasure<T>,
    pub atomic_part: DiscreteMeasure<T>,
}

impl<T: Real> DiscreteMeasure<T> {
    /// Validating constructor.
    pub fn new(
        dimension: usize,
        points: Vec<Vec<T>>,
        weights: Vec<T>,
        atomic: Vec<bool>,
        cell_size: Option<T>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Input("dimension must be positive".into()));
        }
        if points.len() != weights.len() || points.len() != atomic.len() {
            return Err(Error::Input(format!(
                "length mismatch: {} points, {} weights, {} atomic flags",
                points.len(),
                weights.len(),
                atomic.len()
            )));
        }
        let mut coords = Vec::with_capacity(points.len() * dimension);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dimension {
                return Err(Error::Input(format!(
                    "point {i} has {} coordinates, expected {dimension}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::Input(format!("point {i} has a non-finite coordinate")));
            }
            coords.extend_from_slice(p);
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > T::zero())) {
            return Err(Error::Input(format!("weight {i} is not a positive finite number")));
        }
        if let Some(h) = cell_size {
            if !(h.is_finite() && h > T::zero()) {
                return Err(Error::Input("cell_size must be positive".into()));
            }
        }
        let m = DiscreteMeasure {
            dimension,
            coords,
            weights,
            atomic,
            cell_size,
        };
        m.check_distinct()?;
        m.check_lattice()?;
        Ok(m)
    }

    /// Measure without points.
    pub fn empty(dimension: usize) -> Self {
        DiscreteMeasure {
            dimension,
            coords: Vec::new(),
            weights: Vec::new(),
            atomic: Vec::new(),
            cell_size: None,
        }
    }

    /// Unit-free constructor for purely atomic measures.
    pub fn atoms(dimension: usize, points: Vec<Vec<T>>, weights: Vec<T>) -> Result<Self> {
        let n = points.len();
        Self::new(dimension, points, weights, vec![true; n], None)
    }

    fn check_distinct(&self) -> Result<()> {
        let order = self.sorted_indices();
        for w in order.windows(2) {
            if self.point(w[0]) == self.point(w[1]) {
                return Err(Error::Input(format!(
                    "support points {} and {} coincide",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    fn check_lattice(&self) -> Result<()> {
        let Some(h) = self.cell_size else { return Ok(()) };
        let Some(base) = (0..self.len()).find(|&i| !self.atomic[i]) else {
            return Ok(());
        };
        let tol = T::of(1e-6);
        for i in 0..self.len() {
            if self.atomic[i] {
                continue;
            }
            for (x, x0) in self.point(i).iter().zip(self.point(base)) {
                let k = (*x - *x0) / h;
                if (k - k.round()).abs() > tol {
                    return Err(Error::Input(format!(
                        "non-atomic point {i} is off the lattice of spacing {h}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn sorted_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| lex_cmp(self.point(a), self.point(b)));
        idx
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn points(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.coords.chunks_exact(self.dimension)
    }

    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn is_atom(&self, i: usize) -> bool {
        self.atomic[i]
    }

    pub fn atomic_flags(&self) -> &[bool] {
        &self.atomic
    }

    pub fn cell_size(&self) -> Option<T> {
        self.cell_size
    }

    pub fn total_mass(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Mass of the open ball `{x : |x - center| < radius}`.
    pub fn mass_in_ball(&self, center: &[T], radius: T) -> T {
        self.points()
            .zip(&self.weights)
            .filter(|(p, _)| dist(p, center) < radius)
            .map(|(_, &w)| w)
            .sum()
    }

    /// Same support, weights multiplied by `c > 0`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        if !(c > T::zero() && c.is_finite()) {
            return Err(Error::Parameter("scale factor must be positive".into()));
        }
        let mut m = self.clone();
        m.weights.iter_mut().for_each(|w| *w *= c);
        Ok(m)
    }

    /// Keeps the points selected by `keep`, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let mut out = DiscreteMeasure::empty(self.dimension);
        out.cell_size = self.cell_size;
        for i in 0..self.len() {
            if keep(i) {
                out.coords.extend_from_slice(self.point(i));
                out.weights.push(self.weights[i]);
                out.atomic.push(self.atomic[i]);
            }
        }
        out
    }

    /// Index of the support point with exactly these coordinates.
    pub fn find(&self, p: &[T]) -> Option<usize> {
        (0..self.len()).find(|&i| self.point(i) == p)
    }

    /// Sum of two measures; coincident points merge (weights add, atomic if either is).
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.dimension != other.dimension {
            return Err(Error::Input("dimension mismatch in merge".into()));
        }
        let mut pts: Vec<Vec<T>> = self.points().map(|p| p.to_vec()).collect();
        let mut w = self.weights.clone();
        let mut a = self.atomic.clone();
        let mut index: std::collections::BTreeMap<Vec<u64>, usize> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| (bits(p), i))
            .collect();
        for j in 0..other.len() {
            let key = bits(other.point(j));
            match index.get(&key) {
                Some(&i) => {
                    w[i] += other.weights[j];
                    a[i] |= other.atomic[j];
                }
                None => {
                    index.insert(key, pts.len());
                    pts.push(other.point(j).to_vec());
                    w.push(other.weights[j]);
                    a.push(other.atomic[j]);
                }
            }
        }
        let cell = match (self.cell_size, other.cell_size) {
            (Some(x), Some(y)) if x == y => Some(x),
            (Some(x), None) if other.is_empty() => Some(x),
            (None, Some(y)) if self.is_empty() => Some(y),
            _ => None,
        };
        let mut m = DiscreteMeasure::new(self.dimension, pts, w, a, None)?;
        m.cell_size = cell;
        Ok(m)
    }

    pub fn to_file(&self) -> MeasureFile<T> {
        MeasureFile {
            dimension: self.dimension,
            points: self.points().map(|p| p.to_vec()).collect(),
            weights: self.weights.clone(),
            atomic: self.atomic.clone(),
            cell_size: self.cell_size,
        }
    }

    pub fn from_file(file: MeasureFile<T>) -> Result<Self> {
        Self::new(file.dimension, file.points, file.weights, file.atomic, file.cell_size)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("measure serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeasureFile<T> =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("measure file: {e}")))?;
        Self::from_file(file)
    }
}

fn bits<T: Real>(p: &[T]) -> Vec<u64> {
    // -0.0 and 0.0 are the same point
    p.iter()
        .map(|x| {
            let v = x.to_f64_lossy();
            if v == 0.0 {
                0
            } else {
                v.to_bits()
            }
        })
        .collect()
}

/// Splits a measure by its atomic flags.
pub fn decompose<T: Real>(mu: &DiscreteMeasure<T>) -> AtomDecomposition<T> {
    AtomDecomposition {
        continuous_part: mu.filter(|i| !mu.is_atom(i)),
        atomic_part: mu.filter(|i| mu.is_atom(i)),
    }
}

/// Points tagged atomic in both measures with bit-identical coordinates,
/// sorted lexicographically.
pub fn common_atoms<T: Real>(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> Vec<Point<T>> {
    if mu.dimension() != nu.dimension() {
        return Vec::new();
    }
    let mut out: Vec<Point<T>> = (0..mu.len())
        .filter(|&i| mu.is_atom(i))
        .filter(|&i| {
            (0..nu.len()).any(|j| nu.is_atom(j) && nu.point(j) == mu.point(i))
        })
        .map(|i| Point(mu.point(i).to_vec()))
        .collect();
    out.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    out
}

/// Zeroes `f` off the requested part of `mu`.
pub fn project_function<T: Real>(f: &[T], mu: &DiscreteMeasure<T>, part: Part) -> Result<Vec<T>> {
    if f.len() != mu.len() {
        return Err(Error::Input(format!(
            "function has {} values, measure has {} points",
            f.len(),
            mu.len()
        )));
    }
    Ok(f.iter()
        .enumerate()
        .map(|(i, &v)| {
            let keep = match part {
                Part::Atomic => mu.is_atom(i),
                Part::Continuous => !mu.is_atom(i),
            };
            if keep {
                v
            } else {
                T::zero()
            }
        })
        .collect())
}

/// Restriction to the half-open cube `[corner, corner + side)^N`.
pub fn restrict_to_cube<T: Real>(
    mu: &DiscreteMeasure<T>,
    corner: &[T],
    side: T,
) -> Result<DiscreteMeasure<T>> {
    if !(side > T::zero()) {
        return Err(Error::Parameter("cube side must be positive".into()));
    }
    if corner.len() != mu.dimension() {
        return Err(Error::Input("cube corner dimension mismatch".into()));
    }
    Ok(mu.filter(|i| {
        mu.point(i)
            .iter()
            .zip(corner)
            .all(|(&x, &c)| x >= c && x < c + side)
    }))
}

/// Pairs `(i, j)` with `nu.point(i) == mu.point(j)` (bit-identical support points).
pub fn coincident_pairs<T: Real>(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> Vec<(usize, usize)> {
    let index: std::collections::BTreeMap<Vec<u64>, usize> =
        (0..mu.len()).map(|j| (bits(mu.point(j)), j)).collect();
    (0..nu.len())
        .filter_map(|i| index.get(&bits(nu.point(i))).map(|&j| (i, j)))
        .collect()
}

/// Deterministic measure generators.
pub mod generators {
    use super::*;

    fn lattice<T: Real>(dimension: usize, counts: usize, origin: T, h: T, offset: T) -> Vec<Vec<T>> {
        let total = counts.pow(dimension as u32);
        (0..total)
            .map(|mut lin| {
                let mut p = vec![T::zero(); dimension];
                for axis in (0..dimension).rev() {
                    let k = lin % counts;
                    lin /= counts;
                    p[axis] = origin + (T::of_usize(k) + offset) * h;
                }
                p
            })
            .collect()
    }

    fn cell_count<T: Real>(lo: T, hi: T, h: T) -> Result<usize> {
        if !(h > T::zero()) || !(hi > lo) {
            return Err(Error::Parameter("need h > 0 and hi > lo".into()));
        }
        let n = ((hi - lo) / h).round();
        if (n * h - (hi - lo)).abs() > h * T::of(1e-9) {
            return Err(Error::Parameter(format!(
                "interval length {} is not a multiple of h = {h}",
                hi - lo
            )));
        }
        n.to_usize().ok_or_else(|| Error::Parameter("cell count overflow".into()))
    }

    /// Lebesgue measure on `[lo, hi)^N`: one cell center per grid cell, weight `h^N`.
    pub fn lebesgue_grid<T: Real>(dimension: usize, lo: T, hi: T, h: T) -> Result<DiscreteMeasure<T>> {
        let n = cell_count(lo, hi, h)?;
        let pts = lattice(dimension, n, lo, h, T::of(0.5));
        let w = h.powi(dimension as i32);
        let len = pts.len();
        DiscreteMeasure::new(dimension, pts, vec![w; len], vec![false; len], Some(h))
    }

    /// Two discretizations of Lebesgue measure on `[lo, hi)^N` with no shared
    /// point: cell centers for the first, cell corners for the second.
    pub fn interleaved_grids<T: Real>(
        dimension: usize,
        lo: T,
        hi: T,
        h: T,
    ) -> Result<(DiscreteMeasure<T>, DiscreteMeasure<T>)> {
        let n = cell_count(lo, hi, h)?;
        let w = h.powi(dimension as i32);
        let centers = lattice(dimension, n, lo, h, T::of(0.5));
        let corners = lattice(dimension, n, lo, h, T::zero());
        let len = centers.len();
        Ok((
            DiscreteMeasure::new(dimension, centers, vec![w; len], vec![false; len], Some(h))?,
            DiscreteMeasure::new(dimension, corners, vec![w; len], vec![false; len], Some(h))?,
        ))
    }

    /// `n` atoms uniform in `[lo, hi)^N` with weights uniform in `[0.5, 1.5) / n`.
    pub fn random_atoms<T: Real, R: Rng + ?Sized>(
        n: usize,
        dimension: usize,
        lo: T,
        hi: T,
        rng: &mut R,
    ) -> Result<DiscreteMeasure<T>> {
        if dimension == 0 || !(hi > lo) {
            return Err(Error::Parameter("need dimension >= 1 and hi > lo".into()));
        }
        let (lo64, hi64) = (lo.to_f64_lossy(), hi.to_f64_lossy());
        let pts: Vec<Vec<T>> = (0..n)
            .map(|_| (0..dimension).map(|_| T::of(rng.gen_range(lo64..hi64))).collect())
            .collect();
        let w: Vec<T> = (0..n)
            .map(|_| T::of(rng.gen_range(0.5..1.5) / n as f64))
            .collect();
        DiscreteMeasure::atoms(dimension, pts, w)
    }

    /// Uniform density on the open ball `B(center, radius)` with total `mass`,
    /// discretized on the lattice `center + h Z^N`.
    pub fn ball_uniform<T: Real>(center: &[T], radius: T, h: T, mass: T) -> Result<DiscreteMeasure<T>> {
        let dimension = center.len();
        if dimension == 0 || !(radius > T::zero()) || !(h > T::zero()) || !(mass > T::zero()) {
            return Err(Error::Parameter("ball_uniform needs positive radius, h, mass".into()));
        }
        let k = (radius / h).ceil().to_usize().unwrap_or(0);
        let side = 2 * k + 1;
        let origin = T::zero() - T::of_usize(k) * h;
        let pts: Vec<Vec<T>> = lattice(dimension, side, origin, h, T::zero())
            .into_iter()
            .filter(|p| crate::scalar::norm2(p) < radius)
            .map(|p| p.iter().zip(center).map(|(&x, &c)| x + c).collect())
            .collect();
        if pts.is_empty() {
            return Err(Error::Parameter("ball contains no lattice point".into()));
        }
        let w = mass / T::of_usize(pts.len());
        let len = pts.len();
        DiscreteMeasure::new(dimension, pts, vec![w; len], vec![false; len], Some(h))
    }
}

impl<T: Real> PartialOrd for Point<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(lex_cmp(&self.0, &other.0))
    }
}

#[cfg(test)]
mod tests {
    use super::generators::*;
    use super::*;
    use proptest::prelude::*;

    fn mixed() -> DiscreteMeasure<f64> {
        DiscreteMeasure::new(
            1,
            vec![vec![0.0], vec![0.25], vec![0.5], vec![0.75], vec![1.0]],
            vec![0.5, 0.125, 0.25, 0.0625, 1.0],
            vec![true, false, false, true, false],
            None,
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_input() {
        assert!(DiscreteMeasure::<f64>::atoms(1, vec![vec![0.0]], vec![0.0]).is_err());
        assert!(DiscreteMeasure::<f64>::atoms(1, vec![vec![0.0], vec![0.0]], vec![1.0, 1.0]).is_err());
        assert!(DiscreteMeasure::<f64>::atoms(1, vec![vec![f64::NAN]], vec![1.0]).is_err());
        assert!(DiscreteMeasure::<f64>::new(
            1,
            vec![vec![0.0], vec![0.3]],
            vec![1.0, 1.0],
            vec![false, false],
            Some(0.25)
        )
        .is_err());
    }

    #[test]
    fn decompose_pure_and_mixed() {
        let a = DiscreteMeasure::atoms(1, vec![vec![0.0], vec![1.0], vec![2.0]], vec![1.0; 3]).unwrap();
        let d = decompose(&a);
        assert_eq!(d.atomic_part.len(), 3);
        assert!(d.continuous_part.is_empty());

        let c = lebesgue_grid(1, 0.0, 1.0, 0.25).unwrap();
        let d = decompose(&c);
        assert_eq!(d.continuous_part, c);
        assert!(d.atomic_part.is_empty());

        let m = mixed();
        let d = decompose(&m);
        assert_eq!(d.atomic_part.len(), 2);
        assert_eq!(d.continuous_part.len(), 3);
        let direct: f64 = m.weights().iter().sum();
        assert_eq!(d.atomic_part.total_mass() + d.continuous_part.total_mass(), direct);
    }

    #[test]
    fn decompose_is_idempotent() {
        let d = decompose(&mixed());
        let again = decompose(&d.atomic_part);
        assert_eq!(again.atomic_part, d.atomic_part);
        assert!(again.continuous_part.is_empty());
        let again = decompose(&d.continuous_part);
        assert_eq!(again.continuous_part, d.continuous_part);
        assert!(again.atomic_part.is_empty());
    }

    #[test]
    fn common_atoms_cases() {
        let mu = DiscreteMeasure::atoms(1, vec![vec![0.0], vec![1.0]], vec![1.0, 1.0]).unwrap();
        let nu = DiscreteMeasure::atoms(1, vec![vec![1.0], vec![2.0]], vec![1.0, 1.0]).unwrap();
        assert_eq!(common_atoms(&mu, &nu), vec![Point(vec![1.0])]);
        assert_eq!(common_atoms(&nu, &mu), common_atoms(&mu, &nu));

        let far = DiscreteMeasure::atoms(1, vec![vec![5.0]], vec![1.0]).unwrap();
        assert!(common_atoms(&mu, &far).is_empty());

        let a = DiscreteMeasure::atoms(1, vec![vec![1.0]], vec![1.0]).unwrap();
        let b = DiscreteMeasure::atoms(1, vec![vec![1.0 + 1e-15]], vec![1.0]).unwrap();
        assert!(common_atoms(&a, &b).is_empty());
    }

    #[test]
    fn common_atoms_ignores_density_cells() {
        let g = lebesgue_grid(1, 0.0, 1.0, 0.5).unwrap();
        assert!(common_atoms(&g, &g).is_empty());
    }

    #[test]
    fn project_function_cases() {
        let a = DiscreteMeasure::atoms(1, vec![vec![0.0], vec![1.0]], vec![1.0, 1.0]).unwrap();
        assert_eq!(project_function(&[1.0, 1.0], &a, Part::Continuous).unwrap(), vec![0.0, 0.0]);
        let m = mixed();
        let ones = vec![1.0; 5];
        assert_eq!(
            project_function(&ones, &m, Part::Atomic).unwrap(),
            vec![1.0, 0.0, 0.0, 1.0, 0.0]
        );
        assert!(project_function(&[1.0], &m, Part::Atomic).is_err());
    }

    #[test]
    fn restrict_cases() {
        let g = lebesgue_grid(1, 0.0, 1.0, 0.125).unwrap();
        assert_eq!(restrict_to_cube(&g, &[-1.0], 4.0).unwrap(), g);
        assert!(restrict_to_cube(&g, &[5.0], 1.0).unwrap().is_empty());
        let half = restrict_to_cube(&g, &[0.0], 0.5).unwrap();
        assert_eq!(half.len(), 4);
        assert_eq!(half.total_mass(), 0.5);
        assert!(restrict_to_cube(&g, &[0.0], 0.0).is_err());
    }

    #[test]
    fn generators_basic() {
        let g = lebesgue_grid(1, 0.0, 1.0, 1.0 / 64.0).unwrap();
        assert_eq!(g.len(), 64);
        assert!(g.weights().iter().all(|&w| w == 1.0 / 64.0));
        let (mu, nu) = interleaved_grids(2, 0.0, 1.0, 0.125).unwrap();
        assert!(common_atoms(&mu, &nu).is_empty());
        assert!(coincident_pairs(&mu, &nu).is_empty());
        let disk = ball_uniform(&[0.0f64, 0.0], 1.0, 0.125, 1.0).unwrap();
        assert!((disk.total_mass() - 1.0).abs() < 1e-12);
        assert!(disk.points().all(|p| crate::scalar::norm2(p) < 1.0));
    }

    #[test]
    fn random_atoms_deterministic() {
        use rand::SeedableRng;
        let mut r1 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut r2 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a = random_atoms::<f64, _>(10, 2, 0.0, 1.0, &mut r1).unwrap();
        let b = random_atoms::<f64, _>(10, 2, 0.0, 1.0, &mut r2).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn json_round_trip() {
        let m = mixed();
        assert_eq!(DiscreteMeasure::from_json(&m.to_json()).unwrap(), m);
        let g = lebesgue_grid(2, 0.0, 1.0, 0.25).unwrap();
        assert_eq!(DiscreteMeasure::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn merge_adds_coincident_weights() {
        let a = DiscreteMeasure::atoms(1, vec![vec![0.0], vec![1.0]], vec![1.0, 2.0]).unwrap();
        let b = lebesgue_grid(1, 0.0, 2.0, 1.0).unwrap();
        let m = a.merge(&b).unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(m.total_mass(), 5.0);
        let c = a.merge(&a).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.total_mass(), 6.0);
    }

    proptest! {
        // Mass conservation under a partition into dyadic cubes; weights are
        // dyadic rationals so floating sums are exact.
        #[test]
        fn mass_conserved_over_cube_partition(
            pts in proptest::collection::btree_set((0i32..64, 0i32..64), 1..40),
            wexp in proptest::collection::vec(0i32..8, 40),
            level in 0u32..4,
        ) {
            let pts: Vec<Vec<f64>> = pts.into_iter().map(|(a, b)| vec![a as f64 / 16.0, b as f64 / 16.0]).collect();
            let n = pts.len();
            let w: Vec<f64> = (0..n).map(|i| 2f64.powi(-wexp[i])).collect();
            let mu = DiscreteMeasure::atoms(2, pts, w).unwrap();
            let side = 4.0 / 2f64.powi(level as i32);
            let cells = 2usize.pow(level);
            let mut total = 0.0;
            for a in 0..cells {
                for b in 0..cells {
                    let r = restrict_to_cube(&mu, &[a as f64 * side, b as f64 * side], side).unwrap();
                    total += r.total_mass();
                }
            }
            prop_assert_eq!(total, mu.total_mass());
        }

        #[test]
        fn partition_identity(vals in proptest::collection::vec(-10.0f64..10.0, 5)) {
            let m = mixed();
            let c = project_function(&vals, &m, Part::Continuous).unwrap();
            let a = project_function(&vals, &m, Part::Atomic).unwrap();
            for i in 0..5 {
                prop_assert_eq!(c[i] + a[i], vals[i]);
            }
        }
    }
}
