//! Separated partitions of unity built from dyadic cubes.
//!
//! At level `n` the big cube `[-2^n, 2^n)^N` is cut into dyadic cubes `Q` of
//! side `2^-n`, each of those into fine cubes of side `delta = 2^-m`. Inside
//! every `Q` the fine cubes are dealt greedily to `E1` or `E2` (whichever
//! currently holds less mass), then each fine cube is shrunk about its
//! corner by `tau`, which opens a gap of `(1 - tau) delta` between the two
//! sets. Only fine cubes that carry mass are enumerated.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{common_atoms, decompose, DiscreteMeasure};
use crate::scalar::{dist, lex_cmp, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    E1,
    E2,
}

/// Level-`n` grid: `Q^n = [-2^n, 2^n)^N`, cubes of side `2^-n`, fine cubes
/// of side `2^-m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicGrid {
    pub level: u32,
    pub fine_exponent: u32,
}

impl DyadicGrid {
    pub fn fine_size(&self) -> f64 {
        2f64.powi(-(self.fine_exponent as i32))
    }

    pub fn cube_size(&self) -> f64 {
        2f64.powi(-(self.level as i32))
    }

    /// Fine cubes per axis inside one `Q`.
    pub fn ratio(&self) -> i64 {
        1i64 << (self.fine_exponent - self.level)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BalanceRow<T> {
    /// Index of `Q` in units of `2^-n`.
    pub cube: Vec<i64>,
    pub mass: T,
    pub e1: T,
    pub e2: T,
    /// `|sigma(E^k cap Q) - sigma(Q)/2| / sigma(Q)` for `k = 1, 2`.
    pub deviation: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RemovedBall<T> {
    pub center: Vec<T>,
    pub radius: T,
    /// The set the ball is carved out of.
    pub removed_from: Side,
    pub mass: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SeparatedPartition<T> {
    pub dimension: usize,
    pub level: u32,
    pub grid: DyadicGrid,
    pub delta: T,
    pub tau: T,
    /// Smallest nonzero mass of a level-`n` dyadic cube.
    pub alpha: T,
    /// Fine cube indices (corner = index * delta), sorted.
    pub e1: Vec<Vec<i64>>,
    pub e2: Vec<Vec<i64>>,
    /// Mass of each shrunken cube, aligned with `e1` / `e2`.
    pub e1_masses: Vec<T>,
    pub e2_masses: Vec<T>,
    pub atoms_e1: Vec<Vec<T>>,
    pub atoms_e2: Vec<Vec<T>>,
    pub removed: Vec<RemovedBall<T>>,
    /// Lower bound on `dist(E1, E2)`.
    pub separation: T,
    pub balance: Vec<BalanceRow<T>>,
    pub retries: u32,
}

fn pow2<T: Real>(e: i32) -> T {
    T::of(2f64.powi(e))
}

fn floor_index<T: Real>(x: &[T], size: T) -> Vec<i64> {
    x.iter().map(|&v| (v / size).floor().to_i64().unwrap_or(i64::MIN)).collect()
}

fn inside_big_cube<T: Real>(x: &[T], level: u32) -> bool {
    let half = pow2::<T>(level as i32);
    x.iter().all(|&v| v >= -half && v < half)
}

fn coarse_of(fine: &[i64], ratio: i64) -> Vec<i64> {
    fine.iter().map(|&i| i.div_euclid(ratio)).collect()
}

fn fine_offset<T: Real>(x: &[T], fine: &[i64], delta: T) -> T {
    // max_k (x_k - corner_k) / delta, in [0, 1)
    x.iter()
        .zip(fine)
        .map(|(&v, &i)| (v - T::of(i as f64) * delta) / delta)
        .fold(T::zero(), |m, u| m.max(u))
}

impl<T: Real> SeparatedPartition<T> {
    fn lookup(list: &[Vec<i64>], idx: &[i64]) -> bool {
        list.binary_search_by(|c| c.as_slice().cmp(idx)).is_ok()
    }

    /// Which set `x` belongs to, if any.
    pub fn side_of(&self, x: &[T]) -> Option<Side> {
        if self.atoms_e1.iter().any(|a| a.as_slice() == x) {
            return Some(Side::E1);
        }
        if self.atoms_e2.iter().any(|a| a.as_slice() == x) {
            return Some(Side::E2);
        }
        if !inside_big_cube(x, self.level) {
            return None;
        }
        let idx = floor_index(x, self.delta);
        if fine_offset(x, &idx, self.delta) >= self.tau {
            return None;
        }
        let side = if Self::lookup(&self.e1, &idx) {
            Side::E1
        } else if Self::lookup(&self.e2, &idx) {
            Side::E2
        } else {
            return None;
        };
        let carved = self
            .removed
            .iter()
            .any(|b| b.removed_from == side && dist(&b.center, x) < b.radius);
        if carved {
            None
        } else {
            Some(side)
        }
    }

    /// Minimum distance between shrunken `E1` and `E2` cubes. Cubes that are
    /// not neighbours in the fine grid are at least `delta` apart, so only
    /// neighbours are compared; the result is capped at `delta`.
    pub fn cube_separation(&self) -> T {
        let side = self.tau * self.delta;
        let mut best = self.delta;
        for a in &self.e1 {
            for b in neighbours(a) {
                if Self::lookup(&self.e2, &b) {
                    best = best.min(box_distance(a, &b, self.delta, side));
                }
            }
        }
        best
    }
}

fn neighbours(a: &[i64]) -> Vec<Vec<i64>> {
    let n = a.len();
    let total = 3usize.pow(n as u32);
    (0..total)
        .map(|mut k| {
            a.iter()
                .map(|&v| {
                    let d = (k % 3) as i64 - 1;
                    k /= 3;
                    v + d
                })
                .collect::<Vec<i64>>()
        })
        .filter(|b| b.as_slice() != a)
        .collect()
}

/// Distance between `[a delta, a delta + side)` and `[b delta, b delta + side)`.
pub fn box_distance<T: Real>(a: &[i64], b: &[i64], delta: T, side: T) -> T {
    a.iter()
        .zip(b)
        .map(|(&i, &j)| {
            let (lo_a, lo_b) = (T::of(i as f64) * delta, T::of(j as f64) * delta);
            let gap = (lo_b - (lo_a + side)).max(lo_a - (lo_b + side)).max(T::zero());
            gap * gap
        })
        .sum::<T>()
        .sqrt()
}

struct Bucketed<T> {
    /// fine index -> (unshrunk mass, [(offset, weight)])
    fine: BTreeMap<Vec<i64>, (T, Vec<(T, T)>)>,
}

fn bucket<T: Real>(sigma: &DiscreteMeasure<T>, level: u32, delta: T) -> Bucketed<T> {
    let mut fine: BTreeMap<Vec<i64>, (T, Vec<(T, T)>)> = BTreeMap::new();
    for (x, &w) in sigma.points().zip(sigma.weights()) {
        if !inside_big_cube(x, level) {
            continue;
        }
        let idx = floor_index(x, delta);
        let u = fine_offset(x, &idx, delta);
        let e = fine.entry(idx).or_insert((T::zero(), Vec::new()));
        e.0 += w;
        e.1.push((u, w));
    }
    Bucketed { fine }
}

fn coarse_masses<T: Real>(sigma: &DiscreteMeasure<T>, level: u32) -> BTreeMap<Vec<i64>, T> {
    let size = pow2::<T>(-(level as i32));
    let mut out: BTreeMap<Vec<i64>, T> = BTreeMap::new();
    for (x, &w) in sigma.points().zip(sigma.weights()) {
        if inside_big_cube(x, level) {
            *out.entry(floor_index(x, size)).or_insert(T::zero()) += w;
        }
    }
    out
}

/// Smallest `m >= n` such that every fine cube of side `2^-m` carries mass
/// `< 2^-n alpha`, searched down to the discretization cell size.
fn choose_fine_exponent<T: Real>(sigma: &DiscreteMeasure<T>, level: u32, alpha: T) -> Result<u32> {
    let threshold = pow2::<T>(-(level as i32)) * alpha;
    let floor = sigma.cell_size().unwrap_or(T::zero());
    let mut m = level;
    loop {
        let delta = pow2::<T>(-(m as i32));
        if delta < floor || m > 60 {
            return Err(Error::Resolution(format!(
                "no fine size 2^-m >= cell size {floor} puts every fine cube below 2^-{level} * alpha = {threshold}; refine sigma"
            )));
        }
        let b = bucket(sigma, level, delta);
        if b.fine.values().all(|(mass, _)| *mass < threshold) {
            return Ok(m);
        }
        m += 1;
    }
}

fn check_tau<T: Real>(tau: T) -> Result<()> {
    if !(tau > T::zero() && tau < T::one()) {
        return Err(Error::Parameter(format!("tau must lie in (0,1), got {tau}")));
    }
    Ok(())
}

pub const DEFAULT_TAU: f64 = 1.0 - 1.0 / 256.0;
const MAX_RETRIES: u32 = 20;

/// Greedy separated partition for a non-atomic discretized measure.
pub fn build_partition<T: Real>(sigma: &DiscreteMeasure<T>, level: u32, tau: T) -> Result<SeparatedPartition<T>> {
    check_tau(tau)?;
    if level > 20 {
        return Err(Error::Parameter("level too large".into()));
    }
    if sigma.atomic_flags().iter().any(|&a| a) {
        return Err(Error::Input("build_partition needs a measure without atoms".into()));
    }
    let dimension = sigma.dimension();
    let coarse = coarse_masses(sigma, level);
    let alpha = coarse
        .values()
        .copied()
        .filter(|&m| m > T::zero())
        .fold(T::infinity(), |a, b| a.min(b));
    if coarse.is_empty() {
        let grid = DyadicGrid { level, fine_exponent: level };
        return Ok(SeparatedPartition {
            dimension,
            level,
            grid,
            delta: pow2(-(level as i32)),
            tau,
            alpha: T::zero(),
            e1: Vec::new(),
            e2: Vec::new(),
            e1_masses: Vec::new(),
            e2_masses: Vec::new(),
            atoms_e1: Vec::new(),
            atoms_e2: Vec::new(),
            removed: Vec::new(),
            separation: (T::one() - tau) * pow2(-(level as i32)),
            balance: Vec::new(),
            retries: 0,
        });
    }
    let m = choose_fine_exponent(sigma, level, alpha)?;
    let grid = DyadicGrid { level, fine_exponent: m };
    let delta = pow2::<T>(-(m as i32));
    let ratio = grid.ratio();
    let buckets = bucket(sigma, level, delta);

    // Fine cubes grouped by their dyadic parent, each group in lexicographic order.
    let mut groups: BTreeMap<Vec<i64>, Vec<&Vec<i64>>> = BTreeMap::new();
    for idx in buckets.fine.keys() {
        groups.entry(coarse_of(idx, ratio)).or_default().push(idx);
    }
    let mut assigned: Vec<(Vec<i64>, Side)> = Vec::with_capacity(buckets.fine.len());
    for cubes in groups.values() {
        let (mut m1, mut m2) = (T::zero(), T::zero());
        for (k, idx) in cubes.iter().enumerate() {
            let mass = buckets.fine[*idx].0;
            let side = match k {
                0 => Side::E1,
                1 => Side::E2,
                _ if m2 < m1 => Side::E2,
                _ => Side::E1,
            };
            match side {
                Side::E1 => m1 += mass,
                Side::E2 => m2 += mass,
            }
            assigned.push(((*idx).clone(), side));
        }
    }

    let bound = pow2::<T>(-(level as i32));
    let mut tau = tau;
    for retry in 0..=MAX_RETRIES {
        let shrunk = |idx: &Vec<i64>| -> T {
            buckets.fine[idx]
                .1
                .iter()
                .filter(|(u, _)| *u < tau)
                .map(|(_, w)| *w)
                .sum()
        };
        let mut per_q: BTreeMap<Vec<i64>, (T, T)> = BTreeMap::new();
        let mut e1 = Vec::new();
        let mut e2 = Vec::new();
        for (idx, side) in &assigned {
            let mass = shrunk(idx);
            let e = per_q.entry(coarse_of(idx, ratio)).or_insert((T::zero(), T::zero()));
            match side {
                Side::E1 => {
                    e.0 += mass;
                    e1.push((idx.clone(), mass));
                }
                Side::E2 => {
                    e.1 += mass;
                    e2.push((idx.clone(), mass));
                }
            }
        }
        let mut balance = Vec::with_capacity(coarse.len());
        let mut offending = None;
        for (q, &mass) in &coarse {
            if mass <= T::zero() {
                continue;
            }
            let (a, b) = per_q.get(q).copied().unwrap_or((T::zero(), T::zero()));
            let half = mass / T::of(2.0);
            let dev = [((a - half).abs() / mass).to_f64_lossy(), ((b - half).abs() / mass).to_f64_lossy()];
            if offending.is_none() && !(T::of(dev[0].max(dev[1])) < bound) {
                offending = Some(q.clone());
            }
            balance.push(BalanceRow { cube: q.clone(), mass, e1: a, e2: b, deviation: dev });
        }
        match offending {
            None => {
                e1.sort_by(|a, b| a.0.cmp(&b.0));
                e2.sort_by(|a, b| a.0.cmp(&b.0));
                let (e1, e1_masses) = e1.into_iter().unzip();
                let (e2, e2_masses) = e2.into_iter().unzip();
                return Ok(SeparatedPartition {
                    dimension,
                    level,
                    grid,
                    delta,
                    tau,
                    alpha,
                    e1,
                    e2,
                    e1_masses,
                    e2_masses,
                    atoms_e1: Vec::new(),
                    atoms_e2: Vec::new(),
                    removed: Vec::new(),
                    separation: (T::one() - tau) * delta,
                    balance,
                    retries: retry,
                });
            }
            Some(q) if retry == MAX_RETRIES => {
                return Err(Error::Shrink { cube: q, tau: tau.to_f64_lossy() });
            }
            Some(_) => tau = (T::one() + tau) / T::of(2.0),
        }
    }
    unreachable!("retry loop returns")
}

/// `n` largest atoms (ties broken lexicographically).
fn largest_atoms<T: Real>(m: &DiscreteMeasure<T>, n: usize) -> Vec<Vec<T>> {
    let mut idx: Vec<usize> = (0..m.len()).filter(|&i| m.is_atom(i)).collect();
    idx.sort_by(|&a, &b| {
        m.weight(b)
            .partial_cmp(&m.weight(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| lex_cmp(m.point(a), m.point(b)))
    });
    idx.into_iter().take(n).map(|i| m.point(i).to_vec()).collect()
}

/// Largest power of two `r` with `sigma(B(y, r)) < budget` and no point of
/// `avoid` inside `B(y, r)`.
fn ball_radius<T: Real>(sigma: &DiscreteMeasure<T>, y: &[T], budget: T, avoid: &[Vec<T>], level: u32) -> Result<T> {
    let mut e = level as i32 + 2;
    while e > -1000 {
        let r = pow2::<T>(e);
        if r == T::zero() {
            break;
        }
        let clear = avoid.iter().all(|a| dist(a, y) >= r);
        if clear && sigma.mass_in_ball(y, r) < budget {
            return Ok(r);
        }
        e -= 1;
    }
    Err(Error::Resolution(format!(
        "no ball around atom {:?} has continuous mass below {budget}",
        y.iter().map(|v| v.to_f64_lossy()).collect::<Vec<_>>()
    )))
}

/// Partition for `mu`, `nu` without common atoms: the greedy partition of
/// the continuous parts, the `n` largest atoms of `mu` adjoined to `E1` and
/// of `nu` to `E2`, and small balls around each adjoined atom carved out of
/// the other set.
pub fn atom_aware_partition<T: Real>(
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    level: u32,
    tau: T,
) -> Result<SeparatedPartition<T>> {
    let shared = common_atoms(mu, nu);
    if !shared.is_empty() {
        return Err(Error::CommonAtoms {
            points: shared
                .into_iter()
                .map(|p| p.0.into_iter().map(|v| v.to_f64_lossy()).collect())
                .collect(),
        });
    }
    let dm = decompose(mu);
    let dn = decompose(nu);
    let sigma = dm.continuous_part.merge(&dn.continuous_part)?;
    let mut part = build_partition(&sigma, level, tau)?;
    let xs = largest_atoms(&dm.atomic_part, level as usize);
    let ys = largest_atoms(&dn.atomic_part, level as usize);
    let base_budget = pow2::<T>(-(level as i32));
    let mut removed = Vec::new();
    for (j, y) in ys.iter().enumerate() {
        let budget = base_budget * pow2(-(j as i32 + 2));
        let r = ball_radius(&sigma, y, budget, &xs, level)?;
        removed.push(RemovedBall {
            center: y.clone(),
            radius: r,
            removed_from: Side::E1,
            mass: sigma.mass_in_ball(y, r),
        });
    }
    for (j, x) in xs.iter().enumerate() {
        let budget = base_budget * pow2(-(j as i32 + 2));
        let r = ball_radius(&sigma, x, budget, &ys, level)?;
        removed.push(RemovedBall {
            center: x.clone(),
            radius: r,
            removed_from: Side::E2,
            mass: sigma.mass_in_ball(x, r),
        });
    }
    let mut separation = part.separation;
    for b in &removed {
        separation = separation.min(b.radius);
    }
    for x in &xs {
        for y in &ys {
            separation = separation.min(dist(x, y));
        }
    }
    part.atoms_e1 = xs;
    part.atoms_e2 = ys;
    part.removed = removed;
    part.separation = separation;
    Ok(part)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkReport {
    pub taus: Vec<f64>,
    pub masses: Vec<f64>,
    pub full_mass: f64,
    pub monotone: bool,
}

/// `sigma(tau R)` for the cube `R = [corner, corner + side)` and each `tau`.
pub fn shrink_stability<T: Real>(sigma: &DiscreteMeasure<T>, corner: &[T], side: T, taus: &[T]) -> Result<ShrinkReport> {
    if corner.len() != sigma.dimension() || !(side > T::zero()) {
        return Err(Error::Parameter("cube must match the dimension and have positive side".into()));
    }
    let mass_at = |tau: T| -> T {
        sigma
            .points()
            .zip(sigma.weights())
            .filter(|(x, _)| {
                x.iter()
                    .zip(corner)
                    .all(|(&v, &c)| v >= c && v < c + tau * side)
            })
            .map(|(_, &w)| w)
            .sum()
    };
    let masses: Vec<T> = taus.iter().map(|&t| mass_at(t)).collect();
    let mut order: Vec<usize> = (0..taus.len()).collect();
    order.sort_by(|&a, &b| taus[a].partial_cmp(&taus[b]).unwrap_or(std::cmp::Ordering::Equal));
    let monotone = order.windows(2).all(|w| masses[w[0]] <= masses[w[1]]);
    Ok(ShrinkReport {
        taus: taus.iter().map(|v| v.to_f64_lossy()).collect(),
        masses: masses.iter().map(|v| v.to_f64_lossy()).collect(),
        full_mass: mass_at(T::one()).to_f64_lossy(),
        monotone,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionCheck {
    pub disjoint: bool,
    pub separation: f64,
    pub separation_ok: bool,
    pub max_deviation: f64,
    pub balance_ok: bool,
    /// Balance also holds for every larger dyadic cube.
    pub cascade_ok: bool,
    pub masses_consistent: bool,
}

impl PartitionCheck {
    pub fn passed(&self) -> bool {
        self.disjoint && self.separation_ok && self.balance_ok && self.cascade_ok && self.masses_consistent
    }
}

/// Re-checks a partition from its own data (cube lists, cube masses,
/// balance rows) without access to the measure.
pub fn verify_partition<T: Real>(part: &SeparatedPartition<T>) -> PartitionCheck {
    let disjoint = part.e1.iter().all(|c| !SeparatedPartition::<T>::lookup(&part.e2, c));
    let sep = part.cube_separation();
    let separation_ok = sep >= (T::one() - part.tau) * part.delta * (T::one() - T::of(1e-9)) && sep > T::zero();
    let ratio = part.grid.ratio();
    let mut per_q: BTreeMap<Vec<i64>, (T, T)> = BTreeMap::new();
    for (c, &m) in part.e1.iter().zip(&part.e1_masses) {
        per_q.entry(coarse_of(c, ratio)).or_insert((T::zero(), T::zero())).0 += m;
    }
    for (c, &m) in part.e2.iter().zip(&part.e2_masses) {
        per_q.entry(coarse_of(c, ratio)).or_insert((T::zero(), T::zero())).1 += m;
    }
    let tol = T::of(1e-9);
    let mut masses_consistent = part.e1.len() == part.e1_masses.len() && part.e2.len() == part.e2_masses.len();
    let bound = pow2::<T>(-(part.level as i32));
    let mut max_dev = 0.0f64;
    let mut balance_ok = true;
    for row in &part.balance {
        let (a, b) = per_q.get(&row.cube).copied().unwrap_or((T::zero(), T::zero()));
        if (a - row.e1).abs() > tol * row.mass || (b - row.e2).abs() > tol * row.mass {
            masses_consistent = false;
        }
        let half = row.mass / T::of(2.0);
        for v in [a, b] {
            let d = (v - half).abs() / row.mass;
            max_dev = max_dev.max(d.to_f64_lossy());
            if !(d < bound) {
                balance_ok = false;
            }
        }
    }
    if per_q.keys().any(|q| !part.balance.iter().any(|r| &r.cube == q)) {
        masses_consistent = false;
    }
    let mut cascade_ok = true;
    for j in 0..part.level {
        let shift = 1i64 << (part.level - j);
        let mut agg: BTreeMap<Vec<i64>, (T, T, T)> = BTreeMap::new();
        for row in &part.balance {
            let e = agg
                .entry(row.cube.iter().map(|&i| i.div_euclid(shift)).collect())
                .or_insert((T::zero(), T::zero(), T::zero()));
            e.0 += row.mass;
            e.1 += row.e1;
            e.2 += row.e2;
        }
        for (m, a, b) in agg.values() {
            let half = *m / T::of(2.0);
            if !((*a - half).abs() < bound * *m && (*b - half).abs() < bound * *m) {
                cascade_ok = false;
            }
        }
    }
    PartitionCheck {
        disjoint,
        separation: sep.to_f64_lossy(),
        separation_ok,
        max_deviation: max_dev,
        balance_ok,
        cascade_ok,
        masses_consistent,
    }
}
