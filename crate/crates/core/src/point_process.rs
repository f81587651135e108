//! Quenched particle configurations, radius-`r` neighbor structures and the
//! growth-regularity fit of neighbor counts.
//!
//! Configurations are finite point sets in the box `[-R, R]^d`. Neighbor
//! lists are built with a uniform cell grid whose cells are at least `r`
//! wide, so only the `3^d` surrounding cells need to be scanned.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// How a configuration was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfigKind {
    Poisson,
    Hardcore,
    Lattice,
    Explicit,
}

/// A finite point configuration in `[-R, R]^d`.
///
/// Coordinates are stored row-major (`points[i * dim + k]`). Every
/// configuration carries a content fingerprint used to tie spin vectors to
/// the configuration they were built on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigurationDoc", into = "ConfigurationDoc")]
pub struct Configuration {
    dim: usize,
    box_halfwidth: f64,
    seed: u64,
    kind: ConfigKind,
    hc_radius: Option<f64>,
    coords: Vec<f64>,
    radii: Vec<f64>,
    id: u64,
}

/// JSON document layout of a configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConfigurationDoc {
    dim: usize,
    box_halfwidth: f64,
    seed: u64,
    kind: ConfigKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hc_radius: Option<f64>,
    points: Vec<Vec<f64>>,
}

impl TryFrom<ConfigurationDoc> for Configuration {
    type Error = Error;

    fn try_from(doc: ConfigurationDoc) -> Result<Self> {
        let mut coords = Vec::with_capacity(doc.points.len() * doc.dim);
        for (i, p) in doc.points.iter().enumerate() {
            if p.len() != doc.dim {
                return Err(Error::ShapeMismatch(format!(
                    "point {i} has {} coordinates, expected {}",
                    p.len(),
                    doc.dim
                )));
            }
            coords.extend_from_slice(p);
        }
        Configuration::from_flat(
            doc.dim,
            doc.box_halfwidth,
            coords,
            doc.seed,
            doc.kind,
            doc.hc_radius,
        )
    }
}

impl From<Configuration> for ConfigurationDoc {
    fn from(c: Configuration) -> Self {
        let points = c.coords.chunks(c.dim.max(1)).map(<[f64]>::to_vec).collect();
        ConfigurationDoc {
            dim: c.dim,
            box_halfwidth: c.box_halfwidth,
            seed: c.seed,
            kind: c.kind,
            hc_radius: c.hc_radius,
            points,
        }
    }
}

impl Configuration {
    /// Builds a configuration from explicit points, validating the box,
    /// distinctness and (for hard-core kinds) the exclusion radius.
    pub fn new(
        dim: usize,
        box_halfwidth: f64,
        points: &[Vec<f64>],
        seed: u64,
        kind: ConfigKind,
        hc_radius: Option<f64>,
    ) -> Result<Self> {
        let doc = ConfigurationDoc {
            dim,
            box_halfwidth,
            seed,
            kind,
            hc_radius,
            points: points.to_vec(),
        };
        Self::try_from(doc)
    }

    /// Explicit configuration with `seed = 0`.
    pub fn explicit(dim: usize, box_halfwidth: f64, points: &[Vec<f64>]) -> Result<Self> {
        Self::new(dim, box_halfwidth, points, 0, ConfigKind::Explicit, None)
    }

    /// Hypercubic lattice `spacing * {-extent, ..., extent}^dim`.
    pub fn lattice(dim: usize, spacing: f64, extent: i64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be >= 1"));
        }
        if !(spacing > 0.0) {
            return Err(invalid("spacing", "must be > 0"));
        }
        if extent < 0 {
            return Err(invalid("extent", "must be >= 0"));
        }
        let side = (2 * extent + 1) as usize;
        let total = side.pow(dim as u32);
        let mut coords = Vec::with_capacity(total * dim);
        for flat in 0..total {
            let mut rest = flat;
            for _ in 0..dim {
                let k = (rest % side) as i64 - extent;
                rest /= side;
                coords.push(k as f64 * spacing);
            }
        }
        let halfwidth = (extent as f64 * spacing).max(spacing * 0.5);
        Self::from_flat(dim, halfwidth, coords, 0, ConfigKind::Lattice, None)
    }

    fn from_flat(
        dim: usize,
        box_halfwidth: f64,
        coords: Vec<f64>,
        seed: u64,
        kind: ConfigKind,
        hc_radius: Option<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be >= 1"));
        }
        if !(box_halfwidth > 0.0) || !box_halfwidth.is_finite() {
            return Err(invalid("box_halfwidth", "must be finite and > 0"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::ShapeMismatch(
                "coordinate count not divisible by dim".into(),
            ));
        }
        if let Some(i) = coords
            .iter()
            .position(|c| !c.is_finite() || c.abs() > box_halfwidth)
        {
            return Err(invalid(
                "points",
                format!("point {} lies outside the box [-R, R]^d", i / dim),
            ));
        }
        let n = coords.len() / dim;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let pa = &coords[a * dim..(a + 1) * dim];
            let pb = &coords[b * dim..(b + 1) * dim];
            pa.partial_cmp(pb).unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in order.windows(2) {
            if coords[w[0] * dim..(w[0] + 1) * dim] == coords[w[1] * dim..(w[1] + 1) * dim] {
                return Err(invalid(
                    "points",
                    format!("points {} and {} coincide", w[0], w[1]),
                ));
            }
        }
        let radii = coords
            .chunks(dim)
            .map(|p| p.iter().map(|c| c * c).sum::<f64>().sqrt())
            .collect();
        let mut config = Configuration {
            dim,
            box_halfwidth,
            seed,
            kind,
            hc_radius,
            coords,
            radii,
            id: 0,
        };
        if let (ConfigKind::Hardcore, Some(hc)) = (kind, hc_radius) {
            if let Some((a, b)) = config.first_close_pair(hc) {
                return Err(invalid(
                    "points",
                    format!("points {a} and {b} violate the hard-core radius {hc}"),
                ));
            }
        }
        config.id = config.fingerprint();
        Ok(config)
    }

    fn fingerprint(&self) -> u64 {
        // FNV-1a over the geometric content.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(self.dim as u64);
        eat(self.box_halfwidth.to_bits());
        eat(self.coords.len() as u64);
        for c in &self.coords {
            eat(c.to_bits());
        }
        h
    }

    fn first_close_pair(&self, radius: f64) -> Option<(usize, usize)> {
        let grid = CellGrid::new(self, radius);
        (0..self.len()).find_map(|i| {
            grid.candidates(self, i)
                .find(|&j| j != i && self.distance(i, j) < radius)
                .map(|j| (i.min(j), i.max(j)))
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn box_halfwidth(&self) -> f64 {
        self.box_halfwidth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kind(&self) -> ConfigKind {
        self.kind
    }

    pub fn hc_radius(&self) -> Option<f64> {
        self.hc_radius
    }

    /// Content fingerprint identifying this configuration.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }

    /// Euclidean norms `|x|` of all sites.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Index of the site farthest from the origin (lowest index on ties).
    pub fn outermost_site(&self) -> Option<usize> {
        self.radii
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, &r)| match best {
                Some((_, br)) if br >= r => best,
                _ => Some((i, r)),
            })
            .map(|(i, _)| i)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn check_box(dim: usize, box_halfwidth: f64) -> Result<()> {
    if dim == 0 {
        return Err(invalid("dim", "must be >= 1"));
    }
    if !(box_halfwidth > 0.0) || !box_halfwidth.is_finite() {
        return Err(invalid("box_halfwidth", "must be finite and > 0"));
    }
    Ok(())
}

fn poisson_coords(
    rng: &mut ChaCha8Rng,
    dim: usize,
    box_halfwidth: f64,
    intensity: f64,
) -> Result<Vec<f64>> {
    if !(intensity >= 0.0) || !intensity.is_finite() {
        return Err(invalid("intensity", "must be finite and >= 0"));
    }
    let mean = intensity * (2.0 * box_halfwidth).powi(dim as i32);
    let count = if mean > 0.0 {
        let dist = Poisson::new(mean).map_err(|e| invalid("intensity", e.to_string()))?;
        dist.sample(rng) as usize
    } else {
        0
    };
    let mut coords = Vec::with_capacity(count * dim);
    for _ in 0..count * dim {
        coords.push(rng.random_range(-box_halfwidth..box_halfwidth));
    }
    Ok(coords)
}

/// Homogeneous Poisson process of the given intensity in `[-R, R]^d`.
pub fn sample_poisson(
    dim: usize,
    box_halfwidth: f64,
    intensity: f64,
    seed: u64,
) -> Result<Configuration> {
    check_box(dim, box_halfwidth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = poisson_coords(&mut rng, dim, box_halfwidth, intensity)?;
    Configuration::from_flat(dim, box_halfwidth, coords, seed, ConfigKind::Poisson, None)
}

/// Matérn type-II hard-core process: a Poisson sample in which every point
/// carries a uniform arrival mark, and a point is removed whenever an
/// earlier-marked point lies strictly closer than `hc_radius`.
pub fn sample_hardcore(
    dim: usize,
    box_halfwidth: f64,
    intensity: f64,
    hc_radius: f64,
    seed: u64,
) -> Result<Configuration> {
    check_box(dim, box_halfwidth)?;
    if !(hc_radius > 0.0) || !hc_radius.is_finite() {
        return Err(invalid("hc_radius", "must be finite and > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = poisson_coords(&mut rng, dim, box_halfwidth, intensity)?;
    let n = coords.len() / dim;
    let marks: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let primary =
        Configuration::from_flat(dim, box_halfwidth, coords, seed, ConfigKind::Poisson, None)?;
    let grid = CellGrid::new(&primary, hc_radius);
    let keep: Vec<bool> = (0..n)
        .map(|i| {
            !grid.candidates(&primary, i).any(|j| {
                j != i && (marks[j], j) < (marks[i], i) && primary.distance(i, j) < hc_radius
            })
        })
        .collect();
    let thinned: Vec<f64> = (0..n)
        .filter(|&i| keep[i])
        .flat_map(|i| primary.point(i).to_vec())
        .collect();
    Configuration::from_flat(
        dim,
        box_halfwidth,
        thinned,
        seed,
        ConfigKind::Hardcore,
        Some(hc_radius),
    )
}

/// Uniform cell grid over `[-R, R]^d` with cells at least `min_cell` wide.
struct CellGrid {
    dim: usize,
    per_dim: usize,
    cell: f64,
    halfwidth: f64,
    cells: Vec<Vec<usize>>,
}

impl CellGrid {
    fn new(config: &Configuration, min_cell: f64) -> Self {
        let dim = config.dim();
        let halfwidth = config.box_halfwidth();
        let n = config.len().max(1);
        // Keep the total cell count within a small multiple of the point count.
        let cap = ((4 * n) as f64).powf(1.0 / dim as f64).ceil().max(1.0) as usize;
        let per_dim = ((2.0 * halfwidth / min_cell).floor() as usize).clamp(1, cap);
        let cell = 2.0 * halfwidth / per_dim as f64;
        let mut cells = vec![Vec::new(); per_dim.pow(dim as u32)];
        let mut grid = CellGrid {
            dim,
            per_dim,
            cell,
            halfwidth,
            cells: Vec::new(),
        };
        for i in 0..config.len() {
            cells[grid.flat(&grid.cell_of(config.point(i)))].push(i);
        }
        grid.cells = cells;
        grid
    }

    fn cell_of(&self, p: &[f64]) -> Vec<usize> {
        p.iter()
            .map(|&c| {
                (((c + self.halfwidth) / self.cell).floor() as isize)
                    .clamp(0, self.per_dim as isize - 1) as usize
            })
            .collect()
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().rev().fold(0, |acc, &k| acc * self.per_dim + k)
    }

    /// All points in the `3^d` block of cells around the cell of site `i`.
    fn candidates<'a>(
        &'a self,
        config: &Configuration,
        i: usize,
    ) -> impl Iterator<Item = usize> + 'a {
        let home = self.cell_of(config.point(i));
        let span = 3usize.pow(self.dim as u32);
        let mut blocks = Vec::with_capacity(span);
        'outer: for offset in 0..span {
            let mut rest = offset;
            let mut idx = Vec::with_capacity(self.dim);
            for &h in &home {
                let shifted = h as isize + (rest % 3) as isize - 1;
                rest /= 3;
                if shifted < 0 || shifted >= self.per_dim as isize {
                    continue 'outer;
                }
                idx.push(shifted as usize);
            }
            let f = self.flat(&idx);
            if !blocks.contains(&f) {
                blocks.push(f);
            }
        }
        blocks
            .into_iter()
            .flat_map(move |b| self.cells[b].iter().copied())
    }
}

/// Radius-`r` neighborhoods `γ_{x,r}` of every site, excluding the site itself.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborStructure {
    r: f64,
    config_id: u64,
    adjacency: Vec<Vec<usize>>,
    distances: Vec<Vec<f64>>,
    n: Vec<usize>,
    big_n: Vec<usize>,
}

impl NeighborStructure {
    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn config_id(&self) -> u64 {
        self.config_id
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Sorted neighbor indices of site `x`.
    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.adjacency[x]
    }

    /// Distances to the neighbors of `x`, aligned with [`Self::neighbors`].
    pub fn neighbor_distances(&self, x: usize) -> &[f64] {
        &self.distances[x]
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    /// Neighbor counts `n_x`.
    pub fn counts(&self) -> &[usize] {
        &self.n
    }

    /// Second-order counts `N_y = Σ_{x ∈ γ_{y,r}} n_x`.
    pub fn second_counts(&self) -> &[usize] {
        &self.big_n
    }

    pub fn max_count(&self) -> usize {
        self.n.iter().copied().max().unwrap_or(0)
    }

    /// Hop distances from `source` in the neighbor graph (`None` if unreachable).
    pub fn graph_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap_or(0);
            for &y in &self.adjacency[x] {
                if dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }
}

/// Builds `γ_{x,r} = {y ∈ γ, y ≠ x : |x - y| < r}` for every site with a cell list.
pub fn build_neighbors(config: &Configuration, r: f64) -> Result<NeighborStructure> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid("r", "must be finite and > 0"));
    }
    let grid = CellGrid::new(config, r);
    let lists: Vec<(Vec<usize>, Vec<f64>)> = (0..config.len())
        .into_par_iter()
        .map(|i| {
            let mut found: Vec<(usize, f64)> = grid
                .candidates(config, i)
                .filter(|&j| j != i)
                .filter_map(|j| {
                    let d = config.distance(i, j);
                    (d < r).then_some((j, d))
                })
                .collect();
            found.sort_unstable_by_key(|&(j, _)| j);
            found.into_iter().unzip()
        })
        .collect();
    let (adjacency, distances): (Vec<_>, Vec<_>) = lists.into_iter().unzip();
    let n: Vec<usize> = adjacency.iter().map(Vec::len).collect();
    let big_n = adjacency
        .iter()
        .map(|nb: &Vec<usize>| nb.iter().map(|&x| n[x]).sum())
        .collect();
    Ok(NeighborStructure {
        r,
        config_id: config.id(),
        adjacency,
        distances,
        n,
        big_n,
    })
}

/// Smallest constants in the polynomial and logarithmic neighbor-count bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityFit {
    pub q: f64,
    /// `max_x n_x / (1 + |x|)^{1/q}`.
    pub a_fit: f64,
    /// `max_x n_x / ([1 + log(1 + |x|)] r^d)`.
    pub c_log_fit: f64,
    pub worst_site: Option<usize>,
    pub worst_site_log: Option<usize>,
}

pub fn regularity_fit(
    ns: &NeighborStructure,
    config: &Configuration,
    q: f64,
) -> Result<RegularityFit> {
    if !(q > 2.0) {
        return Err(invalid("q", "must be > 2"));
    }
    if ns.config_id() != config.id() {
        return Err(Error::ConfigurationMismatch {
            expected: config.id(),
            found: ns.config_id(),
        });
    }
    let rd = ns.r().powi(config.dim() as i32);
    let argmax = |f: &dyn Fn(usize) -> f64| -> (f64, Option<usize>) {
        (0..config.len()).fold((0.0, None), |(best, at), x| {
            let v = f(x);
            if at.is_none() || v > best {
                (v, Some(x))
            } else {
                (best, at)
            }
        })
    };
    let counts = ns.counts();
    let radii = config.radii();
    let (a_fit, worst_site) = argmax(&|x| counts[x] as f64 / (1.0 + radii[x]).powf(1.0 / q));
    let (c_log_fit, worst_site_log) =
        argmax(&|x| counts[x] as f64 / ((1.0 + (1.0 + radii[x]).ln()) * rd));
    Ok(RegularityFit {
        q,
        a_fit,
        c_log_fit,
        worst_site,
        worst_site_log,
    })
}

/// Shared handle used by the dynamics modules.
pub type SharedConfiguration = Arc<Configuration>;

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(config: &Configuration, r: f64) -> Vec<Vec<usize>> {
        (0..config.len())
            .map(|i| {
                (0..config.len())
                    .filter(|&j| j != i && config.distance(i, j) < r)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn single_site_has_no_neighbors() {
        let c = Configuration::explicit(2, 1.0, &[vec![0.1, 0.2]]).unwrap();
        let ns = build_neighbors(&c, 0.5).unwrap();
        assert_eq!(ns.counts(), &[0]);
    }

    #[test]
    fn lattice_interior_and_boundary_counts() {
        let c = Configuration::lattice(1, 1.0, 10).unwrap();
        assert_eq!(c.len(), 21);
        let ns = build_neighbors(&c, 1.5).unwrap();
        for (i, p) in c.points().enumerate() {
            let expect = if p[0].abs() == 10.0 { 1 } else { 2 };
            assert_eq!(ns.counts()[i], expect, "site {p:?}");
        }
        assert_eq!(ns.adjacency(), brute(&c, 1.5).as_slice());
    }

    #[test]
    fn second_counts_sum_neighbor_counts() {
        let c = sample_poisson(2, 5.0, 2.0, 7).unwrap();
        let ns = build_neighbors(&c, 0.8).unwrap();
        for y in 0..c.len() {
            let s: usize = ns.neighbors(y).iter().map(|&x| ns.counts()[x]).sum();
            assert_eq!(ns.second_counts()[y], s);
        }
    }

    #[test]
    fn rejects_nonpositive_radius() {
        let c = Configuration::lattice(1, 1.0, 2).unwrap();
        assert!(build_neighbors(&c, 0.0).is_err());
        assert!(build_neighbors(&c, -1.0).is_err());
    }

    #[test]
    fn poisson_zero_intensity_is_empty_and_seed_deterministic() {
        assert!(sample_poisson(2, 10.0, 0.0, 3).unwrap().is_empty());
        let a = sample_poisson(2, 10.0, 0.5, 3).unwrap();
        let b = sample_poisson(2, 10.0, 0.5, 3).unwrap();
        assert_eq!(a, b);
        assert!(sample_poisson(1, 1.0, -1.0, 0).is_err());
    }

    #[test]
    fn hardcore_respects_exclusion() {
        assert!(sample_hardcore(2, 5.0, 0.0, 1.0, 1).unwrap().is_empty());
        let c = sample_hardcore(2, 10.0, 3.0, 0.7, 11).unwrap();
        for i in 0..c.len() {
            for j in 0..i {
                assert!(c.distance(i, j) >= 0.7);
            }
        }
        let huge = sample_hardcore(2, 1.0, 20.0, 10.0, 5).unwrap();
        assert!(huge.len() <= 1);
    }

    #[test]
    fn rejects_points_outside_box_and_duplicates() {
        assert!(Configuration::explicit(1, 1.0, &[vec![1.5]]).is_err());
        assert!(Configuration::explicit(1, 1.0, &[vec![0.5], vec![0.5]]).is_err());
        assert!(Configuration::explicit(2, 1.0, &[vec![0.5]]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = sample_hardcore(2, 4.0, 1.0, 0.5, 9).unwrap();
        let back = Configuration::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.id(), back.id());
    }

    #[test]
    fn regularity_edge_cases() {
        let empty = Configuration::explicit(1, 1.0, &[]).unwrap();
        let ns = build_neighbors(&empty, 1.0).unwrap();
        let fit = regularity_fit(&ns, &empty, 4.0).unwrap();
        assert_eq!(fit.a_fit, 0.0);
        assert_eq!(fit.worst_site, None);

        let origin = Configuration::explicit(1, 1.0, &[vec![0.0]]).unwrap();
        let ns = build_neighbors(&origin, 1.0).unwrap();
        assert_eq!(regularity_fit(&ns, &origin, 4.0).unwrap().a_fit, 0.0);
        assert!(regularity_fit(&ns, &origin, 2.0).is_err());
    }

    #[test]
    fn regularity_on_lattice_peaks_at_origin() {
        let c = Configuration::lattice(1, 1.0, 10).unwrap();
        let ns = build_neighbors(&c, 1.5).unwrap();
        let fit = regularity_fit(&ns, &c, 4.0).unwrap();
        // Oracle: direct maximization of n_x / (1+|x|)^{1/4}.
        let oracle = c
            .points()
            .enumerate()
            .map(|(i, p)| ns.counts()[i] as f64 / (1.0 + p[0].abs()).powf(0.25))
            .fold(0.0f64, f64::max);
        assert_eq!(fit.a_fit, oracle);
        assert_eq!(fit.a_fit, 2.0);
        assert_eq!(c.point(fit.worst_site.unwrap()), &[0.0]);
    }

    #[test]
    fn graph_distance_on_chain() {
        let c = Configuration::lattice(1, 1.0, 3).unwrap();
        let ns = build_neighbors(&c, 1.5).unwrap();
        let src = c.outermost_site().unwrap();
        let d = ns.graph_distances(src);
        let far = d.iter().flatten().max().copied();
        assert_eq!(far, Some(6));
    }
}
