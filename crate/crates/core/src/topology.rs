//! Formation geometry: generators for the lattice formations used in the
//! experiments and the neighbor lists derived from the safety radius.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack on the safety-radius comparison so lattice neighbors at
/// exactly `Δ` survive floating-point rounding.
const NEIGHBOR_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dist_sq(&self, other: &Vec3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    pub fn dist(&self, other: &Vec3) -> f64 {
        self.dist_sq(other).sqrt()
    }
}

/// Inclusive neighborhood test shared by the formation and the protocol.
pub fn within_radius(a: &Vec3, b: &Vec3, radius: f64) -> bool {
    a.dist_sq(b) <= radius * radius * (1.0 + NEIGHBOR_EPS)
}

/// A rigid formation. Immutable once built.
#[derive(Debug, Clone)]
pub struct Formation {
    positions: Vec<Vec3>,
    safety_radius: f64,
    neighbors: Vec<Vec<usize>>,
}

impl Formation {
    pub fn new(positions: Vec<Vec3>, safety_radius: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Config("formation needs at least one UAV".into()));
        }
        if !(safety_radius > 0.0) {
            return Err(Error::Config("safety_radius must be > 0".into()));
        }
        let neighbors = grid_neighbors(&positions, safety_radius);
        for (i, list) in neighbors.iter().enumerate() {
            for &j in list {
                if positions[i].dist_sq(&positions[j]) == 0.0 {
                    return Err(Error::Config(format!("UAVs {i} and {j} share a position")));
                }
            }
        }
        Ok(Formation { positions, safety_radius, neighbors })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn position(&self, id: usize) -> Vec3 {
        self.positions[id]
    }

    pub fn safety_radius(&self) -> f64 {
        self.safety_radius
    }

    /// Sorted ids within the safety radius of `id`, excluding `id`.
    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.neighbors[id]
    }

    pub fn is_neighbor(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.positions[a].dist(&self.positions[b])
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Largest pairwise distance; 0 for a single UAV.
    pub fn max_diameter(&self) -> f64 {
        max_diameter(&self.positions)
    }

    /// `id,x,y,z` rows, one per UAV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "x", "y", "z"])?;
        for (i, p) in self.positions.iter().enumerate() {
            w.write_record([i.to_string(), p.x.to_string(), p.y.to_string(), p.z.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn grid_neighbors(positions: &[Vec3], radius: f64) -> Vec<Vec<usize>> {
    let cell = radius;
    let key = |p: &Vec3| -> (i64, i64, i64) {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    };
    let mut buckets: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in positions.iter().enumerate() {
        buckets.entry(key(p)).or_default().push(i);
    }
    positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (cx, cy, cz) = key(p);
            let mut list = Vec::new();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(bucket) = buckets.get(&(cx + dx, cy + dy, cz + dz)) {
                            list.extend(
                                bucket
                                    .iter()
                                    .copied()
                                    .filter(|&j| j != i && within_radius(p, &positions[j], radius)),
                            );
                        }
                    }
                }
            }
            list.sort_unstable();
            list
        })
        .collect()
}

/// Hexagonal (offset-row) lattice of `rows × cols` UAVs with nearest-neighbor
/// distance `spacing`.
pub fn gen_hex_grid(rows: usize, cols: usize, spacing: f64, safety_radius: f64) -> Result<Formation> {
    if rows == 0 || cols == 0 {
        return Err(Error::Config("hex grid needs rows, cols >= 1".into()));
    }
    if !(spacing > 0.0) {
        return Err(Error::Config("spacing must be > 0".into()));
    }
    let row_pitch = spacing * 3f64.sqrt() / 2.0;
    let mut positions = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let offset = if r % 2 == 1 { spacing / 2.0 } else { 0.0 };
        for c in 0..cols {
            positions.push(Vec3::new(c as f64 * spacing + offset, r as f64 * row_pitch, 0.0));
        }
    }
    Formation::new(positions, safety_radius)
}

/// Center UAV plus `rings` concentric hexagonal rings: `1 + 3R(R+1)` UAVs.
/// The center is id 0 and ids grow ring by ring.
pub fn gen_hex_rings(rings: usize, spacing: f64, safety_radius: f64) -> Result<Formation> {
    if !(spacing > 0.0) {
        return Err(Error::Config("spacing must be > 0".into()));
    }
    let r = rings as i64;
    let mut cells: Vec<(i64, i64, i64)> = Vec::new();
    for q in -r..=r {
        for s in (-r).max(-q - r)..=r.min(-q + r) {
            let ring = q.abs().max(s.abs()).max((q + s).abs());
            cells.push((ring, q, s));
        }
    }
    cells.sort_unstable();
    let positions = cells
        .into_iter()
        .map(|(_, q, s)| {
            Vec3::new(spacing * (q as f64 + s as f64 / 2.0), spacing * (s as f64) * 3f64.sqrt() / 2.0, 0.0)
        })
        .collect();
    Formation::new(positions, safety_radius)
}

pub fn hex_ring_count(rings: usize) -> usize {
    1 + 3 * rings * (rings + 1)
}

/// `count` UAVs evenly spaced on a circle of diameter `0.9 Δ`, so every pair is
/// within the safety radius.
pub fn gen_single_hop(count: usize, safety_radius: f64) -> Result<Formation> {
    if count == 0 {
        return Err(Error::Config("single-hop formation needs at least one UAV".into()));
    }
    let radius = 0.45 * safety_radius;
    let positions = (0..count)
        .map(|i| {
            if count == 1 {
                Vec3::default()
            } else {
                let a = std::f64::consts::TAU * i as f64 / count as f64;
                Vec3::new(radius * a.cos(), radius * a.sin(), 0.0)
            }
        })
        .collect();
    Formation::new(positions, safety_radius)
}

/// Largest pairwise distance. Planar sets go through the convex hull; anything
/// else falls back to the quadratic scan.
pub fn max_diameter(positions: &[Vec3]) -> f64 {
    if positions.len() < 2 {
        return 0.0;
    }
    let z0 = positions[0].z;
    if positions.iter().all(|p| p.z == z0) {
        let hull = convex_hull(positions);
        pairwise_max(&hull)
    } else {
        pairwise_max(positions)
    }
}

fn pairwise_max(points: &[Vec3]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.max(points[i].dist_sq(&points[j]));
        }
    }
    best.sqrt()
}

// Andrew's monotone chain on (x, y).
fn convex_hull(points: &[Vec3]) -> Vec<Vec3> {
    let mut pts: Vec<Vec3> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &Vec3, a: &Vec3, b: &Vec3| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut hull: Vec<Vec3> = Vec::with_capacity(2 * pts.len());
    for p in pts.iter() {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull
}

/// Formation description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FormationSpec {
    HexGrid {
        rows: usize,
        cols: usize,
        #[serde(default = "default_spacing")]
        spacing: f64,
    },
    HexRings {
        rings: usize,
        #[serde(default = "default_spacing")]
        spacing: f64,
    },
    SingleHop {
        count: usize,
    },
}

fn default_spacing() -> f64 {
    10.0
}

impl FormationSpec {
    pub fn build(&self, safety_radius: f64) -> Result<Formation> {
        match *self {
            FormationSpec::HexGrid { rows, cols, spacing } => gen_hex_grid(rows, cols, spacing, safety_radius),
            FormationSpec::HexRings { rings, spacing } => gen_hex_rings(rings, spacing, safety_radius),
            FormationSpec::SingleHop { count } => gen_single_hop(count, safety_radius),
        }
    }

    pub fn uav_count(&self) -> usize {
        match *self {
            FormationSpec::HexGrid { rows, cols, .. } => rows * cols,
            FormationSpec::HexRings { rings, .. } => hex_ring_count(rings),
            FormationSpec::SingleHop { count } => count,
        }
    }

    /// Same kind of formation resized to roughly `u` UAVs. Rectangular grids
    /// use the most square factorisation of `u`.
    pub fn with_uav_count(&self, u: usize) -> Result<FormationSpec> {
        match *self {
            FormationSpec::HexGrid { spacing, .. } => {
                let (rows, cols) = rect_factor(u);
                Ok(FormationSpec::HexGrid { rows, cols, spacing })
            }
            FormationSpec::SingleHop { .. } => Ok(FormationSpec::SingleHop { count: u }),
            FormationSpec::HexRings { spacing, .. } => (0..=200)
                .find(|&r| hex_ring_count(r) == u)
                .map(|rings| FormationSpec::HexRings { rings, spacing })
                .ok_or_else(|| Error::Config(format!("{u} UAVs is not a hexagonal ring count"))),
        }
    }
}

/// `(rows, cols)` with `rows <= cols`, `rows * cols == u`, rows as large as possible.
pub fn rect_factor(u: usize) -> (usize, usize) {
    let mut rows = (u as f64).sqrt().floor() as usize;
    while rows > 1 && u % rows != 0 {
        rows -= 1;
    }
    let rows = rows.max(1);
    (rows, u / rows)
}
