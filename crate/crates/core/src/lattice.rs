//! Lattice geometry: site coordinates, boundary conditions and neighbor
//! shells for chains, the common 2D Bravais lattices with basis, and custom
//! point sets.
//!
//! Coordinates are stored in physical length units (already multiplied by
//! the lattice constant). Site `k` of a built lattice sits in cell
//! `(i, j)` with basis index `b`, where `k = (i·size₁ + j)·n_basis + b`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Relative tolerance used to bin pair distances into neighbor shells.
pub const SHELL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LatticeError {
    #[error("unknown lattice kind '{0}'")]
    UnknownKind(String),
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("lattice constant must be positive and finite, got {0}")]
    InvalidConstant(f64),
    #[error("periodic dimension {dim} has extent {extent}; at least 3 cells are required")]
    PeriodicExtentTooSmall { dim: usize, extent: usize },
    #[error("unknown site identifier '{0}'")]
    UnknownSite(String),
    #[error("duplicate site identifier '{0}'")]
    DuplicateSite(String),
    #[error("coordinates must share one dimension and be finite")]
    BadCoordinates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Chain,
    Square,
    Triangular,
    Honeycomb,
    Kagome,
    Custom,
}

impl LatticeKind {
    pub fn spatial_dim(self) -> usize {
        match self {
            LatticeKind::Chain => 1,
            _ => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LatticeKind::Chain => "chain",
            LatticeKind::Square => "square",
            LatticeKind::Triangular => "triangular",
            LatticeKind::Honeycomb => "honeycomb",
            LatticeKind::Kagome => "kagome",
            LatticeKind::Custom => "custom",
        }
    }

    /// Primitive vectors and basis positions in units of the lattice constant.
    fn unit_cell(self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let s3 = 3f64.sqrt();
        match self {
            LatticeKind::Chain => (vec![vec![1.0]], vec![vec![0.0]]),
            LatticeKind::Square => (vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0, 0.0]]),
            LatticeKind::Triangular => (
                vec![vec![1.0, 0.0], vec![0.5, s3 / 2.0]],
                vec![vec![0.0, 0.0]],
            ),
            // Nearest-neighbor bond length is the lattice constant.
            LatticeKind::Honeycomb => (
                vec![vec![s3, 0.0], vec![s3 / 2.0, 1.5]],
                vec![vec![0.0, 0.0], vec![0.0, 1.0]],
            ),
            LatticeKind::Kagome => (
                vec![vec![2.0, 0.0], vec![1.0, s3]],
                vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, s3 / 2.0]],
            ),
            LatticeKind::Custom => (Vec::new(), Vec::new()),
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LatticeKind {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "chain" => Ok(LatticeKind::Chain),
            "square" => Ok(LatticeKind::Square),
            "triangular" => Ok(LatticeKind::Triangular),
            "honeycomb" => Ok(LatticeKind::Honeycomb),
            "kagome" => Ok(LatticeKind::Kagome),
            "custom" => Ok(LatticeKind::Custom),
            _ => Err(LatticeError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: String,
    pub coord: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    kind: LatticeKind,
    lattice_constant: f64,
    sites: Vec<Site>,
    pbc: Vec<bool>,
    /// Translation vectors of the periodic dimensions (extent × primitive vector).
    periods: Vec<Vec<f64>>,
    neighbor_order: usize,
    /// Shell radius for each order, 1-based keys.
    shells: BTreeMap<usize, f64>,
    edges: BTreeMap<usize, Vec<(usize, usize)>>,
}

/// Builds a standard lattice and its neighbor lists up to `neighbor_order`.
pub fn build_lattice(
    kind: LatticeKind,
    size: &[usize],
    pbc: &[bool],
    lattice_constant: f64,
    neighbor_order: usize,
) -> Result<Lattice, LatticeError> {
    if kind == LatticeKind::Custom {
        return Err(LatticeError::InvalidSize(
            "custom lattices are built with Lattice::from_coordinates".into(),
        ));
    }
    if !(lattice_constant > 0.0 && lattice_constant.is_finite()) {
        return Err(LatticeError::InvalidConstant(lattice_constant));
    }
    let dim = kind.spatial_dim();
    if size.len() != dim || pbc.len() != dim {
        return Err(LatticeError::InvalidSize(format!(
            "{kind} needs {dim} size and pbc entries, got {} and {}",
            size.len(),
            pbc.len()
        )));
    }
    if let Some(d) = size.iter().position(|&s| s == 0) {
        return Err(LatticeError::InvalidSize(format!(
            "size[{d}] must be at least 1"
        )));
    }
    for d in 0..dim {
        if pbc[d] && size[d] < 3 {
            return Err(LatticeError::PeriodicExtentTooSmall {
                dim: d,
                extent: size[d],
            });
        }
    }

    let (prim, basis) = kind.unit_cell();
    let a = lattice_constant;
    let cells: Vec<Vec<usize>> = if dim == 1 {
        (0..size[0]).map(|i| vec![i]).collect()
    } else {
        (0..size[0])
            .flat_map(|i| (0..size[1]).map(move |j| vec![i, j]))
            .collect()
    };
    let mut sites = Vec::with_capacity(cells.len() * basis.len());
    for cell in &cells {
        for (b, offset) in basis.iter().enumerate() {
            let mut coord = offset.clone();
            for (d, &c) in cell.iter().enumerate() {
                for (x, p) in coord.iter_mut().zip(&prim[d]) {
                    *x += c as f64 * p;
                }
            }
            coord.iter_mut().for_each(|x| *x *= a);
            let cell_str = cell
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",");
            sites.push(Site {
                id: format!("({cell_str}):{b}"),
                coord,
            });
        }
    }
    let periods = (0..dim)
        .filter(|&d| pbc[d])
        .map(|d| prim[d].iter().map(|p| p * a * size[d] as f64).collect())
        .collect();
    let mut lat = Lattice {
        kind,
        lattice_constant,
        sites,
        pbc: pbc.to_vec(),
        periods,
        neighbor_order,
        shells: BTreeMap::new(),
        edges: BTreeMap::new(),
    };
    lat.recompute_neighbors();
    Ok(lat)
}

impl Lattice {
    /// A custom open-boundary point set. `ids` defaults to the site index.
    pub fn from_coordinates(
        coords: Vec<Vec<f64>>,
        ids: Option<Vec<String>>,
        neighbor_order: usize,
    ) -> Result<Self, LatticeError> {
        let dim = coords.first().map_or(0, Vec::len);
        if coords
            .iter()
            .any(|c| c.len() != dim || c.iter().any(|x| !x.is_finite()))
        {
            return Err(LatticeError::BadCoordinates);
        }
        let ids = ids.unwrap_or_else(|| (0..coords.len()).map(|i| i.to_string()).collect());
        if ids.len() != coords.len() {
            return Err(LatticeError::InvalidSize(
                "one identifier per site required".into(),
            ));
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(LatticeError::DuplicateSite(id.clone()));
            }
        }
        let sites = ids
            .into_iter()
            .zip(coords)
            .map(|(id, coord)| Site { id, coord })
            .collect();
        let mut lat = Lattice {
            kind: LatticeKind::Custom,
            lattice_constant: 1.0,
            sites,
            pbc: vec![false; dim],
            periods: Vec::new(),
            neighbor_order,
            shells: BTreeMap::new(),
            edges: BTreeMap::new(),
        };
        lat.recompute_neighbors();
        Ok(lat)
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn lattice_constant(&self) -> f64 {
        self.lattice_constant
    }

    pub fn pbc(&self) -> &[bool] {
        &self.pbc
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn neighbor_order(&self) -> usize {
        self.neighbor_order
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.sites.iter().position(|s| s.id == id)
    }

    /// Unordered pairs `(i, j)` with `i < j` at the given neighbor order (1-based).
    pub fn edges(&self, order: usize) -> &[(usize, usize)] {
        self.edges.get(&order).map_or(&[], Vec::as_slice)
    }

    pub fn edges_by_order(&self) -> &BTreeMap<usize, Vec<(usize, usize)>> {
        &self.edges
    }

    /// Radius of the given neighbor shell, if present.
    pub fn shell_radius(&self, order: usize) -> Option<f64> {
        self.shells.get(&order).copied()
    }

    pub fn degree(&self, site: usize, order: usize) -> usize {
        self.edges(order)
            .iter()
            .filter(|&&(i, j)| i == site || j == site)
            .count()
    }

    /// Minimum-image distance between two sites.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let diff: Vec<f64> = self.sites[i]
            .coord
            .iter()
            .zip(&self.sites[j].coord)
            .map(|(a, b)| a - b)
            .collect();
        let np = self.periods.len();
        let mut best = f64::INFINITY;
        for combo in 0..3usize.pow(np as u32) {
            let mut shifted = diff.clone();
            let mut c = combo;
            for period in &self.periods {
                let k = (c % 3) as f64 - 1.0;
                c /= 3;
                for (x, p) in shifted.iter_mut().zip(period) {
                    *x += k * p;
                }
            }
            best = best.min(shifted.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
        best
    }

    /// Symmetric matrix of minimum-image pair distances, zero diagonal.
    pub fn pair_distances(&self) -> Vec<Vec<f64>> {
        let n = self.sites.len();
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = self.distance(i, j);
                out[i][j] = d;
                out[j][i] = d;
            }
        }
        out
    }

    fn recompute_neighbors(&mut self) {
        self.shells.clear();
        self.edges.clear();
        if self.neighbor_order == 0 {
            return;
        }
        let n = self.sites.len();
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((self.distance(i, j), i, j));
            }
        }
        let mut radii: Vec<f64> = pairs.iter().map(|p| p.0).filter(|&d| d > 0.0).collect();
        radii.sort_by(f64::total_cmp);
        let mut shells: Vec<f64> = Vec::new();
        for d in radii {
            match shells.last() {
                Some(&r) if (d - r).abs() <= SHELL_TOL * r => {}
                _ if shells.len() == self.neighbor_order => break,
                _ => shells.push(d),
            }
        }
        for (k, &r) in shells.iter().enumerate() {
            self.shells.insert(k + 1, r);
            self.edges.insert(k + 1, Vec::new());
        }
        for (d, i, j) in pairs {
            if let Some(k) = shells.iter().position(|&r| (d - r).abs() <= SHELL_TOL * r) {
                self.edges
                    .get_mut(&(k + 1))
                    .expect("shell exists")
                    .push((i, j));
            }
        }
    }

    /// Removes the named sites. The result is a custom lattice whose
    /// neighbor shells are recomputed from the remaining sites.
    pub fn remove_sites(&self, ids: &[&str]) -> Result<Lattice, LatticeError> {
        let index: HashMap<&str, usize> = self
            .sites
            .iter()
            .enumerate()
            .map(|(k, s)| (s.id.as_str(), k))
            .collect();
        let mut drop = HashSet::new();
        for id in ids {
            match index.get(id) {
                Some(&k) => {
                    drop.insert(k);
                }
                None => return Err(LatticeError::UnknownSite(id.to_string())),
            }
        }
        let mut out = self.clone();
        out.kind = LatticeKind::Custom;
        out.sites = self
            .sites
            .iter()
            .enumerate()
            .filter(|(k, _)| !drop.contains(k))
            .map(|(_, s)| s.clone())
            .collect();
        out.recompute_neighbors();
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let edges: BTreeMap<String, &Vec<(usize, usize)>> =
            self.edges.iter().map(|(k, v)| (k.to_string(), v)).collect();
        serde_json::json!({
            "kind": self.kind,
            "lattice_constant": self.lattice_constant,
            "pbc": self.pbc,
            "sites": self.sites,
            "edges": edges,
        })
    }
}
