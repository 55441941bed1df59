//! Weighted complete-graph instances, tours, file formats and generators.
//!
//! Vertices are `0..n` internally. Every external format (TSPLIB, JSON
//! instance/tour files) is 1-based and converted at the boundary.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Weight = i64;

/// Largest admissible absolute edge weight. Any sum of at most `2k + 1`
/// weights stays far inside `i64` for every supported `k`.
pub const MAX_ABS_WEIGHT: Weight = 1 << 40;

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceKind {
    Explicit,
    Euclidean2d { coords: Vec<(f64, f64)> },
}

/// Complete undirected graph with a symmetric integer weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    weights: Vec<Weight>,
    kind: InstanceKind,
}

impl Instance {
    /// Builds an explicit instance from a full row-major matrix. The
    /// diagonal is ignored and stored as zero.
    pub fn from_matrix(n: usize, matrix: &[Weight]) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInstance("n must be ≥ 3".into()));
        }
        if matrix.len() != n * n {
            return Err(Error::InvalidInstance(format!("expected {} matrix entries, got {}", n * n, matrix.len())));
        }
        let mut weights = matrix.to_vec();
        for u in 0..n {
            weights[u * n + u] = 0;
            for v in (u + 1)..n {
                let (a, b) = (matrix[u * n + v], matrix[v * n + u]);
                if a != b {
                    return Err(Error::InvalidInstance(format!(
                        "asymmetric weights w({},{}) = {a} but w({},{}) = {b}",
                        u + 1,
                        v + 1,
                        v + 1,
                        u + 1
                    )));
                }
                if a.abs() > MAX_ABS_WEIGHT {
                    return Err(Error::WeightOverflow(a));
                }
            }
        }
        Ok(Self { n, weights, kind: InstanceKind::Explicit })
    }

    /// Euclidean instance with TSPLIB `nint` rounding of the distances.
    pub fn from_coords(coords: Vec<(f64, f64)>) -> Result<Self> {
        let n = coords.len();
        if n < 3 {
            return Err(Error::InvalidInstance("n must be ≥ 3".into()));
        }
        let mut weights = vec![0; n * n];
        for u in 0..n {
            for v in (u + 1)..n {
                let d = euc_2d(coords[u], coords[v]);
                if d.abs() > MAX_ABS_WEIGHT {
                    return Err(Error::WeightOverflow(d));
                }
                weights[u * n + v] = d;
                weights[v * n + u] = d;
            }
        }
        Ok(Self { n, weights, kind: InstanceKind::Euclidean2d { coords } })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &InstanceKind {
        &self.kind
    }

    /// Weight of the edge `{u, v}`, zero when `u == v`.
    #[inline]
    pub fn weight(&self, u: usize, v: usize) -> Weight {
        self.weights[u * self.n + v]
    }

    /// The full row-major matrix (diagonal zero).
    pub fn matrix(&self) -> &[Weight] {
        &self.weights
    }

    pub fn max_abs_weight(&self) -> Weight {
        self.weights.iter().map(|w| w.abs()).max().unwrap_or(0)
    }

    pub fn tour_weight(&self, tour: &Tour) -> Weight {
        debug_assert_eq!(tour.len(), self.n);
        (0..tour.len()).map(|i| self.weight(tour.left(i), tour.right(i))).sum()
    }

    pub fn to_json(&self) -> InstanceJson {
        InstanceJson { n: self.n, weights: self.weights.chunks(self.n).map(|r| r.to_vec()).collect() }
    }

    pub fn from_json(j: &InstanceJson) -> Result<Self> {
        if j.weights.len() != j.n || j.weights.iter().any(|r| r.len() != j.n) {
            return Err(Error::InvalidInstance(format!("weights must be an {0}x{0} matrix", j.n)));
        }
        let flat: Vec<Weight> = j.weights.iter().flatten().copied().collect();
        Self::from_matrix(j.n, &flat)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("instance serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(s)?)
    }
}

/// TSPLIB `EUC_2D` distance: Euclidean length rounded half-up.
pub fn euc_2d(a: (f64, f64), b: (f64, f64)) -> Weight {
    let (dx, dy) = (a.0 - b.0, a.1 - b.1);
    ((dx * dx + dy * dy).sqrt() + 0.5).floor() as Weight
}

/// JSON instance file: full row-major matrix with zero diagonal.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct InstanceJson {
    pub n: usize,
    pub weights: Vec<Vec<Weight>>,
}

/// JSON tour file, 1-based vertex ids.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TourJson {
    pub order: Vec<usize>,
}

/// A Hamiltonian cycle given as a cyclic vertex order `w_0 .. w_{n-1}`.
///
/// Tour edge `i` joins `w_i` (its left endpoint) to `w_{i+1 mod n}` (its
/// right endpoint).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tour {
    order: Vec<usize>,
}

impl Tour {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        if n < 3 {
            return Err(Error::InvalidTour(format!("a tour needs at least 3 vertices, got {n}")));
        }
        let mut seen = vec![false; n];
        for &v in &order {
            if v >= n {
                return Err(Error::InvalidTour(format!("vertex {} out of range 1..={n}", v + 1)));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidTour(format!("vertex {} repeated", v + 1)));
            }
        }
        Ok(Self { order })
    }

    /// `0, 1, .., n-1`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::new((0..n).collect())
    }

    pub fn from_one_based(order: &[usize]) -> Result<Self> {
        if order.contains(&0) {
            return Err(Error::InvalidTour("vertex ids are 1-based; found 0".into()));
        }
        Self::new(order.iter().map(|&v| v - 1).collect())
    }

    /// Checks the tour against an instance's vertex count.
    pub fn check_for(&self, inst: &Instance) -> Result<()> {
        if self.len() != inst.n() {
            return Err(Error::InvalidTour(format!(
                "tour has {} vertices but the instance has {}",
                self.len(),
                inst.n()
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.order.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    #[inline]
    pub fn left(&self, edge: usize) -> usize {
        self.order[edge]
    }

    #[inline]
    pub fn right(&self, edge: usize) -> usize {
        let j = edge + 1;
        self.order[if j == self.order.len() { 0 } else { j }]
    }

    /// Edge set as normalized `(min, max)` pairs, sorted.
    pub fn edge_set(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = (0..self.len())
            .map(|i| {
                let (a, b) = (self.left(i), self.right(i));
                (a.min(b), a.max(b))
            })
            .collect();
        edges.sort_unstable();
        edges
    }

    pub fn to_json(&self) -> TourJson {
        TourJson { order: self.order.iter().map(|v| v + 1).collect() }
    }

    pub fn from_json(j: &TourJson) -> Result<Self> {
        Self::from_one_based(&j.order)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("tour serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(s)?)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum WeightType {
    Euc2d,
    Explicit,
}

enum Section {
    Header,
    Coords,
    Weights,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Reads the TSPLIB subset `TYPE: TSP` with `EUC_2D` or
/// `EXPLICIT`/`FULL_MATRIX` weights.
pub fn parse_tsplib(text: &str) -> Result<Instance> {
    let mut dimension: Option<usize> = None;
    let mut weight_type: Option<WeightType> = None;
    let mut full_matrix = false;
    let mut coords: Vec<Option<(f64, f64)>> = Vec::new();
    let mut matrix: Vec<Weight> = Vec::new();
    let mut section = Section::Header;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        if line == "NODE_COORD_SECTION" || line == "EDGE_WEIGHT_SECTION" {
            let n = dimension.ok_or_else(|| parse_err(line_no, "section before DIMENSION"))?;
            match (line, weight_type) {
                ("NODE_COORD_SECTION", Some(WeightType::Euc2d)) => {
                    coords = vec![None; n];
                    section = Section::Coords;
                }
                ("EDGE_WEIGHT_SECTION", Some(WeightType::Explicit)) if full_matrix => {
                    section = Section::Weights;
                }
                ("EDGE_WEIGHT_SECTION", Some(WeightType::Explicit)) => {
                    return Err(parse_err(line_no, "EDGE_WEIGHT_SECTION requires EDGE_WEIGHT_FORMAT: FULL_MATRIX"));
                }
                _ => return Err(parse_err(line_no, format!("{line} does not match EDGE_WEIGHT_TYPE"))),
            }
            continue;
        }
        match section {
            Section::Header => {
                let (key, value) = match line.split_once(':') {
                    Some((k, v)) => (k.trim(), v.trim()),
                    None => return Err(parse_err(line_no, format!("expected `KEY : VALUE`, got `{line}`"))),
                };
                match key {
                    "NAME" | "COMMENT" => {}
                    "TYPE" => {
                        if value != "TSP" {
                            return Err(parse_err(line_no, format!("unsupported TYPE {value}")));
                        }
                    }
                    "DIMENSION" => {
                        let n: usize =
                            value.parse().map_err(|_| parse_err(line_no, format!("malformed DIMENSION `{value}`")))?;
                        if n < 3 {
                            return Err(parse_err(line_no, "n must be ≥ 3"));
                        }
                        dimension = Some(n);
                    }
                    "EDGE_WEIGHT_TYPE" => {
                        weight_type = Some(match value {
                            "EUC_2D" => WeightType::Euc2d,
                            "EXPLICIT" => WeightType::Explicit,
                            other => return Err(parse_err(line_no, format!("unsupported EDGE_WEIGHT_TYPE {other}"))),
                        })
                    }
                    "EDGE_WEIGHT_FORMAT" => {
                        if value != "FULL_MATRIX" {
                            return Err(parse_err(line_no, format!("unsupported EDGE_WEIGHT_FORMAT {value}")));
                        }
                        full_matrix = true;
                    }
                    other => return Err(parse_err(line_no, format!("unsupported field {other}"))),
                }
            }
            Section::Coords => {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(parse_err(line_no, "expected `id x y`"));
                }
                let id: usize =
                    parts[0].parse().map_err(|_| parse_err(line_no, format!("malformed node id `{}`", parts[0])))?;
                let x: f64 =
                    parts[1].parse().map_err(|_| parse_err(line_no, format!("malformed coordinate `{}`", parts[1])))?;
                let y: f64 =
                    parts[2].parse().map_err(|_| parse_err(line_no, format!("malformed coordinate `{}`", parts[2])))?;
                if id == 0 || id > coords.len() {
                    return Err(parse_err(line_no, format!("node id {id} outside 1..={}", coords.len())));
                }
                if coords[id - 1].replace((x, y)).is_some() {
                    return Err(parse_err(line_no, format!("node id {id} repeated")));
                }
            }
            Section::Weights => {
                for tok in line.split_whitespace() {
                    let w: Weight = tok.parse().map_err(|_| parse_err(line_no, format!("malformed weight `{tok}`")))?;
                    matrix.push(w);
                }
                let n = dimension.unwrap_or(0);
                if matrix.len() > n * n {
                    return Err(parse_err(line_no, format!("more than DIMENSION^2 = {} weights", n * n)));
                }
            }
        }
    }

    let n = dimension.ok_or_else(|| parse_err(last_line, "missing DIMENSION"))?;
    match weight_type {
        Some(WeightType::Euc2d) => {
            if coords.is_empty() {
                return Err(parse_err(last_line, "missing NODE_COORD_SECTION"));
            }
            let found = coords.iter().filter(|c| c.is_some()).count();
            if found != n {
                return Err(parse_err(last_line, format!("DIMENSION is {n} but {found} nodes were given")));
            }
            Instance::from_coords(coords.into_iter().map(Option::unwrap).collect())
        }
        Some(WeightType::Explicit) => {
            if matrix.len() != n * n {
                return Err(parse_err(
                    last_line,
                    format!("DIMENSION is {n} but {} of {} matrix entries were given", matrix.len(), n * n),
                ));
            }
            Instance::from_matrix(n, &matrix).map_err(|e| parse_err(last_line, e.to_string()))
        }
        None => Err(parse_err(last_line, "missing EDGE_WEIGHT_TYPE")),
    }
}

/// Writes an instance in the TSPLIB subset read by [`parse_tsplib`].
pub fn write_tsplib(inst: &Instance, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME : {name}");
    let _ = writeln!(out, "TYPE : TSP");
    let _ = writeln!(out, "DIMENSION : {}", inst.n());
    match inst.kind() {
        InstanceKind::Euclidean2d { coords } => {
            let _ = writeln!(out, "EDGE_WEIGHT_TYPE : EUC_2D");
            let _ = writeln!(out, "NODE_COORD_SECTION");
            for (i, (x, y)) in coords.iter().enumerate() {
                let _ = writeln!(out, "{} {x:?} {y:?}", i + 1);
            }
        }
        InstanceKind::Explicit => {
            let _ = writeln!(out, "EDGE_WEIGHT_TYPE : EXPLICIT");
            let _ = writeln!(out, "EDGE_WEIGHT_FORMAT : FULL_MATRIX");
            let _ = writeln!(out, "EDGE_WEIGHT_SECTION");
            for row in inst.matrix().chunks(inst.n()) {
                let cells: Vec<String> = row.iter().map(|w| w.to_string()).collect();
                let _ = writeln!(out, "{}", cells.join(" "));
            }
        }
    }
    out.push_str("EOF\n");
    out
}

/// Uniform random symmetric weights in `[1, wmax]`, deterministic in `seed`.
pub fn gen_random(n: usize, seed: u64, wmax: Weight) -> Result<Instance> {
    if n < 5 {
        return Err(Error::InvalidInstance(format!("random instances need n >= 5, got {n}")));
    }
    if !(1..=MAX_ABS_WEIGHT).contains(&wmax) {
        return Err(Error::InvalidInstance(format!("wmax must lie in 1..=2^40, got {wmax}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = vec![0; n * n];
    for u in 0..n {
        for v in (u + 1)..n {
            let w = rng.gen_range(1..=wmax);
            m[u * n + v] = w;
            m[v * n + u] = w;
        }
    }
    Instance::from_matrix(n, &m)
}

/// Random tour, deterministic in `seed`.
pub fn gen_random_tour(n: usize, seed: u64) -> Result<Tour> {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    Tour::new(order)
}

/// Input of the negative-triangle problem: a complete graph on `n`
/// vertices with symmetric integer weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionInput {
    n: usize,
    weights: Vec<Weight>,
}

impl ReductionInput {
    pub fn new(n: usize, matrix: &[Weight]) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInstance("n must be ≥ 3".into()));
        }
        if matrix.len() != n * n {
            return Err(Error::InvalidInstance(format!("expected {} entries, got {}", n * n, matrix.len())));
        }
        for u in 0..n {
            for v in (u + 1)..n {
                if matrix[u * n + v] != matrix[v * n + u] {
                    return Err(Error::InvalidInstance(format!("asymmetric weight at ({}, {})", u + 1, v + 1)));
                }
            }
        }
        Ok(Self { n, weights: matrix.to_vec() })
    }

    /// Builds the input from the upper triangle listed row by row:
    /// `w(1,2), w(1,3), .., w(1,n), w(2,3), ..`.
    pub fn from_upper_triangle(n: usize, upper: &[Weight]) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInstance("n must be ≥ 3".into()));
        }
        if upper.len() != n * (n - 1) / 2 {
            return Err(Error::InvalidInstance(format!(
                "expected {} upper-triangle weights for n = {n}, got {}",
                n * (n - 1) / 2,
                upper.len()
            )));
        }
        let mut m = vec![0; n * n];
        let mut it = upper.iter();
        for u in 0..n {
            for v in (u + 1)..n {
                let w = *it.next().expect("length checked");
                m[u * n + v] = w;
                m[v * n + u] = w;
            }
        }
        Self::new(n, &m)
    }

    pub fn random(n: usize, seed: u64, wmax: Weight) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let upper: Vec<Weight> = (0..n * n.saturating_sub(1) / 2).map(|_| rng.gen_range(-wmax..=wmax)).collect();
        Self::from_upper_triangle(n, &upper)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight(&self, u: usize, v: usize) -> Weight {
        self.weights[u * self.n + v]
    }

    /// Largest absolute off-diagonal weight.
    pub fn max_abs_weight(&self) -> Weight {
        let n = self.n;
        (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).map(|(u, v)| self.weight(u, v).abs()).max().unwrap_or(0)
    }
}

/// The two big constants of the 4-opt hardness gadget for maximum
/// absolute input weight `w`: `(5w + 1, 21(5w + 1) + 1)`.
pub fn reduction_constants(w: Weight) -> (Weight, Weight) {
    let m1 = 5 * w + 1;
    (m1, 21 * m1 + 1)
}

/// Encodes a negative-triangle instance on `n` vertices as a 4-opt
/// instance on `4n` vertices together with its starting tour, such that an
/// improving 4-move exists iff the input has a negative triangle.
///
/// Vertex layout (0-based): `a_i = 2i`, `b_i = 2i + 1`, `a'_i = 2n + 2i`,
/// `b'_i = 2n + 2i + 1`. With `nonnegative` every weight is shifted by
/// `M_2`, which changes every 4-move's removed and added weight by the same
/// constant.
pub fn gen_negative_triangle_reduction(g: &ReductionInput, nonnegative: bool) -> Result<(Instance, Tour)> {
    let n = g.n();
    let w = g.max_abs_weight();
    // 2 * M_2 must respect the guard: M_2 = 105w + 22
    if w > (MAX_ABS_WEIGHT / 2 - 22) / 105 {
        return Err(Error::WeightOverflow(w));
    }
    let (m1, m2) = reduction_constants(w);
    let a = |i: usize| 2 * i;
    let b = |i: usize| 2 * i + 1;
    let a2 = |i: usize| 2 * n + 2 * i;
    let b2 = |i: usize| 2 * n + 2 * i + 1;

    let size = 4 * n;
    let mut m = vec![m2; size * size];
    let mut set = |u: usize, v: usize, x: Weight| {
        m[u * size + v] = x;
        m[v * size + u] = x;
    };
    for i in 0..n {
        set(a(i), b2(i), 0);
        set(a(i), b(i), m1);
        set(a2(i), b2(i), -3 * m1);
        for j in 0..n {
            if i < j {
                set(a(i), b(j), g.weight(i, j));
            }
            if j < i {
                set(a2(i), b(j), g.weight(i, j));
            }
        }
        if i + 1 < n {
            set(b(i), a(i + 1), -m2);
            set(b2(i), a2(i + 1), -m2);
        }
    }
    set(a(0), a2(0), -m2);
    set(b(n - 1), b2(n - 1), -m2);
    if nonnegative {
        for x in m.iter_mut() {
            *x += m2;
        }
    }
    for u in 0..size {
        m[u * size + u] = 0;
    }

    let mut order = Vec::with_capacity(size);
    for i in 0..n {
        order.push(a(i));
        order.push(b(i));
    }
    for i in (0..n).rev() {
        order.push(b2(i));
        order.push(a2(i));
    }
    Ok((Instance::from_matrix(size, &m)?, Tour::new(order)?))
}
