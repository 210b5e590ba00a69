//! Combinatorics of the multi-time lattice `Z^m`: oriented squares and cubes,
//! 3D-corners, quad-surfaces, flowers and local flips.
//!
//! Directions are 1-based: direction `d` moves along the unit vector `e_d`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A coordinate direction, 1-based.
pub type Dir = usize;

/// Sign of an oriented cell relative to a reference orientation.
pub type Sign = i8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("invalid cell: {0}")]
    InvalidCell(String),
    #[error("vertex {0} is not a vertex of the cube")]
    NotOnCube(MultiIndex),
    #[error("vertex {0} is not an interior vertex of the surface")]
    NotInterior(MultiIndex),
    #[error("auxiliary direction {0} collides with a petal direction")]
    DirectionCollision(Dir),
    #[error("degenerate flower: {0}")]
    DegenerateFlower(String),
    #[error("cube at {base} is not flippable: {reason}")]
    NotFlippable { base: MultiIndex, reason: String },
    #[error("square {index}: {reason}")]
    InvalidSquare { index: usize, reason: String },
    #[error("surface is not an oriented disk: {0}")]
    NotDisk(String),
}

/// A point of `Z^m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(coords: Vec<i64>) -> Self {
        MultiIndex(coords)
    }

    pub fn origin(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// `self + by * e_dir`. Panics if `dir` is not a direction of this lattice.
    pub fn shift(&self, dir: Dir, by: i64) -> Self {
        let mut c = self.0.clone();
        c[dir - 1] += by;
        MultiIndex(c)
    }

    pub fn step(&self, dir: Dir) -> Self {
        self.shift(dir, 1)
    }

    pub fn coord(&self, dir: Dir) -> i64 {
        self.0[dir - 1]
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i64>> for MultiIndex {
    fn from(v: Vec<i64>) -> Self {
        MultiIndex(v)
    }
}

impl<const N: usize> From<[i64; N]> for MultiIndex {
    fn from(v: [i64; N]) -> Self {
        MultiIndex(v.to_vec())
    }
}

fn check_dir(dim: usize, d: Dir) -> Result<(), LatticeError> {
    if d == 0 || d > dim {
        return Err(LatticeError::InvalidCell(format!(
            "direction {d} outside 1..={dim}"
        )));
    }
    Ok(())
}

/// Canonical identity of an unoriented elementary square: base and `i < j`.
pub type SquareKey = (MultiIndex, Dir, Dir);

/// The oriented square `(n, n+e_i, n+e_i+e_j, n+e_j)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrientedSquare {
    base: MultiIndex,
    i: Dir,
    j: Dir,
}

impl OrientedSquare {
    pub fn new(base: MultiIndex, i: Dir, j: Dir) -> Result<Self, LatticeError> {
        if base.dim() < 2 {
            return Err(LatticeError::InvalidCell(
                "lattice dimension must be at least 2".into(),
            ));
        }
        check_dir(base.dim(), i)?;
        check_dir(base.dim(), j)?;
        if i == j {
            return Err(LatticeError::InvalidCell(format!(
                "square directions must differ, got ({i},{j})"
            )));
        }
        Ok(OrientedSquare { base, i, j })
    }

    pub fn base(&self) -> &MultiIndex {
        &self.base
    }

    pub fn dirs(&self) -> (Dir, Dir) {
        (self.i, self.j)
    }

    /// Vertices in cyclic order `(n, n+e_i, n+e_i+e_j, n+e_j)`.
    pub fn vertices(&self) -> [MultiIndex; 4] {
        let n = self.base.clone();
        let ni = n.step(self.i);
        let nij = ni.step(self.j);
        let nj = n.step(self.j);
        [n, ni, nij, nj]
    }

    /// The same square with the opposite orientation, `sigma_ji`.
    pub fn reversed(&self) -> Self {
        OrientedSquare {
            base: self.base.clone(),
            i: self.j,
            j: self.i,
        }
    }

    /// `self` or its reverse, whichever has `i < j`, with the sign relating them.
    pub fn canonical(&self) -> (Self, Sign) {
        if self.i < self.j {
            (self.clone(), 1)
        } else {
            (self.reversed(), -1)
        }
    }

    pub fn key(&self) -> SquareKey {
        let (c, _) = self.canonical();
        (c.base, c.i, c.j)
    }

    /// Orientation of `self` relative to its canonical form.
    pub fn sign(&self) -> Sign {
        if self.i < self.j {
            1
        } else {
            -1
        }
    }

    /// Position of `n` in the vertex cycle, if it is a vertex.
    pub fn slot_of(&self, n: &MultiIndex) -> Option<usize> {
        self.vertices().iter().position(|v| v == n)
    }

    /// Directed boundary edges following the vertex cycle.
    pub fn edges(&self) -> [(MultiIndex, MultiIndex); 4] {
        let v = self.vertices();
        [
            (v[0].clone(), v[1].clone()),
            (v[1].clone(), v[2].clone()),
            (v[2].clone(), v[3].clone()),
            (v[3].clone(), v[0].clone()),
        ]
    }
}

impl fmt::Display for OrientedSquare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sigma_{}{}@{}", self.i, self.j, self.base)
    }
}

/// Vertex labels of an elementary cube spanned by directions `(i, j, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CubeLabel {
    X,
    I,
    J,
    K,
    IJ,
    JK,
    IK,
    IJK,
}

impl CubeLabel {
    pub const ALL: [CubeLabel; 8] = [
        CubeLabel::X,
        CubeLabel::I,
        CubeLabel::J,
        CubeLabel::K,
        CubeLabel::IJ,
        CubeLabel::JK,
        CubeLabel::IK,
        CubeLabel::IJK,
    ];

    /// The six vertices with one or two indices.
    pub const OCTAHEDRON: [CubeLabel; 6] = [
        CubeLabel::I,
        CubeLabel::J,
        CubeLabel::K,
        CubeLabel::IJ,
        CubeLabel::JK,
        CubeLabel::IK,
    ];

    /// Which of the three cube directions are switched on.
    pub fn offsets(self) -> [bool; 3] {
        use CubeLabel::*;
        match self {
            X => [false, false, false],
            I => [true, false, false],
            J => [false, true, false],
            K => [false, false, true],
            IJ => [true, true, false],
            JK => [false, true, true],
            IK => [true, false, true],
            IJK => [true, true, true],
        }
    }

    pub fn from_offsets(o: [bool; 3]) -> Self {
        use CubeLabel::*;
        match o {
            [false, false, false] => X,
            [true, false, false] => I,
            [false, true, false] => J,
            [false, false, true] => K,
            [true, true, false] => IJ,
            [false, true, true] => JK,
            [true, false, true] => IK,
            [true, true, true] => IJK,
        }
    }

    /// The antipodal cube vertex.
    pub fn opposite(self) -> Self {
        let o = self.offsets();
        CubeLabel::from_offsets([!o[0], !o[1], !o[2]])
    }

    pub fn index(self) -> usize {
        CubeLabel::ALL.iter().position(|&l| l == self).unwrap()
    }

    /// Position among [`CubeLabel::OCTAHEDRON`], if any.
    pub fn octahedron_index(self) -> Option<usize> {
        CubeLabel::OCTAHEDRON.iter().position(|&l| l == self)
    }

    pub fn name(self) -> &'static str {
        use CubeLabel::*;
        match self {
            X => "x",
            I => "x_i",
            J => "x_j",
            K => "x_k",
            IJ => "x_ij",
            JK => "x_jk",
            IK => "x_ik",
            IJK => "x_ijk",
        }
    }
}

impl fmt::Display for CubeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CubeLabel {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().trim_start_matches("x_").to_ascii_lowercase();
        Ok(match t.as_str() {
            "x" | "" => CubeLabel::X,
            "i" => CubeLabel::I,
            "j" => CubeLabel::J,
            "k" => CubeLabel::K,
            "ij" | "ji" => CubeLabel::IJ,
            "jk" | "kj" => CubeLabel::JK,
            "ik" | "ki" => CubeLabel::IK,
            "ijk" => CubeLabel::IJK,
            _ => {
                return Err(LatticeError::InvalidCell(format!(
                    "unknown cube label {s:?}"
                )))
            }
        })
    }
}

/// The oriented elementary cube at `base` spanned by `(i, j, k)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrientedCube {
    base: MultiIndex,
    dirs: [Dir; 3],
}

impl OrientedCube {
    pub fn new(base: MultiIndex, dirs: [Dir; 3]) -> Result<Self, LatticeError> {
        for &d in &dirs {
            check_dir(base.dim(), d)?;
        }
        let [i, j, k] = dirs;
        if i == j || j == k || i == k {
            return Err(LatticeError::InvalidCell(format!(
                "cube directions must be distinct, got ({i},{j},{k})"
            )));
        }
        Ok(OrientedCube { base, dirs })
    }

    pub fn base(&self) -> &MultiIndex {
        &self.base
    }

    pub fn dirs(&self) -> [Dir; 3] {
        self.dirs
    }

    pub fn vertex(&self, label: CubeLabel) -> MultiIndex {
        let mut n = self.base.clone();
        for (on, &d) in label.offsets().iter().zip(&self.dirs) {
            if *on {
                n = n.step(d);
            }
        }
        n
    }

    pub fn label_of(&self, n: &MultiIndex) -> Option<CubeLabel> {
        if n.dim() != self.base.dim() {
            return None;
        }
        let mut off = [false; 3];
        for (a, (&x, &b)) in n.coords().iter().zip(self.base.coords()).enumerate() {
            let dir = a + 1;
            match self.dirs.iter().position(|&d| d == dir) {
                Some(p) => match x - b {
                    0 => {}
                    1 => off[p] = true,
                    _ => return None,
                },
                None if x != b => return None,
                None => {}
            }
        }
        Some(CubeLabel::from_offsets(off))
    }

    /// The six boundary faces with the signs that make their sum
    /// `Delta_k L(sigma_ij) + Delta_i L(sigma_jk) + Delta_j L(sigma_ki)`.
    ///
    /// Order: the three shifted faces (`+`), then the three faces at the base (`-`),
    /// so faces `f` and `f + 3` are opposite.
    pub fn boundary(&self) -> [(OrientedSquare, Sign); 6] {
        let [i, j, k] = self.dirs;
        let n = &self.base;
        let sq = |b: MultiIndex, p: Dir, q: Dir| OrientedSquare {
            base: b,
            i: p,
            j: q,
        };
        [
            (sq(n.step(k), i, j), 1),
            (sq(n.step(i), j, k), 1),
            (sq(n.step(j), k, i), 1),
            (sq(n.clone(), i, j), -1),
            (sq(n.clone(), j, k), -1),
            (sq(n.clone(), k, i), -1),
        ]
    }

    /// The three signed boundary faces containing the vertex `label`.
    pub fn faces_at(&self, label: CubeLabel) -> [(OrientedSquare, Sign); 3] {
        let v = self.vertex(label);
        let mut out = Vec::with_capacity(3);
        for (f, s) in self.boundary() {
            if f.slot_of(&v).is_some() {
                out.push((f, s));
            }
        }
        out.try_into()
            .expect("every cube vertex lies on three faces")
    }
}

impl fmt::Display for OrientedCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [i, j, k] = self.dirs;
        write!(f, "sigma_{i}{j}{k}@{}", self.base)
    }
}

/// A 3D-corner: the three faces of a cube around one of its vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corner {
    cube: OrientedCube,
    apex: CubeLabel,
}

impl Corner {
    pub fn new(cube: OrientedCube, apex: CubeLabel) -> Self {
        Corner { cube, apex }
    }

    /// The corner of `cube` whose apex is the lattice point `n`.
    pub fn at_vertex(cube: OrientedCube, n: &MultiIndex) -> Result<Self, LatticeError> {
        let apex = cube
            .label_of(n)
            .ok_or_else(|| LatticeError::NotOnCube(n.clone()))?;
        Ok(Corner { cube, apex })
    }

    pub fn cube(&self) -> &OrientedCube {
        &self.cube
    }

    pub fn apex(&self) -> CubeLabel {
        self.apex
    }

    pub fn apex_vertex(&self) -> MultiIndex {
        self.cube.vertex(self.apex)
    }

    /// Faces around the apex, each oriented as it appears in the cube boundary.
    pub fn faces(&self) -> [OrientedSquare; 3] {
        self.cube
            .faces_at(self.apex)
            .map(|(f, s)| if s > 0 { f } else { f.reversed() })
    }
}

/// Signed 2-chain of a collection of oriented squares, zero entries dropped.
pub fn chain_of<'a>(
    squares: impl IntoIterator<Item = &'a OrientedSquare>,
) -> BTreeMap<SquareKey, i64> {
    let mut chain = BTreeMap::new();
    for s in squares {
        *chain.entry(s.key()).or_insert(0) += i64::from(s.sign());
    }
    chain.retain(|_, v| *v != 0);
    chain
}

/// An oriented quad-surface with the topology of a disk.
#[derive(Clone, Debug)]
pub struct QuadSurface {
    dim: usize,
    squares: Vec<OrientedSquare>,
    incidence: HashMap<MultiIndex, Vec<usize>>,
    keys: HashMap<SquareKey, usize>,
}

impl PartialEq for QuadSurface {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && chain_of(&self.squares) == chain_of(&other.squares)
    }
}

/// How the squares around one vertex fit together.
enum Fan {
    Closed(Vec<usize>),
    Open,
}

impl QuadSurface {
    pub fn new(dim: usize, squares: Vec<OrientedSquare>) -> Result<Self, LatticeError> {
        if squares.is_empty() {
            return Err(LatticeError::NotDisk("surface has no squares".into()));
        }
        let mut keys = HashMap::new();
        let mut incidence: HashMap<MultiIndex, Vec<usize>> = HashMap::new();
        let mut directed: HashMap<(MultiIndex, MultiIndex), usize> = HashMap::new();
        let mut undirected: HashMap<(MultiIndex, MultiIndex), Vec<usize>> = HashMap::new();

        for (index, s) in squares.iter().enumerate() {
            if s.base.dim() != dim {
                return Err(LatticeError::InvalidSquare {
                    index,
                    reason: format!("base {} is not a point of Z^{dim}", s.base),
                });
            }
            if keys.insert(s.key(), index).is_some() {
                return Err(LatticeError::InvalidSquare {
                    index,
                    reason: format!("{s} appears twice"),
                });
            }
            for v in s.vertices() {
                incidence.entry(v).or_default().push(index);
            }
            for (a, b) in s.edges() {
                if directed.insert((a.clone(), b.clone()), index).is_some() {
                    return Err(LatticeError::InvalidSquare {
                        index,
                        reason: format!("edge {a}->{b} is traversed twice in the same direction"),
                    });
                }
                let e = if a < b { (a, b) } else { (b, a) };
                let users = undirected.entry(e).or_default();
                users.push(index);
                if users.len() > 2 {
                    return Err(LatticeError::InvalidSquare {
                        index,
                        reason: "edge shared by more than two squares".into(),
                    });
                }
            }
        }

        let surface = QuadSurface {
            dim,
            squares,
            incidence,
            keys,
        };

        // Connectivity through shared edges.
        let mut parent: Vec<usize> = (0..surface.squares.len()).collect();
        fn find(p: &mut [usize], mut a: usize) -> usize {
            while p[a] != a {
                p[a] = p[p[a]];
                a = p[a];
            }
            a
        }
        for users in undirected.values() {
            if let [a, b] = users[..] {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
        let root = find(&mut parent, 0);
        if (0..surface.squares.len()).any(|s| find(&mut parent, s) != root) {
            return Err(LatticeError::NotDisk("surface is not connected".into()));
        }

        let v = surface.incidence.len() as i64;
        let e = undirected.len() as i64;
        let f = surface.squares.len() as i64;
        if v - e + f != 1 {
            return Err(LatticeError::NotDisk(format!(
                "Euler characteristic V - E + F = {} (expected 1)",
                v - e + f
            )));
        }

        for n in surface.incidence.keys() {
            surface.fan(n)?;
        }
        Ok(surface)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn squares(&self) -> &[OrientedSquare] {
        &self.squares
    }

    /// Vertices in lexicographic order.
    pub fn vertices(&self) -> Vec<MultiIndex> {
        let mut v: Vec<_> = self.incidence.keys().cloned().collect();
        v.sort();
        v
    }

    pub fn contains_vertex(&self, n: &MultiIndex) -> bool {
        self.incidence.contains_key(n)
    }

    /// Orientation with which `s` (as an unoriented square) occurs, relative to `s`.
    pub fn orientation_of(&self, s: &OrientedSquare) -> Option<Sign> {
        self.keys
            .get(&s.key())
            .map(|&idx| self.squares[idx].sign() * s.sign())
    }

    pub fn is_interior(&self, n: &MultiIndex) -> bool {
        matches!(self.fan(n), Ok(Fan::Closed(_)))
    }

    /// Walk the squares around `n`: each square's outgoing edge at `n` is the
    /// incoming edge of the next one.
    fn fan(&self, n: &MultiIndex) -> Result<Fan, LatticeError> {
        let inc = self
            .incidence
            .get(n)
            .ok_or_else(|| LatticeError::NotInterior(n.clone()))?;
        let mut by_prev: HashMap<MultiIndex, usize> = HashMap::new();
        let mut next_of: HashMap<usize, MultiIndex> = HashMap::new();
        let mut prev_of: HashMap<usize, MultiIndex> = HashMap::new();
        for &s in inc {
            let v = self.squares[s].vertices();
            let p = v.iter().position(|x| x == n).unwrap();
            let prev = v[(p + 3) % 4].clone();
            let next = v[(p + 1) % 4].clone();
            by_prev.insert(prev.clone(), s);
            prev_of.insert(s, prev);
            next_of.insert(s, next);
        }
        let by_next: HashMap<MultiIndex, usize> =
            next_of.iter().map(|(&s, v)| (v.clone(), s)).collect();
        let start_open = inc
            .iter()
            .copied()
            .filter(|s| !by_next.contains_key(&prev_of[s]))
            .min();
        let start = start_open.unwrap_or_else(|| *inc.iter().min().unwrap());
        let mut order = vec![start];
        let mut cur = start;
        let closed = loop {
            match by_prev.get(&next_of[&cur]) {
                Some(&s) if s == start => break true,
                Some(&s) => {
                    if order.contains(&s) {
                        break false;
                    }
                    order.push(s);
                    cur = s;
                }
                None => break false,
            }
        };
        if order.len() != inc.len() {
            return Err(LatticeError::NotDisk(format!(
                "squares around vertex {n} do not form a single fan"
            )));
        }
        Ok(if closed && start_open.is_none() {
            Fan::Closed(order)
        } else {
            Fan::Open
        })
    }

    /// Petals around the interior vertex `n`, in cyclic order.
    pub fn flower(&self, n: &MultiIndex) -> Result<Vec<OrientedSquare>, LatticeError> {
        match self.fan(n) {
            Ok(Fan::Closed(order)) => {
                Ok(order.into_iter().map(|s| self.squares[s].clone()).collect())
            }
            _ => Err(LatticeError::NotInterior(n.clone())),
        }
    }

    /// Replace the corner of `cube` lying in the surface by the opposite corner.
    pub fn flip(&self, cube: &OrientedCube) -> Result<QuadSurface, LatticeError> {
        let not_flippable = |reason: String| LatticeError::NotFlippable {
            base: cube.base().clone(),
            reason,
        };
        if cube.base().dim() != self.dim {
            return Err(not_flippable("cube lives in a different lattice".into()));
        }
        let faces = cube.boundary();
        let present: Vec<(usize, Sign)> = faces
            .iter()
            .enumerate()
            .filter_map(|(f, (sq, c))| self.orientation_of(sq).map(|o| (f, o * c)))
            .collect();
        if present.len() != 3 {
            return Err(not_flippable(format!(
                "surface contains {} of its faces, a corner needs 3",
                present.len()
            )));
        }
        let pairs: BTreeSet<usize> = present.iter().map(|(f, _)| f % 3).collect();
        if pairs.len() != 3 {
            return Err(not_flippable("faces present do not form a corner".into()));
        }
        let rel = present[0].1;
        if present.iter().any(|&(_, r)| r != rel) {
            return Err(not_flippable(
                "corner faces are not coherently oriented".into(),
            ));
        }
        let apex_off = [
            present.iter().any(|&(f, _)| f == 1),
            present.iter().any(|&(f, _)| f == 2),
            present.iter().any(|&(f, _)| f == 0),
        ];
        let apex = CubeLabel::from_offsets(apex_off);
        let apex_vertex = cube.vertex(apex);
        match self.fan(&apex_vertex) {
            Ok(Fan::Closed(order)) if order.len() == 3 => {}
            _ => {
                return Err(not_flippable(format!(
                    "corner apex {apex_vertex} is not an interior vertex of valence 3"
                )))
            }
        }
        if self.contains_vertex(&cube.vertex(apex.opposite())) {
            return Err(not_flippable(
                "opposite apex already lies on the surface".into(),
            ));
        }

        let removed: BTreeSet<usize> = present
            .iter()
            .map(|(f, _)| self.keys[&faces[*f].0.key()])
            .collect();
        let mut added = faces
            .iter()
            .enumerate()
            .filter(|(f, _)| !present.iter().any(|(p, _)| p == f))
            .map(|(_, (sq, c))| {
                if -rel * c > 0 {
                    sq.clone()
                } else {
                    sq.reversed()
                }
            });
        let squares = self
            .squares
            .iter()
            .enumerate()
            .map(|(idx, s)| {
                if removed.contains(&idx) {
                    added.next().expect("three faces replace three faces")
                } else {
                    s.clone()
                }
            })
            .collect();
        QuadSurface::new(self.dim, squares)
    }

    /// Sign `r` such that flipping `cube` changes the chain by `-r` times its boundary.
    pub fn flip_sign(&self, cube: &OrientedCube) -> Option<Sign> {
        cube.boundary()
            .iter()
            .find_map(|(sq, c)| self.orientation_of(sq).map(|o| o * c))
    }

    /// Cubes that can be flipped against this surface, in lexicographic order.
    pub fn flippable_cubes(&self) -> Vec<OrientedCube> {
        let mut out = BTreeSet::new();
        for n in self.vertices() {
            let Ok(Fan::Closed(order)) = self.fan(&n) else {
                continue;
            };
            if order.len() != 3 {
                continue;
            }
            let mut dirs = BTreeSet::new();
            let mut base = n.clone();
            for &s in &order {
                let (i, j) = self.squares[s].dirs();
                dirs.insert(i);
                dirs.insert(j);
                for v in self.squares[s].vertices() {
                    let c: Vec<i64> = base
                        .coords()
                        .iter()
                        .zip(v.coords())
                        .map(|(a, b)| (*a).min(*b))
                        .collect();
                    base = MultiIndex::new(c);
                }
            }
            if dirs.len() != 3 {
                continue;
            }
            let d: Vec<Dir> = dirs.into_iter().collect();
            if let Ok(cube) = OrientedCube::new(base, [d[0], d[1], d[2]]) {
                if self.flip(&cube).is_ok() {
                    out.insert(cube);
                }
            }
        }
        out.into_iter().collect()
    }
}

/// Lift each petal of a flower at `n` to a 3D-corner in the auxiliary direction.
///
/// The corner over a petal is spanned by the petal and the edge `(n, n + e_aux)`
/// and contains the petal with its given orientation.
pub fn lift_flower(
    petals: &[OrientedSquare],
    n: &MultiIndex,
    aux: Dir,
) -> Result<Vec<Corner>, LatticeError> {
    if petals.len() < 3 {
        return Err(LatticeError::DegenerateFlower(format!(
            "{} petal(s); an interior vertex has at least 3",
            petals.len()
        )));
    }
    check_dir(n.dim(), aux)?;
    let mut edge_count: HashMap<MultiIndex, usize> = HashMap::new();
    for p in petals {
        let (i, j) = p.dirs();
        if i == aux || j == aux {
            return Err(LatticeError::DirectionCollision(aux));
        }
        let v = p.vertices();
        let slot = p.slot_of(n).ok_or_else(|| {
            LatticeError::DegenerateFlower(format!("petal {p} does not contain {n}"))
        })?;
        *edge_count.entry(v[(slot + 1) % 4].clone()).or_default() += 1;
        *edge_count.entry(v[(slot + 3) % 4].clone()).or_default() += 1;
    }
    if edge_count.values().any(|&c| c != 2) {
        return Err(LatticeError::DegenerateFlower(format!(
            "petals do not close up around {n}"
        )));
    }
    petals
        .iter()
        .map(|p| {
            let (i, j) = p.dirs();
            let cube = OrientedCube::new(p.base().clone(), [j, i, aux])?;
            Corner::at_vertex(cube, n)
        })
        .collect()
}
