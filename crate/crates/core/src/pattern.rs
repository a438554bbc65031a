//! Patterns over a finite alphabet, compared up to translation, plus window
//! extraction and forbidden-set avoidance.
//!
//! Symbols are stored as `u8` indices into an [`Alphabet`]. Windows with shape
//! F_n are packed into a `u64` rank (base-|A| digits, first cell in
//! lexicographic order most significant) by [`WindowCodec`].

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hypercubes_in, BoxRegion, Point, Shape};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new(symbols: Vec<String>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidArgument("alphabet must be nonempty".into()));
        }
        if symbols.len() > u8::MAX as usize + 1 {
            return Err(Error::InvalidArgument("alphabet larger than 256 symbols".into()));
        }
        let distinct: HashSet<&String> = symbols.iter().collect();
        if distinct.len() != symbols.len() {
            return Err(Error::InvalidArgument("alphabet symbols must be distinct".into()));
        }
        Ok(Alphabet { symbols })
    }

    /// `{0, 1, ..., size-1}` written as decimal strings.
    pub fn with_size(size: usize) -> Result<Self> {
        Alphabet::new((0..size).map(|i| i.to_string()).collect())
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, symbol: &str) -> Option<u8> {
        self.symbols.iter().position(|s| s == symbol).map(|i| i as u8)
    }

    /// Renders symbol indices, concatenated when every symbol is one character.
    pub fn render(&self, cells: &[u8]) -> String {
        let sep = if self.symbols.iter().all(|s| s.chars().count() == 1) { "" } else { " " };
        cells
            .iter()
            .map(|&c| self.symbols[c as usize].as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }
}

/// A finite pattern in canonical position: the lexicographically least cell
/// of its shape sits at the origin. Symbols follow the sorted cell order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PatternWire", into = "PatternWire")]
pub struct Pattern {
    shape: Shape,
    symbols: Vec<u8>,
}

impl PartialOrd for Pattern {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pattern {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.shape
            .points()
            .cmp(other.shape.points())
            .then_with(|| self.symbols.cmp(&other.symbols))
    }
}

impl std::hash::Hash for Pattern {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.shape.points().hash(state);
        self.symbols.hash(state);
    }
}

impl Pattern {
    /// Builds a pattern from a shape and one symbol per cell (sorted order).
    pub fn new(shape: Shape, symbols: Vec<u8>) -> Result<Self> {
        if shape.len() != symbols.len() {
            return Err(Error::InvalidArgument(format!(
                "shape has {} cells but {} symbols were given",
                shape.len(),
                symbols.len()
            )));
        }
        let shape = match shape.min_point() {
            Some(min) if min.coords().iter().any(|&c| c != 0) => shape.translate(&-min),
            _ => shape,
        };
        Ok(Pattern { shape, symbols })
    }

    /// A pattern on the box `[0, size)`, symbols in row-major order.
    pub fn on_box(size: Vec<usize>, symbols: Vec<u8>) -> Result<Self> {
        Pattern::new(Shape::from_box(BoxRegion::new(Point::origin(size.len()), size)), symbols)
    }

    /// A one-dimensional pattern from a string of digit symbols.
    pub fn from_digits(word: &str) -> Result<Self> {
        let symbols = word
            .chars()
            .map(|c| {
                c.to_digit(36)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::InvalidArgument(format!("not a digit symbol: {c}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Pattern::on_box(vec![symbols.len()], symbols)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn get(&self, p: &Point) -> Option<u8> {
        self.shape.index_of(p).map(|i| self.symbols[i])
    }

    /// Side length n when the shape is the cube F_n.
    pub fn cube_side(&self) -> Option<usize> {
        let b = self.shape.as_box().cloned().or_else(|| {
            let bb = self.shape.bounding_box()?;
            (bb.volume() == self.shape.len()).then_some(bb)
        })?;
        let n = b.size[0];
        b.size.iter().all(|&s| s == n).then_some(n)
    }
}

/// `u|_S`, with `S` given in the canonical coordinates of `u`.
pub fn restrict(u: &Pattern, s: &Shape) -> Result<Pattern> {
    let symbols = s
        .points()
        .iter()
        .map(|p| {
            u.get(p)
                .ok_or_else(|| Error::Domain(format!("cell {p:?} is outside the pattern's shape")))
        })
        .collect::<Result<Vec<_>>>()?;
    Pattern::new(s.clone(), symbols)
}

/// W_n(u): the distinct F_n-subpatterns of `u`, in canonical order.
pub fn windows(u: &Pattern, n: usize) -> Vec<Pattern> {
    let cube = BoxRegion::cube(u.dim(), n);
    let offsets: Vec<Point> = cube.points().collect();
    let distinct: BTreeSet<Vec<u8>> = hypercubes_in(u.shape(), n)
        .iter()
        .map(|a| offsets.iter().map(|o| u.get(&(a + o)).expect("cube inside shape")).collect())
        .collect();
    distinct
        .into_iter()
        .map(|symbols| Pattern::new(Shape::from_box(cube.clone()), symbols).expect("sizes agree"))
        .collect()
}

/// Packed ranks of the F_n-windows of `u`.
pub fn window_ranks(u: &Pattern, codec: &WindowCodec) -> HashSet<u64> {
    let offsets: Vec<Point> = codec.cube().points().collect();
    let mut buf = vec![0u8; offsets.len()];
    hypercubes_in(u.shape(), codec.n())
        .iter()
        .map(|a| {
            for (b, o) in buf.iter_mut().zip(&offsets) {
                *b = u.get(&(a + o)).expect("cube inside shape");
            }
            codec.encode(&buf)
        })
        .collect()
}

/// True iff no F_n-window of `u` belongs to `forbidden`.
pub fn avoids(u: &Pattern, forbidden: &[Pattern]) -> Result<bool> {
    let Some(first) = forbidden.first() else {
        return Ok(true);
    };
    let n = first
        .cube_side()
        .ok_or_else(|| Error::InvalidArgument("forbidden patterns must have cube shape F_n".into()))?;
    if forbidden
        .iter()
        .any(|f| f.dim() != u.dim() || f.cube_side() != Some(n))
    {
        return Err(Error::InvalidArgument(
            "forbidden patterns must all share one shape F_n".into(),
        ));
    }
    let banned: HashSet<&Pattern> = forbidden.iter().collect();
    Ok(windows(u, n).iter().all(|w| !banned.contains(w)))
}

/// Dense packing of F_n-patterns over an alphabet of size `q` into
/// `0..q^(n^d)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowCodec {
    dim: usize,
    n: usize,
    alphabet: usize,
    cells: usize,
    count: u64,
}

impl WindowCodec {
    pub fn new(dim: usize, n: usize, alphabet: usize) -> Result<Self> {
        if n == 0 || alphabet == 0 {
            return Err(Error::InvalidArgument("window side and alphabet must be positive".into()));
        }
        let cells = n
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::budget("window cells", "overflow", usize::MAX))?;
        let count = (alphabet as u64)
            .checked_pow(cells as u32)
            .ok_or_else(|| Error::budget("window patterns |A|^(n^d)", format!("{alphabet}^{cells}"), u64::MAX))?;
        Ok(WindowCodec {
            dim,
            n,
            alphabet,
            cells,
            count,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    /// n^d.
    pub fn cells(&self) -> usize {
        self.cells
    }

    /// |A|^(n^d).
    pub fn pattern_count(&self) -> u64 {
        self.count
    }

    pub fn cube(&self) -> BoxRegion {
        BoxRegion::cube(self.dim, self.n)
    }

    pub fn encode(&self, cells: &[u8]) -> u64 {
        debug_assert_eq!(cells.len(), self.cells);
        let q = self.alphabet as u64;
        cells.iter().fold(0u64, |acc, &c| acc * q + c as u64)
    }

    pub fn decode(&self, mut rank: u64) -> Vec<u8> {
        let q = self.alphabet as u64;
        let mut out = vec![0u8; self.cells];
        for c in out.iter_mut().rev() {
            *c = (rank % q) as u8;
            rank /= q;
        }
        out
    }

    pub fn pattern(&self, rank: u64) -> Pattern {
        Pattern::new(Shape::from_box(self.cube()), self.decode(rank)).expect("sizes agree")
    }

    pub fn rank_of(&self, p: &Pattern) -> Result<u64> {
        if p.dim() != self.dim || p.cube_side() != Some(self.n) {
            return Err(Error::InvalidArgument("pattern does not have shape F_n".into()));
        }
        if p.symbols().iter().any(|&s| s as usize >= self.alphabet) {
            return Err(Error::InvalidArgument("symbol outside the alphabet".into()));
        }
        Ok(self.encode(p.symbols()))
    }
}

/// A box-shaped assignment at a fixed position in Z^d.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub region: BoxRegion,
    pub cells: Vec<u8>,
}

impl Configuration {
    pub fn new(region: BoxRegion, cells: Vec<u8>) -> Result<Self> {
        if region.volume() != cells.len() {
            return Err(Error::InvalidArgument("cell count does not match region".into()));
        }
        Ok(Configuration { region, cells })
    }

    pub fn get(&self, p: &Point) -> Option<u8> {
        self.region.index_of(p).map(|i| self.cells[i])
    }

    pub fn to_pattern(&self) -> Pattern {
        Pattern::new(Shape::from_box(self.region.clone()), self.cells.clone()).expect("sizes agree")
    }

    pub fn shifted(&self, v: &Point) -> Configuration {
        Configuration {
            region: self.region.translate(v),
            cells: self.cells.clone(),
        }
    }
}

/// A box-shaped assignment where some cells may be unassigned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialConfiguration {
    pub region: BoxRegion,
    pub cells: Vec<Option<u8>>,
}

impl PartialConfiguration {
    pub fn empty(region: BoxRegion) -> Self {
        let len = region.volume();
        PartialConfiguration {
            region,
            cells: vec![None; len],
        }
    }

    pub fn get(&self, p: &Point) -> Option<u8> {
        self.region.index_of(p).and_then(|i| self.cells[i])
    }

    pub fn unassigned(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    /// Ranks of every F_n-window whose cells are all assigned.
    pub fn assigned_window_ranks(&self, codec: &WindowCodec) -> Vec<(Point, u64)> {
        let n = codec.n();
        if self.region.size.iter().any(|&s| s < n) {
            return Vec::new();
        }
        let anchors = BoxRegion::new(
            self.region.origin.clone(),
            self.region.size.iter().map(|s| s - n + 1).collect(),
        );
        let offsets: Vec<Point> = codec.cube().points().collect();
        let mut buf = vec![0u8; offsets.len()];
        anchors
            .points()
            .filter_map(|a| {
                for (b, o) in buf.iter_mut().zip(&offsets) {
                    *b = self.get(&(&a + o))?;
                }
                Some((a, codec.encode(&buf)))
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ShapeWire {
    Box(Vec<usize>),
    Points(Vec<Vec<i64>>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternWire {
    shape: ShapeWire,
    symbols: Vec<u8>,
}

impl From<Pattern> for PatternWire {
    fn from(p: Pattern) -> Self {
        let shape = match p.shape.as_box() {
            Some(b) => ShapeWire::Box(b.size.clone()),
            None => ShapeWire::Points(p.shape.points().iter().map(|q| q.coords().to_vec()).collect()),
        };
        PatternWire {
            shape,
            symbols: p.symbols,
        }
    }
}

impl TryFrom<PatternWire> for Pattern {
    type Error = Error;

    fn try_from(w: PatternWire) -> Result<Self> {
        match w.shape {
            ShapeWire::Box(size) => Pattern::on_box(size, w.symbols),
            ShapeWire::Points(pts) => {
                let dim = pts.first().map(|p| p.len()).unwrap_or(1);
                let shape = Shape::from_points(dim, pts.into_iter().map(Point::new))?;
                Pattern::new(shape, w.symbols)
            }
        }
    }
}
