//! Alphabets, rectangles, shift vectors and anchored rectangular patterns.
//!
//! Coordinates follow the usual math convention: `x` grows to the right
//! (the `S` direction) and `y` grows upward (the `T` direction). Cells are
//! stored row-major with the bottom row first.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense symbol identifier. Labels are display-only.
pub type Symbol = u8;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    labels: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::Contract("alphabet must be non-empty".into()));
        }
        if labels.len() > Symbol::MAX as usize + 1 {
            return Err(Error::Contract(format!(
                "alphabet of {} symbols exceeds the {} supported",
                labels.len(),
                Symbol::MAX as usize + 1
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Contract(format!("duplicate alphabet label {l:?}")));
            }
        }
        Ok(Alphabet { labels })
    }

    /// Alphabet `{0, .., size-1}` labelled by the decimal ids.
    pub fn numeric(size: usize) -> Result<Self> {
        Self::new((0..size).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, s: Symbol) -> bool {
        (s as usize) < self.labels.len()
    }

    pub fn label(&self, s: Symbol) -> &str {
        &self.labels[s as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn symbol_of(&self, label: &str) -> Option<Symbol> {
        self.labels.iter().position(|l| l == label).map(|i| i as Symbol)
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        (0..self.labels.len()).map(|i| i as Symbol)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rect {
    pub x0: i64,
    pub y0: i64,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x0: i64, y0: i64, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Contract(format!("rectangle must have positive size, got {width}x{height}")));
        }
        Ok(Rect { x0, y0, width, height })
    }

    /// Square of side `side` with lower-left corner at `(x0, y0)`.
    pub fn square(x0: i64, y0: i64, side: usize) -> Result<Self> {
        Self::new(x0, y0, side, side)
    }

    /// Exclusive right edge.
    pub fn x1(&self) -> i64 {
        self.x0 + self.width as i64
    }

    /// Exclusive top edge.
    pub fn y1(&self) -> i64 {
        self.y0 + self.height as i64
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn contains_point(&self, x: i64, y: i64) -> bool {
        x >= self.x0 && x < self.x1() && y >= self.y0 && y < self.y1()
    }

    pub fn contains(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.y0 >= self.y0 && other.x1() <= self.x1() && other.y1() <= self.y1()
    }

    pub fn offset(&self, v: ShiftVector) -> Result<Rect> {
        let x0 = self.x0.checked_add(v.n).ok_or_else(|| overflow(self, v))?;
        let y0 = self.y0.checked_add(v.m).ok_or_else(|| overflow(self, v))?;
        x0.checked_add(self.width as i64).ok_or_else(|| overflow(self, v))?;
        y0.checked_add(self.height as i64).ok_or_else(|| overflow(self, v))?;
        Ok(Rect { x0, y0, ..*self })
    }

    pub fn transpose(&self) -> Rect {
        Rect { x0: self.y0, y0: self.x0, width: self.height, height: self.width }
    }

    /// Cells in storage order: rows bottom-up, left to right inside a row.
    pub fn points(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (self.y0..self.y1()).flat_map(move |y| (self.x0..self.x1()).map(move |x| (x, y)))
    }
}

fn overflow(r: &Rect, v: ShiftVector) -> Error {
    Error::Range(format!("translating {r:?} by ({}, {}) overflows", v.n, v.m))
}

/// Exponents `(n, m)` of `S^n T^m`, i.e. the shift by `(n, m)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShiftVector {
    pub n: i64,
    pub m: i64,
}

impl ShiftVector {
    pub const ZERO: ShiftVector = ShiftVector { n: 0, m: 0 };

    pub const fn new(n: i64, m: i64) -> Self {
        ShiftVector { n, m }
    }
}

/// Canonical order: by `m`, then `n`.
impl Ord for ShiftVector {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.m, self.n).cmp(&(other.m, other.n))
    }
}

impl PartialOrd for ShiftVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for ShiftVector {
    type Output = ShiftVector;
    fn add(self, o: ShiftVector) -> ShiftVector {
        ShiftVector::new(self.n + o.n, self.m + o.m)
    }
}

impl Sub for ShiftVector {
    type Output = ShiftVector;
    fn sub(self, o: ShiftVector) -> ShiftVector {
        ShiftVector::new(self.n - o.n, self.m - o.m)
    }
}

impl Neg for ShiftVector {
    type Output = ShiftVector;
    fn neg(self) -> ShiftVector {
        ShiftVector::new(-self.n, -self.m)
    }
}

impl fmt::Display for ShiftVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n, self.m)
    }
}

/// A finite block of symbols on an anchored rectangle.
///
/// Equality, ordering and hashing look only at the support and the cells.
#[derive(Clone, Debug)]
pub struct Pattern {
    alphabet: Arc<Alphabet>,
    support: Rect,
    cells: Vec<Symbol>,
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.support == other.support && self.cells == other.cells
    }
}

impl Eq for Pattern {}

impl Hash for Pattern {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.support.hash(state);
        self.cells.hash(state);
    }
}

impl Ord for Pattern {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.support.height, self.support.width, self.support.y0, self.support.x0, &self.cells).cmp(&(
            other.support.height,
            other.support.width,
            other.support.y0,
            other.support.x0,
            &other.cells,
        ))
    }
}

impl PartialOrd for Pattern {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Pattern {
    pub fn new(alphabet: Arc<Alphabet>, support: Rect, cells: Vec<Symbol>) -> Result<Self> {
        if cells.len() != support.area() {
            return Err(Error::Contract(format!(
                "pattern has {} cells but its support holds {}",
                cells.len(),
                support.area()
            )));
        }
        if let Some(&bad) = cells.iter().find(|&&c| !alphabet.contains(c)) {
            return Err(Error::InvalidSymbol { symbol: bad, alphabet_size: alphabet.len() });
        }
        Ok(Pattern { alphabet, support, cells })
    }

    /// Pattern filled with a single symbol.
    pub fn filled(alphabet: Arc<Alphabet>, support: Rect, s: Symbol) -> Result<Self> {
        let n = support.area();
        Self::new(alphabet, support, vec![s; n])
    }

    /// Build from rows listed bottom-up.
    pub fn from_rows(alphabet: Arc<Alphabet>, origin: (i64, i64), rows: &[Vec<Symbol>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Contract("rows have unequal lengths".into()));
        }
        let support = Rect::new(origin.0, origin.1, width, height)?;
        Self::new(alphabet, support, rows.concat())
    }

    pub(crate) fn from_parts_unchecked(alphabet: Arc<Alphabet>, support: Rect, cells: Vec<Symbol>) -> Self {
        debug_assert_eq!(cells.len(), support.area());
        Pattern { alphabet, support, cells }
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn support(&self) -> Rect {
        self.support
    }

    pub fn width(&self) -> usize {
        self.support.width
    }

    pub fn height(&self) -> usize {
        self.support.height
    }

    pub fn cells(&self) -> &[Symbol] {
        &self.cells
    }

    /// Rows bottom-up.
    pub fn rows(&self) -> impl Iterator<Item = &[Symbol]> {
        self.cells.chunks(self.support.width)
    }

    /// Symbol at absolute coordinate `(x, y)`.
    pub fn get(&self, x: i64, y: i64) -> Option<Symbol> {
        if self.support.contains_point(x, y) {
            Some(self.at_local((x - self.support.x0) as usize, (y - self.support.y0) as usize))
        } else {
            None
        }
    }

    /// Symbol at offset `(dx, dy)` from the lower-left corner.
    #[inline]
    pub fn at_local(&self, dx: usize, dy: usize) -> Symbol {
        self.cells[dy * self.support.width + dx]
    }

    /// Restriction to `r`, anchored at `r`.
    pub fn subpattern(&self, r: Rect) -> Result<Pattern> {
        if !self.support.contains(&r) {
            let corner = if !self.support.contains_point(r.x0, r.y0) { (r.x0, r.y0) } else { (r.x1() - 1, r.y1() - 1) };
            return Err(Error::Range(format!(
                "rectangle {r:?} leaves support {:?} at corner {corner:?}",
                self.support
            )));
        }
        Ok(self.subpattern_unchecked(r))
    }

    pub(crate) fn subpattern_unchecked(&self, r: Rect) -> Pattern {
        let dx = (r.x0 - self.support.x0) as usize;
        let dy = (r.y0 - self.support.y0) as usize;
        let mut cells = Vec::with_capacity(r.area());
        for row in 0..r.height {
            let start = (dy + row) * self.support.width + dx;
            cells.extend_from_slice(&self.cells[start..start + r.width]);
        }
        Pattern { alphabet: self.alphabet.clone(), support: r, cells }
    }

    /// Reading the result at `(i, j)` equals reading the configuration
    /// shifted by `v` at `(i, j)`, i.e. this pattern at `(i + v.n, j + v.m)`.
    pub fn translate(&self, v: ShiftVector) -> Result<Pattern> {
        let support = self.support.offset(-v)?;
        Ok(Pattern { alphabet: self.alphabet.clone(), support, cells: self.cells.clone() })
    }

    /// Same cells, lower-left corner moved to `origin`.
    pub fn reanchor(&self, origin: (i64, i64)) -> Pattern {
        Pattern {
            alphabet: self.alphabet.clone(),
            support: Rect { x0: origin.0, y0: origin.1, ..self.support },
            cells: self.cells.clone(),
        }
    }

    /// Mirror across the diagonal `x = y`.
    pub fn transpose(&self) -> Pattern {
        let (w, h) = (self.support.width, self.support.height);
        let mut cells = Vec::with_capacity(w * h);
        for x in 0..w {
            for y in 0..h {
                cells.push(self.cells[y * w + x]);
            }
        }
        Pattern { alphabet: self.alphabet.clone(), support: self.support.transpose(), cells }
    }

    /// Replace every symbol through `f`, keeping the support.
    pub fn map_symbols(&self, alphabet: Arc<Alphabet>, f: impl Fn(Symbol) -> Symbol) -> Result<Pattern> {
        Pattern::new(alphabet, self.support, self.cells.iter().map(|&c| f(c)).collect())
    }

    /// All shifts `v` with `haystack|_{needle.support + v}` equal to the
    /// needle's cells, sorted by `(m, n)`.
    pub fn occurrences(needle: &Pattern, haystack: &Pattern) -> Result<Vec<ShiftVector>> {
        if needle.alphabet != haystack.alphabet {
            return Err(Error::AlphabetMismatch);
        }
        let (hs, ns) = (haystack.support, needle.support);
        if ns.width > hs.width || ns.height > hs.height {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for dy in 0..=(hs.height - ns.height) {
            for dx in 0..=(hs.width - ns.width) {
                let hit = (0..ns.height).all(|row| {
                    let h0 = (dy + row) * hs.width + dx;
                    haystack.cells[h0..h0 + ns.width] == needle.cells[row * ns.width..(row + 1) * ns.width]
                });
                if hit {
                    out.push(ShiftVector::new(hs.x0 + dx as i64 - ns.x0, hs.y0 + dy as i64 - ns.y0));
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> PatternJson {
        PatternJson {
            alphabet: self.alphabet.labels().to_vec(),
            origin: [self.support.x0, self.support.y0],
            width: self.support.width,
            height: self.support.height,
            rows: self.rows().map(<[Symbol]>::to_vec).collect(),
        }
    }

    pub fn from_json(j: &PatternJson) -> Result<Pattern> {
        let alphabet = Arc::new(Alphabet::new(j.alphabet.iter().cloned())?);
        if j.rows.len() != j.height || j.rows.iter().any(|r| r.len() != j.width) {
            return Err(Error::Contract(format!("pattern JSON declares {}x{} but rows disagree", j.width, j.height)));
        }
        Pattern::from_rows(alphabet, (j.origin[0], j.origin[1]), &j.rows)
    }

    /// Plain PGM (P2), top row first as the format requires.
    pub fn to_pgm(&self) -> String {
        let k = self.alphabet.len();
        let gray = |s: Symbol| if k <= 1 { 0 } else { 255 * s as usize / (k - 1) };
        let mut out = format!("P2\n{} {}\n255\n", self.support.width, self.support.height);
        for row in self.cells.chunks(self.support.width).rev() {
            let line: Vec<String> = row.iter().map(|&s| gray(s).to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Serialized pattern, rows listed bottom-up.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternJson {
    pub alphabet: Vec<String>,
    pub origin: [i64; 2],
    pub width: usize,
    pub height: usize,
    pub rows: Vec<Vec<Symbol>>,
}

impl Serialize for Pattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PatternJson::deserialize(d)?;
        Pattern::from_json(&j).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Pattern {
    /// Top row first, so the text looks like the picture.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wide = self.alphabet.labels().iter().any(|l| l.chars().count() > 1);
        for row in self.cells.chunks(self.support.width).rev() {
            let cells: Vec<&str> = row.iter().map(|&s| self.alphabet.label(s)).collect();
            writeln!(f, "{}", cells.join(if wide { " " } else { "" }))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bin() -> Arc<Alphabet> {
        Arc::new(Alphabet::numeric(2).unwrap())
    }

    fn parity(i: u64) -> u8 {
        (i.count_ones() % 2) as u8
    }

    /// 4x4 Morse block from the digit-sum closed form.
    fn morse4() -> Pattern {
        let rows: Vec<Vec<u8>> = (0..4).map(|j| (0..4).map(|i| (parity(i) + parity(j)) % 2).collect()).collect();
        Pattern::from_rows(bin(), (0, 0), &rows).unwrap()
    }

    #[test]
    fn alphabet_rejects_empty_and_duplicates() {
        assert!(Alphabet::new(Vec::<String>::new()).is_err());
        assert!(Alphabet::new(["a", "a"]).is_err());
        assert_eq!(Alphabet::numeric(3).unwrap().symbol_of("2"), Some(2));
    }

    #[test]
    fn rect_requires_positive_size() {
        assert!(Rect::new(0, 0, 0, 1).is_err());
        assert!(Rect::new(0, 0, 1, 0).is_err());
    }

    #[test]
    fn pattern_rejects_foreign_symbols() {
        let r = Rect::new(0, 0, 2, 1).unwrap();
        assert!(matches!(Pattern::new(bin(), r, vec![0, 2]), Err(Error::InvalidSymbol { symbol: 2, .. })));
        assert!(Pattern::new(bin(), r, vec![0]).is_err());
    }

    #[test]
    fn subpattern_identity_and_corner() {
        let p = morse4();
        assert_eq!(p.subpattern(p.support()).unwrap(), p);
        let q = p.subpattern(Rect::new(0, 0, 2, 2).unwrap()).unwrap();
        assert_eq!(q.cells(), &[0, 1, 1, 0]);
    }

    #[test]
    fn subpattern_out_of_bounds_names_corner() {
        let p = morse4();
        let err = p.subpattern(Rect::new(3, 3, 2, 2).unwrap()).unwrap_err();
        match err {
            Error::Range(msg) => assert!(msg.contains("(4, 4)"), "{msg}"),
            e => panic!("unexpected {e:?}"),
        }
        assert!(p.subpattern(Rect::new(-1, 0, 1, 1).unwrap()).is_err());
    }

    #[test]
    fn translate_identity_inverse_and_reading() {
        let p = morse4();
        assert_eq!(p.translate(ShiftVector::ZERO).unwrap(), p);
        let v = ShiftVector::new(3, -2);
        assert_eq!(p.translate(v).unwrap().translate(-v).unwrap(), p);
        let t = p.translate(ShiftVector::new(1, 0)).unwrap();
        for j in 0..4 {
            for i in 0..3 {
                assert_eq!(t.get(i, j), p.get(i + 1, j));
            }
        }
    }

    #[test]
    fn translate_overflow_is_range_error() {
        let p = Pattern::filled(bin(), Rect::new(i64::MIN + 1, 0, 1, 1).unwrap(), 0).unwrap();
        assert!(matches!(p.translate(ShiftVector::new(2, 0)), Err(Error::Range(_))));
    }

    #[test]
    fn occurrences_examples() {
        let p = morse4();
        assert!(Pattern::occurrences(&p, &p).unwrap().contains(&ShiftVector::ZERO));
        let zero = Pattern::filled(bin(), Rect::new(0, 0, 1, 1).unwrap(), 0).unwrap();
        assert_eq!(Pattern::occurrences(&zero, &p).unwrap().len(), 8);
        let big = Pattern::filled(bin(), Rect::new(0, 0, 5, 5).unwrap(), 0).unwrap();
        assert!(Pattern::occurrences(&big, &p).unwrap().is_empty());
        let other =
            Pattern::filled(Arc::new(Alphabet::numeric(3).unwrap()), Rect::new(0, 0, 1, 1).unwrap(), 0).unwrap();
        assert!(matches!(Pattern::occurrences(&other, &p), Err(Error::AlphabetMismatch)));
    }

    #[test]
    fn occurrences_sorted_by_m_then_n() {
        let p = morse4();
        let zero = Pattern::filled(bin(), Rect::new(0, 0, 1, 1).unwrap(), 0).unwrap();
        let occ = Pattern::occurrences(&zero, &p).unwrap();
        let mut sorted = occ.clone();
        sorted.sort();
        assert_eq!(occ, sorted);
        assert_eq!(occ[0], ShiftVector::new(0, 0));
        assert_eq!(occ[1], ShiftVector::new(3, 0));
    }

    #[test]
    fn json_round_trip_and_row_order() {
        let p = morse4().reanchor((-2, -2));
        let j = serde_json::to_string(&p).unwrap();
        assert!(j.starts_with(r#"{"alphabet":["0","1"],"origin":[-2,-2],"width":4,"height":4,"rows":[[0,1,1,0],"#));
        let back: Pattern = serde_json::from_str(&j).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn pgm_levels() {
        let p = Pattern::from_rows(bin(), (0, 0), &[vec![0, 1], vec![1, 1]]).unwrap();
        assert_eq!(p.to_pgm(), "P2\n2 2\n255\n255 255\n0 255\n");
        let one = Arc::new(Alphabet::numeric(1).unwrap());
        let q = Pattern::filled(one, Rect::new(0, 0, 1, 1).unwrap(), 0).unwrap();
        assert_eq!(q.to_pgm(), "P2\n1 1\n255\n0\n");
    }

    fn arb_pattern() -> impl Strategy<Value = Pattern> {
        (1usize..7, 1usize..7, -5i64..5, -5i64..5).prop_flat_map(|(w, h, x0, y0)| {
            proptest::collection::vec(0u8..3, w * h).prop_map(move |cells| {
                let a = Arc::new(Alphabet::numeric(3).unwrap());
                Pattern::new(a, Rect::new(x0, y0, w, h).unwrap(), cells).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn subpattern_commutes_with_translate(p in arb_pattern(), n in -4i64..4, m in -4i64..4,
                                              fa in 0.0f64..1.0, fb in 0.0f64..1.0, fc in 0.0f64..1.0, fd in 0.0f64..1.0) {
            let s = p.support();
            let a = (fa * s.width as f64) as usize;
            let b = (fb * s.height as f64) as usize;
            let c = 1 + (fc * (s.width - a) as f64) as usize;
            let d = 1 + (fd * (s.height - b) as f64) as usize;
            let v = ShiftVector::new(n, m);
            // r lives in the translated frame; r + v lives in p's frame.
            let r = Rect::new(s.x0 + a as i64 - n, s.y0 + b as i64 - m, c, d).unwrap();
            let lhs = p.translate(v).unwrap().subpattern(r).unwrap();
            let rhs = p.subpattern(r.offset(v).unwrap()).unwrap().translate(v).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn occurrences_are_exact(h in arb_pattern(), w in 1usize..3, hh in 1usize..3) {
            prop_assume!(w <= h.width() && hh <= h.height());
            let s = h.support();
            let needle = h.subpattern(Rect::new(s.x0, s.y0, w, hh).unwrap()).unwrap();
            let occ = Pattern::occurrences(&needle, &h).unwrap();
            for dy in 0..=(s.height - hh) as i64 {
                for dx in 0..=(s.width - w) as i64 {
                    let v = ShiftVector::new(dx, dy);
                    let window = h.subpattern(needle.support().offset(v).unwrap()).unwrap();
                    prop_assert_eq!(occ.contains(&v), window.cells() == needle.cells());
                }
            }
        }

        #[test]
        fn json_round_trip(p in arb_pattern()) {
            let back = Pattern::from_json(&p.to_json()).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
