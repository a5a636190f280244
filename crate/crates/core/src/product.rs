//! Symbolic products `W(X, Y, phi)` and their detection in 2D patches.
//!
//! A patch is product-consistent at radius `r` around an anchor when the
//! symbol at `anchor + (i, j)` is a function of the two axis blocks seen at
//! `anchor + (i, 0)` and `anchor + (0, j)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::Serialize;

use crate::cubes::{quadruple_positions, CubeQuadruple, WindowIndex, WindowSpec};
use crate::error::{Error, Result};
use crate::grid::{Alphabet, Pattern, Rect, ShiftVector, Symbol};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductSpec {
    pub row_word: Vec<Symbol>,
    pub col_word: Vec<Symbol>,
    pub phi: BTreeMap<(Symbol, Symbol), Symbol>,
    pub alphabet: Arc<Alphabet>,
}

impl ProductSpec {
    pub fn from_fn(
        row_word: Vec<Symbol>,
        col_word: Vec<Symbol>,
        alphabet: Arc<Alphabet>,
        f: impl Fn(Symbol, Symbol) -> Symbol,
    ) -> ProductSpec {
        let phi = row_word
            .iter()
            .flat_map(|&a| col_word.iter().map(move |&b| (a, b)))
            .map(|(a, b)| ((a, b), f(a, b)))
            .collect();
        ProductSpec { row_word, col_word, phi, alphabet }
    }
}

/// The `|row_word| x |col_word|` pattern with cell `(i, j) = phi(row[i], col[j])`.
pub fn build_product(spec: &ProductSpec) -> Result<Pattern> {
    let (w, h) = (spec.row_word.len(), spec.col_word.len());
    if w == 0 || h == 0 {
        return Err(Error::Contract("product words must be non-empty".into()));
    }
    let mut cells = Vec::with_capacity(w * h);
    for &b in &spec.col_word {
        for &a in &spec.row_word {
            let s = *spec
                .phi
                .get(&(a, b))
                .ok_or_else(|| Error::Contract(format!("phi is undefined on the pair ({a}, {b})")))?;
            cells.push(s);
        }
    }
    Pattern::new(spec.alphabet.clone(), Rect::new(0, 0, w, h)?, cells)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProductDecomposition {
    pub radius: usize,
    pub anchor: [i64; 2],
    pub row_alphabet: Vec<Pattern>,
    pub col_alphabet: Vec<Pattern>,
    /// `[rowIdx, colIdx, symbol]`, sorted.
    pub phi: Vec<(u32, u32, Symbol)>,
    /// Offsets `i` covered by the row word, as `[first, last]`.
    pub row_range: [i64; 2],
    pub col_range: [i64; 2],
    /// Row-block index at each offset of `row_range`.
    pub row_word: Vec<u32>,
    pub col_word: Vec<u32>,
    #[serde(skip)]
    pub alphabet: Arc<Alphabet>,
}

impl ProductDecomposition {
    pub fn phi_of(&self, row: u32, col: u32) -> Option<Symbol> {
        self.phi.binary_search_by_key(&(row, col), |&(r, c, _)| (r, c)).ok().map(|k| self.phi[k].2)
    }

    /// The scanned region rebuilt from the factor words and `phi`.
    pub fn rebuild(&self) -> Result<Pattern> {
        let cells = self
            .col_word
            .iter()
            .flat_map(|&c| self.row_word.iter().map(move |&r| (r, c)))
            .map(|(r, c)| self.phi_of(r, c).ok_or_else(|| Error::Contract(format!("phi has no entry for ({r}, {c})"))))
            .collect::<Result<Vec<_>>>()?;
        let support = Rect::new(
            self.anchor[0] + self.row_range[0],
            self.anchor[1] + self.col_range[0],
            self.row_word.len(),
            self.col_word.len(),
        )?;
        Pattern::new(self.alphabet.clone(), support, cells)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConflictWitness {
    pub radius: usize,
    pub anchor: [i64; 2],
    pub row_block: u32,
    pub col_block: u32,
    /// Offsets `(i, j)` from the anchor.
    pub first: (i64, i64),
    pub second: (i64, i64),
    pub first_symbol: Symbol,
    pub second_symbol: Symbol,
    /// Number of scanned positions disagreeing with the first value of their pair.
    pub conflicts: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ProductOutcome {
    Decomposition(ProductDecomposition),
    Conflict(ConflictWitness),
}

impl ProductOutcome {
    pub fn is_product(&self) -> bool {
        matches!(self, ProductOutcome::Decomposition(_))
    }
}

/// `[-r, r]^2`.
pub fn radius_window(r: usize) -> Rect {
    Rect { x0: -(r as i64), y0: -(r as i64), width: 2 * r + 1, height: 2 * r + 1 }
}

pub fn detect_product(patch: &Pattern, radius: usize, anchor: ShiftVector) -> Result<ProductOutcome> {
    let s = patch.support();
    let index = WindowIndex::new(patch, radius_window(radius))
        .map_err(|_| Error::Contract(format!("radius {radius} is too large for the {}x{} patch", s.width, s.height)))?;
    let bases = index.bases();
    if !bases.contains_point(anchor.n, anchor.m) {
        return Err(Error::Contract(format!("anchor {anchor} block at radius {radius} does not fit in the patch")));
    }
    let row_range = [bases.x0 - anchor.n, bases.x1() - 1 - anchor.n];
    let col_range = [bases.y0 - anchor.m, bases.y1() - 1 - anchor.m];
    let mut row_ids = HashMap::new();
    let mut row_word = Vec::new();
    let mut row_alphabet = Vec::new();
    for i in row_range[0]..=row_range[1] {
        let id = index.id_at(anchor + ShiftVector::new(i, 0)).expect("row block fits");
        let next = row_ids.len() as u32;
        let k = *row_ids.entry(id).or_insert_with(|| {
            row_alphabet.push(index.pattern(id).clone());
            next
        });
        row_word.push(k);
    }
    let mut col_ids = HashMap::new();
    let mut col_word = Vec::new();
    let mut col_alphabet = Vec::new();
    for j in col_range[0]..=col_range[1] {
        let id = index.id_at(anchor + ShiftVector::new(0, j)).expect("column block fits");
        let next = col_ids.len() as u32;
        let k = *col_ids.entry(id).or_insert_with(|| {
            col_alphabet.push(index.pattern(id).clone());
            next
        });
        col_word.push(k);
    }
    let mut table: BTreeMap<(u32, u32), (Symbol, (i64, i64))> = BTreeMap::new();
    let mut first_conflict: Option<ConflictWitness> = None;
    let mut conflicts = 0;
    for (dj, &c) in col_word.iter().enumerate() {
        let j = col_range[0] + dj as i64;
        for (di, &r) in row_word.iter().enumerate() {
            let i = row_range[0] + di as i64;
            let sym = patch.get(anchor.n + i, anchor.m + j).expect("scanned cell in patch");
            let &mut (seen, at) = table.entry((r, c)).or_insert((sym, (i, j)));
            if seen != sym {
                conflicts += 1;
                let w = ConflictWitness {
                    radius,
                    anchor: [anchor.n, anchor.m],
                    row_block: r,
                    col_block: c,
                    first: at,
                    second: (i, j),
                    first_symbol: seen,
                    second_symbol: sym,
                    conflicts: 0,
                };
                let better = first_conflict.as_ref().is_none_or(|f| {
                    (w.row_block, w.col_block, (w.second.1, w.second.0))
                        < (f.row_block, f.col_block, (f.second.1, f.second.0))
                });
                if better {
                    first_conflict = Some(w);
                }
            }
        }
    }
    if let Some(mut w) = first_conflict {
        w.conflicts = conflicts;
        return Ok(ProductOutcome::Conflict(w));
    }
    Ok(ProductOutcome::Decomposition(ProductDecomposition {
        radius,
        anchor: [anchor.n, anchor.m],
        row_alphabet,
        col_alphabet,
        phi: table.into_iter().map(|((r, c), (s, _))| (r, c, s)).collect(),
        row_range,
        col_range,
        row_word,
        col_word,
        alphabet: patch.alphabet().clone(),
    }))
}

/// Tries anchors on a centred grid of half-width `spread`; returns the
/// first success in `(y, x)` order, or else the conflict with the fewest
/// disagreements.
pub fn best_anchor(patch: &Pattern, radius: usize, spread: i64) -> Result<ProductOutcome> {
    let s = patch.support();
    let (cx, cy) = (s.x0 + s.width as i64 / 2, s.y0 + s.height as i64 / 2);
    let mut best: Option<ConflictWitness> = None;
    for dy in -spread..=spread {
        for dx in -spread..=spread {
            let a = ShiftVector::new(cx + dx, cy + dy);
            match detect_product(patch, radius, a) {
                Ok(ProductOutcome::Decomposition(d)) => return Ok(ProductOutcome::Decomposition(d)),
                Ok(ProductOutcome::Conflict(w)) => {
                    if best.as_ref().is_none_or(|b| w.conflicts < b.conflicts) {
                        best = Some(w);
                    }
                }
                Err(_) => {}
            }
        }
    }
    best.map(ProductOutcome::Conflict)
        .ok_or_else(|| Error::Contract(format!("no anchor admits radius {radius} blocks")))
}

/// Every factor of the row and column words, up to their full lengths.
pub fn extract_factors(d: &ProductDecomposition) -> (BTreeSet<Vec<u32>>, BTreeSet<Vec<u32>>) {
    (all_factors(&d.row_word), all_factors(&d.col_word))
}

fn all_factors(word: &[u32]) -> BTreeSet<Vec<u32>> {
    (1..=word.len()).flat_map(|len| word.windows(len).map(|w| w.to_vec())).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThreeCoordinateViolation {
    /// Coordinate (0..3) on which the two quadruples differ.
    pub coordinate: usize,
    pub first: CubeQuadruple,
    pub second: CubeQuadruple,
    /// Indices of the sampled patches the two quadruples were read from.
    pub first_patch: usize,
    pub second_patch: usize,
}

impl ThreeCoordinateViolation {
    /// Absolute cells where the two differing windows disagree, as pairs of
    /// cells in the first and second window.
    pub fn differing_cells(&self) -> Vec<((i64, i64), (i64, i64))> {
        let c = self.coordinate;
        let (p, q) = (&self.first.patterns[c], &self.second.patterns[c]);
        let (a, b) = (self.first.positions()[c], self.second.positions()[c]);
        p.support()
            .points()
            .filter(|&(x, y)| p.get(x, y) != q.get(x, y))
            .map(|(x, y)| ((x + a.n, y + a.m), (x + b.n, y + b.m)))
            .collect()
    }
}

/// No two window quadruples share three coordinates while differing on the
/// fourth. The reported pair is the earliest conflict in canonical order.
pub fn verify_three_coordinate_rule(patch: &Pattern, spec: &WindowSpec) -> Result<Option<ThreeCoordinateViolation>> {
    verify_three_coordinate_rule_sample(&[patch], spec)
}

/// As [`verify_three_coordinate_rule`], with the window cube set taken over
/// several patches of the same system, scanned in order.
pub fn verify_three_coordinate_rule_sample(
    patches: &[&Pattern],
    spec: &WindowSpec,
) -> Result<Option<ThreeCoordinateViolation>> {
    if patches.windows(2).any(|w| w[0].alphabet() != w[1].alphabet()) {
        return Err(Error::AlphabetMismatch);
    }
    let indices = patches.iter().map(|p| WindowIndex::new(p, spec.window)).collect::<Result<Vec<_>>>()?;
    let mut global: HashMap<&Pattern, u32> = HashMap::new();
    let local_to_global: Vec<Vec<u32>> = indices
        .iter()
        .map(|ix| {
            ix.patterns()
                .iter()
                .map(|p| {
                    let next = global.len() as u32;
                    *global.entry(p).or_insert(next)
                })
                .collect()
        })
        .collect();
    type Seen = HashMap<[u32; 3], (u32, usize, ShiftVector, i64, i64)>;
    let mut seen: [Seen; 4] = Default::default();
    for (k, index) in indices.iter().enumerate() {
        for b in points(index.bases()) {
            for n in -spec.nmax..=spec.nmax {
                for m in -spec.mmax..=spec.mmax {
                    let Some(local) = read_ids(index, quadruple_positions(b, n, m, 0)) else { continue };
                    let ids = local.map(|i| local_to_global[k][i as usize]);
                    for (c, map) in seen.iter_mut().enumerate() {
                        let others = drop_coordinate(ids, c);
                        match map.get(&others) {
                            Some(&(v, k0, b0, n0, m0)) if v != ids[c] => {
                                let q = |ix: &WindowIndex, base, n, m| CubeQuadruple {
                                    base,
                                    n,
                                    m,
                                    shear: 0,
                                    patterns: read_ids(ix, quadruple_positions(base, n, m, 0))
                                        .expect("fits")
                                        .map(|i| ix.pattern(i).clone()),
                                };
                                return Ok(Some(ThreeCoordinateViolation {
                                    coordinate: c,
                                    first: q(&indices[k0], b0, n0, m0),
                                    second: q(index, b, n, m),
                                    first_patch: k0,
                                    second_patch: k,
                                }));
                            }
                            Some(_) => {}
                            None => {
                                map.insert(others, (ids[c], k, b, n, m));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

fn points(r: Rect) -> impl Iterator<Item = ShiftVector> {
    r.points().map(|(x, y)| ShiftVector::new(x, y)).collect::<Vec<_>>().into_iter()
}

fn read_ids(index: &WindowIndex, pos: [ShiftVector; 4]) -> Option<[u32; 4]> {
    Some([index.id_at(pos[0])?, index.id_at(pos[1])?, index.id_at(pos[2])?, index.id_at(pos[3])?])
}

fn drop_coordinate(ids: [u32; 4], c: usize) -> [u32; 3] {
    let mut out = [0; 3];
    let mut k = 0;
    for (i, &v) in ids.iter().enumerate() {
        if i != c {
            out[k] = v;
            k += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::substitution::{central_patch, iterate1d, morse_rule, thue_morse_rule};

    fn bits() -> Arc<Alphabet> {
        Arc::new(Alphabet::numeric(2).unwrap())
    }

    #[test]
    fn projection_gives_constant_columns() {
        let spec = ProductSpec::from_fn(vec![0, 1, 1, 0], vec![1, 0, 0], bits(), |a, _| a);
        let p = build_product(&spec).unwrap();
        for x in 0..4 {
            assert!((0..3).all(|y| p.get(x, y) == p.get(x, 0)));
        }
    }

    #[test]
    fn one_letter_column() {
        let spec = ProductSpec::from_fn(vec![0, 1, 1], vec![1], bits(), |a, b| (a + b) % 2);
        assert_eq!(build_product(&spec).unwrap().cells(), &[1, 0, 0]);
    }

    #[test]
    fn undefined_phi_is_contract_error() {
        let mut spec = ProductSpec::from_fn(vec![0, 1], vec![0], bits(), |a, _| a);
        spec.phi.remove(&(1, 0));
        let err = build_product(&spec).unwrap_err();
        assert!(matches!(err, Error::Contract(ref m) if m.contains("(1, 0)")));
    }

    #[test]
    fn thue_morse_product_is_morse() {
        let t = iterate1d(&thue_morse_rule(), 0, 5).unwrap();
        let spec = ProductSpec::from_fn(t.clone(), t, bits(), |a, b| (a + b) % 2);
        let p = build_product(&spec).unwrap();
        let m = crate::substitution::iterate(&morse_rule(), 0, 5).unwrap();
        assert_eq!(p.cells(), m.cells());
    }

    #[test]
    fn product_round_trip() {
        let spec = ProductSpec::from_fn(vec![0, 1, 1, 0, 1], vec![0, 0, 1, 1, 1, 0], bits(), |a, b| a ^ b);
        let p = build_product(&spec).unwrap();
        match detect_product(&p, 0, ShiftVector::ZERO).unwrap() {
            ProductOutcome::Decomposition(d) => {
                assert_eq!(d.rebuild().unwrap(), p);
                assert_eq!(d.row_alphabet.len(), 2);
                for (r, c, s) in &d.phi {
                    let a = d.row_alphabet[*r as usize].cells()[0];
                    let b = d.col_alphabet[*c as usize].cells()[0];
                    assert_eq!(*s, a ^ b);
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn morse_radius_zero_is_sum() {
        let p = central_patch(&morse_rule(), 5).unwrap();
        let ProductOutcome::Decomposition(d) = detect_product(&p, 0, ShiftVector::ZERO).unwrap() else {
            panic!("expected decomposition")
        };
        for (r, c, s) in &d.phi {
            let a = d.row_alphabet[*r as usize].cells()[0];
            let b = d.col_alphabet[*c as usize].cells()[0];
            assert_eq!(*s, (a + b) % 2);
        }
    }

    #[test]
    fn periodic_factor_languages() {
        let spec = ProductSpec::from_fn(vec![0, 1, 0, 1, 0, 1], vec![1, 1, 1], bits(), |a, b| a ^ b);
        let p = build_product(&spec).unwrap();
        let ProductOutcome::Decomposition(d) = detect_product(&p, 0, ShiftVector::ZERO).unwrap() else { panic!() };
        let (rows, cols) = extract_factors(&d);
        assert!(rows.contains(&vec![0, 1, 0]));
        assert!(!rows.contains(&vec![0, 0]));
        assert_eq!(cols.len(), 3);
    }

    #[test]
    fn radius_too_large() {
        let p = central_patch(&morse_rule(), 1).unwrap();
        assert!(matches!(detect_product(&p, 2, ShiftVector::ZERO), Err(Error::Contract(_))));
    }

    #[test]
    fn constant_patch_obeys_three_coordinate_rule() {
        let p = Pattern::filled(bits(), Rect::square(0, 0, 6).unwrap(), 1).unwrap();
        let spec = WindowSpec::new(Rect::square(0, 0, 2).unwrap(), 3, 3).unwrap();
        assert_eq!(verify_three_coordinate_rule(&p, &spec).unwrap(), None);
    }

    #[test]
    fn product_obeys_three_coordinate_rule() {
        let spec =
            ProductSpec::from_fn(vec![0, 1, 1, 0, 1, 0, 0, 1, 1], vec![0, 0, 1, 0, 1, 1, 0, 1], bits(), |a, b| a ^ b);
        let p = build_product(&spec).unwrap();
        let w = WindowSpec::new(Rect::square(0, 0, 1).unwrap(), 4, 4).unwrap();
        assert_eq!(verify_three_coordinate_rule(&p, &w).unwrap(), None);
    }

    #[test]
    fn non_product_violates_three_coordinate_rule() {
        let rows = vec![vec![0, 0, 0], vec![0, 1, 0], vec![0, 0, 0]];
        let p = Pattern::from_rows(bits(), (0, 0), &rows).unwrap();
        let w = WindowSpec::new(Rect::square(0, 0, 1).unwrap(), 2, 2).unwrap();
        let v = verify_three_coordinate_rule(&p, &w).unwrap().expect("violation");
        assert_ne!(v.first.patterns[v.coordinate], v.second.patterns[v.coordinate]);
        for c in (0..4).filter(|&c| c != v.coordinate) {
            assert_eq!(v.first.patterns[c], v.second.patterns[c]);
        }
    }
}
