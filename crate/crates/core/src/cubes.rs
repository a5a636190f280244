//! Window approximations of the cube structure of a `Z^2` subshift.
//!
//! Everything is read off a single finite patch: a quadruple is the four
//! windows seen from `x`, `S^n x`, `T^m x` and `S^n T^m x`, where `x` is the
//! configuration translated so that the window sits at `base`. Relations
//! computed this way are lower approximations of the true relations.
//!
//! Quadruples may be expressed in a sheared frame of generators
//! `S' = T^-k S`, `T' = T`, which moves the second and fourth windows by
//! `(0, -k n)`.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Pattern, Rect, ShiftVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WindowSpec {
    pub window: Rect,
    pub nmax: i64,
    pub mmax: i64,
}

impl WindowSpec {
    pub fn new(window: Rect, nmax: i64, mmax: i64) -> Result<Self> {
        if nmax < 0 || mmax < 0 {
            return Err(Error::Contract(format!("bounds must be non-negative, got ({nmax}, {mmax})")));
        }
        Ok(WindowSpec { window, nmax, mmax })
    }
}

/// The square `[-2^(k-1), 2^(k-1) - 1]^2`; `k = 0` gives the single cell at
/// the origin.
pub fn b_window(k: u32) -> Rect {
    if k == 0 {
        return Rect { x0: 0, y0: 0, width: 1, height: 1 };
    }
    let half = 1i64 << (k - 1);
    Rect { x0: -half, y0: -half, width: 2 * half as usize, height: 2 * half as usize }
}

/// Window pattern ids at every base position where the window fits.
pub struct WindowIndex {
    window: Rect,
    bx0: i64,
    by0: i64,
    nx: usize,
    ny: usize,
    ids: Vec<u32>,
    patterns: Vec<Pattern>,
}

impl WindowIndex {
    pub fn new(patch: &Pattern, window: Rect) -> Result<Self> {
        let s = patch.support();
        if window.width > s.width || window.height > s.height {
            return Err(Error::Contract(format!(
                "window {}x{} does not fit in the {}x{} patch",
                window.width, window.height, s.width, s.height
            )));
        }
        let bx0 = s.x0 - window.x0;
        let by0 = s.y0 - window.y0;
        let nx = s.width - window.width + 1;
        let ny = s.height - window.height + 1;
        let mut ids = Vec::with_capacity(nx * ny);
        let mut seen: HashMap<Vec<u8>, u32> = HashMap::new();
        let mut patterns = Vec::new();
        let mut buf = Vec::with_capacity(window.area());
        for j in 0..ny {
            for i in 0..nx {
                buf.clear();
                for dy in 0..window.height {
                    let start = (j + dy) * s.width + i;
                    buf.extend_from_slice(&patch.cells()[start..start + window.width]);
                }
                let id = match seen.get(&buf) {
                    Some(&id) => id,
                    None => {
                        let id = patterns.len() as u32;
                        seen.insert(buf.clone(), id);
                        patterns.push(Pattern::from_parts_unchecked(patch.alphabet().clone(), window, buf.clone()));
                        id
                    }
                };
                ids.push(id);
            }
        }
        Ok(WindowIndex { window, bx0, by0, nx, ny, ids, patterns })
    }

    pub fn window(&self) -> Rect {
        self.window
    }

    /// Bases where the window fits, as a rectangle of base positions.
    pub fn bases(&self) -> Rect {
        Rect { x0: self.bx0, y0: self.by0, width: self.nx, height: self.ny }
    }

    pub fn contains(&self, b: ShiftVector) -> bool {
        b.n >= self.bx0 && b.m >= self.by0 && b.n < self.bx0 + self.nx as i64 && b.m < self.by0 + self.ny as i64
    }

    pub fn id_at(&self, b: ShiftVector) -> Option<u32> {
        self.contains(b).then(|| self.ids[(b.m - self.by0) as usize * self.nx + (b.n - self.bx0) as usize])
    }

    pub fn pattern(&self, id: u32) -> &Pattern {
        &self.patterns[id as usize]
    }

    /// Distinct window patterns, in order of first occurrence.
    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    fn base_points(&self) -> impl Iterator<Item = ShiftVector> + '_ {
        (0..self.ny as i64)
            .flat_map(move |j| (0..self.nx as i64).map(move |i| ShiftVector::new(self.bx0 + i, self.by0 + j)))
    }
}

/// Window positions of the quadruple `(base, n, m)` in the frame with shear `k`.
pub fn quadruple_positions(base: ShiftVector, n: i64, m: i64, shear: i64) -> [ShiftVector; 4] {
    let s = ShiftVector::new(n, -shear * n);
    let t = ShiftVector::new(0, m);
    [base, base + s, base + t, base + s + t]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CubeQuadruple {
    pub base: ShiftVector,
    pub n: i64,
    pub m: i64,
    /// Generator frame: `S' = T^-shear S`.
    pub shear: i64,
    /// Windows of `x`, `S^n x`, `T^m x`, `S^n T^m x`, anchored at the window.
    pub patterns: [Pattern; 4],
}

impl CubeQuadruple {
    pub fn positions(&self) -> [ShiftVector; 4] {
        quadruple_positions(self.base, self.n, self.m, self.shear)
    }

    pub fn canonical_key(&self) -> (i64, i64, i64, i64) {
        (self.base.m, self.base.n, self.n, self.m)
    }

    fn read(index: &WindowIndex, base: ShiftVector, n: i64, m: i64, shear: i64) -> Option<CubeQuadruple> {
        let pos = quadruple_positions(base, n, m, shear);
        let ids = [index.id_at(pos[0])?, index.id_at(pos[1])?, index.id_at(pos[2])?, index.id_at(pos[3])?];
        Some(CubeQuadruple { base, n, m, shear, patterns: ids.map(|i| index.pattern(i).clone()) })
    }
}

/// Reads the quadruple `(base, n, m)` from the patch; a range error names
/// the first window that leaves it.
pub fn read_quadruple(
    patch: &Pattern,
    window: Rect,
    base: ShiftVector,
    n: i64,
    m: i64,
    shear: i64,
) -> Result<CubeQuadruple> {
    let mut patterns = Vec::with_capacity(4);
    for p in quadruple_positions(base, n, m, shear) {
        let r = window.offset(p)?;
        if !patch.support().contains(&r) {
            return Err(Error::Range(format!("window at {p} leaves the patch")));
        }
        patterns.push(patch.subpattern_unchecked(r).reanchor((window.x0, window.y0)));
    }
    let patterns: [Pattern; 4] = patterns.try_into().expect("four windows");
    Ok(CubeQuadruple { base, n, m, shear, patterns })
}

fn placements(index: &WindowIndex, spec: &WindowSpec) -> Vec<(ShiftVector, i64, i64)> {
    let mut out = Vec::new();
    for b in index.base_points() {
        for n in -spec.nmax..=spec.nmax {
            for m in -spec.mmax..=spec.mmax {
                if index.contains(b + ShiftVector::new(n, m))
                    && index.contains(b + ShiftVector::new(n, 0))
                    && index.contains(b + ShiftVector::new(0, m))
                {
                    out.push((b, n, m));
                }
            }
        }
    }
    out
}

/// Every quadruple whose four windows fit in the patch, in canonical order.
pub fn cube_set(patch: &Pattern, spec: &WindowSpec) -> Result<Vec<CubeQuadruple>> {
    let index = WindowIndex::new(patch, spec.window)?;
    Ok(placements(&index, spec)
        .into_iter()
        .map(|(b, n, m)| CubeQuadruple::read(&index, b, n, m, 0).expect("placement fits"))
        .collect())
}

/// Distinct pattern quadruples of the window cube set, by window id.
pub fn cube_pattern_ids(index: &WindowIndex, spec: &WindowSpec) -> Vec<[u32; 4]> {
    let mut set: Vec<[u32; 4]> = placements(index, spec)
        .into_iter()
        .map(|(b, n, m)| quadruple_positions(b, n, m, 0).map(|p| index.id_at(p).expect("fits")))
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    set.sort_unstable();
    set
}

/// Triples `(S^n x, T^m x, S^n T^m x)` seen from the fixed base `anchor`.
pub fn k_set(patch: &Pattern, anchor: ShiftVector, spec: &WindowSpec) -> Result<Vec<(Pattern, Pattern, Pattern)>> {
    let index = WindowIndex::new(patch, spec.window)?;
    if !index.contains(anchor) {
        return Err(Error::Contract(format!("anchor {anchor} window does not fit in the patch")));
    }
    let mut ids = HashSet::new();
    for n in -spec.nmax..=spec.nmax {
        for m in -spec.mmax..=spec.mmax {
            let [_, a, b, c] = quadruple_positions(anchor, n, m, 0);
            if let (Some(a), Some(b), Some(c)) = (index.id_at(a), index.id_at(b), index.id_at(c)) {
                ids.insert((a, b, c));
            }
        }
    }
    let mut out: Vec<_> = ids
        .into_iter()
        .map(|(a, b, c)| (index.pattern(a).clone(), index.pattern(b).clone(), index.pattern(c).clone()))
        .collect();
    out.sort();
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RelationKind {
    /// `(x, y, a, a)`.
    RS,
    /// `(x, b, y, b)`.
    RT,
    /// `(x, y, a, a)` with `x` seen from a fixed base point.
    RStarS,
    /// `(x, b, y, b)` with `x` seen from a fixed base point.
    RStarT,
}

impl RelationKind {
    fn is_s(self) -> bool {
        matches!(self, RelationKind::RS | RelationKind::RStarS)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelationWitness {
    pub kind: RelationKind,
    pub pair: (Pattern, Pattern),
    pub companion: Pattern,
    pub quadruple: CubeQuadruple,
}

impl RelationWitness {
    pub fn is_diagonal(&self) -> bool {
        self.pair.0 == self.pair.1
    }
}

/// Related pair of window ids with the canonical key of its first witness.
type PairHits = HashMap<(u32, u32), (i64, i64, i64, i64)>;

fn scan_base(index: &WindowIndex, spec: &WindowSpec, b: ShiftVector, s_shape: bool, hits: &mut PairHits) {
    for n in -spec.nmax..=spec.nmax {
        let Some(x1) = index.id_at(b + ShiftVector::new(n, 0)) else { continue };
        for m in -spec.mmax..=spec.mmax {
            let Some(x2) = index.id_at(b + ShiftVector::new(0, m)) else { continue };
            let Some(x3) = index.id_at(b + ShiftVector::new(n, m)) else { continue };
            let x0 = index.id_at(b).expect("base fits");
            let pair = if s_shape {
                if x2 != x3 {
                    continue;
                }
                (x0, x1)
            } else {
                if x1 != x3 {
                    continue;
                }
                (x0, x2)
            };
            let key = (b.m, b.n, n, m);
            hits.entry(pair).and_modify(|k| *k = (*k).min(key)).or_insert(key);
        }
    }
}

fn witnesses(index: &WindowIndex, kind: RelationKind, hits: PairHits) -> Vec<RelationWitness> {
    let mut out: Vec<RelationWitness> = hits
        .into_iter()
        .map(|(_, (bm, bn, n, m))| {
            let q = CubeQuadruple::read(index, ShiftVector::new(bn, bm), n, m, 0).expect("witness fits");
            let [x0, x1, x2, x3] = q.patterns.clone();
            let (pair, companion) = if kind.is_s() { ((x0, x1), x2) } else { ((x0, x2), x1) };
            debug_assert_eq!(companion, x3);
            RelationWitness { kind, pair, companion, quadruple: q }
        })
        .collect();
    out.sort_by_key(|w| w.quadruple.canonical_key());
    out
}

/// Window pairs related by `R_S` or `R_T`, each with its first witness in
/// canonical order.
pub fn relation_pairs(patch: &Pattern, spec: &WindowSpec, kind: RelationKind) -> Result<Vec<RelationWitness>> {
    let kind = match kind {
        RelationKind::RStarS => RelationKind::RS,
        RelationKind::RStarT => RelationKind::RT,
        k => k,
    };
    let index = WindowIndex::new(patch, spec.window)?;
    let rows: Vec<i64> = (0..index.ny as i64).map(|j| index.by0 + j).collect();
    let hits = rows
        .par_iter()
        .map(|&y| {
            let mut hits = PairHits::new();
            for i in 0..index.nx as i64 {
                scan_base(&index, spec, ShiftVector::new(index.bx0 + i, y), kind.is_s(), &mut hits);
            }
            hits
        })
        .reduce(PairHits::new, |mut a, b| {
            for (pair, key) in b {
                a.entry(pair).and_modify(|k| *k = (*k).min(key)).or_insert(key);
            }
            a
        });
    Ok(witnesses(&index, kind, hits))
}

/// Anchored variant: the base of every witness is `anchor`.
pub fn anchored_relation_pairs(
    patch: &Pattern,
    anchor: ShiftVector,
    spec: &WindowSpec,
    kind: RelationKind,
) -> Result<Vec<RelationWitness>> {
    let kind = match kind {
        RelationKind::RS => RelationKind::RStarS,
        RelationKind::RT => RelationKind::RStarT,
        k => k,
    };
    let index = WindowIndex::new(patch, spec.window)?;
    if !index.contains(anchor) {
        return Err(Error::Contract(format!("anchor {anchor} window does not fit in the patch")));
    }
    let mut hits = PairHits::new();
    scan_base(&index, spec, anchor, kind.is_s(), &mut hits);
    Ok(witnesses(&index, kind, hits))
}

/// Checks the permuted quadruples `(x2,x3,x0,x1)`, `(x1,x0,x3,x2)` and,
/// in the standard frame, the transposed `(x0,x2,x1,x3)`.
pub fn symmetry_closure_check(q: &CubeQuadruple, patch: &Pattern, spec: &WindowSpec) -> bool {
    let w = spec.window;
    let [x0, x1, x2, x3] = &q.patterns;
    let bounded = |n: i64, m: i64| n.abs() <= spec.nmax && m.abs() <= spec.mmax;
    let [_, p1, p2, _] = q.positions();
    let realized = |base, n, m, expect: [&Pattern; 4]| {
        bounded(n, m)
            && read_quadruple(patch, w, base, n, m, q.shear)
                .is_ok_and(|r| r.patterns.iter().zip(expect).all(|(a, b)| a == b))
    };
    if !realized(p2, q.n, -q.m, [x2, x3, x0, x1]) || !realized(p1, -q.n, q.m, [x1, x0, x3, x2]) {
        return false;
    }
    if q.shear != 0 {
        return true;
    }
    let tp = patch.transpose();
    let tb = ShiftVector::new(q.base.m, q.base.n);
    read_quadruple(&tp, w.transpose(), tb, q.m, q.n, 0).is_ok_and(|r| {
        let expect = [x0, x2, x1, x3].map(|p| p.transpose());
        r.patterns == expect
    })
}

/// Shifts `(n, m)` within bounds whose window equals the anchored window.
pub fn return_times(
    patch: &Pattern,
    anchor: ShiftVector,
    window: Rect,
    nmax: i64,
    mmax: i64,
) -> Result<Vec<ShiftVector>> {
    let index = WindowIndex::new(patch, window)?;
    let target = index
        .id_at(anchor)
        .ok_or_else(|| Error::Contract(format!("anchor {anchor} window does not fit in the patch")))?;
    let mut out = Vec::new();
    for m in -mmax..=mmax {
        for n in -nmax..=nmax {
            let v = ShiftVector::new(n, m);
            if index.id_at(anchor + v) == Some(target) {
                out.push(v);
            }
        }
    }
    Ok(out)
}

fn reframe(q: &CubeQuadruple, patch: &Pattern, window: Rect, shear: i64) -> Result<CubeQuadruple> {
    read_quadruple(patch, window, q.base, q.n, q.m, shear)
}

/// The quadruple of the same base and exponents for the generators
/// `(T^-1 S', T')` applied on top of the current frame.
pub fn change_generators(q: &CubeQuadruple, patch: &Pattern, window: Rect) -> Result<CubeQuadruple> {
    reframe(q, patch, window, q.shear + 1)
}

pub fn change_generators_inverse(q: &CubeQuadruple, patch: &Pattern, window: Rect) -> Result<CubeQuadruple> {
    reframe(q, patch, window, q.shear - 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    S,
    T,
}

/// Every ordered pair of occurring windows is a projection pair `(x, S^n x)`
/// (or `(x, T^m x)`) within bounds.
pub fn window_transitivity(patch: &Pattern, spec: &WindowSpec, direction: Direction) -> Result<bool> {
    let index = WindowIndex::new(patch, spec.window)?;
    let k = index.patterns().len();
    let mut seen = vec![false; k * k];
    let step = match direction {
        Direction::S => |t: i64| ShiftVector::new(t, 0),
        Direction::T => |t: i64| ShiftVector::new(0, t),
    };
    let bound = match direction {
        Direction::S => spec.nmax,
        Direction::T => spec.mmax,
    };
    for b in index.base_points() {
        let x = index.id_at(b).expect("base fits") as usize;
        for t in -bound..=bound {
            if let Some(y) = index.id_at(b + step(t)) {
                seen[x * k + y as usize] = true;
            }
        }
    }
    Ok(seen.into_iter().all(|s| s))
}

/// Every quadruple of occurring windows appears as `(x, T^a x, T^b x, T^(a+b) x)`.
pub fn window_weak_mixing_proxy(patch: &Pattern, spec: &WindowSpec) -> Result<bool> {
    let index = WindowIndex::new(patch, spec.window)?;
    let k = index.patterns().len();
    let needed = k.checked_pow(4).ok_or_else(|| Error::Resource("too many window patterns".into()))?;
    let bound = spec.mmax;
    let mut seen: HashSet<[u32; 4]> = HashSet::new();
    for b in index.base_points() {
        for a in -bound..=bound {
            for c in -bound..=bound {
                let pos = [b, b + ShiftVector::new(0, a), b + ShiftVector::new(0, c), b + ShiftVector::new(0, a + c)];
                if let [Some(p), Some(q), Some(r), Some(s)] = pos.map(|p| index.id_at(p)) {
                    seen.insert([p, q, r, s]);
                }
            }
        }
    }
    Ok(seen.len() == needed)
}

/// Maximum, over full-width horizontal strips of height `n + 1`, of the
/// number of distinct column words inside the strip.
pub fn complexity_proxy(patch: &Pattern, n: usize) -> Result<usize> {
    let (w, h) = (patch.width(), patch.height());
    if n + 1 > h {
        return Err(Error::Contract(format!("patch height {h} is below the strip height {}", n + 1)));
    }
    let cells = patch.cells();
    let best = (0..=h - n - 1)
        .map(|y| {
            let words: HashSet<Vec<u8>> = (0..w).map(|x| (y..=y + n).map(|yy| cells[yy * w + x]).collect()).collect();
            words.len()
        })
        .max()
        .unwrap_or(0);
    Ok(best)
}

/// Number of distinct related pairs found for growing patch sizes.
pub fn stabilization_counts(
    patches: &[Pattern],
    spec: &WindowSpec,
    kind: RelationKind,
) -> Result<BTreeMap<usize, usize>> {
    patches.iter().map(|p| Ok((p.width() * p.height(), relation_pairs(p, spec, kind)?.len()))).collect()
}
