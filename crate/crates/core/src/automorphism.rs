//! Sliding block codes that preserve a sampled 2D language.
//!
//! A code of radius `r` assigns a symbol to every `(2r+1)`-square block of
//! the sample. Candidates are searched depth first over the occurring
//! blocks, most frequent first, with generalized arc consistency on the
//! constraint that every `c`-square pattern of the sample is mapped into
//! the sampled `(c-2r)`-square language.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use serde::Serialize;

use crate::cubes::{relation_pairs, RelationKind, WindowIndex, WindowSpec};
use crate::error::{Error, Result};
use crate::grid::{Alphabet, Pattern, Rect, ShiftVector, Symbol};
use crate::product::radius_window;

pub use crate::robinson::{classify_fibers, Assembly, FiberReport};

pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockCode {
    pub radius: usize,
    /// Blocks anchored on `[-r, r]^2`, with their image symbol.
    pub table: BTreeMap<Pattern, Symbol>,
    /// Offset of the block a reduced code reads from.
    pub shift: Option<ShiftVector>,
    #[serde(skip)]
    pub alphabet: Arc<Alphabet>,
}

impl BlockCode {
    pub fn identity(alphabet: Arc<Alphabet>) -> BlockCode {
        let table = alphabet
            .symbols()
            .map(|s| (Pattern::from_parts_unchecked(alphabet.clone(), radius_window(0), vec![s]), s))
            .collect();
        BlockCode { radius: 0, table, shift: None, alphabet }
    }

    /// The code reading the cell at `v` of each radius-`r` block.
    pub fn shift_code(patch: &Pattern, r: usize, v: ShiftVector) -> Result<BlockCode> {
        if v.n.unsigned_abs() as usize > r || v.m.unsigned_abs() as usize > r {
            return Err(Error::Contract(format!("shift {v} exceeds radius {r}")));
        }
        let index = WindowIndex::new(patch, radius_window(r))?;
        let table = index.patterns().iter().map(|p| (p.clone(), p.get(v.n, v.m).expect("inside block"))).collect();
        Ok(BlockCode { radius: r, table, shift: None, alphabet: patch.alphabet().clone() })
    }

    pub fn image_of(&self, block: &Pattern) -> Option<Symbol> {
        self.table.get(block).copied()
    }

    /// Applies the code, shrinking the support by the radius on each side.
    pub fn apply(&self, patch: &Pattern) -> Result<Pattern> {
        let r = self.radius;
        let s = patch.support();
        if s.width <= 2 * r || s.height <= 2 * r {
            return Err(Error::Contract(format!("a {}x{} pattern is too small for radius {r}", s.width, s.height)));
        }
        let out = Rect::new(s.x0 + r as i64, s.y0 + r as i64, s.width - 2 * r, s.height - 2 * r)?;
        let index = WindowIndex::new(patch, radius_window(r))?;
        let images: Vec<Option<Symbol>> = index.patterns().iter().map(|p| self.image_of(p)).collect();
        let mut cells = Vec::with_capacity(out.area());
        for (x, y) in out.points() {
            let id = index.id_at(ShiftVector::new(x, y)).expect("block fits");
            let s = images[id as usize]
                .ok_or_else(|| Error::Contract(format!("block around ({x}, {y}) is outside the code's table")))?;
            cells.push(s);
        }
        Pattern::new(self.alphabet.clone(), out, cells)
    }

    /// Symbol map and offset when the code is a symbol map composed with a shift.
    pub fn as_shifted_symbol_map(&self) -> Option<(ShiftVector, Vec<Option<Symbol>>)> {
        let reduced = reduce_mod_shifts(self);
        if reduced.radius != 0 {
            return None;
        }
        let mut map = vec![None; self.alphabet.len()];
        for (b, &s) in &reduced.table {
            map[b.cells()[0] as usize] = Some(s);
        }
        Some((reduced.shift.unwrap_or(ShiftVector::ZERO), map))
    }

    pub fn is_identity_mod_shifts(&self) -> bool {
        self.as_shifted_symbol_map()
            .is_some_and(|(_, map)| map.iter().enumerate().all(|(i, s)| s.is_none_or(|s| s as usize == i)))
    }
}

/// Smallest radius `r'` and offset `v` such that the code only reads the
/// block cells in `[-r', r']^2 + v`. The result has radius `r'` and records `v`.
pub fn reduce_mod_shifts(code: &BlockCode) -> BlockCode {
    let r = code.radius as i64;
    for rr in 0..=r {
        let span = r - rr;
        for vy in -span..=span {
            for vx in -span..=span {
                let v = ShiftVector::new(vx, vy);
                let sub = Rect::square(vx - rr, vy - rr, (2 * rr + 1) as usize).expect("positive side");
                let mut table: BTreeMap<Pattern, Symbol> = BTreeMap::new();
                let consistent = code.table.iter().all(|(b, &s)| {
                    let key = b.subpattern_unchecked(sub).reanchor((-rr, -rr));
                    *table.entry(key).or_insert(s) == s
                });
                if consistent {
                    let shift = match (code.shift, v) {
                        (Some(w), v) => Some(w + v),
                        (None, v) if v == ShiftVector::ZERO => None,
                        (None, v) => Some(v),
                    };
                    return BlockCode { radius: rr as usize, table, shift, alphabet: code.alphabet.clone() };
                }
            }
        }
    }
    code.clone()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub variables: usize,
    pub constraints: usize,
    pub language: usize,
    pub nodes: usize,
}

struct Problem {
    alphabet: Arc<Alphabet>,
    blocks: Vec<Pattern>,
    scopes: Vec<Vec<u32>>,
    repeats: Vec<Vec<(usize, usize)>>,
    tuples: Vec<Vec<Symbol>>,
    watchers: Vec<Vec<usize>>,
}

impl Problem {
    fn build(patch: &Pattern, r: usize, check: usize) -> Result<Problem> {
        if check < 2 * r + 1 {
            return Err(Error::Contract(format!("check size {check} is below the block size {}", 2 * r + 1)));
        }
        if patch.alphabet().len() > 64 {
            return Err(Error::Resource("alphabets above 64 symbols are not supported".into()));
        }
        let blocks = WindowIndex::new(patch, radius_window(r))?;
        let inner = check - 2 * r;
        let check_ix = WindowIndex::new(patch, Rect::square(0, 0, check)?)?;
        let lang_ix = WindowIndex::new(patch, Rect::square(0, 0, inner)?)?;

        // variables by decreasing frequency, ties by first occurrence
        let mut freq = vec![0usize; blocks.patterns().len()];
        for (x, y) in blocks.bases().points() {
            freq[blocks.id_at(ShiftVector::new(x, y)).expect("fits") as usize] += 1;
        }
        let mut order: Vec<u32> = (0..freq.len() as u32).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(freq[i as usize]), i));
        let mut var_of = vec![0u32; order.len()];
        for (v, &i) in order.iter().enumerate() {
            var_of[i as usize] = v as u32;
        }
        let block_list: Vec<Pattern> = order.iter().map(|&i| blocks.pattern(i).clone()).collect();

        // one constraint per distinct check-square pattern
        let mut scopes: Vec<Vec<u32>> = Vec::new();
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        let mut first: HashSet<u32> = HashSet::new();
        let r = r as i64;
        for (x, y) in check_ix.bases().points() {
            let id = check_ix.id_at(ShiftVector::new(x, y)).expect("fits");
            if !first.insert(id) {
                continue;
            }
            let scope: Vec<u32> = (0..inner as i64)
                .flat_map(|dy| (0..inner as i64).map(move |dx| (dx, dy)))
                .map(|(dx, dy)| {
                    let b = ShiftVector::new(x + r + dx, y + r + dy);
                    var_of[blocks.id_at(b).expect("block inside check square") as usize]
                })
                .collect();
            if seen.insert(scope.clone()) {
                scopes.push(scope);
            }
        }
        let repeats = scopes
            .iter()
            .map(|s| {
                let mut out = Vec::new();
                for i in 0..s.len() {
                    if let Some(j) = (0..i).find(|&j| s[j] == s[i]) {
                        out.push((j, i));
                    }
                }
                out
            })
            .collect();
        let tuples: Vec<Vec<Symbol>> = lang_ix.patterns().iter().map(|p| p.cells().to_vec()).collect();
        let mut watchers = vec![Vec::new(); block_list.len()];
        for (c, s) in scopes.iter().enumerate() {
            let uniq: BTreeSet<u32> = s.iter().copied().collect();
            for v in uniq {
                watchers[v as usize].push(c);
            }
        }
        Ok(Problem { alphabet: patch.alphabet().clone(), blocks: block_list, scopes, repeats, tuples, watchers })
    }

    /// Generalized arc consistency; `false` on a wipe-out.
    fn propagate(&self, doms: &mut [u64], queue: &mut VecDeque<usize>, queued: &mut [bool]) -> bool {
        while let Some(c) = queue.pop_front() {
            queued[c] = false;
            let scope = &self.scopes[c];
            let mut support = vec![0u64; scope.len()];
            for t in &self.tuples {
                let ok = scope.iter().zip(t).all(|(&v, &s)| doms[v as usize] >> s & 1 == 1)
                    && self.repeats[c].iter().all(|&(i, j)| t[i] == t[j]);
                if ok {
                    for (k, &s) in t.iter().enumerate() {
                        support[k] |= 1 << s;
                    }
                }
            }
            for (k, &v) in scope.iter().enumerate() {
                let d = doms[v as usize] & support[k];
                if d == 0 {
                    return false;
                }
                if d != doms[v as usize] {
                    doms[v as usize] = d;
                    for &o in &self.watchers[v as usize] {
                        if !queued[o] {
                            queued[o] = true;
                            queue.push_back(o);
                        }
                    }
                }
            }
        }
        true
    }
}

/// Candidate automorphisms up to `(r, check)`: block codes whose image of
/// every sampled `check`-square lies in the sampled language and whose
/// image of the sample covers the sample's interior language.
pub fn enumerate_codes(patch: &Pattern, r: usize, check: usize) -> Result<Vec<BlockCode>> {
    enumerate_codes_budgeted(patch, r, check, DEFAULT_NODE_BUDGET).map(|(c, _)| c)
}

pub fn enumerate_codes_budgeted(
    patch: &Pattern,
    r: usize,
    check: usize,
    budget: usize,
) -> Result<(Vec<BlockCode>, SearchStats)> {
    let problem = Problem::build(patch, r, check)?;
    let inner = check - 2 * r;
    let all: u64 = if problem.alphabet.len() == 64 { u64::MAX } else { (1u64 << problem.alphabet.len()) - 1 };
    let used = patch.cells().iter().fold(0u64, |m, &s| m | 1 << s);
    let mut doms = vec![all & used; problem.blocks.len()];
    let mut queue: VecDeque<usize> = (0..problem.scopes.len()).collect();
    let mut queued = vec![true; problem.scopes.len()];
    let mut stats = SearchStats {
        variables: problem.blocks.len(),
        constraints: problem.scopes.len(),
        language: problem.tuples.len(),
        nodes: 0,
    };
    let mut found = Vec::new();
    let target = interior_language(patch, inner, 2 * r)?;
    if problem.propagate(&mut doms, &mut queue, &mut queued) {
        dfs(&problem, doms, budget, &mut stats, &mut |doms| {
            let table: BTreeMap<Pattern, Symbol> =
                problem.blocks.iter().zip(doms).map(|(b, &d)| (b.clone(), d.trailing_zeros() as Symbol)).collect();
            let code = BlockCode { radius: r, table, shift: None, alphabet: problem.alphabet.clone() };
            if covers(&code, patch, inner, &target)? {
                found.push(code);
            }
            Ok(())
        })?;
    }
    found.sort_by(|a, b| a.table.values().cmp(b.table.values()));
    Ok((found, stats))
}

fn dfs(
    p: &Problem,
    doms: Vec<u64>,
    budget: usize,
    stats: &mut SearchStats,
    leaf: &mut dyn FnMut(&[u64]) -> Result<()>,
) -> Result<()> {
    stats.nodes += 1;
    if stats.nodes > budget {
        return Err(Error::Resource(format!("search exceeded the budget of {budget} nodes")));
    }
    // smallest domain first; variables are numbered by decreasing frequency
    let Some(v) = (0..doms.len()).filter(|&v| doms[v].count_ones() > 1).min_by_key(|&v| (doms[v].count_ones(), v))
    else {
        return leaf(&doms);
    };
    let mut bits = doms[v];
    while bits != 0 {
        let s = bits.trailing_zeros();
        bits &= bits - 1;
        let mut next = doms.clone();
        next[v] = 1 << s;
        let mut queue: VecDeque<usize> = p.watchers[v].iter().copied().collect();
        let mut queued = vec![false; p.scopes.len()];
        for &c in &queue {
            queued[c] = true;
        }
        if p.propagate(&mut next, &mut queue, &mut queued) {
            dfs(p, next, budget, stats, leaf)?;
        }
    }
    Ok(())
}

/// `size`-square patterns of the sample at positions at least `margin`
/// away from its border.
fn interior_language(patch: &Pattern, size: usize, margin: usize) -> Result<HashSet<Pattern>> {
    let s = patch.support();
    if s.width < 2 * margin + size || s.height < 2 * margin + size {
        return Ok(HashSet::new());
    }
    let inner = Rect::new(s.x0 + margin as i64, s.y0 + margin as i64, s.width - 2 * margin, s.height - 2 * margin)?;
    let sub = patch.subpattern_unchecked(inner);
    let ix = WindowIndex::new(&sub, Rect::square(0, 0, size)?)?;
    Ok(ix.patterns().iter().cloned().collect())
}

fn covers(code: &BlockCode, patch: &Pattern, size: usize, target: &HashSet<Pattern>) -> Result<bool> {
    let image = code.apply(patch)?;
    let ix = WindowIndex::new(&image, Rect::square(0, 0, size)?)?;
    let got: HashSet<&Pattern> = ix.patterns().iter().collect();
    Ok(target.iter().all(|p| got.contains(p)))
}

/// Distinct symbol maps among the codes once shifts are factored out.
pub fn modulo_shifts(codes: &[BlockCode]) -> Vec<BlockCode> {
    let mut seen: BTreeMap<(usize, Vec<(Pattern, Symbol)>), BlockCode> = BTreeMap::new();
    for c in codes {
        let mut r = reduce_mod_shifts(c);
        r.shift = None;
        let key = (r.radius, r.table.iter().map(|(p, &s)| (p.clone(), s)).collect());
        seen.entry(key).or_insert(r);
    }
    seen.into_values().collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelationViolation {
    pub kind: RelationKind,
    pub pair: (Pattern, Pattern),
    pub image: (Pattern, Pattern),
}

/// Every witnessed `R_S` / `R_T` pair of windows maps to a pair witnessed in
/// the sample at the window shrunk by the code radius.
pub fn preserves_relations(code: &BlockCode, patch: &Pattern, spec: &WindowSpec) -> Result<Option<RelationViolation>> {
    let r = code.radius;
    let w = spec.window;
    if w.width <= 2 * r || w.height <= 2 * r {
        return Err(Error::Contract(format!("a {}x{} window is too small for radius {r}", w.width, w.height)));
    }
    let shrunk =
        WindowSpec { window: Rect::new(w.x0 + r as i64, w.y0 + r as i64, w.width - 2 * r, w.height - 2 * r)?, ..*spec };
    for kind in [RelationKind::RS, RelationKind::RT] {
        let before = relation_pairs(patch, spec, kind)?;
        let after: HashSet<(Pattern, Pattern)> =
            relation_pairs(patch, &shrunk, kind)?.into_iter().map(|w| w.pair).collect();
        let mut cache: HashMap<Pattern, Pattern> = HashMap::new();
        let mut image = |p: &Pattern| -> Result<Pattern> {
            if let Some(q) = cache.get(p) {
                return Ok(q.clone());
            }
            let q = code.apply(p)?;
            cache.insert(p.clone(), q.clone());
            Ok(q)
        };
        for wit in before {
            let (p, q) = wit.pair;
            let img = (image(&p)?, image(&q)?);
            if !after.contains(&img) {
                return Ok(Some(RelationViolation { kind, pair: (p, q), image: img }));
            }
        }
    }
    Ok(None)
}
