//! Uniform rectangular substitutions and the patches they generate.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Alphabet, Pattern, Rect, Symbol};

/// Largest patch side produced unless the caller overrides it.
pub const DEFAULT_MAX_SIDE: usize = 4096;

/// Maps every symbol to an `s x s` block anchored at the origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstitutionRule {
    alphabet: Arc<Alphabet>,
    expansion: usize,
    images: Vec<Pattern>,
}

impl SubstitutionRule {
    pub fn new(alphabet: Arc<Alphabet>, expansion: usize, images: Vec<Pattern>) -> Result<Self> {
        if expansion < 2 {
            return Err(Error::Contract(format!("expansion must be at least 2, got {expansion}")));
        }
        if images.len() != alphabet.len() {
            return Err(Error::Contract(format!(
                "{} images for an alphabet of {} symbols",
                images.len(),
                alphabet.len()
            )));
        }
        let square = Rect::square(0, 0, expansion)?;
        for (s, img) in images.iter().enumerate() {
            if img.support() != square {
                return Err(Error::Contract(format!(
                    "image of symbol {s} has support {:?}, expected {square:?}",
                    img.support()
                )));
            }
            if img.alphabet().as_ref() != alphabet.as_ref() {
                return Err(Error::AlphabetMismatch);
            }
        }
        Ok(SubstitutionRule { alphabet, expansion, images })
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn expansion(&self) -> usize {
        self.expansion
    }

    pub fn image(&self, s: Symbol) -> &Pattern {
        &self.images[s as usize]
    }

    pub fn images(&self) -> &[Pattern] {
        &self.images
    }

    pub fn from_json(j: &RuleJson) -> Result<Self> {
        let alphabet = Arc::new(Alphabet::new(j.alphabet.iter().cloned())?);
        let mut images = Vec::with_capacity(alphabet.len());
        for (s, label) in alphabet.labels().iter().enumerate() {
            let rows = j
                .images
                .get(label)
                .or_else(|| j.images.get(&s.to_string()))
                .ok_or_else(|| Error::Parse(format!("rule has no image for symbol {label:?}")))?;
            images.push(Pattern::from_rows(alphabet.clone(), (0, 0), rows)?);
        }
        Self::new(alphabet, j.expansion, images)
    }

    pub fn to_json(&self) -> RuleJson {
        RuleJson {
            alphabet: self.alphabet.labels().to_vec(),
            expansion: self.expansion,
            images: self
                .alphabet
                .symbols()
                .map(|s| {
                    let rows = self.image(s).rows().map(<[Symbol]>::to_vec).collect();
                    (self.alphabet.label(s).to_string(), rows)
                })
                .collect(),
        }
    }
}

/// `{"alphabet": [...], "expansion": s, "images": {"0": rows, ...}}`, rows bottom-up.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleJson {
    pub alphabet: Vec<String>,
    pub expansion: usize,
    pub images: BTreeMap<String, Vec<Vec<Symbol>>>,
}

/// One-dimensional constant-length substitution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule1D {
    alphabet: Arc<Alphabet>,
    expansion: usize,
    images: Vec<Vec<Symbol>>,
}

impl Rule1D {
    pub fn new(alphabet: Arc<Alphabet>, expansion: usize, images: Vec<Vec<Symbol>>) -> Result<Self> {
        if expansion < 2 {
            return Err(Error::Contract(format!("expansion must be at least 2, got {expansion}")));
        }
        if images.len() != alphabet.len() {
            return Err(Error::Contract("one image per symbol required".into()));
        }
        for img in &images {
            if img.len() != expansion {
                return Err(Error::Contract(format!("image {img:?} does not have length {expansion}")));
            }
            if let Some(&bad) = img.iter().find(|&&c| !alphabet.contains(c)) {
                return Err(Error::InvalidSymbol { symbol: bad, alphabet_size: alphabet.len() });
            }
        }
        Ok(Rule1D { alphabet, expansion, images })
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn expansion(&self) -> usize {
        self.expansion
    }
}

/// The two-dimensional Morse substitution: `0` becomes `[[0,1],[1,0]]`
/// (rows bottom-up) and `1` its complement.
pub fn morse_rule() -> SubstitutionRule {
    let alphabet = Arc::new(Alphabet::numeric(2).expect("two symbols"));
    let zero = Pattern::from_rows(alphabet.clone(), (0, 0), &[vec![0, 1], vec![1, 0]]).expect("2x2 image");
    let one = Pattern::from_rows(alphabet.clone(), (0, 0), &[vec![1, 0], vec![0, 1]]).expect("2x2 image");
    SubstitutionRule::new(alphabet, 2, vec![zero, one]).expect("Morse rule is well formed")
}

/// Thue–Morse: `0 -> 01`, `1 -> 10`.
pub fn thue_morse_rule() -> Rule1D {
    let alphabet = Arc::new(Alphabet::numeric(2).expect("two symbols"));
    Rule1D::new(alphabet, 2, vec![vec![0, 1], vec![1, 0]]).expect("Thue–Morse rule is well formed")
}

fn side_after(expansion: usize, n: u32, max_side: usize) -> Result<usize> {
    expansion
        .checked_pow(n)
        .filter(|&side| side <= max_side)
        .ok_or_else(|| Error::Resource(format!("{expansion}^{n} exceeds the maximum patch side {max_side}")))
}

/// `n` rounds of the substitution applied to `seed`, anchored at `(0, 0)`.
pub fn iterate(rule: &SubstitutionRule, seed: Symbol, n: u32) -> Result<Pattern> {
    iterate_bounded(rule, seed, n, DEFAULT_MAX_SIDE)
}

pub fn iterate_bounded(rule: &SubstitutionRule, seed: Symbol, n: u32, max_side: usize) -> Result<Pattern> {
    if !rule.alphabet.contains(seed) {
        return Err(Error::InvalidSymbol { symbol: seed, alphabet_size: rule.alphabet.len() });
    }
    side_after(rule.expansion, n, max_side)?;
    let s = rule.expansion;
    let mut side = 1usize;
    let mut cells = vec![seed];
    for _ in 0..n {
        let next_side = side * s;
        let mut next = vec![0 as Symbol; next_side * next_side];
        for y in 0..side {
            for x in 0..side {
                let img = rule.image(cells[y * side + x]).cells();
                for (dy, row) in img.chunks(s).enumerate() {
                    let start = (y * s + dy) * next_side + x * s;
                    next[start..start + s].copy_from_slice(row);
                }
            }
        }
        side = next_side;
        cells = next;
    }
    Ok(Pattern::from_parts_unchecked(rule.alphabet.clone(), Rect::square(0, 0, side)?, cells))
}

/// The level-`n` patch from symbol `0`, with lower-left corner at
/// `(-floor(s^n/2), -floor(s^n/2))`. For `s = 2` the support is
/// `[-2^(n-1), 2^(n-1) - 1]^2`.
pub fn central_patch(rule: &SubstitutionRule, n: u32) -> Result<Pattern> {
    central_patch_bounded(rule, n, DEFAULT_MAX_SIDE)
}

pub fn central_patch_bounded(rule: &SubstitutionRule, n: u32, max_side: usize) -> Result<Pattern> {
    if n == 0 {
        return Err(Error::Contract("central patch level must be positive".into()));
    }
    let p = iterate_bounded(rule, 0, n, max_side)?;
    let half = (p.width() / 2) as i64;
    Ok(p.reanchor((-half, -half)))
}

/// All `w x h` subpatterns of `patch`, re-anchored at the origin.
pub fn language(patch: &Pattern, w: usize, h: usize) -> Result<BTreeSet<Pattern>> {
    if w == 0 || h == 0 || w > patch.width() || h > patch.height() {
        return Err(Error::Contract(format!(
            "{w}x{h} blocks do not fit in a {}x{} patch",
            patch.width(),
            patch.height()
        )));
    }
    let s = patch.support();
    let mut out = BTreeSet::new();
    for y in s.y0..=(s.y1() - h as i64) {
        for x in s.x0..=(s.x1() - w as i64) {
            out.insert(patch.subpattern_unchecked(Rect { x0: x, y0: y, width: w, height: h }).reanchor((0, 0)));
        }
    }
    Ok(out)
}

pub fn iterate1d(rule: &Rule1D, seed: Symbol, n: u32) -> Result<Vec<Symbol>> {
    iterate1d_bounded(rule, seed, n, DEFAULT_MAX_SIDE * DEFAULT_MAX_SIDE)
}

pub fn iterate1d_bounded(rule: &Rule1D, seed: Symbol, n: u32, max_len: usize) -> Result<Vec<Symbol>> {
    if !rule.alphabet.contains(seed) {
        return Err(Error::InvalidSymbol { symbol: seed, alphabet_size: rule.alphabet.len() });
    }
    side_after(rule.expansion, n, max_len)?;
    let mut word = vec![seed];
    for _ in 0..n {
        word = word.iter().flat_map(|&c| rule.images[c as usize].iter().copied()).collect();
    }
    Ok(word)
}

/// All factors of `word` of length `len`.
pub fn word_factors(word: &[Symbol], len: usize) -> BTreeSet<Vec<Symbol>> {
    if len == 0 || len > word.len() {
        return BTreeSet::new();
    }
    word.windows(len).map(<[Symbol]>::to_vec).collect()
}
