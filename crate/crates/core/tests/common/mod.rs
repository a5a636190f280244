#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use dyncube::{Alphabet, Pattern, Rect};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_patch(seed: u64, max_side: usize, max_alphabet: usize) -> Pattern {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = rng.gen_range(2..=max_side);
    let h = rng.gen_range(2..=max_side);
    let k = rng.gen_range(1..=max_alphabet);
    let x0 = rng.gen_range(-4..=4);
    let y0 = rng.gen_range(-4..=4);
    let cells = (0..w * h).map(|_| rng.gen_range(0..k) as u8).collect();
    let alphabet = Arc::new(Alphabet::numeric(k).unwrap());
    Pattern::new(alphabet, Rect::new(x0, y0, w, h).unwrap(), cells).unwrap()
}

/// A window that fits in a `w x h` patch, picked from the same stream.
pub fn random_window(seed: u64, w: usize, h: usize) -> Rect {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let ww = rng.gen_range(1..=w.min(3));
    let wh = rng.gen_range(1..=h.min(3));
    Rect::new(rng.gen_range(-2..=1), rng.gen_range(-2..=1), ww, wh).unwrap()
}

/// Cells of the window placed at `(bx, by)`, bottom row first, or `None`
/// if any cell is missing.
pub fn naive_window(p: &Pattern, window: Rect, bx: i64, by: i64) -> Option<Vec<u8>> {
    let mut out = Vec::new();
    for dy in 0..window.height as i64 {
        for dx in 0..window.width as i64 {
            out.push(p.get(bx + window.x0 + dx, by + window.y0 + dy)?);
        }
    }
    Some(out)
}

pub type Key = (i64, i64, i64, i64);

pub type NaiveCube = BTreeMap<Key, [Vec<u8>; 4]>;

pub type PairKeys = BTreeMap<(Vec<u8>, Vec<u8>), Key>;

/// Every placement of `(x, S^n x, T^m x, S^n T^m x)` over all bases in a
/// generous box, keyed by `(base.m, base.n, n, m)`.
pub fn naive_cube_set(p: &Pattern, window: Rect, nmax: i64, mmax: i64) -> NaiveCube {
    let s = p.support();
    let pad = 4 + window.width.max(window.height) as i64;
    let mut out = BTreeMap::new();
    for by in s.y0 - pad..s.y0 + s.height as i64 + pad {
        for bx in s.x0 - pad..s.x0 + s.width as i64 + pad {
            for n in -nmax..=nmax {
                for m in -mmax..=mmax {
                    let read = |dx, dy| naive_window(p, window, bx + dx, by + dy);
                    if let (Some(a), Some(b), Some(c), Some(d)) = (read(0, 0), read(n, 0), read(0, m), read(n, m)) {
                        out.insert((by, bx, n, m), [a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

/// Related pairs with the least witnessing key; `s_shape` selects
/// `(x, y, a, a)`, otherwise `(x, b, y, b)`.
pub fn naive_relation(cubes: &NaiveCube, s_shape: bool) -> PairKeys {
    let mut out = BTreeMap::new();
    for (key, [a, b, c, d]) in cubes {
        let pair = if s_shape {
            if c != d {
                continue;
            }
            (a.clone(), b.clone())
        } else {
            if b != d {
                continue;
            }
            (a.clone(), c.clone())
        };
        out.entry(pair).or_insert(*key);
    }
    out
}

pub fn naive_return_times(p: &Pattern, window: Rect, anchor: (i64, i64), nmax: i64, mmax: i64) -> BTreeSet<(i64, i64)> {
    let target = naive_window(p, window, anchor.0, anchor.1).expect("anchor fits");
    let mut out = BTreeSet::new();
    for m in -mmax..=mmax {
        for n in -nmax..=nmax {
            if naive_window(p, window, anchor.0 + n, anchor.1 + m).as_ref() == Some(&target) {
                out.insert((n, m));
            }
        }
    }
    out
}

/// Morse symbol at `(i, j)` from the binary digit sums.
pub fn morse_cell(i: u64, j: u64) -> u8 {
    ((i.count_ones() + j.count_ones()) % 2) as u8
}

/// Compares cube_set, relation_pairs and return_times against the naive
/// enumerators on the random patch of `seed`.
pub fn oracle_check(seed: u64) -> Result<(), String> {
    use dyncube::cubes::{cube_set, relation_pairs, return_times, RelationKind, WindowSpec};
    use dyncube::ShiftVector;

    let p = random_patch(seed, 12, 3);
    let window = random_window(seed, p.width(), p.height());
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31) + 7);
    let (nmax, mmax) = (rng.gen_range(0..=6), rng.gen_range(0..=6));
    let spec = WindowSpec::new(window, nmax, mmax).unwrap();

    let naive = naive_cube_set(&p, window, nmax, mmax);
    let fast = cube_set(&p, &spec).map_err(|e| e.to_string())?;
    if fast.len() != naive.len() {
        return Err(format!("seed {seed}: cube_set has {} quadruples, naive {}", fast.len(), naive.len()));
    }
    for (q, (key, cells)) in fast.iter().zip(&naive) {
        if q.canonical_key() != *key {
            return Err(format!("seed {seed}: key {:?} vs naive {:?}", q.canonical_key(), key));
        }
        for (a, b) in q.patterns.iter().zip(cells) {
            if a.cells() != b.as_slice() || a.support() != window {
                return Err(format!("seed {seed}: windows differ at {key:?}"));
            }
        }
    }

    for (kind, s_shape) in [(RelationKind::RS, true), (RelationKind::RT, false)] {
        let naive_rel = naive_relation(&naive, s_shape);
        let fast_rel = relation_pairs(&p, &spec, kind).map_err(|e| e.to_string())?;
        let got: PairKeys = fast_rel
            .iter()
            .map(|w| ((w.pair.0.cells().to_vec(), w.pair.1.cells().to_vec()), w.quadruple.canonical_key()))
            .collect();
        if got.len() != fast_rel.len() {
            return Err(format!("seed {seed}: {kind:?} repeats a pair"));
        }
        if got != naive_rel {
            return Err(format!("seed {seed}: {kind:?} pairs differ ({} vs naive {})", got.len(), naive_rel.len()));
        }
    }

    let s = p.support();
    let ax = rng.gen_range(s.x0 - window.x0..=s.x1() - window.x1());
    let ay = rng.gen_range(s.y0 - window.y0..=s.y1() - window.y1());
    let fast_rt: BTreeSet<(i64, i64)> = return_times(&p, ShiftVector::new(ax, ay), window, nmax, mmax)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|v| (v.n, v.m))
        .collect();
    if fast_rt != naive_return_times(&p, window, (ax, ay), nmax, mmax) {
        return Err(format!("seed {seed}: return times differ"));
    }
    Ok(())
}
