use dyncube::robinson::{
    cross_lattice_offsets, fault_lines, is_valid, one_fault_completions, supertile, supertile_side, tileset,
    two_fault_completions,
};
use dyncube::{Pattern, Rect};

fn block(p: &Pattern, x: usize, y: usize, side: usize) -> Pattern {
    p.subpattern(Rect::square(x as i64, y as i64, side).unwrap()).unwrap().reanchor((0, 0))
}

fn crosses<'a>(cells: impl Iterator<Item = u8> + 'a) -> usize {
    cells.filter(|&s| tileset().tile(s).is_cross).count()
}

#[test]
fn corners_are_smaller_supertiles() {
    for n in 1..=5 {
        let small: Vec<Pattern> = (0..4).map(|o| supertile(n, o).unwrap()).collect();
        let c = supertile_side(n).unwrap();
        for k in 0..4 {
            let big = supertile(n + 1, k).unwrap();
            for (x, y) in [(0, 0), (c + 1, 0), (0, c + 1), (c + 1, c + 1)] {
                let corner = block(&big, x, y, c);
                assert!(small.contains(&corner), "order {} orientation {k} corner ({x}, {y})", n + 1);
            }
        }
    }
}

#[test]
fn central_lines_hold_one_cross() {
    for n in 1..=6 {
        for k in 0..4 {
            let p = supertile(n, k).unwrap();
            let mid = (supertile_side(n).unwrap() / 2) as i64;
            let s = p.support();
            assert_eq!(crosses((s.x0..s.x1()).map(|x| p.get(x, mid).unwrap())), 1);
            assert_eq!(crosses((s.y0..s.y1()).map(|y| p.get(mid, y).unwrap())), 1);
        }
    }
}

#[test]
fn valid_patches_carry_a_cross_lattice() {
    let mut patches: Vec<Pattern> = (1..=5).flat_map(|n| (0..4).map(move |k| supertile(n, k).unwrap())).collect();
    patches.extend(two_fault_completions(2).unwrap());
    patches.extend(one_fault_completions(2).unwrap());
    for p in &patches {
        assert!(is_valid(p).is_ok());
        assert!(!cross_lattice_offsets(p).is_empty());
        let s = p.support();
        for side in [3usize, 5] {
            if side <= s.width.min(s.height) {
                let sub = block(p, (s.width - side) / 2, (s.height - side) / 2, side);
                assert!(!cross_lattice_offsets(&sub).is_empty());
            }
        }
    }
}

#[test]
fn fault_line_counts_match_construction() {
    for n in 2..=5 {
        for k in 0..4 {
            assert_eq!(fault_lines(&supertile(n, k).unwrap()).unwrap().line_count(), 0);
        }
    }
    for n in [2, 3] {
        for p in two_fault_completions(n).unwrap() {
            assert_eq!(fault_lines(&p).unwrap().line_count(), 2);
        }
        for p in one_fault_completions(n).unwrap() {
            assert_eq!(fault_lines(&p).unwrap().line_count(), 1);
        }
    }
}
