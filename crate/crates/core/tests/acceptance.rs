mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use dyncube::automorphism::{enumerate_codes_budgeted, modulo_shifts, DEFAULT_NODE_BUDGET};
use dyncube::cubes::{
    b_window, complexity_proxy, cube_set, relation_pairs, symmetry_closure_check, RelationKind, WindowSpec,
};
use dyncube::heisenberg::{
    apply_s, apply_t, canonical, distance, strong_witness_scan, witness_search, HPoint, RotationParams,
};
use dyncube::product::{
    build_product, detect_product, verify_three_coordinate_rule_sample, ProductOutcome, ProductSpec,
};
use dyncube::robinson::{
    classify_fibers, fault_lines, is_valid, supertile, supertile_side, tileset, two_fault_completions, Assembly,
};
use dyncube::substitution::{central_patch, iterate1d, morse_rule, thue_morse_rule};
use dyncube::{Pattern, Rect, ShiftVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

type Criterion = (&'static str, fn() -> Outcome, u64);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn morse_identity() -> Outcome {
    let rule = morse_rule();
    let mut cells = 0;
    for n in 1..=8 {
        let p = central_patch(&rule, n).map_err(|e| e.to_string())?;
        let (ax, ay) = p.support().points().find(|&(x, y)| p.get(x, y) == Some(0)).ok_or("no 0-cell")?;
        let y = p.reanchor((p.support().x0 - ax, p.support().y0 - ay));
        for (i, j) in y.support().points() {
            let lhs = y.get(i, j).unwrap();
            let rhs = (y.get(i, 0).unwrap() + y.get(0, j).unwrap()) % 2;
            ensure(lhs == rhs, || format!("level {n}: cell ({i}, {j})"))?;
            cells += 1;
        }
    }
    Ok(format!("{cells} cells over levels 1..=8"))
}

fn morse_product() -> Outcome {
    let p = central_patch(&morse_rule(), 6).map_err(|e| e.to_string())?;
    let d = match detect_product(&p, 0, ShiftVector::ZERO).map_err(|e| e.to_string())? {
        ProductOutcome::Decomposition(d) => d,
        ProductOutcome::Conflict(c) => return Err(format!("conflict {c:?}")),
    };
    for &(r, c, s) in &d.phi {
        let a = d.row_alphabet[r as usize].cells()[0];
        let b = d.col_alphabet[c as usize].cells()[0];
        ensure(s == (a + b) % 2, || format!("phi({a}, {b}) = {s}"))?;
    }
    ensure(d.rebuild().map_err(|e| e.to_string())? == p, || "rebuild differs".into())?;
    let tm = iterate1d(&thue_morse_rule(), 0, 6).map_err(|e| e.to_string())?;
    let built = build_product(&ProductSpec::from_fn(tm.clone(), tm, p.alphabet().clone(), |a, b| (a + b) % 2))
        .map_err(|e| e.to_string())?;
    ensure(built.cells() == p.cells(), || "Thue-Morse product differs from the Morse patch".into())?;
    Ok(format!("phi = a + b mod 2 on {} entries; 64x64 rebuild exact", d.phi.len()))
}

fn morse_relations() -> Outcome {
    let p = central_patch(&morse_rule(), 7).map_err(|e| e.to_string())?;
    let spec = WindowSpec::new(b_window(2), 32, 32).unwrap();
    let mut counts = Vec::new();
    for kind in [RelationKind::RS, RelationKind::RT] {
        let pairs = relation_pairs(&p, &spec, kind).map_err(|e| e.to_string())?;
        if let Some(w) = pairs.iter().find(|w| !w.is_diagonal()) {
            return Err(format!("{kind:?} off-diagonal pair at {:?}", w.quadruple.canonical_key()));
        }
        counts.push(pairs.len());
    }
    Ok(format!("R_S {} and R_T {} pairs, all diagonal", counts[0], counts[1]))
}

fn corner_blocks(p: &Pattern, c: usize) -> Vec<Pattern> {
    [(0, 0), (c + 1, 0), (0, c + 1), (c + 1, c + 1)]
        .into_iter()
        .map(|(x, y)| p.subpattern(Rect::square(x as i64, y as i64, c).unwrap()).unwrap().reanchor((0, 0)))
        .collect()
}

fn robinson_supertiles() -> Outcome {
    let ts = tileset();
    for n in 1..=6 {
        let side = (1usize << n) - 1;
        let tiles: Vec<Pattern> =
            (0..4).map(|k| supertile(n, k)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let smaller: Vec<Pattern> =
            if n > 1 { (0..4).map(|k| supertile(n - 1, k).unwrap()).collect() } else { Vec::new() };
        for (k, p) in tiles.iter().enumerate() {
            ensure(p.width() == side && p.height() == side, || format!("order {n}: side {}", p.width()))?;
            is_valid(p).map_err(|v| format!("order {n} orientation {k}: {v:?}"))?;
            let mid = (side / 2) as i64;
            ensure(ts.tile(p.get(mid, mid).unwrap()).is_cross, || format!("order {n} orientation {k}: centre"))?;
            if n > 1 {
                let c = supertile_side(n - 1).unwrap();
                for corner in corner_blocks(p, c) {
                    ensure(smaller.contains(&corner), || format!("order {n} orientation {k}: corner"))?;
                }
            }
        }
        for i in 0..4 {
            for j in i + 1..4 {
                ensure(tiles[i] != tiles[j], || format!("order {n}: orientations {i} and {j} coincide"))?;
            }
        }
    }
    Ok("orders 1..=6, four orientations each".into())
}

fn robinson_non_product() -> Outcome {
    let p = supertile(5, 0).map_err(|e| e.to_string())?;
    let side = p.width() as i64;
    let centre = ShiftVector::new(side / 2, side / 2);
    let mut conflicts = Vec::new();
    for r in 0..=2usize {
        match detect_product(&p, r, centre).map_err(|e| e.to_string())? {
            ProductOutcome::Conflict(w) => conflicts.push(w.conflicts),
            ProductOutcome::Decomposition(_) => return Err(format!("radius {r}: decomposition at the centre")),
        }
        let ri = r as i64;
        for y in ri..side - ri {
            for x in ri..side - ri {
                if let ProductOutcome::Decomposition(d) =
                    detect_product(&p, r, ShiftVector::new(x, y)).map_err(|e| e.to_string())?
                {
                    let vacuous = d.row_alphabet.len() == d.row_word.len() || d.col_alphabet.len() == d.col_word.len();
                    ensure(vacuous, || format!("radius {r}: non-vacuous decomposition at ({x}, {y})"))?;
                }
            }
        }
    }
    let completions = two_fault_completions(3).map_err(|e| e.to_string())?;
    let refs: Vec<&Pattern> = completions.iter().collect();
    let spec = WindowSpec::new(Rect::square(0, 0, 4).unwrap(), 2, 2).unwrap();
    let v = verify_three_coordinate_rule_sample(&refs, &spec)
        .map_err(|e| e.to_string())?
        .ok_or("three-coordinate rule holds on the two-fault assembly")?;
    let f1 = fault_lines(refs[v.first_patch]).map_err(|e| e.to_string())?;
    let f2 = fault_lines(refs[v.second_patch]).map_err(|e| e.to_string())?;
    let cells = v.differing_cells();
    ensure(!cells.is_empty(), || "violating windows are equal".into())?;
    for &((x1, y1), (x2, y2)) in &cells {
        ensure(f1.on_fault(x1, y1) && f2.on_fault(x2, y2), || {
            format!("difference off the fault lines at ({x1}, {y1})")
        })?;
    }
    Ok(format!(
        "centre conflicts at radii 0..=2: {conflicts:?}; violation on coordinate {} differing at {} fault-line cells",
        v.coordinate,
        cells.len()
    ))
}

fn robinson_fibers() -> Outcome {
    let two = classify_fibers(Assembly::TwoFault { order: 3 }).map_err(|e| e.to_string())?;
    ensure(two.completions == 28 && two.class_sizes == vec![28], || format!("two-fault: {two:?}"))?;
    let one = classify_fibers(Assembly::OneFault { order: 3 }).map_err(|e| e.to_string())?;
    let verdict = if one.completions == 6 { "matches 6" } else { "differs from 6" };
    Ok(format!(
        "two-fault: 28 completions in one class; one-fault: {} completions, classes {:?} ({verdict})",
        one.completions, one.class_sizes
    ))
}

fn robinson_automorphisms() -> Outcome {
    let p = supertile(5, 0).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for (r, check) in [(0, 3), (1, 5)] {
        let (codes, stats) = enumerate_codes_budgeted(&p, r, check, DEFAULT_NODE_BUDGET).map_err(|e| e.to_string())?;
        let reduced = modulo_shifts(&codes);
        ensure(reduced.len() == 1 && reduced[0].is_identity_mod_shifts(), || {
            format!("r = {r}: {} classes modulo shifts", reduced.len())
        })?;
        notes.push(format!("r={r}: {} codes, {} nodes", codes.len(), stats.nodes));
    }
    Ok(format!("identity only modulo shifts ({})", notes.join("; ")))
}

fn cube_symmetries() -> Outcome {
    let morse = central_patch(&morse_rule(), 5).map_err(|e| e.to_string())?;
    let robinson = supertile(5, 0).map_err(|e| e.to_string())?;
    let mut total = 0;
    for (name, p) in [("morse", &morse), ("robinson", &robinson)] {
        for (window, bound) in [(b_window(1), 6), (b_window(2), 4)] {
            let spec = WindowSpec::new(window, bound, bound).unwrap();
            let cubes = cube_set(p, &spec).map_err(|e| e.to_string())?;
            if let Some(q) = cubes.iter().find(|q| !symmetry_closure_check(q, p, &spec)) {
                return Err(format!("{name}: quadruple {:?}", q.canonical_key()));
            }
            total += cubes.len();
        }
    }
    Ok(format!("{total} quadruples checked"))
}

fn oracle_equivalence() -> Outcome {
    for seed in 0..100 {
        common::oracle_check(seed)?;
    }
    Ok("100 seeds".into())
}

fn heisenberg() -> Outcome {
    let params = RotationParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let p = canonical(HPoint::new(rng.gen(), rng.gen(), rng.gen()));
        worst = worst.max(distance(apply_s(apply_t(p, &params), &params), apply_t(apply_s(p, &params), &params)));
    }
    ensure(worst <= 1e-12, || format!("commutation error {worst:e}"))?;
    let mut ratio: f64 = 0.0;
    for eps in [0.1, 0.03, 0.01] {
        for k in 1..=9 {
            let c = k as f64 / 10.0;
            let r = witness_search(c, eps, &params).map_err(|e| e.to_string())?;
            ensure(r.max < 6.0 * eps, || format!("c={c} eps={eps}: max {}", r.max))?;
            ratio = ratio.max(r.max / eps);
        }
    }
    let scan = strong_witness_scan(0.5, 0.01, &params, 100_000);
    ensure(!scan.found, || format!("strong witness at {:?}", scan.closest))?;
    Ok(format!(
        "commutation error {worst:.1e}; witness max/eps <= {ratio:.2}; strong scan closest {:.3}",
        scan.closest.2
    ))
}

fn complexity_contrast() -> Outcome {
    let morse = central_patch(&morse_rule(), 6).map_err(|e| e.to_string())?;
    let robinson = supertile(6, 0).map_err(|e| e.to_string())?;
    let values = |p: &Pattern| (1..=16).map(|n| complexity_proxy(p, n)).collect::<Result<Vec<_>, _>>();
    let m = values(&morse).map_err(|e| e.to_string())?;
    let r = values(&robinson).map_err(|e| e.to_string())?;
    ensure(m.windows(2).all(|w| w[0] == w[1]), || format!("morse varies: {m:?}"))?;
    ensure(r.windows(2).any(|w| w[1] > w[0]), || format!("robinson never increases: {r:?}"))?;
    Ok(format!("morse {} for n=1..16; robinson {:?}", m[0], r))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("morse identity", morse_identity, 1),
        ("morse product detection", morse_product, 1),
        ("morse relation triviality", morse_relations, 30),
        ("robinson supertiles", robinson_supertiles, 5),
        ("robinson non-product", robinson_non_product, 60),
        ("robinson fibers", robinson_fibers, 120),
        ("robinson automorphisms", robinson_automorphisms, 600),
        ("cube symmetries", cube_symmetries, 30),
        ("oracle equivalence", oracle_equivalence, 30),
        ("heisenberg", heisenberg, 60),
        ("complexity contrast", complexity_contrast, 60),
    ];
    let mut failed = Vec::new();
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if outcome.is_ok() && elapsed > Duration::from_secs(limit) {
            outcome = Err(format!("took {elapsed:.2?}, limit {limit} s"));
        }
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.clone()),
            Err(e) => ("FAIL", e.clone()),
        };
        writeln!(std::io::stderr(), "{tag} {:>2}. {name} [{elapsed:.2?}] {detail}", i + 1).unwrap();
        if outcome.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
