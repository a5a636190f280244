//! The 28 Robinson tiles, supertiles, patch validation and fault lines.
//!
//! Every tile edge carries a central arrow (pointing out of or into the
//! tile) and at most one side arrow, a thin line crossing the edge off
//! centre. Crosses emit central arrows on all four edges and a bent pair of
//! side arrows on two adjacent edges. Every other tile is an arm: one
//! principal line running through it, optionally accompanied by a parallel
//! thin line on one side and/or crossed by a perpendicular thin line that
//! sits on the tail side of the arm.
//!
//! Side-arrow positions are stored in global terms: on a vertical edge the
//! lateral sign is the `y` offset, on a horizontal edge the `x` offset.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Alphabet, Pattern, Rect, Symbol};
use crate::substitution::DEFAULT_MAX_SIDE;

pub type RobinsonPatch = Pattern;

pub const TILE_COUNT: usize = 28;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Dir {
    N,
    E,
    S,
    W,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::N, Dir::E, Dir::S, Dir::W];

    pub fn vec(self) -> (i8, i8) {
        match self {
            Dir::N => (0, 1),
            Dir::E => (1, 0),
            Dir::S => (0, -1),
            Dir::W => (-1, 0),
        }
    }

    pub fn from_vec(v: (i8, i8)) -> Dir {
        match v {
            (0, 1) => Dir::N,
            (1, 0) => Dir::E,
            (0, -1) => Dir::S,
            (-1, 0) => Dir::W,
            _ => panic!("{v:?} is not a unit vector"),
        }
    }

    pub fn opposite(self) -> Dir {
        let (x, y) = self.vec();
        Dir::from_vec((-x, -y))
    }

    fn index(self) -> usize {
        self as usize
    }

    fn is_horizontal(self) -> bool {
        matches!(self, Dir::E | Dir::W)
    }
}

/// Element of the dihedral group: optional mirror `x -> -x`, then
/// `rotation` quarter turns counter-clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Symmetry {
    pub rotation: u8,
    pub reflect: bool,
}

impl Symmetry {
    pub fn all() -> impl Iterator<Item = Symmetry> {
        [false, true].into_iter().flat_map(|reflect| (0..4).map(move |rotation| Symmetry { rotation, reflect }))
    }

    pub fn apply(self, v: (i8, i8)) -> (i8, i8) {
        let (mut x, mut y) = if self.reflect { (-v.0, v.1) } else { v };
        for _ in 0..self.rotation {
            (x, y) = (-y, x);
        }
        (x, y)
    }

    fn apply_dir(self, d: Dir) -> Dir {
        Dir::from_vec(self.apply(d.vec()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum TileKind {
    /// `(sx, sy)` is the quadrant holding the bent side arrows.
    Cross {
        sx: i8,
        sy: i8,
    },
    Arm {
        dir: Dir,
        parallel: Option<Dir>,
        crossing: bool,
    },
}

impl TileKind {
    pub fn transform(self, g: Symmetry) -> TileKind {
        match self {
            TileKind::Cross { sx, sy } => {
                let (sx, sy) = g.apply((sx, sy));
                TileKind::Cross { sx, sy }
            }
            TileKind::Arm { dir, parallel, crossing } => {
                TileKind::Arm { dir: g.apply_dir(dir), parallel: parallel.map(|p| g.apply_dir(p)), crossing }
            }
        }
    }

    pub fn edge(self, d: Dir) -> EdgeLabel {
        let (dx, dy) = d.vec();
        match self {
            TileKind::Cross { sx, sy } => {
                let side = if (dx, dy) == (0, sy) {
                    Some(SideArrow { lateral: sx, outgoing: true })
                } else if (dx, dy) == (sx, 0) {
                    Some(SideArrow { lateral: sy, outgoing: true })
                } else {
                    None
                };
                EdgeLabel { outgoing: true, side }
            }
            TileKind::Arm { dir, parallel, crossing } => {
                let along = d == dir || d == dir.opposite();
                let side = match parallel {
                    Some(p) if along => Some(SideArrow { lateral: nonzero(p.vec()), outgoing: d == dir }),
                    _ if crossing && !along => {
                        let (tx, ty) = dir.opposite().vec();
                        Some(SideArrow { lateral: nonzero((tx, ty)), outgoing: false })
                    }
                    _ => None,
                };
                EdgeLabel { outgoing: d == dir, side }
            }
        }
    }
}

fn nonzero(v: (i8, i8)) -> i8 {
    if v.0 != 0 {
        v.0
    } else {
        v.1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SideArrow {
    pub lateral: i8,
    pub outgoing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct EdgeLabel {
    /// Central arrowhead points out of the tile.
    pub outgoing: bool,
    pub side: Option<SideArrow>,
}

impl EdgeLabel {
    /// Head meets tail on the central arrow and on the side arrow, which
    /// must sit at the same lateral position.
    pub fn matches(self, other: EdgeLabel) -> bool {
        if self.outgoing == other.outgoing {
            return false;
        }
        match (self.side, other.side) {
            (None, None) => true,
            (Some(a), Some(b)) => a.lateral == b.lateral && a.outgoing != b.outgoing,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RobinsonTile {
    pub id: Symbol,
    pub kind: TileKind,
    /// Edges in `N, E, S, W` order.
    pub edges: [EdgeLabel; 4],
    pub is_cross: bool,
    pub base: u8,
    pub symmetry: Symmetry,
}

impl RobinsonTile {
    pub fn edge(&self, d: Dir) -> EdgeLabel {
        self.edges[d.index()]
    }
}

/// The five tiles whose dihedral images make up the set.
pub fn base_tiles() -> [TileKind; 5] {
    [
        TileKind::Cross { sx: 1, sy: 1 },
        TileKind::Arm { dir: Dir::N, parallel: None, crossing: false },
        TileKind::Arm { dir: Dir::N, parallel: Some(Dir::E), crossing: false },
        TileKind::Arm { dir: Dir::N, parallel: None, crossing: true },
        TileKind::Arm { dir: Dir::N, parallel: Some(Dir::E), crossing: true },
    ]
}

pub struct TileSet {
    tiles: Vec<RobinsonTile>,
    alphabet: Arc<Alphabet>,
    index: HashMap<TileKind, Symbol>,
    east_ok: Vec<Vec<bool>>,
    north_ok: Vec<Vec<bool>>,
}

impl TileSet {
    fn build() -> TileSet {
        let mut tiles: Vec<RobinsonTile> = Vec::new();
        for (b, base) in base_tiles().into_iter().enumerate() {
            for g in Symmetry::all() {
                let kind = base.transform(g);
                if tiles.iter().any(|t| t.kind == kind) {
                    continue;
                }
                let id = tiles.len() as Symbol;
                tiles.push(RobinsonTile {
                    id,
                    kind,
                    edges: Dir::ALL.map(|d| kind.edge(d)),
                    is_cross: matches!(kind, TileKind::Cross { .. }),
                    base: b as u8,
                    symmetry: g,
                });
            }
        }
        let alphabet = Arc::new(Alphabet::new((0..tiles.len()).map(|i| format!("R{i:02}"))).expect("labels"));
        let index = tiles.iter().map(|t| (t.kind, t.id)).collect();
        let east_ok =
            tiles.iter().map(|a| tiles.iter().map(|b| a.edge(Dir::E).matches(b.edge(Dir::W))).collect()).collect();
        let north_ok =
            tiles.iter().map(|a| tiles.iter().map(|b| a.edge(Dir::N).matches(b.edge(Dir::S))).collect()).collect();
        TileSet { tiles, alphabet, index, east_ok, north_ok }
    }

    pub fn tiles(&self) -> &[RobinsonTile] {
        &self.tiles
    }

    pub fn tile(&self, id: Symbol) -> &RobinsonTile {
        &self.tiles[id as usize]
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn id_of(&self, kind: TileKind) -> Option<Symbol> {
        self.index.get(&kind).copied()
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    /// `b` may sit immediately east of `a`.
    pub fn fits_east(&self, a: Symbol, b: Symbol) -> bool {
        self.east_ok[a as usize][b as usize]
    }

    /// `b` may sit immediately north of `a`.
    pub fn fits_north(&self, a: Symbol, b: Symbol) -> bool {
        self.north_ok[a as usize][b as usize]
    }

    /// Cross with bent arrows in quadrant `orientation`: 0 = NE, 1 = NW,
    /// 2 = SW, 3 = SE.
    pub fn cross(&self, orientation: u8) -> Symbol {
        let (sx, sy) = orientation_vec(orientation);
        self.id_of(TileKind::Cross { sx, sy }).expect("cross exists")
    }
}

pub fn orientation_vec(orientation: u8) -> (i8, i8) {
    match orientation % 4 {
        0 => (1, 1),
        1 => (-1, 1),
        2 => (-1, -1),
        _ => (1, -1),
    }
}

/// The tile set, built once.
pub fn tileset() -> &'static TileSet {
    static SET: OnceLock<TileSet> = OnceLock::new();
    SET.get_or_init(TileSet::build)
}

/// Row of the generated tile table: id, base tile, dihedral element.
#[derive(Clone, Debug, Serialize)]
pub struct TileTableRow {
    pub id: Symbol,
    pub label: String,
    pub base: u8,
    pub rotation: u8,
    pub reflection: bool,
    pub cross: bool,
    pub kind: TileKind,
}

pub fn tile_table() -> Vec<TileTableRow> {
    let ts = tileset();
    ts.tiles()
        .iter()
        .map(|t| TileTableRow {
            id: t.id,
            label: ts.alphabet().label(t.id).to_string(),
            base: t.base,
            rotation: t.symmetry.rotation,
            reflection: t.symmetry.reflect,
            cross: t.is_cross,
            kind: t.kind,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// The edge on side `side` (`E` or `N`) of the cell at `at` does not match.
    Edge { at: (i64, i64), side: Dir },
    /// No parity class of positions is fully covered by crosses.
    Lattice,
    /// The patch is not written over the Robinson alphabet.
    Alphabet,
}

pub fn is_valid(patch: &Pattern) -> std::result::Result<(), Violation> {
    let ts = tileset();
    if patch.alphabet().as_ref() != ts.alphabet().as_ref() {
        return Err(Violation::Alphabet);
    }
    let s = patch.support();
    for dy in 0..s.height {
        for dx in 0..s.width {
            let here = patch.at_local(dx, dy);
            let at = (s.x0 + dx as i64, s.y0 + dy as i64);
            if dx + 1 < s.width && !ts.fits_east(here, patch.at_local(dx + 1, dy)) {
                return Err(Violation::Edge { at, side: Dir::E });
            }
            if dy + 1 < s.height && !ts.fits_north(here, patch.at_local(dx, dy + 1)) {
                return Err(Violation::Edge { at, side: Dir::N });
            }
        }
    }
    if cross_lattice_offsets(patch).is_empty() {
        return Err(Violation::Lattice);
    }
    Ok(())
}

/// Parity classes `(a, b)` of absolute positions such that every cell with
/// `x = a` and `y = b` mod 2 holds a cross.
pub fn cross_lattice_offsets(patch: &Pattern) -> Vec<(u8, u8)> {
    let ts = tileset();
    let mut out = Vec::new();
    for b in 0..2u8 {
        for a in 0..2u8 {
            let covered = patch.support().points().all(|(x, y)| {
                x.rem_euclid(2) as u8 != a
                    || y.rem_euclid(2) as u8 != b
                    || ts.tile(patch.get(x, y).expect("in support")).is_cross
            });
            if covered {
                out.push((a, b));
            }
        }
    }
    out
}

pub fn supertile_side(n: u32) -> Option<usize> {
    if n == 0 || n >= usize::BITS {
        return None;
    }
    Some((1usize << n) - 1)
}

/// Order-`n` supertile whose central cross has the given orientation,
/// anchored at the origin.
pub fn supertile(n: u32, orientation: u8) -> Result<Pattern> {
    supertile_bounded(n, orientation, DEFAULT_MAX_SIDE)
}

pub fn supertile_bounded(n: u32, orientation: u8, max_side: usize) -> Result<Pattern> {
    if orientation > 3 {
        return Err(Error::Contract(format!("orientation must be 0..3, got {orientation}")));
    }
    let side = supertile_side(n)
        .filter(|&s| s <= max_side)
        .ok_or_else(|| Error::Resource(format!("order-{n} supertile exceeds the maximum side {max_side}")))?;
    let mut cells = vec![0 as Symbol; side * side];
    fill_supertile(&mut cells, side, 0, 0, n, orientation);
    Ok(Pattern::from_parts_unchecked(tileset().alphabet().clone(), Rect::square(0, 0, side)?, cells))
}

fn fill_supertile(cells: &mut [Symbol], stride: usize, x0: usize, y0: usize, n: u32, orientation: u8) {
    let ts = tileset();
    if n == 1 {
        cells[y0 * stride + x0] = ts.cross(orientation);
        return;
    }
    let h = (1usize << (n - 1)) - 1;
    // children face the centre
    fill_supertile(cells, stride, x0, y0, n - 1, 0);
    fill_supertile(cells, stride, x0 + h + 1, y0, n - 1, 1);
    fill_supertile(cells, stride, x0 + h + 1, y0 + h + 1, n - 1, 2);
    fill_supertile(cells, stride, x0, y0 + h + 1, n - 1, 3);
    let (cx, cy) = (x0 + h, y0 + h);
    cells[cy * stride + cx] = ts.cross(orientation);
    let (sx, sy) = orientation_vec(orientation);
    let crossing_at = 1usize << (n - 2);
    for d in Dir::ALL {
        let (dx, dy) = d.vec();
        let parallel = if (dx, dy) == (0, sy) {
            Some(Dir::from_vec((sx, 0)))
        } else if (dx, dy) == (sx, 0) {
            Some(Dir::from_vec((0, sy)))
        } else {
            None
        };
        for k in 1..=h {
            let x = (cx as i64 + dx as i64 * k as i64) as usize;
            let y = (cy as i64 + dy as i64 * k as i64) as usize;
            let kind = TileKind::Arm { dir: d, parallel, crossing: k == crossing_at };
            cells[y * stride + x] = ts.id_of(kind).expect("arm tile exists");
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FaultLineReport {
    /// Order of the maximal supertile decomposition found in the patch.
    pub order: u32,
    /// Lower-left corner of one decomposition block.
    pub block_origin: (i64, i64),
    pub horizontal: Option<i64>,
    pub vertical: Option<i64>,
    pub horizontal_crosses: usize,
    pub vertical_crosses: usize,
}

impl FaultLineReport {
    pub fn line_count(&self) -> usize {
        self.horizontal.is_some() as usize + self.vertical.is_some() as usize
    }

    pub fn on_fault(&self, x: i64, y: i64) -> bool {
        self.horizontal == Some(y) || self.vertical == Some(x)
    }
}

/// Lines of a valid patch that the maximal supertile decomposition leaves
/// uncovered and that carry at most one cross inside the patch.
pub fn fault_lines(patch: &Pattern) -> Result<FaultLineReport> {
    if let Err(v) = is_valid(patch) {
        return Err(Error::Contract(format!("fault lines need a valid patch, found {v:?}")));
    }
    let s = patch.support();
    let max_order = (1..usize::BITS)
        .take_while(|&k| supertile_side(k).is_some_and(|side| side <= s.width.min(s.height)))
        .last()
        .ok_or_else(|| Error::Contract("patch too small for a decomposition".into()))?;
    for order in (1..=max_order).rev() {
        let blocks: Vec<Pattern> = (0..4).map(|o| supertile(order, o)).collect::<Result<_>>()?;
        let period = 1i64 << order;
        for oy in 0..period {
            for ox in 0..period {
                if decomposes(patch, &blocks, period, ox, oy) {
                    return Ok(report_for(patch, order, period, ox, oy));
                }
            }
        }
    }
    Err(Error::Contract("no supertile decomposition found".into()))
}

fn decomposes(patch: &Pattern, blocks: &[Pattern], period: i64, ox: i64, oy: i64) -> bool {
    let s = patch.support();
    let side = period - 1;
    let first = |origin: i64, offset: i64| origin + offset - period;
    let mut full_blocks = 0;
    let mut by = first(s.y0, oy);
    while by < s.y1() {
        let mut bx = first(s.x0, ox);
        while bx < s.x1() {
            let x_lo = bx.max(s.x0);
            let x_hi = (bx + side).min(s.x1());
            let y_lo = by.max(s.y0);
            let y_hi = (by + side).min(s.y1());
            if x_lo < x_hi && y_lo < y_hi {
                let full = x_lo == bx && y_lo == by && x_hi == bx + side && y_hi == by + side;
                let agrees = blocks
                    .iter()
                    .any(|b| (y_lo..y_hi).all(|y| (x_lo..x_hi).all(|x| patch.get(x, y) == b.get(x - bx, y - by))));
                if !agrees {
                    return false;
                }
                full_blocks += full as usize;
            }
            bx += period;
        }
        by += period;
    }
    full_blocks > 0
}

fn report_for(patch: &Pattern, order: u32, period: i64, ox: i64, oy: i64) -> FaultLineReport {
    let ts = tileset();
    let s = patch.support();
    let crosses_in_column =
        |x: i64| (s.y0..s.y1()).filter(|&y| ts.tile(patch.get(x, y).expect("in support")).is_cross).count();
    let crosses_in_row =
        |y: i64| (s.x0..s.x1()).filter(|&x| ts.tile(patch.get(x, y).expect("in support")).is_cross).count();
    let best = |lines: Vec<i64>, count: &dyn Fn(i64) -> usize| {
        lines.into_iter().map(|l| (count(l), l)).filter(|&(c, _)| c <= 1).min()
    };
    let columns: Vec<i64> = (s.x0..s.x1()).filter(|x| (x - s.x0 - ox).rem_euclid(period) == period - 1).collect();
    let rows: Vec<i64> = (s.y0..s.y1()).filter(|y| (y - s.y0 - oy).rem_euclid(period) == period - 1).collect();
    let v = best(columns, &crosses_in_column);
    let h = best(rows, &crosses_in_row);
    FaultLineReport {
        order,
        block_origin: (s.x0 + ox, s.y0 + oy),
        horizontal: h.map(|(_, l)| l),
        vertical: v.map(|(_, l)| l),
        horizontal_crosses: h.map_or(0, |(c, _)| c),
        vertical_crosses: v.map_or(0, |(c, _)| c),
    }
}

/// A partially specified Robinson patch; `None` cells are free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub support: Rect,
    pub cells: Vec<Option<Symbol>>,
}

impl Template {
    pub fn empty(support: Rect) -> Template {
        Template { support, cells: vec![None; support.area()] }
    }

    fn idx(&self, dx: usize, dy: usize) -> usize {
        dy * self.support.width + dx
    }

    pub fn get(&self, dx: usize, dy: usize) -> Option<Symbol> {
        self.cells[self.idx(dx, dy)]
    }

    pub fn set(&mut self, dx: usize, dy: usize, s: Option<Symbol>) {
        let i = self.idx(dx, dy);
        self.cells[i] = s;
    }

    /// Copy `p`'s cells with its lower-left corner at local `(dx, dy)`.
    pub fn paste(&mut self, p: &Pattern, dx: usize, dy: usize) {
        for y in 0..p.height() {
            for x in 0..p.width() {
                self.set(dx + x, dy + y, Some(p.at_local(x, y)));
            }
        }
    }

    pub fn free_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    /// Tiles allowed at `(dx, dy)` given the currently filled neighbours.
    pub fn candidates(&self, dx: usize, dy: usize) -> Vec<Symbol> {
        let ts = tileset();
        let (w, h) = (self.support.width, self.support.height);
        let west = (dx > 0).then(|| self.get(dx - 1, dy)).flatten();
        let east = (dx + 1 < w).then(|| self.get(dx + 1, dy)).flatten();
        let south = (dy > 0).then(|| self.get(dx, dy - 1)).flatten();
        let north = (dy + 1 < h).then(|| self.get(dx, dy + 1)).flatten();
        (0..ts.len() as Symbol)
            .filter(|&t| {
                west.is_none_or(|o| ts.fits_east(o, t))
                    && east.is_none_or(|o| ts.fits_east(t, o))
                    && south.is_none_or(|o| ts.fits_north(o, t))
                    && north.is_none_or(|o| ts.fits_north(t, o))
            })
            .collect()
    }

    pub fn to_pattern(&self) -> Option<Pattern> {
        let cells: Option<Vec<Symbol>> = self.cells.iter().copied().collect();
        cells.map(|c| Pattern::from_parts_unchecked(tileset().alphabet().clone(), self.support, c))
    }
}

/// Every valid filling of the free cells, found by depth-first search in
/// storage order. Fails with a resource error past `max_solutions`.
pub fn complete(template: &Template, max_solutions: usize) -> Result<Vec<Pattern>> {
    let free: Vec<(usize, usize)> = (0..template.support.height)
        .flat_map(|y| (0..template.support.width).map(move |x| (x, y)))
        .filter(|&(x, y)| template.get(x, y).is_none())
        .collect();
    let mut work = template.clone();
    let mut out = Vec::new();
    search(&mut work, &free, 0, max_solutions, &mut out)?;
    out.sort();
    Ok(out)
}

fn search(t: &mut Template, free: &[(usize, usize)], k: usize, limit: usize, out: &mut Vec<Pattern>) -> Result<()> {
    if k == free.len() {
        let p = t.to_pattern().expect("all cells filled");
        if is_valid(&p).is_ok() {
            if out.len() == limit {
                return Err(Error::Resource(format!("more than {limit} completions")));
            }
            out.push(p);
        }
        return Ok(());
    }
    let (x, y) = free[k];
    for c in t.candidates(x, y) {
        t.set(x, y, Some(c));
        search(t, free, k + 1, limit, out)?;
    }
    t.set(x, y, None);
    Ok(())
}

/// Four order-`n` supertiles facing away from a free central row and
/// column.
pub fn two_fault_assembly(n: u32) -> Result<Template> {
    let quarter = supertile_side(n).ok_or_else(|| Error::Contract(format!("invalid order {n}")))?;
    let side = 2 * quarter + 1;
    if side > DEFAULT_MAX_SIDE {
        return Err(Error::Resource(format!("assembly side {side} exceeds {DEFAULT_MAX_SIDE}")));
    }
    let mut t = Template::empty(Rect::square(0, 0, side)?);
    t.paste(&supertile(n, 2)?, 0, 0);
    t.paste(&supertile(n, 3)?, quarter + 1, 0);
    t.paste(&supertile(n, 0)?, quarter + 1, quarter + 1);
    t.paste(&supertile(n, 1)?, 0, quarter + 1);
    Ok(t)
}

/// Two order-`n` supertiles side by side, facing away from a free column.
pub fn one_fault_assembly(n: u32) -> Result<Template> {
    let half = supertile_side(n).ok_or_else(|| Error::Contract(format!("invalid order {n}")))?;
    let width = 2 * half + 1;
    if width > DEFAULT_MAX_SIDE {
        return Err(Error::Resource(format!("assembly width {width} exceeds {DEFAULT_MAX_SIDE}")));
    }
    let mut t = Template::empty(Rect::new(0, 0, width, half)?);
    t.paste(&supertile(n, 1)?, 0, 0);
    t.paste(&supertile(n, 0)?, half + 1, 0);
    Ok(t)
}

/// Completions of [`two_fault_assembly`]: choose the tile where the two
/// lines meet, then propagate along each of the four half-lines.
pub fn two_fault_completions(n: u32) -> Result<Vec<Pattern>> {
    let template = two_fault_assembly(n)?;
    let c = supertile_side(n).expect("checked by assembly");
    let ts = tileset();
    let mut out = Vec::new();
    for centre in 0..ts.len() as Symbol {
        let mut t = template.clone();
        t.set(c, c, Some(centre));
        let mut arms: Vec<Vec<Vec<Symbol>>> = Vec::with_capacity(4);
        for d in Dir::ALL {
            let cells: Vec<(usize, usize)> = (1..=c as i64)
                .map(|k| ((c as i64 + d.vec().0 as i64 * k) as usize, (c as i64 + d.vec().1 as i64 * k) as usize))
                .collect();
            arms.push(half_lines(&mut t, &cells));
        }
        for combo in cartesian(&arms) {
            for (d, fill) in combo.iter().enumerate() {
                let (dx, dy) = Dir::ALL[d].vec();
                for (k, &s) in fill.iter().enumerate() {
                    let step = k as i64 + 1;
                    t.set((c as i64 + dx as i64 * step) as usize, (c as i64 + dy as i64 * step) as usize, Some(s));
                }
            }
            let p = t.to_pattern().expect("filled");
            if is_valid(&p).is_ok() {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// All fillings of `cells` (a path walked outward), each cell consistent
/// with its already filled neighbours.
fn half_lines(t: &mut Template, cells: &[(usize, usize)]) -> Vec<Vec<Symbol>> {
    fn go(t: &mut Template, cells: &[(usize, usize)], k: usize, acc: &mut Vec<Symbol>, out: &mut Vec<Vec<Symbol>>) {
        if k == cells.len() {
            out.push(acc.clone());
            return;
        }
        let (x, y) = cells[k];
        for c in t.candidates(x, y) {
            t.set(x, y, Some(c));
            acc.push(c);
            go(t, cells, k + 1, acc, out);
            acc.pop();
        }
        t.set(x, y, None);
    }
    let mut out = Vec::new();
    go(t, cells, 0, &mut Vec::new(), &mut out);
    out
}

fn cartesian(parts: &[Vec<Vec<Symbol>>]) -> Vec<Vec<Vec<Symbol>>> {
    parts.iter().fold(vec![Vec::new()], |acc, options| {
        acc.iter()
            .flat_map(|prefix| {
                options.iter().map(move |o| {
                    let mut p = prefix.clone();
                    p.push(o.clone());
                    p
                })
            })
            .collect()
    })
}

/// Completions of [`one_fault_assembly`], filling the free column upward.
pub fn one_fault_completions(n: u32) -> Result<Vec<Pattern>> {
    let mut t = one_fault_assembly(n)?;
    let half = supertile_side(n).expect("checked by assembly");
    let cells: Vec<(usize, usize)> = (0..half).map(|y| (half, y)).collect();
    let mut out: Vec<Pattern> = half_lines(&mut t, &cells)
        .into_iter()
        .filter_map(|fill| {
            for (k, &s) in fill.iter().enumerate() {
                t.set(half, k, Some(s));
            }
            let p = t.to_pattern().expect("filled");
            is_valid(&p).is_ok().then_some(p)
        })
        .collect();
    out.sort();
    Ok(out)
}

/// PPM (P3) rendering: crosses red, arms shaded by direction.
pub fn to_ppm(patch: &Pattern) -> String {
    let ts = tileset();
    let colour = |s: Symbol| -> [u8; 3] {
        match ts.tiles().get(s as usize).map(|t| t.kind) {
            Some(TileKind::Cross { .. }) => [220, 30, 30],
            Some(TileKind::Arm { dir, parallel, crossing }) => {
                let base: u8 = if dir.is_horizontal() { 60 } else { 140 };
                let lift = 40 * parallel.is_some() as u8 + 50 * crossing as u8;
                [base + lift, base + lift, 200]
            }
            None => [0, 0, 0],
        }
    };
    let mut out = format!("P3\n{} {}\n255\n", patch.width(), patch.height());
    for row in patch.cells().chunks(patch.width()).rev() {
        let line: Vec<String> = row
            .iter()
            .map(|&s| {
                let [r, g, b] = colour(s);
                format!("{r} {g} {b}")
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Assembly {
    NoFault { order: u32, orientation: u8 },
    OneFault { order: u32 },
    TwoFault { order: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiberReport {
    pub completions: usize,
    /// Sizes of the agreement classes, largest first.
    pub class_sizes: Vec<usize>,
    /// Class size -> number of classes of that size.
    pub histogram: BTreeMap<usize, usize>,
}

/// Group the completions of an assembly into classes that agree off their
/// detected fault lines.
pub fn classify_fibers(assembly: Assembly) -> Result<FiberReport> {
    let completions = match assembly {
        Assembly::NoFault { order, orientation } => vec![supertile(order, orientation)?],
        Assembly::OneFault { order } => one_fault_completions(order)?,
        Assembly::TwoFault { order } => two_fault_completions(order)?,
    };
    let mut classes: BTreeMap<Vec<Option<Symbol>>, usize> = BTreeMap::new();
    for p in &completions {
        let report = fault_lines(p)?;
        let key = p.support().points().map(|(x, y)| if report.on_fault(x, y) { None } else { p.get(x, y) }).collect();
        *classes.entry(key).or_default() += 1;
    }
    let mut class_sizes: Vec<usize> = classes.into_values().collect();
    class_sizes.sort_unstable_by(|a, b| b.cmp(a));
    let mut histogram = BTreeMap::new();
    for &s in &class_sizes {
        *histogram.entry(s).or_default() += 1;
    }
    Ok(FiberReport { completions: completions.len(), class_sizes, histogram })
}
