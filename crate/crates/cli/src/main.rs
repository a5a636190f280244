mod system;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dyncube::automorphism::{enumerate_codes_budgeted, modulo_shifts, BlockCode, DEFAULT_NODE_BUDGET};
use dyncube::cubes::{
    anchored_relation_pairs, b_window, complexity_proxy, cube_set, relation_pairs, return_times, RelationKind,
    WindowSpec,
};
use dyncube::heisenberg::{
    apply_s, apply_t, canonical, default_alpha, distance, strong_witness_scan, witness_search, HPoint, RotationParams,
};
use dyncube::product::{detect_product, ProductOutcome};
use dyncube::robinson::{
    classify_fibers, fault_lines, one_fault_completions, supertile_bounded, to_ppm, two_fault_completions, Assembly,
};
use dyncube::{Pattern, Rect, ShiftVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::system::System;

const EXIT_NEGATIVE: u8 = 2;
const EXIT_ERROR: u8 = 1;

#[derive(Parser)]
#[command(name = "dyncube", version, about = "Cube structures, product detection and case studies for Z^2 systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print counts only.
    #[arg(long, global = true)]
    summary: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write the patch as PGM, or PPM for Robinson patches ending in `.ppm`.
    #[arg(long, global = true)]
    image: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Source {
    /// morse, robinson, product:<file>, custom:<rule-file> or file:<pattern-file>.
    #[arg(long, value_parser = System::parse)]
    system: System,
    #[arg(long, default_value_t = 4)]
    level: u32,
}

#[derive(Args, Clone)]
struct Cube {
    /// Window B_k = [-2^(k-1), 2^(k-1) - 1]^2.
    #[arg(long, default_value_t = 1)]
    window: u32,
    /// Explicit window `x0,y0,width,height`, overriding --window.
    #[arg(long, value_parser = parse_rect, allow_hyphen_values = true)]
    rect: Option<Rect>,
    /// `N` or `NMAX,MMAX`.
    #[arg(long, value_parser = parse_pair, default_value = "4")]
    bounds: (i64, i64),
}

impl Cube {
    fn spec(&self) -> Result<WindowSpec> {
        let window = self.rect.unwrap_or_else(|| b_window(self.window));
        Ok(WindowSpec::new(window, self.bounds.0, self.bounds.1)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the patch of a system as pattern JSON.
    Generate(Source),
    /// Window cube set.
    Cubes {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        cube: Cube,
    },
    /// Window pairs related by R_S / R_T; exit 2 if any pair is off the diagonal.
    Relate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        cube: Cube,
        #[arg(long, value_enum, default_value_t = KindArg::Rs)]
        kind: KindArg,
        /// Base for the anchored kinds; defaults to the patch centre.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        anchor: Option<(i64, i64)>,
    },
    /// Product decomposition, or exit 2 with a conflict witness.
    DetectProduct {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 0)]
        radius: usize,
        /// Defaults to the patch centre.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        anchor: Option<(i64, i64)>,
    },
    /// Block-code automorphism candidates, reported modulo shifts.
    Automorphisms {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 0)]
        radius: usize,
        /// Check square side; defaults to 2r + 3.
        #[arg(long)]
        check: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: usize,
    },
    #[command(subcommand)]
    Robinson(RobinsonCommand),
    #[command(subcommand)]
    Heisenberg(HeisenbergCommand),
    /// Strip complexity proxy for n = 1..=max-n.
    Complexity {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 16)]
        max_n: usize,
    },
    /// Shifts within bounds returning the anchored window to itself.
    ReturnTimes {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        cube: Cube,
        /// Defaults to the patch centre.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        anchor: Option<(i64, i64)>,
    },
}

#[derive(Subcommand)]
enum RobinsonCommand {
    /// Order-n supertile.
    Supertile {
        #[arg(long)]
        level: u32,
        #[arg(long, default_value_t = 0)]
        orientation: u8,
    },
    /// Fault lines of every completion of an assembly.
    Faults {
        #[arg(long)]
        level: u32,
        #[arg(long, value_enum, default_value_t = AssemblyArg::Two)]
        assembly: AssemblyArg,
    },
    /// Completions grouped by agreement off the fault lines.
    Fibers {
        #[arg(long)]
        level: u32,
        #[arg(long, value_enum, default_value_t = AssemblyArg::Two)]
        assembly: AssemblyArg,
    },
}

#[derive(Subcommand)]
enum HeisenbergCommand {
    /// Regionally proximal witness; exit 2 if the 6 eps bound fails.
    Witness {
        #[arg(long)]
        c: f64,
        /// `cbrt2` or a number.
        #[arg(long, default_value = "cbrt2", value_parser = parse_alpha)]
        alpha: f64,
        #[arg(long)]
        eps: f64,
    },
    /// Anchored scan over |n|, |m| <= bound; exit 2 if no strong witness exists.
    Strong {
        #[arg(long)]
        c: f64,
        #[arg(long, default_value = "cbrt2", value_parser = parse_alpha)]
        alpha: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 100_000)]
        bound: u64,
    },
    /// Commutation error of S and T over random points drawn from --seed.
    Commute {
        #[arg(long, default_value = "cbrt2", value_parser = parse_alpha)]
        alpha: f64,
        #[arg(long, default_value_t = 10_000)]
        points: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Rs,
    Rt,
    RstarS,
    RstarT,
}

impl KindArg {
    fn kind(self) -> RelationKind {
        match self {
            KindArg::Rs => RelationKind::RS,
            KindArg::Rt => RelationKind::RT,
            KindArg::RstarS => RelationKind::RStarS,
            KindArg::RstarT => RelationKind::RStarT,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AssemblyArg {
    None,
    One,
    Two,
}

fn parse_pair(s: &str) -> Result<(i64, i64), String> {
    let parse = |t: &str| t.trim().parse::<i64>().map_err(|_| format!("'{t}' is not an integer"));
    match s.split_once(',') {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => parse(s).map(|n| (n, n)),
    }
}

fn parse_rect(s: &str) -> Result<Rect, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [x0, y0, w, h] = parts[..] else { return Err(format!("expected x0,y0,width,height, got '{s}'")) };
    let int = |t: &str| t.trim().parse::<i64>().map_err(|_| format!("'{t}' is not an integer"));
    let size = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("'{t}' is not a positive size"));
    Rect::new(int(x0)?, int(y0)?, size(w)?, size(h)?).map_err(|e| e.to_string())
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    if s == "cbrt2" {
        return Ok(default_alpha());
    }
    s.parse::<f64>().map_err(|_| format!("alpha must be 'cbrt2' or a number, got '{s}'"))
}

struct Provenance {
    system: Option<String>,
    level: Option<u32>,
    window: Option<Rect>,
    bounds: Option<(i64, i64)>,
    radius: Option<usize>,
    seed: u64,
}

impl Provenance {
    fn new(seed: u64) -> Self {
        Provenance { system: None, level: None, window: None, bounds: None, radius: None, seed }
    }

    fn source(mut self, s: &Source) -> Self {
        self.system = Some(s.system.name());
        self.level = Some(s.level);
        self
    }

    fn spec(mut self, spec: &WindowSpec) -> Self {
        self.window = Some(spec.window);
        self.bounds = Some((spec.nmax, spec.mmax));
        self
    }

    fn to_json(&self) -> Value {
        json!({
            "system": self.system,
            "level": self.level,
            "window": self.window,
            "bounds": self.bounds.map(|(n, m)| [n, m]),
            "radius": self.radius,
            "seed": self.seed,
            "version": env!("CARGO_PKG_VERSION"),
        })
    }
}

struct Report {
    body: Value,
    negative: bool,
}

impl Report {
    fn ok(body: Value) -> Self {
        Report { body, negative: false }
    }
}

fn with_provenance(p: &Provenance, mut body: Value) -> Value {
    body.as_object_mut().expect("report is an object").insert("provenance".into(), p.to_json());
    body
}

fn centre(p: &Pattern) -> ShiftVector {
    let s = p.support();
    ShiftVector::new(s.x0 + s.width as i64 / 2, s.y0 + s.height as i64 / 2)
}

fn anchor_or_centre(anchor: Option<(i64, i64)>, p: &Pattern) -> ShiftVector {
    anchor.map_or_else(|| centre(p), |(x, y)| ShiftVector::new(x, y))
}

fn write_image(path: &Path, p: &Pattern, robinson: bool) -> Result<()> {
    let ppm = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ppm"));
    let text = match (ppm, robinson) {
        (true, true) => to_ppm(p),
        (true, false) => bail!("PPM output is only available for Robinson patches; use a .pgm path"),
        (false, _) => p.to_pgm(),
    };
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn table_json(code: &BlockCode) -> Value {
    if let Some((shift, map)) = code.as_shifted_symbol_map() {
        let labels = code.alphabet.labels();
        let pairs: Vec<Value> =
            map.iter().enumerate().filter_map(|(i, s)| s.map(|s| json!([labels[i], labels[s as usize]]))).collect();
        return json!({ "radius": 0, "shift": [shift.n, shift.m], "symbolMap": pairs, "identity": code.is_identity_mod_shifts() });
    }
    let table: Vec<Value> = code.table.iter().map(|(b, s)| json!([b, s])).collect();
    json!({ "radius": code.radius, "shift": code.shift.map(|v| [v.n, v.m]), "table": table, "identity": false })
}

fn run(cli: &Cli) -> Result<Report> {
    let summary = cli.summary;
    let prov = Provenance::new(cli.seed);
    let image = |p: &Pattern, robinson: bool| -> Result<()> {
        match &cli.image {
            Some(path) => write_image(path, p, robinson),
            None => Ok(()),
        }
    };
    match &cli.command {
        Command::Generate(source) => {
            let p = system::load(&source.system, source.level)?;
            image(&p, source.system.is_robinson())?;
            Ok(Report::ok(serde_json::to_value(p.to_json())?))
        }
        Command::Cubes { source, cube } => {
            let p = system::load(&source.system, source.level)?;
            let spec = cube.spec()?;
            let cubes = cube_set(&p, &spec)?;
            let prov = prov.source(source).spec(&spec);
            let mut body = json!({ "window": spec.window, "bounds": [spec.nmax, spec.mmax], "count": cubes.len() });
            if !summary {
                let windows: BTreeMap<&Pattern, usize> =
                    cubes.iter().flat_map(|q| q.patterns.iter()).map(|w| (w, 0)).collect();
                let ids: BTreeMap<&Pattern, usize> = windows.keys().enumerate().map(|(i, &w)| (w, i)).collect();
                let quadruples: Vec<Value> = cubes
                    .iter()
                    .map(|q| {
                        json!({ "base": [q.base.n, q.base.m], "n": q.n, "m": q.m, "windows": q.patterns.each_ref().map(|w| ids[w]) })
                    })
                    .collect();
                body["windows"] = json!(ids.keys().collect::<Vec<_>>());
                body["quadruples"] = json!(quadruples);
            }
            Ok(Report::ok(with_provenance(&prov, body)))
        }
        Command::Relate { source, cube, kind, anchor } => {
            let p = system::load(&source.system, source.level)?;
            let spec = cube.spec()?;
            let kind = kind.kind();
            let pairs = match kind {
                RelationKind::RS | RelationKind::RT => relation_pairs(&p, &spec, kind)?,
                _ => anchored_relation_pairs(&p, anchor_or_centre(*anchor, &p), &spec, kind)?,
            };
            let off = pairs.iter().filter(|w| !w.is_diagonal()).count();
            let prov = prov.source(source).spec(&spec);
            let mut body = json!({
                "window": spec.window,
                "bounds": [spec.nmax, spec.mmax],
                "kind": kind,
                "count": pairs.len(),
                "offDiagonal": off,
            });
            if !summary {
                let list: Vec<Value> = pairs
                    .iter()
                    .map(|w| {
                        let q = &w.quadruple;
                        json!({
                            "pair": [&w.pair.0, &w.pair.1],
                            "companion": &w.companion,
                            "base": [q.base.n, q.base.m],
                            "n": q.n,
                            "m": q.m,
                            "diagonal": w.is_diagonal(),
                        })
                    })
                    .collect();
                body["pairs"] = json!(list);
            }
            Ok(Report { body: with_provenance(&prov, body), negative: off > 0 })
        }
        Command::DetectProduct { source, radius, anchor } => {
            let p = system::load(&source.system, source.level)?;
            let mut prov = prov.source(source);
            prov.radius = Some(*radius);
            match detect_product(&p, *radius, anchor_or_centre(*anchor, &p))? {
                ProductOutcome::Decomposition(d) => {
                    let mut body = serde_json::to_value(&d)?;
                    body["product"] = json!(true);
                    Ok(Report::ok(with_provenance(&prov, body)))
                }
                ProductOutcome::Conflict(w) => {
                    let body = json!({ "product": false, "conflict": w });
                    Ok(Report { body: with_provenance(&prov, body), negative: true })
                }
            }
        }
        Command::Automorphisms { source, radius, check, budget } => {
            let p = system::load(&source.system, source.level)?;
            let check = check.unwrap_or(2 * radius + 3);
            let (codes, stats) = enumerate_codes_budgeted(&p, *radius, check, *budget)?;
            let classes = modulo_shifts(&codes);
            let mut prov = prov.source(source);
            prov.radius = Some(*radius);
            let mut body = json!({
                "check": check,
                "budget": budget,
                "stats": stats,
                "codes": codes.len(),
                "classes": classes.len(),
                "identityOnly": classes.len() == 1 && classes[0].is_identity_mod_shifts(),
            });
            if !summary {
                body["classTables"] = json!(classes.iter().map(table_json).collect::<Vec<_>>());
            }
            Ok(Report::ok(with_provenance(&prov, body)))
        }
        Command::Robinson(cmd) => robinson(cmd, prov, summary, &image),
        Command::Heisenberg(cmd) => heisenberg(cmd, prov),
        Command::Complexity { source, max_n } => {
            let p = system::load(&source.system, source.level)?;
            let values = (1..=*max_n).map(|n| Ok(json!([n, complexity_proxy(&p, n)?]))).collect::<Result<Vec<_>>>()?;
            let body = json!({ "values": values });
            Ok(Report::ok(with_provenance(&prov.source(source), body)))
        }
        Command::ReturnTimes { source, cube, anchor } => {
            let p = system::load(&source.system, source.level)?;
            let spec = cube.spec()?;
            let a = anchor_or_centre(*anchor, &p);
            let times = return_times(&p, a, spec.window, spec.nmax, spec.mmax)?;
            let mut body = json!({
                "window": spec.window,
                "bounds": [spec.nmax, spec.mmax],
                "anchor": [a.n, a.m],
                "count": times.len(),
            });
            if !summary {
                body["times"] = json!(times.iter().map(|v| [v.n, v.m]).collect::<Vec<_>>());
            }
            Ok(Report::ok(with_provenance(&prov.source(source).spec(&spec), body)))
        }
    }
}

fn robinson(
    cmd: &RobinsonCommand,
    mut prov: Provenance,
    summary: bool,
    image: &dyn Fn(&Pattern, bool) -> Result<()>,
) -> Result<Report> {
    let max = system::max_patch()?;
    let assembly_name = |a: AssemblyArg| match a {
        AssemblyArg::None => "none",
        AssemblyArg::One => "one",
        AssemblyArg::Two => "two",
    };
    match *cmd {
        RobinsonCommand::Supertile { level, orientation } => {
            if orientation > 3 {
                bail!("--orientation must lie in 0..=3");
            }
            let p = supertile_bounded(level, orientation, max)?;
            image(&p, true)?;
            Ok(Report::ok(serde_json::to_value(p.to_json())?))
        }
        RobinsonCommand::Faults { level, assembly } => {
            let patches = match assembly {
                AssemblyArg::None => vec![supertile_bounded(level, 0, max)?],
                AssemblyArg::One => one_fault_completions(level)?,
                AssemblyArg::Two => two_fault_completions(level)?,
            };
            if let Some(first) = patches.first() {
                image(first, true)?;
            }
            let reports = patches.iter().map(fault_lines).collect::<Result<Vec<_>, _>>()?;
            prov.system = Some("robinson".into());
            prov.level = Some(level);
            let mut body = json!({ "assembly": assembly_name(assembly), "completions": patches.len() });
            if !summary {
                body["faultLines"] = json!(reports);
            }
            Ok(Report::ok(with_provenance(&prov, body)))
        }
        RobinsonCommand::Fibers { level, assembly } => {
            let a = match assembly {
                AssemblyArg::None => Assembly::NoFault { order: level, orientation: 0 },
                AssemblyArg::One => Assembly::OneFault { order: level },
                AssemblyArg::Two => Assembly::TwoFault { order: level },
            };
            let report = classify_fibers(a)?;
            prov.system = Some("robinson".into());
            prov.level = Some(level);
            let body = json!({ "assembly": assembly_name(assembly), "fibers": report });
            Ok(Report::ok(with_provenance(&prov, body)))
        }
    }
}

fn heisenberg(cmd: &HeisenbergCommand, mut prov: Provenance) -> Result<Report> {
    prov.system = Some("heisenberg".into());
    match *cmd {
        HeisenbergCommand::Witness { c, alpha, eps } => {
            let params = RotationParams::new(alpha)?;
            let r = witness_search(c, eps, &params)?;
            let pass = r.pass;
            Ok(Report { body: with_provenance(&prov, serde_json::to_value(r)?), negative: !pass })
        }
        HeisenbergCommand::Strong { c, alpha, eps, bound } => {
            let params = RotationParams::new(alpha)?;
            if !(eps > 0.0 && eps < 1.0) {
                bail!("--eps must lie in (0, 1)");
            }
            let scan = strong_witness_scan(c, eps, &params, bound);
            let body = json!({ "c": c, "alpha": alpha, "epsilon": eps, "scan": scan });
            Ok(Report { body: with_provenance(&prov, body), negative: !scan.found })
        }
        HeisenbergCommand::Commute { alpha, points } => {
            let params = RotationParams::new(alpha)?;
            let mut rng = ChaCha8Rng::seed_from_u64(prov.seed);
            let worst = (0..points)
                .map(|_| {
                    let p = canonical(HPoint::new(rng.gen(), rng.gen(), rng.gen()));
                    distance(apply_s(apply_t(p, &params), &params), apply_t(apply_s(p, &params), &params))
                })
                .fold(0.0, f64::max);
            let body = json!({ "alpha": alpha, "points": points, "maxError": worst, "tolerance": 1e-12, "pass": worst <= 1e-12 });
            Ok(Report { body: with_provenance(&prov, body), negative: worst > 1e-12 })
        }
    }
}

fn emit(cli: &Cli, body: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(body)?;
    text.push('\n');
    match &cli.out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    let result = run(&cli).and_then(|r| emit(&cli, &r.body).map(|_| r.negative));
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_NEGATIVE),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
