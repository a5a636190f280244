use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use dyncube::product::{build_product, ProductSpec};
use dyncube::robinson::{supertile_bounded, supertile_side};
use dyncube::substitution::{central_patch_bounded, morse_rule, RuleJson, SubstitutionRule, DEFAULT_MAX_SIDE};
use dyncube::{Alphabet, Pattern, Symbol};
use serde::Deserialize;

pub const MAX_PATCH_VAR: &str = "DYNCUBE_MAX_PATCH";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum System {
    Morse,
    Robinson,
    Product(PathBuf),
    Custom(PathBuf),
    File(PathBuf),
}

impl System {
    pub fn parse(s: &str) -> Result<System, String> {
        match s.split_once(':') {
            None if s == "morse" => Ok(System::Morse),
            None if s == "robinson" => Ok(System::Robinson),
            Some(("product", p)) if !p.is_empty() => Ok(System::Product(p.into())),
            Some(("custom", p)) if !p.is_empty() => Ok(System::Custom(p.into())),
            Some(("file", p)) if !p.is_empty() => Ok(System::File(p.into())),
            _ => Err(format!(
                "unknown system '{s}'; use morse, robinson, product:<file>, custom:<rule-file> or file:<pattern-file>"
            )),
        }
    }

    pub fn name(&self) -> String {
        match self {
            System::Morse => "morse".into(),
            System::Robinson => "robinson".into(),
            System::Product(p) => format!("product:{}", p.display()),
            System::Custom(p) => format!("custom:{}", p.display()),
            System::File(p) => format!("file:{}", p.display()),
        }
    }

    pub fn is_robinson(&self) -> bool {
        *self == System::Robinson
    }
}

pub fn max_patch() -> Result<usize> {
    match std::env::var(MAX_PATCH_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| anyhow!("{MAX_PATCH_VAR}={v} is not a positive integer")),
        Err(_) => Ok(DEFAULT_MAX_SIDE),
    }
}

/// Product description: `phi` lists `[a, b, symbol]` triples.
#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ProductFile {
    alphabet: Vec<String>,
    row_word: Vec<Symbol>,
    col_word: Vec<Symbol>,
    phi: Vec<(Symbol, Symbol, Symbol)>,
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn check_side(p: &Pattern, max: usize) -> Result<()> {
    if p.width() > max || p.height() > max {
        bail!("patch is {}x{}, above the ceiling {max}; raise {MAX_PATCH_VAR} to allow it", p.width(), p.height());
    }
    Ok(())
}

/// Builds the patch of `system` at `level`, refusing sizes above the ceiling
/// before generating anything.
pub fn load(system: &System, level: u32) -> Result<Pattern> {
    let max = max_patch()?;
    let substitution = |rule: &SubstitutionRule| -> Result<Pattern> {
        if level == 0 {
            bail!("--level must be at least 1");
        }
        let side = (rule.expansion() as u128).checked_pow(level).unwrap_or(u128::MAX);
        if side > max as u128 {
            bail!("level {level} gives side {side}, above the ceiling {max}; raise {MAX_PATCH_VAR} or lower --level");
        }
        Ok(central_patch_bounded(rule, level, max)?)
    };
    match system {
        System::Morse => substitution(&morse_rule()),
        System::Custom(path) => {
            let json: RuleJson = serde_json::from_str(&read(path)?)
                .with_context(|| format!("{} is not a substitution rule file", path.display()))?;
            substitution(&SubstitutionRule::from_json(&json)?)
        }
        System::Robinson => {
            let side = supertile_side(level).ok_or_else(|| anyhow!("--level must lie in 1..64 for robinson"))?;
            if side > max {
                bail!(
                    "level {level} gives side {side}, above the ceiling {max}; raise {MAX_PATCH_VAR} or lower --level"
                );
            }
            Ok(supertile_bounded(level, 0, max)?)
        }
        System::Product(path) => {
            let f: ProductFile = serde_json::from_str(&read(path)?)
                .with_context(|| format!("{} is not a product file", path.display()))?;
            if f.row_word.len() > max || f.col_word.len() > max {
                bail!("product words exceed the ceiling {max}; raise {MAX_PATCH_VAR}");
            }
            let phi: BTreeMap<(Symbol, Symbol), Symbol> = f.phi.into_iter().map(|(a, b, s)| ((a, b), s)).collect();
            let alphabet = Arc::new(Alphabet::new(f.alphabet)?);
            Ok(build_product(&ProductSpec { row_word: f.row_word, col_word: f.col_word, phi, alphabet })?)
        }
        System::File(path) => {
            let p: Pattern = serde_json::from_str(&read(path)?)
                .with_context(|| format!("{} is not a pattern file", path.display()))?;
            check_side(&p, max)?;
            Ok(p)
        }
    }
}
