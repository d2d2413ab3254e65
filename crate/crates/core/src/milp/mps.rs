//! Fixed-format MPS export and import.
//!
//! Row and column names are limited to 8 characters. Names that fit and are
//! unique are written as is; all others get a generated code (`C` or `R`
//! followed by the index in base 36). The original names are recorded in
//! `*` comment lines ahead of the `NAME` card so [`read_mps`] restores them;
//! other readers skip comments and see a plain model.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use super::model::{Constraint, Family, Model, Sense, VarKind, VarTag, Variable};
use crate::error::{Error, Result};

const OBJ_ROW: &str = "COST";
const NAME_COMMENT: &str = "* name";

fn base36(mut n: usize, width: usize) -> String {
    const DIGITS: &[u8; 36] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    let mut out = vec![b'0'; width];
    for slot in out.iter_mut().rev() {
        *slot = DIGITS[n % 36];
        n /= 36;
    }
    String::from_utf8(out).expect("ascii digits")
}

/// Deterministic 8-character names for `names`, avoiding `reserved`.
pub fn short_names(names: &[String], prefix: char, reserved: &HashSet<String>) -> Vec<String> {
    let fits = |n: &str| n.len() <= 8 && !n.is_empty() && !n.contains(char::is_whitespace);
    let mut count: HashMap<&str, usize> = HashMap::new();
    for n in names {
        *count.entry(n.as_str()).or_default() += 1;
    }
    let mut taken: HashSet<String> = reserved.clone();
    taken.extend(
        names
            .iter()
            .filter(|n| fits(n) && count[n.as_str()] == 1)
            .cloned(),
    );
    let mut out = Vec::with_capacity(names.len());
    let mut next = 0usize;
    for n in names {
        if fits(n) && count[n.as_str()] == 1 {
            out.push(n.clone());
            continue;
        }
        loop {
            let code = format!("{prefix}{}", base36(next, 7));
            next += 1;
            if taken.insert(code.clone()) {
                out.push(code);
                break;
            }
        }
    }
    out
}

/// Shortest decimal form of `v` that fits a 12-character field.
fn number(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    // Most accurate 12-character rendering, fixed point preferred on ties.
    let mut candidates = Vec::new();
    for prec in (0..=11).rev() {
        let s = format!("{v:.prec$}");
        if s.len() <= 12 {
            let s = if s.contains('.') {
                s.trim_end_matches('0').trim_end_matches('.').to_string()
            } else {
                s
            };
            candidates.push(s);
            break;
        }
    }
    for prec in (0..=8).rev() {
        let s = format!("{v:.prec$e}");
        if s.len() <= 12 {
            candidates.push(s);
            break;
        }
    }
    let err = |s: &String| s.parse::<f64>().map_or(f64::INFINITY, |b| (b - v).abs());
    candidates
        .into_iter()
        .filter(|s| err(s).is_finite())
        .min_by(|a, b| err(a).total_cmp(&err(b)))
        .unwrap_or_else(|| format!("{v:.0e}"))
}

fn card(out: &mut String, kind: &str, name1: &str, name2: &str, value: Option<f64>) {
    let mut line = format!(" {kind:<2} {name1:<8}  {name2:<8}");
    if let Some(v) = value {
        let _ = write!(line, "  {:>12}", number(v));
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

/// Renders a model in fixed-format MPS.
pub fn write_mps_string(model: &Model<f64>, name: &str) -> String {
    let var_names: Vec<String> = model.vars.iter().map(|v| v.tag.to_string()).collect();
    let row_names: Vec<String> = model.rows.iter().map(|r| r.name()).collect();
    let reserved: HashSet<String> = [OBJ_ROW.to_string()].into();
    let cols = short_names(&var_names, 'C', &reserved);
    let rows = short_names(&row_names, 'R', &reserved);

    let mut out = String::new();
    for (short, full) in cols.iter().zip(&var_names) {
        if short != full {
            let _ = writeln!(out, "{NAME_COMMENT} C {short} {full}");
        }
    }
    for (short, full) in rows.iter().zip(&row_names) {
        if short != full {
            let _ = writeln!(out, "{NAME_COMMENT} R {short} {full}");
        }
    }
    let _ = writeln!(
        out,
        "NAME          {}",
        name.chars().take(8).collect::<String>()
    );
    out.push_str("ROWS\n");
    card(&mut out, "N", OBJ_ROW, "", None);
    for (r, short) in model.rows.iter().zip(&rows) {
        let kind = match r.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        card(&mut out, kind, short, "", None);
    }

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.vars.len()];
    for (i, r) in model.rows.iter().enumerate() {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for &(j, a) in &r.terms {
            *merged.entry(j).or_default() += a;
        }
        for (j, a) in merged {
            by_col[j].push((i, a));
        }
    }
    let cost = model.cost_vector();

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0;
    for (j, var) in model.vars.iter().enumerate() {
        let int = var.kind.is_integral();
        if int != in_int {
            let tag = if int { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARK{marker:04}  'MARKER'                 {tag}");
            marker += 1;
            in_int = int;
        }
        let mut wrote = false;
        if cost[j] != 0.0 {
            card(&mut out, "", &cols[j], OBJ_ROW, Some(cost[j]));
            wrote = true;
        }
        for &(i, a) in &by_col[j] {
            card(&mut out, "", &cols[j], &rows[i], Some(a));
            wrote = true;
        }
        if !wrote {
            card(&mut out, "", &cols[j], OBJ_ROW, Some(0.0));
        }
    }
    if in_int {
        let _ = writeln!(
            out,
            "    MARK{marker:04}  'MARKER'                 'INTEND'"
        );
    }

    out.push_str("RHS\n");
    for (r, short) in model.rows.iter().zip(&rows) {
        if r.rhs != 0.0 {
            card(&mut out, "", "RHS", short, Some(r.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for (var, short) in model.vars.iter().zip(&cols) {
        let (lo, hi) = (var.lower, var.upper);
        if var.kind == VarKind::Binary && lo == 0.0 && hi == 1.0 {
            card(&mut out, "BV", "BND", short, None);
            continue;
        }
        if lo == hi {
            card(&mut out, "FX", "BND", short, Some(lo));
            continue;
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            card(&mut out, "FR", "BND", short, None);
            continue;
        }
        if lo == f64::NEG_INFINITY {
            card(&mut out, "MI", "BND", short, None);
        } else if lo != 0.0 {
            card(&mut out, "LO", "BND", short, Some(lo));
        }
        if hi.is_finite() {
            card(&mut out, "UP", "BND", short, Some(hi));
        } else if var.kind.is_integral() {
            card(&mut out, "PL", "BND", short, None);
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn write_mps(model: &Model<f64>, name: &str, path: &Path) -> Result<()> {
    std::fs::write(path, write_mps_string(model, name)).map_err(|e| Error::io(path, e))
}

fn parse_num(s: &str, line: usize) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Mps(format!("line {line}: bad number {s:?}")))
}

/// Parses an MPS file written by [`write_mps_string`] or any fixed or free
/// MPS file whose names contain no spaces.
pub fn read_mps_str(text: &str) -> Result<Model<f64>> {
    let mut full_cols: HashMap<String, String> = HashMap::new();
    let mut full_rows: HashMap<String, String> = HashMap::new();
    let mut section = "";
    let mut obj_name: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<(String, Sense)> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut cols: Vec<(String, bool)> = Vec::new();
    let mut terms: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut objective: Vec<(usize, f64)> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut bounds: Vec<(Option<f64>, Option<f64>, bool)> = Vec::new();
    let mut integer = false;

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        if let Some(rest) = raw.strip_prefix(NAME_COMMENT) {
            let f: Vec<&str> = rest.split_whitespace().collect();
            if let [kind, short, full] = f[..] {
                match kind {
                    "C" => full_cols.insert(short.to_string(), full.to_string()),
                    _ => full_rows.insert(short.to_string(), full.to_string()),
                };
            }
            continue;
        }
        if raw.starts_with('*') || raw.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match f[0] {
                "NAME" | "ROWS" | "COLUMNS" | "RHS" | "RANGES" | "BOUNDS" | "ENDATA" => f[0],
                "OBJSENSE" => return Err(Error::Mps("OBJSENSE is not supported".into())),
                other => return Err(Error::Mps(format!("line {line}: unknown section {other}"))),
            };
            continue;
        }
        match section {
            "ROWS" => {
                let [kind, name] = f[..] else {
                    return Err(Error::Mps(format!("line {line}: malformed row")));
                };
                let sense = match kind {
                    "N" => {
                        if obj_name.is_none() {
                            obj_name = Some(name.to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    _ => return Err(Error::Mps(format!("line {line}: row type {kind}"))),
                };
                row_index.insert(name.to_string(), rows.len());
                rows.push((name.to_string(), sense));
                terms.push(Vec::new());
                rhs.push(0.0);
            }
            "COLUMNS" => {
                if f.len() >= 3 && f[1] == "'MARKER'" {
                    integer = f[2] == "'INTORG'";
                    continue;
                }
                if f.len() < 3 || f.len().is_multiple_of(2) {
                    return Err(Error::Mps(format!("line {line}: malformed column entry")));
                }
                let j = *col_index.entry(f[0].to_string()).or_insert_with(|| {
                    cols.push((f[0].to_string(), integer));
                    bounds.push((None, None, false));
                    cols.len() - 1
                });
                for pair in f[1..].chunks(2) {
                    let v = parse_num(pair[1], line)?;
                    if Some(pair[0]) == obj_name.as_deref() {
                        objective.push((j, v));
                    } else if let Some(&i) = row_index.get(pair[0]) {
                        terms[i].push((j, v));
                    } else {
                        return Err(Error::Mps(format!("line {line}: unknown row {}", pair[0])));
                    }
                }
            }
            "RHS" => {
                let pairs = if f.len() % 2 == 1 { &f[1..] } else { &f[..] };
                for pair in pairs.chunks(2) {
                    if let Some(&i) = row_index.get(pair[0]) {
                        rhs[i] = parse_num(pair[1], line)?;
                    } else if Some(pair[0]) != obj_name.as_deref() {
                        return Err(Error::Mps(format!("line {line}: unknown row {}", pair[0])));
                    }
                }
            }
            "RANGES" => return Err(Error::Mps("RANGES are not supported".into())),
            "BOUNDS" => {
                if f.len() < 3 {
                    return Err(Error::Mps(format!("line {line}: malformed bound")));
                }
                let &j = col_index
                    .get(f[2])
                    .ok_or_else(|| Error::Mps(format!("line {line}: unknown column {}", f[2])))?;
                let v = || -> Result<f64> {
                    f.get(3)
                        .ok_or_else(|| Error::Mps(format!("line {line}: missing bound value")))
                        .and_then(|s| parse_num(s, line))
                };
                let b = &mut bounds[j];
                match f[0] {
                    "UP" => b.1 = Some(v()?),
                    "LO" => b.0 = Some(v()?),
                    "FX" => {
                        let x = v()?;
                        *b = (Some(x), Some(x), b.2);
                    }
                    "FR" => *b = (Some(f64::NEG_INFINITY), Some(f64::INFINITY), b.2),
                    "MI" => b.0 = Some(f64::NEG_INFINITY),
                    "PL" => b.1 = Some(f64::INFINITY),
                    "BV" => *b = (Some(0.0), Some(1.0), true),
                    other => return Err(Error::Mps(format!("line {line}: bound type {other}"))),
                }
            }
            "NAME" | "ENDATA" => {}
            _ => return Err(Error::Mps(format!("line {line}: data outside a section"))),
        }
    }

    let mut model = Model::new();
    for ((short, int), (lo, hi, bin)) in cols.into_iter().zip(bounds) {
        let name = full_cols.remove(&short).unwrap_or(short);
        let tag: VarTag = name.parse().unwrap_or(VarTag::Named(name));
        let kind = if bin {
            VarKind::Binary
        } else if int {
            VarKind::Integer
        } else {
            VarKind::Continuous
        };
        model.vars.push(Variable {
            tag,
            kind,
            lower: lo.unwrap_or(0.0),
            upper: hi.unwrap_or(f64::INFINITY),
        });
    }
    model.reindex();
    for (((short, sense), t), b) in rows.into_iter().zip(terms).zip(rhs) {
        let name = full_rows.remove(&short).unwrap_or(short);
        let family = Family::of_name(&name);
        let label = if family == Family::Other {
            name
        } else {
            name[family.prefix().len() + 1..name.len() - 1].to_string()
        };
        model.rows.push(Constraint {
            family,
            label,
            terms: t,
            sense,
            rhs: b,
        });
    }
    model.objective = objective;
    Ok(model)
}

pub fn read_mps(path: &Path) -> Result<Model<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_mps_str(&text)
}
