//! Parsing of group descriptions, coefficient lists and set files.

use std::collections::HashMap;
use std::path::Path;

use bohr_roth::bohr::{BohrSet, BohrSpec};
use bohr_roth::group::{FiniteAbelianGroup, Subset};
use bohr_roth::lattice::{LatticePointSet, RingElement};

use crate::CliError;

/// What the lines of a set file are read into.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Group(&'a FiniteAbelianGroup),
    Lattice(usize),
}

#[derive(Clone, Debug)]
pub enum ParsedSet {
    Subset(Subset),
    Points(LatticePointSet),
}

#[derive(Clone, Debug)]
pub struct SetFile {
    pub set: ParsedSet,
    /// Lines whose coordinates were reduced into the group.
    pub notices: Vec<String>,
}

impl SetFile {
    pub fn subset(self) -> Subset {
        match self.set {
            ParsedSet::Subset(s) => s,
            ParsedSet::Points(_) => unreachable!("parsed against a group"),
        }
    }

    pub fn points(self) -> LatticePointSet {
        match self.set {
            ParsedSet::Points(p) => p,
            ParsedSet::Subset(_) => unreachable!("parsed against a lattice"),
        }
    }
}

fn parse_err(path: &str, line: usize, column: usize, message: String) -> CliError {
    CliError::Parse {
        path: path.to_string(),
        line,
        column,
        message,
    }
}

/// Integer tokens of one line, separated by whitespace or commas, with the
/// 1-based column of each token.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        let sep = ch.is_whitespace() || ch == ',';
        match (sep, start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

/// Parses set text: one element per line, coordinates separated by spaces
/// or commas, `#` starting a comment.
pub fn parse_set_text(text: &str, path: &str, target: Target<'_>) -> Result<SetFile, CliError> {
    let arity = match target {
        Target::Group(g) => g.rank(),
        Target::Lattice(d) => d,
    };
    let mut rows: Vec<(usize, Vec<i64>)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let toks = tokens(line);
        if toks.is_empty() {
            continue;
        }
        let lineno = k + 1;
        if toks.len() != arity {
            return Err(parse_err(
                path,
                lineno,
                1,
                format!("expected {arity} coordinates, found {}", toks.len()),
            ));
        }
        let coords = toks
            .iter()
            .map(|&(col, t)| {
                t.parse::<i64>()
                    .map_err(|e| parse_err(path, lineno, col, format!("'{t}': {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((lineno, coords));
    }

    let mut notices = Vec::new();
    match target {
        Target::Group(g) => {
            let mut seen: HashMap<usize, usize> = HashMap::new();
            for (lineno, coords) in &rows {
                let idx = g.index_of(coords)?;
                let reduced: Vec<i64> = g.coords(idx).into_iter().map(|v| v as i64).collect();
                if &reduced != coords {
                    notices.push(format!("line {lineno}: {coords:?} reduced to {reduced:?}"));
                }
                if let Some(first) = seen.insert(idx, *lineno) {
                    return Err(parse_err(
                        path,
                        *lineno,
                        1,
                        format!("duplicate element {reduced:?}, first given on line {first}"),
                    ));
                }
            }
            let subset = Subset::from_indices(g, seen.into_keys());
            Ok(SetFile {
                set: ParsedSet::Subset(subset),
                notices,
            })
        }
        Target::Lattice(d) => {
            let mut seen: HashMap<&[i64], usize> = HashMap::new();
            for (lineno, coords) in &rows {
                if let Some(first) = seen.insert(coords, *lineno) {
                    return Err(parse_err(
                        path,
                        *lineno,
                        1,
                        format!("duplicate point {coords:?}, first given on line {first}"),
                    ));
                }
            }
            let points = LatticePointSet::new(d, rows.into_iter().map(|(_, c)| c).collect())?;
            Ok(SetFile {
                set: ParsedSet::Points(points),
                notices,
            })
        }
    }
}

pub fn parse_set_file(path: &Path, target: Target<'_>) -> Result<SetFile, CliError> {
    let text = read(path)?;
    parse_set_text(&text, &path.display().to_string(), target)
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// A Bohr set given as JSON `{"frequencies": [[..]], "widths": [..]}`.
pub fn parse_bohr_file(path: &Path, group: &FiniteAbelianGroup) -> Result<BohrSet, CliError> {
    let text = read(path)?;
    let spec: BohrSpec = serde_json::from_str(&text).map_err(|e| {
        parse_err(&path.display().to_string(), e.line(), e.column(), e.to_string())
    })?;
    Ok(spec.build(group)?)
}

fn list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|e| CliError::Usage(format!("{what}: '{}': {e}", t.trim())))
        })
        .collect()
}

/// `"7"` or `"5,5"`.
pub fn parse_factors(s: &str) -> Result<Vec<u64>, CliError> {
    list(s, "group")
}

/// `"1,2,4"`.
pub fn parse_coeffs(s: &str) -> Result<[i64; 3], CliError> {
    let v: Vec<i64> = list(s, "coeffs")?;
    v.try_into()
        .map_err(|v: Vec<i64>| CliError::Usage(format!("coeffs: expected 3 integers, got {}", v.len())))
}

/// `"0,0;1,0;0,1"`: three ring elements `a + bτ` given as `a,b`.
pub fn parse_triangle(s: &str) -> Result<[RingElement; 3], CliError> {
    let pts = s
        .split(';')
        .map(|p| {
            let v: Vec<i64> = list(p, "triangle")?;
            match v.as_slice() {
                [a, b] => Ok((*a, *b)),
                _ => Err(CliError::Usage(format!("triangle: vertex '{p}' needs two coordinates"))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    pts.try_into()
        .map_err(|v: Vec<RingElement>| CliError::Usage(format!("triangle: expected 3 vertices, got {}", v.len())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_columns() {
        assert_eq!(tokens("  3, -4 5"), vec![(3, "3"), (6, "-4"), (9, "5")]);
    }

    #[test]
    fn reduction_notice() {
        let g = FiniteAbelianGroup::cyclic(7).unwrap();
        let f = parse_set_text("8\n", "mem", Target::Group(&g)).unwrap();
        assert_eq!(f.notices.len(), 1);
        assert_eq!(f.subset().members(), &[1]);
    }

    #[test]
    fn bad_token_location() {
        let g = FiniteAbelianGroup::cyclic(7).unwrap();
        match parse_set_text("1\n 2x\n", "mem", Target::Group(&g)) {
            Err(CliError::Parse { line, column, .. }) => assert_eq!((line, column), (2, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn triangle_spec() {
        assert_eq!(parse_triangle("0,0;1,0;0,1").unwrap(), [(0, 0), (1, 0), (0, 1)]);
        assert!(parse_triangle("0,0;1,0").is_err());
    }
}
