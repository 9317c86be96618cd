//! Plain-text instance and solution files.
//!
//! An instance file starts with one header line of `key=value` fields and is
//! followed by sections. Each section opens with `[name] count` and lists
//! `count` entries, one per line: indices for `rows`, `s_x`, `s_f`, and
//! `re,im` pairs for vectors. Floats are written with the shortest
//! representation that round-trips exactly.
//!
//! ```text
//! corrupt-recover-instance n=4 m=2 lambda=1.0 conjugated=false seed=7 prng=ChaCha8Rng
//! [rows] 2
//! 0
//! 2
//! [s_x] 1
//! 0
//! [s_f] 0
//! [x0] 4
//! 1.0,0.0
//! ...
//! [f0] 2
//! ...
//! [b] 2
//! ...
//! ```
//!
//! `x0` and `f0` are optional; without them the file only describes the
//! measurements. Supports are recomputed from `x0` and `f0` on read, and the
//! listed sets are checked against them.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{PartialFourierOperator, PRNG_NAME};
use crate::problem::ProblemInstance;
use crate::solver::{Solution, SolveStatus};

const INSTANCE_MAGIC: &str = "corrupt-recover-instance";
const SOLUTION_MAGIC: &str = "corrupt-recover-solution";

/// Measurements read from a file, with ground truth when present.
#[derive(Debug, Clone)]
pub struct InstanceFile {
    pub operator: PartialFourierOperator,
    pub lambda: f64,
    pub b: Vec<Complex64>,
    pub seed: Option<u64>,
    pub truth: Option<ProblemInstance>,
}

pub fn write_instance(inst: &ProblemInstance, with_truth: bool) -> String {
    let mut out = String::new();
    let seed = inst.seed.map_or_else(|| "none".to_owned(), |s| s.to_string());
    let _ = writeln!(
        out,
        "{INSTANCE_MAGIC} n={} m={} lambda={:?} conjugated={} seed={seed} prng={PRNG_NAME}",
        inst.n(),
        inst.m(),
        inst.lambda,
        inst.operator.conjugated()
    );
    write_indices(&mut out, "rows", inst.operator.rows());
    if with_truth {
        write_indices(&mut out, "s_x", &inst.s_x);
        write_indices(&mut out, "s_f", &inst.s_f);
        write_values(&mut out, "x0", &inst.x0);
        write_values(&mut out, "f0", &inst.f0);
    }
    write_values(&mut out, "b", &inst.b);
    out
}

fn write_indices(out: &mut String, name: &str, idx: &[usize]) {
    let _ = writeln!(out, "[{name}] {}", idx.len());
    for i in idx {
        let _ = writeln!(out, "{i}");
    }
}

fn write_values(out: &mut String, name: &str, v: &[Complex64]) {
    let _ = writeln!(out, "[{name}] {}", v.len());
    for z in v {
        let _ = writeln!(out, "{:?},{:?}", z.re, z.im);
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_header(line: &str, magic: &str) -> Result<HashMap<String, String>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(magic) {
        return Err(parse_err(1, format!("expected header starting with `{magic}`")));
    }
    parts
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_owned(), v.to_owned()))
                .ok_or_else(|| parse_err(1, format!("malformed header field `{kv}`")))
        })
        .collect()
}

fn field<T: std::str::FromStr>(h: &HashMap<String, String>, key: &str) -> Result<T> {
    let raw = h
        .get(key)
        .ok_or_else(|| parse_err(1, format!("missing header field `{key}`")))?;
    raw.parse()
        .map_err(|_| parse_err(1, format!("bad value `{raw}` for `{key}`")))
}

/// Section name to its `(first line number, raw lines)`.
type Sections<'a> = HashMap<String, (usize, Vec<&'a str>)>;

fn split_sections<'a>(lines: &[&'a str]) -> Result<Sections<'a>> {
    let mut sections = HashMap::new();
    let mut i = 0;
    while i < lines.len() {
        let lineno = i + 2;
        let line = lines[i].trim();
        if line.is_empty() {
            i += 1;
            continue;
        }
        let rest = line
            .strip_prefix('[')
            .ok_or_else(|| parse_err(lineno, format!("expected a section header, got `{line}`")))?;
        let (name, count) = rest
            .split_once(']')
            .ok_or_else(|| parse_err(lineno, "unterminated section name"))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad entry count in `{line}`")))?;
        if i + 1 + count > lines.len() {
            return Err(parse_err(lineno, format!("section `{name}` is truncated")));
        }
        let body = lines[i + 1..i + 1 + count].to_vec();
        if sections.insert(name.to_owned(), (lineno + 1, body)).is_some() {
            return Err(parse_err(lineno, format!("duplicate section `{name}`")));
        }
        i += 1 + count;
    }
    Ok(sections)
}

fn indices(sections: &Sections, name: &str) -> Result<Option<Vec<usize>>> {
    let Some((first, body)) = sections.get(name) else {
        return Ok(None);
    };
    body.iter()
        .enumerate()
        .map(|(k, l)| {
            l.trim()
                .parse()
                .map_err(|_| parse_err(first + k, format!("bad index `{l}`")))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn values(sections: &Sections, name: &str) -> Result<Option<Vec<Complex64>>> {
    let Some((first, body)) = sections.get(name) else {
        return Ok(None);
    };
    body.iter()
        .enumerate()
        .map(|(k, l)| {
            let bad = || parse_err(first + k, format!("bad complex value `{l}`"));
            let (re, im) = l.trim().split_once(',').ok_or_else(bad)?;
            let re: f64 = re.trim().parse().map_err(|_| bad())?;
            let im: f64 = im.trim().parse().map_err(|_| bad())?;
            Ok(Complex64::new(re, im))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

pub fn read_instance(text: &str) -> Result<InstanceFile> {
    let lines: Vec<&str> = text.lines().collect();
    let header = parse_header(lines.first().ok_or_else(|| parse_err(1, "empty file"))?, INSTANCE_MAGIC)?;
    let n: usize = field(&header, "n")?;
    let m: usize = field(&header, "m")?;
    let lambda: f64 = field(&header, "lambda")?;
    let conjugated: bool = field(&header, "conjugated")?;
    let seed = match header.get("seed").map(String::as_str) {
        None | Some("none") => None,
        Some(_) => Some(field::<u64>(&header, "seed")?),
    };
    let sections = split_sections(&lines[1..])?;
    let rows = indices(&sections, "rows")?.ok_or_else(|| parse_err(1, "missing section `rows`"))?;
    if rows.len() != m {
        return Err(parse_err(
            1,
            format!("header says m = {m} but {} rows are listed", rows.len()),
        ));
    }
    let operator = PartialFourierOperator::new(n, rows, conjugated)?;
    let b = values(&sections, "b")?.ok_or_else(|| parse_err(1, "missing section `b`"))?;
    let truth = match (values(&sections, "x0")?, values(&sections, "f0")?) {
        (Some(x0), Some(f0)) => {
            let inst = ProblemInstance::with_measurements(operator.clone(), lambda, x0, f0, b.clone(), seed)?;
            for (name, got) in [("s_x", &inst.s_x), ("s_f", &inst.s_f)] {
                if let Some(listed) = indices(&sections, name)? {
                    if &listed != got {
                        return Err(parse_err(
                            1,
                            format!("section `{name}` disagrees with the listed values"),
                        ));
                    }
                }
            }
            Some(inst)
        }
        (None, None) => None,
        _ => return Err(parse_err(1, "`x0` and `f0` must appear together")),
    };
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: b.len(),
        });
    }
    Ok(InstanceFile {
        operator,
        lambda,
        b,
        seed,
        truth,
    })
}

/// A solution as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub lambda: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub x_hat: Vec<Complex64>,
    pub f_hat: Vec<Complex64>,
}

pub fn write_solution(sol: &Solution, lambda: f64) -> String {
    let mut out = String::new();
    let status = match sol.status {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIterReached => "max_iter_reached",
    };
    let _ = writeln!(
        out,
        "{SOLUTION_MAGIC} n={} m={} lambda={lambda:?} status={status} iterations={} primal_residual={:?} dual_residual={:?} objective={:?} polished={}",
        sol.x_hat.len(),
        sol.f_hat.len(),
        sol.iterations,
        sol.primal_residual,
        sol.dual_residual,
        sol.objective,
        sol.polished
    );
    write_values(&mut out, "x_hat", &sol.x_hat);
    write_values(&mut out, "f_hat", &sol.f_hat);
    out
}

pub fn read_solution(text: &str) -> Result<SolutionFile> {
    let lines: Vec<&str> = text.lines().collect();
    let header = parse_header(lines.first().ok_or_else(|| parse_err(1, "empty file"))?, SOLUTION_MAGIC)?;
    let n: usize = field(&header, "n")?;
    let m: usize = field(&header, "m")?;
    let status = match header.get("status").map(String::as_str) {
        Some("converged") => SolveStatus::Converged,
        Some("max_iter_reached") => SolveStatus::MaxIterReached,
        other => return Err(parse_err(1, format!("bad status {other:?}"))),
    };
    let sections = split_sections(&lines[1..])?;
    let x_hat = values(&sections, "x_hat")?.ok_or_else(|| parse_err(1, "missing section `x_hat`"))?;
    let f_hat = values(&sections, "f_hat")?.ok_or_else(|| parse_err(1, "missing section `f_hat`"))?;
    if x_hat.len() != n || f_hat.len() != m {
        return Err(parse_err(1, "vector lengths disagree with the header"));
    }
    Ok(SolutionFile {
        lambda: field(&header, "lambda")?,
        status,
        iterations: field(&header, "iterations")?,
        x_hat,
        f_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{generate_synthetic, SyntheticConfig};
    use crate::solver::{solve, SolverConfig};

    #[test]
    fn instance_round_trip_is_exact() {
        let inst = generate_synthetic(&SyntheticConfig::new(31, 0.8, 0.1, 9)).unwrap();
        let text = write_instance(&inst, true);
        let back = read_instance(&text).unwrap();
        let t = back.truth.unwrap();
        assert_eq!(t.x0, inst.x0);
        assert_eq!(t.f0, inst.f0);
        assert_eq!(t.b, inst.b);
        assert_eq!(back.operator.rows(), inst.operator.rows());
        assert_eq!(back.seed, Some(9));
        assert_eq!(write_instance(&t, true), text);
    }

    #[test]
    fn measurement_only_file() {
        let inst = generate_synthetic(&SyntheticConfig::new(31, 0.8, 0.1, 2)).unwrap();
        let back = read_instance(&write_instance(&inst, false)).unwrap();
        assert!(back.truth.is_none());
        assert_eq!(back.b, inst.b);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let inst = generate_synthetic(&SyntheticConfig::new(31, 0.8, 0.1, 2)).unwrap();
        let text = write_instance(&inst, true);
        assert!(read_instance("").is_err());
        assert!(read_instance(&text.replacen("corrupt-recover-instance", "other", 1)).is_err());
        assert!(read_instance(&text.replacen("[b] 25", "[b] 99", 1)).is_err());
        let bad_value = text.replacen("[x0] 31\n", "[x0] 31\nzz,1\n", 1);
        assert!(matches!(read_instance(&bad_value), Err(Error::Parse { .. })));
    }

    #[test]
    fn solution_round_trip() {
        let inst = generate_synthetic(&SyntheticConfig::new(31, 0.9, 0.05, 4)).unwrap();
        let sol = solve(&inst.operator, &inst.b, &SolverConfig::default()).unwrap();
        let back = read_solution(&write_solution(&sol, 1.0)).unwrap();
        assert_eq!(back.x_hat, sol.x_hat);
        assert_eq!(back.f_hat, sol.f_hat);
        assert_eq!(back.status, sol.status);
        assert_eq!(back.iterations, sol.iterations);
    }
}
