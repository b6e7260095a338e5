//! Line-oriented text formats for instances and solutions.
//!
//! Instance files:
//!
//! ```text
//! BATCHSCHED-INSTANCE v1
//! # free comment
//! counts <o> <n> <m> <f>
//! machine <k> <release> <capacity>        one per machine, k = 0..m
//! family <g> <setup>                      one per family, g = 0..f
//! job <j> <weight>                        one per job, j = 0..n
//! op <i> <p> <r> <size> <family> <machines> <jobs>
//! end
//! ```
//!
//! `<machines>` and `<jobs>` are comma-separated id lists without spaces.
//!
//! Solution files:
//!
//! ```text
//! BATCHSCHED-SOLUTION v1
//! machines <m>
//! machine 0
//! <family>: <op>,<op>,...                 one line per batch, in order
//! machine 1
//! end
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Ids are zero-based.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Batch, Instance, Machine, Operation, Solution};

pub const INSTANCE_HEADER: &str = "BATCHSCHED-INSTANCE v1";
pub const SOLUTION_HEADER: &str = "BATCHSCHED-SOLUTION v1";

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn join(ids: &[usize]) -> String {
    let mut s = String::new();
    for (t, id) in ids.iter().enumerate() {
        if t > 0 {
            s.push(',');
        }
        write!(s, "{id}").unwrap();
    }
    s
}

/// Meaningful lines with their 1-based numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn num<T: std::str::FromStr>(line: usize, tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| perr(line, format!("invalid {what} {tok:?}")))
}

fn id_list(line: usize, tok: Option<&str>, what: &str) -> Result<Vec<usize>> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.split(',').map(|t| num(line, Some(t), what)).collect()
}

fn expect_header(text: &str, header: &str) -> Result<()> {
    match lines(text).next() {
        Some((_, h)) if h == header => Ok(()),
        Some((n, h)) => Err(perr(n, format!("expected header {header:?}, found {h:?}"))),
        None => Err(perr(0, "empty file")),
    }
}

pub fn instance_to_string(inst: &Instance, comment: Option<&str>) -> String {
    let mut s = String::new();
    writeln!(s, "{INSTANCE_HEADER}").unwrap();
    if let Some(c) = comment {
        for l in c.lines() {
            writeln!(s, "# {l}").unwrap();
        }
    }
    writeln!(
        s,
        "counts {} {} {} {}",
        inst.num_operations(),
        inst.num_jobs(),
        inst.num_machines(),
        inst.num_families()
    )
    .unwrap();
    for (k, mk) in inst.machines().iter().enumerate() {
        writeln!(s, "machine {k} {} {}", mk.release, mk.capacity).unwrap();
    }
    for (g, st) in inst.setups().iter().enumerate() {
        writeln!(s, "family {g} {st}").unwrap();
    }
    for (j, w) in inst.weights().iter().enumerate() {
        writeln!(s, "job {j} {w}").unwrap();
    }
    for (i, op) in inst.operations().iter().enumerate() {
        writeln!(
            s,
            "op {i} {} {} {} {} {} {}",
            op.proc_time,
            op.release,
            op.size,
            op.family,
            join(&op.eligible),
            join(&op.jobs)
        )
        .unwrap();
    }
    s.push_str("end\n");
    s
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    expect_header(text, INSTANCE_HEADER)?;
    let mut it = lines(text).skip(1);
    let (ln, counts) = it.next().ok_or_else(|| perr(0, "missing counts line"))?;
    let mut tok = counts.split_whitespace();
    if tok.next() != Some("counts") {
        return Err(perr(ln, "expected `counts o n m f`"));
    }
    let o: usize = num(ln, tok.next(), "operation count")?;
    let n: usize = num(ln, tok.next(), "job count")?;
    let m: usize = num(ln, tok.next(), "machine count")?;
    let f: usize = num(ln, tok.next(), "family count")?;
    if tok.next().is_some() {
        return Err(perr(ln, "trailing tokens"));
    }

    let mut machines = Vec::with_capacity(m);
    let mut setups = Vec::with_capacity(f);
    let mut weights = Vec::with_capacity(n);
    let mut ops = Vec::with_capacity(o);
    let mut ended = false;
    let mut last = ln;
    for (ln, line) in it.by_ref() {
        last = ln;
        let mut tok = line.split_whitespace();
        let kind = tok.next().unwrap_or("");
        if kind == "end" {
            ended = true;
            break;
        }
        let idx: usize = num(ln, tok.next(), "index")?;
        let expect_idx = |have: usize| {
            if idx == have {
                Ok(())
            } else {
                Err(perr(ln, format!("expected {kind} {have}, found {kind} {idx}")))
            }
        };
        match kind {
            "machine" => {
                expect_idx(machines.len())?;
                let release = num(ln, tok.next(), "release")?;
                let capacity = num(ln, tok.next(), "capacity")?;
                machines.push(Machine { release, capacity });
            }
            "family" => {
                expect_idx(setups.len())?;
                setups.push(num(ln, tok.next(), "setup")?);
            }
            "job" => {
                expect_idx(weights.len())?;
                weights.push(num(ln, tok.next(), "weight")?);
            }
            "op" => {
                expect_idx(ops.len())?;
                let proc_time = num(ln, tok.next(), "processing time")?;
                let release = num(ln, tok.next(), "release")?;
                let size = num(ln, tok.next(), "size")?;
                let family = num(ln, tok.next(), "family")?;
                let eligible = id_list(ln, tok.next(), "machine id")?;
                let jobs = id_list(ln, tok.next(), "job id")?;
                if family >= f {
                    return Err(perr(ln, format!("unknown family {family}")));
                }
                if let Some(&k) = eligible.iter().find(|&&k| k >= m) {
                    return Err(perr(ln, format!("unknown machine {k}")));
                }
                if let Some(&j) = jobs.iter().find(|&&j| j >= n) {
                    return Err(perr(ln, format!("unknown job {j}")));
                }
                ops.push(Operation { proc_time, release, size, family, eligible, jobs });
            }
            other => return Err(perr(ln, format!("unknown record {other:?}"))),
        }
        if tok.next().is_some() {
            return Err(perr(ln, "trailing tokens"));
        }
    }
    if !ended {
        return Err(perr(last, "file truncated: missing `end`"));
    }
    if let Some((ln, _)) = it.next() {
        return Err(perr(ln, "content after `end`"));
    }
    if machines.len() != m || setups.len() != f || weights.len() != n || ops.len() != o {
        return Err(perr(last, "record counts do not match the counts line"));
    }
    Ok(Instance::new(machines, setups, weights, ops))
}

pub fn solution_to_string(sol: &Solution) -> String {
    let mut s = String::new();
    writeln!(s, "{SOLUTION_HEADER}").unwrap();
    writeln!(s, "machines {}", sol.machines.len()).unwrap();
    for (k, batches) in sol.machines.iter().enumerate() {
        writeln!(s, "machine {k}").unwrap();
        for b in batches {
            writeln!(s, "{}: {}", b.family, join(&b.ops)).unwrap();
        }
    }
    s.push_str("end\n");
    s
}

/// Parses a solution and checks it against `inst`: known operations,
/// eligibility, batch families, no repeats and no empty batches.
pub fn parse_solution(text: &str, inst: &Instance) -> Result<Solution> {
    expect_header(text, SOLUTION_HEADER)?;
    let mut it = lines(text).skip(1);
    let (ln, head) = it.next().ok_or_else(|| perr(0, "missing machines line"))?;
    let mut tok = head.split_whitespace();
    if tok.next() != Some("machines") {
        return Err(perr(ln, "expected `machines m`"));
    }
    let m: usize = num(ln, tok.next(), "machine count")?;
    if m != inst.num_machines() {
        return Err(perr(ln, format!("solution has {m} machines, instance has {}", inst.num_machines())));
    }
    let mut sol = Solution::empty(m);
    let mut seen = vec![false; inst.num_operations()];
    let mut current: Option<usize> = None;
    let mut ended = false;
    let mut last = ln;
    for (ln, line) in it.by_ref() {
        last = ln;
        if line == "end" {
            ended = true;
            break;
        }
        if let Some(rest) = line.strip_prefix("machine ") {
            let k: usize = num(ln, Some(rest.trim()), "machine id")?;
            let want = current.map_or(0, |c| c + 1);
            if k != want {
                return Err(perr(ln, format!("expected machine {want}, found {k}")));
            }
            current = Some(k);
            continue;
        }
        let k = current.ok_or_else(|| perr(ln, "batch before any machine line"))?;
        let (fam, list) = line.split_once(':').ok_or_else(|| perr(ln, "expected `family: op,op,...`"))?;
        let family: usize = num(ln, Some(fam.trim()), "family")?;
        if family >= inst.num_families() {
            return Err(perr(ln, format!("unknown family {family}")));
        }
        let list = list.trim();
        if list.is_empty() {
            return Err(perr(ln, "empty batch"));
        }
        let ops = id_list(ln, Some(list), "operation id")?;
        for &i in &ops {
            if i >= inst.num_operations() {
                return Err(perr(ln, format!("unknown operation {i}")));
            }
            if !inst.is_eligible(i, k) {
                return Err(perr(ln, format!("operation {i} is not eligible on machine {k}")));
            }
            if inst.op(i).family != family {
                return Err(perr(ln, format!("operation {i} does not belong to family {family}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(perr(ln, format!("operation {i} appears twice")));
            }
        }
        sol.machines[k].push(Batch::new(family, ops));
    }
    if !ended {
        return Err(perr(last, "file truncated: missing `end`"));
    }
    if let Some((ln, _)) = it.next() {
        return Err(perr(ln, "content after `end`"));
    }
    if m > 0 && current != Some(m - 1) {
        return Err(perr(last, "missing machine sections"));
    }
    Ok(sol)
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

pub fn write_instance(inst: &Instance, path: impl AsRef<Path>, comment: Option<&str>) -> Result<()> {
    std::fs::write(path, instance_to_string(inst, comment))?;
    Ok(())
}

pub fn read_solution(path: impl AsRef<Path>, inst: &Instance) -> Result<Solution> {
    parse_solution(&std::fs::read_to_string(path)?, inst)
}

pub fn write_solution(sol: &Solution, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, solution_to_string(sol))?;
    Ok(())
}
