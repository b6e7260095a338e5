//! RPD tables from a result log.
//!
//! The best-known cost of an instance is the minimum feasible TWCT over the
//! whole log. A solver is one `(variant, eta, config)` combination.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use batchsched_core::{rpd, Variant};

use crate::args::{Grouping, ReportArgs};
use crate::bench::{read_log, ResultRecord};
use crate::commands::write_file;
use crate::{CliError, CliResult};

/// Numeric fields of a name such as `m5_o50_q3_f3_r1`.
pub fn name_fields(name: &str) -> BTreeMap<char, u64> {
    let mut out = BTreeMap::new();
    for tok in name.split('_') {
        let mut chars = tok.chars();
        if let Some(c) = chars.next().filter(char::is_ascii_alphabetic) {
            if let Ok(v) = chars.as_str().parse() {
                out.entry(c).or_insert(v);
            }
        }
    }
    out
}

/// Group key of an instance, ordered numerically.
pub fn group_key(name: &str, grouping: Grouping) -> CliResult<GroupKey> {
    let fields = name_fields(name);
    let wanted: &[char] = match grouping {
        Grouping::OM => &['o', 'm'],
        Grouping::FO => &['f', 'o'],
        Grouping::QO => &['q', 'o'],
        Grouping::Overall => &[],
    };
    wanted
        .iter()
        .map(|c| {
            fields
                .get(c)
                .map(|v| (*c, *v))
                .ok_or_else(|| CliError::Domain(format!("instance name {name:?} has no {c} field")))
        })
        .collect()
}

fn group_label(key: &[(char, u64)]) -> String {
    if key.is_empty() {
        return "all".into();
    }
    key.iter().map(|(c, v)| format!("{c}={v}")).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub group: String,
    pub variant: Variant,
    pub eta: usize,
    pub config: String,
    pub instances: usize,
    pub runs: usize,
    pub rpd_mean: f64,
    pub rpd_max: f64,
    /// Sample standard deviation; 0 for a single run.
    pub rpd_sd: f64,
    pub time_mean: f64,
    pub pct_inst: f64,
    pub pct_run: f64,
    pub pct_unique: f64,
}

type Solver = (Variant, usize, String);
type GroupKey = Vec<(char, u64)>;

pub fn summarize(records: &[ResultRecord], grouping: Grouping) -> CliResult<Vec<ReportRow>> {
    if records.is_empty() {
        return Err(CliError::Domain("empty result log".into()));
    }
    let mut recs: Vec<&ResultRecord> = records.iter().filter(|r| r.feasible).collect();
    recs.sort_by_key(|r| r.key());
    let mut best: BTreeMap<&str, i64> = BTreeMap::new();
    for r in &recs {
        let b = best.entry(&r.instance).or_insert(r.twct);
        *b = (*b).min(r.twct);
    }
    // Solvers reaching the best cost of each instance.
    let mut winners: BTreeMap<&str, BTreeSet<Solver>> = BTreeMap::new();
    for r in &recs {
        if r.twct == best[r.instance.as_str()] {
            winners.entry(&r.instance).or_default().insert((r.variant, r.eta, r.config.clone()));
        }
    }

    let mut cells: BTreeMap<(GroupKey, Solver), Vec<&ResultRecord>> = BTreeMap::new();
    for r in &recs {
        let key = group_key(&r.instance, grouping)?;
        cells.entry((key, (r.variant, r.eta, r.config.clone()))).or_default().push(r);
    }

    let mut rows = Vec::new();
    for ((key, solver), rs) in cells {
        let rpds: Vec<f64> = rs
            .iter()
            .map(|r| rpd(r.twct, best[r.instance.as_str()]))
            .collect::<Result<_, _>>()?;
        let n = rpds.len() as f64;
        let mean = rpds.iter().sum::<f64>() / n;
        let max = rpds.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sd = if rpds.len() > 1 {
            (rpds.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let instances: BTreeSet<&str> = rs.iter().map(|r| r.instance.as_str()).collect();
        let hits = rs.iter().filter(|r| r.twct == best[r.instance.as_str()]).count();
        let inst_hits = instances.iter().filter(|i| winners[*i].contains(&solver)).count();
        let unique = instances.iter().filter(|i| winners[*i].len() == 1 && winners[*i].contains(&solver)).count();
        let ni = instances.len() as f64;
        rows.push(ReportRow {
            group: group_label(&key),
            variant: solver.0,
            eta: solver.1,
            config: solver.2,
            instances: instances.len(),
            runs: rs.len(),
            rpd_mean: mean,
            rpd_max: max,
            rpd_sd: sd,
            time_mean: rs.iter().map(|r| r.time_s).sum::<f64>() / n,
            pct_inst: 100.0 * inst_hits as f64 / ni,
            pct_run: 100.0 * hits as f64 / n,
            pct_unique: 100.0 * unique as f64 / ni,
        });
    }
    Ok(rows)
}

pub fn render_csv(rows: &[ReportRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "group", "variant", "eta", "config", "instances", "runs", "rpd_mean", "rpd_max", "rpd_sd", "time_mean_s",
        "pct_inst", "pct_run", "pct_unique",
    ])?;
    for r in rows {
        w.write_record([
            r.group.clone(),
            r.variant.to_string(),
            r.eta.to_string(),
            r.config.clone(),
            r.instances.to_string(),
            r.runs.to_string(),
            format!("{:.4}", r.rpd_mean),
            format!("{:.4}", r.rpd_max),
            format!("{:.4}", r.rpd_sd),
            format!("{:.4}", r.time_mean),
            format!("{:.2}", r.pct_inst),
            format!("{:.2}", r.pct_run),
            format!("{:.2}", r.pct_unique),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Domain(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn cmd_report(args: &ReportArgs, out: &mut dyn Write) -> CliResult<()> {
    let records = read_log(&args.log)?;
    let table = render_csv(&summarize(&records, args.group)?)?;
    match &args.out {
        Some(p) => write_file(p, table.as_bytes())?,
        None => out.write_all(table.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields_from_names() {
        let f = name_fields("m10_o75_q5_f3_r2");
        assert_eq!(f.get(&'m'), Some(&10));
        assert_eq!(f.get(&'o'), Some(&75));
        assert_eq!(f.get(&'r'), Some(&2));
        assert_eq!(group_key("s_m4_o15_r1", Grouping::OM).unwrap(), vec![('o', 15), ('m', 4)]);
        assert!(group_key("s_m4_o15_r1", Grouping::QO).is_err());
        assert!(group_key("anything", Grouping::Overall).unwrap().is_empty());
    }

    #[test]
    fn empty_log_is_rejected() {
        assert!(summarize(&[], Grouping::Overall).is_err());
    }
}
